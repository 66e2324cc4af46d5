"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The
functions here are pure: they never modify their arguments.
"""

import numpy as np

from .errors import DimensionError, NotHermitianError, NotPSDError

DEFAULT_TOL = 1e-9

# Above this size eig_hermitian hands over to LAPACK.
JACOBI_MAX_SIZE = 64


def as_matrix(a):
    """Return ``a`` as a 2-D complex128 array (copying only if needed)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    return m


def matrix_unit(n, i, j, m=None):
    """The matrix unit E_{i,j} in M_{n,m} (zero-based indices)."""
    e = np.zeros((n, n if m is None else m), dtype=np.complex128)
    e[i, j] = 1.0
    return e


def adjoint(m):
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_defect(h):
    """Largest entry of |H - H*|."""
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(np.max(np.abs(h - adjoint(h))))


def _check_square(h):
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    return h


def _check_hermitian(h, tol):
    h = _check_square(h)
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    defect = hermitian_defect(h)
    if defect > max(tol, 1e-12) * scale:
        raise NotHermitianError(f"matrix is not Hermitian (|H - H*| = {defect:.3e})")
    return 0.5 * (h + adjoint(h))


def _round_robin(n):
    """Pairings for a parallel-ordered Jacobi sweep.

    Returns a list of ``(P, Q)`` index arrays; each index appears at most
    once per round and every pair i < j appears in exactly one round.
    """
    order = list(range(n)) + ([-1] if n % 2 else [])
    size = len(order)
    rounds = []
    for _ in range(size - 1):
        p = np.array(order[: size // 2])
        q = np.array(order[size - 1 : size // 2 - 1 : -1])
        keep = (p >= 0) & (q >= 0)
        rounds.append((p[keep], q[keep]))
        order = [order[0], order[-1]] + order[1:-1]
    return rounds


def jacobi_eigh(h, max_sweeps=60):
    """Cyclic Jacobi eigensolver for a Hermitian matrix.

    Rotations are applied in round-robin order so that each round is a
    set of disjoint 2x2 unitary rotations, applied together.  Returns
    ``(eigenvalues, V)`` with eigenvalues in descending order.
    """
    a = np.array(h, dtype=np.complex128)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    if n <= 1:
        return np.real(np.diag(a)).copy(), v
    rounds = _round_robin(n)
    norm = np.linalg.norm(a)
    target = 1e-15 * max(norm, np.finfo(float).tiny)
    prev_off = np.inf
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= target or off >= prev_off:
            break
        prev_off = off
        for p, q in rounds:
            b = a[p, q]
            mag = np.abs(b)
            active = mag > 1e-300
            if not np.any(active):
                continue
            p, q, b, mag = p[active], q[active], b[active], mag[active]
            phase = b / mag
            theta = (np.real(a[q, q]) - np.real(a[p, p])) / (2.0 * mag)
            sign = np.where(theta >= 0.0, 1.0, -1.0)
            t = sign / (np.abs(theta) + np.hypot(theta, 1.0))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            ph_c = np.conj(phase)
            # A <- A U
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c - cq * (s * ph_c)
            a[:, q] = cp * s + cq * (c * ph_c)
            # A <- U* A
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - (s * phase)[:, None] * rq
            a[q, :] = s[:, None] * rp + (c * phase)[:, None] * rq
            a[p, q] = 0.0
            a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * (s * ph_c)
            v[:, q] = vp * s + vq * (c * ph_c)
    w = np.real(np.diag(a))
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def eig_hermitian(h, tol=DEFAULT_TOL, method="auto"):
    """Eigendecomposition H = V diag(w) V* of a Hermitian matrix.

    Eigenvalues come back in descending order.  ``method`` is
    ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_SIZE``, LAPACK above).
    """
    h = _check_hermitian(h, tol)
    if method == "auto":
        method = "jacobi" if h.shape[0] <= JACOBI_MAX_SIZE else "lapack"
    if method == "jacobi":
        return jacobi_eigh(h)
    if method == "lapack":
        w, v = np.linalg.eigh(h)
        return w[::-1].copy(), v[:, ::-1].copy()
    raise ValueError(f"unknown method {method!r}")


def eigvalsh(h, tol=DEFAULT_TOL):
    """Eigenvalues only, descending."""
    return eig_hermitian(h, tol)[0]


def min_eigenvalue(h, tol=DEFAULT_TOL):
    h = _check_square(h)
    if h.shape[0] == 0:
        return 0.0
    return float(eigvalsh(h, tol)[-1])


def is_psd(h, tol=DEFAULT_TOL):
    """True iff the Hermitian matrix ``h`` has min eigenvalue >= -tol."""
    h = _check_hermitian(h, tol)
    if h.shape[0] == 0:
        return True
    return min_eigenvalue(h, tol) >= -tol


def jordan_split(h, tol=DEFAULT_TOL):
    """Split a Hermitian H into PSD parts with H = H_plus - H_minus.

    The two parts have orthogonal supports, so H_plus @ H_minus = 0.
    """
    w, v = eig_hermitian(h, tol)
    pos = (v * np.maximum(w, 0.0)) @ adjoint(v)
    neg = (v * np.maximum(-w, 0.0)) @ adjoint(v)
    return pos, neg


def psd_sqrt(h, tol=DEFAULT_TOL):
    """Principal square root of a PSD matrix (negative noise clipped)."""
    w, v = eig_hermitian(h, tol)
    return (v * np.sqrt(np.maximum(w, 0.0))) @ adjoint(v)


def psd_factor(h, tol=DEFAULT_TOL):
    """Factor a PSD matrix as H = F* F with F of full row rank.

    Eigenvalues at or below ``tol * max(1, lambda_max)`` count as zero;
    anything below ``-tol * max(1, lambda_max)`` is rejected.  Each row
    of F is normalised so that its largest entry is real and positive,
    which makes the factor reproducible.
    """
    w, v = eig_hermitian(h, tol)
    n = len(w)
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    scale = max(1.0, float(w[0]))
    if w[-1] < -tol * scale:
        raise NotPSDError(
            f"matrix is not PSD (min eigenvalue {w[-1]:.3e})", eigenvalue=float(w[-1])
        )
    keep = w > tol * scale
    f = np.sqrt(w[keep])[:, None] * adjoint(v[:, keep])
    for row in f:
        k = np.argmax(np.abs(row))
        row *= np.conj(row[k]) / np.abs(row[k])
    return f


def canonical_shuffle(m, outer, inner, cell):
    """Swap the two outer block indexings of a square matrix.

    ``m`` is read as an element of M_outer(M_inner(M_cell)); the result
    is the same operator viewed in M_inner(M_outer(M_cell)), i.e. P* M P
    for the permutation P exchanging the outer and inner indices.
    Applying it again with ``(inner, outer, cell)`` undoes it.
    """
    m = _check_square(m)
    size = outer * inner * cell
    if m.shape[0] != size:
        raise DimensionError(
            f"matrix of size {m.shape[0]} does not split as {outer}x{inner}x{cell}"
        )
    t = m.reshape(outer, inner, cell, outer, inner, cell)
    return t.transpose(1, 0, 2, 4, 3, 5).reshape(size, size)


def schur_product(a, b):
    """Entrywise (Schur) product of two matrices of equal shape."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def op_norm(a):
    """Operator (spectral) norm."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def to_json(m):
    """ComplexMatrix JSON object: rows, cols and row-major [re, im] pairs."""
    m = as_matrix(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def from_json(obj):
    rows, cols = int(obj["rows"]), int(obj["cols"])
    data = obj["data"]
    if len(data) != rows * cols:
        raise DimensionError(f"expected {rows * cols} entries, got {len(data)}")
    flat = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return flat.reshape(rows, cols)
