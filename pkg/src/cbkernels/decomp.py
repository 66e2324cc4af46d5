"""Kolmogorov decompositions of kernels.

A decomposition is held concretely: the module is the space of d x q
matrices with d = p * m, M_p acts on the left through a -> a (x) I_m,
the M_q-valued inner product is <u, v> = v* u, J is a d x d matrix and
iota assigns a d x q matrix to every label.  It represents the kernel

    k(x_i, x_j)[a] = (J iota_i)* (a (x) I_m) iota_j .

Row index of a d x q matrix is (u, s) -> u * m + s.
"""

import time
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from . import algebra
from .algebra import DEFAULT_TOL, adjoint, op_norm
from .errors import (
    DeadlineExceeded,
    DimensionError,
    InternalConsistencyError,
    NotHermitianError,
    NotPSDError,
    PreconditionError,
)
from .kernel import Kernel, assemble_2x2, involution, is_cp_2x2, is_cp_kernel, re_im


@dataclass(frozen=True, eq=False)
class KolDecomp:
    labels: Tuple[str, ...]
    p: int
    q: int
    m: int
    J: np.ndarray
    iota: np.ndarray  # (n, d, q)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        d = self.p * self.m
        j = np.array(self.J, dtype=np.complex128)
        iota = np.array(self.iota, dtype=np.complex128)
        if j.shape != (d, d):
            raise DimensionError(f"J has shape {j.shape}, expected {(d, d)}")
        if iota.shape != (len(labels), d, self.q):
            raise DimensionError(f"iota has shape {iota.shape}, expected {(len(labels), d, self.q)}")
        j.setflags(write=False)
        iota.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "J", j)
        object.__setattr__(self, "iota", iota)

    @property
    def d(self):
        return self.p * self.m

    @property
    def n(self):
        return len(self.labels)

    def iota_of(self, label):
        return self.iota[self.labels.index(str(label))]

    def __repr__(self):
        return f"KolDecomp(labels={list(self.labels)}, p={self.p}, q={self.q}, m={self.m})"


def _check_deadline(deadline):
    if deadline is not None and time.monotonic() > deadline:
        raise DeadlineExceeded("decomposition passed its deadline")


def reconstruct(dec):
    """The kernel represented by a decomposition."""
    n, p, q, m = dec.n, dec.p, dec.q, dec.m
    g = (dec.J @ dec.iota).reshape(n, p, m, q)
    i4 = dec.iota.reshape(n, p, m, q)
    c = np.einsum("iusw,jvsx->ijuwvx", np.conj(g), i4)
    return Kernel(dec.labels, p, q, c.reshape(n, n, p * q, p * q))


def module_residual(j, p, m):
    """max over matrix units E_uv of |J (E_uv (x) I_m) - (E_uv (x) I_m) J|."""
    if p * m == 0:
        return 0.0
    worst = 0.0
    eye = np.eye(m)
    for u in range(p):
        for v in range(p):
            a = np.kron(algebra.matrix_unit(p, u, v), eye)
            worst = max(worst, float(np.max(np.abs(j @ a - a @ j))))
    return worst


def direct_sum(d1, d2, scale2=1.0):
    """Direct sum of two decompositions, with J = J1 (+) scale2 * J2."""
    if d1.labels != d2.labels or (d1.p, d1.q) != (d2.p, d2.q):
        raise DimensionError("decompositions live on different labels or block sizes")
    n, p, q, m1, m2 = d1.n, d1.p, d1.q, d1.m, d2.m
    m = m1 + m2
    iota = np.concatenate(
        [d1.iota.reshape(n, p, m1, q), d2.iota.reshape(n, p, m2, q)], axis=2
    ).reshape(n, p * m, q)
    j = np.zeros((p, m, p, m), dtype=np.complex128)
    j[:, :m1, :, :m1] = d1.J.reshape(p, m1, p, m1)
    j[:, m1:, :, m1:] = scale2 * d2.J.reshape(p, m2, p, m2)
    return KolDecomp(d1.labels, p, q, m, j.reshape(p * m, p * m), iota)


def kolmogorov_positive(k, tol=DEFAULT_TOL):
    """Decomposition with J = I of a completely positive kernel.

    Factor the compressed Choi matrix as F* F (m = numerical rank); the
    rows of F are the Kraus operators of the Schur product operator and
    iota_i[(u, s), w] = F[s, (i, u, w)].
    """
    n, p, q = k.n, k.p, k.q
    try:
        f = algebra.psd_factor(k.compressed(), tol) if n else np.zeros((0, 0))
    except NotPSDError as exc:
        raise PreconditionError(
            f"kernel is not completely positive (Choi eigenvalue {exc.eigenvalue:.3e})"
        ) from exc
    except NotHermitianError as exc:
        raise PreconditionError(f"kernel is not completely positive ({exc})") from exc
    m = f.shape[0]
    iota = f.reshape(m, n, p, q).transpose(1, 2, 0, 3).reshape(n, p * m, q)
    return KolDecomp(k.labels, p, q, m, np.eye(p * m), iota)


def difference_kolmogorov(k1, k2, tol=DEFAULT_TOL):
    """Decomposition of k1 - k2 with J = I (+) -I for CP kernels k1, k2."""
    k1._check_same(k2)
    return direct_sum(kolmogorov_positive(k1, tol), kolmogorov_positive(k2, tol), -1.0)


def _positive_part_kernel(dec, jpart):
    n, p, q, m = dec.n, dec.p, dec.q, dec.m
    root = algebra.psd_sqrt(jpart)
    sub = KolDecomp(dec.labels, p, q, m, np.eye(p * m), root @ dec.iota)
    return reconstruct(sub), root


def decomp_to_difference(dec, tol=DEFAULT_TOL):
    """CP kernels (k1, k2) with k1 - k2 = reconstruct(dec), from J = J+ - J-."""
    if dec.d == 0:
        z = Kernel.zero(dec.labels, dec.p, dec.q)
        return z, z
    scale = max(1.0, op_norm(dec.J))
    if algebra.hermitian_defect(dec.J) > tol * scale:
        raise PreconditionError("J is not self-adjoint")
    jp, jm = algebra.jordan_split(0.5 * (dec.J + adjoint(dec.J)), tol)
    k1, r1 = _positive_part_kernel(dec, jp)
    k2, r2 = _positive_part_kernel(dec, jm)
    base = module_residual(dec.J, dec.p, dec.m)
    if base <= tol * scale:
        worst = max(module_residual(x, dec.p, dec.m) for x in (jp, jm, r1, r2))
        if worst > 1e3 * max(tol, 1e-12) * scale:
            raise InternalConsistencyError(
                f"parts of a module map J fail to commute with the action (residual {worst:.2e})"
            )
    return k1, k2


@dataclass(frozen=True)
class OffDiagonal:
    L1: Kernel
    L2: Kernel
    t: float
    lower: float


def offdiagonal_complete(k, eps=1e-7, max_iter=200, deadline=None, full=False):
    """CP kernels L1, L2 making [[L1, k], [k*, L2]] CP, with the least t.

    t bounds the Schur product operators of L1 and L2 at the identity,
    and its optimal value is the cb norm of the Schur operator of k.
    Returns ``(L1, L2, t)``, or an :class:`OffDiagonal` record when
    ``full`` is set.
    """
    from .sdp import solve_completion

    _check_deadline(deadline)
    if k.n == 0 or not np.any(k.choi):
        z = Kernel.zero(k.labels, k.p, k.q)
        res = OffDiagonal(z, z, 0.0, 0.0)
    else:
        comp = solve_completion(k.compressed(), k.n, k.p, k.q, eps=eps, max_iter=max_iter, deadline=deadline)
        l1 = Kernel.from_compressed(k.labels, k.p, k.q, comp.x1)
        l2 = Kernel.from_compressed(k.labels, k.p, k.q, comp.x2)
        res = OffDiagonal(l1, l2, comp.t, comp.lower)
    if full:
        return res
    return res.L1, res.L2, res.t


def _hermitian_input(k, eps):
    ks = involution(k)
    if ks.distance(k) > max(eps, DEFAULT_TOL) * max(1.0, k.norm()):
        raise PreconditionError(
            f"kernel is not hermitian (|k - k*| = {ks.distance(k):.3e})"
        )
    return 0.5 * (k + ks)


def hermitian_split(k, eps=1e-7, max_iter=200, deadline=None):
    """CP kernels (k1, k2) with k = k1 - k2 for a hermitian cb kernel k.

    Uses L = (L1 + L2) / 2 from the off-diagonal completion; the pair
    k1 = (L + k) / 2, k2 = (L - k) / 2 is CP because [[L, k], [k, L]] is.
    """
    k = _hermitian_input(k, eps)
    if is_cp_kernel(k):
        return k, Kernel.zero(k.labels, k.p, k.q)
    if is_cp_kernel(-k):
        return Kernel.zero(k.labels, k.p, k.q), -k
    l1, l2, _ = offdiagonal_complete(k, eps=eps, max_iter=max_iter, deadline=deadline)
    big = 0.5 * (l1 + l2)
    big = 0.5 * (big + involution(big))
    if not is_cp_2x2(assemble_2x2(big, k, big), tol=max(eps, DEFAULT_TOL) * max(1.0, big.norm())):
        raise InternalConsistencyError("symmetrised completion is not completely positive")
    return 0.5 * (big + k), 0.5 * (big - k)


def _factor_tol(*kernels):
    return 1e-11 * max([1.0] + [x.norm() for x in kernels])


def kolmogorov_hermitian(k, eps=1e-7, max_iter=200, deadline=None):
    """Decomposition with J = J*, J^2 = I of a hermitian cb kernel."""
    k1, k2 = hermitian_split(k, eps, max_iter, deadline)
    _check_deadline(deadline)
    tol = _factor_tol(k1, k2)
    return difference_kolmogorov(k1, k2, tol)


def _is_zero(k, ref):
    return k.norm() <= 1e-12 * max(1.0, ref.norm())


def kolmogorov_general(k, eps=1e-7, max_iter=200, deadline=None):
    """Decomposition of an arbitrary kernel with contractive J.

    With k = K1 + i K2 (both hermitian) and hermitian decompositions
    (J1, iota1), (J2, iota2), the direct sum with J = J1 (+) -i J2
    represents k.
    """
    k_re, k_im = re_im(k)
    if _is_zero(k_im, k):
        return kolmogorov_hermitian(k_re, eps, max_iter, deadline)
    d2 = kolmogorov_hermitian(k_im, eps, max_iter, deadline)
    if _is_zero(k_re, k):
        return KolDecomp(d2.labels, d2.p, d2.q, d2.m, -1j * d2.J, d2.iota)
    d1 = kolmogorov_hermitian(k_re, eps, max_iter, deadline)
    return direct_sum(d1, d2, -1j)


def four_cp(k, eps=1e-7, max_iter=200, deadline=None):
    """CP kernels (c1, c2, c3, c4) with k = (c1 - c2) + i (c3 - c4)."""
    k_re, k_im = re_im(k)
    c1, c2 = hermitian_split(k_re, eps, max_iter, deadline)
    c3, c4 = hermitian_split(k_im, eps, max_iter, deadline)
    return c1, c2, c3, c4


def combine_four(c1, c2, c3, c4):
    return (c1 - c2) + 1j * (c3 - c4)


def verify_decomp(dec, k=None, tol=DEFAULT_TOL):
    """Check a decomposition and the structural facts tied to its J.

    Returns a dict with the booleans ``reconstructs`` (``None`` without a
    reference kernel), ``J_contractive``, ``J_module_map``,
    ``J_selfadjoint`` and ``J_psd``, plus the consistency fields
    ``psd_implies_cp`` and ``selfadjoint_iff_hermitian`` and the residuals
    behind them.  ``ok`` is the conjunction of the structural checks that
    every decomposition must pass.
    """
    rec = reconstruct(dec)
    jnorm = op_norm(dec.J)
    scale = max(1.0, jnorm)
    sa_defect = algebra.hermitian_defect(dec.J) if dec.d else 0.0
    selfadjoint = sa_defect <= tol * scale
    psd = selfadjoint and (dec.d == 0 or algebra.min_eigenvalue(0.5 * (dec.J + adjoint(dec.J))) >= -tol * scale)
    mod_res = module_residual(dec.J, dec.p, dec.m)
    iota_scale = max(1.0, float(np.max(np.abs(dec.iota))) ** 2) if dec.iota.size else 1.0
    rec_tol = tol * scale * iota_scale
    herm_res = involution(rec).distance(rec)
    hermitian = herm_res <= rec_tol
    report = {
        "reconstructs": None,
        "reconstruction_residual": None,
        "J_contractive": bool(jnorm <= 1.0 + tol),
        "J_norm": jnorm,
        "J_module_map": bool(mod_res <= tol * scale),
        "module_residual": mod_res,
        "J_selfadjoint": bool(selfadjoint),
        "J_psd": bool(psd),
        "hermitian": bool(hermitian),
        "psd_implies_cp": bool((not psd) or is_cp_kernel(rec, rec_tol)),
        "selfadjoint_iff_hermitian": bool(selfadjoint == hermitian),
    }
    if k is not None:
        resid = rec.distance(k)
        report["reconstruction_residual"] = resid
        report["reconstructs"] = bool(resid <= rec_tol)
    report["ok"] = bool(
        report["reconstructs"] is not False
        and report["J_contractive"]
        and report["J_module_map"]
        and report["psd_implies_cp"]
    )
    return report


def to_json(dec):
    return {
        "labels": list(dec.labels),
        "p": dec.p,
        "q": dec.q,
        "m": dec.m,
        "J": algebra.to_json(dec.J),
        "iota": {lab: algebra.to_json(dec.iota[i]) for i, lab in enumerate(dec.labels)},
    }


def from_json(obj):
    labels = tuple(obj["labels"])
    p, q, m = int(obj["p"]), int(obj["q"]), int(obj["m"])
    d = p * m
    iota = np.zeros((len(labels), d, q), dtype=np.complex128)
    for i, lab in enumerate(labels):
        mat = algebra.from_json(obj["iota"][lab]) if d * q else np.zeros((d, q))
        if mat.shape != (d, q):
            raise DimensionError(f"iota[{lab!r}] has shape {mat.shape}, expected {(d, q)}")
        iota[i] = mat
    j = algebra.from_json(obj["J"]) if d else np.zeros((0, 0))
    return KolDecomp(labels, p, q, m, j, iota)
