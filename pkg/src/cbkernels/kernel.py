"""Kernels on a finite labelled set with values in linear maps M_p -> M_q.

A kernel on labels x_1, ..., x_n is stored as an ``(n, n, pq, pq)`` array
whose ``[i, j]`` slice is the Choi matrix of k(x_i, x_j).  Most
predicates work on the *compressed Choi matrix*

    K[(i, u, w), (j, v, x)] = Choi(k(x_i, x_j))[(u, w), (v, x)],

an npq x npq matrix.  The Choi matrix of the Schur product operator
(a_ij) -> (k(x_i, x_j)[a_ij]) is K padded with zero rows and columns, so
the kernel is completely positive iff K is PSD, and hermitian iff K is.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from . import algebra
from .algebra import DEFAULT_TOL, adjoint
from .errors import DimensionError, InternalConsistencyError
from .linmap import LinMap

DEFINITION_SAMPLES = 32


@dataclass(frozen=True, eq=False)
class Kernel:
    labels: Tuple[str, ...]
    p: int
    q: int
    choi: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"kernel labels must be distinct: {labels}")
        n, pq = len(labels), self.p * self.q
        choi = np.array(self.choi, dtype=np.complex128)
        if choi.shape != (n, n, pq, pq):
            raise DimensionError(f"expected Choi array of shape {(n, n, pq, pq)}, got {choi.shape}")
        choi.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "choi", choi)

    # -- construction -------------------------------------------------

    @classmethod
    def from_maps(cls, labels, values):
        """Build from an n x n nested sequence of LinMap values."""
        labels = tuple(labels)
        n = len(labels)
        if len(values) != n or any(len(row) != n for row in values):
            raise DimensionError(f"expected {n}x{n} values")
        p, q = values[0][0].p, values[0][0].q
        for row in values:
            for v in row:
                if (v.p, v.q) != (p, q):
                    raise DimensionError("all kernel values must act M_p -> M_q for one (p, q)")
        choi = np.array([[v.choi for v in row] for row in values])
        return cls(labels, p, q, choi)

    @classmethod
    def from_compressed(cls, labels, p, q, big):
        labels = tuple(labels)
        n = len(labels)
        big = algebra.as_matrix(big)
        if big.shape != (n * p * q, n * p * q):
            raise DimensionError(f"compressed Choi must be {n * p * q} square, got {big.shape}")
        choi = big.reshape(n, p * q, n, p * q).transpose(0, 2, 1, 3)
        return cls(labels, p, q, choi)

    @classmethod
    def zero(cls, labels, p, q):
        n = len(labels)
        return cls(tuple(labels), p, q, np.zeros((n, n, p * q, p * q)))

    @classmethod
    def scalar(cls, matrix, labels=None):
        """The p = q = 1 kernel k(x_i, x_j)[a] = matrix[i, j] * a."""
        m = algebra.as_matrix(matrix)
        n = m.shape[0]
        if labels is None:
            labels = default_labels(n)
        return cls(tuple(labels), 1, 1, m.reshape(n, n, 1, 1))

    @classmethod
    def constant(cls, labels, phi):
        """k(x, y) = phi for every pair of points."""
        n = len(labels)
        choi = np.broadcast_to(phi.choi, (n, n) + phi.choi.shape)
        return cls(tuple(labels), phi.p, phi.q, choi)

    # -- access -------------------------------------------------------

    @property
    def n(self):
        return len(self.labels)

    def index(self, label):
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def value(self, i, j):
        """k(x_i, x_j) as a LinMap (integer indices)."""
        return LinMap(self.p, self.q, self.choi[i, j])

    def __getitem__(self, pair):
        x, y = pair
        return self.value(self.index(x), self.index(y))

    def compressed(self):
        n, pq = self.n, self.p * self.q
        return self.choi.transpose(0, 2, 1, 3).reshape(n * pq, n * pq)

    def scalar_matrix(self):
        if (self.p, self.q) != (1, 1):
            raise DimensionError("scalar_matrix needs p = q = 1")
        return self.choi[:, :, 0, 0].copy()

    # -- arithmetic ---------------------------------------------------

    def _check_same(self, other):
        if not isinstance(other, Kernel):
            raise TypeError(f"expected a Kernel, got {type(other).__name__}")
        if self.labels != other.labels or (self.p, self.q) != (other.p, other.q):
            raise DimensionError("kernels have different labels or block sizes")

    def __add__(self, other):
        self._check_same(other)
        return Kernel(self.labels, self.p, self.q, self.choi + other.choi)

    def __sub__(self, other):
        self._check_same(other)
        return Kernel(self.labels, self.p, self.q, self.choi - other.choi)

    def __neg__(self):
        return Kernel(self.labels, self.p, self.q, -self.choi)

    def __mul__(self, scalar):
        return Kernel(self.labels, self.p, self.q, complex(scalar) * self.choi)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def distance(self, other):
        """Largest Choi-Frobenius distance over entries."""
        self._check_same(other)
        if self.n == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.choi - other.choi, axis=(2, 3))))

    def norm(self):
        if self.n == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.choi, axis=(2, 3))))

    def __repr__(self):
        return f"Kernel(labels={list(self.labels)}, p={self.p}, q={self.q})"


def default_labels(n):
    return tuple(f"x{i}" for i in range(n))


def involution(k):
    """k*(x, y)[a] = k(y, x)[a*]*; in compressed form this is K*."""
    return Kernel.from_compressed(k.labels, k.p, k.q, adjoint(k.compressed()))


def re_im(k):
    """Hermitian kernels (Re k, Im k) with k = Re k + i Im k."""
    ks = involution(k)
    return 0.5 * (k + ks), (k - ks) / 2j


def is_hermitian_kernel(k, tol=DEFAULT_TOL):
    return involution(k).distance(k) <= tol


def schur_op(k):
    """The Schur product operator M_n(M_p) -> M_n(M_q) as a LinMap.

    Source index (i, u) -> i * p + u, target index (i, w) -> i * q + w.
    """
    n, p, q = k.n, k.p, k.q
    c6 = k.choi.reshape(n, n, p, q, p, q)
    eye = np.eye(n)
    full = np.einsum("ijuwvx,ia,jc->iuawjvcx", c6, eye, eye)
    size = n * n * p * q
    return LinMap(n * p, n * q, full.reshape(size, size))


def _min_eig(h, tol):
    """Smallest eigenvalue of h, or None if h is not Hermitian within tol."""
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if algebra.hermitian_defect(h) > max(tol, 1e-12) * scale:
        return None
    if h.shape[0] == 0:
        return 0.0
    return algebra.min_eigenvalue(0.5 * (h + adjoint(h)), tol)


def definition_sum(k, a, b):
    """sum_{i,j} b_i* k(x_i, x_j)[a_i* a_j] b_j for a_i in M_p, b_i in M_q."""
    n, p, q = k.n, k.p, k.q
    c4 = k.choi.reshape(n, n, p, q, p, q)
    prods = np.einsum("ius,jsv->ijuv", np.conj(a).transpose(0, 2, 1), a)
    vals = np.einsum("ijuv,ijuwvx->ijwx", prods, c4)
    return np.einsum("iwy,ijwx,jxz->yz", np.conj(b), vals, b)


def definition_check(k, samples=DEFINITION_SAMPLES, seed=0, tol=DEFAULT_TOL):
    """Smallest normalised eigenvalue over random definition-style sums.

    Returns the minimum of lambda_min(sum) / (sum_i |a_i| |b_i|)^2; for a
    kernel whose compressed Choi matrix has smallest eigenvalue lambda
    this is at least min(lambda, 0).
    """
    rng = np.random.default_rng(seed)
    n, p, q = k.n, k.p, k.q
    worst = np.inf
    for _ in range(samples):
        a = rng.normal(size=(n, p, p)) + 1j * rng.normal(size=(n, p, p))
        b = rng.normal(size=(n, q, q)) + 1j * rng.normal(size=(n, q, q))
        s = definition_sum(k, a, b)
        weight = sum(np.linalg.norm(a[i]) * np.linalg.norm(b[i]) for i in range(n)) ** 2
        w = np.linalg.eigvalsh(0.5 * (s + adjoint(s)))[0]
        worst = min(worst, float(w) / weight)
    return worst


def is_cp_kernel(k, tol=DEFAULT_TOL, samples=DEFINITION_SAMPLES):
    """Completely positive iff the compressed Choi matrix is PSD within tol.

    A positive verdict is cross-examined with random definition-style
    sums; a clearly negative sum raises InternalConsistencyError.
    """
    if k.n == 0:
        return True
    lam = _min_eig(k.compressed(), tol)
    if lam is None or lam < -tol:
        return False
    if samples:
        worst = definition_check(k, samples, tol=tol)
        if worst < -10.0 * max(tol, 1e-12) * max(1.0, k.norm()):
            raise InternalConsistencyError(
                f"Choi test says CP but a definition sum has eigenvalue ratio {worst:.3e}"
            )
    return True


def leq(k1, k2, tol=DEFAULT_TOL):
    """k1 <= k2 in the kernel order, i.e. k2 - k1 is completely positive."""
    k1._check_same(k2)
    return is_cp_kernel(k2 - k1, tol)


def is_cb_kernel_norm(k, eps=1e-7, max_iter=200, deadline=None):
    """cb norm of the Schur product operator of ``k``.

    Computed by the off-diagonal completion restricted to bimodule
    (Schur-patterned) completing maps, which has the same optimal value
    as the unrestricted cb norm program and is much smaller.
    """
    from .sdp import solve_completion

    if k.n == 0:
        return 0.0
    res = solve_completion(k.compressed(), k.n, k.p, k.q, eps=eps, max_iter=max_iter, deadline=deadline)
    return res.t


# -- 2 x 2 kernel matrices ------------------------------------------------


@dataclass(frozen=True, eq=False)
class Kernel2x2:
    """A 2x2 matrix of kernels [[b11, b12], [b21, b22]] on shared labels."""

    blocks: Tuple[Tuple[Kernel, Kernel], Tuple[Kernel, Kernel]]

    def __post_init__(self):
        bl = tuple(tuple(row) for row in self.blocks)
        if len(bl) != 2 or any(len(row) != 2 for row in bl):
            raise DimensionError("Kernel2x2 needs a 2x2 array of kernels")
        first = bl[0][0]
        for row in bl:
            for b in row:
                first._check_same(b)
        object.__setattr__(self, "blocks", bl)

    @property
    def labels(self):
        return self.blocks[0][0].labels

    @property
    def n(self):
        return self.blocks[0][0].n

    @property
    def p(self):
        return self.blocks[0][0].p

    @property
    def q(self):
        return self.blocks[0][0].q

    def _stacked(self):
        """Array [a, b, i, u, w, j, v, x] of all four compressed matrices."""
        n, p, q = self.n, self.p, self.q
        return np.array(
            [[b.compressed().reshape(n, p, q, n, p, q) for b in row] for row in self.blocks]
        )

    def psi_choi(self):
        """Compressed Choi of the kernel a -> [[b_ab(a)]] valued in maps M_p -> M_2(M_q).

        Index order (i, u, a, w).
        """
        n, p, q = self.n, self.p, self.q
        s = self._stacked().transpose(2, 3, 0, 4, 5, 6, 1, 7)
        return s.reshape(2 * n * p * q, 2 * n * p * q)

    def phi_choi(self):
        """Compressed Choi of the kernel acting as a Schur product on M_2(M_p).

        Index order (i, a, u, w); rows with mismatched 2x2 positions are
        identically zero and are dropped.
        """
        n, p, q = self.n, self.p, self.q
        s = self._stacked().transpose(2, 0, 3, 4, 5, 1, 6, 7)
        return s.reshape(2 * n * p * q, 2 * n * p * q)

    def phi_kernel(self):
        """The 2x2 matrix of kernels as one kernel with values M_2(M_p) -> M_2(M_q).

        Each value acts by [[a_11, a_12], [a_21, a_22]] -> [[b_ab(x, y)[a_ab]]];
        source index (a, u), target index (a, w).
        """
        n, p, q = self.n, self.p, self.q
        s = self._stacked().reshape(2, 2, n, p, q, n, p, q)
        eye = np.eye(2)
        # value Choi index ((a, u), (a', w)), ((b, v), (b', x))
        c = np.einsum("abiuwjvx,ac,bd->ijaucwbvdx", s, eye, eye)
        pq = 4 * p * q
        return Kernel(self.labels, 2 * p, 2 * q, c.reshape(n, n, pq, pq))

    @classmethod
    def from_psi_kernel(cls, k):
        """Split a kernel valued in maps M_p -> M_2(M_q) into its four blocks."""
        if k.q % 2:
            raise DimensionError("target size must be even")
        n, p, q = k.n, k.p, k.q // 2
        c = k.choi.reshape(n, n, p, 2, q, p, 2, q)
        blocks = tuple(
            tuple(
                Kernel(k.labels, p, q, c[:, :, :, a, :, :, b, :].reshape(n, n, p * q, p * q))
                for b in range(2)
            )
            for a in range(2)
        )
        return cls(blocks)

    def restrict(self, subset):
        from .extension import restrict

        return Kernel2x2(tuple(tuple(restrict(b, subset) for b in row) for row in self.blocks))

    def __repr__(self):
        return f"Kernel2x2(labels={list(self.labels)}, p={self.p}, q={self.q})"


def assemble_2x2(l1, k, l2):
    """[[L1, k], [k*, L2]]."""
    return Kernel2x2(((l1, k), (involution(k), l2)))


def is_cp_2x2(kk, tol=DEFAULT_TOL):
    """Complete positivity of a 2x2 kernel matrix.

    Decides through the M_p -> M_2(M_q) reading and cross-checks the
    Schur-on-M_2(M_p) reading; the two must agree up to tol.
    """
    lam_psi = _min_eig(kk.psi_choi(), tol)
    lam_phi = _min_eig(kk.phi_choi(), tol)
    if (lam_psi is None) != (lam_phi is None):
        raise InternalConsistencyError("the two readings disagree on hermitian symmetry")
    if lam_psi is None:
        return False
    psi_ok, phi_ok = lam_psi >= -tol, lam_phi >= -tol
    if psi_ok != phi_ok and abs(lam_psi - lam_phi) > tol:
        raise InternalConsistencyError(
            f"readings disagree: min eigenvalues {lam_psi:.3e} and {lam_phi:.3e}"
        )
    return psi_ok


def conjugate_2x2(kk, s):
    """Blocks of S* K S for a 2x2 scalar matrix S."""
    s = algebra.as_matrix(s)
    if s.shape != (2, 2):
        raise DimensionError("S must be 2x2")
    out = []
    for a in range(2):
        row = []
        for b in range(2):
            acc = Kernel.zero(kk.labels, kk.p, kk.q)
            for c in range(2):
                for d in range(2):
                    coef = np.conj(s[c, a]) * s[d, b]
                    if coef != 0:
                        acc = acc + coef * kk.blocks[c][d]
            row.append(acc)
        out.append(tuple(row))
    return Kernel2x2(tuple(out))


def bimodule_check(phi, n, tol=DEFAULT_TOL):
    """Does phi : M_n(M_p') -> M_n(M_q') act entrywise on the n x n grid?

    Equivalent to E_ij * phi(A) = phi(E_ij * A) for all i, j and all A;
    checked on matrix units through the Choi matrix, whose entries outside
    the bimodule pattern must vanish.
    """
    if n < 1 or phi.p % n or phi.q % n:
        raise DimensionError(f"map M_{phi.p} -> M_{phi.q} does not split over an {n}x{n} grid")
    pp, qq = phi.p // n, phi.q // n
    c = phi.choi.reshape(n, pp, n, qq, n, pp, n, qq)
    eye = np.eye(n, dtype=bool)
    keep = eye[:, None, :, None, None, None, None, None] & eye[None, None, None, None, :, None, :, None]
    keep = np.broadcast_to(keep, c.shape)
    off = np.abs(c[~keep])
    return bool(off.size == 0 or off.max() <= tol)


def block_map(maps):
    """The map [[a_11, a_12], [a_21, a_22]] -> [[phi_ab(a_ab)]] on M_2(M_p).

    ``maps`` is a 2x2 nested sequence of LinMap sharing (p, q).
    """
    p, q = maps[0][0].p, maps[0][0].q
    stacked = np.array([[m.blocks() for m in row] for row in maps])  # a, b, u, w, v, x
    eye = np.eye(2)
    c = np.einsum("abuwvx,ac,bd->aucwbvdx", stacked, eye, eye)
    size = 4 * p * q
    return LinMap(2 * p, 2 * q, c.reshape(size, size))


def shuffle_map(phi, outer, inner):
    """Conjugate source and target of phi by the canonical shuffle.

    phi acts on M_outer(M_inner(M_p')) -> M_outer(M_inner(M_q')); the
    result is the same map read on M_inner(M_outer(.)).
    """
    if phi.p % (outer * inner) or phi.q % (outer * inner):
        raise DimensionError("map does not split into the given grids")
    pp, qq = phi.p // (outer * inner), phi.q // (outer * inner)
    c = phi.choi.reshape(outer, inner, pp, outer, inner, qq, outer, inner, pp, outer, inner, qq)
    c = c.transpose(1, 0, 2, 4, 3, 5, 7, 6, 8, 10, 9, 11)
    return LinMap(phi.p, phi.q, c.reshape(phi.choi.shape))


def to_json(k):
    from .linmap import to_json as map_json

    return {
        "labels": list(k.labels),
        "p": k.p,
        "q": k.q,
        "values": [[map_json(k.value(i, j)) for j in range(k.n)] for i in range(k.n)],
    }


def from_json(obj):
    from .linmap import from_json as map_from_json

    values = [[map_from_json(v) for v in row] for row in obj["values"]]
    labels = tuple(obj["labels"])
    if not values:
        return Kernel.zero(labels, int(obj["p"]), int(obj["q"]))
    k = Kernel.from_maps(labels, values)
    if (k.p, k.q) != (int(obj["p"]), int(obj["q"])):
        raise DimensionError("declared block sizes do not match the values")
    return k


def kernels_match(kernels: Sequence[Kernel]):
    for k in kernels[1:]:
        kernels[0]._check_same(k)
