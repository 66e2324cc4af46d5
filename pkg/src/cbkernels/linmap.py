"""Linear maps M_p -> M_q stored as Choi matrices.

The Choi matrix of phi is C = sum_{u,v} E_{u,v} (x) phi(E_{u,v}), a
pq x pq matrix whose (u, v) block of size q x q is phi(E_{u,v}).  Row
and column indices are composite (u, w) -> u * q + w.
"""

from dataclasses import dataclass

import numpy as np

from . import algebra
from .algebra import DEFAULT_TOL, adjoint, as_matrix, op_norm
from .errors import DimensionError


@dataclass(frozen=True, eq=False)
class LinMap:
    p: int
    q: int
    choi: np.ndarray

    def __post_init__(self):
        choi = as_matrix(self.choi)
        n = self.p * self.q
        if choi.shape != (n, n):
            raise DimensionError(
                f"Choi matrix of a map M_{self.p} -> M_{self.q} must be {n}x{n}, got {choi.shape}"
            )
        choi = choi.copy()
        choi.setflags(write=False)
        object.__setattr__(self, "choi", choi)

    # -- construction -------------------------------------------------

    @classmethod
    def from_function(cls, f, p, q):
        """Build the Choi matrix of ``f`` by evaluating it on matrix units."""
        c = np.zeros((p, q, p, q), dtype=np.complex128)
        for u in range(p):
            for v in range(p):
                c[u, :, v, :] = f(algebra.matrix_unit(p, u, v))
        return cls(p, q, c.reshape(p * q, p * q))

    @classmethod
    def from_kraus(cls, ops, p=None):
        """phi(a) = sum_s K_s* a K_s for p x q matrices K_s."""
        ops = [as_matrix(k) for k in ops]
        if p is None:
            p = ops[0].shape[0]
        q = ops[0].shape[1] if ops else p
        c = np.zeros((p * q, p * q), dtype=np.complex128)
        for k in ops:
            vec = np.conj(k).reshape(-1)
            c += np.outer(vec, np.conj(vec))
        return cls(p, q, c)

    @classmethod
    def zero(cls, p, q):
        return cls(p, q, np.zeros((p * q, p * q)))

    @classmethod
    def identity(cls, p):
        c = np.zeros((p, p, p, p), dtype=np.complex128)
        for u in range(p):
            for v in range(p):
                c[u, u, v, v] = 1.0
        return cls(p, p, c.reshape(p * p, p * p))

    @classmethod
    def transpose(cls, p):
        """a -> a^T; its Choi matrix is the swap operator."""
        c = np.zeros((p, p, p, p), dtype=np.complex128)
        for u in range(p):
            for v in range(p):
                c[u, v, v, u] = 1.0
        return cls(p, p, c.reshape(p * p, p * p))

    @classmethod
    def conjugation(cls, v):
        """a -> V* a V for a p x q matrix V."""
        return cls.from_kraus([v])

    @classmethod
    def trace_map(cls, p, q):
        """a -> tr(a) I_q; its Choi matrix is the identity."""
        return cls(p, q, np.eye(p * q))

    # -- arithmetic ---------------------------------------------------

    def _check_same(self, other):
        if not isinstance(other, LinMap) or (self.p, self.q) != (other.p, other.q):
            raise DimensionError("maps act between different matrix algebras")

    def __add__(self, other):
        self._check_same(other)
        return LinMap(self.p, self.q, self.choi + other.choi)

    def __sub__(self, other):
        self._check_same(other)
        return LinMap(self.p, self.q, self.choi - other.choi)

    def __neg__(self):
        return LinMap(self.p, self.q, -self.choi)

    def __mul__(self, scalar):
        return LinMap(self.p, self.q, complex(scalar) * self.choi)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def blocks(self):
        """Choi matrix as a (p, q, p, q) array: [u, w, v, x] = phi(E_uv)[w, x]."""
        return self.choi.reshape(self.p, self.q, self.p, self.q)

    def distance(self, other):
        """Choi-Frobenius distance."""
        self._check_same(other)
        return float(np.linalg.norm(self.choi - other.choi))

    def __call__(self, a):
        return apply(self, a)

    def __repr__(self):
        return f"LinMap(p={self.p}, q={self.q})"


def apply(phi, a):
    """phi(a) = sum_{u,v} a[u, v] * phi(E_{u,v})."""
    a = as_matrix(a)
    if a.shape != (phi.p, phi.p):
        raise DimensionError(f"map acts on {phi.p}x{phi.p} matrices, got {a.shape}")
    return np.einsum("uv,uwvx->wx", a, phi.blocks())


def adjoint_map(phi):
    """The map a -> phi(a*)*.

    On matrix units phi*(E_uv) = phi(E_vu)*, so block (u, v) of the new
    Choi matrix is the adjoint of block (v, u) of the old one.
    """
    c = phi.blocks()
    out = np.empty_like(c)
    for u in range(phi.p):
        for v in range(phi.p):
            out[u, :, v, :] = adjoint(c[v, :, u, :])
    return LinMap(phi.p, phi.q, out.reshape(phi.choi.shape))


def is_hermitian_map(phi, tol=DEFAULT_TOL):
    return phi.distance(adjoint_map(phi)) <= tol


def is_cp_map(phi, tol=DEFAULT_TOL):
    """Choi criterion: phi is completely positive iff its Choi matrix is PSD."""
    if algebra.hermitian_defect(phi.choi) > max(tol, 1e-12) * max(1.0, float(np.max(np.abs(phi.choi)))):
        return False
    return algebra.is_psd(phi.choi, tol)


def kraus_operators(phi, tol=DEFAULT_TOL):
    """Kraus operators K_s (p x q) with phi(a) = sum K_s* a K_s, for CP phi."""
    f = algebra.psd_factor(phi.choi, tol)
    return [row.reshape(phi.p, phi.q).copy() for row in f]


def tensor_id(phi, r):
    """The amplification phi (x) id_r : M_p (x) M_r -> M_q (x) M_r.

    Source index (u, a) -> u * r + a, target index (w, g) -> w * r + g.
    """
    if r < 1:
        raise ValueError("r must be at least 1")
    eye = np.eye(r)
    c = np.einsum("uwvx,ag,bd->uawgvbxd", phi.blocks(), eye, eye)
    n = phi.p * phi.q * r * r
    return LinMap(phi.p * r, phi.q * r, c.reshape(n, n))


def unit_value(phi):
    """phi(I_p)."""
    return apply(phi, np.eye(phi.p))


def cb_norm(phi, eps=1e-7, max_iter=200, return_certificate=False, deadline=None):
    """Completely bounded norm by off-diagonal completion.

    Solves: minimise t over CP maps psi_1, psi_2 with psi_i(1) <= t I such
    that a 2x2 block matrix [[a, b], [c, d]] -> [[psi_1(a), phi(b)],
    [phi*(c), psi_2(d)]] is completely positive.  The returned value is
    the one certified by the (repaired, exactly feasible) completion; with
    ``return_certificate`` the pair ``(psi_1, psi_2)`` is returned too.
    """
    from .sdp import solve_completion

    res = solve_completion(phi.choi, 1, phi.p, phi.q, eps=eps, max_iter=max_iter, deadline=deadline)
    if return_certificate:
        return res.t, LinMap(phi.p, phi.q, res.x1), LinMap(phi.p, phi.q, res.x2)
    return res.t


def cb_norm_lower_bound(phi, r, trials=200, seed=0, sweeps=50):
    """Brute-force lower bound for the cb norm: max ||(phi (x) id_r)(a)|| over ||a|| <= 1.

    Each trial starts from a random unitary and alternates between the
    best output singular vectors for the current input and the best input
    contraction for the current output functional.  The trial stream is
    drawn from ``seed``, so more trials never give a smaller bound.
    """
    big = tensor_id(phi, r)
    c4 = big.blocks()
    n = big.p
    if not np.any(big.choi):
        return 0.0
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        a, _ = np.linalg.qr(g)
        value = 0.0
        for _ in range(sweeps):
            out = np.einsum("uv,uwvx->wx", a, c4)
            u, s, vh = np.linalg.svd(out)
            new = float(s[0])
            if new <= value * (1 + 1e-12):
                value = max(value, new)
                break
            value = new
            eta, xi = u[:, 0], np.conj(vh[0])
            # functional a -> eta* Phi(a) xi = sum_{s,t} a[s, t] G[s, t]
            gmat = np.einsum("w,swtx,x->st", np.conj(eta), c4, xi)
            gu, _, gvh = np.linalg.svd(gmat)
            a = (adjoint(gvh) @ adjoint(gu)).T
        best = max(best, value)
    return best


def cb_norm_cp(phi):
    """For completely positive phi the cb norm is ||phi(1)||."""
    return op_norm(unit_value(phi))


def to_json(phi):
    return {"p": phi.p, "q": phi.q, "choi": algebra.to_json(phi.choi)}


def from_json(obj):
    return LinMap(int(obj["p"]), int(obj["q"]), algebra.from_json(obj["choi"]))
