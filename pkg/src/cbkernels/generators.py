"""Random instances with known class membership.

Every generator takes a ``numpy.random.Generator`` (or a seed) and is
deterministic given it.  CP kernels are built in Kolmogorov form from a
random iota with J = I, so they are completely positive by construction.
"""

import numpy as np

from .decomp import KolDecomp, reconstruct
from .kernel import Kernel, default_labels
from .linmap import LinMap


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def complex_normal(rng, shape):
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2.0)


def random_iota(rng, n, p, q, m):
    return complex_normal(rng, (n, p * m, q)) / np.sqrt(p * m)


def random_decomp(seed, n, p, q, m=None, labels=None, hermitian=None):
    """Random decomposition with a module-map J = I_p (x) J'.

    ``hermitian`` selects a self-adjoint J' (True), a generic one (False)
    or J' = I (None).  m defaults to a random value in [1, npq]; keeping
    m <= npq makes the map J -> reconstruct injective for generic iota.
    """
    rng = _rng(seed)
    if m is None:
        m = int(rng.integers(1, n * p * q + 1))
    labels = default_labels(n) if labels is None else tuple(labels)
    if hermitian is None:
        jp = np.eye(m)
    else:
        jp = complex_normal(rng, (m, m))
        if hermitian:
            jp = 0.5 * (jp + jp.conj().T)
        jp /= max(1.0, np.linalg.norm(jp, 2))
    return KolDecomp(labels, p, q, m, np.kron(np.eye(p), jp), random_iota(rng, n, p, q, m))


def random_cp_kernel(seed, n, p, q, m=None, labels=None):
    """Random completely positive kernel of Kolmogorov rank m."""
    rng = _rng(seed)
    if m is None:
        m = int(rng.integers(1, n * p * q + 1))
    return reconstruct(random_decomp(rng, n, p, q, m, labels))


def random_cp_pair(seed, n, p, q, labels=None):
    rng = _rng(seed)
    return random_cp_kernel(rng, n, p, q, labels=labels), random_cp_kernel(rng, n, p, q, labels=labels)


def random_hermitian_kernel(seed, n, p, q, labels=None):
    """Difference of two random CP kernels (hermitian, generally not CP)."""
    k1, k2 = random_cp_pair(seed, n, p, q, labels)
    return k1 - k2


def random_general_kernel(seed, n, p, q, labels=None):
    """Kernel with independent Gaussian Choi entries (no symmetry)."""
    rng = _rng(seed)
    labels = default_labels(n) if labels is None else tuple(labels)
    pq = p * q
    return Kernel(labels, p, q, complex_normal(rng, (n, n, pq, pq)) / np.sqrt(pq))


def random_cp_map(seed, p, q, rank=None):
    rng = _rng(seed)
    if rank is None:
        rank = int(rng.integers(1, p * q + 1))
    f = complex_normal(rng, (rank, p * q))
    return LinMap(p, q, f.conj().T @ f / rank)


def random_map(seed, p, q):
    rng = _rng(seed)
    return LinMap(p, q, complex_normal(rng, (p * q, p * q)))


def random_hermitian_matrix(seed, n):
    rng = _rng(seed)
    a = complex_normal(rng, (n, n))
    return 0.5 * (a + a.conj().T)


KINDS = ("cp", "hermitian", "general", "difference")


def generate(kind, n, p, q, seed):
    """Kernel (and, for ``difference``, its CP pair) of the requested kind."""
    rng = np.random.default_rng(seed)
    if kind == "cp":
        return random_cp_kernel(rng, n, p, q), None
    if kind == "hermitian":
        return random_hermitian_kernel(rng, n, p, q), None
    if kind == "general":
        return random_general_kernel(rng, n, p, q), None
    if kind == "difference":
        k1, k2 = random_cp_pair(rng, n, p, q)
        return k1 - k2, (k1, k2)
    raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KINDS}")
