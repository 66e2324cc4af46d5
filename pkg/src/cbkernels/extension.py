"""Finite-subset machinery for extending local completions.

For a kernel k on a finite ordered set X this module provides
restrictions and zero-paddings, the two-point kernels that split k into
pieces supported on {x, y}, their CP completions L_(x,y), the canonical
completion L0_F built from them, the radius r_F = ||S_{L0_F}||_cb and
the local-solution predicate checked along a chain G_1 < ... < F.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Tuple

import numpy as np

from .algebra import DEFAULT_TOL, op_norm
from .decomp import KolDecomp, kolmogorov_general, kolmogorov_positive, reconstruct
from .errors import DimensionError
from .kernel import Kernel, Kernel2x2, assemble_2x2, is_cb_kernel_norm, is_cp_2x2, is_cp_kernel, schur_op


@dataclass(frozen=True)
class SubsetChain:
    ground: Tuple[str, ...]
    chain: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        ground = tuple(str(x) for x in self.ground)
        if len(set(ground)) != len(ground):
            raise ValueError("ground labels must be distinct")
        pos = {x: i for i, x in enumerate(ground)}
        chain = []
        for sub in self.chain:
            sub = tuple(str(x) for x in sub)
            missing = [x for x in sub if x not in pos]
            if missing:
                raise KeyError(f"chain subset has labels outside the ground set: {missing}")
            if [pos[x] for x in sub] != sorted(pos[x] for x in sub) or len(set(sub)) != len(sub):
                raise ValueError(f"subset {sub} does not follow the ground ordering")
            chain.append(sub)
        for small, big in zip(chain, chain[1:]):
            if not (set(small) < set(big)):
                raise ValueError(f"chain is not strictly increasing at {small} -> {big}")
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "chain", tuple(chain))

    @property
    def top(self):
        return self.chain[-1]

    def below(self, level):
        """The chain truncated to its first ``level + 1`` subsets."""
        return SubsetChain(self.ground, self.chain[: level + 1])

    def to_json(self):
        return {"ground": list(self.ground), "chain": [list(s) for s in self.chain]}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(obj["ground"]), tuple(tuple(s) for s in obj["chain"]))


@dataclass(frozen=True, eq=False)
class LocalPair:
    L1: Kernel
    L2: Kernel

    def __post_init__(self):
        self.L1._check_same(self.L2)

    @property
    def labels(self):
        return self.L1.labels


def _ordered_subset(labels, subset):
    subset = [str(x) for x in subset]
    unknown = [x for x in subset if x not in labels]
    if unknown:
        raise KeyError(f"unknown labels {unknown}")
    return [i for i, x in enumerate(labels) if x in set(subset)]


def restrict(k, subset):
    """k on subset x subset, keeping the order of k's labels."""
    idx = _ordered_subset(k.labels, subset)
    choi = k.choi[np.ix_(idx, idx)]
    return Kernel(tuple(k.labels[i] for i in idx), k.p, k.q, choi)


def pad(k_f, x_labels):
    """Extend a kernel on F to X by zero outside F x F."""
    x_labels = tuple(str(x) for x in x_labels)
    idx = _ordered_subset(x_labels, k_f.labels)
    if [x_labels[i] for i in idx] != list(k_f.labels):
        raise DimensionError("kernel labels are not in the order of the ground set")
    n, pq = len(x_labels), k_f.p * k_f.q
    choi = np.zeros((n, n, pq, pq), dtype=np.complex128)
    choi[np.ix_(idx, idx)] = k_f.choi
    return Kernel(x_labels, k_f.p, k_f.q, choi)


def pair_kernel(k, x, y):
    """The piece of k supported on {x, y}.

    For x != y it agrees with k at (x, y) and (y, x) and vanishes
    elsewhere; for x = y it keeps only the diagonal entry (x, x).
    """
    i, j = k.index(x), k.index(y)
    choi = np.zeros_like(k.choi)
    choi[i, j] = k.choi[i, j]
    choi[j, i] = k.choi[j, i]
    return Kernel(k.labels, k.p, k.q, choi)


def half_sum(kernels_by_pair, subset):
    """(1/2) [sum over ordered (x, y) in F x F + sum over x in F], restricted to F.

    ``kernels_by_pair`` maps an unordered pair (a frozenset of one or two
    labels) to a kernel on the ground set.
    """
    subset = [str(x) for x in subset]
    total = None
    for x in subset:
        for y in subset:
            term = kernels_by_pair(frozenset((x, y)))
            total = term if total is None else total + term
    for x in subset:
        total = total + kernels_by_pair(frozenset((x,)))
    return restrict(0.5 * total, subset)


class PairCache:
    """Write-once store of pair completions L_(x,y), keyed by unordered pair."""

    def __init__(self, k, eps=1e-7, max_iter=200):
        self.k = k
        self.eps = eps
        self.max_iter = max_iter
        self._store: Dict[FrozenSet[str], Kernel] = {}

    def __contains__(self, key):
        return frozenset(key) in self._store

    def __len__(self):
        return len(self._store)

    def get(self, x, y):
        key = frozenset((str(x), str(y)))
        if key not in self._store:
            self._store[key] = _pair_completion(self.k, x, y, self.eps, self.max_iter)
        return self._store[key]

    def put(self, x, y, value):
        key = frozenset((str(x), str(y)))
        if key in self._store:
            raise KeyError(f"pair {sorted(key)} already has a completion")
        self._store[key] = value

    def by_key(self, key):
        labels = sorted(key)
        return self.get(labels[0], labels[-1])


def _pair_completion(k, x, y, eps, max_iter):
    x, y = str(x), str(y)
    support = [lab for lab in k.labels if lab in (x, y)]
    local = restrict(pair_kernel(k, x, y), support)
    if x == y and is_cp_kernel(local):
        dec = kolmogorov_positive(local)
    else:
        dec = kolmogorov_general(local, eps=eps, max_iter=max_iter)
    plain = KolDecomp(dec.labels, dec.p, dec.q, dec.m, np.eye(dec.d), dec.iota)
    return pad(reconstruct(plain), k.labels)


def pair_completion(k, x, y, eps=1e-7, cache=None):
    """L_(x,y): CP kernel on X built from iota of a decomposition of the pair piece.

    It vanishes outside {x, y} and [[L, piece], [piece*, L]] is CP there.
    """
    if cache is not None:
        if cache.k is not k:
            raise ValueError("cache belongs to a different kernel")
        return cache.get(x, y)
    return _pair_completion(k, x, y, eps, 200)


def build_L0(k, subset, eps=1e-7, cache=None):
    """L0_F: the half-sum of pair completions over F, restricted to F."""
    if cache is None:
        cache = PairCache(k, eps)
    return half_sum(cache.by_key, subset)


def radius(k, subset, eps=1e-7, cache=None):
    """r_F = ||S_{L0_F}||_cb."""
    return is_cb_kernel_norm(build_L0(k, subset, eps, cache), eps=eps)


def cp_kernel_norm(k):
    """cb norm of the Schur operator of a CP kernel: ||S_k(I)||."""
    if k.n == 0:
        return 0.0
    return op_norm(schur_op(k)(np.eye(k.n * k.p)))


def local_solution_report(pair, k, chain, eps=1e-7, cache=None, tol=1e-7):
    """Per-level findings of the local-solution test along ``chain``.

    At each level G (bottom to top) the restricted pair must be CP, each
    component's cb norm must be at most r_G (+ eps), and the 2x2 kernel
    [[L1, k], [k*, L2]] on G must be CP.
    """
    if tuple(pair.labels) != tuple(chain.top):
        raise DimensionError("pair must be defined on the top set of the chain")
    if cache is None:
        cache = PairCache(k, eps)
    rows = []
    for level, sub in enumerate(chain.chain):
        l1, l2 = restrict(pair.L1, sub), restrict(pair.L2, sub)
        k_g = restrict(k, sub)
        r = radius(k, sub, eps, cache)
        scale = max(1.0, l1.norm(), l2.norm(), k_g.norm())
        cp1, cp2 = is_cp_kernel(l1, tol * scale), is_cp_kernel(l2, tol * scale)
        n1 = cp_kernel_norm(l1) if cp1 else float("inf")
        n2 = cp_kernel_norm(l2) if cp2 else float("inf")
        cap = r + eps * max(1.0, r)
        block = is_cp_2x2(assemble_2x2(l1, k_g, l2), tol * scale)
        rows.append(
            {
                "level": level,
                "subset": list(sub),
                "radius": r,
                "norms": [n1, n2],
                "cp": bool(cp1 and cp2),
                "within_cap": bool(n1 <= cap and n2 <= cap),
                "block_cp": bool(block),
                "ok": bool(cp1 and cp2 and n1 <= cap and n2 <= cap and block),
            }
        )
    return rows


def local_solution_check(pair, k, chain, eps=1e-7, cache=None):
    """True iff the pair passes the local-solution test at every chain level."""
    return all(row["ok"] for row in local_solution_report(pair, k, chain, eps, cache))


def radius_profile(k, chain, eps=1e-7, cache=None):
    """Radii along the chain and the indices where they decrease."""
    if cache is None:
        cache = PairCache(k, eps)
    radii = [radius(k, sub, eps, cache) for sub in chain.chain]
    drops = [i for i in range(1, len(radii)) if radii[i] < radii[i - 1] - eps * max(1.0, radii[i - 1])]
    return radii, drops


def hereditary_defect(k, chain, eps=1e-7, cache=None):
    """Largest |restrict(L0_F, G) - L0_G| over consecutive chain levels."""
    if cache is None:
        cache = PairCache(k, eps)
    top = build_L0(k, chain.top, eps, cache)
    worst = 0.0
    for sub in chain.chain:
        worst = max(worst, restrict(top, sub).distance(build_L0(k, sub, eps, cache)))
    return worst
