"""The canonical completion L0_F is not hereditary.

Its diagonal at x collects L_(x,y)(x, x) for every y in F, so enlarging
F adds positive mass there.  The restriction of L0_F to G still
dominates L0_G, and (L0_F, L0_F) passes the local test on F itself,
but at smaller sets of the chain its cb norm exceeds r_G.

    python3 demos/l0_growth.py
"""

import numpy as np

from cbkernels import generators
from cbkernels.extension import (
    LocalPair,
    PairCache,
    SubsetChain,
    build_L0,
    local_solution_report,
    restrict,
)
from cbkernels.kernel import leq

k = generators.random_general_kernel(np.random.default_rng(1), 4, 1, 1)
cache = PairCache(k)
chain = SubsetChain(k.labels, (("x0",), ("x0", "x1"), ("x0", "x1", "x2"), k.labels))

print("diagonal of L0_F at x0 as F grows:")
for sub in chain.chain:
    l0 = build_L0(k, sub, cache=cache)
    print(f"  F={list(sub)}: {l0.scalar_matrix()[0, 0].real:.4f}")

top = build_L0(k, chain.top, cache=cache)
for sub in chain.chain:
    print(f"  restrict(L0_top, {list(sub)}) >= L0_G:", leq(build_L0(k, sub, cache=cache), restrict(top, sub), 1e-8))

print("local test of (L0_top, L0_top) along the chain:")
for row in local_solution_report(LocalPair(top, top), k, chain, cache=cache):
    print(f"  level {row['level']}: r_G={row['radius']:.4f} norm={row['norms'][0]:.4f} ok={row['ok']}")
