"""cb norms from the SDP against a brute-force lower bound.

The transpose on M_2 is the textbook map whose norm and cb norm differ
(1 versus 2).

    python3 demos/cb_norms.py
"""

import numpy as np

from cbkernels import generators
from cbkernels.kernel import schur_op
from cbkernels.linmap import LinMap, apply, cb_norm, cb_norm_lower_bound

t = LinMap.transpose(2)
a = np.array([[0, 1], [0, 0]], dtype=complex)
print("||T(a)|| for a matrix unit:", np.linalg.norm(apply(t, a), 2))
print("cb norm of transpose:", round(cb_norm(t), 6))
print("lower bound, r=2:", round(cb_norm_lower_bound(t, 2, trials=50), 6))

rng = np.random.default_rng(5)
for trial in range(3):
    k = generators.random_general_kernel(rng, 2, 2, 2)
    phi = schur_op(k)
    upper = cb_norm(phi)
    lower = cb_norm_lower_bound(phi, 2, trials=100, seed=trial)
    print(f"kernel {trial}: sdp {upper:.6f}  lower bound {lower:.6f}  gap {upper - lower:.1e}")
