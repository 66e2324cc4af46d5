"""Walk through the three Kolmogorov decompositions on small random kernels.

    python3 demos/decompose_kernels.py
"""

import numpy as np

from cbkernels import generators
from cbkernels.decomp import (
    combine_four,
    four_cp,
    kolmogorov_general,
    kolmogorov_hermitian,
    kolmogorov_positive,
    reconstruct,
    verify_decomp,
)
from cbkernels.kernel import is_cb_kernel_norm, is_cp_kernel

rng = np.random.default_rng(2024)


def show(title, dec, k):
    rep = verify_decomp(dec, k, 1e-7)
    print(f"{title}: m={dec.m}, ||J||={rep['J_norm']:.3f}, "
          f"self-adjoint={rep['J_selfadjoint']}, psd={rep['J_psd']}, "
          f"residual={rep['reconstruction_residual']:.1e}")


# A CP kernel has a decomposition with J = I.
cp = generators.random_cp_kernel(rng, 3, 2, 2)
show("positive ", kolmogorov_positive(cp), cp)

# A hermitian kernel splits as a difference of CP kernels, so J = I (+) -I.
herm = generators.random_hermitian_kernel(rng, 3, 2, 2)
print("hermitian kernel is CP:", is_cp_kernel(herm))
show("hermitian", kolmogorov_hermitian(herm), herm)

# Anything else still decomposes, now with a contractive J that is not self-adjoint.
k = generators.random_general_kernel(rng, 3, 2, 1)
dec = kolmogorov_general(k)
show("general  ", dec, k)
print("cb norm of the Schur operator:", round(is_cb_kernel_norm(k), 6))

parts = four_cp(k)
print("four CP parts:", [bool(is_cp_kernel(c, 1e-8)) for c in parts],
      "residual", f"{combine_four(*parts).distance(k):.1e}")
print("reconstruct(general) == k:", reconstruct(dec).distance(k) < 1e-8)
