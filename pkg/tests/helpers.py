import numpy as np
from hypothesis import strategies as st


def rand_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def rand_hermitian(rng, n):
    a = rand_complex(rng, (n, n))
    return 0.5 * (a + a.conj().T)


def rand_psd(rng, n, rank=None):
    a = rand_complex(rng, (rank or n, n))
    return a.conj().T @ a


seeds = st.integers(min_value=0, max_value=2**32 - 1)
