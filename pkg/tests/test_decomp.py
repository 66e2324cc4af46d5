import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cbkernels import algebra, decomp, generators, kernel as km
from cbkernels.decomp import (
    KolDecomp,
    combine_four,
    decomp_to_difference,
    difference_kolmogorov,
    direct_sum,
    four_cp,
    hermitian_split,
    kolmogorov_general,
    kolmogorov_hermitian,
    kolmogorov_positive,
    module_residual,
    offdiagonal_complete,
    reconstruct,
    verify_decomp,
)
from cbkernels.errors import DimensionError, PreconditionError
from cbkernels.kernel import Kernel, assemble_2x2, involution, is_cb_kernel_norm, is_cp_2x2, is_cp_kernel
from cbkernels.linmap import cb_norm

from helpers import seeds

sizes = st.tuples(st.integers(1, 3), st.integers(1, 2), st.integers(1, 2))
small = st.tuples(st.integers(1, 2), st.integers(1, 2), st.integers(1, 2))


def reconstruct_oracle(dec):
    """Entry-by-entry evaluation on matrix units."""
    n, p, q, m = dec.n, dec.p, dec.q, dec.m
    g = dec.J @ dec.iota
    choi = np.zeros((n, n, p * q, p * q), dtype=complex)
    for i in range(n):
        for j in range(n):
            for u in range(p):
                for v in range(p):
                    a = np.kron(algebra.matrix_unit(p, u, v), np.eye(m))
                    choi[i, j, u * q:(u + 1) * q, v * q:(v + 1) * q] = g[i].conj().T @ a @ dec.iota[j]
    return Kernel(dec.labels, p, q, choi)


# -- containers -------------------------------------------------------------------

def test_decomp_validation(rng):
    with pytest.raises(DimensionError):
        KolDecomp(("a",), 2, 1, 2, np.eye(3), np.zeros((1, 4, 1)))
    with pytest.raises(DimensionError):
        KolDecomp(("a",), 2, 1, 2, np.eye(4), np.zeros((1, 4, 2)))


@given(seeds, sizes, st.sampled_from([None, True, False]))
def test_reconstruct_matches_oracle(seed, s, herm):
    dec = generators.random_decomp(seed, *s, hermitian=herm)
    assert reconstruct(dec).distance(reconstruct_oracle(dec)) <= 1e-13


def test_direct_sum_adds_kernels(rng):
    d1 = generators.random_decomp(rng, 3, 2, 2, hermitian=False)
    d2 = generators.random_decomp(rng, 3, 2, 2, hermitian=True)
    s = direct_sum(d1, d2, scale2=-0.5j)
    assert s.m == d1.m + d2.m
    # the kernel is antilinear in J
    expect = reconstruct(d1) + 0.5j * reconstruct(d2)
    assert reconstruct(s).distance(expect) <= 1e-13
    assert module_residual(s.J, s.p, s.m) <= 1e-15


def test_module_residual_detects_non_module_map(rng):
    assert module_residual(np.kron(np.eye(2), generators.complex_normal(rng, (3, 3))), 2, 3) <= 1e-15
    assert module_residual(generators.complex_normal(rng, (6, 6)), 2, 3) > 1e-3


def test_json_roundtrip(rng):
    dec = generators.random_decomp(rng, 2, 2, 1, hermitian=False)
    back = decomp.from_json(decomp.to_json(dec))
    np.testing.assert_array_equal(back.J, dec.J)
    np.testing.assert_array_equal(back.iota, dec.iota)
    assert back.labels == dec.labels


# -- positive decompositions --------------------------------------------------------

@given(seeds, sizes)
def test_positive_roundtrip(seed, s):
    k = generators.random_cp_kernel(seed, *s)
    dec = kolmogorov_positive(k)
    rep = verify_decomp(dec, k, 1e-8)
    assert rep["ok"] and rep["reconstructs"] and rep["J_psd"]
    assert rep["reconstruction_residual"] <= 1e-8 * max(1, k.norm())
    np.testing.assert_array_equal(dec.J, np.eye(dec.d))


def test_positive_minimal_dimension(rng):
    k = generators.random_cp_kernel(rng, 3, 2, 2, m=2)
    assert kolmogorov_positive(k).m == 2


def test_positive_zero_kernel():
    dec = kolmogorov_positive(Kernel.zero(km.default_labels(2), 2, 3))
    assert reconstruct(dec).norm() == 0


def test_positive_rejects_non_cp(rng):
    with pytest.raises(PreconditionError):
        kolmogorov_positive(generators.random_hermitian_kernel(rng, 3, 2, 2))
    with pytest.raises(PreconditionError):
        kolmogorov_positive(generators.random_general_kernel(rng, 2, 2, 2))


@given(seeds, sizes)
def test_difference_of_cp(seed, s):
    k1, k2 = generators.random_cp_pair(seed, *s)
    dec = difference_kolmogorov(k1, k2)
    rep = verify_decomp(dec, k1 - k2, 1e-8)
    assert rep["ok"] and rep["reconstructs"] and rep["J_selfadjoint"]
    np.testing.assert_allclose(dec.J @ dec.J, np.eye(dec.d), atol=1e-14)


# -- J to a CP difference ---------------------------------------------------------------

@given(seeds, sizes)
def test_selfadjoint_module_j_gives_cp_difference(seed, s):
    dec = generators.random_decomp(seed, *s, hermitian=True)
    k1, k2 = decomp_to_difference(dec)
    assert is_cp_kernel(k1) and is_cp_kernel(k2)
    assert (k1 - k2).distance(reconstruct(dec)) <= 1e-10


def test_difference_needs_selfadjoint_j(rng):
    dec = generators.random_decomp(rng, 2, 2, 2, m=3, hermitian=False)
    with pytest.raises(PreconditionError):
        decomp_to_difference(dec)


@given(seeds, sizes, st.booleans())
def test_selfadjoint_iff_hermitian(seed, s, herm):
    dec = generators.random_decomp(seed, *s, hermitian=herm)
    rep = verify_decomp(dec, tol=1e-9)
    assert rep["selfadjoint_iff_hermitian"]
    assert rep["J_selfadjoint"] == herm


# -- off-diagonal completion -----------------------------------------------------------

def test_offdiagonal_zero_kernel():
    z = Kernel.zero(km.default_labels(3), 2, 2)
    l1, l2, t = offdiagonal_complete(z)
    assert t == 0 and l1.norm() == 0 and l2.norm() == 0


@settings(max_examples=8)
@given(seeds, small)
def test_offdiagonal_completion(seed, s):
    k = generators.random_general_kernel(seed, *s)
    res = offdiagonal_complete(k, full=True)
    scale = max(1.0, res.L1.norm(), res.L2.norm())
    assert is_cp_2x2(assemble_2x2(res.L1, k, res.L2), 1e-7 * scale)
    for l in (res.L1, res.L2):
        assert is_cp_kernel(l, 1e-7 * scale)
        norm = algebra.op_norm(km.schur_op(l)(np.eye(k.n * k.p)))
        assert norm <= res.t * (1 + 1e-6) + 1e-9
    assert res.lower <= res.t + 1e-9
    assert abs(res.t - is_cb_kernel_norm(k)) <= 1e-5 * max(1, res.t)


@settings(max_examples=4)
@given(seeds, st.integers(1, 2), st.integers(1, 2))
def test_offdiagonal_value_is_cb_norm_of_schur_operator(seed, p, q):
    k = generators.random_general_kernel(seed, 2, p, q)
    _, _, t = offdiagonal_complete(k)
    ref = cb_norm(km.schur_op(k))
    assert abs(t - ref) <= 1e-5 * max(1, ref)


# -- hermitian and general decompositions ---------------------------------------------

@settings(max_examples=10)
@given(seeds, small)
def test_hermitian_split(seed, s):
    k = generators.random_hermitian_kernel(seed, *s)
    k1, k2 = hermitian_split(k)
    assert is_cp_kernel(k1, 1e-7) and is_cp_kernel(k2, 1e-7)
    assert (k1 - k2).distance(k) <= 1e-9 * max(1, k.norm())


def test_hermitian_split_shortcuts(rng):
    c = generators.random_cp_kernel(rng, 2, 2, 2)
    k1, k2 = hermitian_split(c)
    assert k1.distance(c) == 0 and k2.norm() == 0
    k1, k2 = hermitian_split(-c)
    assert k1.norm() == 0 and k2.distance(c) == 0


def test_hermitian_split_rejects_non_hermitian(rng):
    with pytest.raises(PreconditionError):
        hermitian_split(generators.random_general_kernel(rng, 2, 2, 2))


@settings(max_examples=10)
@given(seeds, small)
def test_kolmogorov_hermitian(seed, s):
    k = generators.random_hermitian_kernel(seed, *s)
    dec = kolmogorov_hermitian(k)
    rep = verify_decomp(dec, k, 1e-7)
    assert rep["ok"] and rep["J_selfadjoint"] and rep["hermitian"]
    np.testing.assert_allclose(dec.J @ dec.J, np.eye(dec.d), atol=1e-12)


@settings(max_examples=10)
@given(seeds, small)
def test_kolmogorov_general(seed, s):
    k = generators.random_general_kernel(seed, *s)
    dec = kolmogorov_general(k)
    rep = verify_decomp(dec, k, 1e-7)
    assert rep["ok"] and rep["reconstructs"]
    assert rep["J_norm"] <= 1 + 1e-9


def test_general_of_purely_imaginary(rng):
    h = generators.random_hermitian_kernel(rng, 2, 2, 2)
    dec = kolmogorov_general(1j * h)
    assert reconstruct(dec).distance(1j * h) <= 1e-8


@settings(max_examples=8)
@given(seeds, small)
def test_four_cp(seed, s):
    k = generators.random_general_kernel(seed, *s)
    parts = four_cp(k)
    assert all(is_cp_kernel(c, 1e-7) for c in parts)
    assert combine_four(*parts).distance(k) <= 1e-9 * max(1, k.norm())


def test_involution_of_decomposition(rng):
    """The adjoint kernel is represented by swapping J for J*."""
    dec = generators.random_decomp(rng, 3, 2, 2, hermitian=False)
    adj = KolDecomp(dec.labels, dec.p, dec.q, dec.m, dec.J.conj().T, dec.iota)
    assert reconstruct(adj).distance(involution(reconstruct(dec))) <= 1e-13
