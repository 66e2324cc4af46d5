import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cbkernels import algebra, generators, kernel as km
from cbkernels.errors import DimensionError, InternalConsistencyError
from cbkernels.extension import restrict
from cbkernels.kernel import (
    Kernel,
    Kernel2x2,
    assemble_2x2,
    bimodule_check,
    conjugate_2x2,
    involution,
    is_cb_kernel_norm,
    is_cp_2x2,
    is_cp_kernel,
    leq,
    re_im,
    schur_op,
    shuffle_map,
)
from cbkernels.linmap import LinMap, adjoint_map, apply, cb_norm, is_cp_map

from helpers import rand_complex, rand_hermitian, seeds

E = algebra.matrix_unit
W1 = np.array([[1, 1], [1, -1]], dtype=complex)
W2 = np.array([[1, 1j], [-1j, -1]], dtype=complex)

sizes = st.tuples(st.integers(1, 3), st.integers(1, 2), st.integers(1, 2))


def identity_kernel(n, p):
    return Kernel.constant(km.default_labels(n), LinMap.identity(p))


def diagonal_identity(n, p):
    choi = np.zeros((n, n, p * p, p * p), dtype=complex)
    for i in range(n):
        choi[i, i] = LinMap.identity(p).choi
    return Kernel(km.default_labels(n), p, p, choi)


# -- construction -------------------------------------------------------------

def test_kernel_validation():
    with pytest.raises(ValueError):
        Kernel(("a", "a"), 1, 1, np.zeros((2, 2, 1, 1)))
    with pytest.raises(DimensionError):
        Kernel(("a",), 2, 1, np.zeros((1, 1, 1, 1)))
    with pytest.raises(DimensionError):
        Kernel.from_maps(["a", "b"], [[LinMap.identity(2), LinMap.identity(2)], [LinMap.identity(2), LinMap.zero(2, 3)]])


def test_value_access(rng):
    k = generators.random_general_kernel(rng, 3, 2, 1)
    assert k["x1", "x2"].distance(k.value(1, 2)) == 0
    with pytest.raises(KeyError):
        k["nope", "x0"]


def test_compressed_roundtrip(rng):
    k = generators.random_general_kernel(rng, 3, 2, 2)
    back = Kernel.from_compressed(k.labels, 2, 2, k.compressed())
    assert back.distance(k) == 0


def test_json_roundtrip(rng):
    k = generators.random_general_kernel(rng, 2, 1, 3)
    assert km.from_json(km.to_json(k)).distance(k) == 0


# -- involution and re/im ---------------------------------------------------

@given(seeds, sizes)
def test_involution_twice(seed, s):
    k = generators.random_general_kernel(seed, *s)
    assert involution(involution(k)).distance(k) == 0


@given(seeds, sizes)
def test_involution_entries(seed, s):
    k = generators.random_general_kernel(seed, *s)
    ks = involution(k)
    for i in range(k.n):
        for j in range(k.n):
            assert ks.value(i, j).distance(adjoint_map(k.value(j, i))) <= 1e-14


def test_involution_scalar(rng):
    m = rand_complex(rng, (4, 4))
    np.testing.assert_array_equal(involution(Kernel.scalar(m)).scalar_matrix(), m.conj().T)


@given(seeds, sizes)
def test_cp_kernel_fixed_by_involution(seed, s):
    k = generators.random_cp_kernel(seed, *s)
    assert is_cp_kernel(k)
    assert involution(k).distance(k) <= 1e-10


def test_re_im_examples(rng):
    h = generators.random_hermitian_kernel(rng, 3, 2, 2)
    re, im = re_im(h)
    assert re.distance(h) <= 1e-15 and im.norm() <= 1e-15
    c = generators.random_cp_kernel(rng, 3, 2, 2)
    re, im = re_im(1j * c)
    assert re.norm() <= 1e-15 and im.distance(c) <= 1e-15


@given(seeds, sizes)
def test_re_im_reconstructs(seed, s):
    k = generators.random_general_kernel(seed, *s)
    re, im = re_im(k)
    assert (re + 1j * im).distance(k) <= 1e-12
    assert km.is_hermitian_kernel(re, 1e-14) and km.is_hermitian_kernel(im, 1e-14)


# -- Schur product operator ---------------------------------------------------

def test_schur_op_single_point(rng):
    k = generators.random_general_kernel(rng, 1, 2, 3)
    assert schur_op(k).distance(k.value(0, 0)) == 0


def test_schur_op_scalar_is_schur_multiplier(rng):
    m = rand_complex(rng, (3, 3))
    s = schur_op(Kernel.scalar(m))
    a = rand_complex(rng, (3, 3))
    np.testing.assert_allclose(apply(s, a), m * a, atol=1e-14)


def test_schur_op_identity_entries():
    assert schur_op(identity_kernel(3, 2)).distance(LinMap.identity(6)) == 0


@given(seeds, sizes)
def test_schur_op_acts_entrywise(seed, s):
    n, p, q = s
    rng = np.random.default_rng(seed)
    k = generators.random_general_kernel(rng, n, p, q)
    a = rand_complex(rng, (n * p, n * p))
    out = apply(schur_op(k), a)
    for i in range(n):
        for j in range(n):
            expect = apply(k.value(i, j), a[i * p:(i + 1) * p, j * p:(j + 1) * p])
            np.testing.assert_allclose(out[i * q:(i + 1) * q, j * q:(j + 1) * q], expect, atol=1e-12)


# -- complete positivity -------------------------------------------------------

def test_is_cp_kernel_examples():
    assert is_cp_kernel(Kernel.zero(km.default_labels(3), 2, 2))
    assert is_cp_kernel(Kernel.scalar([[1, 1], [1, 1]]))
    assert not is_cp_kernel(Kernel.scalar([[1, 2], [2, 1]]))
    assert is_cp_kernel(identity_kernel(2, 2))


@given(seeds, sizes, st.booleans())
def test_cp_kernel_matches_full_schur_choi(seed, s, positive):
    k = generators.random_cp_kernel(seed, *s) if positive else generators.random_hermitian_kernel(seed, *s)
    assert is_cp_kernel(k) == is_cp_map(schur_op(k))


@given(seeds, sizes)
def test_definition_sums_positive_for_cp(seed, s):
    k = generators.random_cp_kernel(seed, *s)
    assert km.definition_check(k, samples=8, seed=seed) >= -1e-12


def test_definition_sum_matches_hand_computation(rng):
    k = generators.random_general_kernel(rng, 2, 2, 3)
    a = rand_complex(rng, (2, 2, 2))
    b = rand_complex(rng, (2, 3, 3))
    total = sum(
        b[i].conj().T @ apply(k.value(i, j), a[i].conj().T @ a[j]) @ b[j] for i in range(2) for j in range(2)
    )
    np.testing.assert_allclose(km.definition_sum(k, a, b), total, atol=1e-12)


def test_definition_check_catches_lying_choi_test(monkeypatch):
    k = Kernel.scalar([[1, 3], [3, 1]])
    monkeypatch.setattr(km, "_min_eig", lambda h, tol: 0.0)
    with pytest.raises(InternalConsistencyError):
        is_cp_kernel(k)


def test_non_hermitian_kernel_is_not_cp(rng):
    assert not is_cp_kernel(generators.random_general_kernel(rng, 2, 2, 2))


@given(seeds, sizes, st.floats(0, 10))
def test_cp_cone(seed, s, lam):
    rng = np.random.default_rng(seed)
    k1, k2 = generators.random_cp_pair(rng, *s)
    assert is_cp_kernel(k1 + lam * k2)


@given(seeds, st.integers(2, 4), st.integers(1, 2), st.integers(1, 2), st.data())
def test_restriction_keeps_cp(seed, n, p, q, data):
    k = generators.random_cp_kernel(seed, n, p, q)
    sub = data.draw(st.lists(st.sampled_from(k.labels), min_size=1, unique=True))
    assert is_cp_kernel(restrict(k, sub))


# -- order ----------------------------------------------------------------------

def test_leq_examples(rng):
    k = generators.random_general_kernel(rng, 3, 2, 2)
    assert leq(k, k)
    c = generators.random_cp_kernel(rng, 3, 2, 2)
    assert leq(Kernel.zero(c.labels, 2, 2), c)
    assert not leq(c + identity_kernel(3, 2), c)
    with pytest.raises(DimensionError):
        leq(c, Kernel.zero(c.labels, 1, 2))


@given(seeds, sizes)
def test_difference_bounded_by_sum(seed, s):
    k1, k2 = generators.random_cp_pair(seed, *s)
    assert leq(-(k1 + k2), k1 - k2)
    assert leq(k1 - k2, k1 + k2)


# -- cb norm ----------------------------------------------------------------------

def test_cb_kernel_norm_examples():
    assert is_cb_kernel_norm(Kernel.zero(km.default_labels(2), 2, 2)) == 0.0
    assert is_cb_kernel_norm(diagonal_identity(2, 2)) == pytest.approx(1.0, abs=1e-6)
    assert is_cb_kernel_norm(Kernel.scalar(np.eye(3))) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=6)
@given(seeds, st.integers(1, 2), st.integers(1, 2), st.integers(1, 2))
def test_cb_kernel_norm_matches_generic_cb_norm(seed, n, p, q):
    k = generators.random_general_kernel(seed, n, p, q)
    assert abs(is_cb_kernel_norm(k) - cb_norm(schur_op(k))) <= 1e-5 * max(1, cb_norm(schur_op(k)))


@settings(max_examples=5)
@given(seeds, st.integers(1, 2), st.integers(1, 2))
def test_cb_kernel_norm_of_cp_kernel(seed, p, q):
    k = generators.random_cp_kernel(seed, 3, p, q)
    expect = algebra.op_norm(apply(schur_op(k), np.eye(3 * p)))
    assert abs(is_cb_kernel_norm(k) - expect) <= 1e-5 * max(1, expect)


@settings(max_examples=5)
@given(seeds, st.integers(1, 2), st.integers(1, 2))
def test_cb_kernel_norm_compression(seed, p, q):
    k = generators.random_general_kernel(seed, 3, p, q)
    full = is_cb_kernel_norm(k)
    for sub in (["x0"], ["x0", "x2"], ["x1", "x2"]):
        assert is_cb_kernel_norm(restrict(k, sub)) <= full + 1e-6 * max(1, full)


# -- 2 x 2 kernels ----------------------------------------------------------------

def test_assemble_examples(rng):
    c = generators.random_cp_kernel(rng, 3, 2, 2)
    assert is_cp_2x2(assemble_2x2(c, c, c))
    z = Kernel.zero(c.labels, 2, 2)
    kk = assemble_2x2(z, z, z)
    assert all(b.norm() == 0 for row in kk.blocks for b in row)
    k = generators.random_general_kernel(rng, 3, 2, 2)
    trace_kernel = Kernel(c.labels, 2, 2, np.einsum("ij,ab->ijab", np.eye(3), np.eye(4)))
    big = 1e3 * trace_kernel
    assert is_cp_2x2(assemble_2x2(big, k, big))
    with pytest.raises(DimensionError):
        assemble_2x2(c, Kernel.zero(c.labels, 1, 2), c)


def test_is_cp_2x2_examples(rng):
    c = generators.random_cp_kernel(rng, 2, 2, 2)
    z = Kernel.zero(c.labels, 2, 2)
    assert is_cp_2x2(Kernel2x2(((c, z), (z, c))))
    assert not is_cp_2x2(assemble_2x2(z, c, z))


@given(seeds, sizes)
def test_two_readings_agree_with_full_schur_operator(seed, s):
    rng = np.random.default_rng(seed)
    n, p, q = s
    l = generators.random_cp_kernel(rng, n, p, q)
    k = generators.random_general_kernel(rng, n, p, q)
    kk = assemble_2x2(l, k, l)
    verdict = is_cp_2x2(kk)
    big = schur_op(kk.phi_kernel())
    assert verdict == is_cp_map(big) == is_cp_map(shuffle_map(big, n, 2))
    assert bimodule_check(big, n)


def test_psi_kernel_split_roundtrip(rng):
    big = generators.random_cp_kernel(rng, 2, 2, 4)
    kk = Kernel2x2.from_psi_kernel(big)
    a = rand_complex(rng, (2, 2))
    out = apply(big.value(0, 1), a)
    np.testing.assert_allclose(out[:2, 2:], apply(kk.blocks[0][1].value(0, 1), a), atol=1e-13)
    assert is_cp_2x2(kk)


def test_conjugate_identity(rng):
    kk = assemble_2x2(*(generators.random_general_kernel(rng, 2, 1, 2) for _ in range(3)))
    out = conjugate_2x2(kk, np.eye(2))
    for a in range(2):
        for b in range(2):
            assert out.blocks[a][b].distance(kk.blocks[a][b]) == 0


def test_conjugate_first_witness(rng):
    l1, k, l2 = (generators.random_general_kernel(rng, 2, 2, 2) for _ in range(3))
    out = conjugate_2x2(assemble_2x2(l1, k, l2), W1)
    assert out.blocks[0][0].distance(l1 + l2 + k + involution(k)) <= 1e-14


def test_conjugation_witnesses_give_order_bounds(rng):
    k = generators.random_hermitian_kernel(rng, 2, 2, 2)
    from cbkernels.decomp import offdiagonal_complete

    l1, l2, _ = offdiagonal_complete(k)
    kk = assemble_2x2(l1, k, l2)
    for w in (W1, W2):
        c = conjugate_2x2(kk, w)
        assert is_cp_kernel(c.blocks[0][0], 1e-7) and is_cp_kernel(c.blocks[1][1], 1e-7)
    half = 0.5 * (l1 + l2)
    assert leq(-half, (-0.5j) * (k - involution(k)), 1e-7)


# -- bimodule check ---------------------------------------------------------------

def _bimodule_oracle(phi, n):
    pp = phi.p // n
    for s in range(phi.p):
        for t in range(phi.p):
            a = E(phi.p, s, t)
            for i in range(n):
                for j in range(n):
                    mask_out = np.kron(E(n, i, j), np.ones((phi.q // n, phi.q // n)))
                    mask_in = np.kron(E(n, i, j), np.ones((pp, pp)))
                    if not np.allclose(mask_out * apply(phi, a), apply(phi, mask_in * a)):
                        return False
    return True


def test_bimodule_examples(rng):
    k = generators.random_general_kernel(rng, 3, 2, 1)
    assert bimodule_check(schur_op(k), 3)
    assert not bimodule_check(LinMap.transpose(2), 2)
    assert bimodule_check(generators.random_map(rng, 3, 2), 1)
    with pytest.raises(DimensionError):
        bimodule_check(LinMap.identity(3), 2)


@given(seeds, st.integers(1, 3), st.booleans())
def test_bimodule_matches_oracle(seed, n, patterned):
    rng = np.random.default_rng(seed)
    if patterned:
        phi = schur_op(generators.random_general_kernel(rng, n, 1, 2))
    else:
        phi = generators.random_map(rng, n, 2 * n)
    assert bimodule_check(phi, n) == _bimodule_oracle(phi, n)
