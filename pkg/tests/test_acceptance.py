"""Acceptance criteria 1-10, each run at its full instance count.

Every test appends one ``criterion N: PASS|FAIL ...`` line, printed in
the terminal summary.  Run just this file with

    pytest tests/test_acceptance.py -v
"""

import time

from cbkernels import suites


def _line(number, title, res, elapsed):
    status = "PASS" if res.ok else "FAIL"
    props = ", ".join(
        f"{name} {s.passed}/{s.passed + s.failed}" for name, s in sorted(res.properties.items())
    )
    notes = "".join(f"; {k} {v:.2f}" for k, v in sorted(res.notes.items()))
    return f"criterion {number}: {status}  {title} ({props}{notes}; {elapsed:.1f}s)"


def _run(acceptance_log, number, title, fn, **kwargs):
    start = time.perf_counter()
    res = fn(**kwargs)
    line = _line(number, title, res, time.perf_counter() - start)
    acceptance_log.append(line)
    print(line)
    return res


def _failures(res):
    return res.failures[:5]


def test_criterion_1_positive_roundtrip(acceptance_log):
    res = _run(acceptance_log, 1, "positive Kolmogorov round trip", suites.positive_roundtrip, trials=100, seed=1)
    assert res.trials == 100
    assert res.ok, _failures(res)


def test_criterion_2_difference_of_cp(acceptance_log):
    res = _run(acceptance_log, 2, "CP-difference equivalences", suites.equiv_cond, trials=50, seed=2)
    assert set(res.properties) == {"order_bounds", "difference_roundtrip", "J_symmetry"}
    assert res.ok, _failures(res)


def test_criterion_3_hermitian_iff_selfadjoint(acceptance_log):
    res = _run(acceptance_log, 3, "hermitian iff J self-adjoint", suites.hermitian_selfadjoint, trials=50, seed=3)
    assert res.ok, _failures(res)


def test_criterion_4_offdiagonal_characterisation(acceptance_log):
    res = _run(
        acceptance_log, 4, "off-diagonal completion and witnesses", suites.kolm_characterisation, trials=30, seed=4
    )
    assert res.ok, _failures(res)


def test_criterion_5_two_readings_agree(acceptance_log):
    res = _run(acceptance_log, 5, "2x2 kernel matrix readings agree", suites.haagerup, trials=50, seed=5)
    assert res.ok, _failures(res)


def test_criterion_6_cb_norm_consistency(acceptance_log):
    res = _run(
        acceptance_log, 6, "cb norm consistency", suites.cb_consistency, trials=12, seed=6, n=3, p=2, q=2,
        lower_trials=200,
    )
    assert "transpose_known_value" in res.properties
    assert res.ok, _failures(res)


def test_criterion_7_four_cp(acceptance_log):
    res = _run(acceptance_log, 7, "four-CP decomposition", suites.four_cp_suite, trials=50, seed=7)
    assert res.ok, _failures(res)


def test_criterion_8_finite_subset_machinery(acceptance_log):
    # Includes the claims that L0 is hereditary and that (L0_F, L0_F) passes
    # the local-solution test at every chain level.  See the README.
    res = _run(
        acceptance_log, 8, "finite-subset extension machinery", suites.extension_suite, trials=3, seed=8, size=5,
        chain_length=4,
    )
    for prop in ("half_sum", "hereditary", "local_solution", "radius_monotone"):
        assert prop in res.properties
    assert res.ok, _failures(res)


def test_criterion_9_scalar_case(acceptance_log):
    res = _run(acceptance_log, 9, "scalar degeneration", suites.scalar_suite, trials=200, seed=9)
    assert res.properties["cp_verdict"].passed == 200
    assert res.ok, _failures(res)


def test_criterion_10_statement_chain(acceptance_log):
    res = _run(acceptance_log, 10, "statement equivalence chain", suites.statement_chain, trials=30, seed=10)
    assert res.ok, _failures(res)
