"""Property suites that check the kernel theorems on random instances.

Each suite draws its instances from ``numpy.random.default_rng(seed)``
and records, per named property, how many instances passed and the
worst residual seen.  Failures are data: exceptions raised while
processing an instance are caught and recorded against the property
that was being checked.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from . import algebra, generators
from .decomp import (
    combine_four,
    decomp_to_difference,
    difference_kolmogorov,
    four_cp,
    kolmogorov_positive,
    offdiagonal_complete,
    reconstruct,
)
from .errors import InternalConsistencyError
from .extension import (
    LocalPair,
    PairCache,
    SubsetChain,
    build_L0,
    half_sum,
    hereditary_defect,
    local_solution_report,
    pair_kernel,
    radius_profile,
    restrict,
)
from .kernel import (
    Kernel,
    Kernel2x2,
    _min_eig,
    assemble_2x2,
    block_map,
    conjugate_2x2,
    involution,
    is_cp_2x2,
    is_cp_kernel,
    leq,
    schur_op,
    shuffle_map,
)
from .linmap import LinMap, adjoint_map, cb_norm, cb_norm_lower_bound, is_cp_map

log = logging.getLogger(__name__)

SCHEMA = "cbkernels.verify-theorems"
SCHEMA_VERSION = 1


@dataclass
class PropertyStats:
    passed: int = 0
    failed: int = 0
    worst_residual: Optional[float] = None

    def to_json(self):
        return {"passed": self.passed, "failed": self.failed, "worst_residual": self.worst_residual}


@dataclass
class SuiteResult:
    name: str
    trials: int = 0
    properties: Dict[str, PropertyStats] = field(default_factory=dict)
    failures: List[dict] = field(default_factory=list)
    notes: Dict[str, object] = field(default_factory=dict)

    def record(self, prop, ok, trial, residual=None, detail=None):
        stats = self.properties.setdefault(prop, PropertyStats())
        if ok:
            stats.passed += 1
        else:
            stats.failed += 1
            entry = {"trial": trial, "property": prop}
            if detail is not None:
                entry["detail"] = detail
            self.failures.append(entry)
        if residual is not None and np.isfinite(residual):
            residual = float(residual)
            if stats.worst_residual is None or residual > stats.worst_residual:
                stats.worst_residual = residual
        return ok

    def error(self, prop, trial, exc):
        log.debug("trial %d of %s raised %r", trial, self.name, exc)
        return self.record(prop, False, trial, detail=f"{type(exc).__name__}: {exc}")

    @property
    def passed(self):
        return sum(s.passed for s in self.properties.values())

    @property
    def failed(self):
        return sum(s.failed for s in self.properties.values())

    @property
    def ok(self):
        return self.failed == 0

    def property_ok(self, prop):
        stats = self.properties.get(prop)
        return stats is None or stats.failed == 0

    def to_json(self):
        return {
            "trials": self.trials,
            "passed": self.passed,
            "failed": self.failed,
            "ok": self.ok,
            "properties": {k: v.to_json() for k, v in sorted(self.properties.items())},
            "failures": self.failures,
            "notes": self.notes,
        }


def _sizes(rng, n_max, p_max, q_max, block_max=None):
    while True:
        n = int(rng.integers(1, n_max + 1))
        p = int(rng.integers(1, p_max + 1))
        q = int(rng.integers(1, q_max + 1))
        if block_max is None or n * p * q <= block_max:
            return n, p, q


def _corrupt(k):
    """The corrupted instance used to exercise the harness: negated Choi data."""
    return -k


# -- individual suites ------------------------------------------------------


def positive_roundtrip(trials=100, seed=0, n=4, p=3, q=3, corrupt=False):
    """reconstruct(kolmogorov_positive(k)) = k for random CP kernels."""
    res = SuiteResult("positive_roundtrip", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q)
        k = generators.random_cp_kernel(rng, nn, pp, qq)
        if corrupt and t == 0:
            k = _corrupt(k)
        try:
            resid = reconstruct(kolmogorov_positive(k)).distance(k)
            res.record("roundtrip", resid <= 1e-8, t, resid)
        except Exception as exc:  # noqa: BLE001 - failures are data
            res.error("roundtrip", t, exc)
    return res


def equiv_cond(trials=50, seed=0, n=4, p=3, q=3, corrupt=False):
    """Difference of CP kernels: order bounds, J = I (+) -I, and the way back."""
    res = SuiteResult("equiv_cond", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q)
        k1, k2 = generators.random_cp_pair(rng, nn, pp, qq)
        if corrupt and t == 0:
            k1 = _corrupt(k1)
        k = k1 - k2
        s = k1 + k2
        try:
            res.record("order_bounds", leq(-s, k) and leq(k, s), t)
        except Exception as exc:  # noqa: BLE001
            res.error("order_bounds", t, exc)
        try:
            dec = difference_kolmogorov(k1, k2)
        except Exception as exc:  # noqa: BLE001
            res.error("difference_roundtrip", t, exc)
            res.error("J_symmetry", t, exc)
            continue
        try:
            a, b = decomp_to_difference(dec)
            resid = max((a - b).distance(k), reconstruct(dec).distance(k))
            ok = resid <= 1e-8 and is_cp_kernel(a) and is_cp_kernel(b)
            res.record("difference_roundtrip", ok, t, resid)
        except Exception as exc:  # noqa: BLE001
            res.error("difference_roundtrip", t, exc)
        j = dec.J
        resid = max(
            float(np.max(np.abs(j - j.conj().T))) if j.size else 0.0,
            float(np.max(np.abs(j @ j - np.eye(dec.d)))) if j.size else 0.0,
        )
        res.record("J_symmetry", resid <= 1e-10, t, resid)
    return res


def hermitian_selfadjoint(trials=50, seed=0, n=4, p=3, q=3, perturbation=1e-3):
    """Reconstruct is hermitian exactly when J is self-adjoint."""
    res = SuiteResult("hermitian_selfadjoint", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q)
        dec = generators.random_decomp(rng, nn, pp, qq, hermitian=True)
        if t % 2:
            m = dec.m
            a = generators.complex_normal(rng, (m, m))
            skew = 0.5 * (a - a.conj().T)
            jp = dec.J.reshape(pp, m, pp, m)[0, :, 0, :] + perturbation * skew
            dec = type(dec)(dec.labels, pp, qq, m, np.kron(np.eye(pp), jp), dec.iota)
        rec = reconstruct(dec)
        j_sa = float(np.linalg.norm(dec.J - dec.J.conj().T, 2)) <= 1e-9
        scale = max(1.0, float(np.max(np.abs(dec.iota))) ** 2)
        herm_res = involution(rec).distance(rec)
        herm = herm_res <= 1e-9 * scale
        res.record("biconditional", j_sa == herm, t, herm_res if j_sa else None)
    return res


def kolm_characterisation(trials=30, seed=0, n=4, p=3, q=3, block_max=12, corrupt=False, eps=1e-7):
    """Off-diagonal completion of hermitian kernels and the two conjugation witnesses."""
    res = SuiteResult("kolm_characterisation", trials)
    rng = np.random.default_rng(seed)
    w1 = np.array([[1, 1], [1, -1]], dtype=complex)
    w2 = np.array([[1, 1j], [-1j, -1]], dtype=complex)
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q, block_max)
        k = generators.random_hermitian_kernel(rng, nn, pp, qq)
        try:
            l1, l2, _ = offdiagonal_complete(k, eps=eps)
        except Exception as exc:  # noqa: BLE001
            for prop in ("completion", "assembled_cp", "witness_1", "witness_2", "order_bounds"):
                res.error(prop, t, exc)
            continue
        res.record("completion", True, t)
        if corrupt and t == 0:
            l1, l2 = _corrupt(l1), _corrupt(l2)
        kk = assemble_2x2(l1, k, l2)
        try:
            res.record("assembled_cp", is_cp_2x2(kk, tol=1e-7), t)
        except Exception as exc:  # noqa: BLE001
            res.error("assembled_cp", t, exc)
        for name, w in (("witness_1", w1), ("witness_2", w2)):
            c = conjugate_2x2(kk, w)
            ok = is_cp_kernel(c.blocks[0][0], 1e-7) and is_cp_kernel(c.blocks[1][1], 1e-7)
            res.record(name, ok, t)
        half = 0.5 * (l1 + l2)
        ks = involution(k)
        bounds = [
            leq(-half, 0.5 * (k + ks), 1e-7),
            leq(0.5 * (k + ks), half, 1e-7),
            leq(-half, (-0.5j) * (k - ks), 1e-7),
            leq((-0.5j) * (k - ks), half, 1e-7),
        ]
        res.record("order_bounds", all(bounds), t)
    return res


def _random_2x2(rng, n, p, q, positive):
    """Random 2x2 kernel matrix with min eigenvalue clear of zero by 1e-6."""
    while True:
        big = generators.random_cp_kernel(rng, n, p, 2 * q)
        big = big + float(rng.uniform(0.01, 0.1)) * _identity_kernel(big.labels, p, 2 * q)
        kk = Kernel2x2.from_psi_kernel(big)
        if not positive:
            # pull the diagonal blocks down so positivity fails
            shift = float(rng.uniform(0.2, 1.0))
            d11 = kk.blocks[0][0] - shift * kk.blocks[0][0].norm() * _identity_kernel(kk.labels, p, q)
            kk = Kernel2x2(((d11, kk.blocks[0][1]), (kk.blocks[1][0], kk.blocks[1][1])))
        lam = _min_eig(kk.psi_choi(), 1e-9)
        if lam is not None and abs(lam) > 1e-6:
            return kk


def _identity_kernel(labels, p, q):
    """Diagonal kernel with k(x, x)[a] = tr(a) I_q."""
    n = len(labels)
    choi = np.zeros((n, n, p * q, p * q), dtype=complex)
    for i in range(n):
        choi[i, i] = np.eye(p * q)
    return Kernel(labels, p, q, choi)


def haagerup(trials=50, seed=0, n=4, p=3, q=3):
    """The two readings of a 2x2 kernel matrix give the same CP verdict."""
    res = SuiteResult("haagerup", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q)
        kk = _random_2x2(rng, nn, pp, qq, positive=(t % 2 == 0))
        lam_psi = _min_eig(kk.psi_choi(), 1e-7)
        lam_phi = _min_eig(kk.phi_choi(), 1e-7)
        psi = lam_psi is not None and lam_psi >= -1e-7
        phi = lam_phi is not None and lam_phi >= -1e-7
        full = is_cp_map(schur_op(kk.phi_kernel()), 1e-7)
        res.record("agreement", psi == phi == full, t, abs(lam_psi - lam_phi))
    return res


def cb_consistency(trials=12, seed=0, n=3, p=2, q=2, eps=1e-7, lower_trials=200):
    """Completion value, generic cb norm and the brute-force lower bound agree."""
    res = SuiteResult("cb_consistency", trials)
    rng = np.random.default_rng(seed)
    saturated = 0
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q)
        k = generators.random_general_kernel(rng, nn, pp, qq)
        try:
            _, _, tval = offdiagonal_complete(k, eps=eps)
            sop = schur_op(k)
            direct = cb_norm(sop, eps=eps)
            lower = cb_norm_lower_bound(sop, qq, trials=lower_trials, seed=t)
        except Exception as exc:  # noqa: BLE001
            for prop in ("completion_vs_cb_norm", "lower_bound_valid"):
                res.error(prop, t, exc)
            continue
        res.record("completion_vs_cb_norm", abs(tval - direct) <= 1e-5, t, abs(tval - direct))
        res.record("lower_bound_valid", lower <= tval + 1e-5, t, max(0.0, lower - tval))
        saturated += lower >= tval - 2e-3
    if trials:
        frac = saturated / trials
        res.notes["saturation_fraction"] = frac
        res.record("lower_bound_saturation", frac >= 0.9, -1, 1.0 - frac)
    if trials:
        val = cb_norm(LinMap.transpose(2), eps=eps)
        res.record("transpose_known_value", abs(val - 2.0) <= 1e-4, -1, abs(val - 2.0))
    return res


def four_cp_suite(trials=50, seed=0, n=4, p=3, q=3, block_max=12, corrupt=False, eps=1e-7):
    """Every kernel is a combination of four CP kernels."""
    res = SuiteResult("four_cp", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q, block_max)
        k = generators.random_general_kernel(rng, nn, pp, qq)
        try:
            parts = list(four_cp(k, eps=eps))
        except Exception as exc:  # noqa: BLE001
            res.error("parts_cp", t, exc)
            res.error("reconstruction", t, exc)
            continue
        if corrupt and t == 0:
            parts[0] = _corrupt(parts[0])
        res.record("parts_cp", all(is_cp_kernel(c) for c in parts), t)
        resid = combine_four(*parts).distance(k) if not (corrupt and t == 0) else np.inf
        res.record("reconstruction", resid <= 1e-6, t, resid)
    return res


def _random_chain(rng, labels, length):
    order = list(rng.permutation(len(labels)))
    sizes = sorted(rng.choice(np.arange(1, len(labels)), size=length - 1, replace=False)) + [len(labels)]
    chain = [tuple(labels[i] for i in sorted(order[:s])) for s in sizes]
    return SubsetChain(labels, tuple(chain))


def extension_suite(trials=3, seed=0, size=5, p=2, q=2, chain_length=4, eps=1e-7):
    """Pair completions, L0, radii and local solutions along random chains."""
    res = SuiteResult("extension", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        pp, qq = int(rng.integers(1, p + 1)), int(rng.integers(1, q + 1))
        k = generators.random_general_kernel(rng, size, pp, qq)
        chain = _random_chain(rng, k.labels, chain_length)

        def piece(key):
            x = sorted(key)
            return pair_kernel(k, x[0], x[-1])

        resid = max(half_sum(piece, sub).distance(restrict(k, sub)) for sub in chain.chain)
        res.record("half_sum", resid <= 1e-12, t, resid)
        cache = PairCache(k, eps)
        try:
            defect = hereditary_defect(k, chain, eps, cache)
            res.record("hereditary", defect <= 1e-12, t, defect)
            top = build_L0(k, chain.top, eps, cache)
            dominated = all(
                leq(build_L0(k, sub, eps, cache), restrict(top, sub), 1e-7) for sub in chain.chain
            )
            res.record("restriction_dominates", dominated, t)
            rows = local_solution_report(LocalPair(top, top), k, chain, eps, cache)
            bad = [r["level"] for r in rows if not r["ok"]]
            res.record("local_solution", not bad, t, detail=None if not bad else f"levels {bad} fail")
            res.record("local_solution_top", rows[-1]["ok"], t)
            radii, drops = radius_profile(k, chain, eps, cache)
            res.record("radius_monotone", not drops, t, detail=None if not drops else f"drops at {drops}")
        except Exception as exc:  # noqa: BLE001
            res.error("extension", t, exc)
    return res


def scalar_suite(trials=200, seed=0, n=6):
    """p = q = 1: CP test equals a direct PSD test; Kolmogorov matches Cholesky."""
    res = SuiteResult("scalar", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nn = int(rng.integers(1, n + 1))
        if t % 2:
            h = generators.random_hermitian_matrix(rng, nn)
        else:
            a = generators.complex_normal(rng, (nn, nn))
            h = a @ a.conj().T
        h = 0.5 * (h + h.conj().T)
        k = Kernel.scalar(h)
        oracle = bool(np.linalg.eigvalsh(h)[0] >= -1e-9)
        res.record("cp_verdict", is_cp_kernel(k, 1e-9) == oracle, t)
        if t % 2 == 0:
            dec = kolmogorov_positive(k)
            vecs = dec.iota[:, :, 0]  # row i is iota(x_i) as an m-vector
            gram = vecs.conj() @ vecs.T
            chol = np.linalg.cholesky(h)
            f = chol.conj().T  # column j is f_j, with f_i* f_j = h_ij
            oracle_gram = f.conj().T @ f
            resid = max(float(np.max(np.abs(gram - oracle_gram))), float(np.max(np.abs(gram - h))))
            res.record("cholesky_gram", resid <= 1e-10 * max(1.0, float(np.max(np.abs(h)))), t, resid)
    return res


def _statement_forms(l1, k, l2, tol):
    kk = assemble_2x2(l1, k, l2)
    s1 = is_cp_2x2(kk, tol)
    big = schur_op(kk.phi_kernel())
    s2 = is_cp_map(big, tol)
    s3 = is_cp_map(shuffle_map(big, k.n, 2), tol)
    return s1, s2, s3, kk


def statement_chain(trials=30, seed=0, n=3, p=2, q=2, eps=1e-7, tol=1e-7):
    """Statements (i)-(iii) agree; (i) gives the per-subset statements (iv)-(vi)."""
    res = SuiteResult("statement_chain", trials)
    rng = np.random.default_rng(seed)
    for t in range(trials):
        nn, pp, qq = _sizes(rng, n, p, q)
        k = generators.random_general_kernel(rng, nn, pp, qq)
        try:
            l1, l2, _ = offdiagonal_complete(k, eps=eps)
        except Exception as exc:  # noqa: BLE001
            res.error("forms_agree", t, exc)
            continue
        if t % 2:
            # shrink the completion so that the statements fail
            l1, l2 = 0.5 * l1, 0.5 * l2
        scale = max(1.0, l1.norm(), l2.norm(), k.norm())
        try:
            s1, s2, s3, kk = _statement_forms(l1, k, l2, tol * scale)
        except InternalConsistencyError as exc:
            res.error("forms_agree", t, exc)
            continue
        res.record("forms_agree", s1 == s2 == s3, t)
        lam = _min_eig(kk.phi_choi(), tol)
        shuffled = _min_eig(algebra.canonical_shuffle(kk.phi_choi(), nn, 2, pp * qq), tol)
        same = (lam >= -tol * scale) == (shuffled >= -tol * scale)
        res.record("shuffle_preserves_cp", same, t, abs(lam - shuffled))
        if not s1:
            continue
        ok = True
        for size in range(1, nn + 1):
            for sub in itertools.combinations(k.labels, size):
                g1, gk, g2 = restrict(l1, sub), restrict(k, sub), restrict(l2, sub)
                iv_ok = is_cp_map(schur_op(assemble_2x2(g1, gk, g2).phi_kernel()), tol * scale)
                big = schur_op(assemble_2x2(g1, gk, g2).phi_kernel())
                v_ok = is_cp_map(shuffle_map(big, len(sub), 2), tol * scale)
                sk = schur_op(gk)
                vi_map = block_map([[schur_op(g1), sk], [adjoint_map(sk), schur_op(g2)]])
                vi_ok = is_cp_map(vi_map, tol * scale)
                ok = ok and iv_ok and v_ok and vi_ok
        res.record("implies_subset_statements", ok, t)
    return res


SUITES = {
    "positive_roundtrip": positive_roundtrip,
    "equiv_cond": equiv_cond,
    "hermitian_selfadjoint": hermitian_selfadjoint,
    "kolm_characterisation": kolm_characterisation,
    "haagerup": haagerup,
    "cb_consistency": cb_consistency,
    "four_cp": four_cp_suite,
    "extension": extension_suite,
    "scalar": scalar_suite,
    "statement_chain": statement_chain,
}

CORRUPTIBLE = ("positive_roundtrip", "equiv_cond", "kolm_characterisation", "four_cp")


def verify_theorems(trials=None, seed=0, n=None, p=None, q=None, eps=1e-7, suites=None, corrupt=()):
    """Run the suites and return a JSON-ready report.

    ``trials`` overrides every suite's default instance count; ``n``,
    ``p`` and ``q`` override the maximal sizes of the suites that take
    them.  ``corrupt`` names suites whose first instance is replaced by
    a corrupted one.
    """
    names = list(SUITES) if suites is None else list(suites)
    unknown = [s for s in names if s not in SUITES] + [s for s in corrupt if s not in CORRUPTIBLE]
    if unknown:
        raise ValueError(f"unknown or non-corruptible suites: {unknown}")
    report = {"schema": SCHEMA, "schema_version": SCHEMA_VERSION, "config": {
        "trials": trials, "seed": seed, "n": n, "p": p, "q": q, "eps": eps, "suites": names,
        "corrupt": sorted(corrupt)}, "suites": {}}
    for i, name in enumerate(names):
        fn = SUITES[name]
        kwargs = {"seed": seed + i}
        if trials is not None:
            kwargs["trials"] = trials
        params = fn.__code__.co_varnames[: fn.__code__.co_argcount]
        for key, val in (("n", n), ("p", p), ("q", q)):
            if val is not None and key in params:
                kwargs[key] = val
        if "size" in params and n is not None:
            kwargs["size"] = max(n, 2)
        if "eps" in params:
            kwargs["eps"] = eps
        if name in corrupt:
            kwargs["corrupt"] = True
        log.info("running suite %s", name)
        result = fn(**kwargs)
        report["suites"][name] = result.to_json()
    report["ok"] = all(s["ok"] for s in report["suites"].values())
    return report
