"""Dense primal-dual interior-point solver for Hermitian SDPs.

Problems are stated in primal standard form over complex Hermitian PSD
blocks,

    minimize    Re <C, X>
    subject to  Re f_i(X) = b_i,   X = diag(X_1, ..., X_B) >= 0,

where every f_i is a real-linear functional given by a list of
``(block, row, col, coef)`` terms meaning ``coef * X_block[row, col]``.
Internally each Hermitian block is replaced by its real symmetric
embedding [[Re X, -Im X], [Im X, Re X]] and a Nesterov-Todd scaled
path-following method runs on the real problem.  Every functional is
lifted so that it is invariant under the complex structure, hence the
central path stays in the embedded subspace and the complex solution is
read back by averaging the two copies.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .algebra import _check_hermitian, adjoint
from .errors import DeadlineExceeded, DimensionError

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"

STEP_FRACTION = 0.98


def embed_complex(h, tol=1e-9):
    """Real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of Hermitian H."""
    h = _check_hermitian(h, tol)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def _unembed(y):
    k = y.shape[0] // 2
    re = 0.5 * (y[:k, :k] + y[k:, k:])
    im = 0.5 * (y[k:, :k] - y[:k, k:])
    x = re + 1j * im
    return 0.5 * (x + adjoint(x))


class ProblemBuilder:
    """Incremental construction of an :class:`SdpProblem`."""

    def __init__(self):
        self._blocks = []
        self._names = {}
        self._con, self._blk, self._row, self._col, self._coef = [], [], [], [], []
        self._targets = []
        self._obj = []

    def add_block(self, name, size):
        if name in self._names:
            raise ValueError(f"duplicate block name {name!r}")
        self._names[name] = len(self._blocks)
        self._blocks.append((name, int(size)))
        return self._names[name]

    def _index(self, block):
        return self._names[block] if isinstance(block, str) else int(block)

    def add_equality(self, terms, target):
        """Add the real constraint Re(sum coef * X_b[r, c]) = target."""
        i = len(self._targets)
        for block, r, c, coef in terms:
            self._con.append(i)
            self._blk.append(self._index(block))
            self._row.append(r)
            self._col.append(c)
            self._coef.append(coef)
        self._targets.append(float(np.real(target)))

    def fix_entry(self, block, r, c, value):
        """Pin the complex entry X_b[r, c] (two real constraints off the diagonal)."""
        self.add_equality([(block, r, c, 1.0)], np.real(value))
        if r != c:
            self.add_equality([(block, r, c, -1j)], np.imag(value))

    def add_equalities(self, con, block, row, col, coef, targets):
        """Vectorised form of :meth:`add_equality` for many constraints."""
        base = len(self._targets)
        con = np.asarray(con) + base
        n = len(con)
        self._con.extend(con.tolist())
        self._blk.extend(np.broadcast_to(np.asarray(block), (n,)).tolist())
        self._row.extend(np.asarray(row).tolist())
        self._col.extend(np.asarray(col).tolist())
        self._coef.extend(np.asarray(coef, dtype=complex).tolist())
        self._targets.extend(np.real(np.asarray(targets, dtype=complex)).tolist())

    def set_objective(self, terms):
        self._obj = [(self._index(b), r, c, coef) for b, r, c, coef in terms]

    def build(self):
        obj = self._obj
        return SdpProblem(
            blocks=tuple(self._blocks),
            eq_con=np.array(self._con, dtype=np.int64),
            eq_block=np.array(self._blk, dtype=np.int64),
            eq_row=np.array(self._row, dtype=np.int64),
            eq_col=np.array(self._col, dtype=np.int64),
            eq_coef=np.array(self._coef, dtype=np.complex128),
            targets=np.array(self._targets, dtype=float),
            obj_block=np.array([t[0] for t in obj], dtype=np.int64),
            obj_row=np.array([t[1] for t in obj], dtype=np.int64),
            obj_col=np.array([t[2] for t in obj], dtype=np.int64),
            obj_coef=np.array([t[3] for t in obj], dtype=np.complex128),
        )


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Structured LMI: Hermitian PSD blocks, real equalities, linear objective.

    Equality ``i`` is the sum over terms with ``eq_con == i`` of
    ``Re(eq_coef * X[eq_block][eq_row, eq_col])`` and must equal
    ``targets[i]``.  The objective is the analogous sum over ``obj_*``.
    """

    blocks: tuple
    eq_con: np.ndarray
    eq_block: np.ndarray
    eq_row: np.ndarray
    eq_col: np.ndarray
    eq_coef: np.ndarray
    targets: np.ndarray
    obj_block: np.ndarray
    obj_row: np.ndarray
    obj_col: np.ndarray
    obj_coef: np.ndarray

    def __post_init__(self):
        sizes = np.array([s for _, s in self.blocks] or [0])
        for blk, row, col in (
            (self.eq_block, self.eq_row, self.eq_col),
            (self.obj_block, self.obj_row, self.obj_col),
        ):
            if len(blk) == 0:
                continue
            if blk.min() < 0 or blk.max() >= len(self.blocks):
                raise DimensionError("term refers to an unknown block")
            lim = sizes[blk]
            if (row < 0).any() or (col < 0).any() or (row >= lim).any() or (col >= lim).any():
                raise DimensionError("term index outside its block")
        if len(self.eq_con) and self.eq_con.max() >= len(self.targets):
            raise DimensionError("term refers to an unknown equality")

    @property
    def n_equalities(self):
        return len(self.targets)

    @property
    def equalities(self):
        """List of ``(terms, target)`` pairs, for inspection."""
        out = [([], t) for t in self.targets]
        for i, b, r, c, a in zip(self.eq_con, self.eq_block, self.eq_row, self.eq_col, self.eq_coef):
            out[i][0].append((self.blocks[b][0], int(r), int(c), complex(a)))
        return out

    def evaluate(self, blocks):
        """Equality residuals f(X) - b and objective value at complex blocks."""
        vals = np.zeros(self.n_equalities)
        for b, x in enumerate(blocks):
            sel = self.eq_block == b
            np.add.at(
                vals,
                self.eq_con[sel],
                np.real(self.eq_coef[sel] * x[self.eq_row[sel], self.eq_col[sel]]),
            )
        obj = 0.0
        for b, x in enumerate(blocks):
            sel = self.obj_block == b
            obj += float(np.sum(np.real(self.obj_coef[sel] * x[self.obj_row[sel], self.obj_col[sel]])))
        return vals - self.targets, obj


@dataclass
class SdpSolution:
    blocks: list
    objective_value: float
    status: str
    gap: float
    dual_objective: float = float("nan")
    iterations: int = 0
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    y: np.ndarray = field(default=None, repr=False)
    dual_blocks: list = field(default=None, repr=False)

    def block(self, problem, name):
        for i, (bname, _) in enumerate(problem.blocks):
            if bname == name:
                return self.blocks[i]
        raise KeyError(name)


def _lift(con, row, col, coef, k):
    """Real triplets for Re(coef * X[r, c]) on the embedding of a size-k block."""
    a, b = 0.5 * coef.real, 0.5 * coef.imag
    rows = np.concatenate([row, row + k, row + k, row])
    cols = np.concatenate([col, col + k, col, col + k])
    vals = np.concatenate([a, a, -b, b])
    cons = np.concatenate([con, con, con, con])
    keep = vals != 0.0
    return cons[keep], rows[keep], cols[keep], vals[keep]


class _RealProblem:
    """The embedded real problem, with scaling applied."""

    def __init__(self, prob):
        self.sizes = [2 * s for _, s in prob.blocks]
        self.m = prob.n_equalities
        self.trip = []
        for b, (_, k) in enumerate(prob.blocks):
            sel = prob.eq_block == b
            self.trip.append(_lift(prob.eq_con[sel], prob.eq_row[sel], prob.eq_col[sel], prob.eq_coef[sel], k))
        self.c = []
        for b, (_, k) in enumerate(prob.blocks):
            sel = prob.obj_block == b
            cons = np.zeros(int(sel.sum()), dtype=np.int64)
            _, r, c, v = _lift(cons, prob.obj_row[sel], prob.obj_col[sel], prob.obj_coef[sel], k)
            mat = np.zeros((2 * k, 2 * k))
            np.add.at(mat, (r, c), v)
            self.c.append(0.5 * (mat + mat.T))
        self.b = prob.targets.astype(float).copy()
        norms = np.zeros(self.m)
        for cons, r, c, v in self.trip:
            np.add.at(norms, cons, v * v)
        if self.m and np.any(norms == 0.0):
            bad = int(np.flatnonzero(norms == 0.0)[0])
            raise ValueError(f"equality {bad} is identically zero on Hermitian blocks")
        self.b_scale = max(1.0, float(np.max(np.abs(self.b)))) if self.m else 1.0
        self.c_scale = max(1.0, max((float(np.max(np.abs(c))) for c in self.c if c.size), default=1.0))
        self.b = self.b / self.b_scale
        self.c = [c / self.c_scale for c in self.c]
        self.a_norm = np.sqrt(norms)
        # distinct complex entries per block, with coefficient matrices S[i, e]
        self.entries = []
        for b, (_, k) in enumerate(prob.blocks):
            sel = prob.eq_block == b
            keys = prob.eq_row[sel] * k + prob.eq_col[sel]
            uniq, inv = np.unique(keys, return_inverse=True)
            s_mat = sp.csr_matrix(
                (prob.eq_coef[sel], (prob.eq_con[sel], inv)), shape=(self.m, len(uniq))
            )
            self.entries.append((uniq // k, uniq % k, s_mat, s_mat.conj()))

    def apply(self, xs):
        out = np.zeros(self.m)
        for (cons, r, c, v), x in zip(self.trip, xs):
            out += np.bincount(cons, weights=v * x[r, c], minlength=self.m)
        return out

    def adjoint(self, y):
        mats = []
        for (cons, r, c, v), n in zip(self.trip, self.sizes):
            mat = np.zeros((n, n))
            np.add.at(mat, (r, c), v * y[cons])
            mats.append(0.5 * (mat + mat.T))
        return mats

    def schur(self, ws):
        """M_ij = <A_i, W A_j W> summed over blocks.

        Every A_i is the lift of a functional Re(a X[r, c]) and W is the
        embedding of a Hermitian Wc, which gives

            M_ij = 1/4 Re sum conj(a_s) conj(a_t) Wc[c_s, r_t] Wc[c_t, r_s]
                          + conj(a_s) a_t Wc[c_s, c_t] Wc[r_t, r_s]

        over the terms s of constraint i and t of constraint j.
        """
        m = np.zeros((self.m, self.m))
        for (r, c, s_mat, s_bar), w in zip(self.entries, ws):
            if len(r) == 0:
                continue
            wc = _unembed(w)
            q = wc[np.ix_(c, r)]
            p1 = q * q.T
            p2 = wc[np.ix_(c, c)] * wc[np.ix_(r, r)].T
            # p1 is symmetric and p2 Hermitian, so both right factors fold into one product
            d = np.ascontiguousarray((s_bar @ p1 + s_mat @ p2.conj()).T)
            m += np.real(s_bar @ d)
        m *= 0.25
        return 0.5 * (m + m.T)


def _structured(y):
    """Project a real symmetric matrix onto the embedded-Hermitian subspace."""
    k = y.shape[0] // 2
    a = 0.5 * (y[:k, :k] + y[k:, k:])
    b = 0.5 * (y[k:, :k] - y[:k, k:])
    a = 0.5 * (a + a.T)
    b = 0.5 * (b - b.T)
    return np.block([[a, -b], [b, a]])


def _max_step(x_chol, dx):
    """Largest alpha with X + alpha dX >= 0, given a Cholesky factor of X."""
    if dx.size == 0:
        return np.inf
    tmp = sla.solve_triangular(x_chol, dx, lower=True)
    tmp = sla.solve_triangular(x_chol, tmp.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (tmp + tmp.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _inner(xs, zs):
    return float(sum(np.sum(x * z) for x, z in zip(xs, zs)))


def solve(
    prob,
    eps=1e-7,
    max_iter=200,
    infeasibility_bound=1e8,
    warm_start=None,
    deadline=None,
):
    """Solve ``prob`` by primal-dual path following with NT scaling.

    Returns an :class:`SdpSolution`; ``status`` is one of ``optimal``,
    ``infeasible``, ``max_iter`` or ``numerical_failure``.  Only an
    ``optimal`` status certifies the returned point.  ``deadline`` is a
    ``time.monotonic()`` timestamp checked once per iteration.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    rp_ = _RealProblem(prob)
    n_tot = sum(rp_.sizes)
    m = rp_.m
    b, cs = rp_.b, rp_.c

    if warm_start is not None:
        xs = [embed_complex(x) / rp_.b_scale for x in warm_start.blocks]
        zs = [embed_complex(z) / rp_.c_scale for z in warm_start.dual_blocks]
        y = np.asarray(warm_start.y, dtype=float) / rp_.c_scale
        shift = 1e-3
        xs = [x + shift * np.eye(len(x)) for x in xs]
        zs = [z + shift * np.eye(len(z)) for z in zs]
    else:
        amax = float(np.max(rp_.a_norm)) if m else 1.0
        xs, zs = [], []
        for n_b, c_b in zip(rp_.sizes, cs):
            xi = max(10.0, np.sqrt(n_b), n_b * max(1.0, float(np.max(np.abs(b)) if m else 0.0)) / (1.0 + amax))
            eta = max(10.0, np.sqrt(n_b), amax, float(np.linalg.norm(c_b)))
            xs.append(xi * np.eye(n_b))
            zs.append(eta * np.eye(n_b))
        y = np.zeros(m)

    b_norm = float(np.linalg.norm(b))
    c_norm = float(np.sqrt(sum(np.sum(c * c) for c in cs)))
    status = MAX_ITER
    it = 0
    relp = reld = relgap = np.inf
    pobj = dobj = np.nan

    def finish(status_):
        blocks = [_unembed(x) * rp_.b_scale for x in xs]
        dual = [_unembed(z) * rp_.c_scale for z in zs]
        scale = rp_.b_scale * rp_.c_scale
        return SdpSolution(
            blocks=blocks,
            objective_value=float(pobj * scale),
            status=status_,
            gap=float(abs(pobj - dobj) * scale),
            dual_objective=float(dobj * scale),
            iterations=it,
            primal_residual=float(relp),
            dual_residual=float(reld),
            y=y * rp_.c_scale,
            dual_blocks=dual,
        )

    for it in range(1, max_iter + 1):
        if deadline is not None and time.monotonic() > deadline:
            raise DeadlineExceeded(f"SDP solve passed its deadline after {it - 1} iterations")
        aty = rp_.adjoint(y)
        rp = b - rp_.apply(xs)
        rd = [c - z - a for c, z, a in zip(cs, zs, aty)]
        pobj = _inner(cs, xs)
        dobj = float(b @ y)
        mu = _inner(xs, zs) / n_tot
        relp = float(np.linalg.norm(rp)) / (1.0 + b_norm)
        reld = float(np.sqrt(sum(np.sum(r * r) for r in rd))) / (1.0 + c_norm)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        log.debug(
            "iter=%d pobj=%.9e dobj=%.9e gap=%.3e relp=%.3e reld=%.3e mu=%.3e",
            it, pobj, dobj, relgap, relp, reld, mu,
        )
        if relp <= eps and reld <= eps and relgap <= eps:
            status = OPTIMAL
            break
        if dobj * rp_.b_scale * rp_.c_scale > infeasibility_bound and reld <= 1e-3:
            status = INFEASIBLE
            break
        if -pobj * rp_.b_scale * rp_.c_scale > infeasibility_bound and relp <= 1e-3:
            status = INFEASIBLE
            break

        try:
            lx = [np.linalg.cholesky(x) for x in xs]
            lz = [np.linalg.cholesky(z) for z in zs]
            gs = []
            for l_x, z in zip(lx, zs):
                d, u = np.linalg.eigh(l_x.T @ z @ l_x)
                if d[0] <= 0:
                    raise np.linalg.LinAlgError("scaling lost definiteness")
                gs.append((l_x @ u) * d ** -0.25)
            ws = [g @ g.T for g in gs]
            zinv = [sla.cho_solve((l, True), np.eye(len(l))) for l in lz]
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break

        mat = rp_.schur(ws) if m else np.zeros((0, 0))
        try:
            fac = sla.cho_factor(mat + 1e-14 * np.trace(mat) / max(m, 1) * np.eye(m), lower=True) if m else None
            solve_m = (lambda rhs: sla.cho_solve(fac, rhs)) if m else (lambda rhs: rhs)
        except np.linalg.LinAlgError:
            lu = sla.lu_factor(mat) if m else None
            solve_m = lambda rhs: sla.lu_solve(lu, rhs)  # noqa: E731

        wrdw = [w @ r @ w for w, r in zip(ws, rd)]

        def direction(sigma):
            rc = [sigma * mu * zi - x for zi, x in zip(zinv, xs)]
            rhs = rp - rp_.apply([r - q for r, q in zip(rc, wrdw)])
            dy = solve_m(rhs) if m else rhs
            dz = [r - a for r, a in zip(rd, rp_.adjoint(dy))]
            dx = [r - w @ d @ w for r, w, d in zip(rc, ws, dz)]
            dx = [0.5 * (d + d.T) for d in dx]
            return dx, dy, dz

        def steps(dx, dz):
            ap = min([1.0] + [STEP_FRACTION * _max_step(l, d) for l, d in zip(lx, dx)])
            ad = min([1.0] + [STEP_FRACTION * _max_step(l, d) for l, d in zip(lz, dz)])
            return ap, ad

        dx, dy, dz = direction(0.0)
        ap, ad = steps(dx, dz)
        mu_aff = _inner([x + ap * d for x, d in zip(xs, dx)], [z + ad * d for z, d in zip(zs, dz)]) / n_tot
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        dx, dy, dz = direction(sigma)
        ap, ad = steps(dx, dz)
        if not (np.isfinite(ap) and np.isfinite(ad)) or max(ap, ad) < 1e-12:
            status = NUMERICAL_FAILURE
            break
        log.debug("iter=%d sigma=%.3e step_p=%.3f step_d=%.3f", it, sigma, ap, ad)
        xs = [x + ap * d for x, d in zip(xs, dx)]
        zs = [z + ad * d for z, d in zip(zs, dz)]
        y = y + ad * dy
        xs = [_structured(x) for x in xs]
        zs = [_structured(z) for z in zs]
    else:
        status = MAX_ITER

    if status == NUMERICAL_FAILURE and relp <= 10 * eps and reld <= 10 * eps and relgap <= 10 * eps:
        # stalled right at the boundary of the tolerance; the iterate is still a usable certificate
        status = OPTIMAL
    return finish(status)


@dataclass
class Completion:
    """Result of :func:`solve_completion`.

    ``x1`` and ``x2`` are the diagonal blocks of a PSD completion of the
    off-diagonal block, repaired so that the completion is PSD exactly.
    ``t`` is the value certified by them, ``lower`` the solver's dual
    bound.
    """

    t: float
    x1: np.ndarray
    x2: np.ndarray
    lower: float
    solution: SdpSolution = None


def completion_problem(c, groups, p, q):
    """SDP for the off-diagonal completion of ``c``.

    ``c`` is an N x N block with N = groups * p * q, indexed by
    (g, u, w).  The problem is

        minimize t  subject to  [[X1, c], [c*, X2]] >= 0,
                                sum_u X_a[(g,u,.), (g,u,.)] <= t I_q

    for a = 1, 2 and every group g.  With one group this is the cb norm
    program for the map whose Choi matrix is ``c``; with one group per
    kernel point it is the bimodule-patterned completion of a kernel.
    """
    n = groups * p * q
    c = np.asarray(c, dtype=np.complex128)
    if c.shape != (n, n):
        raise DimensionError(f"off-diagonal block has shape {c.shape}, expected {(n, n)}")
    bld = ProblemBuilder()
    z = bld.add_block("Z", 2 * n)
    slack = {}
    for a in (1, 2):
        for g in range(groups):
            slack[a, g] = bld.add_block(f"S{a}_{g}", q)
    t = bld.add_block("t", 1)

    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rows, cols = rows.ravel(), cols.ravel()
    k = len(rows)
    con = np.concatenate([2 * np.arange(k), 2 * np.arange(k) + 1])
    bld.add_equalities(
        con,
        z,
        np.concatenate([rows, rows]),
        np.concatenate([cols, cols]) + n,
        np.concatenate([np.ones(k), -1j * np.ones(k)]),
        np.concatenate([c.ravel().real, c.ravel().imag])[np.argsort(con, kind="stable")],
    )

    idx = np.arange(n).reshape(groups, p, q)
    for a in (1, 2):
        off = 0 if a == 1 else n
        for g in range(groups):
            for w in range(q):
                for x in range(w, q):
                    parts = [1.0] if w == x else [1.0, -1j]
                    for coef in parts:
                        terms = [(slack[a, g], w, x, coef)]
                        terms += [(z, off + idx[g, u, w], off + idx[g, u, x], coef) for u in range(p)]
                        if w == x:
                            terms.append((t, 0, 0, -coef))
                        bld.add_equality(terms, 0.0)
    bld.set_objective([(t, 0, 0, 1.0)])
    return bld.build()


def _unit_values(x, groups, p, q):
    """The q x q blocks sum_u X[(g,u,.), (g,u,.)] for every group g."""
    x4 = x.reshape(groups, p, q, groups, p, q)
    return np.einsum("guwgux->gwx", x4)


def solve_completion(c, groups, p, q, eps=1e-7, max_iter=200, deadline=None):
    """Solve :func:`completion_problem` and return a repaired certificate."""
    c = np.asarray(c, dtype=np.complex128)
    n = groups * p * q
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        zero = np.zeros((n, n), dtype=np.complex128)
        return Completion(0.0, zero, zero.copy(), 0.0)
    prob = completion_problem(c / scale, groups, p, q)
    sol = solve(prob, eps=eps, max_iter=max_iter, deadline=deadline)
    if sol.status != OPTIMAL:
        raise SdpError(
            f"completion SDP ended with status {sol.status} after {sol.iterations} iterations "
            f"(gap {sol.gap:.2e}, primal residual {sol.primal_residual:.2e}, "
            f"dual residual {sol.dual_residual:.2e})",
            solution=sol,
        )
    zb = sol.block(prob, "Z")
    x1, x2 = zb[:n, :n], zb[n:, n:]
    x1 = 0.5 * (x1 + adjoint(x1))
    x2 = 0.5 * (x2 + adjoint(x2))
    full = np.block([[x1, c / scale], [adjoint(c) / scale, x2]])
    lam = float(np.linalg.eigvalsh(full)[0])
    if lam < 0:
        shift = -lam * (1.0 + 1e-6) + 1e-14
        x1 = x1 + shift * np.eye(n)
        x2 = x2 + shift * np.eye(n)
    t = max(
        float(np.linalg.eigvalsh(u)[-1])
        for x in (x1, x2)
        for u in _unit_values(x, groups, p, q)
    )
    return Completion(t * scale, x1 * scale, x2 * scale, sol.dual_objective * scale, sol)
