"""Primal log-barrier interior-point solver for the smooth convex programs used here.

A :class:`ConvexProgram` has a linear objective, box bounds, linear equality
rows and inequality rows of the form

    sum_k a_k x_k + sum q * x_v**2 + sum c * x_n**2 / x_r  <=  rhs

(a ratio term may have the constant 1 as numerator). Every ratio denominator
carries a strictly positive lower bound, so each row is convex on the box.

The solver follows the textbook scheme: a phase-0 problem finds a point
strictly inside the box that satisfies the equalities, phase I minimises a
common slack to reach the interior of the inequalities (or certify that no
point exists), and phase II follows the central path with damped Newton steps
in the null space of the equality rows.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

RATE_FLOOR = 1e-9  # smallest admissible value of a ratio denominator
INFEASIBLE_SLACK = 1e-6  # phase-I optimum above this certifies infeasibility
INTERIOR_MARGIN = 1e-7  # phase I stops once every row has at least this much slack
OPEN_ROWS = 1e-7  # relative widening of the tight rows when no such margin exists

MU0 = 10.0
MU_FACTOR = 10.0
LS_ALPHA, LS_BETA = 0.3, 0.5
MAX_OUTER, MAX_INNER = 200, 100
NEWTON_TOL = 1e-10


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class ConvexProgram:
    lower: np.ndarray
    upper: np.ndarray
    objective: np.ndarray
    lin: np.ndarray  # (m, n)
    rhs: np.ndarray  # (m,)
    sq_con: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    sq_var: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    sq_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ratio_con: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    ratio_num: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))  # -1: numerator is 1
    ratio_den: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    ratio_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eq_a: np.ndarray | None = None
    eq_b: np.ndarray | None = None
    names: list[str] | None = None

    def __post_init__(self):
        n = len(self.lower)
        self.eq_a = np.zeros((0, n)) if self.eq_a is None else np.atleast_2d(self.eq_a).reshape(-1, n)
        self.eq_b = np.zeros(0) if self.eq_b is None else np.asarray(self.eq_b, dtype=float)
        if len(self.ratio_den) and np.any(self.lower[self.ratio_den] <= 0):
            raise ValueError("every ratio denominator needs a positive lower bound")
        self._has_num = self.ratio_num >= 0
        self._num = np.where(self._has_num, self.ratio_num, 0)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def m(self) -> int:
        return len(self.rhs)

    # row evaluation -----------------------------------------------------------

    def _num_values(self, x):
        return np.where(self._has_num, x[self._num], 1.0)

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        g = self.lin @ x - self.rhs
        if len(self.sq_con):
            np.add.at(g, self.sq_con, self.sq_coef * x[self.sq_var] ** 2)
        if len(self.ratio_con):
            u = self._num_values(x)
            np.add.at(g, self.ratio_con, self.ratio_coef * u * u / x[self.ratio_den])
        return g

    def constraint_jacobian(self, x: np.ndarray) -> np.ndarray:
        jac = self.lin.copy()
        if len(self.sq_con):
            np.add.at(jac, (self.sq_con, self.sq_var), 2 * self.sq_coef * x[self.sq_var])
        if len(self.ratio_con):
            u = self._num_values(x)
            r = x[self.ratio_den]
            np.add.at(jac, (self.ratio_con, self.ratio_den), -self.ratio_coef * u * u / r ** 2)
            h = self._has_num
            np.add.at(jac, (self.ratio_con[h], self._num[h]), 2 * self.ratio_coef[h] * u[h] / r[h])
        return jac

    def weighted_hessian(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Sum over rows of ``w[k]`` times the Hessian of row ``k``."""
        n = self.n
        hess = np.zeros((n, n))
        if len(self.sq_con):
            np.add.at(hess, (self.sq_var, self.sq_var), 2 * w[self.sq_con] * self.sq_coef)
        if len(self.ratio_con):
            wk = w[self.ratio_con] * self.ratio_coef
            u = self._num_values(x)
            r = x[self.ratio_den]
            d = self.ratio_den
            np.add.at(hess, (d, d), wk * 2 * u * u / r ** 3)
            h = self._has_num
            nu = self._num[h]
            np.add.at(hess, (nu, nu), wk[h] * 2 / r[h])
            off = -wk[h] * 2 * u[h] / r[h] ** 2
            np.add.at(hess, (nu, d[h]), off)
            np.add.at(hess, (d[h], nu), off)
        return hess

    def max_violation(self, x: np.ndarray) -> float:
        viol = [0.0]
        if self.m:
            viol.append(float(np.max(self.constraint_values(x))))
        viol.append(float(np.max(self.lower - x, initial=0.0)))
        viol.append(float(np.max(x - self.upper, initial=0.0)))
        if len(self.eq_b):
            viol.append(float(np.max(np.abs(self.eq_a @ x - self.eq_b))))
        return max(viol)


class ProgramBuilder:
    """Assemble a :class:`ConvexProgram` from named variables and symbolic rows."""

    def __init__(self):
        self.names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.obj: dict[int, float] = {}
        self.rows: list[tuple[dict, list, list, float]] = []
        self.eqs: list[tuple[dict, float]] = []

    def var(self, name: str, lower: float = 0.0, upper: float = math.inf) -> int:
        self.names.append(name)
        self.lower.append(lower)
        self.upper.append(upper)
        return len(self.names) - 1

    def rate_var(self, name: str, upper: float = math.inf) -> int:
        return self.var(name, RATE_FLOOR, upper)

    def constraint(self, linear: dict[int, float] | None = None, squares=(), ratios=(), rhs: float = 0.0) -> int:
        """Add ``linear + sum q*x^2 + sum c*u^2/r <= rhs``.

        ``squares`` holds ``(q, var)`` pairs and ``ratios`` holds ``(c, num, den)``
        triples where ``num`` may be ``None`` for a constant numerator of one.
        """
        self.rows.append((dict(linear or {}), list(squares), list(ratios), float(rhs)))
        return len(self.rows) - 1

    def equality(self, linear: dict[int, float], rhs: float) -> None:
        self.eqs.append((dict(linear), float(rhs)))

    def minimize(self, coefs: dict[int, float]) -> None:
        for k, v in coefs.items():
            self.obj[k] = self.obj.get(k, 0.0) + v

    def build(self) -> ConvexProgram:
        n, m = len(self.names), len(self.rows)
        lin = np.zeros((m, n))
        rhs = np.zeros(m)
        sq, ra = [], []
        for k, (linear, squares, ratios, b) in enumerate(self.rows):
            for v, a in linear.items():
                lin[k, v] += a
            sq += [(k, v, q) for q, v in squares if q != 0]
            ra += [(k, -1 if u is None else u, r, c) for c, u, r in ratios if c != 0]
            rhs[k] = b
        obj = np.zeros(n)
        for k, v in self.obj.items():
            obj[k] = v
        eq_a = np.zeros((len(self.eqs), n))
        eq_b = np.zeros(len(self.eqs))
        for k, (linear, b) in enumerate(self.eqs):
            for v, a in linear.items():
                eq_a[k, v] += a
            eq_b[k] = b
        sq_a = np.array(sq, dtype=float).reshape(-1, 3)
        ra_a = np.array(ra, dtype=float).reshape(-1, 4)
        return ConvexProgram(
            lower=np.array(self.lower, dtype=float), upper=np.array(self.upper, dtype=float),
            objective=obj, lin=lin, rhs=rhs,
            sq_con=sq_a[:, 0].astype(int), sq_var=sq_a[:, 1].astype(int), sq_coef=sq_a[:, 2],
            ratio_con=ra_a[:, 0].astype(int), ratio_num=ra_a[:, 1].astype(int),
            ratio_den=ra_a[:, 2].astype(int), ratio_coef=ra_a[:, 3],
            eq_a=eq_a, eq_b=eq_b, names=list(self.names))


@dataclass
class SolveResult:
    status: Status
    point: np.ndarray | None
    objective_value: float
    newton_iterations: int
    kkt_residual: float
    history: list[tuple[float, float, float]] = field(default_factory=list)  # (mu, objective, barrier value)
    phase1_slack: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class FeasibilityResult:
    point: np.ndarray | None
    slack: float  # max row value at the returned point, or the phase-I optimum when infeasible
    newton_iterations: int = 0

    @property
    def infeasible(self) -> bool:
        return self.point is None


def ratio_term_derivatives(x: float, r: float) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of ``x**2 / r`` with respect to ``(x, r)``."""
    if r <= 0:
        raise ValueError("ratio term x^2/r needs r > 0")
    grad = np.array([2 * x / r, -x * x / r ** 2])
    hess = np.array([[2 / r, -2 * x / r ** 2], [-2 * x / r ** 2, 2 * x * x / r ** 3]])
    return grad, hess


# ---------------------------------------------------------------------------
# barrier machinery
# ---------------------------------------------------------------------------


class _Barrier:
    """Evaluates t*c'x + phi(x) and its derivatives for one program."""

    def __init__(self, prog: ConvexProgram):
        self.p = prog
        self.lo_idx = np.flatnonzero(np.isfinite(prog.lower))
        self.hi_idx = np.flatnonzero(np.isfinite(prog.upper))
        self.m_total = prog.m + len(self.lo_idx) + len(self.hi_idx)
        self.A = prog.eq_a if len(prog.eq_b) else None
        # projector onto the null space of A, used only for reporting stationarity
        self.Z = scipy.linalg.null_space(prog.eq_a) if self.A is not None else None

    def slacks(self, x):
        p = self.p
        s_rows = -p.constraint_values(x) if p.m else np.zeros(0)
        s_lo = x[self.lo_idx] - p.lower[self.lo_idx]
        s_hi = p.upper[self.hi_idx] - x[self.hi_idx]
        return s_rows, s_lo, s_hi

    def in_domain(self, x) -> bool:
        s_rows, s_lo, s_hi = self.slacks(x)
        return (np.all(s_rows > 0) and np.all(s_lo > 0) and np.all(s_hi > 0)
                and np.all(np.isfinite(s_rows)))

    def phi(self, x) -> float:
        s_rows, s_lo, s_hi = self.slacks(x)
        if not (np.all(s_rows > 0) and np.all(s_lo > 0) and np.all(s_hi > 0)):
            return math.inf
        return -(np.sum(np.log(s_rows)) + np.sum(np.log(s_lo)) + np.sum(np.log(s_hi)))

    def value(self, x, t) -> float:
        ph = self.phi(x)
        return math.inf if not math.isfinite(ph) else t * float(self.p.objective @ x) + ph

    def derivatives(self, x, t):
        p = self.p
        n = p.n
        s_rows, s_lo, s_hi = self.slacks(x)
        grad = t * p.objective.copy()
        hess = np.zeros((n, n))
        if p.m:
            jac = p.constraint_jacobian(x)
            inv = 1.0 / s_rows
            grad += jac.T @ inv
            hess += (jac.T * inv ** 2) @ jac + p.weighted_hessian(x, inv)
        diag = np.zeros(n)
        np.subtract.at(grad, self.lo_idx, 1.0 / s_lo)
        np.add.at(diag, self.lo_idx, 1.0 / s_lo ** 2)
        np.add.at(grad, self.hi_idx, 1.0 / s_hi)
        np.add.at(diag, self.hi_idx, 1.0 / s_hi ** 2)
        hess[np.diag_indices(n)] += diag
        return grad, hess

    def newton_step(self, x, t):
        """Equality-constrained Newton step by the range-space method.

        The Hessian is Jacobi-scaled before its Cholesky factorisation; barrier
        Hessians are badly scaled near the boundary but well conditioned after
        that scaling, which a null-space basis would destroy.
        """
        grad, hess = self.derivatives(x, t)
        if grad.size == 0:
            return np.zeros_like(x), 0.0, grad
        try:
            d = np.diag(hess).copy()
            if np.any(d <= 0) or not np.all(np.isfinite(hess)):
                raise np.linalg.LinAlgError
            sc = 1.0 / np.sqrt(d)
            hs = hess * sc[:, None] * sc[None, :]
            gs = grad * sc
            if self.A is None:
                cf = scipy.linalg.cho_factor(hs, check_finite=False)
                step = -scipy.linalg.cho_solve(cf, gs, check_finite=False)
            else:
                As = self.A * sc[None, :]
                p_ = As.shape[0]
                kkt = np.block([[hs, As.T], [As, np.zeros((p_, p_))]])
                rhs = np.r_[-gs, np.zeros(p_)]
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                    lu = scipy.linalg.lu_factor(kkt, check_finite=False)
                if np.any(np.diag(lu[0]) == 0):
                    # late iterations can pin whole rows to their bounds; take the least-squares step
                    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
                else:
                    sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
                    sol += scipy.linalg.lu_solve(lu, rhs - kkt @ sol, check_finite=False)  # one refinement pass
                step = sol[: len(gs)]
            step = step * sc
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError
        except (np.linalg.LinAlgError, ValueError):
            step = -grad  # gradient fallback, projected onto the equality rows
            if self.Z is not None:
                step = self.Z @ (self.Z.T @ step)
            step /= max(1.0, float(np.linalg.norm(step)))
        lam2 = float(-grad @ step)
        return step, lam2, grad

    def max_box_step(self, x, step) -> float:
        p = self.p
        s = math.inf
        lo, hi = self.lo_idx, self.hi_idx
        d = step[lo]
        neg = d < 0
        if np.any(neg):
            s = min(s, float(np.min((p.lower[lo][neg] - x[lo][neg]) / d[neg])))
        d = step[hi]
        pos = d > 0
        if np.any(pos):
            s = min(s, float(np.min((p.upper[hi][pos] - x[hi][pos]) / d[pos])))
        return s

    def centre(self, x, t, max_inner, stop=None):
        """Damped Newton minimisation of t*f + phi from a strictly feasible x.

        Line-search comparisons use ``t * c'(dx) + phi(x + dx) - phi(x)`` so the
        large linear part never cancels against itself.
        """
        iters = 0
        c = self.p.objective
        phx = self.phi(x)
        for _ in range(max_inner):
            step, lam2, grad = self.newton_step(x, t)
            scale = max(1.0, abs(phx))
            if lam2 / 2 <= max(NEWTON_TOL, 1e-14 * scale):
                return x, iters, True
            slope = float(grad @ step)
            if slope >= 0:
                return x, iters, True
            s = min(1.0, 0.99 * self.max_box_step(x, step))
            lin = t * float(c @ step)
            while s > 1e-20:
                cand = x + s * step
                phc = self.phi(cand)
                if math.isfinite(phc) and s * lin + (phc - phx) <= LS_ALPHA * s * slope:
                    break
                s *= LS_BETA
            else:
                return x, iters, True  # no progress is possible at this precision
            x, phx = cand, phc
            iters += 1
            if stop is not None and stop(x):
                return x, iters, True
        return x, iters, False


def _barrier_run(prog: ConvexProgram, x: np.ndarray, tol: float, mu0: float = MU0, mu_factor: float = MU_FACTOR,
                 max_outer: int = MAX_OUTER, max_inner: int = MAX_INNER, stop=None):
    bar = _Barrier(prog)
    mu = mu0
    total = 0
    history = []
    status = Status.ITERATION_LIMIT
    for _ in range(max_outer):
        x, it, ok = bar.centre(x, 1.0 / mu, max_inner, stop)
        total += it
        obj = float(prog.objective @ x)
        history.append((mu, obj, obj + mu * bar.phi(x)))
        if stop is not None and stop(x):
            status = Status.OPTIMAL
            break
        if bar.m_total * mu < tol:
            status = Status.OPTIMAL
            break
        mu /= mu_factor
    return x, status, total, history, mu, bar


def _kkt_residual(bar: _Barrier, x: np.ndarray, mu: float) -> float:
    """Duality-gap bound ``m * mu`` plus ``mu`` times the Newton decrement.

    The decrement measures stationarity in the local Hessian norm, the natural
    scale for barrier iterates; plain gradient norms blow up on coordinates
    sitting near their bounds.
    """
    _, lam2, _ = bar.newton_step(x, 1.0 / mu)
    return bar.m_total * mu + mu * math.sqrt(max(lam2, 0.0))


# ---------------------------------------------------------------------------
# start points
# ---------------------------------------------------------------------------


def _box_centre(prog: ConvexProgram) -> np.ndarray:
    lo, hi = prog.lower, prog.upper
    with np.errstate(invalid="ignore"):
        return _box_centre_raw(lo, hi)


def _box_centre_raw(lo, hi):
    x = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi), 0.0)
    x = np.where(np.isfinite(lo) & ~np.isfinite(hi), lo + np.maximum(1.0, np.abs(lo)), x)
    x = np.where(~np.isfinite(lo) & np.isfinite(hi), hi - np.maximum(1.0, np.abs(hi)), x)
    return x


def _strictly_in_box(prog: ConvexProgram, x: np.ndarray) -> bool:
    return bool(np.all(x > prog.lower) and np.all(x < prog.upper))


def _affine_box_start(prog: ConvexProgram, x0: np.ndarray | None = None) -> np.ndarray | None:
    """A point strictly inside the box satisfying the equality rows, or None."""
    x = _box_centre(prog) if x0 is None else np.asarray(x0, dtype=float).copy()
    if len(prog.eq_b):
        resid = prog.eq_b - prog.eq_a @ x
        if np.max(np.abs(resid)) > 1e-12:
            x = x + np.linalg.lstsq(prog.eq_a, resid, rcond=None)[0]
    if _strictly_in_box(prog, x):
        return x
    # phase 0: maximise the smallest box margin subject to the equalities
    n = prog.n
    lo_idx = np.flatnonzero(np.isfinite(prog.lower))
    hi_idx = np.flatnonzero(np.isfinite(prog.upper))
    rows = len(lo_idx) + len(hi_idx)
    lin = np.zeros((rows, n + 1))
    rhs = np.zeros(rows)
    for k, v in enumerate(lo_idx):
        lin[k, v], lin[k, n], rhs[k] = -1.0, 1.0, -prog.lower[v]
    for k, v in enumerate(hi_idx):
        r = len(lo_idx) + k
        lin[r, v], lin[r, n], rhs[r] = 1.0, 1.0, prog.upper[v]
    width = prog.upper - prog.lower
    cap = float(np.min(width[np.isfinite(width)], initial=1.0))
    obj = np.zeros(n + 1)
    obj[n] = -1.0
    aux = ConvexProgram(lower=np.full(n + 1, -np.inf), upper=np.r_[np.full(n, np.inf), cap],
                        objective=obj, lin=lin, rhs=rhs,
                        eq_a=np.c_[prog.eq_a, np.zeros(len(prog.eq_b))], eq_b=prog.eq_b)
    margin = min(np.min(x[lo_idx] - prog.lower[lo_idx], initial=np.inf),
                 np.min(prog.upper[hi_idx] - x[hi_idx], initial=np.inf))
    z = np.r_[x, min(margin - 1.0, cap - 1.0)]
    z, _, _, _, _, _ = _barrier_run(aux, z, 1e-9, stop=lambda v: v[n] > 1e-9 * max(1.0, cap))
    if z[n] <= 0:
        return None
    return z[:n]


def feasibility_phase(program: ConvexProgram, x0: np.ndarray | None = None) -> FeasibilityResult:
    """Find a point strictly inside every row, or certify that none exists.

    A strictly feasible ``x0`` hint is returned unchanged. Otherwise the common
    slack ``s`` in ``g_k(x) <= s`` is minimised; an optimum above
    :data:`INFEASIBLE_SLACK` proves infeasibility.
    """
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if (_strictly_in_box(program, x0) and
                (not len(program.eq_b) or np.max(np.abs(program.eq_a @ x0 - program.eq_b)) < 1e-10)):
            g = program.constraint_values(x0) if program.m else np.zeros(0)
            if np.all(g < 0):
                return FeasibilityResult(x0, float(np.max(g, initial=-np.inf)))
    x = _affine_box_start(program, x0)
    if x is None:
        return FeasibilityResult(None, math.inf)
    if not program.m:
        return FeasibilityResult(x, -math.inf)
    g = program.constraint_values(x)
    if np.all(g < -INTERIOR_MARGIN):
        return FeasibilityResult(x, float(np.max(g)))
    n = program.n
    s0 = float(np.max(g)) + 1.0
    aux = ConvexProgram(
        lower=np.r_[program.lower, -np.inf], upper=np.r_[program.upper, np.inf],
        objective=np.r_[np.zeros(n), 1.0], lin=np.c_[program.lin, -np.ones(program.m)], rhs=program.rhs,
        sq_con=program.sq_con, sq_var=program.sq_var, sq_coef=program.sq_coef,
        ratio_con=program.ratio_con, ratio_num=program.ratio_num, ratio_den=program.ratio_den,
        ratio_coef=program.ratio_coef,
        eq_a=np.c_[program.eq_a, np.zeros(len(program.eq_b))], eq_b=program.eq_b)
    # a lower bound on s keeps phase I bounded when the rows are unbounded below
    aux.lower[n] = min(-1.0, s0 - 2.0) if s0 < 0 else -1.0
    z0 = np.r_[x, s0]
    z, _, iters, _, _, _ = _barrier_run(aux, z0, 1e-9, stop=lambda v: v[n] < -INTERIOR_MARGIN)
    xs = z[:n]
    g = program.constraint_values(xs)
    if np.all(g < -INTERIOR_MARGIN):
        return FeasibilityResult(xs, float(np.max(g)), iters)
    return FeasibilityResult(None, float(z[n]), iters) if z[n] > INFEASIBLE_SLACK else \
        FeasibilityResult(xs, float(np.max(g)), iters)


def solve(program: ConvexProgram, tol: float = 1e-8, x0: np.ndarray | None = None,
          mu0: float = MU0, mu_factor: float = MU_FACTOR,
          max_outer: int = MAX_OUTER, max_inner: int = MAX_INNER) -> SolveResult:
    """Minimise the program's linear objective; see the module docstring."""
    feas = feasibility_phase(program, x0)
    if feas.infeasible:
        return SolveResult(Status.INFEASIBLE, None, math.nan, feas.newton_iterations, math.nan,
                           phase1_slack=feas.slack)
    x = feas.point
    prog = program
    if feas.slack >= -INTERIOR_MARGIN:
        # (nearly) no strict interior, e.g. rows that the equalities force to be tight: open
        # them up slightly so the barrier has room; the optimum can only move down
        tight = program.constraint_values(x) >= -INTERIOR_MARGIN
        widen = np.where(tight, max(feas.slack, 0.0) + OPEN_ROWS * (1.0 + np.abs(program.rhs)), 0.0)
        prog = ConvexProgram(**{**_fields(program), "rhs": program.rhs + widen})
    if not np.any(program.objective):
        return SolveResult(Status.OPTIMAL, x, 0.0, feas.newton_iterations, 0.0, phase1_slack=feas.slack)
    x, status, iters, history, mu, bar = _barrier_run(prog, x, tol, mu0, mu_factor, max_outer, max_inner)
    kkt = _kkt_residual(bar, x, mu)
    return SolveResult(status, x, float(program.objective @ x), iters + feas.newton_iterations, kkt,
                       history, feas.slack)


def _fields(p: ConvexProgram) -> dict:
    return dict(lower=p.lower, upper=p.upper, objective=p.objective, lin=p.lin, rhs=p.rhs,
                sq_con=p.sq_con, sq_var=p.sq_var, sq_coef=p.sq_coef, ratio_con=p.ratio_con,
                ratio_num=p.ratio_num, ratio_den=p.ratio_den, ratio_coef=p.ratio_coef,
                eq_a=p.eq_a, eq_b=p.eq_b, names=p.names)
