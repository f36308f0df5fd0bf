"""Dense revised simplex on an explicit-inverse tableau.

The working tableau has ``m + 1`` rows and ``m + 2`` columns::

    [ W      | objective | z_k - c_k ]
    [ B^-1   | B^-1 b    | Y_k       ]

Entering columns are chosen by the largest reduced cost (lowest index on
ties).  When the ratio test is tied, a tabu rule picks the leaving row by a
one-step lookahead and bans the leaving variable for that entering column
until the objective improves again.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .engine import Case, Kernel, MemoryBudget, MemoryCounters, TiledEngine, UpdateStats, plan
from .model import ColKind, GeneralLP, StandardFormLP, canonicalize, recover_solution


class PivotTooSmall(ArithmeticError):
    pass


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"


class AntiCycle(enum.Enum):
    TABU = "tabu"
    NONE = "none"


@dataclass
class SolverConfig:
    opt_tol: float = 1e-7
    pivot_tol: float = 1e-9
    feas_tol: float = 1e-7
    ratio_tie_tol: float = 1e-9
    max_iter: int | None = None  # None: 50 * (m + n_total)
    anticycle: AntiCycle | str = AntiCycle.TABU
    memory_budget_bytes: int | None = None  # None: unlimited
    kernel: Kernel | str = Kernel.CACHED
    workers: int = 1
    tile_rows: int = 16
    tile_cols: int = 16

    def __post_init__(self):
        self.anticycle = AntiCycle(self.anticycle)
        self.kernel = Kernel(self.kernel)
        for name in ("opt_tol", "pivot_tol", "feas_tol", "ratio_tie_tol"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


class Tableau:
    """Views into the ``(m + 1) x (m + 2)`` working array."""

    def __init__(self, data: np.ndarray):
        self.data = data
        self.m = data.shape[0] - 1

    @classmethod
    def initial(cls, b: np.ndarray, c_basic: np.ndarray) -> "Tableau":
        """Tableau for an identity starting basis."""
        m = len(b)
        t = np.zeros((m + 1, m + 2))
        t[1:, :m] = np.eye(m)
        t[1:, m] = b
        t[0, :m] = c_basic
        t[0, m] = float(c_basic @ b)
        return cls(t)

    @property
    def inverse(self) -> np.ndarray:
        return self.data[1:, :self.m]

    @property
    def rhs_bar(self) -> np.ndarray:
        return self.data[1:, self.m]

    @property
    def multipliers(self) -> np.ndarray:
        return self.data[0, :self.m]

    @property
    def objective(self) -> float:
        return float(self.data[0, self.m])

    @property
    def entering_col(self) -> np.ndarray:
        return self.data[1:, self.m + 1]

    @property
    def entering_red_cost(self) -> float:
        return float(self.data[0, self.m + 1])

    @entering_red_cost.setter
    def entering_red_cost(self, value: float) -> None:
        self.data[0, self.m + 1] = value

    def copy(self) -> "Tableau":
        return Tableau(self.data.copy())


@dataclass
class Basis:
    basic: np.ndarray
    in_basis: np.ndarray

    @classmethod
    def from_columns(cls, basic, n_cols: int) -> "Basis":
        basic = np.asarray(basic, dtype=np.int64)
        in_basis = np.zeros(n_cols, dtype=bool)
        in_basis[basic] = True
        return cls(basic.copy(), in_basis)

    def replace(self, r: int, k: int) -> None:
        self.in_basis[self.basic[r]] = False
        self.basic[r] = k
        self.in_basis[k] = True

    def copy(self) -> "Basis":
        return Basis(self.basic.copy(), self.in_basis.copy())


@dataclass
class TabuState:
    banned: dict[int, set[int]] = field(default_factory=dict)
    last_objective: float = np.inf

    def observe(self, objective: float, opt_tol: float) -> None:
        if objective < self.last_objective - opt_tol:
            self.banned.clear()
        self.last_objective = objective

    def is_banned(self, k: int, var: int) -> bool:
        return var in self.banned.get(k, ())

    def ban(self, k: int, var: int) -> None:
        self.banned.setdefault(k, set()).add(int(var))


@dataclass
class SolveReport:
    status: Status
    objective: float
    x: np.ndarray
    iterations_phase1: int = 0
    iterations_phase2: int = 0
    total_seconds: float = 0.0
    phase1_seconds: float = 0.0
    phase2_seconds: float = 0.0
    memory: MemoryCounters = field(default_factory=MemoryCounters)
    case_used: Case = Case.IN_CORE
    basis: np.ndarray | None = None
    x_std: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return self.iterations_phase1 + self.iterations_phase2

    @property
    def tpi_seconds(self) -> float:
        return self.total_seconds / max(1, self.iterations)


@dataclass
class IterationEvent:
    """Passed to ``on_iteration`` after every pivot.  Arrays are live views."""

    phase: int
    iteration: int
    entering: int
    leaving_row: int
    theta: float
    objective: float
    tableau: np.ndarray
    basis: np.ndarray
    update: UpdateStats | None


def reduced_costs(tab: Tableau, A: np.ndarray, c: np.ndarray) -> np.ndarray:
    # one gemv; each column's dot product is accumulated by the same routine
    # whatever the engine layout, so results do not depend on the plan
    return tab.multipliers @ A - c


def price(tab: Tableau, A: np.ndarray, c: np.ndarray, basis: Basis,
          opt_tol: float = 1e-7, allowed: np.ndarray | None = None):
    """Dantzig pricing.  Returns ``None`` at optimality, else ``(k, z_k - c_k)``."""
    d = reduced_costs(tab, A, c)
    d[basis.in_basis] = -np.inf
    if allowed is not None:
        d[~allowed] = -np.inf
    if d.size == 0:
        return None
    k = int(np.argmax(d))
    if not d[k] > opt_tol:
        return None
    return k, float(d[k])


def compute_direction(tab: Tableau, a_k: np.ndarray) -> np.ndarray:
    a_k = np.asarray(a_k, dtype=np.float64)
    if a_k.shape != (tab.m,):
        raise ValueError(f"column has shape {a_k.shape}, expected ({tab.m},)")
    y = tab.inverse @ a_k
    tab.entering_col[:] = y
    return tab.entering_col


def _ratios(rhs_bar: np.ndarray, y: np.ndarray, pivot_tol: float, skip: np.ndarray | None):
    eligible = y > pivot_tol
    if skip is not None:
        eligible &= ~skip
    if not eligible.any():
        return None
    ratios = np.full(y.shape, np.inf)
    ratios[eligible] = np.maximum(rhs_bar[eligible], 0.0) / y[eligible]
    return ratios


def ratio_test(tab: Tableau, pivot_tol: float = 1e-9, ratio_tie_tol: float = 1e-9,
               skip: np.ndarray | None = None):
    """Returns ``None`` if unbounded, else ``(candidates, theta)``.

    Candidates are all rows whose ratio is within ``ratio_tie_tol`` (relative)
    of the minimum.  Slightly negative ``rhs_bar`` entries count as zero.
    """
    ratios = _ratios(tab.rhs_bar, tab.entering_col, pivot_tol, skip)
    if ratios is None:
        return None
    theta = float(ratios.min())
    candidates = np.flatnonzero(ratios <= theta + ratio_tie_tol * abs(theta))
    return candidates, theta


def lookahead_score(r: int, k: int, tab: Tableau, basis: Basis, A: np.ndarray,
                    c: np.ndarray, cfg: SolverConfig, allowed: np.ndarray | None = None,
                    skip: np.ndarray | None = None) -> float:
    """Improvement promised by the pivot after ``(r, k)``: reduced cost times step.

    Straightforward version on a scratch copy of the tableau; the solver uses
    the batched :func:`_lookahead_scores`, which must agree with this.
    """
    scratch = tab.copy()
    conditional_pivot(scratch, r)
    nb = basis.copy()
    nb.replace(r, k)
    nxt = price(scratch, A, c, nb, cfg.opt_tol, allowed)
    if nxt is None:
        return 0.0
    k2, d2 = nxt
    compute_direction(scratch, A[:, k2])
    rt = ratio_test(scratch, cfg.pivot_tol, cfg.ratio_tie_tol, skip)
    if rt is None:
        return np.inf
    return d2 * rt[1]


def _lookahead_scores(rows: np.ndarray, k: int, tab: Tableau, basis: Basis, A: np.ndarray,
                      c: np.ndarray, cfg: SolverConfig, allowed: np.ndarray | None,
                      skip: np.ndarray | None) -> np.ndarray:
    """:func:`lookahead_score` for several rows at once via rank-one updates."""
    binv = tab.inverse
    y = tab.entering_col
    dk = tab.entering_red_cost
    d = reduced_costs(tab, A, c)
    alpha = binv[rows] @ A                      # rows of B^-1 A
    yr = y[rows]
    d_next = d[None, :] - (dk / yr)[:, None] * alpha

    blocked = basis.in_basis.copy()
    blocked[k] = True
    if allowed is not None:
        blocked |= ~allowed
    d_next[:, blocked] = -np.inf
    # the leaving variable becomes nonbasic and may re-enter next time
    for i, r in enumerate(rows):
        leaving = basis.basic[r]
        if allowed is None or allowed[leaving]:
            d_next[i, leaving] = d[leaving] - dk / yr[i] * alpha[i, leaving]
        else:
            d_next[i, leaving] = -np.inf

    scores = np.zeros(len(rows))
    k_next = np.argmax(d_next, axis=1)
    best = d_next[np.arange(len(rows)), k_next]
    live = best > cfg.opt_tol
    if not live.any():
        return scores
    u_all = binv @ A[:, k_next[live]]
    rhs = tab.rhs_bar
    for col, i in enumerate(np.flatnonzero(live)):
        r = rows[i]
        u = u_all[:, col]
        pr = u[r] / yr[i]
        y_next = u - y * pr
        y_next[r] = pr
        br = rhs[r] / yr[i]
        b_next = rhs - y * br
        b_next[r] = br
        ratios = _ratios(b_next, y_next, cfg.pivot_tol, skip)
        scores[i] = np.inf if ratios is None else best[i] * ratios.min()
    return scores


def select_leaving(candidates, k: int, tab: Tableau, basis: Basis, tabu: TabuState | None,
                   A: np.ndarray, c: np.ndarray, cfg: SolverConfig,
                   allowed: np.ndarray | None = None, skip: np.ndarray | None = None) -> int:
    """Pick the leaving row among tied ratio-test minimizers."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if len(candidates) == 1:
        return int(candidates[0])
    if tabu is None or cfg.anticycle is AntiCycle.NONE:
        return int(candidates.min())
    survivors = np.array([r for r in candidates if not tabu.is_banned(k, basis.basic[r])],
                         dtype=np.int64)
    if survivors.size == 0:
        survivors = candidates  # aspiration: never leave the pivot without a row
    if survivors.size == 1:
        r = int(survivors[0])
    else:
        survivors = np.sort(survivors)
        scores = _lookahead_scores(survivors, k, tab, basis, A, c, cfg, allowed, skip)
        r = int(survivors[int(np.argmax(scores))])
    tabu.ban(k, basis.basic[r])
    return r


def conditional_pivot(tab: Tableau, r: int) -> None:
    """Textbook row operations on the whole tableau (reference for the branchless path)."""
    t = tab.data
    R = r + 1
    t[R] /= t[R, tab.m + 1]
    for i in range(t.shape[0]):
        if i != R:
            t[i] += (-t[i, tab.m + 1]) * t[R]


def pivot_update(tab: Tableau, r: int, engine: TiledEngine, pivot_tol: float = 1e-9) -> UpdateStats:
    """Branchless pivot on row ``r`` through ``engine``.

    Divide the pivot row, zero its multiplier, add ``-y_i`` times the pivot
    row to every row (objective row included, with ``z_k - c_k`` as its
    multiplier), then restore the multiplier.  Same result as the
    conditional update, element for element.
    """
    t = tab.data
    R = r + 1
    ycol = tab.m + 1
    pivot = t[R, ycol]
    if not abs(pivot) > pivot_tol:
        raise PivotTooSmall(f"|y_rk| = {abs(pivot):g} at row {r}")
    t[R] /= pivot
    multipliers = t[:, ycol].copy()
    multipliers[R] = 0.0
    stats = engine.pivot_update(t, R, multipliers)
    multipliers[R] = 1.0
    return stats


class _Run:
    """Mutable state shared by the phases of one solve."""

    def __init__(self, A, tab, basis, engine, cfg, max_iter, on_iteration):
        self.A = A
        self.tab = tab
        self.basis = basis
        self.engine = engine
        self.cfg = cfg
        self.max_iter = max_iter
        self.on_iteration = on_iteration
        self.total = 0
        self.skip = np.zeros(tab.m, dtype=bool)

    def pivot(self, r: int, k: int, phase: int, theta: float) -> None:
        stats = pivot_update(self.tab, r, self.engine, self.cfg.pivot_tol)
        self.basis.replace(r, k)
        self.total += 1
        if self.on_iteration is not None:
            self.on_iteration(IterationEvent(phase, self.total, k, r, theta, self.tab.objective,
                                             self.tab.data, self.basis.basic, stats))

    def run_phase(self, c: np.ndarray, allowed: np.ndarray, phase: int) -> Status:
        cfg, tab, A = self.cfg, self.tab, self.A
        tabu = TabuState() if cfg.anticycle is AntiCycle.TABU else None
        n_priced = int(allowed.sum())
        while True:
            if self.total >= self.max_iter:
                return Status.ITERATION_LIMIT
            if tabu is not None:
                tabu.observe(tab.objective, cfg.opt_tol)
            self.engine.account_pricing(tab.m, n_priced)
            entering = price(tab, A, c, self.basis, cfg.opt_tol, allowed)
            if entering is None:
                return Status.OPTIMAL
            k, dk = entering
            compute_direction(tab, A[:, k])
            tab.entering_red_cost = dk
            rt = ratio_test(tab, cfg.pivot_tol, cfg.ratio_tie_tol, self.skip)
            if rt is None:
                return Status.UNBOUNDED
            candidates, theta = rt
            r = select_leaving(candidates, k, tab, self.basis, tabu, A, c, cfg, allowed, self.skip)
            self.pivot(r, k, phase, theta)


def _starting_basis(lp: StandardFormLP) -> tuple[np.ndarray, list[int]]:
    """Unit slack columns where available; rows returned in the list need an artificial."""
    m = lp.m
    basic = np.full(m, -1, dtype=np.int64)
    for j, kind in enumerate(lp.col_kind):
        if kind is not ColKind.SLACK:
            continue
        nz = np.flatnonzero(lp.A[:, j])
        if len(nz) == 1 and lp.A[nz[0], j] == 1.0 and basic[nz[0]] < 0:
            basic[nz[0]] = j
    return basic, [i for i in range(m) if basic[i] < 0]


def two_phase_solve(lp: StandardFormLP, cfg: SolverConfig | None = None,
                    on_iteration: Callable[[IterationEvent], None] | None = None) -> SolveReport:
    """Solve ``min c'x, Ax = b, x >= 0`` (``b >= 0``) with the two-phase method.

    The returned objective and ``x`` are in standard-form space.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    m, n = lp.A.shape
    basic, art_rows = _starting_basis(lp)
    n_art = len(art_rows)
    A = np.zeros((m, n + n_art))
    A[:, :n] = lp.A
    for a, i in enumerate(art_rows):
        A[i, n + a] = 1.0
        basic[i] = n + a
    n_total = n + n_art
    c_true = np.concatenate([lp.c, np.zeros(n_art)])
    c_phase1 = np.concatenate([np.zeros(n), np.ones(n_art)])
    allowed = np.zeros(n_total, dtype=bool)
    allowed[:n] = True
    max_iter = cfg.max_iter if cfg.max_iter is not None else 50 * (m + n_total)

    basis = Basis.from_columns(basic, n_total)
    costs = c_phase1 if n_art else c_true
    tab = Tableau.initial(lp.b.astype(np.float64), costs[basic])
    budget = MemoryBudget(cfg.memory_budget_bytes)
    engine = TiledEngine(plan(m + 1, m + 2, budget, cfg.tile_rows, cfg.tile_cols),
                         cfg.kernel, cfg.workers)
    run = _Run(A, tab, basis, engine, cfg, max_iter, on_iteration)
    engine.start()

    def report(status, p1_time, p2_time, iters1):
        x_full = np.zeros(n_total)
        x_full[basis.basic] = np.maximum(tab.rhs_bar, 0.0)
        x = x_full[:n]
        if status is Status.OPTIMAL:
            obj = float(lp.c @ x)
        elif status is Status.UNBOUNDED:
            obj = -np.inf
        elif status is Status.INFEASIBLE:
            obj = np.nan
        else:
            obj = float(lp.c @ x)
        engine.finish()
        engine.close()
        total = time.perf_counter() - t0
        return SolveReport(
            status=status, objective=obj, x=x, x_std=x,
            iterations_phase1=iters1, iterations_phase2=run.total - iters1,
            total_seconds=total, phase1_seconds=p1_time, phase2_seconds=p2_time,
            memory=engine.counters.copy(), case_used=engine.case, basis=basis.basic.copy())

    p1_time = 0.0
    if n_art:
        status = run.run_phase(c_phase1, allowed, phase=1)
        if status is Status.ITERATION_LIMIT:
            return report(status, time.perf_counter() - t0, 0.0, run.total)
        residual = sum(max(tab.rhs_bar[i], 0.0) for i in range(m) if _is_artificial(basis, i, n))
        scale = max(1.0, float(np.max(np.abs(lp.b), initial=0.0)))
        if residual > cfg.feas_tol * scale:
            return report(Status.INFEASIBLE, time.perf_counter() - t0, 0.0, run.total)
        _drive_out_artificials(run, n, allowed)
        p1_time = time.perf_counter() - t0
    iters1 = run.total

    # phase 2: true costs, fresh multipliers and objective for the current basis
    c_b = c_true[basis.basic]
    tab.data[0, :m] = c_b @ tab.inverse
    tab.data[0, m] = float(c_b @ tab.rhs_bar)
    tab.data[0, m + 1] = 0.0
    engine.refresh_rows(1)
    t1 = time.perf_counter()
    status = run.run_phase(c_true, allowed, phase=2)
    return report(status, p1_time, time.perf_counter() - t1, iters1)


def _is_artificial(basis: Basis, row: int, n: int) -> bool:
    return basis.basic[row] >= n


def _drive_out_artificials(run: _Run, n: int, allowed: np.ndarray) -> None:
    """Pivot zero-level artificials out of the basis; freeze rows where none can go."""
    tab, basis, A, cfg = run.tab, run.basis, run.A, run.cfg
    for i in range(tab.m):
        if not _is_artificial(basis, i, n):
            continue
        cand = np.flatnonzero(allowed & ~basis.in_basis)
        if cand.size == 0:
            run.skip[i] = True
            continue
        alpha = tab.inverse[i] @ A[:, cand]
        j = int(np.argmax(np.abs(alpha)))
        if not abs(alpha[j]) > cfg.pivot_tol:
            run.skip[i] = True
            continue
        k = int(cand[j])
        compute_direction(tab, A[:, k])
        tab.entering_red_cost = float(tab.multipliers @ A[:, k])
        run.pivot(i, k, phase=1, theta=0.0)


def solve(p: GeneralLP, cfg: SolverConfig | None = None,
          on_iteration: Callable[[IterationEvent], None] | None = None) -> SolveReport:
    """Canonicalize, solve, and map the answer back to ``p``'s variables and sense."""
    std, cmap = canonicalize(p)
    rep = two_phase_solve(std, cfg, on_iteration)
    x, z = recover_solution(cmap, rep.x_std, rep.objective if np.isfinite(rep.objective) else 0.0)
    if rep.status is Status.OPTIMAL or rep.status is Status.ITERATION_LIMIT:
        rep.objective = z
    elif rep.status is Status.UNBOUNDED:
        rep.objective = cmap.objective_sign * -np.inf
    rep.x = x
    return rep
