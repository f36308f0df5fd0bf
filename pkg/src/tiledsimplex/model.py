"""LP representations and canonicalization to ``min c'x, Ax = b, b >= 0, x >= 0``."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    pass


class InconsistentBounds(ModelError):
    pass


class EmptyProblem(ModelError):
    pass


class LengthMismatch(ModelError):
    pass


class Sense(enum.Enum):
    MINIMIZE = "min"
    MAXIMIZE = "max"


class RowKind(enum.Enum):
    EQ = "E"
    LE = "L"
    GE = "G"
    FREE = "N"


class ColKind(enum.Enum):
    STRUCTURAL = "structural"
    SLACK = "slack"
    ARTIFICIAL = "artificial"


@dataclass
class GeneralLP:
    """An LP as read from a file or produced by the generator.

    ``coeffs`` is dense row-major, ``lower``/``upper`` default to 0 and +inf.
    ``ranges`` holds NaN where a row has no range.
    """

    name: str
    sense: Sense
    row_kind: list[RowKind]
    coeffs: np.ndarray
    objective: np.ndarray
    rhs: np.ndarray
    ranges: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    row_names: list[str] | None = None
    col_names: list[str] | None = None
    objective_constant: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.ndim != 2:
            self.coeffs = self.coeffs.reshape(len(self.row_kind), -1)
        m, n = self.coeffs.shape
        self.objective = np.asarray(self.objective, dtype=np.float64).reshape(n)
        self.rhs = np.asarray(self.rhs, dtype=np.float64).reshape(m)
        self.ranges = (np.full(m, np.nan) if self.ranges is None
                       else np.asarray(self.ranges, dtype=np.float64).reshape(m))
        self.lower = (np.zeros(n) if self.lower is None
                      else np.asarray(self.lower, dtype=np.float64).reshape(n))
        self.upper = (np.full(n, np.inf) if self.upper is None
                      else np.asarray(self.upper, dtype=np.float64).reshape(n))
        if len(self.row_kind) != m:
            raise LengthMismatch(f"{len(self.row_kind)} row kinds for {m} rows")

    @property
    def num_rows(self) -> int:
        return self.coeffs.shape[0]

    @property
    def num_cols(self) -> int:
        return self.coeffs.shape[1]

    def objective_value(self, x) -> float:
        return float(self.objective @ np.asarray(x, dtype=np.float64)) + self.objective_constant

    def max_violation(self, x) -> float:
        """Largest violation of any row relation, range or bound at ``x``."""
        x = np.asarray(x, dtype=np.float64)
        act = self.coeffs @ x
        worst = 0.0
        for i, kind in enumerate(self.row_kind):
            lo, hi = _row_interval(kind, self.rhs[i], self.ranges[i])
            worst = max(worst, lo - act[i], act[i] - hi)
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)),
                    float(np.max(x - self.upper, initial=0.0)))
        return worst


def _row_interval(kind: RowKind, rhs: float, rng: float) -> tuple[float, float]:
    has_range = not np.isnan(rng)
    if kind is RowKind.LE:
        return (rhs - abs(rng) if has_range else -np.inf), rhs
    if kind is RowKind.GE:
        return rhs, (rhs + abs(rng) if has_range else np.inf)
    if kind is RowKind.EQ:
        if not has_range:
            return rhs, rhs
        return (rhs + rng, rhs) if rng < 0 else (rhs, rhs + rng)
    return -np.inf, np.inf


@dataclass
class StandardFormLP:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    col_kind: list[ColKind]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def n_total(self) -> int:
        return self.A.shape[1]


@dataclass
class CanonicalMap:
    """How to get back from a standard-form point to the original variables.

    Original variable ``j`` equals ``shift[j] + x_std[pos[j]]``, or
    ``shift[j] + x_std[p] - x_std[q]`` when ``(p, q)`` is its split pair.
    """

    n_orig: int
    n_std: int
    shift: np.ndarray
    pos: np.ndarray
    negated_row: np.ndarray
    split_pairs: dict[int, tuple[int, int]] = field(default_factory=dict)
    objective_sign: float = 1.0
    objective_constant: float = 0.0

    @classmethod
    def identity(cls, n: int) -> "CanonicalMap":
        return cls(n, n, np.zeros(n), np.arange(n), np.zeros(0, dtype=bool))


def canonicalize(p: GeneralLP) -> tuple[StandardFormLP, CanonicalMap]:
    """Rewrite ``p`` as ``min c'x, Ax = b, b >= 0, x >= 0``.

    Finite lower bounds are shifted to zero, free variables are split,
    upper bounds and ranges become explicit rows, and rows with negative
    right-hand side are negated before their slack column is added.
    """
    m0, n0 = p.coeffs.shape
    if m0 == 0 or n0 == 0:
        raise EmptyProblem(f"problem has shape {m0}x{n0}")
    bad = np.flatnonzero(p.lower > p.upper)
    if bad.size:
        j = int(bad[0])
        raise InconsistentBounds(f"column {j}: lower {p.lower[j]} > upper {p.upper[j]}")

    sign = -1.0 if p.sense is Sense.MAXIMIZE else 1.0
    obj = sign * p.objective

    # column transform: x_orig[:, j] = shift + sum(coef * x_std[col])
    cols: list[np.ndarray] = []
    costs: list[float] = []
    shift = np.zeros(n0)
    pos = np.zeros(n0, dtype=np.int64)
    split_pairs: dict[int, tuple[int, int]] = {}
    bound_rows: list[tuple[dict[int, float], float]] = []
    rhs = p.rhs.astype(np.float64).copy()
    constant = sign * p.objective_constant

    for j in range(n0):
        a = p.coeffs[:, j]
        lo, hi = p.lower[j], p.upper[j]
        if np.isfinite(lo):
            shift[j] = lo
            if lo != 0.0:
                rhs -= a * lo
                constant += obj[j] * lo
            pos[j] = len(cols)
            cols.append(a)
            costs.append(obj[j])
            if np.isfinite(hi):
                bound_rows.append(({pos[j]: 1.0}, hi - lo))
        else:
            plus = len(cols)
            cols.extend([a, -a])
            costs.extend([obj[j], -obj[j]])
            pos[j] = plus
            split_pairs[j] = (plus, plus + 1)
            if np.isfinite(hi):
                bound_rows.append(({plus: 1.0, plus + 1: -1.0}, hi))

    n_struct = len(cols)
    core = np.column_stack(cols) if cols else np.zeros((m0, 0))

    # (row vector, relation, rhs) with relation in {"E", "L", "G"}
    rows: list[tuple[np.ndarray, str, float]] = []
    for i, kind in enumerate(p.row_kind):
        if kind is RowKind.FREE:
            continue
        rng = p.ranges[i]
        if np.isnan(rng):
            rows.append((core[i], kind.value, rhs[i]))
            continue
        # a shifted range keeps its width: interval end points both move by the shift
        lo, hi = _row_interval(kind, p.rhs[i], rng)
        delta = rhs[i] - p.rhs[i]
        lo, hi = lo + delta, hi + delta
        if lo == hi:
            rows.append((core[i], "E", lo))
        else:
            rows.append((core[i], "G", lo))
            rows.append((core[i], "L", hi))
    for entries, ub in bound_rows:
        v = np.zeros(n_struct)
        for col, coef in entries.items():
            v[col] = coef
        rows.append((v, "L", ub))

    m = len(rows)
    if m == 0:
        raise EmptyProblem("no constraint rows after dropping free rows")
    n_slack = sum(1 for _, rel, _ in rows if rel != "E")
    A = np.zeros((m, n_struct + n_slack))
    b = np.zeros(m)
    negated = np.zeros(m, dtype=bool)
    slack_at = n_struct
    for i, (v, rel, r) in enumerate(rows):
        if r < 0:
            v, r = -v, -r
            rel = {"L": "G", "G": "L", "E": "E"}[rel]
            negated[i] = True
        A[i, :n_struct] = v
        b[i] = r
        if rel != "E":
            A[i, slack_at] = 1.0 if rel == "L" else -1.0
            slack_at += 1
    # -0.0 never counts as negative, but keep the invariant literal
    b[b == 0.0] = 0.0

    c = np.concatenate([np.asarray(costs, dtype=np.float64), np.zeros(n_slack)])
    kinds = [ColKind.STRUCTURAL] * n_struct + [ColKind.SLACK] * n_slack
    cmap = CanonicalMap(
        n_orig=n0,
        n_std=n_struct + n_slack,
        shift=shift,
        pos=pos,
        negated_row=negated,
        split_pairs=split_pairs,
        objective_sign=sign,
        objective_constant=sign * constant,
    )
    return StandardFormLP(A, b, c, kinds), cmap


def recover_solution(cmap: CanonicalMap, x_std, z_std: float) -> tuple[np.ndarray, float]:
    x_std = np.asarray(x_std, dtype=np.float64)
    if x_std.shape != (cmap.n_std,):
        raise LengthMismatch(f"expected {cmap.n_std} standard-form values, got {x_std.shape}")
    x = cmap.shift + x_std[cmap.pos]
    for j, (plus, minus) in cmap.split_pairs.items():
        x[j] = cmap.shift[j] + x_std[plus] - x_std[minus]
    z = cmap.objective_sign * z_std + cmap.objective_constant
    return x, z
