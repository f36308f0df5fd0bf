"""Random feasible LP families: dense (D) and sparse with 20% / 60% zeros."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .model import GeneralLP, RowKind, Sense


class DegenerateSpec(ValueError):
    pass


class SparsityClass(enum.Enum):
    D = "D"
    S20 = "S20"
    S60 = "S60"

    @property
    def zero_probability(self) -> float:
        return {"D": 0.0, "S20": 0.2, "S60": 0.6}[self.value]


@dataclass(frozen=True)
class GenSpec:
    m: int
    n: int
    sparsity_class: SparsityClass | str = SparsityClass.D
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sparsity_class", SparsityClass(self.sparsity_class))

    @property
    def name(self) -> str:
        return f"{self.m}_{self.n}_{self.sparsity_class.value}_s{self.seed}"


def _uniform_open_low(rng: np.random.Generator, low: float, size) -> np.ndarray:
    # (low, 1]: random() is [0, 1), so 1 - random() is (0, 1]
    return low + (1.0 - low) * (1.0 - rng.random(size))


def _draw(spec: GenSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    m, n = spec.m, spec.n
    if m <= 0 or n <= 0:
        raise DegenerateSpec(f"need m, n >= 1, got {m}x{n}")
    rng = np.random.default_rng(np.uint64(spec.seed % 2**64))
    p0 = spec.sparsity_class.zero_probability
    A = _uniform_open_low(rng, 0.01, (m, n))
    if p0 > 0:
        A[rng.random((m, n)) < p0] = 0.0
        empty = np.flatnonzero(~A.any(axis=1))
        while empty.size:
            for i in empty:
                row = _uniform_open_low(rng, 0.01, n)
                row[rng.random(n) < p0] = 0.0
                A[i] = row
            empty = np.flatnonzero(~A.any(axis=1))
    c = 1.0 - rng.random(n)
    x_hat = 1.0 - rng.random(n)
    return A, c, x_hat


def generate(spec: GenSpec) -> GeneralLP:
    """Draw ``min c'x s.t. Ax = A x_hat, x >= 0`` for a random ``x_hat > 0``.

    Entries of A are uniform on (0.01, 1], then zeroed independently with the
    class probability; rows that end up all zero are redrawn.  ``c`` and
    ``x_hat`` are uniform on (0, 1].
    """
    A, c, x_hat = _draw(spec)
    if spec.n < spec.m:
        warnings.warn(f"n={spec.n} < m={spec.m}: constraints are likely dependent", stacklevel=2)
    return GeneralLP(
        name=spec.name,
        sense=Sense.MINIMIZE,
        row_kind=[RowKind.EQ] * spec.m,
        coeffs=A,
        objective=c,
        rhs=A @ x_hat,
    )


def reference_point(spec: GenSpec) -> np.ndarray:
    """The feasible point ``x_hat`` used to build ``b`` for ``spec``."""
    return _draw(spec)[2]
