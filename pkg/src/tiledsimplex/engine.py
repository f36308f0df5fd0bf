"""Simulated two-tier memory backend for tableau updates.

The tableau lives in host memory.  A :class:`TilePlan` decides whether the
whole tableau fits in the (simulated) device memory, or whether it must be
streamed through it in partitions of whole consecutive rows.  Updates run
as 16x16 tiles; every main-memory ("device") element access and every
host<->device transfer is counted in :class:`MemoryCounters`.

Values never depend on the plan, tile size or worker count: each element
receives exactly ``a += (-y_i) * x_j`` (skipped when the product is zero).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

ELEMENT_BYTES = 8
TILE = 16


class BudgetTooSmall(ValueError):
    pass


class Case(enum.Enum):
    IN_CORE = "InCore"
    TILED = "Tiled"


class Kernel(enum.Enum):
    CACHED = "cached"
    NAIVE = "naive"


@dataclass(frozen=True)
class MemoryBudget:
    device_bytes: int | None = None
    element_bytes: int = ELEMENT_BYTES

    @property
    def unlimited(self) -> bool:
        return self.device_bytes is None

    @classmethod
    def rows(cls, n_rows: int, row_width: int, element_bytes: int = ELEMENT_BYTES) -> "MemoryBudget":
        """A budget holding exactly ``n_rows`` tableau rows."""
        return cls(n_rows * row_width * element_bytes, element_bytes)


@dataclass
class MemoryCounters:
    device_reads: int = 0
    device_writes: int = 0
    local_reads: int = 0
    local_writes: int = 0
    h2d_bytes: int = 0
    d2h_bytes: int = 0
    kernel_launches: int = 0

    def __iadd__(self, other: "MemoryCounters") -> "MemoryCounters":
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))
        return self

    def __sub__(self, other: "MemoryCounters") -> "MemoryCounters":
        return MemoryCounters(**{f.name: getattr(self, f.name) - getattr(other, f.name)
                                 for f in fields(self)})

    def copy(self) -> "MemoryCounters":
        return MemoryCounters(**self.as_dict())

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @property
    def device_accesses(self) -> int:
        return self.device_reads + self.device_writes


@dataclass
class TilePlan:
    case: Case
    partitions: list[tuple[int, int]]
    resident_partition: int
    row_width: int
    tile_rows: int = TILE
    tile_cols: int = TILE
    element_bytes: int = ELEMENT_BYTES
    device_bytes: int | None = None

    @property
    def num_rows(self) -> int:
        return self.partitions[-1][1]

    @property
    def row_bytes(self) -> int:
        return self.row_width * self.element_bytes

    def partition_bytes(self, p: int) -> int:
        a, b = self.partitions[p]
        return (b - a) * self.row_bytes

    @property
    def tableau_bytes(self) -> int:
        return self.num_rows * self.row_bytes


def plan(m: int, row_width: int, budget: MemoryBudget | None = None,
         tile_rows: int = TILE, tile_cols: int = TILE) -> TilePlan:
    """Partition ``m`` tableau rows of ``row_width`` elements under ``budget``.

    ``m`` counts every row that takes part in the update, including the
    objective row on top.  One row of the budget is reserved for the pivot
    row buffer whenever the tableau does not fit whole.
    """
    if m < 1 or row_width < 1:
        raise ValueError(f"bad tableau shape {m}x{row_width}")
    budget = budget or MemoryBudget()
    eb = budget.element_bytes
    row_bytes = row_width * eb
    common = dict(row_width=row_width, tile_rows=tile_rows, tile_cols=tile_cols,
                  element_bytes=eb, device_bytes=budget.device_bytes)
    if budget.unlimited or m * row_bytes <= budget.device_bytes:
        return TilePlan(Case.IN_CORE, [(0, m)], 0, **common)
    fit = budget.device_bytes // row_bytes - 1
    if fit < 1:
        raise BudgetTooSmall(
            f"{budget.device_bytes} bytes cannot hold a data row and the pivot row "
            f"({2 * row_bytes} bytes)")
    parts = [(a, min(a + fit, m)) for a in range(0, m, fit)]
    return TilePlan(Case.TILED, parts, len(parts) - 1, **common)


def tile_kernel(tile: np.ndarray, x: np.ndarray, y: np.ndarray,
                counters: MemoryCounters, kernel: Kernel = Kernel.CACHED) -> None:
    """Update one tile in place: ``tile[i, j] += (-y[i]) * x[j]``.

    ``x`` is the pivot-row segment over the tile's columns and ``y`` the
    multiplier segment over its rows.  The cached kernel stages both segments
    in tile-local storage first and only writes elements whose product is
    nonzero; the naive kernel reads ``a``, ``x`` and ``y`` from device memory
    for every element and always writes back.
    """
    rows, cols = tile.shape
    if x.shape != (cols,) or y.shape != (rows,):
        raise ValueError(f"segments {x.shape}/{y.shape} do not match tile {tile.shape}")
    temp = np.multiply.outer(-y, x)
    if kernel is Kernel.CACHED:
        counters.device_reads += rows + cols
        counters.local_writes += rows + cols
        counters.local_reads += 2 * rows * cols
        nz = temp != 0
        np.add(temp, tile, out=tile, where=nz)
        written = int(np.count_nonzero(nz))
        counters.device_reads += written
        counters.device_writes += written
    else:
        np.add(temp, tile, out=tile)
        counters.device_reads += 3 * rows * cols
        counters.device_writes += rows * cols


def _band_update(block: np.ndarray, x: np.ndarray, y: np.ndarray,
                 kernel: Kernel, tile_rows: int, tile_cols: int) -> MemoryCounters:
    """Whole-band equivalent of running :func:`tile_kernel` over every tile."""
    c = MemoryCounters()
    rows, cols = block.shape
    if rows == 0:
        return c
    temp = np.multiply.outer(-y, x)
    if kernel is Kernel.CACHED:
        staged = math.ceil(cols / tile_cols) * rows + math.ceil(rows / tile_rows) * cols
        c.device_reads += staged
        c.local_writes += staged
        c.local_reads += 2 * rows * cols
        nz = temp != 0
        np.add(temp, block, out=block, where=nz)
        written = int(np.count_nonzero(nz))
        c.device_reads += written
        c.device_writes += written
    else:
        np.add(temp, block, out=block)
        c.device_reads += 3 * rows * cols
        c.device_writes += rows * cols
    return c


@dataclass
class UpdateStats:
    """Per-update breakdown used by the transfer-law checks."""

    pivot_row_h2d_bytes: int = 0
    partition_h2d_bytes: int = 0
    partition_d2h_bytes: int = 0
    partitions_uploaded: int = 0
    partitions_downloaded: int = 0
    resident_partition: int = 0  # resident when the update began
    counters: MemoryCounters = field(default_factory=MemoryCounters)


class TiledEngine:
    """Executes pivot updates according to a :class:`TilePlan`.

    ``per_tile=True`` runs :func:`tile_kernel` tile by tile (slow, used to
    cross-check the vectorized band path).  ``workers > 1`` splits each
    partition into bands of whole tile rows run on a thread pool.
    """

    def __init__(self, tile_plan: TilePlan, kernel: Kernel | str = Kernel.CACHED,
                 workers: int = 1, per_tile: bool = False):
        self.plan = tile_plan
        self.kernel = Kernel(kernel)
        self.workers = max(1, int(workers))
        self.per_tile = per_tile
        self.counters = MemoryCounters()
        self.last_update: UpdateStats | None = None
        cap = max(b - a for a, b in tile_plan.partitions)
        # the simulated device arena: one partition plus the pivot row buffer
        self._arena = np.empty((cap, tile_plan.row_width))
        self._pivot_buf = np.empty(tile_plan.row_width)
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        self._started = False
        self._matrix_resident = False

    @property
    def case(self) -> Case:
        return self.plan.case

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def start(self) -> None:
        """Initial upload: the whole tableau (in-core) or the resident partition."""
        if self._started:
            return
        self._started = True
        self.counters.h2d_bytes += self.plan.partition_bytes(self.plan.resident_partition)

    def finish(self) -> None:
        """Final download of whatever is still on the device."""
        if not self._started:
            return
        self._started = False
        self.counters.d2h_bytes += self.plan.partition_bytes(self.plan.resident_partition)

    def refresh_rows(self, n_rows: int) -> None:
        """Host rewrote ``n_rows`` rows (e.g. the objective row between phases)."""
        self.counters.h2d_bytes += n_rows * self.plan.row_bytes

    def account_pricing(self, m: int, n_cols: int) -> None:
        """Count one pricing pass over ``n_cols`` constraint columns of height ``m``.

        In-core the constraint matrix is uploaded once, on the first pass;
        tiled, the columns are streamed through in budget-sized blocks.
        """
        eb = self.plan.element_bytes
        self.counters.device_reads += m * n_cols + m
        self.counters.device_writes += n_cols
        col_bytes = m * eb
        if self.plan.case is Case.IN_CORE:
            if not self._matrix_resident:
                self.counters.h2d_bytes += n_cols * col_bytes
                self._matrix_resident = True
            self.counters.kernel_launches += 1
        else:
            per_block = max(1, (self.plan.device_bytes - col_bytes) // col_bytes)
            self.counters.h2d_bytes += n_cols * col_bytes
            self.counters.kernel_launches += math.ceil(n_cols / per_block)
        self.counters.d2h_bytes += n_cols * eb

    def _run_partition(self, block: np.ndarray, x: np.ndarray, y: np.ndarray) -> MemoryCounters:
        tr, tc = self.plan.tile_rows, self.plan.tile_cols
        if self.per_tile:
            c = MemoryCounters()
            for i in range(0, block.shape[0], tr):
                for j in range(0, block.shape[1], tc):
                    tile_kernel(block[i:i + tr, j:j + tc], x[j:j + tc], y[i:i + tr], c, self.kernel)
            return c
        if self._pool is None or block.shape[0] <= tr:
            return _band_update(block, x, y, self.kernel, tr, tc)
        n_bands = min(self.workers, math.ceil(block.shape[0] / tr))
        tile_rows_total = math.ceil(block.shape[0] / tr)
        per = math.ceil(tile_rows_total / n_bands) * tr
        cuts = [(a, min(a + per, block.shape[0])) for a in range(0, block.shape[0], per)]
        results = self._pool.map(
            lambda ab: _band_update(block[ab[0]:ab[1]], x, y[ab[0]:ab[1]], self.kernel, tr, tc),
            cuts)
        c = MemoryCounters()
        for part in results:
            c += part
        return c

    def pivot_update(self, rows: np.ndarray, r: int, y: np.ndarray) -> UpdateStats:
        """Apply ``rows[i] += (-y[i]) * rows[r]`` for every row ``i``.

        Row ``r`` must already be divided by the pivot element and ``y[r]``
        must be zero, so row ``r`` itself is left untouched without a branch.
        """
        tp = self.plan
        if rows.shape != (tp.num_rows, tp.row_width):
            raise ValueError(f"tableau {rows.shape} does not match plan "
                             f"{tp.num_rows}x{tp.row_width}")
        self.start()
        stats = UpdateStats(resident_partition=tp.resident_partition)
        c = stats.counters

        # pivot row broadcast: uploaded exactly once per update
        np.copyto(self._pivot_buf, rows[r])
        x = self._pivot_buf
        stats.pivot_row_h2d_bytes = tp.row_bytes
        c.h2d_bytes += tp.row_bytes
        y = np.array(y, dtype=np.float64, copy=True)

        order = [tp.resident_partition] + [p for p in range(len(tp.partitions))
                                           if p != tp.resident_partition]
        for step, p in enumerate(order):
            a, b = tp.partitions[p]
            nbytes = (b - a) * tp.row_bytes
            if p != tp.resident_partition:
                c.h2d_bytes += nbytes
                stats.partition_h2d_bytes += nbytes
                stats.partitions_uploaded += 1
            arena = self._arena[:b - a]
            np.copyto(arena, rows[a:b])
            c.kernel_launches += 1
            c += self._run_partition(arena, x, y[a:b])
            np.copyto(rows[a:b], arena)
            if step != len(order) - 1:
                c.d2h_bytes += nbytes
                stats.partition_d2h_bytes += nbytes
                stats.partitions_downloaded += 1
        tp.resident_partition = order[-1]
        self.counters += c
        self.last_update = stats
        return stats


def tiled_pivot_update(rows: np.ndarray, r: int, y: np.ndarray, tile_plan: TilePlan,
                       counters: MemoryCounters, kernel: Kernel | str = Kernel.CACHED) -> UpdateStats:
    """One-shot functional form of :meth:`TiledEngine.pivot_update`."""
    eng = TiledEngine(tile_plan, kernel)
    eng._started = True
    stats = eng.pivot_update(rows, r, y)
    counters += stats.counters
    return stats


def budget_for_partitions(num_rows: int, row_width: int, parts: int,
                          element_bytes: int = ELEMENT_BYTES) -> MemoryBudget:
    """Smallest-slack budget whose plan splits ``num_rows`` into exactly ``parts``."""
    if parts < 2 or parts > num_rows:
        raise ValueError(f"cannot split {num_rows} rows into {parts} partitions")
    for per in range(math.ceil(num_rows / parts), 0, -1):
        if math.ceil(num_rows / per) == parts:
            return MemoryBudget.rows(per + 1, row_width, element_bytes)
        if math.ceil(num_rows / per) > parts:
            break
    raise ValueError(f"no whole-row partition size gives {parts} parts of {num_rows} rows")
