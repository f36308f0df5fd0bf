"""Benchmark harness: timing metrics, suite runs and the CSV report."""

from __future__ import annotations

import csv
import dataclasses
import io
import logging
import statistics
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .engine import Kernel, budget_for_partitions
from .generator import GenSpec, generate
from .model import canonicalize, recover_solution
from .mps import MpsError, read_mps
from .simplex import SolverConfig, Status, two_phase_solve

log = logging.getLogger(__name__)

CSV_HEADER = (
    "instance,status,objective,iterations_p1,iterations_p2,total_seconds,tpi_seconds,case,"
    "device_reads,device_writes,h2d_bytes,d2h_bytes,reference_seconds,speedup"
).split(",")

PARSE_ERROR = "ParseError"
SOLVER_ERROR = "Error"


class NonPositiveTime(ValueError):
    pass


class ZeroIterations(ValueError):
    pass


def speedup(t_ref: float, t_par: float) -> float:
    """Reference time over parallel time."""
    if not t_par > 0:
        raise NonPositiveTime(f"parallel time must be positive, got {t_par}")
    if t_ref < 0:
        raise NonPositiveTime(f"reference time must be non-negative, got {t_ref}")
    return t_ref / t_par


def tpi(total_seconds: float, iterations: int) -> float:
    """Time per iteration."""
    if iterations < 1:
        raise ZeroIterations("time per iteration needs at least one iteration")
    return total_seconds / iterations


def _g6(v: float | None) -> float | None:
    return None if v is None else float(f"{v:.6g}")


@dataclass
class BenchRow:
    """One CSV line.  Reals are held at the 6 significant digits written out."""

    instance: str
    status: str
    objective: float = float("nan")
    iterations_p1: int = 0
    iterations_p2: int = 0
    total_seconds: float = 0.0
    tpi_seconds: float = 0.0
    case: str = ""
    device_reads: int = 0
    device_writes: int = 0
    h2d_bytes: int = 0
    d2h_bytes: int = 0
    reference_seconds: float | None = None
    speedup: float | None = None

    def __post_init__(self):
        if (self.reference_seconds is None) != (self.speedup is None):
            raise ValueError("speedup is present exactly when reference_seconds is")
        for name in ("objective", "total_seconds", "tpi_seconds", "reference_seconds", "speedup"):
            setattr(self, name, _g6(getattr(self, name)))

    @property
    def iterations(self) -> int:
        return self.iterations_p1 + self.iterations_p2

    def __eq__(self, other):
        if not isinstance(other, BenchRow):
            return NotImplemented
        a, b = dataclasses.astuple(self), dataclasses.astuple(other)
        return all(x == y or (isinstance(x, float) and isinstance(y, float)
                              and np.isnan(x) and np.isnan(y)) for x, y in zip(a, b))

    def to_record(self) -> list[str]:
        out = []
        for name in CSV_HEADER:
            v = getattr(self, name)
            if v is None:
                out.append("")
            elif isinstance(v, float):
                out.append(f"{v:.6g}")
            else:
                out.append(str(v))
        return out

    @classmethod
    def from_record(cls, rec: dict[str, str]) -> "BenchRow":
        kw = {}
        for f in dataclasses.fields(cls):
            raw = rec[f.name]
            if f.name in ("instance", "status", "case"):
                kw[f.name] = raw
            elif raw == "":
                kw[f.name] = None
            elif f.name in ("objective", "total_seconds", "tpi_seconds", "reference_seconds", "speedup"):
                kw[f.name] = float(raw)
            else:
                kw[f.name] = int(raw)
        return cls(**kw)


def write_csv(rows: list[BenchRow], dest) -> None:
    """Write rows to a path or a text stream."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write_csv(rows, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.to_record())


def read_csv(src) -> list[BenchRow]:
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            return read_csv(fh)
    reader = csv.DictReader(src)
    if reader.fieldnames != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [BenchRow.from_record(rec) for rec in reader]


def csv_text(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


@dataclass(frozen=True)
class Mode:
    """A memory budget and kernel choice.

    ``budget`` is ``None`` (unlimited) or a byte count; ``parts`` instead asks
    for whatever budget splits the instance's tableau into that many parts.
    """

    budget: int | None = None
    kernel: Kernel = Kernel.CACHED
    parts: int | None = None

    @property
    def label(self) -> str:
        size = "unlimited" if self.budget is None and self.parts is None else (
            f"{self.parts}p" if self.parts else str(self.budget))
        return f"{size}:{self.kernel.value}"

    def budget_for(self, m: int) -> int | None:
        if self.parts is not None:
            return budget_for_partitions(m + 1, m + 2, self.parts).device_bytes
        return self.budget


def parse_modes(spec: str) -> list[Mode]:
    """``unlimited:cached,4p:naive,200000:cached`` -> modes (kernel defaults to cached)."""
    modes = []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        size, _, kernel = item.partition(":")
        kernel = Kernel(kernel or "cached")
        size = size.lower()
        if size in ("", "unlimited", "inf"):
            modes.append(Mode(None, kernel))
        elif size.endswith("p"):
            modes.append(Mode(None, kernel, parts=int(size[:-1])))
        else:
            modes.append(Mode(int(size), kernel))
    if not modes:
        raise ValueError(f"no modes in {spec!r}")
    return modes


def parse_suite(path) -> list[Path | GenSpec]:
    """Suite file: one MPS path (relative to the suite file) or ``gen M N CLASS SEED`` per line."""
    path = Path(path)
    items: list[Path | GenSpec] = []
    for line in path.read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("gen "):
            _, m, n, cls, seed = line.split()
            items.append(GenSpec(int(m), int(n), cls, int(seed)))
        else:
            p = Path(line)
            items.append(p if p.is_absolute() else path.parent / p)
    return items


def _instance_name(item) -> str:
    return item.name if isinstance(item, GenSpec) else Path(item).stem


def _row_name(name: str, mode: Mode, modes: list[Mode]) -> str:
    return name if len(modes) == 1 else f"{name}@{mode.label}"


def _timed(std, cfg: SolverConfig, repeats: int):
    reports = [two_phase_solve(std, cfg) for _ in range(max(1, repeats))]
    return reports[-1], statistics.median(r.total_seconds for r in reports)


def run_suite(instances, cfg: SolverConfig | None = None, modes: list[Mode] | None = None,
              reference: bool = False, repeats: int = 3, csv_path=None) -> list[BenchRow]:
    """Solve every instance under every mode; one row per pair.

    Wall time covers the solve only (parsing and canonicalization excluded)
    and is the median of ``repeats`` runs.  With ``reference``, the same
    budget is re-run single-worker with the naive kernel and its time becomes
    ``reference_seconds``.
    """
    cfg = cfg or SolverConfig()
    modes = modes or [Mode()]
    rows: list[BenchRow] = []
    for item in instances:
        name = _instance_name(item)
        try:
            lp = generate(item) if isinstance(item, GenSpec) else read_mps(item)
            std, cmap = canonicalize(lp)
        except (MpsError, ValueError, OSError, UnicodeDecodeError) as exc:
            log.warning("%s: %s", name, exc)
            rows.extend(BenchRow(_row_name(name, m, modes), PARSE_ERROR) for m in modes)
            continue
        for mode in modes:
            label = _row_name(name, mode, modes)
            try:
                mcfg = dataclasses.replace(cfg, memory_budget_bytes=mode.budget_for(std.m),
                                           kernel=mode.kernel)
                rep, secs = _timed(std, mcfg, repeats)
                ref_secs = None
                if reference:
                    rcfg = dataclasses.replace(mcfg, kernel=Kernel.NAIVE, workers=1)
                    _, ref_secs = _timed(std, rcfg, repeats)
            except Exception as exc:  # isolate one bad instance from the rest of the suite
                log.exception("%s [%s] failed", name, mode.label)
                rows.append(BenchRow(label, f"{SOLVER_ERROR}:{type(exc).__name__}"))
                continue
            if rep.status is Status.OPTIMAL:
                _, obj = recover_solution(cmap, rep.x_std, rep.objective)
            elif rep.status is Status.UNBOUNDED:
                obj = cmap.objective_sign * -np.inf
            else:
                obj = float("nan")
            mem = rep.memory
            rows.append(BenchRow(
                instance=label,
                status=rep.status.value,
                objective=obj,
                iterations_p1=rep.iterations_phase1,
                iterations_p2=rep.iterations_phase2,
                total_seconds=secs,
                tpi_seconds=secs / max(1, rep.iterations),
                case=rep.case_used.value,
                device_reads=mem.device_reads,
                device_writes=mem.device_writes,
                h2d_bytes=mem.h2d_bytes,
                d2h_bytes=mem.d2h_bytes,
                reference_seconds=ref_secs,
                speedup=None if ref_secs is None else speedup(ref_secs, secs),
            ))
    if csv_path is not None:
        write_csv(rows, csv_path)
    return rows
