"""Dense revised simplex on a simulated two-tier (host/device) memory system."""

from .engine import Case, Kernel, MemoryBudget, MemoryCounters, TiledEngine, TilePlan, plan
from .generator import GenSpec, SparsityClass, generate
from .model import GeneralLP, RowKind, Sense, StandardFormLP, canonicalize, recover_solution
from .mps import parse_mps, read_mps, to_general_lp, write_mps
from .simplex import AntiCycle, SolverConfig, SolveReport, Status, solve, two_phase_solve

__all__ = [
    "AntiCycle", "Case", "GenSpec", "GeneralLP", "Kernel", "MemoryBudget", "MemoryCounters",
    "RowKind", "Sense", "SolveReport", "SolverConfig", "SparsityClass", "StandardFormLP",
    "Status", "TiledEngine", "TilePlan", "canonicalize", "generate", "parse_mps", "plan",
    "read_mps", "recover_solution", "solve", "to_general_lp", "two_phase_solve", "write_mps",
]
