"""Fixed- and free-format MPS reading and writing."""

from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import GeneralLP, RowKind, Sense

log = logging.getLogger(__name__)

SECTIONS = ("NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA")
BOUND_KINDS = {"UP", "LO", "FX", "FR", "MI", "PL"}
INTEGER_BOUND_KINDS = {"BV", "LI", "UI", "SC"}

# fixed-format field columns (0-based, end exclusive)
_FIXED_FIELDS = ((1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61))


class MpsError(ValueError):
    pass


class UnknownSection(MpsError):
    pass


class UndeclaredRow(MpsError):
    pass


class DuplicateRow(MpsError):
    pass


class MissingObjectiveRow(MpsError):
    pass


class MalformedNumber(MpsError):
    pass


class UnsupportedBoundKind(MpsError):
    pass


@dataclass
class MpsDocument:
    name: str = ""
    rows: list[tuple[str, str]] = field(default_factory=list)
    columns: list[tuple[str, str, float]] = field(default_factory=list)
    rhs: list[tuple[str, str, float]] = field(default_factory=list)
    ranges: list[tuple[str, str, float]] = field(default_factory=list)
    bounds: list[tuple[str, str, str, float]] = field(default_factory=list)
    objsense: str | None = None
    warnings: list[str] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, MpsDocument):
            return NotImplemented
        return (self.name, self.rows, self.columns, self.rhs, self.ranges,
                self.bounds, self.objsense) == (
            other.name, other.rows, other.columns, other.rhs, other.ranges,
            other.bounds, other.objsense)

    @property
    def has_endata(self) -> bool:
        return "missing ENDATA" not in self.warnings

    def column_names(self) -> list[str]:
        return list(dict.fromkeys(c for c, _, _ in self.columns))


def _number(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise MalformedNumber(f"line {lineno}: {tok!r} is not a number") from None
    if math.isnan(v):
        raise MalformedNumber(f"line {lineno}: NaN")
    return v


def _fixed_fields(line: str) -> list[str]:
    return [line[a:b].strip() for a, b in _FIXED_FIELDS]


def _split(line: str, expect: tuple[int, ...], lineno: int) -> list[str]:
    toks = line.split()
    if len(toks) in expect:
        return toks
    # names with embedded blanks only parse in strict column positions
    fixed = [f for f in _fixed_fields(line) if f]
    if len(fixed) in expect:
        return fixed
    raise MpsError(f"line {lineno}: cannot split {line.strip()!r}")


def parse_mps(source) -> MpsDocument:
    """Parse MPS text (``str``, ``bytes``, path or text stream)."""
    if isinstance(source, bytes):
        text = source.decode("ascii")
    elif isinstance(source, str) and "\n" not in source and os.path.exists(source):
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    elif isinstance(source, os.PathLike):
        with open(source, "r", encoding="ascii") as fh:
            text = fh.read()
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("ascii")

    doc = MpsDocument()
    declared: dict[str, str] = {}
    col_seen: dict[tuple[str, str], int] = {}
    objective: str | None = None
    section = None
    finished = False

    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.rstrip("\r\n").rstrip()
        if not line or line.startswith("*"):
            continue
        head = line.split(None, 1)
        key = head[0].upper()
        # free-format files may start data lines in column 1
        unindented_data = key not in SECTIONS and len(head) > 1 and section not in (None, "NAME")
        if not line[0].isspace() and not unindented_data:
            if key not in SECTIONS:
                raise UnknownSection(f"line {lineno}: {head[0]!r}")
            section = key
            if key == "NAME":
                doc.name = head[1].strip() if len(head) > 1 else ""
            elif key == "OBJSENSE" and len(head) > 1:
                doc.objsense = head[1].strip().upper()
            elif key == "ENDATA":
                finished = True
                break
            continue

        if section == "OBJSENSE":
            doc.objsense = line.strip().upper()
        elif section == "ROWS":
            kind, name = _split(line, (2,), lineno)
            kind = kind.upper()
            if kind not in ("N", "L", "G", "E"):
                raise MpsError(f"line {lineno}: unknown row kind {kind!r}")
            if name in declared:
                raise DuplicateRow(name)
            declared[name] = kind
            doc.rows.append((kind, name))
            if kind == "N":
                if objective is None:
                    objective = name
                else:
                    doc.warnings.append(f"extra objective row {name} dropped")
        elif section == "COLUMNS":
            toks = _split(line, (3, 5), lineno)
            if toks[1].upper() == "'MARKER'" or "'MARKER'" in toks:
                raise UnsupportedBoundKind(f"line {lineno}: integer markers are not supported")
            col = toks[0]
            for rname, val in zip(toks[1::2], toks[2::2]):
                if rname not in declared:
                    raise UndeclaredRow(rname)
                v = _number(val, lineno)
                key = (col, rname)
                if key in col_seen:
                    i = col_seen[key]
                    c, r, old = doc.columns[i]
                    doc.columns[i] = (c, r, old + v)
                    doc.warnings.append(f"duplicate entry {col}/{rname} summed")
                else:
                    col_seen[key] = len(doc.columns)
                    doc.columns.append((col, rname, v))
        elif section in ("RHS", "RANGES"):
            toks = _split(line, (2, 3, 4, 5), lineno)
            if len(toks) % 2 == 0:
                # set name omitted
                toks = [""] + toks
            target = doc.rhs if section == "RHS" else doc.ranges
            for rname, val in zip(toks[1::2], toks[2::2]):
                if rname not in declared:
                    raise UndeclaredRow(rname)
                target.append((toks[0], rname, _number(val, lineno)))
        elif section == "BOUNDS":
            toks = _split(line, (2, 3, 4), lineno)
            kind = toks[0].upper()
            if kind in ("FR", "MI", "PL", "BV") and len(toks) == 2:
                toks = [kind, "", toks[1]]
            elif kind in ("FR", "MI", "PL", "BV") and len(toks) == 4:
                toks = toks[:3]
            elif len(toks) == 3 and kind not in ("FR", "MI", "PL", "BV"):
                toks = [kind, ""] + toks[1:]
            if kind in INTEGER_BOUND_KINDS:
                raise UnsupportedBoundKind(f"line {lineno}: {kind}")
            if kind not in BOUND_KINDS:
                raise MpsError(f"line {lineno}: unknown bound kind {kind!r}")
            value = _number(toks[3], lineno) if len(toks) > 3 else 0.0
            doc.bounds.append((kind, toks[1], toks[2], value))
        else:
            raise MpsError(f"line {lineno}: data outside of a section")

    if not finished:
        doc.warnings.append("missing ENDATA")
    if objective is None:
        raise MissingObjectiveRow(doc.name or "<unnamed>")
    for w in doc.warnings:
        log.warning("%s: %s", doc.name or "mps", w)
    return doc


def to_general_lp(doc: MpsDocument) -> GeneralLP:
    """Build a dense :class:`GeneralLP` from a parsed document."""
    objective = next(name for kind, name in doc.rows if kind == "N")
    rows = [(kind, name) for kind, name in doc.rows if kind != "N"]
    row_index = {name: i for i, (_, name) in enumerate(rows)}
    cols = doc.column_names()
    col_index = {name: j for j, name in enumerate(cols)}
    m, n = len(rows), len(cols)

    A = np.zeros((m, n))
    c = np.zeros(n)
    for col, rname, v in doc.columns:
        j = col_index[col]
        if rname == objective:
            c[j] += v
        elif rname in row_index:
            A[row_index[rname], j] += v

    b = np.zeros(m)
    constant = 0.0
    for _, rname, v in doc.rhs:
        if rname == objective:
            constant = -v
        elif rname in row_index:
            b[row_index[rname]] = v
    ranges = np.full(m, np.nan)
    for _, rname, v in doc.ranges:
        if rname in row_index:
            ranges[row_index[rname]] = v

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for kind, _, col, v in doc.bounds:
        if col not in col_index:
            raise MpsError(f"bound on unknown column {col!r}")
        j = col_index[col]
        if kind == "UP":
            upper[j] = v
            # historical MPS rule: a negative UP on a default lower bound frees it
            if v < 0 and lower[j] == 0.0:
                lower[j] = -np.inf
        elif kind == "LO":
            lower[j] = v
        elif kind == "FX":
            lower[j] = upper[j] = v
        elif kind == "FR":
            lower[j], upper[j] = -np.inf, np.inf
        elif kind == "MI":
            lower[j] = -np.inf
        elif kind == "PL":
            upper[j] = np.inf

    sense = Sense.MAXIMIZE if (doc.objsense or "").startswith("MAX") else Sense.MINIMIZE
    return GeneralLP(
        name=doc.name,
        sense=sense,
        row_kind=[RowKind(kind) for kind, _ in rows],
        coeffs=A,
        objective=c,
        rhs=b,
        ranges=ranges,
        lower=lower,
        upper=upper,
        row_names=[name for _, name in rows],
        col_names=cols,
        objective_constant=constant,
    )


def read_mps(path) -> GeneralLP:
    """Read an MPS file from disk."""
    return to_general_lp(parse_mps(Path(path)))


def _num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _line(*fields: str) -> str:
    # fixed-format positions when everything fits, plain blanks otherwise
    widths = (2, 8, 8, 12, 8, 12)
    starts = (1, 4, 14, 24, 39, 49)
    if all(len(f) <= w for f, w in zip(fields, widths)):
        out = ""
        for f, s in zip(fields, starts):
            out = out.ljust(s) + f
        return out.rstrip()
    return (" " + " ".join(f if f else "" for f in fields if f)).rstrip()


def emit_mps(doc: MpsDocument) -> str:
    """Render a document; ``parse_mps(emit_mps(d)) == d``."""
    out = [f"NAME          {doc.name}".rstrip()]
    if doc.objsense:
        out += ["OBJSENSE", f"    {doc.objsense}"]
    out.append("ROWS")
    for kind, name in doc.rows:
        out.append(_line(kind, name))
    out.append("COLUMNS")
    for col, rname, v in doc.columns:
        out.append(_line("", col, rname, _num(v)))
    out.append("RHS")
    for set_name, rname, v in doc.rhs:
        out.append(_line("", set_name or "RHS", rname, _num(v)))
    if doc.ranges:
        out.append("RANGES")
        for set_name, rname, v in doc.ranges:
            out.append(_line("", set_name or "RNG", rname, _num(v)))
    if doc.bounds:
        out.append("BOUNDS")
        for kind, set_name, col, v in doc.bounds:
            if kind in ("FR", "MI", "PL"):
                out.append(_line(kind, set_name or "BND", col))
            else:
                out.append(_line(kind, set_name or "BND", col, _num(v)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def document_from_lp(lp: GeneralLP) -> MpsDocument:
    """Describe ``lp`` as an MPS document (objective row named ``COST``)."""
    m, n = lp.coeffs.shape
    rnames = lp.row_names or [f"R{i + 1}" for i in range(m)]
    cnames = lp.col_names or [f"X{j + 1}" for j in range(n)]
    doc = MpsDocument(name=lp.name or "LP")
    if lp.sense is Sense.MAXIMIZE:
        doc.objsense = "MAX"
    doc.rows.append(("N", "COST"))
    for kind, name in zip(lp.row_kind, rnames):
        doc.rows.append((kind.value, name))
    for j, cname in enumerate(cnames):
        if lp.objective[j] != 0.0:
            doc.columns.append((cname, "COST", float(lp.objective[j])))
        for i in np.flatnonzero(lp.coeffs[:, j]):
            doc.columns.append((cname, rnames[i], float(lp.coeffs[i, j])))
        if lp.objective[j] == 0.0 and not np.any(lp.coeffs[:, j]):
            # keep empty columns declared
            doc.columns.append((cname, "COST", 0.0))
    for i, name in enumerate(rnames):
        if lp.rhs[i] != 0.0:
            doc.rhs.append(("RHS", name, float(lp.rhs[i])))
    if lp.objective_constant:
        doc.rhs.append(("RHS", "COST", -float(lp.objective_constant)))
    for i, name in enumerate(rnames):
        if not np.isnan(lp.ranges[i]):
            doc.ranges.append(("RNG", name, float(lp.ranges[i])))
    for j, cname in enumerate(cnames):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo == hi:
            doc.bounds.append(("FX", "BND", cname, float(lo)))
            continue
        if lo == -np.inf and hi == np.inf:
            doc.bounds.append(("FR", "BND", cname, 0.0))
            continue
        if lo == -np.inf:
            doc.bounds.append(("MI", "BND", cname, 0.0))
        elif lo != 0.0:
            doc.bounds.append(("LO", "BND", cname, float(lo)))
        if hi != np.inf:
            doc.bounds.append(("UP", "BND", cname, float(hi)))
    return doc


def write_mps(lp: GeneralLP, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(emit_mps(document_from_lp(lp)))
