"""Convert linprog-style ``.npz`` Netlib problems into MPS files.

The ``.npz`` files (keys ``c, A_ub, b_ub, A_eq, b_eq, bounds, obj``) ship
with SciPy's source distribution under
``benchmarks/benchmarks/linprog_benchmark_files``.  Reference objectives are
written as a comment line at the top of each MPS file.

    python tools/npz_to_mps.py SRC_DIR DEST_DIR RECIPE SCSD1 ...
"""

import argparse
from pathlib import Path

import numpy as np

from tiledsimplex.model import GeneralLP, RowKind, Sense
from tiledsimplex.mps import document_from_lp, emit_mps


def load_npz(path: Path) -> tuple[GeneralLP, float]:
    d = np.load(path, allow_pickle=True)
    c = d["c"].astype(float)
    n = len(c)
    a_ub = d["A_ub"].reshape(-1, n)
    a_eq = d["A_eq"].reshape(-1, n)
    rows = [RowKind.LE] * len(a_ub) + [RowKind.EQ] * len(a_eq)
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    bounds = d["bounds"]
    if bounds.size:
        for j, (lo, hi) in enumerate(bounds.reshape(-1, 2)):
            lower[j] = -np.inf if lo is None else float(lo)
            upper[j] = np.inf if hi is None else float(hi)
    lp = GeneralLP(
        name=path.stem,
        sense=Sense.MINIMIZE,
        row_kind=rows,
        coeffs=np.vstack([a_ub, a_eq]),
        objective=c,
        rhs=np.concatenate([d["b_ub"].ravel(), d["b_eq"].ravel()]),
        lower=lower,
        upper=upper,
    )
    return lp, float(d["obj"])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", type=Path)
    ap.add_argument("dest", type=Path)
    ap.add_argument("names", nargs="+")
    args = ap.parse_args()
    args.dest.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        lp, obj = load_npz(args.src / f"{name.upper()}.npz")
        text = emit_mps(document_from_lp(lp))
        out = args.dest / f"{name.lower()}.mps"
        out.write_text(f"* reference objective {obj!r}\n" + text)
        print(f"{out}: {lp.num_rows} rows, {lp.num_cols} cols, objective {obj}")


if __name__ == "__main__":
    main()
