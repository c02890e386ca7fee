#!/usr/bin/env python3
"""Retrieval time versus available memory, measured and modeled.

Builds one multidimensional (DHC) store and one table store from a synthetic
relation, estimates the model constants from a cold/warm sample, then sweeps
a ladder of memory budgets.  Writes the per-pass CSV and, with --plot, a PNG
of the measured points over the model curves.
"""

import argparse
import sys
import tempfile
from pathlib import Path

from sparsecube import bench, cachemodel, mdstore, tablestore
from sparsecube.blockio import SimCache
from sparsecube.mdstore import StoreParams
from sparsecube.synth import SynthSpec, generate


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="64,64,64,48")
    ap.add_argument("--density", type=float, default=0.0159)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--s-bits", type=int, default=4)
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--samples", type=int, default=300)
    ap.add_argument("--passes", type=int, default=100)
    ap.add_argument("--block-size", type=int, default=4096)
    ap.add_argument("--workdir", default=None, help="store directory (default: temp)")
    ap.add_argument("--out", default="sweep.csv")
    ap.add_argument("--constants-out", default="constants.json")
    ap.add_argument("--plot", default=None, help="write a PNG here (needs matplotlib)")
    args = ap.parse_args()

    cards = tuple(int(x) for x in args.dims.split(","))
    rel = generate(SynthSpec(cards, args.density, seed=args.seed))
    print(f"relation: {rel.n_cells} nonempty of {rel.schema.total_cells}")

    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp())
    workdir.mkdir(parents=True, exist_ok=True)
    md_store = mdstore.build_store(rel, "dhc", StoreParams(diff_bits=args.s_bits))
    mdstore.save(md_store, workdir / "md")
    tablestore.save_table(tablestore.build_table(rel), workdir / "tbl")

    md_cache = SimCache(bench.UNBOUNDED, block_size=args.block_size)
    tbl_cache = SimCache(bench.UNBOUNDED, block_size=args.block_size)
    md = mdstore.load(workdir / "md", cache=md_cache, block_size=args.block_size)
    tbl = tablestore.load_table(workdir / "tbl", cache=tbl_cache)
    try:
        est = bench.estimate_constants(md, md_cache, tbl, tbl_cache, 1000, args.seed)
        params = est.params
        cachemodel.save_params(params, args.constants_out)
        print(
            f"constants (ms): M_m={params.md.M:.5f} D_m={params.md.D:.5f} "
            f"M_t={params.tbl.M:.5f} D_t={params.tbl.D:.5f}"
        )
        md_budgets, tbl_budgets = bench.default_budgets(params, args.points)
        result = bench.memory_sweep(
            md, md_cache, tbl, tbl_cache, params, md_budgets, tbl_budgets,
            samples=args.samples, passes=args.passes, seed=args.seed,
        )
    finally:
        md.close()
        tbl.close()

    bench.write_sweep_csv(result, args.out)
    print(f"{'rep':<5}{'budget':>12}{'measured ms':>13}{'model ms':>11}{'dev':>8}")
    for s in result.summaries:
        print(
            f"{s.rep:<5}{s.budget:>12}{s.measured_ms:>13.4f}"
            f"{s.model_ms:>11.4f}{s.rel_deviation:>7.1%}"
        )
    print(f"wrote {args.out} and {args.constants_out}")

    if args.plot:
        plot(result, params, args.plot)
    return 0


def plot(result, params, path: str) -> None:
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping plot", file=sys.stderr)
        return
    fig, ax = plt.subplots(figsize=(8, 5))
    for rep, color, label in (("md", "tab:blue", "array"), ("tbl", "tab:red", "table")):
        rows = [r for r in result.rows if r.rep == rep]
        ax.scatter(
            [r.used for r in rows], [r.avg_sim_ms for r in rows],
            s=6, alpha=0.4, color=color, label=f"{label} measured",
        )
        xs = sorted({r.used for r in rows})
        fn = cachemodel.t_m if rep == "md" else cachemodel.t_t
        ax.plot(xs, [fn(x, params) for x in xs], color=color, label=f"{label} model")
    ax.set_xlabel("memory used (octets)")
    ax.set_ylabel("avg retrieval time (ms)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    print(f"wrote {path}")


if __name__ == "__main__":
    sys.exit(main())
