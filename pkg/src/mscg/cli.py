"""Command-line benchmark driver: one subcommand per experiment."""

from __future__ import annotations

import argparse
import sys

from .harness import RUNNERS, StudyReport, make_config
from .solvers import SolveReport


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--variance", type=float)
    p.add_argument("--model", choices=["power_law", "gaussian"])
    p.add_argument("--scale", type=float, help="linear coarsening factor between levels")
    p.add_argument("--f", type=float, dest="f", help="per-level tolerance tightening factor")
    p.add_argument("--epsilon", type=float, help="absolute RMS residual target")
    p.add_argument("--reduction", type=float, help="target drop of ||r||^2/N (default 1e10)")
    p.add_argument("--m", type=int, help="smoothing degree override")
    p.add_argument("--preconditioner",
                   choices=["recursive", "tatebe", "polynomial", "standard_mg"])
    p.add_argument("--semi-coarsen", action="store_true", default=None, dest="semi_coarsen")
    p.add_argument("--coarsest-n", type=int, dest="coarsest_n")
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--outdir", help="directory for CSV/JSON/field exports")


def _parse_sizes(raw: str) -> tuple[int, ...]:
    return tuple(int(p) for p in raw.split(",") if p.strip())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mscg",
        description="Multi-scale preconditioned conjugate gradient benchmarks "
                    "for heterogeneous porous flow.")
    sub = ap.add_subparsers(dest="experiment", required=True)

    p = sub.add_parser("base", help="single solve of the base case, per-level table")
    _add_common(p)
    p.add_argument("--dirichlet-top-bottom", action="store_true", default=None,
                   dest="dirichlet_top_bottom")

    p = sub.add_parser("scaling", help="growing subgrids of one master field")
    _add_common(p)
    p.add_argument("--sizes", type=_parse_sizes, help="comma-separated grid sizes")
    p.add_argument("--master-n", type=int, dest="master_n")

    p = sub.add_parser("accuracy", help="iterations vs achieved error")
    _add_common(p)

    p = sub.add_parser("variance", help="iterations vs field variance")
    _add_common(p)
    p.add_argument("--variances", type=lambda s: tuple(float(x) for x in s.split(",")))

    p = sub.add_parser("channel", help="anisotropic channel with semi-coarsening")
    _add_common(p)
    p.add_argument("--cell-aspect", type=float, dest="cell_aspect")

    p = sub.add_parser("compare", help="all four methods on the same problem")
    _add_common(p)
    return ap


def _print_report(rep: SolveReport):
    print(f"converged={rep.converged} final_rms={rep.final_rms:.3e} "
          f"wall={rep.wall_time:.3f}s flop_proxy={rep.flop_proxy}")
    hdr = f"{'level':>5} {'grid':>12} {'dimension':>10} {'iterations':>10} " \
          f"{'iter x dim':>12} {'% total':>8}"
    print(hdr)
    for row in rep.table():
        print(f"{row['level']:>5} {row['grid']:>12} {row['dimension']:>10} "
              f"{row['iterations']:>10} {row['iterations_x_dimension']:>12} "
              f"{row['percent_total']:>8.2f}")


def _print_study(study: StudyReport):
    cols = ["nx", "ny", "variance", "preconditioner", "fine_iterations",
            "time_per_point", "final_rms", "converged"]
    print(" ".join(f"{c:>15}" for c in cols))
    for r in study.rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(f"{v:>15.3e}" if isinstance(v, float) else f"{str(v):>15}")
        print(" ".join(cells))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    kw = {k: v for k, v in vars(args).items() if k != "config"}
    cfg = make_config(file=args.config, **kw)
    if cfg.experiment == "channel" and cfg.ny * 4 != cfg.nx:
        # desk-scale channel default: 512 x 128 strip with 10:1 cells
        from dataclasses import replace
        cfg = replace(cfg, nx=512, ny=128, cell_aspect=10.0, semi_coarsen=True,
                      coarsest_n=max(cfg.coarsest_n, 640))
    result = RUNNERS[cfg.experiment](cfg)
    if isinstance(result, tuple):
        study, rep = result
        _print_report(rep)
    else:
        study = result
    _print_study(study)
    if cfg.outdir:
        print(f"exports written to {cfg.outdir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
