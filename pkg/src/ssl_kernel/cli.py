"""`ssl-kernel` command line driver.

Subcommands: spiral-demo, experiment, ablate, sdp-check.  Every run is fully
determined by the config file plus --seed, so repeated runs write identical
bytes.  Exit codes: 0 success, 2 config error, 3 solver non-convergence,
4 resource cap exceeded.
"""

import argparse
import sys

from . import config as cfgmod
from . import experiments
from .config import ConfigError, ResourceCapError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_RESOURCE = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ssl-kernel",
        description="Induced kernels from self-supervised losses: demos and experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("spiral-demo", "visualize the induced kernel on the two-spiral dataset"),
        ("experiment", "three-arm SSL vs supervised comparison on IDX image data"),
        ("ablate", "accuracy grids over representation dimension and regularizers"),
        ("sdp-check", "batched SDP solve with closed-form comparison"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="global seed override")
        p.add_argument("--workers", type=int, default=None, help="worker count override")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"out": args.out, "seed": args.seed, "workers": args.workers}
    try:
        raw = cfgmod.load_toml(args.config)
        common = cfgmod.parse_common(raw, overrides)
        if args.command == "spiral-demo":
            stats = experiments.spiral_demo(cfgmod.parse_spiral(raw), common)
            for (run, loss), st in sorted(stats.items()):
                print(
                    f"{run:13s} {loss:15s} within={st['within']:+.4f} "
                    f"cross={st['cross']:+.4f} factor={st['factor']:.3f}"
                )
        elif args.command == "experiment":
            base = cfgmod.parse_kernel(raw)
            records = experiments.run_experiment(cfgmod.parse_experiment(raw), common, base)
            for rec in records:
                print(
                    f"{rec['experiment']:28s} {rec['kernel']:22s} "
                    f"acc={rec['accuracy']:.4f} s_N={rec['s_N']:.2f}"
                )
        elif args.command == "ablate":
            base = cfgmod.parse_kernel(raw)
            result = experiments.run_ablate(cfgmod.parse_ablate(raw), common, base)
            for row in result["rows"]:
                print(
                    f"{row[0]:15s} K={row[1]:<5d} {row[2]}={_short(row[3])} "
                    f"acc={row[4]:.4f} s_N={row[5]:.2f}"
                )
        elif args.command == "sdp-check":
            report = experiments.run_sdp_check(cfgmod.parse_sdp_check(raw), common)
            print(
                f"converged in {report['iterations']} iterations, "
                f"max residual {report['max_residual']:.3e}"
                + (
                    f", closed-form gap {report['closed_form_gap']:.3e}"
                    if report["closed_form_gap"] is not None
                    else ""
                )
            )
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except experiments.SolverError as exc:
        print(f"solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _short(v):
    return repr(v) if isinstance(v, float) else str(v)


if __name__ == "__main__":
    sys.exit(main())
