"""Command-line entry points.

    mcflow run <config-or-preset> [--output-dir DIR] [--t-end T] [--dt DT]
    mcflow verify <suite> [--output-dir DIR]

``run`` executes a simulation from a TOML file or a shipped preset name
and writes the CSV time series plus snapshots; ``verify`` executes one of
the acceptance suites, printing one PASS/FAIL line per check.  Exit codes:
0 success, 1 verification failure, 2 invalid configuration, 3 aborted
run (step rejected beyond recovery), 4 output error.
"""

from __future__ import annotations

import argparse
import sys

from .config import PRESETS, load_config
from .errors import ConfigInvalid, McflowError, StepRejected
from .run import run_simulation
from .verify import SUITES, run_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcflow",
        description="Multicomponent diffusion and premixed-flame channel simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a simulation from a config file or preset")
    run_p.add_argument(
        "config",
        help=f"path to a TOML run file, or one of the presets: {', '.join(PRESETS)}",
    )
    run_p.add_argument("--output-dir", default=None, help="override the output directory")
    run_p.add_argument("--t-end", type=float, default=None, help="override the final time")
    run_p.add_argument("--dt", type=float, default=None, help="override the time step")

    ver_p = sub.add_parser("verify", help="run an acceptance verification suite")
    ver_p.add_argument("suite", choices=sorted(SUITES), help="suite name")
    ver_p.add_argument(
        "--output-dir", default=None, help="keep simulation outputs of the suite runs here"
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            result = run_simulation(
                cfg, output_dir=args.output_dir, t_end=args.t_end, dt=args.dt
            )
            last = result.reports[-1] if result.reports else None
            print(
                f"{cfg.label}: {result.steps} steps to t = {result.time:g} "
                f"in {result.wall_time:.1f}s"
            )
            if last is not None:
                print(
                    f"  final monitors: min Y {last.min_y:.3e}, max |sum-1| "
                    f"{last.max_sum_deviation:.3e}, min theta {last.min_theta:.3e}, "
                    f"max div v {last.max_div_v:.3e}, Gibbs {last.gibbs_energy:.6e}"
                )
            print(f"  time series: {result.series_path}")
            for snap in result.snapshot_paths:
                print(f"  snapshot: {snap}")
            return 0
        if args.command == "verify":
            ok = run_suite(args.suite, output_dir=args.output_dir)
            return 0 if ok else 1
    except ConfigInvalid as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except StepRejected as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 4
    except McflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
