"""``hartree-scatter`` command line.

Exit status: 0 on success, 1 for invalid configs or inputs (and failed
self-tests), 2 when a run aborts on a monitor (mass drift, boundary breach,
non-finite values).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig
from .harness import compare, convergence_study, fit_quantity, format_value, read_diagnostics
from .io import FormatError
from .propagator import EvolutionAbort

log = logging.getLogger("hartree_scatter")


def _window(text: str) -> tuple[float, float]:
    try:
        a, b = (float(p) for p in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like a:b") from None
    if not a < b:
        raise argparse.ArgumentTypeError("window needs a < b")
    return a, b


def _values(text: str) -> list[float]:
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("values must be comma separated numbers") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hartree-scatter",
        description="Pseudospectral Hartree NLS runs and wavepacket scattering diagnostics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve a config and write a run directory")
    p.add_argument("config", type=Path)
    p.add_argument("--output-dir", type=Path, default=None, help="overrides output_dir in the config")

    p = sub.add_parser("analyze", help="recompute diagnostics from stored snapshots")
    p.add_argument("run_dir", type=Path)

    p = sub.add_parser("fit", help="log-log slope of a diagnostic column")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--quantity", required=True, choices=["linf", "h0beta", "residual"])
    p.add_argument("--window", required=True, type=_window, metavar="A:B")

    p = sub.add_parser("converge", help="self-convergence in tau or N")
    p.add_argument("config", type=Path)
    p.add_argument("--vary", required=True, choices=["tau", "n"])
    p.add_argument("--values", type=_values, default=None, help="comma separated sequence")
    p.add_argument("--t-end", type=float, default=None)

    p = sub.add_parser("compare", help="worst relative difference per diagnostic column")
    p.add_argument("run_a", type=Path)
    p.add_argument("run_b", type=Path)

    p = sub.add_parser("selftest", help="run the example suite")
    p.add_argument("--select", default=None, help="substring filter on check names")
    return parser


def _cmd_run(args) -> int:
    from .harness import run

    cfg = RunConfig.from_file(args.config)
    out = args.output_dir or Path(cfg.output_dir)

    def progress(t, row):
        log.info("t=%g linf=%.4g mass=%.12g", t, row["linf"], row["mass"])

    res = run(cfg, output_dir=out, progress=progress)
    prof = res.profile
    print(f"run_dir,{out}")
    print(f"rows,{len(res.rows)}")
    if prof is not None:
        print(f"profile_tail,{format_value(prof.tail)}")
        print(f"profile_accepted,{prof.accepted}")
    return 0


def _cmd_analyze(args) -> int:
    from .harness import analyze

    if not (args.run_dir / "manifest.txt").exists():
        raise FileNotFoundError(f"{args.run_dir} has no manifest.txt")
    rows = analyze(args.run_dir)
    print(f"analysis,{args.run_dir / 'analysis.csv'}")
    print(f"rows,{len(rows)}")
    return 0


def _cmd_fit(args) -> int:
    rows = read_diagnostics(args.run_dir / "diagnostics.csv")
    fit = fit_quantity(rows, args.quantity, args.window)
    print("quantity,t_a,t_b,slope,intercept,residual,samples")
    print(f"{args.quantity},{args.window[0]},{args.window[1]},{format_value(fit.slope)},"
          f"{format_value(fit.intercept)},{format_value(fit.residual)},{fit.n}")
    return 0


def _cmd_converge(args) -> int:
    cfg = RunConfig.from_file(args.config)
    values = args.values
    if values is not None and args.vary == "n":
        values = [int(v) for v in values]
    rep = convergence_study(cfg, args.vary, values, args.t_end)
    sys.stdout.write(rep.table())
    return 0


def _cmd_compare(args) -> int:
    diff = compare(args.run_a, args.run_b)
    matched = diff.pop("_matched")
    print("column,worst_relative_difference")
    for k, v in diff.items():
        print(f"{k},{format_value(v)}")
    print(f"_matched,{matched}")
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import main as selftest_main

    return selftest_main(args.select, sys.stdout)


COMMANDS = {
    "run": _cmd_run,
    "analyze": _cmd_analyze,
    "fit": _cmd_fit,
    "converge": _cmd_converge,
    "compare": _cmd_compare,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except EvolutionAbort as exc:
        print(f"hartree-scatter: run aborted: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, FormatError, FileNotFoundError, ValueError) as exc:
        print(f"hartree-scatter: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
