"""``gdnls`` command line: check-data, simulate, verify, sweep, export.

Exit codes: 0 success, 1 usage or config error, 2 admissibility failure,
3 dynamical escape or contraction failure, 4 a verification property failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import runner, suites
from .config import RunConfig, load
from .errors import ConfigError, GdnlsError

log = logging.getLogger("gdnls")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract reserves 2 for admissibility."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(runner.EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _config(args) -> RunConfig:
    cfg = load(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def cmd_check_data(args) -> int:
    cfg = _config(args)
    _, code, text = runner.check_data(cfg, args.out)
    print(text)
    return code


def cmd_simulate(args) -> int:
    cfg = _config(args)
    result = runner.simulate(cfg, args.out)
    meta = result.metadata
    print(f"status: {result.status}")
    if meta.get("message"):
        print(f"message: {meta['message']}")
    print(f"ledger rows: {len(result.ledger)}")
    if "soliton_peak_drift" in meta:
        print(f"soliton peak drift: {meta['soliton_peak_drift']:.3e} (tolerance {meta['soliton_peak_tolerance']:.3e})")
    if meta.get("certified_window") is not None:
        print(f"certified Picard window: {meta['certified_window']:g}")
    if result.verdict is not None:
        v = result.verdict
        print(f"ball monitor: {'no exit' if v.valid and not v.exited else v.reason or 'exit'}"
              + (f" (ball exit t={v.ball_exit_time}, lower-bound exit t={v.lower_bound_exit_time})" if v.exited else ""))
    print(f"output: {result.run_dir}")
    return result.exit_code


def cmd_verify(args) -> int:
    cfg = _config(args)
    grid = runner.build_grid(cfg)
    names = suites.SUITES if args.suite == "all" else (args.suite,)
    run_dir = runner.resolve_output(cfg, args.out)
    ok = True
    for name in names:
        if name == "lemmas" and args.write_baseline:
            baseline = suites.calibrate(grid, seed=cfg.seed)
            suites.write_baseline(args.write_baseline, baseline)
            print(f"baseline written to {args.write_baseline}")
        results = suites.run_suite(name, grid, cfg.seed, cfg.equation.mu_complex)
        print(f"== {name}")
        for r in results:
            print(r.line())
        path = runner.write_verify(run_dir, name, results)
        print(f"report: {path}")
        ok &= all(r.passed for r in results)
    return runner.EXIT_OK if ok else runner.EXIT_VERIFY_FAILED


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if not args.axis:
        raise GdnlsError("sweep needs at least one --axis NAME=v1,v2,...")
    axes = dict(runner.parse_axis(a) for a in args.axis)
    manifest = runner.sweep(cfg, axes, args.out, args.workers)
    root = runner.resolve_output(cfg, args.out)
    for row in runner.read_summary(root / "summary.csv"):
        print(", ".join(f"{k}={v}" for k, v in row.items() if v != ""))
    print(f"summary: {root / 'summary.csv'}")
    failed = [c for c in manifest["cells"] if c["status"] == "error"]
    return runner.EXIT_USAGE if failed and len(failed) == len(manifest["cells"]) else runner.EXIT_OK


def cmd_export(args) -> int:
    paths = runner.export(args.run_dir, args.what, args.out)
    for p in paths:
        print(p)
    return runner.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gdnls", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--config", type=Path, help="YAML run configuration (defaults if omitted)")
        sp.add_argument("--out", type=Path, help="output directory (overrides output.directory)")
        if seed:
            sp.add_argument("--seed", type=int, help="override the config seed")

    sp = sub.add_parser("check-data", help="test the initial datum against the well-posedness hypotheses")
    common(sp)
    sp.set_defaults(func=cmd_check_data)

    sp = sub.add_parser("simulate", help="evolve one configuration and persist its ledger")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run a property suite")
    common(sp)
    sp.add_argument("--suite", choices=(*suites.SUITES, "all"), default="all")
    sp.add_argument("--write-baseline", type=Path, metavar="PATH",
                    help="recalibrate lemma constants from the corpus and write them to PATH")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="run the cross product of parameter axes")
    common(sp)
    sp.add_argument("--axis", action="append", default=[], metavar="NAME=v1,v2",
                    help=f"axis over one of {', '.join(runner.AXES)}; repeatable")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("export", help="write tab-separated series from a run directory")
    sp.add_argument("run_dir", type=Path)
    sp.add_argument("what", choices=("ledger", "field", "spectrum"))
    sp.add_argument("--out", type=Path)
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return runner.EXIT_USAGE
    except GdnlsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return runner.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
