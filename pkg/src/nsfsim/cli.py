"""``nsf`` command line: run, check, diagnose, monitor, plotdata.

Failures print one line starting with ``error:`` on stderr. Exit codes:
0 success, 1 failed check or lost positivity, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import config as cfgmod
from .diagnostics import compute_D0, record
from .integrator import (DataCheckFailed, StabilityBoundExceeded, check_compatibility,
                         check_data_class, run)
from .io import (SnapshotError, TimeseriesWriter, read_snapshot, read_timeseries,
                 write_plotdata, write_snapshot, write_timeseries)
from .monitor import POSITIVITY, RegularityMonitor
from .state import PositivityLost

log = logging.getLogger("nsfsim")

EXIT_FAILED = 1
EXIT_USAGE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _say(args, text: str):
    if not args.quiet:
        print(text)


def _snapshot_name(step: int) -> str:
    return f"snap_{step:06d}.nsf"


def cmd_check(args) -> int:
    cfg = cfgmod.load_config(args.config)
    prob = cfgmod.build_problem(cfg)
    dc = check_data_class(prob.state0, prob.bdata)
    compat = check_compatibility(prob.state0, prob.bdata, prob.params)
    tol = cfg["check.compat_tol"]
    lines = ["[data-class]", *dc.lines(), "[compatibility]", *compat.lines(tol)]
    try:
        d0 = compute_D0(prob.state0, prob.bdata)
        lines += ["[data-size]", f"D0 = {d0.value:.6e}"]
        lines += [f"  {k} = {v:.6e}" for k, v in d0.terms.items()]
    except ValueError as exc:
        lines += ["[data-size]", f"unavailable: {exc}"]
    _say(args, "\n".join(lines))
    if not dc.passed:
        raise CliError("data class check failed: " + "; ".join(dc.failures), EXIT_FAILED)
    if not compat.passed(tol):
        raise CliError(f"compatibility residuals exceed {tol:g}", EXIT_FAILED)
    return 0


def cmd_run(args) -> int:
    cfg = cfgmod.load_config(args.config)
    prob = cfgmod.build_problem(cfg)
    outdir = Path(args.output_dir or cfg.resolve(cfg["output.dir"]))
    outdir.mkdir(parents=True, exist_ok=True)
    every = cfg["output.snapshot_every"] if args.snapshot_every is None else args.snapshot_every
    if every < 0:
        raise CliError("--snapshot-every must be >= 0")
    monitor = RegularityMonitor(prob.monitor)
    count = {"step": 0}

    with TimeseriesWriter(outdir / "timeseries.csv") as ts:
        def hook(state, prev, rec):
            count["step"] += 1
            if rec is not None:
                ts.append(rec)
            if every and count["step"] % every == 0:
                write_snapshot(state, outdir / _snapshot_name(count["step"]))

        write_snapshot(prob.state0, outdir / _snapshot_name(0))
        try:
            result = run(prob.state0, prob.bdata, prob.params, prob.step, prob.t_end,
                         record_every=cfg["diagnostics.interval"], monitor=monitor,
                         hooks=(hook,), override_compat=args.override_compat,
                         compat_tol=cfg["check.compat_tol"],
                         decompose=cfg["diagnostics.decompose"])
        except PositivityLost as exc:
            report = dataclasses.replace(monitor.report, classification=POSITIVITY)
            (outdir / "report.txt").write_text(report.to_text() + "\n")
            raise CliError(str(exc), EXIT_FAILED) from None
        except DataCheckFailed as exc:
            raise CliError(f"initial data rejected: {exc}", EXIT_FAILED) from None

    write_snapshot(result.state, outdir / "final.nsf")
    text = result.report.to_text()
    (outdir / "report.txt").write_text(text + "\n")
    _say(args, f"{result.steps} steps to t = {result.state.time!r}, output in {outdir}")
    _say(args, text)
    return 0


def cmd_diagnose(args) -> int:
    cfg = cfgmod.load_config(args.config)
    prob = cfgmod.build_problem(cfg)
    prev = read_snapshot(args.first, prob.grid)
    now = read_snapshot(args.second, prob.grid)
    dt = args.dt if args.dt is not None else now.time - prev.time
    if not dt > 0:
        raise CliError(f"snapshot times give dt = {dt!r}; pass --dt for a positive step")
    rec = record(now, prev, prob.bdata, prob.params, dt, solver=prob.solver,
                 decompose=cfg["diagnostics.decompose"])
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_timeseries([rec], out / "diagnose.csv")
    width = max(len(k) for k in rec.as_dict())
    _say(args, "\n".join(f"{k:<{width}} = {v!r}" for k, v in rec.as_dict().items()))
    return 0


def cmd_monitor(args) -> int:
    records = read_timeseries(args.timeseries)
    mcfg = cfgmod.load_config(args.config).monitor() if args.config else None
    mon = RegularityMonitor(mcfg) if mcfg is not None else RegularityMonitor()
    for rec in records:
        mon.update(rec)
    text = mon.report.to_text()
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text + "\n")
    print(text)
    return 0


def cmd_plotdata(args) -> int:
    records = read_timeseries(args.timeseries)
    out = Path(args.output_dir or Path(args.timeseries).parent / "plotdata")
    paths = write_plotdata(records, out)
    _say(args, f"wrote {len(paths)} files to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", help="directory for outputs")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument("--verbose", action="store_true", help="log at debug level")

    p = _Parser(prog="nsf", description="Compressible heat-conducting viscous fluid solver "
                "with regularity diagnostics.",
                epilog=cfgmod.help_text() + "\n\nNSF_THREADS caps the thread count of the "
                "numerical libraries (0 = library default).",
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", parents=[common], help="integrate a configuration")
    r.add_argument("config")
    r.add_argument("--snapshot-every", type=int, default=None, metavar="N",
                   help="write a snapshot every N steps (overrides [output] snapshot_every)")
    r.add_argument("--override-compat", action="store_true",
                   help="run even if compatibility residuals exceed the tolerance")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", parents=[common], help="report data class and compatibility")
    c.add_argument("config")
    c.set_defaults(func=cmd_check)

    d = sub.add_parser("diagnose", parents=[common], help="one record from two snapshots")
    d.add_argument("first", help="earlier snapshot")
    d.add_argument("second", help="later snapshot")
    d.add_argument("config")
    d.add_argument("--dt", type=float, default=None,
                   help="time step between the snapshots (default: difference of their times)")
    d.set_defaults(func=cmd_diagnose)

    m = sub.add_parser("monitor", parents=[common], help="classify a time series offline")
    m.add_argument("timeseries")
    m.add_argument("--config", default=None, help="take the [monitor] settings from a config")
    m.set_defaults(func=cmd_monitor)

    pd = sub.add_parser("plotdata", parents=[common], help="two-column file per channel")
    pd.add_argument("timeseries")
    pd.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except StabilityBoundExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (cfgmod.ConfigError, SnapshotError, ValueError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
