"""jlps <experiment> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import logging
import re
import sys
import time
from pathlib import Path

from .experiments import RUNNERS
from .harness import (
    EXPERIMENTS,
    ConfigError,
    Recorder,
    build_report,
    load_config,
    verify_report,
    write_csv,
    write_report,
    write_svg,
)
from .quadrature import NumericalFault

log = logging.getLogger("jlps")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_FAULT = 0, 1, 2, 3


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_")


def run_experiment(name: str, config=None, out=None, seed=None, threads=1, plots=False) -> tuple[int, dict | None]:
    """Run one experiment and write its outputs; returns (exit code, report)."""
    try:
        cfg = load_config(name, config)
        if seed is not None:
            if not 0 <= seed < 2**64:
                raise ConfigError("seed must fit in an unsigned 64-bit integer")
            cfg.ensemble = dataclasses.replace(cfg.ensemble, seed=seed)
        if threads < 1:
            raise ConfigError("threads must be >= 1")
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG, None

    outdir = Path(out or cfg.output)
    rec = Recorder()
    t0 = time.perf_counter()
    try:
        RUNNERS[name](cfg, rec, threads)
    except (NumericalFault, FloatingPointError) as exc:
        log.error("numerical fault: %s", exc)
        return EXIT_FAULT, None
    except (KeyError, TypeError) as exc:
        # malformed option tables only surface when the runner reads them
        log.error("config error: %r", exc)
        return EXIT_CONFIG, None
    runtime = time.perf_counter() - t0
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    report = build_report(cfg, rec, runtime, stamp, threads)

    outdir.mkdir(parents=True, exist_ok=True)
    write_report(report, outdir / f"{name}_report.json")
    for gname, (header, rows) in rec.grids.items():
        write_csv(outdir / f"{name}_{_slug(gname)}.csv", header, rows)
    if plots:
        for pname, series in rec.plots.items():
            write_svg(outdir / f"{name}_{_slug(pname)}.svg", series, title=pname)

    for cname, c in report["summary"].items():
        flag = "PASS" if c["passed"] else "FAIL"
        kind = "" if c["hard"] else " (reported)"
        log.info("%s %s = %s [%s %s]%s", flag, cname, c["value"], c["op"], c["threshold"], kind)
    log.info("%s: %s in %.1f s", name, "PASS" if report["passed"] else "FAIL", runtime)
    return (EXIT_PASS if report["passed"] else EXIT_FAIL), report


def _verify(path: str) -> int:
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    problems = verify_report(report)
    for p in problems:
        print(p)
    print("report consistent" if not problems else f"{len(problems)} mismatches")
    return EXIT_PASS if not problems else EXIT_FAIL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="jlps", description="Discrete Jacobi square-function experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="TOML config (defaults apply when omitted)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="ensemble seed (overrides config)")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--plots", action="store_true", help="also write SVG plots")
    v = sub.add_parser("verify", help="re-derive summary verdicts of a JSON report")
    v.add_argument("report")
    parser.add_argument("-q", "--quiet", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr)
    if args.command == "verify":
        return _verify(args.report)
    code, _ = run_experiment(args.command, args.config, args.out, args.seed, args.threads, args.plots)
    return code


if __name__ == "__main__":
    sys.exit(main())
