"""Command line entry point: ``run``, ``sweep`` and ``report``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, SweepConfig, apply_preset, load_config
from .harness import HarnessError, run_experiment, sweep_neutral_line
from .report import report


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmlearn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment or a preset grid")
    run.add_argument("--config", type=Path, help="YAML file with dotted keys (defaults apply otherwise)")
    run.add_argument("--preset", help="e.g. desk:abundant:static:EVO+IL or desk:grid")
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--parallel", type=int, default=1, help="worker processes (runs only)")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override one dotted config key; repeatable")

    sw = sub.add_parser("sweep", help="energy balance surface over (token count, value)")
    sw.add_argument("--config", type=Path)
    sw.add_argument("--out", type=Path, required=True)
    sw.add_argument("--parallel", type=int, default=1)

    rep = sub.add_parser("report", help="pairwise comparison tables")
    rep.add_argument("--in", dest="inputs", nargs="+", type=Path, required=True)
    rep.add_argument("--out", type=Path, required=True)
    return p


def _overrides(pairs: list[str]) -> dict[str, str]:
    out = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _run(args: argparse.Namespace) -> int:
    base = load_config(args.config) if args.config else ExperimentConfig()
    configs = apply_preset(args.preset, base) if args.preset else [base]
    extra = _overrides(args.set)
    if args.seed is not None:
        extra["run.seed"] = args.seed
    if extra:
        configs = [c.with_overrides(**extra) for c in configs]
    for path in run_experiment(configs, args.out, args.parallel):
        print(path)
    return 0


def _sweep(args: argparse.Namespace) -> int:
    sweep = SweepConfig.loads(args.config.read_text()) if args.config else SweepConfig()
    rows = sweep_neutral_line(sweep, args.out, args.parallel)
    print("count,value,median_delta_E,neutral_flag")
    for c, v, m, f in rows:
        print(f"{c},{v:g},{m:.3f},{int(f)}")
    return 0


def _report(args: argparse.Namespace) -> int:
    tables = report(args.inputs, args.out)
    for row in tables["medians"]:
        env, season, variant, med, n, arrow, _, mag = row
        print(f"{env:>9} {season:>6} {variant:>8}  median={med:.4f} (n={n}) {arrow} {mag}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _run, "sweep": _sweep, "report": _report}[args.command]
    try:
        return handler(args)
    except (ConfigError, HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
