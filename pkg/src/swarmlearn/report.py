"""Pairwise comparison tables over finished experiment directories."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import SEASONS, ExperimentConfig, environment_name
from .harness import HarnessError, csv_text, read_csv
from .metrics import drop_missing
from .stats import StatReport, compare

TABLE_COLUMNS = ("family", "context", "comparison", "direction", "p_value", "significant", "test",
                 "A", "magnitude", "dropped")
ARROWS = {"higher": "↑", "lower": "↓", "equal": "="}


@dataclass
class Experiment:
    path: Path
    cfg: ExperimentConfig
    end_values: list[float]
    dropped: int
    pn_by_epoch: list[float | None]

    @property
    def environment(self) -> str:
        return environment_name(self.cfg.env.token_count, self.cfg.env.token_value)

    @property
    def season(self) -> str:
        for name, period in SEASONS.items():
            if period == self.cfg.env.season_period:
                return name
        return f"p{self.cfg.env.season_period}"

    @property
    def variant(self) -> str:
        return self.cfg.learn.variant

    @property
    def name(self) -> str:
        return f"{self.environment}/{self.season}/{self.variant}"


def _is_experiment(p: Path) -> bool:
    return (p / "manifest.json").is_file() and (p / "end_values.csv").is_file()


def discover(dirs: Sequence[str | Path]) -> list[Path]:
    """Experiment directories among ``dirs`` and their immediate children."""
    found = []
    for d in map(Path, dirs):
        if _is_experiment(d):
            found.append(d)
        elif d.is_dir():
            found += sorted(c for c in d.iterdir() if _is_experiment(c))
        else:
            raise HarnessError(f"{d} is not a directory")
    return found


def load_experiment(path: str | Path) -> Experiment:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    cfg = ExperimentConfig.loads((path / "config.yaml").read_text())
    rows = read_csv(path / "end_values.csv")
    if len(rows) != manifest["runs"]:
        raise HarnessError(f"{path}: {len(rows)} of {manifest['runs']} runs present")
    vals, dropped = drop_missing(float(r["totalTokenRatio"]) if r["totalTokenRatio"] else None
                                 for r in rows)
    if len(vals) < 3:
        raise HarnessError(f"{path}: fewer than 3 runs with an end value")
    per_epoch: dict[int, list[float]] = {}
    for r in read_csv(path / "epochs.csv"):
        if r["pn_diff"]:
            per_epoch.setdefault(int(r["epoch"]), []).append(float(r["pn_diff"]))
    n_ep = max(per_epoch) + 1 if per_epoch else 0
    pn = [float(np.median(per_epoch[e])) if e in per_epoch else None for e in range(n_ep)]
    return Experiment(path, cfg, vals, dropped, pn)


def _check_windows(exps: Sequence[Experiment]) -> None:
    windows = {(e.cfg.run.epoch, e.cfg.run.end_epochs) for e in exps}
    if len(windows) > 1:
        raise HarnessError(f"experiments use different metric windows: {sorted(windows)}")


def _row(family: str, context: str, a: Experiment, b: Experiment, label_a: str, label_b: str) -> tuple:
    rep: StatReport = compare(a.end_values, b.end_values, comparison=f"{label_a} vs {label_b}")
    return (family, context, rep.comparison, rep.symbol, rep.p_value, int(rep.significant),
            rep.chosen_test, rep.vd_a, rep.magnitude, a.dropped + b.dropped)


def pairwise_tables(exps: Sequence[Experiment]) -> dict[str, list[tuple]]:
    """Rows for the environment, season and variant families plus all pairs."""
    families = {"environments": [], "seasons": [], "variants": [], "all_pairs": []}
    axes = {
        "environments": (lambda e: e.environment, lambda e: f"{e.season}/{e.variant}"),
        "seasons": (lambda e: e.season, lambda e: f"{e.environment}/{e.variant}"),
        "variants": (lambda e: e.variant, lambda e: f"{e.environment}/{e.season}"),
    }
    for family, (level, context) in axes.items():
        groups: dict[str, list[Experiment]] = {}
        for e in exps:
            groups.setdefault(context(e), []).append(e)
        for ctx, members in groups.items():
            for a, b in itertools.combinations(members, 2):
                if level(a) != level(b):
                    families[family].append(_row(family, ctx, a, b, level(a), level(b)))
    for a, b in itertools.combinations(exps, 2):
        families["all_pairs"].append(_row("all_pairs", "", a, b, a.name, b.name))
    return families


def medians_table(exps: Sequence[Experiment]) -> list[tuple]:
    """Median end value per experiment with an arrow against Baseline in the same setting."""
    base = {(e.environment, e.season): e for e in exps if e.variant == "Baseline"}
    rows = []
    for e in exps:
        arrow, mag, p = "", "", None
        ref = base.get((e.environment, e.season))
        if ref is not None and ref is not e:
            rep = compare(e.end_values, ref.end_values)
            arrow, mag, p = ARROWS[rep.direction], rep.magnitude, rep.p_value
        rows.append((e.environment, e.season, e.variant, float(np.median(e.end_values)),
                     len(e.end_values), arrow, p, mag))
    return rows


def _markdown(rows: Sequence[tuple]) -> str:
    lines = ["| context | comparison | dir | p | A | magnitude | test |",
             "|---|---|---|---|---|---|---|"]
    for fam, ctx, comp, sym, p, sig, test, a, mag, _ in rows:
        ptxt = f"{p:.3g}"
        if sig:
            ptxt = f"**{ptxt}**"
        lines.append(f"| {ctx} | {comp} | {sym} | {ptxt} | {a:.3f} | {mag} | {test} |")
    return "\n".join(lines) + "\n"


def report(dirs: Sequence[str | Path], out: str | Path) -> dict[str, list[tuple]]:
    from .harness import _prepare_dir
    from .plotting import plot_end_boxplots, plot_pn_trend
    paths = discover(dirs)
    if len(paths) < 2:
        raise HarnessError("report needs at least two completed experiments")
    exps = [load_experiment(p) for p in paths]
    _check_windows(exps)
    target = _prepare_dir(out)
    tables = pairwise_tables(exps)
    for family, rows in tables.items():
        (target / f"{family}.csv").write_text(csv_text(TABLE_COLUMNS, rows))
        if family != "all_pairs":
            (target / f"{family}.md").write_text(_markdown(rows))
    med = medians_table(exps)
    (target / "medians.csv").write_text(csv_text(
        ("environment", "season", "variant", "median_end", "runs", "vs_baseline", "p_value", "magnitude"),
        med))
    names = [e.name for e in exps]
    if len(set(names)) < len(names):
        names = [f"{n} [{e.path.name}]" for n, e in zip(names, exps)]
    plot_pn_trend(dict(zip(names, (e.pn_by_epoch for e in exps))), exps[0].cfg.run.epoch,
                  target / "pn_trend.png")
    plot_end_boxplots(dict(zip(names, (e.end_values for e in exps))), target / "end_values.png")
    tables["medians"] = med
    return tables
