"""Experiment orchestration: seeded runs, CSV emission, manifests, checkpoints and the energy sweep."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import pickle
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import ExperimentConfig, SweepConfig
from .controller import Genome
from .metrics import (EPOCH_COLUMNS, EPOCH_UNITS, SEASON_COLUMNS, SEASON_UNITS, EpochRow,
                      MetricAccumulator, SeasonRow, end_value)
from .world import World

log = logging.getLogger(__name__)

EVENT_COLUMNS = ("iteration", "robot", "event", "gid", "parent")
END_COLUMNS = ("run", "seed", "totalTokenRatio", "pn_diff", "dropped_epochs", "alive_final",
               "median_balance")
MULT_COLUMNS = ("iteration", "robot", "gid", "type", "multiplier")
SURFACE_COLUMNS = ("count", "value", "median_delta_E", "neutral_flag")


class HarnessError(RuntimeError):
    pass


@dataclass
class RunRecord:
    run: int
    seed: int
    iterations: int
    epochs: list[EpochRow] = field(default_factory=list)
    seasons: list[SeasonRow] = field(default_factory=list)
    events: list[tuple[int, int, str, int, int]] = field(default_factory=list)
    multipliers: list[tuple[int, int, int, int, float]] = field(default_factory=list)
    genomes: list[Genome] = field(default_factory=list)
    alive_final: int = 0
    median_balance: float = 0.0
    end_epochs: int = 2

    @property
    def end_ratio(self) -> tuple[float | None, int]:
        return end_value([e.ratio for e in self.epochs], self.end_epochs)

    @property
    def end_pn_diff(self) -> float | None:
        return end_value([e.pn_diff for e in self.epochs], self.end_epochs)[0]


# -- single run ------------------------------------------------------------------

@dataclass
class _RunState:
    world: World
    acc: MetricAccumulator
    mults: list[tuple[int, int, int, int, float]]


def _new_state(cfg: ExperimentConfig, run: int, seed: int) -> _RunState:
    world = World.random(cfg, seed)
    return _RunState(world, MetricAccumulator(run, cfg.run.epoch, cfg.env.season_period), [])


def _advance(state: _RunState, until: int) -> None:
    w, acc = state.world, state.acc
    cfg = w.cfg
    epoch = cfg.run.epoch
    while w.iteration < until:
        it = w.iteration
        w.step()
        live = w.live
        alive = int(live.sum())
        if alive:
            mean_e = float(w.energy[live].mean())
            mean_d = float(w.delta_e[live].mean())
        else:
            mean_e = mean_d = 0.0
        acc.add(it, w.season, int(w.step_counts[0]), int(w.step_counts[1]), alive, mean_e, mean_d)
        if cfg.run.multiplier_log and (it + 1) % epoch == 0:
            for i in np.flatnonzero(live):
                for t, v in w.multipliers(int(i)).items():
                    state.mults.append((it + 1, int(i), int(w.gid[i]), t, v))


def save_checkpoint(state: _RunState, path: str | Path) -> None:
    Path(path).write_bytes(pickle.dumps(state, protocol=pickle.HIGHEST_PROTOCOL))


def load_checkpoint(path: str | Path) -> _RunState:
    state = pickle.loads(Path(path).read_bytes())
    if not isinstance(state, _RunState):
        raise HarnessError(f"{path} is not a run checkpoint")
    return state


def run_simulation(cfg: ExperimentConfig, run: int = 0, seed: int | None = None,
                   checkpoint: str | Path | None = None, checkpoint_every: int = 0,
                   resume: bool = False) -> RunRecord:
    """Execute one run to ``cfg.run.max_iterations``.

    With ``checkpoint`` set the run state is pickled there every
    ``checkpoint_every`` iterations; ``resume`` continues from that file.
    A resumed run produces the same record as an uninterrupted one.
    """
    seed = cfg.run.seed + run if seed is None else seed
    if resume and checkpoint is not None and Path(checkpoint).exists():
        state = load_checkpoint(checkpoint)
    else:
        state = _new_state(cfg, run, seed)
    total = cfg.run.max_iterations
    stride = checkpoint_every if (checkpoint is not None and checkpoint_every > 0) else total
    while state.world.iteration < total:
        _advance(state, min(total, state.world.iteration + stride))
        if checkpoint is not None and checkpoint_every > 0:
            save_checkpoint(state, checkpoint)
    w, acc = state.world, state.acc
    acc.finish(w.iteration)
    live_genomes = [g for g in w.genomes if g is not None]
    return RunRecord(run, seed, w.iteration, acc.epochs, acc.seasons,
                     list(w.events) if cfg.run.event_log else [], state.mults, live_genomes,
                     w.alive_count(), float(np.median(w.balance)), cfg.run.end_epochs)


def _run_job(args: tuple[ExperimentConfig, int]) -> RunRecord:
    cfg, run = args
    return run_simulation(cfg, run)


def run_many(cfg: ExperimentConfig, parallel: int = 1) -> list[RunRecord]:
    """All ``cfg.run.runs`` runs (seed_k = seed + k), optionally across worker processes."""
    jobs = [(cfg, k) for k in range(cfg.run.runs)]
    if parallel <= 1 or len(jobs) == 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(_run_job, jobs))


# -- CSV helpers -------------------------------------------------------------------

def _fmt(v: object) -> object:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[object]],
             units: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    if units is not None:
        buf.write("# units: " + ",".join(units) + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for r in rows:
        wr.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def export_genomes(genomes: Sequence[Genome], cfg: ExperimentConfig) -> bytes:
    """Length-prefixed genome blobs."""
    from .controller import RnnSpec
    spec = RnnSpec(hidden=cfg.robot.hidden)
    out = [struct.pack("<I", len(genomes))]
    for g in genomes:
        blob = g.to_bytes(spec)
        out.append(struct.pack("<I", len(blob)))
        out.append(blob)
    return b"".join(out)


def import_genomes(blob: bytes, cfg: ExperimentConfig) -> list[Genome]:
    from .controller import RnnSpec
    spec = RnnSpec(hidden=cfg.robot.hidden)
    (n,) = struct.unpack_from("<I", blob, 0)
    off = 4
    out = []
    for _ in range(n):
        (k,) = struct.unpack_from("<I", blob, off)
        off += 4
        out.append(Genome.from_bytes(blob[off:off + k], spec))
        off += k
    return out


# -- experiment ------------------------------------------------------------------

def _prepare_dir(out: str | Path) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise HarnessError(f"output directory {path} is not writable: {exc}") from exc
    return path


def write_experiment(cfg: ExperimentConfig, records: Sequence[RunRecord], out: str | Path) -> Path:
    path = _prepare_dir(out)
    runs_dir = path / "runs"
    runs_dir.mkdir(exist_ok=True)
    files: list[Path] = []

    def put(p: Path, text: str | bytes) -> None:
        if isinstance(text, bytes):
            p.write_bytes(text)
        else:
            p.write_text(text)
        files.append(p)

    put(path / "config.yaml", cfg.dumps())
    all_epochs: list[tuple] = []
    all_seasons: list[tuple] = []
    end_rows = []
    for rec in records:
        tag = f"run_{rec.run:03d}"
        e_rows = [e.values() for e in rec.epochs]
        s_rows = [s.values() for s in rec.seasons]
        all_epochs += e_rows
        all_seasons += s_rows
        put(runs_dir / f"{tag}_epochs.csv", csv_text(EPOCH_COLUMNS, e_rows, EPOCH_UNITS))
        put(runs_dir / f"{tag}_seasons.csv", csv_text(SEASON_COLUMNS, s_rows, SEASON_UNITS))
        if cfg.run.event_log:
            put(runs_dir / f"{tag}_events.csv", csv_text(EVENT_COLUMNS, rec.events))
        if cfg.run.multiplier_log:
            put(runs_dir / f"{tag}_multipliers.csv", csv_text(MULT_COLUMNS, rec.multipliers))
        put(runs_dir / f"{tag}_genomes.bin", export_genomes(rec.genomes, cfg))
        ratio, dropped = rec.end_ratio
        end_rows.append((rec.run, rec.seed, ratio, rec.end_pn_diff, dropped, rec.alive_final,
                         rec.median_balance))
    put(path / "epochs.csv", csv_text(EPOCH_COLUMNS, all_epochs, EPOCH_UNITS))
    put(path / "seasons.csv", csv_text(SEASON_COLUMNS, all_seasons, SEASON_UNITS))
    put(path / "end_values.csv", csv_text(END_COLUMNS, end_rows,
                                          ("index", "seed", "ratio", "ratio", "epochs", "robots", "energy")))
    manifest = {
        "config_digest": cfg.digest(),
        "label": cfg.label,
        "version": __version__,
        "runs": len(records),
        "seed": cfg.run.seed,
        "epoch": cfg.run.epoch,
        "end_epochs": cfg.run.end_epochs,
        "files": {str(p.relative_to(path)): _sha256(p) for p in sorted(files)},
    }
    (path / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def run_experiment(config: ExperimentConfig | Sequence[ExperimentConfig], out: str | Path,
                   parallel: int = 1) -> list[Path]:
    """Run one experiment (or a preset grid, one sub-directory per config) and write its files."""
    configs = [config] if isinstance(config, ExperimentConfig) else list(config)
    base = _prepare_dir(out)
    written = []
    for cfg in configs:
        target = base if len(configs) == 1 else base / cfg.label
        log.info("running %s: %d runs x %d iterations", cfg.label, cfg.run.runs, cfg.run.max_iterations)
        records = run_many(cfg, parallel)
        written.append(write_experiment(cfg, records, target))
    return written


# -- energy sweep -------------------------------------------------------------------

def _sweep_job(args: tuple[ExperimentConfig, int]) -> float:
    cfg, run = args
    world = World.random(cfg, cfg.run.seed + run)
    world.run(cfg.run.max_iterations)
    # dead robots keep the delta-energy they had when they ran dry
    return float(np.median(world.delta_e))


def neutral_flags(values: Sequence[float], medians: Sequence[float]) -> list[bool]:
    """Mark the cells on either side of each sign change along one row."""
    flags = [False] * len(values)
    for k in range(len(values) - 1):
        if (medians[k] <= 0.0) != (medians[k + 1] <= 0.0):
            flags[k] = flags[k + 1] = True
    return flags


def sweep_neutral_line(sweep: SweepConfig, out: str | Path | None = None,
                       parallel: int = 1) -> list[tuple[int, float, float, bool]]:
    """Median final delta-energy per (count, value) cell of a static Baseline world.

    Each run contributes the median over robots of the current genome's
    delta-energy (gains minus costs since activation, before clamping); the
    cell value is the median over runs. Runs share seeds across cells.
    """
    jobs, keys = [], []
    for count in sweep.counts:
        for value in sweep.values:
            cfg = sweep.base.with_overrides(**{
                "env.token_count": int(count), "env.token_value": float(value),
                "env.season_period": 0, "run.max_iterations": sweep.iterations,
                "run.seed": sweep.seed, "run.event_log": False})
            for r in range(sweep.runs):
                jobs.append((cfg, r))
                keys.append((count, value))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    per_cell: dict[tuple[int, float], list[float]] = {}
    for key, val in zip(keys, results):
        per_cell.setdefault(key, []).append(val)
    rows = []
    for count in sweep.counts:
        meds = [float(np.median(per_cell[(count, v)])) for v in sweep.values]
        for v, m, f in zip(sweep.values, meds, neutral_flags(sweep.values, meds)):
            rows.append((int(count), float(v), m, f))
    if out is not None:
        path = _prepare_dir(out)
        (path / "sweep.yaml").write_text(sweep.dumps())
        (path / "surface.csv").write_text(csv_text(
            SURFACE_COLUMNS, [(c, v, m, int(f)) for c, v, m, f in rows],
            ("tokens per type", "energy", "energy", "bool")))
        from .plotting import plot_surface
        plot_surface(rows, path / "surface.png")
    return rows
