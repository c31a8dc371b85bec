"""Token-collection metrics, aggregated per epoch and per season."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


def total_token_ratio(p: int, n: int) -> float | None:
    """Share of positive tokens among all collected; None when nothing was collected."""
    if p < 0 or n < 0:
        raise ValueError("counts must be non-negative")
    total = p + n
    return p / total if total else None


def pn_diff_normalised(p: int, n: int) -> float | None:
    if p < 0 or n < 0:
        raise ValueError("counts must be non-negative")
    total = p + n
    return (p - n) / total if total else None


@dataclass(frozen=True)
class SeasonMetrics:
    season_index: int
    positive_collected: int
    negative_collected: int

    @property
    def total_token_ratio(self) -> float | None:
        return total_token_ratio(self.positive_collected, self.negative_collected)

    @property
    def pn_diff_normalised(self) -> float | None:
        return pn_diff_normalised(self.positive_collected, self.negative_collected)


EPOCH_COLUMNS = ("run", "epoch", "season", "p", "n", "totalTokenRatio", "pn_diff", "alive", "mean_energy")
EPOCH_UNITS = ("index", "index", "parity", "tokens", "tokens", "ratio", "ratio", "robots", "energy")
SEASON_COLUMNS = ("run", "season_index", "season", "start", "end", "p", "n", "totalTokenRatio",
                  "pn_diff", "mean_delta_energy")
SEASON_UNITS = ("index", "index", "parity", "iteration", "iteration", "tokens", "tokens", "ratio",
                "ratio", "energy")


@dataclass(frozen=True)
class EpochRow:
    run: int
    epoch: int
    season: int
    p: int
    n: int
    alive: float
    mean_energy: float

    @property
    def ratio(self) -> float | None:
        return total_token_ratio(self.p, self.n)

    @property
    def pn_diff(self) -> float | None:
        return pn_diff_normalised(self.p, self.n)

    def values(self) -> tuple:
        return (self.run, self.epoch, self.season, self.p, self.n, self.ratio, self.pn_diff,
                self.alive, self.mean_energy)


@dataclass(frozen=True)
class SeasonRow:
    run: int
    season_index: int
    season: int
    start: int
    end: int
    p: int
    n: int
    mean_delta_energy: float

    @property
    def metrics(self) -> SeasonMetrics:
        return SeasonMetrics(self.season_index, self.p, self.n)

    def values(self) -> tuple:
        m = self.metrics
        return (self.run, self.season_index, self.season, self.start, self.end, self.p, self.n,
                m.total_token_ratio, m.pn_diff_normalised, self.mean_delta_energy)


@dataclass
class _Window:
    start: int
    season: int
    p: int = 0
    n: int = 0
    alive: float = 0.0
    energy: float = 0.0
    delta: float = 0.0
    steps: int = 0


@dataclass
class MetricAccumulator:
    """Feeds on one iteration at a time and closes epoch and season windows.

    ``season_period`` 0 means a single season spanning the whole run.
    """

    run: int
    epoch_length: int
    season_period: int = 0
    epochs: list[EpochRow] = field(default_factory=list)
    seasons: list[SeasonRow] = field(default_factory=list)
    _epoch: _Window | None = None
    _season: _Window | None = None
    _season_index: int = 0

    def __post_init__(self) -> None:
        if self.epoch_length <= 0:
            raise ValueError("epoch length must be positive")

    def add(self, iteration: int, season: int, p: int, n: int, alive: int,
            mean_energy: float, mean_delta: float) -> None:
        if self._epoch is None:
            self._epoch = _Window(iteration, season)
        if self._season is None:
            self._season = _Window(iteration, season)
        for w in (self._epoch, self._season):
            w.p += p
            w.n += n
            w.alive += alive
            w.energy += mean_energy
            w.delta += mean_delta
            w.steps += 1
        nxt = iteration + 1
        if nxt % self.epoch_length == 0:
            self._close_epoch()
        if self.season_period and nxt % self.season_period == 0:
            self._close_season(nxt)

    def finish(self, iteration: int) -> None:
        """Close any partial windows (a run whose length is not a whole number of windows)."""
        if self._epoch is not None:
            self._close_epoch()
        if self._season is not None:
            self._close_season(iteration)

    def _close_epoch(self) -> None:
        w = self._epoch
        self.epochs.append(EpochRow(self.run, len(self.epochs), w.season, w.p, w.n,
                                    w.alive / w.steps, w.energy / w.steps))
        self._epoch = None

    def _close_season(self, end: int) -> None:
        w = self._season
        self.seasons.append(SeasonRow(self.run, self._season_index, w.season, w.start, end,
                                      w.p, w.n, w.delta / w.steps))
        self._season_index += 1
        self._season = None


def end_value(ratios: Sequence[float | None], last: int = 2) -> tuple[float | None, int]:
    """Mean of the final ``last`` epoch values, skipping missing ones.

    Returns (value, number of missing epochs dropped); value is None when all are missing.
    """
    if last <= 0:
        raise ValueError("window must cover at least one epoch")
    tail = list(ratios)[-last:]
    kept = [r for r in tail if r is not None and not math.isnan(r)]
    dropped = len(tail) - len(kept)
    return (sum(kept) / len(kept) if kept else None), dropped


def drop_missing(values: Iterable[float | None]) -> tuple[list[float], int]:
    kept, dropped = [], 0
    for v in values:
        if v is None or (isinstance(v, float) and math.isnan(v)):
            dropped += 1
        else:
            kept.append(float(v))
    return kept, dropped
