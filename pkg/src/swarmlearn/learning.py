"""Lifetime learning of per-token-type input multipliers.

The four variants differ only in where a multiplier's first value comes
from and whether multipliers adapt on consumption:

=========  ============  ==========  =========
variant    initial m_x   LR          LS
=========  ============  ==========  =========
Baseline   1             none        n/a
IL         random        fixed       evolved
EVO        evolved       none        n/a
EVO+IL     evolved       evolved     evolved
=========  ============  ==========  =========

The kernels below operate on one robot's rows so the world step and the
:class:`MultiplierSet` wrapper share a single implementation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .controller import Genome

INIT_FIXED = 0
INIT_RANDOM = 1
INIT_GENOME = 2

# stats row layout; a fresh row is EMPTY_STATS
C_TOTAL, V_MAX, V_MIN = 0, 1, 2
EMPTY_STATS = (0.0, -np.inf, np.inf)


@dataclass(frozen=True)
class VariantPolicy:
    variant: str
    init_rule: int
    adapts: bool
    lr_fixed: float | None = None

    @classmethod
    def from_variant(cls, variant: str, lr_fixed: float = 1.02) -> VariantPolicy:
        if variant == "Baseline":
            return cls(variant, INIT_FIXED, False)
        if variant == "IL":
            return cls(variant, INIT_RANDOM, True, lr_fixed)
        if variant == "EVO":
            return cls(variant, INIT_GENOME, False)
        if variant == "EVO+IL":
            return cls(variant, INIT_GENOME, True)
        raise ValueError(f"unknown variant {variant!r}")

    def learning_rate(self, genome: Genome) -> float:
        if not self.adapts:
            return 0.0
        if self.lr_fixed is not None:
            return self.lr_fixed
        return float(genome.lr)

    def learning_sign(self, genome: Genome, use_sign: bool = True) -> float:
        if not self.adapts:
            return 0.0
        ls = float(genome.ls)
        if use_sign:
            return 1.0 if ls >= 0.0 else -1.0
        return ls


@njit(cache=True)
def detect_type(t, m, known, init_rule, pool, g_init, g_has, grew):
    """Add a multiplier for an unseen type; no-op if the type is known."""
    if known[t]:
        return
    if init_rule == INIT_FIXED:
        v = 1.0
    elif init_rule == INIT_RANDOM:
        v = pool[t]
    else:
        if not g_has[t]:
            g_init[t] = pool[t]
            g_has[t] = True
            grew[t] = True
        v = g_init[t]
    m[t] = v
    known[t] = True


@njit(cache=True)
def consume_type(t, value, m, known, counts, v_last, stats, lr, sign, adapts, per_type):
    """Record one consumed token of type ``t`` and adapt every multiplier."""
    counts[t] += 1
    stats[C_TOTAL] += 1.0
    v_last[t] = value
    if value > stats[V_MAX]:
        stats[V_MAX] = value
    if value < stats[V_MIN]:
        stats[V_MIN] = value
    if not adapts:
        return
    span = stats[V_MAX] - stats[V_MIN]
    if span <= 0.0:
        return
    total = stats[C_TOTAL]
    for x in range(m.shape[0]):
        if not known[x]:
            continue
        if per_type:
            if counts[x] == 0:
                continue
            vx = v_last[x]
        else:
            vx = value
        mx = m[x] + sign * (lr - counts[x] / total) * (vx / span)
        if mx > 1.0:
            mx = 1.0
        elif mx < -1.0:
            mx = -1.0
        m[x] = mx


@njit(cache=True)
def modulate(prox, is_token, types, m, out):
    """Fill the 16 controller inputs: proximities then multiplier-weighted token flags."""
    n = prox.shape[0]
    for r in range(n):
        out[r] = prox[r]
        if is_token[r] and types[r] >= 0:
            out[n + r] = prox[r] * m[types[r]]
        else:
            out[n + r] = 0.0


@dataclass
class MultiplierSet:
    """One robot's working multipliers for the current genome activation."""

    n_types: int
    policy: VariantPolicy
    genome: Genome
    lr: float = 0.0
    sign: float = 0.0
    per_type: bool = True
    m: np.ndarray = field(init=False)
    known: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    v_last: np.ndarray = field(init=False)
    stats: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        k = self.n_types
        self.m = np.zeros(k)
        self.known = np.zeros(k, dtype=np.bool_)
        self.counts = np.zeros(k, dtype=np.int64)
        self.v_last = np.full(k, np.nan)
        self.stats = np.array(EMPTY_STATS)

    @classmethod
    def for_genome(cls, genome: Genome, policy: VariantPolicy, n_types: int = 2,
                   use_sign: bool = True, per_type: bool = True) -> MultiplierSet:
        return cls(n_types, policy, genome, policy.learning_rate(genome),
                   policy.learning_sign(genome, use_sign), per_type)

    @property
    def c_total(self) -> int:
        return int(self.stats[C_TOTAL])

    @property
    def v_max(self) -> float:
        return float(self.stats[V_MAX])

    @property
    def v_min(self) -> float:
        return float(self.stats[V_MIN])

    def value(self, type_id: int) -> float:
        if not self.known[type_id]:
            raise KeyError(type_id)
        return float(self.m[type_id])

    def on_token_detected(self, type_id: int, rng: np.random.Generator | None = None) -> MultiplierSet:
        if self.known[type_id]:
            return self
        pool = np.zeros(self.n_types)
        if self.policy.init_rule == INIT_RANDOM or (
                self.policy.init_rule == INIT_GENOME and type_id not in self.genome.init_multipliers):
            if rng is None:
                raise ValueError("a random initial multiplier needs an rng")
            pool[type_id] = rng.uniform(-1.0, 1.0)
        g_init, g_has = self._genome_rows()
        grew = np.zeros(self.n_types, dtype=np.bool_)
        detect_type(type_id, self.m, self.known, self.policy.init_rule, pool, g_init, g_has, grew)
        if grew[type_id]:
            self.genome = self.genome.with_multiplier(type_id, g_init[type_id])
        return self

    def on_token_consumed(self, type_id: int, observed_value: float,
                          rng: np.random.Generator | None = None) -> MultiplierSet:
        self.on_token_detected(type_id, rng)
        consume_type(type_id, float(observed_value), self.m, self.known, self.counts,
                     self.v_last, self.stats, self.lr, self.sign, self.policy.adapts, self.per_type)
        return self

    def modulate_inputs(self, prox, is_token, types) -> np.ndarray:
        out = np.empty(2 * len(prox))
        modulate(np.asarray(prox, dtype=np.float64), np.asarray(is_token, dtype=np.bool_),
                 np.asarray(types, dtype=np.int64), self.m, out)
        return out

    def _genome_rows(self) -> tuple[np.ndarray, np.ndarray]:
        g_init = np.zeros(self.n_types)
        g_has = np.zeros(self.n_types, dtype=np.bool_)
        for t, v in self.genome.init_multipliers.items():
            if t < self.n_types:
                g_init[t] = v
                g_has[t] = True
        return g_init, g_has


def on_token_detected(mset: MultiplierSet, type_id: int, rng=None) -> MultiplierSet:
    return mset.on_token_detected(type_id, rng)


def on_token_consumed(mset: MultiplierSet, type_id: int, observed_value: float, rng=None) -> MultiplierSet:
    return mset.on_token_consumed(type_id, observed_value, rng)


def modulate_inputs(prox, is_token, types, mset: MultiplierSet, rng=None) -> np.ndarray:
    """16 controller inputs for one sensor frame; unseen token types are added first."""
    for t, hit in zip(types, is_token):
        if hit and t >= 0:
            mset.on_token_detected(int(t), rng)
    return mset.modulate_inputs(prox, is_token, types)
