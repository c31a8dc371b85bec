"""mEDEA with relative fitness: local broadcast, z-scored energy balance, roulette selection."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numba import njit


def relative_fitness(delta_i: float, subpop_deltas: Sequence[float]) -> float:
    """Z-score of ``delta_i`` within its neighbourhood (population sd; 0 when sd is 0)."""
    d = np.asarray(subpop_deltas, dtype=np.float64)
    if d.size == 0:
        raise ValueError("subpopulation must contain the robot itself")
    return _zscore(delta_i, d)


@njit(cache=True)
def _zscore(delta_i, d):
    n = d.shape[0]
    mean = 0.0
    for k in range(n):
        mean += d[k]
    mean /= n
    var = 0.0
    for k in range(n):
        var += (d[k] - mean) ** 2
    sd = math.sqrt(var / n)
    if sd == 0.0 or not (sd > 1e-12 * (abs(mean) + 1.0)):
        return 0.0
    return (delta_i - mean) / sd


def selection_weights(fitness: Sequence[float], eps: float = 1e-6) -> np.ndarray:
    """Shift relative fitnesses so the worst entry keeps weight ``eps``."""
    f = np.asarray(fitness, dtype=np.float64)
    if f.size == 0:
        raise ValueError("empty genome list")
    if np.all(f == f[0]):
        return np.ones_like(f)
    return f - f.min() + eps


def select_roulette(fitness: Sequence[float], rng: np.random.Generator, eps: float = 1e-6) -> int:
    """Index drawn with probability proportional to the shifted weights."""
    w = selection_weights(fitness, eps)
    cum = np.cumsum(w)
    u = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, u, side="right"), len(w) - 1))


@njit(cache=True)
def broadcast_kernel(pos, live, delta_e, gid, comm_range, a_tx, a_tx_amp, charge_duplicates,
                     refresh, list_ids, list_fit, list_len, fitness, tx_cost, rx_count, out_stats):
    """Synchronous broadcast round.

    Every live robot with at least one robot in range computes its relative
    fitness against the live robots in range (itself included) and sends
    (genome id, fitness) to all robots in range, live or not. Fitness is
    computed for all senders before any delivery. ``out_stats`` receives
    [deliveries, new entries, dropped for capacity].
    """
    n = pos.shape[0]
    r2 = comm_range * comm_range
    cap = list_ids.shape[1]
    sends = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        fitness[i] = 0.0
        tx_cost[i] = 0.0
        rx_count[i] = 0
    for i in range(n):
        if not live[i]:
            continue
        s = delta_e[i]
        s2 = 0.0
        cnt = 1
        any_nb = False
        for j in range(n):
            if j == i:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            if dx * dx + dy * dy <= r2:
                any_nb = True
                if live[j]:
                    s += delta_e[j]
                    cnt += 1
        if not any_nb:
            continue
        sends[i] = True
        mean = s / cnt
        s2 = (delta_e[i] - mean) ** 2
        for j in range(n):
            if j == i or not live[j]:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            if dx * dx + dy * dy <= r2:
                s2 += (delta_e[j] - mean) ** 2
        sd = math.sqrt(s2 / cnt)
        if sd > 1e-12 * (abs(mean) + 1.0):
            fitness[i] = (delta_e[i] - mean) / sd
    deliveries = 0
    added = 0
    dropped = 0
    for i in range(n):
        if not sends[i]:
            continue
        g = gid[i]
        for j in range(n):
            if j == i:
                continue
            dx = pos[j, 0] - pos[i, 0]
            dy = pos[j, 1] - pos[i, 1]
            d2 = dx * dx + dy * dy
            if d2 > r2:
                continue
            deliveries += 1
            found = -1
            for k in range(list_len[j]):
                if list_ids[j, k] == g:
                    found = k
                    break
            new = found < 0
            if new:
                if list_len[j] < cap:
                    list_ids[j, list_len[j]] = g
                    list_fit[j, list_len[j]] = fitness[i]
                    list_len[j] += 1
                    added += 1
                else:
                    dropped += 1
            elif refresh:
                list_fit[j, found] = fitness[i]
            if new or charge_duplicates:
                tx_cost[i] += a_tx + a_tx_amp * d2
                rx_count[j] += 1
    out_stats[0] = deliveries
    out_stats[1] = added
    out_stats[2] = dropped
