"""Arena, tokens, robot bodies and the per-iteration world step.

State lives in flat numpy arrays (one row per robot / token) so the hot
loop runs in compiled kernels; genomes and protocol bookkeeping that only
change on rare events stay in Python.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .config import ExperimentConfig
from .controller import Genome, RnnSpec, apply_variation, elman_step, random_genome
from .evolution import broadcast_kernel, select_roulette
from .learning import (C_TOTAL, EMPTY_STATS, VariantPolicy, consume_type, detect_type,
                       modulate)

CELL = 32.0  # token grid cell size, px
N_RAYS = 8
FAST = {"reassoc", "contract", "nsz", "arcp"}  # no nnan/ninf: kernels rely on inf sentinels

# float parameter vector layout
P_W, P_H, P_RR, P_TR, P_RANGE, P_VT, P_VR, P_LIVE = range(8)
# int parameter vector layout
Q_HID, Q_INIT, Q_ADAPT, Q_PERTYPE, Q_RESPAWN = range(5)

NO_TYPE = -1


@dataclass(frozen=True)
class Arena:
    width: float = 1024.0
    height: float = 1024.0

    def contains(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy)
        return (xy[..., 0] >= 0) & (xy[..., 0] < self.width) & (xy[..., 1] >= 0) & (xy[..., 1] < self.height)


@dataclass(frozen=True)
class SeasonSchedule:
    period: int = 0

    def season(self, iteration: int) -> int:
        if self.period <= 0:
            return 0
        return (iteration // self.period) % 2

    def season_index(self, iteration: int) -> int:
        """Running count of seasons elapsed (0 forever when static)."""
        return iteration // self.period if self.period > 0 else 0


@dataclass(frozen=True)
class Token:
    position: tuple[float, float]
    type_id: int
    current_value: float
    active: bool
    remaining_respawn: int


@dataclass(frozen=True)
class RobotBody:
    position: tuple[float, float]
    heading: float
    v_trans: float = 0.0
    v_rot: float = 0.0
    energy: float = 0.0


@dataclass(frozen=True)
class SensorFrame:
    proximity: np.ndarray  # (8,) in [0, 1]
    is_token: np.ndarray   # (8,) bool
    type_id: np.ndarray    # (8,) token type or -1


def type_values(n_types: int, season: int, positive: float, negative: float) -> np.ndarray:
    """Value of each token class: class ``season % n_types`` is positive, all others negative."""
    vals = np.full(n_types, negative, dtype=np.float64)
    vals[season % n_types] = positive
    return vals


# --------------------------------------------------------------------------------------
# kernels

@njit(cache=True)
def build_grid(tok_pos, tok_active, tok_r, cs, ncx, ncy, cell_start, cell_items):
    """Bucket each active token into every cell its disc overlaps."""
    ncell = ncx * ncy
    for c in range(ncell + 1):
        cell_start[c] = 0
    n = tok_pos.shape[0]
    for k in range(n):
        if not tok_active[k]:
            continue
        x0 = max(int((tok_pos[k, 0] - tok_r) / cs), 0)
        x1 = min(int((tok_pos[k, 0] + tok_r) / cs), ncx - 1)
        y0 = max(int((tok_pos[k, 1] - tok_r) / cs), 0)
        y1 = min(int((tok_pos[k, 1] + tok_r) / cs), ncy - 1)
        for cy in range(y0, y1 + 1):
            for cx in range(x0, x1 + 1):
                cell_start[cy * ncx + cx + 1] += 1
    for c in range(ncell):
        cell_start[c + 1] += cell_start[c]
    fill = cell_start[:ncell].copy()
    for k in range(n):
        if not tok_active[k]:
            continue
        x0 = max(int((tok_pos[k, 0] - tok_r) / cs), 0)
        x1 = min(int((tok_pos[k, 0] + tok_r) / cs), ncx - 1)
        y0 = max(int((tok_pos[k, 1] - tok_r) / cs), 0)
        y1 = min(int((tok_pos[k, 1] + tok_r) / cs), ncy - 1)
        for cy in range(y0, y1 + 1):
            for cx in range(x0, x1 + 1):
                c = cy * ncx + cx
                cell_items[fill[c]] = k
                fill[c] += 1


@njit(cache=True, fastmath=FAST, inline="always")
def _ray_hits(lx, ly, r, ray_c, ray_s, best, kind, tag, new_kind, new_tag):
    r2 = r * r
    near = False
    for k in range(N_RAYS):
        perp = ly * ray_c[k] - lx * ray_s[k]
        near |= perp * perp <= r2
    if not near:
        return
    for k in range(N_RAYS):
        perp = ly * ray_c[k] - lx * ray_s[k]
        if perp * perp > r2:
            continue
        proj = lx * ray_c[k] + ly * ray_s[k]
        half = math.sqrt(r2 - perp * perp)
        if proj + half < 0.0:
            continue
        t = proj - half
        if t < 0.0:
            t = 0.0
        if t < best[k]:
            best[k] = t
            kind[k] = new_kind
            tag[k] = new_tag


@njit(cache=True, fastmath=FAST)
def _march_tokens(x, y, dx, dy, limit, tok_pos, tok_r, cell_start, cell_items, cs, ncx, ncy):
    """First token disc met by the ray (distance, index), walking grid cells in ray order.

    Tokens are listed in every cell their disc overlaps, so any disc the ray
    crosses is listed in a cell the ray passes through. Once the best hit lies
    before the current cell's exit no later cell can improve on it.
    """
    r2 = tok_r * tok_r
    cx = min(max(int(x / cs), 0), ncx - 1)
    cy = min(max(int(y / cs), 0), ncy - 1)
    sx = 1 if dx > 0.0 else -1
    sy = 1 if dy > 0.0 else -1
    if dx > 0.0:
        tx = ((cx + 1) * cs - x) / dx
        stx = cs / dx
    elif dx < 0.0:
        tx = (cx * cs - x) / dx
        stx = -cs / dx
    else:
        tx = np.inf
        stx = np.inf
    if dy > 0.0:
        ty = ((cy + 1) * cs - y) / dy
        sty = cs / dy
    elif dy < 0.0:
        ty = (cy * cs - y) / dy
        sty = -cs / dy
    else:
        ty = np.inf
        sty = np.inf
    best = limit
    hit = -1
    while True:
        c = cy * ncx + cx
        for p in range(cell_start[c], cell_start[c + 1]):
            k = cell_items[p]
            fx = tok_pos[k, 0] - x
            fy = tok_pos[k, 1] - y
            perp = fx * dy - fy * dx
            if perp * perp > r2:
                continue
            proj = fx * dx + fy * dy
            half = math.sqrt(r2 - perp * perp)
            if proj + half < 0.0:
                continue
            t = max(proj - half, 0.0)
            if t < best:
                best = t
                hit = k
        t_out = min(tx, ty)
        if best <= t_out:
            break
        if tx < ty:
            cx += sx
            tx += stx
            if cx < 0 or cx >= ncx:
                break
        else:
            cy += sy
            ty += sty
            if cy < 0 or cy >= ncy:
                break
    return best, hit


@njit(cache=True, fastmath=FAST)
def cast_rays_kernel(i, x, y, h, rob_pos, rob_r, tok_pos, tok_type, tok_r,
                     cell_start, cell_items, cs, ncx, ncy, width, height, rmax,
                     ray_c, ray_s, best, kind, tag, prox, is_tok, ttype):
    """Nearest hit per ray among walls, other robots and the tokens listed in the grid."""
    nr = ray_c.shape[0]
    for k in range(nr):
        best[k] = np.inf
        kind[k] = 0
        tag[k] = -1
    ch = math.cos(h)
    sh = math.sin(h)
    for k in range(nr):
        dx = ch * ray_c[k] - sh * ray_s[k]
        dy = sh * ray_c[k] + ch * ray_s[k]
        t = np.inf
        if dx > 0.0:
            t = (width - x) / dx
        elif dx < 0.0:
            t = -x / dx
        if dy > 0.0:
            t = min(t, (height - y) / dy)
        elif dy < 0.0:
            t = min(t, -y / dy)
        if t < best[k]:
            best[k] = t
            kind[k] = 1
    reach = rmax + rob_r
    for j in range(rob_pos.shape[0]):
        if j == i:
            continue
        fx = rob_pos[j, 0] - x
        fy = rob_pos[j, 1] - y
        if fx * fx + fy * fy > reach * reach:
            continue
        lx = fx * ch + fy * sh
        if lx < -rob_r:
            continue
        ly = -fx * sh + fy * ch
        _ray_hits(lx, ly, rob_r, ray_c, ray_s, best, kind, tag, 2, j)
    for k in range(nr):
        dx = ch * ray_c[k] - sh * ray_s[k]
        dy = sh * ray_c[k] + ch * ray_s[k]
        # beyond the range nothing is reported, so cap the walk there
        limit = min(best[k], rmax * (1.0 + 1e-12))
        t, hit = _march_tokens(x, y, dx, dy, limit, tok_pos, tok_r, cell_start, cell_items,
                               cs, ncx, ncy)
        if hit >= 0 and t < best[k]:
            best[k] = t
            kind[k] = 3
            tag[k] = hit
    for k in range(nr):
        if best[k] <= rmax:
            prox[k] = 1.0 - best[k] / rmax
            if kind[k] == 3:
                is_tok[k] = True
                ttype[k] = tok_type[tag[k]]
            else:
                is_tok[k] = False
                ttype[k] = -1
        else:
            prox[k] = 0.0
            is_tok[k] = False
            ttype[k] = -1


@njit(cache=True)
def move_kernel(i, rob_pos, heading, v_trans, v_rot, rob_r, width, height):
    """Turn, then translate; a wall stops the translation, another robot truncates it at contact."""
    h = heading[i] + v_rot
    if h > math.pi:
        h -= 2.0 * math.pi
    elif h <= -math.pi:
        h += 2.0 * math.pi
    heading[i] = h
    if v_trans <= 0.0:
        return
    x = rob_pos[i, 0]
    y = rob_pos[i, 1]
    ddx = v_trans * math.cos(h)
    ddy = v_trans * math.sin(h)
    nx = x + ddx
    ny = y + ddy
    if nx < rob_r or nx > width - rob_r or ny < rob_r or ny > height - rob_r:
        return
    tmin = 1.0
    a = ddx * ddx + ddy * ddy
    lim = 4.0 * rob_r * rob_r
    for j in range(rob_pos.shape[0]):
        if j == i:
            continue
        fx = x - rob_pos[j, 0]
        fy = y - rob_pos[j, 1]
        b = 2.0 * (fx * ddx + fy * ddy)
        c = fx * fx + fy * fy - lim
        if c <= 0.0:
            if b < 0.0:
                tmin = 0.0
            continue
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            continue
        t = (-b - math.sqrt(disc)) / (2.0 * a)
        if 0.0 <= t < tmin:
            tmin = t
    rob_pos[i, 0] = x + tmin * ddx
    rob_pos[i, 1] = y + tmin * ddy


@njit(cache=True)
def consume_kernel(i, rob_pos, rob_r, tok_pos, tok_type, tok_active, tok_timer, tok_r,
                   cell_start, cell_items, cs, ncx, ncy, respawn, out_idx):
    """Mark every active token overlapping robot ``i`` consumed; returns how many."""
    x = rob_pos[i, 0]
    y = rob_pos[i, 1]
    reach = rob_r + tok_r
    cx0 = max(int((x - reach) / cs), 0)
    cx1 = min(int((x + reach) / cs), ncx - 1)
    cy0 = max(int((y - reach) / cs), 0)
    cy1 = min(int((y + reach) / cs), ncy - 1)
    n = 0
    for cy in range(cy0, cy1 + 1):
        for cx in range(cx0, cx1 + 1):
            c = cy * ncx + cx
            for q in range(cell_start[c], cell_start[c + 1]):
                k = cell_items[q]
                if not tok_active[k]:
                    continue
                fx = tok_pos[k, 0] - x
                fy = tok_pos[k, 1] - y
                if fx * fx + fy * fy < reach * reach:
                    tok_active[k] = False
                    tok_timer[k] = respawn
                    out_idx[n] = k
                    n += 1
    # grid order is spatial; report in token-index order
    out_idx[:n].sort()
    return n


@njit(cache=True)
def tick_timers(tok_active, tok_timer, due):
    n = 0
    for k in range(tok_active.shape[0]):
        if not tok_active[k]:
            tok_timer[k] -= 1
            if tok_timer[k] <= 0:
                tok_timer[k] = 0
                due[n] = k
                n += 1
    return n


@njit(cache=True)
def act_kernel(P, Q, ray_c, ray_s, tok_pos, tok_type, tok_active, tok_timer, type_value,
               cell_start, cell_items, ncx, ncy,
               rob_pos, heading, live, weights, ctx, v_trans, v_rot, e_step, gain,
               m, known, counts, v_last, lstats, lr, lsign, pool, g_init, g_has, grew,
               cons_robot, cons_type, cons_value, out):
    """Sense, decide, move and consume for every live robot.

    ``out`` receives [positive tokens, negative tokens, consumption events].
    """
    width = P[P_W]
    height = P[P_H]
    rr = P[P_RR]
    tr = P[P_TR]
    rmax = P[P_RANGE]
    vtm = P[P_VT]
    vrm = P[P_VR]
    living = P[P_LIVE]
    n_hid = Q[Q_HID]
    init_rule = Q[Q_INIT]
    adapts = Q[Q_ADAPT] != 0
    per_type = Q[Q_PERTYPE] != 0
    nrob = rob_pos.shape[0]
    nray = ray_c.shape[0]
    build_grid(tok_pos, tok_active, tr, CELL, ncx, ncy, cell_start, cell_items)
    prox = np.zeros(nray)
    is_tok = np.zeros(nray, dtype=np.bool_)
    ttype = np.full(nray, -1, dtype=np.int64)
    best = np.empty(nray)
    kind = np.empty(nray, dtype=np.int64)
    tag = np.empty(nray, dtype=np.int64)
    x_in = np.zeros(2 * nray)
    new_ctx = np.zeros(n_hid)
    # synchronous sensing and control against the pre-move state
    for i in range(nrob):
        gain[i] = 0.0
        if not live[i]:
            v_trans[i] = 0.0
            v_rot[i] = 0.0
            e_step[i] = 0.0
            continue
        cast_rays_kernel(i, rob_pos[i, 0], rob_pos[i, 1], heading[i], rob_pos, rr, tok_pos,
                         tok_type, tr, cell_start, cell_items, CELL, ncx, ncy,
                         width, height, rmax, ray_c, ray_s, best, kind, tag, prox, is_tok, ttype)
        for k in range(nray):
            if is_tok[k] and not known[i, ttype[k]]:
                detect_type(ttype[k], m[i], known[i], init_rule, pool[i], g_init[i], g_has[i], grew[i])
        modulate(prox, is_tok, ttype, m[i], x_in)
        ct, cr = elman_step(weights[i], ctx[i], x_in, n_hid, new_ctx)
        ctx[i, :] = new_ctx
        v_trans[i] = ct * vtm
        v_rot[i] = cr * vrm
        e_step[i] = living + (abs(v_rot[i]) / vrm + v_trans[i] / vtm) / 4.0
    for i in range(nrob):
        if live[i]:
            move_kernel(i, rob_pos, heading, v_trans[i], v_rot[i], rr, width, height)
    npos = 0
    nneg = 0
    ncons = 0
    idx = np.empty(tok_pos.shape[0], dtype=np.int64)
    for i in range(nrob):
        if not live[i]:
            continue
        n = consume_kernel(i, rob_pos, rr, tok_pos, tok_type, tok_active, tok_timer, tr,
                           cell_start, cell_items, CELL, ncx, ncy, Q[Q_RESPAWN], idx)
        for q in range(n):
            t = tok_type[idx[q]]
            val = type_value[t]
            gain[i] += val
            if val > 0.0:
                npos += 1
            else:
                nneg += 1
            detect_type(t, m[i], known[i], init_rule, pool[i], g_init[i], g_has[i], grew[i])
            consume_type(t, val, m[i], known[i], counts[i], v_last[i], lstats[i], lr[i], lsign[i],
                         adapts, per_type)
            cons_robot[ncons] = i
            cons_type[ncons] = t
            cons_value[ncons] = val
            ncons += 1
    out[0] = npos
    out[1] = nneg
    out[2] = ncons


@njit(cache=True)
def energy_kernel(live, energy, delta_e, lifetime, e_step, tx_cost, rx_count, a_rx, gain,
                  sum_step, sum_com, sum_gain, balance):
    for i in range(energy.shape[0]):
        if not live[i]:
            continue
        e_com = rx_count[i] * a_rx + tx_cost[i]
        change = gain[i] - e_step[i] - e_com
        delta_e[i] += change
        balance[i] += change
        sum_step[i] += e_step[i]
        sum_com[i] += e_com
        sum_gain[i] += gain[i]
        e = energy[i] + change
        energy[i] = e if e > 0.0 else 0.0
        lifetime[i] += 1


# --------------------------------------------------------------------------------------

class World:
    """One simulation run's complete state.

    Use :meth:`random` for seeded uniform placement or :meth:`from_layout`
    to place robots and tokens by hand.
    """

    def __init__(self, cfg: ExperimentConfig, robots: np.ndarray, headings: np.ndarray,
                 tokens: np.ndarray, token_types: np.ndarray, rng: np.random.Generator,
                 genomes: Sequence[Genome | None] | None = None):
        self.cfg = cfg
        self.rng = rng
        self.arena = Arena(cfg.arena.width, cfg.arena.height)
        self.schedule = SeasonSchedule(cfg.env.season_period)
        self.spec = RnnSpec(hidden=cfg.robot.hidden)
        self.policy = VariantPolicy.from_variant(cfg.learn.variant, cfg.learn.lr_init)
        self.iteration = 0
        self.n_types = cfg.env.n_types

        angles = np.deg2rad(np.asarray(cfg.robot.ray_angles_deg, dtype=np.float64))
        self.ray_c = np.cos(angles)
        self.ray_s = np.sin(angles)
        self.P = np.array([cfg.arena.width, cfg.arena.height, cfg.robot.radius, cfg.env.token_radius,
                           cfg.robot.sensor_range, cfg.robot.v_trans_max, cfg.robot.v_rot_max,
                           cfg.energy.living_cost])
        self.Q = np.array([cfg.robot.hidden, self.policy.init_rule, int(self.policy.adapts),
                           int(cfg.learn.vx_mode == "per_type"), cfg.env.respawn_time], dtype=np.int64)
        self.ncx = int(math.ceil(cfg.arena.width / CELL))
        self.ncy = int(math.ceil(cfg.arena.height / CELL))
        if np.any(self.ray_c < -1e-9):
            raise ValueError("sensor rays must point into the front half-plane")

        # tokens
        self.tok_pos = np.array(tokens, dtype=np.float64).reshape(-1, 2)
        nt = len(self.tok_pos)
        self.tok_type = np.array(token_types, dtype=np.int64).reshape(nt)
        self.tok_active = np.ones(nt, dtype=np.bool_)
        self.tok_timer = np.zeros(nt, dtype=np.int64)
        self.cell_start = np.zeros(self.ncx * self.ncy + 1, dtype=np.int64)
        span = int(math.ceil(2.0 * cfg.env.token_radius / CELL)) + 1  # cells a token disc can touch per axis
        self.cell_items = np.zeros(max(nt * span * span, 1), dtype=np.int64)
        self._due = np.zeros(max(nt, 1), dtype=np.int64)
        self.season = self.schedule.season(0)
        self.type_value = type_values(self.n_types, self.season, cfg.env.token_value, cfg.env.negative_value)

        # robot bodies
        self.rob_pos = np.array(robots, dtype=np.float64).reshape(-1, 2)
        nr = len(self.rob_pos)
        k = self.n_types
        self.heading = np.array(headings, dtype=np.float64).reshape(nr)
        self.energy = np.zeros(nr)
        self.live = np.zeros(nr, dtype=np.bool_)
        self.lifetime = np.zeros(nr, dtype=np.int64)
        self.delta_e = np.zeros(nr)
        self.v_trans = np.zeros(nr)
        self.v_rot = np.zeros(nr)
        self.e_step = np.zeros(nr)
        self.gain = np.zeros(nr)
        self.ctx = np.zeros((nr, cfg.robot.hidden))
        self.weights = np.zeros((nr, self.spec.n_weights))
        self.sum_step = np.zeros(nr)
        self.sum_com = np.zeros(nr)
        self.sum_gain = np.zeros(nr)
        self.balance = np.zeros(nr)
        # learning rows
        self.m = np.zeros((nr, k))
        self.known = np.zeros((nr, k), dtype=np.bool_)
        self.counts = np.zeros((nr, k), dtype=np.int64)
        self.v_last = np.full((nr, k), np.nan)
        self.lstats = np.tile(np.array(EMPTY_STATS), (nr, 1))
        self.lr = np.zeros(nr)
        self.lsign = np.zeros(nr)
        self.pool = np.zeros((nr, k))
        self.g_init = np.zeros((nr, k))
        self.g_has = np.zeros((nr, k), dtype=np.bool_)
        self.grew = np.zeros((nr, k), dtype=np.bool_)
        # protocol
        cap = cfg.evo.list_capacity
        self.gid = np.full(nr, -1, dtype=np.int64)
        self.list_ids = np.zeros((nr, cap), dtype=np.int64)
        self.list_fit = np.zeros((nr, cap))
        self.list_len = np.zeros(nr, dtype=np.int64)
        self.fitness = np.zeros(nr)
        self.tx_cost = np.zeros(nr)
        self.rx_count = np.zeros(nr, dtype=np.int64)
        self.genomes: list[Genome | None] = [None] * nr
        self.archive: dict[int, Genome] = {}
        self._next_gid = 0
        self.events: list[tuple[int, int, str, int, int]] = []
        self.broadcast_stats = np.zeros(3, dtype=np.int64)
        self.dropped_entries = 0

        self._cons_robot = np.zeros(max(nt, 1), dtype=np.int64)
        self._cons_type = np.zeros(max(nt, 1), dtype=np.int64)
        self._cons_value = np.zeros(max(nt, 1))
        self.last_consumptions: list[tuple[int, int, float]] = []
        self.step_counts = np.zeros(3, dtype=np.int64)
        self.season_changes: list[tuple[int, tuple[float, ...]]] = [(0, tuple(self.type_value))]

        if genomes is None:
            genomes = [random_genome(self.spec, rng, cfg.learn.variant, cfg.learn.lr_init)
                       for _ in range(nr)]
        for i, g in enumerate(genomes):
            if g is not None:
                self.load(i, g)

    # -- construction -----------------------------------------------------------
    @classmethod
    def random(cls, cfg: ExperimentConfig, seed: int | np.random.Generator) -> World:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        w, h = cfg.arena.width, cfg.arena.height
        r = cfg.robot.radius
        robots = np.empty((cfg.robot.count, 2))
        placed = 0
        while placed < cfg.robot.count:
            p = rng.uniform((r, r), (w - r, h - r))
            if placed and np.min(np.hypot(*(robots[:placed] - p).T)) < 2 * r:
                continue
            robots[placed] = p
            placed += 1
        headings = rng.uniform(-math.pi, math.pi, cfg.robot.count)
        tr = cfg.env.token_radius
        n_tok = cfg.env.token_count * cfg.env.n_types
        tokens = rng.uniform((tr, tr), (w - tr, h - tr), size=(n_tok, 2))
        types = np.repeat(np.arange(cfg.env.n_types), cfg.env.token_count)
        return cls(cfg, robots, headings, tokens, types, rng)

    @classmethod
    def from_layout(cls, cfg: ExperimentConfig, robots: Sequence[tuple[float, float, float]],
                    tokens: Sequence[tuple[float, float, int]] = (), seed: int = 0,
                    genomes: Sequence[Genome | None] | None = None) -> World:
        rng = np.random.default_rng(seed)
        rob = np.array([(x, y) for x, y, _ in robots], dtype=np.float64).reshape(-1, 2)
        hd = np.array([hh for _, _, hh in robots], dtype=np.float64)
        tok = np.array([(x, y) for x, y, _ in tokens], dtype=np.float64).reshape(-1, 2)
        typ = np.array([t for _, _, t in tokens], dtype=np.int64)
        return cls(cfg, rob, hd, tok, typ, rng, genomes)

    # -- genome lifecycle -----------------------------------------------------------
    def new_gid(self) -> int:
        g = self._next_gid
        self._next_gid += 1
        return g

    def load(self, i: int, genome: Genome) -> None:
        """Activate ``genome`` on robot ``i`` and reset its lifetime state."""
        if genome.gid < 0:
            genome = Genome(genome.weights, genome.lr, genome.ls, genome.init_multipliers,
                            self.new_gid(), genome.parent, genome.has_multipliers)
        cfg = self.cfg
        self.genomes[i] = genome
        self.archive[genome.gid] = genome
        self.gid[i] = genome.gid
        self.weights[i] = genome.weights
        self.ctx[i] = 0.0
        self.energy[i] = cfg.energy.start
        self.live[i] = True
        self.lifetime[i] = 0
        self.delta_e[i] = 0.0
        self.sum_step[i] = self.sum_com[i] = self.sum_gain[i] = 0.0
        self.m[i] = 0.0
        self.known[i] = False
        self.counts[i] = 0
        self.v_last[i] = np.nan
        self.lstats[i] = EMPTY_STATS
        self.lr[i] = self.policy.learning_rate(genome)
        self.lsign[i] = self.policy.learning_sign(genome, cfg.learn.ls_sign)
        self.pool[i] = self.rng.uniform(-1.0, 1.0, self.n_types)
        self.g_init[i] = 0.0
        self.g_has[i] = False
        for t, v in genome.init_multipliers.items():
            if t < self.n_types:
                self.g_init[i, t] = v
                self.g_has[i, t] = True
        self.grew[i] = False
        self.list_len[i] = 0
        self.events.append((self.iteration, i, "activate", genome.gid, genome.parent))

    def remove(self, i: int, reason: str) -> None:
        self.live[i] = False
        self.events.append((self.iteration, i, reason, int(self.gid[i]), -1))
        self.genomes[i] = None
        self.gid[i] = -1
        self.v_trans[i] = self.v_rot[i] = 0.0

    def end_of_life(self) -> list[int]:
        max_life = self.cfg.evo.max_lifetime
        out = []
        for i in np.flatnonzero(self.live & ((self.lifetime >= max_life) | (self.energy <= 0.0))):
            self.remove(int(i), "expire" if self.energy[i] > 0.0 else "death")
            out.append(int(i))
        return out

    def replacement_phase(self) -> list[int]:
        """Load a selected, mutated genome on every genome-less robot that has received any."""
        cfg = self.cfg
        out = []
        for i in np.flatnonzero(~self.live & (self.list_len > 0)):
            n = self.list_len[i]
            k = select_roulette(self.list_fit[i, :n], self.rng, cfg.evo.select_eps)
            parent = self.archive[int(self.list_ids[i, k])]
            child = apply_variation(parent, cfg.evo.sigma, self.rng,
                                    (cfg.learn.lr_min, cfg.learn.lr_max), gid=self.new_gid())
            self.load(int(i), child)
            out.append(int(i))
        return out

    def prune_archive(self) -> None:
        keep = set(self.gid[self.live].tolist())
        for i in range(len(self.list_len)):
            keep.update(self.list_ids[i, :self.list_len[i]].tolist())
        self.archive = {g: v for g, v in self.archive.items() if g in keep}

    def _sync_grown(self) -> None:
        for i, t in zip(*np.nonzero(self.grew)):
            g = self.genomes[i]
            if g is not None:
                g = g.with_multiplier(int(t), float(self.g_init[i, t]))
                self.genomes[i] = g
                self.archive[g.gid] = g
            self.grew[i, t] = False

    # -- tokens -----------------------------------------------------------------
    def respawn_tokens(self) -> int:
        n = tick_timers(self.tok_active, self.tok_timer, self._due)
        if n:
            tr = self.cfg.env.token_radius
            w, h = self.cfg.arena.width, self.cfg.arena.height
            idx = self._due[:n]
            self.tok_pos[idx] = self.rng.uniform((tr, tr), (w - tr, h - tr), size=(n, 2))
            self.tok_active[idx] = True
        return n

    def token_values(self) -> np.ndarray:
        return self.type_value[self.tok_type]

    def token(self, k: int) -> Token:
        return Token(tuple(self.tok_pos[k]), int(self.tok_type[k]), float(self.type_value[self.tok_type[k]]),
                     bool(self.tok_active[k]), int(self.tok_timer[k]))

    def body(self, i: int) -> RobotBody:
        return RobotBody(tuple(self.rob_pos[i]), float(self.heading[i]), float(self.v_trans[i]),
                         float(self.v_rot[i]), float(self.energy[i]))

    # -- step -------------------------------------------------------------------------
    def update_season(self) -> None:
        s = self.schedule.season(self.iteration)
        if s != self.season:
            self.season = s
            self.type_value[:] = type_values(self.n_types, s, self.cfg.env.token_value,
                                             self.cfg.env.negative_value)
            self.season_changes.append((self.iteration, tuple(self.type_value)))

    def broadcast_phase(self) -> None:
        cfg = self.cfg
        broadcast_kernel(self.rob_pos, self.live, self.delta_e, self.gid, cfg.evo.comm_range,
                         cfg.energy.a_tx, cfg.energy.a_tx_amp, cfg.evo.charge_duplicates,
                         cfg.evo.refresh_fitness, self.list_ids, self.list_fit, self.list_len,
                         self.fitness, self.tx_cost, self.rx_count, self.broadcast_stats)
        self.dropped_entries += int(self.broadcast_stats[2])

    def step(self) -> None:
        """Advance one iteration."""
        cfg = self.cfg
        self.update_season()
        if self.end_of_life() or not self.live.all():
            self.replacement_phase()
        self.respawn_tokens()
        act_kernel(self.P, self.Q, self.ray_c, self.ray_s, self.tok_pos, self.tok_type, self.tok_active,
                   self.tok_timer, self.type_value, self.cell_start, self.cell_items, self.ncx, self.ncy,
                   self.rob_pos, self.heading, self.live, self.weights, self.ctx, self.v_trans,
                   self.v_rot, self.e_step, self.gain, self.m, self.known, self.counts, self.v_last,
                   self.lstats, self.lr, self.lsign, self.pool, self.g_init, self.g_has, self.grew,
                   self._cons_robot, self._cons_type, self._cons_value, self.step_counts)
        if self.iteration % cfg.evo.broadcast_every == 0:
            self.broadcast_phase()
        else:
            self.tx_cost[:] = 0.0
            self.rx_count[:] = 0
        energy_kernel(self.live, self.energy, self.delta_e, self.lifetime, self.e_step, self.tx_cost,
                      self.rx_count, cfg.energy.a_rx, self.gain, self.sum_step, self.sum_com,
                      self.sum_gain, self.balance)
        if self.grew.any():
            self._sync_grown()
        n = int(self.step_counts[2])
        self.last_consumptions = (list(zip(self._cons_robot[:n].tolist(), self._cons_type[:n].tolist(),
                                           self._cons_value[:n].tolist())) if n else [])
        self.iteration += 1
        if self.iteration % 1000 == 0:
            self.prune_archive()

    def run(self, iterations: int, hook: Callable[[World], None] | None = None) -> None:
        for _ in range(iterations):
            self.step()
            if hook is not None:
                hook(self)

    # -- inspection ---------------------------------------------------------------
    def alive_count(self) -> int:
        return int(self.live.sum())

    def genome_list(self, i: int) -> list[tuple[int, float]]:
        n = self.list_len[i]
        return list(zip(self.list_ids[i, :n].tolist(), self.list_fit[i, :n].tolist()))

    def multipliers(self, i: int) -> dict[int, float]:
        return {int(t): float(self.m[i, t]) for t in np.flatnonzero(self.known[i])}

    def tokens_collected(self, i: int) -> int:
        return int(self.lstats[i, C_TOTAL])


# -- functional surface ----------------------------------------------------------------

def step_world(world: World, iteration: int | None = None) -> World:
    """Advance ``world`` by one iteration (``iteration`` must match if given)."""
    if iteration is not None and iteration != world.iteration:
        raise ValueError(f"world is at iteration {world.iteration}, not {iteration}")
    world.step()
    return world


def cast_rays(body: RobotBody, world: World, self_index: int = -1) -> SensorFrame:
    """Sensor frame of a body placed in ``world`` (``self_index`` excludes that robot from hits)."""
    cfg = world.cfg
    build_grid(world.tok_pos, world.tok_active, cfg.env.token_radius, CELL, world.ncx, world.ncy, world.cell_start, world.cell_items)
    prox = np.zeros(8)
    is_tok = np.zeros(8, dtype=np.bool_)
    ttype = np.full(8, NO_TYPE, dtype=np.int64)
    cast_rays_kernel(self_index, float(body.position[0]), float(body.position[1]), float(body.heading),
                     world.rob_pos, cfg.robot.radius, world.tok_pos, world.tok_type,
                     cfg.env.token_radius, world.cell_start, world.cell_items, CELL, world.ncx, world.ncy,
                     cfg.arena.width, cfg.arena.height, cfg.robot.sensor_range, world.ray_c, world.ray_s,
                     np.empty(8), np.empty(8, dtype=np.int64), np.empty(8, dtype=np.int64),
                     prox, is_tok, ttype)
    return SensorFrame(prox, is_tok, ttype)


def consume_tokens(world: World, i: int) -> list[tuple[int, float]]:
    """Consume every active token overlapping robot ``i``; returns (type_id, value) pairs."""
    cfg = world.cfg
    build_grid(world.tok_pos, world.tok_active, cfg.env.token_radius, CELL, world.ncx, world.ncy, world.cell_start, world.cell_items)
    idx = np.empty(max(len(world.tok_pos), 1), dtype=np.int64)
    n = consume_kernel(i, world.rob_pos, cfg.robot.radius, world.tok_pos, world.tok_type, world.tok_active,
                       world.tok_timer, cfg.env.token_radius, world.cell_start, world.cell_items, CELL,
                       world.ncx, world.ncy, cfg.env.respawn_time, idx)
    return [(int(world.tok_type[k]), float(world.type_value[world.tok_type[k]])) for k in idx[:n]]


def respawn_tokens(world: World) -> World:
    world.respawn_tokens()
    return world
