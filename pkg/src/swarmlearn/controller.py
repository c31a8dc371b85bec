"""Elman recurrent controller and its genome.

Flat weight layout (row-major)::

    W_ih [hidden, inputs] | W_hh [hidden, hidden] | b_h [hidden] | W_ho [2, hidden] | b_o [2]
"""
from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from numba import njit

N_INPUTS = 16
N_OUTPUTS = 2


@dataclass(frozen=True)
class RnnSpec:
    inputs: int = N_INPUTS
    hidden: int = 16
    outputs: int = N_OUTPUTS

    @property
    def n_weights(self) -> int:
        h = self.hidden
        return h * self.inputs + h * h + h + self.outputs * h + self.outputs

    def topology_hash(self) -> int:
        return zlib.crc32(f"elman:{self.inputs}:{self.hidden}:{self.outputs}".encode())


@dataclass(frozen=True)
class Genome:
    """Controller weights plus the heritable learning parameters a variant uses.

    ``lr``/``ls`` are None when the variant does not carry them; an empty
    ``init_multipliers`` mapping means no token type has been met yet.
    """

    weights: np.ndarray
    lr: float | None = None
    ls: float | None = None
    init_multipliers: Mapping[int, float] = field(default_factory=dict)
    gid: int = -1
    parent: int = -1
    has_multipliers: bool = False

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "init_multipliers", dict(sorted(self.init_multipliers.items())))

    def with_multiplier(self, type_id: int, value: float) -> Genome:
        """Copy with one more initial multiplier (same identity; used on first encounter)."""
        mults = dict(self.init_multipliers)
        mults[int(type_id)] = float(value)
        return Genome(self.weights, self.lr, self.ls, mults, self.gid, self.parent, True)

    def same_as(self, other: Genome) -> bool:
        return (np.array_equal(self.weights, other.weights) and self.lr == other.lr
                and self.ls == other.ls and self.init_multipliers == other.init_multipliers
                and self.has_multipliers == other.has_multipliers)

    # -- binary format ----------------------------------------------------------
    _HEADER = struct.Struct("<4sHIBIqq")
    MAGIC = b"SWGN"

    def to_bytes(self, spec: RnnSpec) -> bytes:
        if self.weights.size != spec.n_weights:
            raise ValueError("genome does not match topology")
        flags = (self.lr is not None) | (self.ls is not None) << 1 | self.has_multipliers << 2
        parts = [self._HEADER.pack(self.MAGIC, 1, spec.topology_hash(), flags,
                                   self.weights.size, self.gid, self.parent),
                 self.weights.astype("<f8").tobytes(),
                 struct.pack("<dd", self.lr if self.lr is not None else math.nan,
                             self.ls if self.ls is not None else math.nan),
                 struct.pack("<I", len(self.init_multipliers))]
        for t, v in self.init_multipliers.items():
            parts.append(struct.pack("<id", t, v))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, blob: bytes, spec: RnnSpec) -> Genome:
        magic, version, topo, flags, n, gid, parent = cls._HEADER.unpack_from(blob, 0)
        if magic != cls.MAGIC or version != 1:
            raise ValueError("not a genome blob")
        if topo != spec.topology_hash() or n != spec.n_weights:
            raise ValueError("genome topology mismatch")
        off = cls._HEADER.size
        weights = np.frombuffer(blob, dtype="<f8", count=n, offset=off).astype(np.float64)
        off += 8 * n
        lr, ls = struct.unpack_from("<dd", blob, off)
        off += 16
        (k,) = struct.unpack_from("<I", blob, off)
        off += 4
        mults = {}
        for _ in range(k):
            t, v = struct.unpack_from("<id", blob, off)
            mults[t] = v
            off += 12
        return cls(weights, lr if flags & 1 else None, ls if flags & 2 else None,
                   mults, gid, parent, bool(flags & 4))


def random_genome(spec: RnnSpec, rng: np.random.Generator, variant: str,
                  lr_init: float = 1.02, gid: int = -1) -> Genome:
    """Fresh genome: weights U[-1, 1]; learning parameters as the variant requires."""
    weights = rng.uniform(-1.0, 1.0, spec.n_weights)
    lr = lr_init if variant == "EVO+IL" else None
    ls = float(rng.uniform(-1.0, 1.0)) if variant in ("IL", "EVO+IL") else None
    has_mults = variant in ("EVO", "EVO+IL")
    return Genome(weights, lr, ls, {}, gid, -1, has_mults)


def apply_variation(genome: Genome, sigma: float, rng: np.random.Generator,
                    lr_bounds: tuple[float, float] = (1.0, 1.5), gid: int = -1) -> Genome:
    """Gaussian mutation of every gene, then clamping of the learning genes.

    The parent is left untouched.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    weights = genome.weights + rng.normal(0.0, sigma, genome.weights.size)
    lr = genome.lr
    if lr is not None:
        lr = float(np.clip(lr + rng.normal(0.0, sigma), *lr_bounds))
    ls = genome.ls
    if ls is not None:
        ls = float(np.clip(ls + rng.normal(0.0, sigma), -1.0, 1.0))
    mults = {}
    if genome.init_multipliers:
        noise = rng.normal(0.0, sigma, len(genome.init_multipliers))
        for (t, v), eps in zip(genome.init_multipliers.items(), noise):
            mults[t] = float(np.clip(v + eps, -1.0, 1.0))
    return Genome(weights, lr, ls, mults, gid, genome.gid, genome.has_multipliers)


@njit(cache=True, fastmath={"reassoc", "contract", "nsz", "arcp"})
def elman_step(w, ctx, x, n_hidden, new_ctx):
    """One recurrence step; writes the hidden layer into ``new_ctx``.

    Returns (translational command in [0, 1], rotational command in [-1, 1]).
    """
    n_in = x.shape[0]
    o_hh = n_hidden * n_in
    o_bh = o_hh + n_hidden * n_hidden
    o_ho = o_bh + n_hidden
    o_bo = o_ho + 2 * n_hidden
    for h in range(n_hidden):
        acc = w[o_bh + h]
        row = h * n_in
        for i in range(n_in):
            acc += w[row + i] * x[i]
        row = o_hh + h * n_hidden
        for j in range(n_hidden):
            acc += w[row + j] * ctx[j]
        new_ctx[h] = math.tanh(acc)
    a0 = w[o_bo]
    a1 = w[o_bo + 1]
    for h in range(n_hidden):
        a0 += w[o_ho + h] * new_ctx[h]
        a1 += w[o_ho + n_hidden + h] * new_ctx[h]
    return 1.0 / (1.0 + math.exp(-a0)), math.tanh(a1)


def forward(genome: Genome, context: np.ndarray, inputs: np.ndarray,
            spec: RnnSpec | None = None) -> tuple[float, float, np.ndarray]:
    """Pure Elman step: returns (v_trans_cmd, v_rot_cmd, new_context)."""
    spec = spec or RnnSpec(hidden=len(context))
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    if x.shape != (spec.inputs,):
        raise ValueError(f"expected {spec.inputs} inputs")
    new_ctx = np.empty(spec.hidden)
    vt, vr = elman_step(genome.weights, np.asarray(context, dtype=np.float64), x, spec.hidden, new_ctx)
    return vt, vr, new_ctx
