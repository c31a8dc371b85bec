"""Experiment configuration, presets and the flat dotted-key file format.

A config file is YAML with one ``section.key: value`` pair per line, e.g.::

    env.token_count: 625
    env.token_value: 625.0
    env.season_period: 5000
    learn.variant: EVO+IL
    run.seed: 7

Unknown keys raise ``ConfigError``; missing keys keep their defaults.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml


class ConfigError(ValueError):
    pass


VARIANTS = ("Baseline", "IL", "EVO", "EVO+IL")

ENVIRONMENTS = {
    "scarce": (300, 1150.0),
    "balanced": (625, 625.0),
    "abundant": (1150, 425.0),
}

SEASONS = {"static": 0, "5k": 5000, "15k": 15000}

VARIANT_SLUGS = {"Baseline": "baseline", "IL": "il", "EVO": "evo", "EVO+IL": "evo_il"}


@dataclass(frozen=True)
class ArenaConfig:
    width: float = 1024.0
    height: float = 1024.0


@dataclass(frozen=True)
class EnvConfig:
    token_count: int = 625  # per class
    token_value: float = 625.0
    negative_value: float = -400.0
    season_period: int = 0
    n_types: int = 2
    token_radius: float = 4.0
    respawn_time: int = 500


@dataclass(frozen=True)
class RobotConfig:
    count: int = 100
    radius: float = 4.0
    v_trans_max: float = 2.0
    v_rot_max: float = 0.1745
    sensor_range: float = 196.0
    ray_angles_deg: tuple[float, ...] = (-90.0, -45.0, -20.0, -5.0, 5.0, 20.0, 45.0, 90.0)
    hidden: int = 16


@dataclass(frozen=True)
class EnergyConfig:
    start: float = 500.0
    living_cost: float = 0.5
    a_rx: float = 0.0305
    a_tx: float = 0.01379
    a_tx_amp: float = 0.000614


@dataclass(frozen=True)
class EvoConfig:
    max_lifetime: int = 2500
    comm_range: float = 128.0
    sigma: float = 0.1
    broadcast_every: int = 1
    charge_duplicates: bool = False
    refresh_fitness: bool = False
    list_capacity: int = 512
    select_eps: float = 1e-6


@dataclass(frozen=True)
class LearnConfig:
    variant: str = "Baseline"
    lr_init: float = 1.02
    lr_min: float = 1.0
    lr_max: float = 1.5
    vx_mode: str = "per_type"  # or "consumed"
    ls_sign: bool = True


@dataclass(frozen=True)
class RunConfig:
    max_iterations: int = 1_000_000
    runs: int = 30
    seed: int = 0
    epoch: int = 5000
    end_epochs: int = 2
    event_log: bool = True
    multiplier_log: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    arena: ArenaConfig = field(default_factory=ArenaConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    robot: RobotConfig = field(default_factory=RobotConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    evo: EvoConfig = field(default_factory=EvoConfig)
    learn: LearnConfig = field(default_factory=LearnConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self) -> None:
        if self.learn.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.learn.variant!r}")
        if self.learn.vx_mode not in ("per_type", "consumed"):
            raise ConfigError(f"unknown vx_mode {self.learn.vx_mode!r}")
        if self.env.token_count < 0 or self.robot.count < 1:
            raise ConfigError("token_count must be >= 0 and robot.count >= 1")
        if self.evo.sigma <= 0 or self.evo.broadcast_every < 1:
            raise ConfigError("evo.sigma must be > 0 and evo.broadcast_every >= 1")
        if self.run.epoch < 1 or self.run.runs < 1 or self.run.max_iterations < 0:
            raise ConfigError("bad run section")
        if len(self.robot.ray_angles_deg) != 8:
            raise ConfigError("exactly 8 sensor rays are required")

    # -- flat dotted-key view -------------------------------------------------
    def to_flat(self) -> dict[str, Any]:
        flat: dict[str, Any] = {}
        for sec in dataclasses.fields(self):
            sub = getattr(self, sec.name)
            for f in dataclasses.fields(sub):
                v = getattr(sub, f.name)
                flat[f"{sec.name}.{f.name}"] = list(v) if isinstance(v, tuple) else v
        return flat

    @classmethod
    def from_flat(cls, flat: dict[str, Any], base: ExperimentConfig | None = None) -> ExperimentConfig:
        base = base or cls()
        sections: dict[str, dict[str, Any]] = {}
        known = {s.name: {f.name: f for f in dataclasses.fields(getattr(base, s.name))}
                 for s in dataclasses.fields(base)}
        for key, value in flat.items():
            sec, _, name = key.partition(".")
            if sec not in known or name not in known[sec]:
                raise ConfigError(f"unknown config key {key!r}")
            current = getattr(getattr(base, sec), name)
            sections.setdefault(sec, {})[name] = _coerce(key, value, current)
        replaced = {sec: dataclasses.replace(getattr(base, sec), **kv) for sec, kv in sections.items()}
        return dataclasses.replace(base, **replaced)

    def with_overrides(self, **dotted: Any) -> ExperimentConfig:
        """``cfg.with_overrides(**{"run.seed": 3})``"""
        return ExperimentConfig.from_flat(dotted, base=self)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_flat(), sort_keys=True, default_flow_style=None)

    @classmethod
    def loads(cls, text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ConfigError("config file must be a mapping of dotted keys")
        return cls.from_flat(data, base=base)

    def digest(self) -> str:
        blob = json.dumps(self.to_flat(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def label(self) -> str:
        """Directory-friendly name of the <environment, season, variant> tuple."""
        env = environment_name(self.env.token_count, self.env.token_value)
        return f"{env}_p{self.env.season_period}_{VARIANT_SLUGS[self.learn.variant]}"


def _coerce(key: str, value: Any, current: Any) -> Any:
    try:
        if isinstance(current, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(current, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(current, float):
            return float(value)
        if isinstance(current, tuple):
            return tuple(float(v) for v in value)
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from exc


def environment_name(count: int, value: float) -> str:
    for name, (c, v) in ENVIRONMENTS.items():
        if c == count and v == value:
            return name
    return f"n{count}v{value:g}"


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return ExperimentConfig.loads(Path(path).read_text(), base=base)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(cfg.dumps())


# -- presets -------------------------------------------------------------------

FULL_SCALE = {"robot.count": 100, "run.max_iterations": 1_000_000, "run.runs": 30}
DESK_SCALE = {"robot.count": 50, "run.max_iterations": 100_000, "run.runs": 10}


def apply_preset(name: str, base: ExperimentConfig | None = None) -> list[ExperimentConfig]:
    """Expand a colon-separated preset such as ``desk:abundant:static:EVO+IL``.

    Tokens: ``full``/``desk`` (scale), an environment name, a season name
    (``static``, ``5k``, ``15k``), a variant name, or ``grid`` for the full
    3x3x4 factorial design. Returns one config per experiment.
    """
    cfg = base or ExperimentConfig()
    grid = False
    for tok in filter(None, name.split(":")):
        low = tok.lower()
        if low == "full":
            cfg = cfg.with_overrides(**FULL_SCALE)
        elif low == "desk":
            cfg = cfg.with_overrides(**DESK_SCALE)
        elif low in ENVIRONMENTS:
            n, v = ENVIRONMENTS[low]
            cfg = cfg.with_overrides(**{"env.token_count": n, "env.token_value": v})
        elif low in SEASONS:
            cfg = cfg.with_overrides(**{"env.season_period": SEASONS[low]})
        elif tok.upper() in VARIANTS or low in VARIANT_SLUGS.values():
            variant = tok.upper() if tok.upper() in VARIANTS else _slug_to_variant(low)
            if variant == "BASELINE":
                variant = "Baseline"
            cfg = cfg.with_overrides(**{"learn.variant": variant})
        elif low == "grid":
            grid = True
        else:
            raise ConfigError(f"invalid preset token {tok!r}")
    if not grid:
        return [cfg]
    out = []
    for env in ENVIRONMENTS:
        for season in SEASONS:
            for variant in VARIANTS:
                n, v = ENVIRONMENTS[env]
                out.append(cfg.with_overrides(**{
                    "env.token_count": n, "env.token_value": v,
                    "env.season_period": SEASONS[season], "learn.variant": variant,
                }))
    return out


def _slug_to_variant(slug: str) -> str:
    return {v: k for k, v in VARIANT_SLUGS.items()}[slug]


# -- sweep ---------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    counts: tuple[int, ...] = (150, 300, 625, 1150, 2000)
    values: tuple[float, ...] = (200.0, 425.0, 625.0, 850.0, 1150.0, 1500.0, 2000.0)
    iterations: int = 2000  # below the default max lifetime, so no genome is retired mid-run
    runs: int = 5
    seed: int = 0
    base: ExperimentConfig = field(default_factory=lambda: ExperimentConfig().with_overrides(
        **{"robot.count": 50, "learn.variant": "Baseline", "run.event_log": False}))

    def __post_init__(self) -> None:
        if not self.counts or not self.values:
            raise ConfigError("sweep grid must be non-empty")
        if any(c <= 0 for c in self.counts) or any(v <= 0 for v in self.values):
            raise ConfigError("sweep grid cells must be positive")
        if self.iterations < 1 or self.runs < 1:
            raise ConfigError("sweep iterations and runs must be >= 1")

    def to_flat(self) -> dict[str, Any]:
        flat = {
            "sweep.counts": list(self.counts),
            "sweep.values": list(self.values),
            "sweep.iterations": self.iterations,
            "sweep.runs": self.runs,
            "sweep.seed": self.seed,
        }
        flat.update(self.base.to_flat())
        return flat

    @classmethod
    def loads(cls, text: str) -> SweepConfig:
        data = yaml.safe_load(text) or {}
        sweep = {k.partition(".")[2]: v for k, v in data.items() if k.startswith("sweep.")}
        rest = {k: v for k, v in data.items() if not k.startswith("sweep.")}
        default = cls()
        kwargs: dict[str, Any] = {}
        for k, v in sweep.items():
            if k == "counts":
                kwargs[k] = tuple(int(x) for x in v)
            elif k == "values":
                kwargs[k] = tuple(float(x) for x in v)
            elif k in ("iterations", "runs", "seed"):
                kwargs[k] = int(v)
            else:
                raise ConfigError(f"unknown config key 'sweep.{k}'")
        kwargs["base"] = ExperimentConfig.from_flat(rest, base=default.base)
        return cls(**kwargs)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_flat(), sort_keys=True, default_flow_style=None)
