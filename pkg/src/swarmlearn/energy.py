"""Per-iteration energy accounting: motion cost, radio cost and the balance update."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import EnergyConfig


@dataclass(frozen=True)
class EnergyParams:
    living_cost: float = 0.5
    v_trans_max: float = 2.0
    v_rot_max: float = 0.1745
    a_rx: float = 0.0305
    a_tx: float = 0.01379
    a_tx_amp: float = 0.000614
    negative_token: float = -400.0
    start_energy: float = 500.0

    def __post_init__(self) -> None:
        positives = (self.living_cost, self.v_trans_max, self.v_rot_max,
                     self.a_rx, self.a_tx, self.a_tx_amp, self.start_energy)
        if min(positives) <= 0:
            raise ValueError("energy constants must be strictly positive")

    @classmethod
    def from_config(cls, energy: EnergyConfig, v_trans_max: float, v_rot_max: float,
                    negative_token: float = -400.0) -> EnergyParams:
        return cls(energy.living_cost, v_trans_max, v_rot_max, energy.a_rx, energy.a_tx,
                   energy.a_tx_amp, negative_token, energy.start)


def step_cost(v_rot: float, v_trans: float, params: EnergyParams) -> float:
    """Living plus motion cost; turning either way costs the same."""
    return params.living_cost + (abs(v_rot) / params.v_rot_max + v_trans / params.v_trans_max) / 4.0


def comm_cost(received: int, transmitted: Iterable[float], params: EnergyParams) -> float:
    """Radio cost of ``received`` genomes in and one transmission per distance in ``transmitted``."""
    tx = sum(params.a_tx + params.a_tx_amp * d * d for d in transmitted)
    return received * params.a_rx + tx


@dataclass(frozen=True)
class LedgerRow:
    e_step: float
    e_com: float
    token_gain: float
    e_before: float
    e_after: float  # pre-clamp


@dataclass
class EnergyLedger:
    rows: list[LedgerRow] = field(default_factory=list)

    def balance(self) -> float:
        return sum(r.token_gain - r.e_step - r.e_com for r in self.rows)


def update_energy(e: float, e_step: float, e_com: float, consumed: Sequence[float],
                  ledger: EnergyLedger | None = None) -> float:
    """Apply one iteration of costs and token gains; the result is clamped at zero."""
    gain = float(sum(consumed))
    after = e - e_step - e_com + gain
    if ledger is not None:
        ledger.rows.append(LedgerRow(e_step, e_com, gain, e, after))
    return after if after > 0.0 else 0.0
