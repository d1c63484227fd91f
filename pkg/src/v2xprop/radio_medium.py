"""Log-distance pathloss, link budget and the distance-boundary cull."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, Mapping, Optional

from numba import njit

from .obstacle_loss import SPEED_OF_LIGHT

REFERENCE_DISTANCE = 1.0


@dataclass(frozen=True)
class RadioConfig:
    """Radio parameters; defaults are the reference scenario values."""

    tx_power: float = 25.0  # dBm
    antenna_gain_tx: float = 9.0  # dBi
    antenna_gain_rx: float = 9.0  # dBi
    system_loss: float = 3.0  # dB
    rx_sensitivity: float = -93.0  # dBm
    carrier_frequency: float = 5.9e9  # Hz
    bandwidth: float = 10e6  # Hz
    pathloss_exponent: float = 2.4
    distance_boundary: float = 1000.0  # m, inf disables culling
    message_length: int = 140  # bytes
    beacon_interval: float = 0.1  # s

    def __post_init__(self) -> None:
        for name in ("carrier_frequency", "pathloss_exponent", "distance_boundary",
                     "beacon_interval", "bandwidth"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if self.message_length < 0:
            raise ValueError(f"message_length must be >= 0, got {self.message_length}")

    @property
    def link_budget(self) -> float:
        """Power available before pathloss and obstacles, in dBm."""
        return self.tx_power + self.antenna_gain_tx + self.antenna_gain_rx - self.system_loss

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RadioConfig":
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in known:
                raise KeyError(key)
            kwargs[key] = int(value) if key == "message_length" else float(value)
        return cls(**kwargs)


@dataclass(frozen=True)
class LinkResult:
    """Outcome of one TX->RX evaluation.

    ``pathloss``, ``obstacle_loss`` and ``rx_power`` are None on culled links.
    """

    tx_id: Any
    rx_id: Any
    distance: float
    pathloss: Optional[float]
    obstacle_loss: Optional[float]
    rx_power: Optional[float]
    delivered: bool
    culled: bool


@njit(nogil=True, cache=True)
def pathloss_core(d, frequency, exponent):
    if d < REFERENCE_DISTANCE:
        d = REFERENCE_DISTANCE
    ref = 20.0 * math.log10(4.0 * math.pi * REFERENCE_DISTANCE * frequency / SPEED_OF_LIGHT)
    return ref + 10.0 * exponent * math.log10(d / REFERENCE_DISTANCE)


def pathloss_db(d: float, cfg: RadioConfig) -> float:
    """Free-space loss at 1 m plus ``10*n*log10(d)``; distances under 1 m clamp to 1 m."""
    return pathloss_core(float(d), cfg.carrier_frequency, cfg.pathloss_exponent)


def received_power_dbm(pl: float, obstacle_factor: float, cfg: RadioConfig) -> float:
    if not 0.0 <= obstacle_factor <= 1.0:
        raise ValueError(f"obstacle factor must lie in [0, 1], got {obstacle_factor}")
    if obstacle_factor == 0.0:
        return -math.inf
    return cfg.link_budget - pl + 10.0 * math.log10(obstacle_factor)


def cull_by_boundary(d: float, cfg: RadioConfig) -> bool:
    """True when the link is beyond the boundary and must not be evaluated."""
    return d > cfg.distance_boundary
