"""Corner points of multi-user rate regions with weak interference.

Two settings:

* a two-user MAC (powers snr1, snr2) whose receiver also hears an
  interfering transmitter z at gain ``a`` and power ``snr_z``;
* a cascade of three transmitters where each hop attenuates by ``a``
  (or by separate gains ``a2``, ``a3`` for the intermediate-node limit).

Rates are in nats.
"""

from dataclasses import dataclass

import numpy as np

from .analytics import GoodCodeProfile
from .errors import DomainError

__all__ = [
    "MacInterferenceParams",
    "CascadeParams",
    "RatePoint",
    "mac_mmse_threshold",
    "mac_weak_boundary",
    "intermediate_node_limit",
    "cascade_boundary",
    "cascade_sum_and_individual_bounds",
    "interference_profile",
]


def _nonneg(obj, names):
    for name in names:
        v = getattr(obj, name)
        if v is None:
            continue
        if not np.isfinite(v) or v < 0:
            raise DomainError(f"{name} must be finite and >= 0, got {v!r}")


def _weak_gain(name, v):
    if not 0 <= v < 1:
        raise DomainError(f"{name} must lie in [0, 1) for weak interference, got {v!r}")


def _check_beta(beta):
    if not 0 <= beta <= 1:
        raise DomainError(f"beta must lie in [0, 1], got {beta!r}")


def _c(x):
    return 0.5 * np.log1p(x)


@dataclass(frozen=True)
class MacInterferenceParams:
    snr1: float
    snr2: float
    snr_z: float
    a: float

    def __post_init__(self):
        _nonneg(self, ("snr1", "snr2", "snr_z", "a"))


@dataclass(frozen=True)
class CascadeParams:
    """Three-transmitter cascade. ``a`` is the common decay; ``a2``/``a3``
    are separate gains used by :func:`intermediate_node_limit`."""

    snr1: float
    snr2: float
    snr3: float
    a: float = None
    a2: float = None
    a3: float = None

    def __post_init__(self):
        _nonneg(self, ("snr1", "snr2", "snr3", "a", "a2", "a3"))

    def decay(self) -> float:
        if self.a is None:
            raise DomainError("this query needs the common decay a")
        _weak_gain("a", self.a)
        return self.a


@dataclass(frozen=True)
class RatePoint:
    """Named rates in nats."""

    rates: dict

    def __post_init__(self):
        for k, v in self.rates.items():
            if v < 0:
                raise DomainError(f"rate {k} is negative: {v!r}")

    def __getitem__(self, key):
        return self.rates[key]

    def total(self, *keys) -> float:
        return float(sum(self.rates[k] for k in (keys or self.rates)))


def mac_mmse_threshold(p: MacInterferenceParams) -> float:
    """SNR beyond which the interferer's MMSE must vanish: a*snr_z/(1+snr1+snr2)."""
    return p.a * p.snr_z / (1.0 + p.snr1 + p.snr2)


def mac_weak_boundary(p: MacInterferenceParams, beta: float) -> RatePoint:
    """Boundary point (R1, R2, Rz) for the power split ``beta`` of user 1."""
    _weak_gain("a", p.a)
    _check_beta(beta)
    r1 = _c(beta * p.snr1)
    r2 = _c(((1.0 - beta) * p.snr1 + p.snr2) / (1.0 + beta * p.snr1))
    rz = _c(p.a * p.snr_z / (1.0 + p.snr1 + p.snr2))
    return RatePoint({"R1": r1, "R2": r2, "Rz": rz})


def intermediate_node_limit(p: CascadeParams) -> float:
    """Largest rate of the middle transmitter:
    min(C(a2 snr2/(1+snr1)), C(snr2/(1+a3 snr3)))."""
    if p.a2 is None or p.a3 is None:
        raise DomainError("this query needs the gains a2 and a3")
    _weak_gain("a2", p.a2)
    _weak_gain("a3", p.a3)
    return float(min(_c(p.a2 * p.snr2 / (1.0 + p.snr1)), _c(p.snr2 / (1.0 + p.a3 * p.snr3))))


def cascade_boundary(p: CascadeParams, beta: float) -> RatePoint:
    """Boundary point (R1, R2, R3) of the cascade for split ``beta``."""
    a = p.decay()
    _check_beta(beta)
    r1 = _c(p.snr1)
    r2 = _c(beta * a * p.snr2 / (1.0 + p.snr1))
    r3 = _c(((1.0 - beta) * a * p.snr2 + a * a * p.snr3) / (1.0 + p.snr1 + beta * a * p.snr2))
    return RatePoint({"R1": r1, "R2": r2, "R3": r3})


def cascade_sum_and_individual_bounds(p: CascadeParams):
    """``(sum_bound, r2_bound, r3_bound)`` for the two outer transmitters."""
    a = p.decay()
    d = 1.0 + p.snr1
    return (
        float(_c((a * p.snr2 + a * a * p.snr3) / d)),
        float(_c(a * p.snr2 / d)),
        float(_c(a * a * p.snr3 / d)),
    )


def interference_profile(p: MacInterferenceParams) -> GoodCodeProfile:
    """Good-code profile of the interferer as seen at the MAC receiver.

    Its MMSE vanishes from :func:`mac_mmse_threshold` on.
    """
    g = mac_mmse_threshold(p)
    if not g > 0:
        raise DomainError("the interferer is absent (a * snr_z = 0)")
    return GoodCodeProfile(g, 1.0)
