"""Radio-side arithmetic: NR data rates, SNR to BER mapping, minimal bundles.

A grant bundles three commodities: frequency blocks (each contributing a
fixed per-block rate before error scaling), one discrete transmit-power
level, and a number of CPU levels.  Everything in this module is a pure
function of its inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

R_MAX = 948 / 1024

ALLOWED_F_SCALE = (1.0, 0.8, 0.75, 0.4)

# One 11-block 10 MHz carrier (QPSK, 60 kHz SCS, 8% overhead), in bits/s.
DEFAULT_PER_BLOCK_RATE = 12.59e6

# Linear ramp from coin-flip errors at -10 dB down to error-free at -1 dB.
DEFAULT_BER_POINTS = ((-10.0, 0.5), (-1.0, 0.0))


@dataclass(frozen=True)
class CarrierConfig:
    """One aggregated component carrier entering the NR max-rate sum."""

    v_layers: int
    q_m: int
    f_scale: float
    mu: int
    n_prb: int
    overhead: float

    def __post_init__(self) -> None:
        if self.v_layers < 1:
            raise ValueError("v_layers must be >= 1")
        if self.q_m < 1:
            raise ValueError("q_m must be >= 1")
        if self.f_scale not in ALLOWED_F_SCALE:
            raise ValueError(f"f_scale must be one of {ALLOWED_F_SCALE}, got {self.f_scale}")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.n_prb < 1:
            raise ValueError("n_prb must be >= 1")
        if not 0.0 <= self.overhead < 1.0:
            raise ValueError("overhead must be in [0, 1)")

    @property
    def symbol_duration_s(self) -> float:
        """Average OFDM symbol duration for numerology mu, normal cyclic prefix."""
        return 1e-3 / (14 * 2 ** self.mu)


def nr_max_rate(carriers: Sequence[CarrierConfig]) -> float:
    """Approximate maximum NR data rate in bits/s, summed over carriers.

    Per carrier: layers * modulation order * scaling * 948/1024 * (PRBs * 12
    subcarriers / symbol duration) * (1 - overhead).  An empty carrier list
    yields 0.
    """
    total = 0.0
    for c in carriers:
        subcarrier_rate = c.n_prb * 12 / c.symbol_duration_s
        total += c.v_layers * c.q_m * c.f_scale * R_MAX * subcarrier_rate * (1.0 - c.overhead)
    return total


def effective_rate(per_block_rate_c: float, k_blocks: int, ber: float) -> float:
    """Rate of k aggregated blocks after scaling away the bit error rate."""
    return per_block_rate_c * k_blocks * (1.0 - ber)


class BerCurve:
    """Piecewise-linear BER versus received SNR (dB), clamped at both ends.

    Points must be strictly increasing in SNR with non-increasing BER values
    in [0, 0.5].  Queries outside the covered range return the edge value, so
    any SNR at or above the last point's SNR maps to that point's BER.
    """

    def __init__(self, points: Iterable[tuple[float, float]]) -> None:
        pts = [(float(s), float(b)) for s, b in points]
        if not pts:
            raise ValueError("BER curve needs at least one point")
        for (s1, b1), (s2, b2) in zip(pts, pts[1:]):
            if s2 <= s1:
                raise ValueError("BER curve SNR values must be strictly increasing")
            if b2 > b1:
                raise ValueError("BER curve values must be non-increasing in SNR")
        for _, b in pts:
            if not 0.0 <= b <= 0.5:
                raise ValueError("BER values must lie in [0, 0.5]")
        self._snr = np.array([p[0] for p in pts], dtype=float)
        self._ber = np.array([p[1] for p in pts], dtype=float)

    @classmethod
    def default(cls) -> "BerCurve":
        return cls(DEFAULT_BER_POINTS)

    @classmethod
    def from_csv(cls, path: str | Path) -> "BerCurve":
        """Load (snr_db, ber) rows from a two-column CSV; a header row is optional."""
        pts: list[tuple[float, float]] = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip():
                    continue
                try:
                    pts.append((float(row[0]), float(row[1])))
                except ValueError:
                    if pts:
                        raise ValueError(f"malformed BER curve row: {row}")
                    continue  # header row
        return cls(pts)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self._snr.tolist(), self._ber.tolist()))

    def ber_at(self, snr_db: float) -> float:
        return float(np.interp(snr_db, self._snr, self._ber))

    def __repr__(self) -> str:
        return f"BerCurve({self.points})"


@dataclass(frozen=True)
class LinkBudget:
    """Received SNR at full transmit power plus the number of discrete levels."""

    max_snr_db: float
    power_levels: int = 5

    def __post_init__(self) -> None:
        if self.power_levels < 1:
            raise ValueError("power_levels must be >= 1")


def snr_at_power(budget: LinkBudget, level: int) -> float | None:
    """Received SNR in dB at a transmit level, or None at level 0 (no signal).

    Received power scales with the level fraction, so the SNR sits
    10*log10(level/levels) dB below the full-power value.
    """
    if not 0 <= level <= budget.power_levels:
        raise ValueError(f"power level {level} outside [0, {budget.power_levels}]")
    if level == 0:
        return None
    return budget.max_snr_db + 10.0 * math.log10(level / budget.power_levels)


@dataclass(frozen=True)
class Bundle:
    """Resources bound to one grant; an all-zero bundle denotes no allocation."""

    num_blocks: int
    cpu_levels: int
    power_level: int

    def __post_init__(self) -> None:
        if min(self.num_blocks, self.cpu_levels, self.power_level) < 0:
            raise ValueError("bundle fields must be non-negative")


def min_bundle(
    demand_rate: float,
    cpu_demand: int,
    budget: LinkBudget,
    curve: BerCurve,
    pool,
    per_block_rate_c: float,
) -> Bundle | None:
    """Cheapest bundle meeting the rate and CPU demands, or None if none fits.

    Cheapest is lexicographic: lowest transmit level first, then fewest
    blocks; CPU is always exactly the demand.  For a fixed level the minimal
    block count is forced by the BER-scaled rate, so an ascending scan over
    levels returns the lexicographic minimum.  ``pool`` only needs
    free_blocks, cpu_free and power_free attributes.  Infeasibility is a
    normal outcome, not an error.
    """
    if cpu_demand > pool.cpu_free:
        return None
    top = min(budget.power_levels, pool.power_free)
    for level in range(1, top + 1):
        snr_db = snr_at_power(budget, level)
        ber = curve.ber_at(snr_db)
        k = max(1, math.ceil(demand_rate / (per_block_rate_c * (1.0 - ber))))
        if k <= pool.free_blocks:
            return Bundle(num_blocks=k, cpu_levels=cpu_demand, power_level=level)
    return None


@dataclass
class LinkModel:
    """Per-UE link budgets plus the shared BER curve and per-block rate."""

    curve: BerCurve
    budgets: Sequence[LinkBudget]
    per_block_rate_c: float = DEFAULT_PER_BLOCK_RATE

    def min_bundle_for(self, request, pool) -> Bundle | None:
        """Minimal bundle for a request given the pool, or None when infeasible."""
        return min_bundle(
            request.demand_rate,
            request.cpu_demand,
            self.budgets[request.ue_id],
            self.curve,
            pool,
            self.per_block_rate_c,
        )

    def ber_for(self, ue_id: int, power_level: int) -> float:
        """BER a UE sees at a transmit level; level 0 degenerates to rate zero."""
        snr = snr_at_power(self.budgets[ue_id], power_level)
        if snr is None:
            return 1.0
        return self.curve.ber_at(snr)
