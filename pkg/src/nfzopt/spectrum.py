"""Drone emission mask, resource blocks and adjacent-band leakage power."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

_DB_TO_NEPER = math.log(10.0) / 10.0


@dataclass(frozen=True)
class EmissionMask:
    """Transmit spectral density relative to the carrier, per MHz.

    Breakpoints are ``(offset_mhz, level_db)`` pairs. Between breakpoints the
    level is linear in dB; beyond the last one it stays flat. A repeated
    offset encodes a jump: the later level applies from that offset on.
    ``-inf`` marks a silent stretch; any segment touching it contributes
    nothing.
    """

    offsets: tuple[float, ...]
    levels_db: tuple[float, ...]

    def __post_init__(self):
        offsets = tuple(float(o) for o in self.offsets)
        levels = tuple(float(v) for v in self.levels_db)
        if not offsets or len(offsets) != len(levels):
            raise ValueError("mask needs matching, non-empty offset and level lists")
        if any(b < a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("mask offsets must be non-decreasing")
        if any(math.isnan(v) or v == math.inf for v in levels):
            raise ValueError("mask levels must be finite dB or -inf")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "levels_db", levels)

    @classmethod
    def constant(cls, linear: float) -> "EmissionMask":
        level = 10.0 * math.log10(linear) if linear > 0 else -math.inf
        return cls((0.0,), (level,))

    @classmethod
    def from_csv(cls, path) -> "EmissionMask":
        offsets, levels = [], []
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(row for row in fh if not row.lstrip().startswith("#"))
            if set(reader.fieldnames or []) < {"offset_mhz", "level_db"}:
                raise ValueError(f"{path}: expected columns offset_mhz,level_db")
            for row in reader:
                offsets.append(float(row["offset_mhz"]))
                levels.append(float(row["level_db"]))
        return cls(tuple(offsets), tuple(levels))

    def level_db(self, offset):
        """Mask level in dB at the given offsets."""
        f = np.asarray(offset, dtype=float)
        out = np.empty_like(f)
        off = np.asarray(self.offsets)
        lv = np.asarray(self.levels_db)
        # right-continuous: at a repeated offset take the later level
        idx = np.searchsorted(off, f, side="right") - 1
        before = idx < 0
        after = idx >= len(off) - 1
        out[before] = lv[0]
        out[after] = lv[-1]
        mid = ~(before | after)
        i = idx[mid]
        f0, f1 = off[i], off[i + 1]
        v0, v1 = lv[i], lv[i + 1]
        t = (f[mid] - f0) / (f1 - f0)
        with np.errstate(invalid="ignore"):
            vals = v0 + t * (v1 - v0)
        vals = np.where(np.isinf(v0) | np.isinf(v1), -np.inf, vals)
        out[mid] = vals
        return out if out.ndim else float(out)

    def density(self, offset):
        """Linear-scale density H(f)."""
        return np.power(10.0, np.asarray(self.level_db(offset)) / 10.0)

    def integrate(self, lo: float, hi: float) -> float:
        """Exact integral of the linear density over [lo, hi]."""
        if hi < lo:
            raise ValueError("integration bounds reversed")
        if hi == lo:
            return 0.0
        # knots split the window into segments on which the dB level is affine
        knots = [lo] + [o for o in self.offsets if lo < o < hi] + [hi]
        total = []
        for a, b in zip(knots, knots[1:]):
            if b <= a:
                continue
            total.append(self._segment(a, b))
        return math.fsum(total)

    def _segment(self, a: float, b: float) -> float:
        va = float(self.level_db(np.array([a]))[0])
        vb = self._left_limit(b)
        if math.isinf(va) or math.isinf(vb):
            return 0.0
        width = b - a
        # total change in ln H across the segment
        rise = (vb - va) * _DB_TO_NEPER
        ha = math.exp(va * _DB_TO_NEPER)
        if abs(rise) < 1e-12:
            return ha * width * (1.0 + 0.5 * rise)
        return ha * width * math.expm1(rise) / rise

    def _left_limit(self, f: float) -> float:
        off = self.offsets
        lv = self.levels_db
        i = int(np.searchsorted(off, f, side="left")) - 1
        if i < 0:
            return lv[0]
        if i >= len(off) - 1:
            return lv[-1]
        f0, f1, v0, v1 = off[i], off[i + 1], lv[i], lv[i + 1]
        if math.isinf(v0) or math.isinf(v1):
            return -math.inf
        return v0 + (f - f0) / (f1 - f0) * (v1 - v0)

    def is_non_increasing(self) -> bool:
        return all(b <= a for a, b in zip(self.levels_db, self.levels_db[1:]))


def default_mask() -> EmissionMask:
    """Illustrative 5 MHz-block mask, not a regulatory one.

    Flat inside the occupied block (+-2.5 MHz), a steep 25 dB roll-off over the
    first MHz outside the block edge, then a slow decline to a -60 dB floor.
    """
    return EmissionMask(
        offsets=(0.0, 2.5, 3.5, 7.5, 12.5, 22.5),
        levels_db=(0.0, -10.0, -35.0, -40.0, -45.0, -60.0),
    )


@dataclass(frozen=True)
class SpectrumPlan:
    """Satellite band, drone communication band and the guard band between them.

    All frequencies in MHz. The drone band sits below the satellite band;
    ``blocks`` resource blocks tile it, block ``blocks`` being the one next to
    the guard band.
    """

    sat_bandwidth: float = 10.0
    sat_center: float = 8100.0
    drone_bandwidth: float = 20.0
    blocks: int = 4
    guard_width: float = 0.0
    tx_power: float = 1.0
    mask: EmissionMask = default_mask()

    def __post_init__(self):
        if not self.sat_bandwidth > 0 or not self.drone_bandwidth > 0:
            raise ValueError("bandwidths must be positive")
        if int(self.blocks) != self.blocks or self.blocks < 1:
            raise ValueError("blocks must be a positive integer")
        if self.guard_width < 0:
            raise ValueError("guard_width must be non-negative")
        if self.tx_power < 0:
            raise ValueError("tx_power must be non-negative")

    @property
    def block_width(self) -> float:
        return self.drone_bandwidth / self.blocks

    def block_center(self, k: int) -> float:
        """Absolute center frequency of block k (1-based)."""
        edge = self.sat_center - 0.5 * self.sat_bandwidth - self.guard_width
        return edge - (self.blocks - k + 0.5) * self.block_width

    def leakage_window(self, k: int) -> tuple[float, float]:
        """Satellite band expressed as offsets from the center of block k."""
        start = (self.blocks - k + 0.5) * self.block_width + self.guard_width
        return start, start + self.sat_bandwidth

    def with_guard(self, width: float) -> "SpectrumPlan":
        return replace(self, guard_width=float(width))


def block_emission_power(plan: SpectrumPlan, k: int) -> float:
    """Power a block-k drone leaks into the satellite band."""
    if int(k) != k or not 1 <= k <= plan.blocks:
        raise IndexError(f"block index {k} outside 1..{plan.blocks}")
    lo, hi = plan.leakage_window(int(k))
    return plan.tx_power * plan.mask.integrate(lo, hi)


def average_emission_power(plan: SpectrumPlan) -> float:
    return math.fsum(block_emission_power(plan, k) for k in range(1, plan.blocks + 1)) / plan.blocks


def guard_band_sweep(plan: SpectrumPlan, widths) -> list[tuple[float, float]]:
    out = []
    for w in widths:
        if w < 0:
            raise ValueError("guard widths must be non-negative")
        out.append((float(w), average_emission_power(plan.with_guard(w))))
    return out
