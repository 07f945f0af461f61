"""Ground-station antenna patterns and the bounded power-law path loss.

Everything here is linear scale. Angles are radians: ``theta`` is elevation
in [0, pi/2] (0 is the zenith, where the array main lobe points) and ``phi``
is azimuth in [0, 2 pi).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# below this |sin(pi s sin(theta))| the array factor is replaced by its limit M
_SINGULAR_EPS = 1e-12


@dataclass(frozen=True)
class Direction:
    """A pointing direction seen from the ground station."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= HALF_PI):
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta!r}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)


@dataclass(frozen=True)
class UlaPattern:
    """Array factor magnitude of an M-element uniform linear array.

    ``spacing_ratio`` is the element spacing over the wavelength. The array
    axis is horizontal so the pattern depends on ``sin(theta)`` only.
    """

    elements: int = 8
    spacing_ratio: float = 0.25

    def __post_init__(self):
        if int(self.elements) != self.elements or self.elements < 1:
            raise ValueError("elements must be a positive integer")
        if not self.spacing_ratio > 0:
            raise ValueError("spacing_ratio must be positive")

    @property
    def peak(self) -> float:
        return float(self.elements)

    def gain(self, theta, phi=None):
        theta = np.asarray(theta, dtype=float)
        x = math.pi * self.spacing_ratio * np.sin(theta)
        num = np.sin(self.elements * x)
        den = np.sin(x)
        singular = np.abs(den) < _SINGULAR_EPS
        safe_den = np.where(singular, 1.0, den)
        g = np.where(singular, float(self.elements), np.abs(num / safe_den))
        if phi is not None:
            g = np.broadcast_to(g, np.broadcast_shapes(g.shape, np.shape(phi)))
        return g

    def theta_breaks(self) -> list[float]:
        """Elevations of the pattern nulls, where |.| puts a kink in the gain."""
        breaks = []
        ms = self.elements * self.spacing_ratio
        m = 1
        while m / ms <= 1.0:
            s = m / ms
            # nulls only; 0/0 points are grating lobes, smooth there
            if abs(math.sin(math.pi * self.spacing_ratio * s)) >= _SINGULAR_EPS:
                breaks.append(math.asin(min(s, 1.0)))
            m += 1
        return breaks


@dataclass(frozen=True)
class ConstantPattern:
    """Isotropic receiver, g(theta, phi) = value."""

    value: float = 1.0

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("gain must be non-negative")

    @property
    def peak(self) -> float:
        return float(self.value)

    def gain(self, theta, phi=None):
        shape = np.broadcast_shapes(np.shape(theta), np.shape(phi)) if phi is not None else np.shape(theta)
        return np.full(shape, float(self.value))

    def theta_breaks(self) -> list[float]:
        return []


@dataclass(frozen=True, eq=False)
class TabulatedPattern:
    """Gain sampled on a rectangular (theta, phi) mesh, bilinear in between.

    Queries outside the mesh are clamped to its edge.
    """

    theta: np.ndarray
    phi: np.ndarray
    gains: np.ndarray
    _interp: RegularGridInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        gains = np.asarray(self.gains, dtype=float)
        if gains.shape != (theta.size, phi.size):
            raise ValueError(f"gains shape {gains.shape} does not match mesh {(theta.size, phi.size)}")
        if np.any(np.diff(theta) <= 0) or np.any(np.diff(phi) <= 0):
            raise ValueError("mesh axes must be strictly increasing")
        if np.any(~np.isfinite(gains)) or np.any(gains < 0):
            raise ValueError("tabulated gains must be finite and non-negative")
        if theta.size < 2 or phi.size < 2:
            raise ValueError("mesh needs at least two nodes per axis")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "gains", gains)
        interp = RegularGridInterpolator((theta, phi), gains, method="linear")
        object.__setattr__(self, "_interp", interp)

    @property
    def peak(self) -> float:
        return float(self.gains.max())

    def gain(self, theta, phi=None):
        if phi is None:
            phi = np.zeros_like(np.asarray(theta, dtype=float))
        t, p = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float) % TWO_PI)
        t = np.clip(t, self.theta[0], self.theta[-1])
        p = np.clip(p, self.phi[0], self.phi[-1])
        pts = np.stack([t.ravel(), p.ravel()], axis=-1)
        return np.maximum(self._interp(pts).reshape(t.shape), 0.0)

    def theta_breaks(self) -> list[float]:
        return [float(t) for t in self.theta[1:-1]]

    @classmethod
    def from_csv(cls, path) -> "TabulatedPattern":
        """Read a ``theta_deg,phi_deg,gain_linear`` table covering a full mesh."""
        rows = []
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(row for row in fh if not row.lstrip().startswith("#"))
            missing = {"theta_deg", "phi_deg", "gain_linear"} - set(reader.fieldnames or [])
            if missing:
                raise ValueError(f"{path}: missing columns {sorted(missing)}")
            for lineno, row in enumerate(reader, start=2):
                t, p, g = float(row["theta_deg"]), float(row["phi_deg"]), float(row["gain_linear"])
                if not g >= 0:
                    raise ValueError(f"{path}:{lineno}: gain_linear must be >= 0, got {g}")
                rows.append((t, p, g))
        if not rows:
            raise ValueError(f"{path}: empty pattern table")
        thetas = sorted({r[0] for r in rows})
        phis = sorted({r[1] for r in rows})
        ti = {t: i for i, t in enumerate(thetas)}
        pi_ = {p: j for j, p in enumerate(phis)}
        gains = np.full((len(thetas), len(phis)), np.nan)
        for t, p, g in rows:
            gains[ti[t], pi_[p]] = g
        if np.isnan(gains).any():
            raise ValueError(f"{path}: table is not a full rectangular mesh")
        return cls(np.radians(thetas), np.radians(phis), gains)


def ula_gain(pattern: UlaPattern, direction: Direction) -> float:
    return float(pattern.gain(direction.theta))


@dataclass(frozen=True)
class BoundedPowerLaw:
    """l(r) = min(1, r**-alpha)."""

    alpha: float = 2.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def __call__(self, rho):
        return path_loss(self, rho)

    def radial_integral(self, r):
        """Integral of l(rho) rho**2 over [0, r], elementwise.

        Below the breakpoint this is r**3/3; above it the power-law part,
        with the alpha = 3 case reducing to a logarithm.
        """
        r = np.asarray(r, dtype=float)
        inside = np.minimum(r, 1.0) ** 3 / 3.0
        logr = np.log(np.maximum(r, 1.0))
        k = 3.0 - self.alpha
        if k == 0.0:
            tail = logr
        else:
            tail = np.expm1(k * logr) / k
        return inside + tail


def path_loss(model: BoundedPowerLaw, rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("distance must be non-negative")
    with np.errstate(divide="ignore"):
        out = np.where(rho <= 1.0, 1.0, np.power(np.maximum(rho, 1.0), -model.alpha))
    return out if out.ndim else float(out)


def inverse_path_loss(model: BoundedPowerLaw, level):
    """Smallest distance at which the loss equals ``level``.

    ``level == 1`` maps to 1, the clamp breakpoint, not to 0.
    """
    level = np.asarray(level, dtype=float)
    if np.any(~(level > 0)) or np.any(level > 1):
        raise ValueError("level must lie in (0, 1]")
    out = np.where(level < 1.0, np.power(level, -1.0 / model.alpha), 1.0)
    return out if out.ndim else float(out)
