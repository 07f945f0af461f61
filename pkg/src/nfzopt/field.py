"""Drone intensity fields and Campbell-theorem interference integrals.

The expected interference from a Poisson field of drones between an inner
surface ``r(theta, phi)`` and an outer surface ``R(theta, phi)`` is

    P * int int int lambda * l(rho) * g * rho**2 sin(theta) drho dtheta dphi.

For fields that are constant along each ray the radial part is done in
closed form (see :meth:`BoundedPowerLaw.radial_integral`); the angular part
always uses an :class:`AngularGrid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import CapabilityError, GeometryError
from .quadrature import AngularGrid
from .radio import HALF_PI, TWO_PI, BoundedPowerLaw


@dataclass(frozen=True)
class HomogeneousField:
    intensity: float

    def __post_init__(self):
        if not self.intensity >= 0:
            raise ValueError("intensity must be non-negative")

    rho_constant = True

    def angular(self, theta, phi):
        return np.full(np.broadcast_shapes(np.shape(theta), np.shape(phi)), float(self.intensity))

    def density(self, theta, phi, rho):
        return np.full(np.broadcast_shapes(np.shape(theta), np.shape(phi), np.shape(rho)), float(self.intensity))

    def upper_bound(self) -> float:
        return float(self.intensity)

    def theta_breaks(self):
        return []

    def phi_breaks(self):
        return []


@dataclass(frozen=True)
class Cell:
    """Angular rectangle [theta_lo, theta_hi) x [phi_lo, phi_hi), radians."""

    theta_lo: float
    theta_hi: float
    phi_lo: float
    phi_hi: float
    intensity: float

    def __post_init__(self):
        if not (0 <= self.theta_lo < self.theta_hi <= HALF_PI):
            raise ValueError(f"bad elevation range [{self.theta_lo}, {self.theta_hi})")
        if not (0 <= self.phi_lo < self.phi_hi <= TWO_PI):
            raise ValueError(f"bad azimuth range [{self.phi_lo}, {self.phi_hi})")
        if not self.intensity >= 0:
            raise ValueError("cell intensity must be non-negative")

    @classmethod
    def from_degrees(cls, theta_range, phi_range, intensity) -> "Cell":
        (t0, t1), (p0, p1) = theta_range, phi_range
        return cls(math.radians(t0), math.radians(t1), math.radians(p0), math.radians(p1), float(intensity))

    def contains(self, theta, phi):
        return (
            (theta >= self.theta_lo) & (theta < self.theta_hi)
            & (phi >= self.phi_lo) & (phi < self.phi_hi)
        )

    def overlaps(self, other: "Cell") -> bool:
        return (
            self.theta_lo < other.theta_hi and other.theta_lo < self.theta_hi
            and self.phi_lo < other.phi_hi and other.phi_lo < self.phi_hi
        )

    def solid_angle(self) -> float:
        return (math.cos(self.theta_lo) - math.cos(self.theta_hi)) * (self.phi_hi - self.phi_lo)


@dataclass(frozen=True)
class PiecewiseField:
    """Intensity constant on disjoint angular cells, ``default`` elsewhere."""

    cells: tuple[Cell, ...]
    default: float = 0.0

    rho_constant = True

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if self.default < 0:
            raise ValueError("default intensity must be non-negative")
        for i, a in enumerate(self.cells):
            for b in self.cells[i + 1:]:
                if a.overlaps(b):
                    raise ValueError(f"cells overlap: {a} and {b}")

    def angular(self, theta, phi):
        theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float) % TWO_PI)
        out = np.full(theta.shape, float(self.default))
        for c in self.cells:
            out[c.contains(theta, phi)] = c.intensity
        return out

    def density(self, theta, phi, rho):
        lam = self.angular(theta, phi)
        return np.broadcast_to(lam, np.broadcast_shapes(lam.shape, np.shape(rho))).copy()

    def upper_bound(self) -> float:
        return max([self.default, *(c.intensity for c in self.cells)])

    def theta_breaks(self):
        return sorted({b for c in self.cells for b in (c.theta_lo, c.theta_hi)})

    def phi_breaks(self):
        return sorted({b for c in self.cells for b in (c.phi_lo, c.phi_hi)})


@dataclass(frozen=True, eq=False)
class GeneralField:
    """Arbitrary density ``func(theta, phi, rho)``, vectorized over numpy arrays.

    Sampling needs ``bound``, an upper bound on the density over the region.
    """

    func: Callable
    bound: float | None = None

    rho_constant = False

    def density(self, theta, phi, rho):
        return np.asarray(self.func(theta, phi, rho), dtype=float)

    def upper_bound(self) -> float:
        if self.bound is None:
            raise CapabilityError("general field has no declared upper bound; cannot thin")
        return float(self.bound)

    def theta_breaks(self):
        return []

    def phi_breaks(self):
        return []


def banded_field() -> PiecewiseField:
    """Altitude-banded drone density used for the reference scenario.

    Elevations below 10 degrees fall back to the default value.
    """
    return PiecewiseField(
        (
            Cell.from_degrees((10, 30), (0, 360), 10**-8),
            Cell.from_degrees((30, 60), (0, 180), 10**-7.2),
            Cell.from_degrees((60, 80), (180, 360), 10**-7.3),
        ),
        default=10**-8.5,
    )


def _radius_nodes(obj, grid: AngularGrid):
    """Evaluate a radius description at every grid node."""
    if obj is None:
        return np.zeros(grid.shape)
    if np.isscalar(obj):
        return np.full(grid.shape, float(obj))
    if hasattr(obj, "radii_on"):
        return obj.radii_on(grid)
    t, p = grid.mesh()
    return np.asarray(obj(t, p), dtype=float) * np.ones(grid.shape)


def _radius_points(obj, theta, phi):
    if obj is None:
        return np.zeros(np.shape(theta))
    if np.isscalar(obj):
        return np.full(np.shape(theta), float(obj))
    if hasattr(obj, "radius_at"):
        return obj.radius_at(theta, phi)
    return np.asarray(obj(theta, phi), dtype=float) * np.ones(np.shape(theta))


@dataclass(frozen=True, eq=False)
class HemisphericalRegion:
    """Drones between ``inner`` and ``outer`` radius surfaces, z >= 0.

    Either surface is a number, a callable ``f(theta, phi)`` or an object with
    ``radii_on(grid)`` / ``radius_at(theta, phi)`` (such as an ``NfzSurface``).
    """

    outer: object
    inner: object = 0.0

    def radii(self, grid: AngularGrid):
        inner = _radius_nodes(self.inner, grid)
        outer = _radius_nodes(self.outer, grid)
        if np.any(inner < 0):
            raise GeometryError("inner radius negative")
        if np.any(inner > outer * (1 + 1e-12)):
            raise GeometryError("inner surface exceeds outer surface")
        return np.minimum(inner, outer), outer

    def radii_at(self, theta, phi):
        return _radius_points(self.inner, theta, phi), _radius_points(self.outer, theta, phi)

    def max_outer(self) -> float:
        if np.isscalar(self.outer):
            return float(self.outer)
        if hasattr(self.outer, "max_radius"):
            return float(self.outer.max_radius)
        raise CapabilityError("outer surface has no known maximum radius")

    def min_inner(self) -> float:
        return float(self.inner) if np.isscalar(self.inner) else 0.0

    def volume(self) -> float:
        if np.isscalar(self.outer) and np.isscalar(self.inner):
            return 2.0 * math.pi / 3.0 * (float(self.outer) ** 3 - float(self.inner) ** 3)
        raise CapabilityError("closed-form volume only for constant radii")


def radial_profile(field, loss: BoundedPowerLaw, theta, phi, inner, outer):
    """Per-node radial integral of lambda * l(rho) * rho**2 between two radii."""
    if field.rho_constant:
        lam = field.angular(theta, phi)
        return lam * (loss.radial_integral(outer) - loss.radial_integral(inner))
    out = np.zeros(np.shape(theta))
    it = np.nditer([theta, phi, inner, outer], flags=["multi_index"])
    for t, p, a, b in it:
        a, b = float(a), float(b)
        if b <= a:
            continue

        def integrand(rho, t=float(t), p=float(p)):
            return float(field.density(t, p, rho)) * min(1.0, rho ** -loss.alpha if rho > 0 else 1.0) * rho**2

        pts = [1.0] if a < 1.0 < b else None
        val, _ = integrate.quad(integrand, a, b, points=pts, epsrel=1e-9, epsabs=0.0, limit=200)
        out[it.multi_index] = val
    return out


def expected_interference(region: HemisphericalRegion, field, pattern, loss: BoundedPowerLaw,
                          power: float, grid: AngularGrid) -> float:
    """Campbell-theorem mean of the aggregate interference from drones in ``region``."""
    if power < 0:
        raise ValueError("power must be non-negative")
    inner, outer = region.radii(grid)
    t, p = grid.mesh()
    g = pattern.gain(t, p)
    prof = radial_profile(field, loss, t, p, inner, outer)
    return float(power * np.sum(grid.solid_weights * g * prof))


def eliminated_interference(nfz, field, pattern, loss: BoundedPowerLaw, power: float,
                            grid: AngularGrid) -> float:
    """Mean interference removed by clearing the drones inside ``nfz``."""
    return expected_interference(HemisphericalRegion(outer=nfz, inner=0.0), field, pattern, loss, power, grid)


def interference_variance(region: HemisphericalRegion, field, pattern, loss: BoundedPowerLaw,
                          power: float, grid: AngularGrid) -> float:
    """Variance of the aggregate interference (second-order Campbell formula).

    The squared bounded power law is again a bounded power law with twice the
    exponent, so the same closed-form radial integral applies.
    """
    inner, outer = region.radii(grid)
    t, p = grid.mesh()
    g = pattern.gain(t, p)
    prof = radial_profile(field, BoundedPowerLaw(2.0 * loss.alpha), t, p, inner, outer)
    return float(power**2 * np.sum(grid.solid_weights * g**2 * prof))
