"""Poisson drone fields drawn by thinning, and realized interference sums.

Replication ``i`` of a run seeded with ``seed`` always uses the ``i``-th child
of ``SeedSequence(seed)`` feeding a Philox generator, so statistics do not
depend on how replications are scheduled across threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .field import HemisphericalRegion


def _generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def replication_streams(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def sample_ppp(region: HemisphericalRegion, field, seed) -> np.ndarray:
    """Draw one realization of the drone field inside ``region``.

    A homogeneous process at the field's upper bound is placed on the
    bounding spherical shell, then each point is kept with probability
    ``lambda(x) / lambda_max`` and only if it lies strictly outside the inner
    surface and within the outer one. Returns an ``(n, 3)`` array of x, y, z.
    """
    rng = _generator(seed)
    lam_max = field.upper_bound()
    if lam_max <= 0:
        return np.empty((0, 3))
    r_hi = region.max_outer()
    r_lo = min(region.min_inner(), r_hi)
    shell = 2.0 * math.pi / 3.0 * (r_hi**3 - r_lo**3)
    n = rng.poisson(lam_max * shell)
    if n == 0:
        return np.empty((0, 3))
    u = rng.random((n, 4))
    rho = np.cbrt(r_lo**3 + u[:, 0] * (r_hi**3 - r_lo**3))
    cos_t = u[:, 1]
    theta = np.arccos(cos_t)
    phi = 2.0 * math.pi * u[:, 2]

    keep = u[:, 3] * lam_max < field.density(theta, phi, rho)
    inner, outer = region.radii_at(theta, phi)
    keep &= (rho > inner) & (rho <= outer)

    rho, theta, phi = rho[keep], theta[keep], phi[keep]
    sin_t = np.sin(theta)
    return np.column_stack([rho * sin_t * np.cos(phi), rho * sin_t * np.sin(phi), rho * np.cos(theta)])


def to_spherical(points):
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    rho = np.linalg.norm(points, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.where(rho > 0, np.arccos(np.clip(points[:, 2] / np.where(rho > 0, rho, 1.0), -1, 1)), 0.0)
    phi = np.arctan2(points[:, 1], points[:, 0]) % (2.0 * math.pi)
    return rho, theta, phi


def simulate_interference(points, pattern, loss, power: float) -> float:
    """Aggregate received power from drones at ``points`` (GS at the origin)."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if points.shape[0] == 0:
        return 0.0
    rho, theta, phi = to_spherical(points)
    terms = power * pattern.gain(theta, phi) * np.asarray(loss(rho))
    return math.fsum(terms)


@dataclass(frozen=True)
class MonteCarloSummary:
    samples: np.ndarray

    @property
    def n(self) -> int:
        return int(self.samples.size)

    @property
    def mean(self) -> float:
        return math.fsum(self.samples) / self.n

    @property
    def std(self) -> float:
        m = self.mean
        return math.sqrt(math.fsum((self.samples - m) ** 2) / (self.n - 1)) if self.n > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.n)

    def zscore(self, expected: float) -> float:
        """Standardized deviation of the sample mean from ``expected``."""
        se = self.stderr
        diff = self.mean - expected
        if se == 0.0:
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / se

    def exceedance(self, beta: float) -> float:
        return float(np.count_nonzero(self.samples >= beta)) / self.n


def run_replications(region, field, pattern, loss, power, n: int, seed: int = 0,
                     threads: int = 1) -> MonteCarloSummary:
    """Realized interference over ``n`` independent drone fields."""
    streams = replication_streams(seed, n)

    def one(ss):
        return simulate_interference(sample_ppp(region, field, ss), pattern, loss, power)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, streams, chunksize=64))
    else:
        out = [one(ss) for ss in streams]
    return MonteCarloSummary(np.asarray(out, dtype=float))


def write_points_csv(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "z"])
        for x, y, z in np.asarray(points).reshape(-1, 3):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(z))])
