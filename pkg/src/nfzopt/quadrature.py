"""Product quadrature over the upper hemisphere of directions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .radio import HALF_PI, TWO_PI


# every elevation panel gets at least this many Gauss nodes
_MIN_PANEL_NODES = 8


def _clean_breaks(breaks, lo, hi):
    tol = 1e-12 * (hi - lo)
    inner = sorted({float(b) for b in breaks if lo + tol < b < hi - tol})
    return [lo, *inner, hi]


def _allocate(lengths, total, minimum):
    """Split ``total`` nodes across panels in proportion to their length."""
    lengths = np.asarray(lengths, dtype=float)
    counts = np.maximum(minimum, np.floor(total * lengths / lengths.sum()).astype(int))
    # hand out what is left to the panels with the largest remainder
    while counts.sum() < total:
        deficit = total * lengths / lengths.sum() - counts
        counts[int(np.argmax(deficit))] += 1
    return counts


@dataclass(frozen=True, eq=False)
class AngularGrid:
    """Tensor grid of (theta, phi) nodes with positive weights.

    Elevation uses composite Gauss-Legendre panels split at ``theta_breaks``;
    azimuth uses the midpoint rule on panels split at ``phi_breaks`` (with no
    breaks this is the periodic trapezoid rule shifted by half a step).
    Breakpoints should sit where the integrand jumps or kinks, so every panel
    sees a smooth function. Weights sum to pi**2, the measure of the domain.
    """

    n_theta: int = 128
    n_phi: int = 256
    theta_breaks: tuple[float, ...] = ()
    phi_breaks: tuple[float, ...] = ()
    theta: np.ndarray = field(init=False, repr=False)
    phi: np.ndarray = field(init=False, repr=False)
    w_theta: np.ndarray = field(init=False, repr=False)
    w_phi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError("grid needs at least one node per axis")
        tb = _clean_breaks(self.theta_breaks, 0.0, HALF_PI)
        pb = _clean_breaks([p % TWO_PI for p in self.phi_breaks], 0.0, TWO_PI)
        object.__setattr__(self, "theta_breaks", tuple(tb[1:-1]))
        object.__setattr__(self, "phi_breaks", tuple(pb[1:-1]))

        counts = _allocate(np.diff(tb), self.n_theta, _MIN_PANEL_NODES)
        ts, wts = [], []
        for (a, b), n in zip(zip(tb, tb[1:]), counts):
            x, w = np.polynomial.legendre.leggauss(int(n))
            ts.append(0.5 * (b - a) * x + 0.5 * (a + b))
            wts.append(0.5 * (b - a) * w)
        counts = _allocate(np.diff(pb), max(self.n_phi, len(pb) - 1), 1)
        ps, wps = [], []
        for (a, b), n in zip(zip(pb, pb[1:]), counts):
            h = (b - a) / n
            ps.append(a + (np.arange(n) + 0.5) * h)
            wps.append(np.full(n, h))
        object.__setattr__(self, "theta", np.concatenate(ts))
        object.__setattr__(self, "phi", np.concatenate(ps))
        object.__setattr__(self, "w_theta", np.concatenate(wts))
        object.__setattr__(self, "w_phi", np.concatenate(wps))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta.size, self.phi.size)

    def mesh(self):
        """Node coordinates as two (n_theta, n_phi) arrays."""
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.w_theta, self.w_phi)

    @property
    def solid_weights(self) -> np.ndarray:
        """Weights including the sin(theta) Jacobian of the sphere."""
        return np.outer(self.w_theta * np.sin(self.theta), self.w_phi)

    def integrate(self, values) -> float:
        """Quadrature of ``values`` sampled at the nodes (no Jacobian)."""
        return float(np.sum(self.weights * values))

    def refined(self, factor: int = 2) -> "AngularGrid":
        return AngularGrid(
            self.n_theta * factor, self.n_phi * factor, self.theta_breaks, self.phi_breaks
        )

    def spec(self) -> dict:
        return {
            "n_theta": self.n_theta,
            "n_phi": self.n_phi,
            "theta_breaks": [float(b) for b in self.theta_breaks],
            "phi_breaks": [float(b) for b in self.phi_breaks],
        }

    @classmethod
    def from_spec(cls, spec: dict) -> "AngularGrid":
        return cls(
            int(spec["n_theta"]),
            int(spec["n_phi"]),
            tuple(spec.get("theta_breaks", ())),
            tuple(spec.get("phi_breaks", ())),
        )

    def same_nodes(self, other: "AngularGrid") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.phi, other.phi)
        )

    def cell_index(self, theta, phi):
        """Index of the nearest node along each axis, for scattered queries."""
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float) % TWO_PI
        i = _nearest(self.theta, theta)
        # azimuth wraps: compare against the nodes and their 2 pi shifts
        ext = np.concatenate([self.phi - TWO_PI, self.phi, self.phi + TWO_PI])
        j = _nearest(ext, phi) % self.phi.size
        return i, j


def _nearest(nodes, x):
    k = np.clip(np.searchsorted(nodes, x), 1, nodes.size - 1) if nodes.size > 1 else np.zeros_like(x, dtype=int)
    if nodes.size == 1:
        return k
    left = nodes[k - 1]
    right = nodes[k]
    return np.where(np.abs(x - left) <= np.abs(right - x), k - 1, k)


def default_breaks(*sources) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Collect elevation/azimuth breakpoints from patterns and fields."""
    tb: list[float] = []
    pb: list[float] = []
    for src in sources:
        if src is None:
            continue
        if hasattr(src, "theta_breaks"):
            tb.extend(src.theta_breaks())
        if hasattr(src, "phi_breaks"):
            pb.extend(src.phi_breaks())
    return tuple(sorted(set(tb))), tuple(sorted(set(pb)))


def hemisphere_measure() -> float:
    return math.pi**2
