"""Minimum-volume no-fly zones and the baseline shapes they are compared to.

A star-shaped NFZ is a separation distance ``r(theta, phi)`` sampled on an
:class:`AngularGrid`. Minimizing its volume subject to eliminating a required
amount ``a`` of mean interference gives, at every direction, the level-set
condition

    P * lambda * l(r) * g = mu

for one multiplier ``mu`` shared by all directions. With the bounded power
law this is ``r = max(1, (P lambda g / mu) ** (1 / alpha))``; ``mu`` is then
tuned until the eliminated interference equals ``a``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .errors import InfeasibleBudgetError
from .field import radial_profile
from .quadrature import AngularGrid
from .radio import BoundedPowerLaw, Direction

log = logging.getLogger(__name__)

CLAMP_FLOORS = {"one": 1.0, "zero": 0.0}


@dataclass(frozen=True, eq=False)
class NfzSurface:
    """Separation distance per grid node.

    ``radius_fn``, when present, evaluates the same surface at arbitrary
    directions (used by the sampler); otherwise point queries fall back to the
    nearest node.
    """

    grid: AngularGrid
    radii: np.ndarray
    provenance: str = "custom"
    params: dict = field(default_factory=dict)
    radius_fn: Callable | None = None

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        if radii.shape != self.grid.shape:
            raise ValueError(f"radii shape {radii.shape} does not match grid {self.grid.shape}")
        if np.any(~np.isfinite(radii)) or np.any(radii < 0):
            raise ValueError("radii must be finite and non-negative")
        radii.setflags(write=False)
        object.__setattr__(self, "radii", radii)

    @property
    def max_radius(self) -> float:
        return float(self.params.get("max_radius", self.radii.max(initial=0.0)))

    @property
    def volume(self) -> float:
        return surface_volume(self)

    def radii_on(self, grid: AngularGrid) -> np.ndarray:
        if grid is self.grid or grid.same_nodes(self.grid):
            return self.radii
        t, p = grid.mesh()
        return self.radius_at(t, p)

    def radius_at(self, theta, phi):
        if self.radius_fn is not None:
            return np.asarray(self.radius_fn(theta, phi), dtype=float)
        i, j = self.grid.cell_index(theta, phi)
        return self.radii[i, j]


@dataclass(frozen=True)
class Budget:
    """Interference cap ``a_prime`` and the reduction ``a`` it forces."""

    a_prime: float
    a: float

    @classmethod
    def from_cap(cls, expected_total: float, a_prime: float) -> "Budget":
        if a_prime < 0:
            raise ValueError("a_prime must be non-negative")
        return cls(a_prime=float(a_prime), a=float(expected_total - a_prime))


class _Problem:
    """Node-level view of the optimization: weights, P*lambda*g and bounds."""

    def __init__(self, field, pattern, loss: BoundedPowerLaw, power: float, grid: AngularGrid,
                 outer=math.inf, clamp_floor: str = "one"):
        if clamp_floor not in CLAMP_FLOORS:
            raise ValueError(f"clamp_floor must be one of {sorted(CLAMP_FLOORS)}")
        self.field, self.pattern, self.loss, self.power, self.grid = field, pattern, loss, power, grid
        self.floor = CLAMP_FLOORS[clamp_floor]
        self.clamp_floor = clamp_floor
        self.theta, self.phi = grid.mesh()
        self.w = grid.solid_weights
        self.g = pattern.gain(self.theta, self.phi)
        if np.isscalar(outer) or outer is None:
            self.outer = np.full(grid.shape, math.inf if outer is None else float(outer))
        else:
            self.outer = np.asarray(outer.radii_on(grid) if hasattr(outer, "radii_on") else outer, dtype=float)
        if field.rho_constant:
            self.strength = power * field.angular(self.theta, self.phi) * self.g
        else:
            self.strength = None

    # -- per-direction radii ------------------------------------------------
    def radii(self, mu: float) -> np.ndarray:
        if self.strength is not None:
            return _closed_form_radius(self.strength, mu, self.loss.alpha, self.floor, self.outer)
        out = np.empty(self.grid.shape)
        for idx in np.ndindex(*self.grid.shape):
            out[idx] = _largest_root(self.field, self.loss, self.power, self.floor, self.theta[idx],
                                     self.phi[idx], self.g[idx], float(self.outer[idx]), mu)
        return out

    def eliminated(self, radii) -> float:
        if self.strength is not None:
            return float(np.sum(self.w * self.strength * self.loss.radial_integral(radii)))
        prof = radial_profile(self.field, self.loss, self.theta, self.phi, np.zeros_like(radii), radii)
        return float(self.power * np.sum(self.w * self.g * prof))

    def volume(self, radii) -> float:
        return float(np.sum(self.w * radii**3) / 3.0)

    def total(self) -> float:
        if np.any(np.isinf(self.outer)):
            return math.inf
        return self.eliminated(self.outer)

    def mu_max(self) -> float:
        """Smallest mu at which every direction sits on the floor."""
        if self.strength is not None:
            return float(self.strength.max(initial=0.0))
        # with rho-dependent density the peak of P lambda l g can be anywhere on the ray
        rs = np.geomspace(1.0, max(2.0, float(np.nanmax(np.where(np.isinf(self.outer), 1e6, self.outer)))), 256)
        peak = 0.0
        for idx in np.ndindex(*self.grid.shape):
            dens = self.field.density(self.theta[idx], self.phi[idx], rs)
            peak = max(peak, float(np.max(self.power * dens * self.loss(rs) * self.g[idx])))
        return peak

    def radius_fn(self, mu: float):
        if self.strength is None:
            return None
        field, pattern, power, alpha = self.field, self.pattern, self.power, self.loss.alpha
        floor = self.floor
        outer = self.outer
        const_outer = float(outer.flat[0]) if np.all(outer == outer.flat[0]) else None

        def fn(theta, phi):
            s = power * field.angular(theta, phi) * pattern.gain(theta, phi)
            cap = const_outer if const_outer is not None else math.inf
            return _closed_form_radius(s, mu, alpha, floor, cap)

        return fn


def _closed_form_radius(strength, mu, alpha, floor, outer):
    strength = np.asarray(strength, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        r = np.power(strength / mu, 1.0 / alpha)
    r = np.where(strength > mu, np.maximum(r, 1.0), floor)
    return np.minimum(r, outer)


def _largest_root(field, loss, power, floor, t, p, g, hi, mu) -> float:
    """Largest r in [1, hi] with P lambda(r) l(r) g = mu, by scan and bisection."""
    if not math.isfinite(hi):
        hi = 1e6

    def excess(r):
        return float(power * field.density(t, p, r) * loss(r) * g) - mu

    if excess(hi) > 0:
        return hi
    rs = np.geomspace(1.0, hi, 64) if hi > 1 else np.array([1.0])
    vals = np.array([excess(r) for r in rs])
    pos = np.nonzero(vals > 0)[0]
    if pos.size == 0:
        return floor
    k = int(pos[-1])
    if k == rs.size - 1:
        return hi
    return float(optimize.brentq(excess, rs[k], rs[k + 1], xtol=1e-12, rtol=1e-14))


def optimal_radius(direction: Direction, mu: float, field, pattern, loss: BoundedPowerLaw,
                   power: float, outer: float = math.inf, clamp_floor: str = "one") -> float:
    """Optimal separation distance along one direction for a given multiplier."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    floor = CLAMP_FLOORS[clamp_floor]
    g = float(pattern.gain(direction.theta, direction.phi))
    if field.rho_constant:
        s = power * float(field.angular(direction.theta, direction.phi)) * g
        return float(_closed_form_radius(s, mu, loss.alpha, floor, outer))
    return _largest_root(field, loss, power, floor, direction.theta, direction.phi, g, outer, mu)


@dataclass(frozen=True)
class Calibration:
    mu: float
    eliminated: float
    target: float
    status: str
    iterations: int = 0
    trace: tuple = ()

    @property
    def relative_error(self) -> float:
        return abs(self.eliminated - self.target) / self.target if self.target > 0 else 0.0


def _calibrate(prob: _Problem, budget: Budget) -> Calibration:
    a = budget.a
    if a <= 0:
        log.warning("budget already met without an NFZ (a = %g)", a)
        return Calibration(math.inf, 0.0, a, "no NFZ required")
    total = prob.total()
    if a >= total:
        raise InfeasibleBudgetError(
            f"required reduction {a:.6g} is not below the total expected interference {total:.6g}"
        )
    mu_hi = prob.mu_max()
    trace = []

    def eliminated(mu):
        e = prob.eliminated(prob.radii(mu))
        trace.append((mu, e))
        return e

    e_hi = eliminated(mu_hi)
    if e_hi >= a:
        return Calibration(mu_hi, e_hi, a, "floor sufficient", 0, tuple(trace))
    mu_lo = 0.5 * mu_hi
    for _ in range(4000):
        if eliminated(mu_lo) >= a:
            break
        mu_lo *= 0.5
    else:
        raise InfeasibleBudgetError("could not bracket the multiplier")

    root, res = optimize.brentq(
        lambda x: eliminated(math.exp(x)) - a,
        math.log(mu_lo), math.log(mu_hi),
        xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200, full_output=True,
    )
    mu = math.exp(root)
    e = prob.eliminated(prob.radii(mu))
    if prob.floor == 0.0 and e < a:
        # switching a node on jumps the objective; stay on the feasible side
        for m, em in sorted(trace, reverse=True):
            if em >= a:
                mu, e = m, em
                break
    log.debug("multiplier %.12g after %d iterations, eliminated %.12g (target %.12g)",
              mu, res.iterations, e, a)
    return Calibration(mu, e, a, "optimal", res.iterations, tuple(trace))


def solve_multiplier(budget: Budget, field, pattern, loss: BoundedPowerLaw, power: float,
                     grid: AngularGrid, outer=math.inf, clamp_floor: str = "one") -> Calibration:
    """Find the multiplier at which the optimal surface eliminates exactly ``budget.a``."""
    return _calibrate(_Problem(field, pattern, loss, power, grid, outer, clamp_floor), budget)


def _surface_from_mu(prob: _Problem, mu: float, extra: dict) -> NfzSurface:
    if math.isinf(mu):
        radii = np.zeros(prob.grid.shape)
        fn = None
    else:
        radii = prob.radii(mu)
        fn = prob.radius_fn(mu)
    params = {"mu": mu, "clamp_floor": prob.clamp_floor, **extra}
    if not np.any(np.isinf(prob.outer)):
        params["max_radius"] = float(prob.outer.max())
    return NfzSurface(prob.grid, radii, "optimal", params, fn)


def build_optimal_nfz(budget: Budget, field, pattern, loss: BoundedPowerLaw, power: float,
                      grid: AngularGrid, outer=math.inf, clamp_floor: str = "one") -> NfzSurface:
    prob = _Problem(field, pattern, loss, power, grid, outer, clamp_floor)
    cal = _calibrate(prob, budget)
    return _surface_from_mu(prob, cal.mu, {
        "a": budget.a, "a_prime": budget.a_prime, "status": cal.status,
        "eliminated": cal.eliminated, "iterations": cal.iterations,
    })


def surface_for_multiplier(mu: float, field, pattern, loss: BoundedPowerLaw, power: float,
                           grid: AngularGrid, outer=math.inf, clamp_floor: str = "one") -> NfzSurface:
    """Optimal-shape surface for a fixed multiplier, without calibration."""
    prob = _Problem(field, pattern, loss, power, grid, outer, clamp_floor)
    return _surface_from_mu(prob, mu, {})


def theorem_residual(surface: NfzSurface, field, pattern, loss: BoundedPowerLaw, power: float,
                     outer=math.inf) -> float:
    """Largest |P lambda l(r) g - mu| / mu over nodes strictly between the clamps."""
    mu = surface.params["mu"]
    t, p = surface.grid.mesh()
    r = surface.radii
    cap = outer.radii_on(surface.grid) if hasattr(outer, "radii_on") else np.full(r.shape, float(outer))
    free = (r > 1.0) & (r < cap)
    if not np.any(free):
        return 0.0
    lam = field.density(t[free], p[free], r[free])
    lhs = power * lam * np.asarray(loss(r[free])) * pattern.gain(t[free], p[free])
    return float(np.max(np.abs(lhs - mu)) / mu)


def surface_volume(nfz: NfzSurface) -> float:
    return float(np.sum(nfz.grid.solid_weights * nfz.radii**3) / 3.0)


def dome_radius(volume: float) -> float:
    if volume < 0:
        raise ValueError("volume must be non-negative")
    return (3.0 * volume / (2.0 * math.pi)) ** (1.0 / 3.0)


def dome_of_volume(volume: float, grid: AngularGrid | None = None) -> NfzSurface:
    grid = grid or AngularGrid()
    r = dome_radius(volume)
    return NfzSurface(grid, np.full(grid.shape, r), "dome", {"radius": r, "max_radius": r},
                      lambda t, p, r=r: np.full(np.broadcast_shapes(np.shape(t), np.shape(p)), r))


def cylinder_radius(theta, radius: float, height: float):
    """Distance from the base center to an upright cylinder's boundary."""
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    with np.errstate(divide="ignore"):
        side = np.where(s > 0, radius / np.where(s > 0, s, 1.0), math.inf)
        top = np.where(c > 0, height / np.where(c > 0, c, 1.0), math.inf)
    return np.minimum(side, top)


def cylinder_grid(radius: float, height: float, grid: AngularGrid) -> AngularGrid:
    """``grid`` with an extra elevation break at the cylinder's rim."""
    rim = math.atan2(radius, height)
    # r**3 sin(theta) decays like theta**-2 above a thin cylinder's rim and
    # like (pi/2 - theta)**-3 below a flat one's: grade the panels geometrically
    breaks = [rim]
    t = 2.0 * rim
    while t < 0.5 * math.pi:
        breaks.append(t)
        t *= 2.0
    u = 2.0 * (0.5 * math.pi - rim)
    while u < 0.5 * math.pi:
        breaks.append(0.5 * math.pi - u)
        u *= 2.0
    return AngularGrid(grid.n_theta, grid.n_phi, (*grid.theta_breaks, *breaks), grid.phi_breaks)


def cylinder_surface(radius: float, height: float, grid: AngularGrid | None = None) -> NfzSurface:
    """Upright cylinder over the ground station, on ``grid`` refined at the rim.

    The boundary distance kinks where the side wall meets the lid, so that
    elevation becomes a panel edge of the surface's own grid.
    """
    grid = cylinder_grid(radius, height, grid or AngularGrid())
    t, _ = grid.mesh()

    def fn(theta, phi, radius=radius, height=height):
        return cylinder_radius(theta, radius, height) * np.ones(np.shape(phi))

    return NfzSurface(grid, cylinder_radius(t, radius, height), "cylinder",
                      {"radius": radius, "height": height, "max_radius": math.hypot(radius, height)}, fn)


def _cylinder_dims(volume: float, ratio: float) -> tuple[float, float]:
    radius = (volume / (math.pi * ratio)) ** (1.0 / 3.0)
    return radius, ratio * radius


def best_cylinder_of_volume(volume: float, field, pattern, loss: BoundedPowerLaw, power: float,
                            grid: AngularGrid, outer=math.inf, n_scan: int = 64,
                            ratio_range=(1e-2, 1e2)) -> NfzSurface:
    """Upright cylinder of the given volume that eliminates the most interference.

    The height/radius ratio is scanned on a log grid, then refined by
    golden-section search around the best scan point. Cylinders poking out of
    a finite outer radius are skipped.
    """
    if not volume > 0:
        raise ValueError("volume must be positive")
    r_max = float(outer) if np.isscalar(outer) else float(np.min(outer.radii_on(grid)))

    def score(log_ratio):
        radius, height = _cylinder_dims(volume, math.exp(log_ratio))
        if math.hypot(radius, height) > r_max:
            return -math.inf
        surf = cylinder_surface(radius, height, grid)
        return _Problem(field, pattern, loss, power, surf.grid).eliminated(surf.radii)

    xs = np.linspace(math.log(ratio_range[0]), math.log(ratio_range[1]), n_scan)
    scores = np.array([score(x) for x in xs])
    if not np.any(np.isfinite(scores)):
        raise ValueError("no cylinder of this volume fits inside the outer region")
    k = int(np.argmax(scores))
    best_x, best = xs[k], scores[k]
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, n_scan - 1)]
    x, fx = _golden_max(score, lo, hi)
    if fx > best:
        best_x, best = x, fx
    radius, height = _cylinder_dims(volume, math.exp(best_x))
    surf = cylinder_surface(radius, height, grid)
    surf.params.update({"ratio": height / radius, "eliminated": best,
                        "scan": [(float(math.exp(a)), float(b)) for a, b in zip(xs, scores)]})
    return surf


def _golden_max(f, lo, hi, tol=1e-8, maxiter=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (c, fc) if fc > fd else (d, fd)


def markov_tail_bound(expected: float, beta: float) -> float:
    """Upper bound on P(I >= beta) from the mean alone."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return min(1.0, expected / beta)


def optimal_nfz_of_volume(volume: float, field, pattern, loss: BoundedPowerLaw, power: float,
                          grid: AngularGrid, outer=math.inf, clamp_floor: str = "one") -> NfzSurface:
    """Optimal-shape surface whose volume equals ``volume``.

    Volume shrinks monotonically as the multiplier grows, so the multiplier
    is found by a log-scale root search; the eliminated interference of the
    result is the budget it would have been calibrated to.
    """
    prob = _Problem(field, pattern, loss, power, grid, outer, clamp_floor)
    mu_hi = prob.mu_max()
    v_floor = prob.volume(prob.radii(mu_hi * (1 + 1e-12)))
    v_top = prob.volume(prob.outer) if not np.any(np.isinf(prob.outer)) else math.inf
    if not v_floor < volume < v_top:
        raise ValueError(f"volume {volume:.6g} outside the attainable range ({v_floor:.6g}, {v_top:.6g})")
    mu_lo = 0.5 * mu_hi
    while prob.volume(prob.radii(mu_lo)) < volume:
        mu_lo *= 0.5
    root = optimize.brentq(
        lambda x: prob.volume(prob.radii(math.exp(x))) - volume,
        math.log(mu_lo), math.log(mu_hi), xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200,
    )
    mu = math.exp(root)
    surf = _surface_from_mu(prob, mu, {})
    e = prob.eliminated(surf.radii)
    surf.params.update({"a": e, "eliminated": e, "status": "optimal"})
    return surf


@dataclass(frozen=True)
class ShapeResult:
    shape: str
    volume: float
    eliminated: float
    surface: NfzSurface | None = None


def compare_shapes(volume: float, field, pattern, loss: BoundedPowerLaw, power: float,
                   grid: AngularGrid, outer=math.inf, clamp_floor: str = "one") -> list[ShapeResult]:
    """Eliminated interference of the optimal, dome and best-cylinder NFZs at one volume."""
    shapes = [
        ("optimal", optimal_nfz_of_volume(volume, field, pattern, loss, power, grid, outer, clamp_floor)),
        ("dome", dome_of_volume(volume, grid)),
        ("cylinder", best_cylinder_of_volume(volume, field, pattern, loss, power, grid, outer)),
    ]
    return [
        ShapeResult(name, surface_volume(s), _Problem(field, pattern, loss, power, s.grid).eliminated(s.radii), s)
        for name, s in shapes
    ]


def random_equal_volume_radii(volume: float, grid: AngularGrid, rng: np.random.Generator,
                              floor: float = 1.0, outer: float = math.inf, size: int = 1) -> np.ndarray:
    """Random radii arrays, each at least ``floor`` and of total ``volume``.

    The volume left over after the floor is spread over nodes with random
    exponential shares. Draws that would cross ``outer`` are redrawn.
    """
    w = grid.solid_weights
    base = float(np.sum(w) * floor**3 / 3.0)
    spare = volume - base
    if spare < 0:
        raise ValueError("volume below the floor volume")
    out = []
    while len(out) < size:
        e = rng.exponential(size=grid.shape)
        extra = e * spare / float(np.sum(w * e))
        r = np.cbrt(floor**3 + 3.0 * extra)
        if np.all(r <= outer):
            out.append(r)
    return np.stack(out)


def eliminated_for_radii(radii, field, pattern, loss: BoundedPowerLaw, power: float, grid: AngularGrid) -> float:
    return _Problem(field, pattern, loss, power, grid).eliminated(np.asarray(radii, dtype=float))


# -- CSV exchange -------------------------------------------------------------

def write_surface_csv(surface: NfzSurface, path, header: str = "", extra: dict | None = None) -> None:
    meta = {
        "provenance": surface.provenance,
        "grid": surface.grid.spec(),
        "params": {k: v for k, v in surface.params.items() if k != "scan"},
        **(extra or {}),
    }
    t, p = surface.grid.mesh()
    lines = []
    if header:
        lines.append(f"# {header}")
    lines.append("# meta: " + json.dumps(meta, sort_keys=True, default=_json_default))
    lines.append("theta_deg,phi_deg,r")
    for a, b, r in zip(np.degrees(t).ravel(), np.degrees(p).ravel(), surface.radii.ravel()):
        lines.append(f"{float(a)!r},{float(b)!r},{float(r)!r}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_surface_csv(path) -> NfzSurface:
    meta = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# meta:"):
                meta = json.loads(line[len("# meta:"):])
            elif line.startswith("#") or not line or line.startswith("theta_deg"):
                continue
            else:
                rows.append([float(x) for x in line.split(",")])
    if meta is None:
        raise ValueError(f"{path}: missing '# meta:' header line")
    grid = AngularGrid.from_spec(meta["grid"])
    arr = np.asarray(rows)
    if arr.shape[0] != grid.shape[0] * grid.shape[1]:
        raise ValueError(f"{path}: expected {grid.shape[0] * grid.shape[1]} rows, found {arr.shape[0]}")
    radii = arr[:, 2].reshape(grid.shape)
    return NfzSurface(grid, radii, meta.get("provenance", "custom"), meta.get("params", {}))


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)!r}")
