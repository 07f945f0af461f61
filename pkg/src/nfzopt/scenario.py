"""Scenario files: YAML with units spelled out in key names.

Lengths are in one scenario-wide unit (``units.length``); intensities are
drones per cubic unit of that length, frequencies MHz, powers linear.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError
from .field import Cell, HomogeneousField, PiecewiseField, banded_field
from .quadrature import AngularGrid, default_breaks
from .radio import BoundedPowerLaw, ConstantPattern, TabulatedPattern, UlaPattern
from .spectrum import EmissionMask, SpectrumPlan, average_emission_power, default_mask

BUNDLED = ("paper_fig_bcd", "paper_fig_f", "symmetric_smoke")

# outer radius chosen automatically leaves at most this tail fraction uncounted
AUTO_TAIL_FRACTION = 1e-4


def _get(d: dict, key: str, path: str, kind=float, default=...):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "required field missing")
        return default
    v = d[key]
    try:
        if kind is float:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        if kind is int:
            if isinstance(v, bool) or int(v) != v:
                raise TypeError
            return int(v)
        return kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}.{key}", f"expected {kind.__name__}, got {v!r}") from None


def _positive(v, path, strict=True):
    if (strict and not v > 0) or (not strict and not v >= 0) or not math.isfinite(v):
        raise ConfigError(path, f"must be {'positive' if strict else 'non-negative'}, got {v!r}")
    return v


def _section(d, key, path, required=True):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}", "required section missing")
        return None
    v = d[key]
    if not isinstance(v, dict):
        raise ConfigError(f"{path}.{key}", "expected a mapping")
    return v


def _check_keys(d, allowed, path):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown field")


@dataclass(frozen=True)
class Scenario:
    """Validated scenario. ``to_dict`` and ``from_dict`` round-trip exactly."""

    name: str
    antenna: dict
    alpha: float
    intensity: dict
    outer_radius: float | str
    budget: dict
    spectrum: dict | None = None
    avg_power: float | None = None
    gs_position: tuple = (0.0, 0.0, 0.0)
    units: str = "m"
    grid: tuple = (128, 256)
    clamp_floor: str = "one"
    seed: int = 0
    compare_volumes: tuple = ()
    sweep_widths: tuple = ()
    replications: int = 10000
    base_dir: str = field(default=".", compare=False)

    # -- parsing --------------------------------------------------------------
    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "Scenario":
        if not isinstance(raw, dict):
            raise ConfigError("scenario", "top level must be a mapping")
        _check_keys(raw, {"name", "units", "seed", "ground_station", "antenna", "path_loss",
                          "intensity", "spectrum", "power", "region", "budget", "grid", "nfz",
                          "compare", "sweep", "validate"}, "scenario")
        p = "scenario"
        name = str(raw.get("name", "unnamed"))
        units = _section(raw, "units", p, required=False) or {}
        _check_keys(units, {"length"}, f"{p}.units")
        length = str(units.get("length", "m"))
        seed = _get(raw, "seed", p, int, 0)
        if not 0 <= seed < 2**64:
            raise ConfigError(f"{p}.seed", "must fit in an unsigned 64-bit integer")

        gs = _section(raw, "ground_station", p, required=False) or {}
        _check_keys(gs, {"x_unit", "y_unit", "z_unit"}, f"{p}.ground_station")
        gs_pos = tuple(_get(gs, k, f"{p}.ground_station", float, 0.0) for k in ("x_unit", "y_unit", "z_unit"))

        antenna = _parse_antenna(_section(raw, "antenna", p), f"{p}.antenna", base_dir)
        pl = _section(raw, "path_loss", p)
        _check_keys(pl, {"alpha"}, f"{p}.path_loss")
        alpha = _positive(_get(pl, "alpha", f"{p}.path_loss"), f"{p}.path_loss.alpha")
        intensity = _parse_intensity(_section(raw, "intensity", p), f"{p}.intensity")

        spectrum = _section(raw, "spectrum", p, required=False)
        power = _section(raw, "power", p, required=False)
        if (spectrum is None) == (power is None):
            raise ConfigError(f"{p}.spectrum", "give exactly one of 'spectrum' or 'power'")
        avg_power = None
        if spectrum is not None:
            spectrum = _parse_spectrum(spectrum, f"{p}.spectrum", base_dir)
        else:
            _check_keys(power, {"avg_power_linear"}, f"{p}.power")
            avg_power = _positive(_get(power, "avg_power_linear", f"{p}.power"), f"{p}.power.avg_power_linear", strict=False)

        region = _section(raw, "region", p)
        _check_keys(region, {"outer_radius_unit"}, f"{p}.region")
        outer = region.get("outer_radius_unit")
        if outer == "auto":
            if alpha <= 3:
                raise ConfigError(f"{p}.region.outer_radius_unit",
                                  "'auto' needs alpha > 3; the interference tail diverges otherwise")
        else:
            outer = _positive(_get(region, "outer_radius_unit", f"{p}.region"), f"{p}.region.outer_radius_unit")

        budget = _parse_budget(_section(raw, "budget", p), f"{p}.budget")

        g = _section(raw, "grid", p, required=False) or {}
        _check_keys(g, {"n_theta", "n_phi"}, f"{p}.grid")
        grid = (_get(g, "n_theta", f"{p}.grid", int, 128), _get(g, "n_phi", f"{p}.grid", int, 256))
        if min(grid) < 1:
            raise ConfigError(f"{p}.grid", "node counts must be positive")

        nfz = _section(raw, "nfz", p, required=False) or {}
        _check_keys(nfz, {"clamp_floor"}, f"{p}.nfz")
        clamp = str(nfz.get("clamp_floor", "one"))
        if clamp not in ("one", "zero"):
            raise ConfigError(f"{p}.nfz.clamp_floor", "must be 'one' or 'zero'")

        cmp_ = _section(raw, "compare", p, required=False) or {}
        _check_keys(cmp_, {"volumes_unit3"}, f"{p}.compare")
        volumes = tuple(_positive(float(v), f"{p}.compare.volumes_unit3[{i}]")
                        for i, v in enumerate(cmp_.get("volumes_unit3", [])))
        sw = _section(raw, "sweep", p, required=False) or {}
        _check_keys(sw, {"w_mhz"}, f"{p}.sweep")
        widths = tuple(_positive(float(v), f"{p}.sweep.w_mhz[{i}]", strict=False)
                       for i, v in enumerate(sw.get("w_mhz", [])))
        val = _section(raw, "validate", p, required=False) or {}
        _check_keys(val, {"replications"}, f"{p}.validate")
        reps = _get(val, "replications", f"{p}.validate", int, 10000)
        if reps < 100:
            raise ConfigError(f"{p}.validate.replications", "need at least 100 replications")

        return cls(name=name, antenna=antenna, alpha=alpha, intensity=intensity, outer_radius=outer,
                   budget=budget, spectrum=spectrum, avg_power=avg_power, gs_position=gs_pos,
                   units=length, grid=grid, clamp_floor=clamp, seed=seed, compare_volumes=volumes,
                   sweep_widths=widths, replications=reps, base_dir=str(base_dir))

    @classmethod
    def load(cls, path_or_name) -> "Scenario":
        path = Path(path_or_name)
        if not path.exists() and str(path_or_name) in BUNDLED:
            text = resources.files("nfzopt.scenarios").joinpath(f"{path_or_name}.yaml").read_text()
            base = "."
        else:
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigError("scenario", f"cannot read {path}: {exc.strerror}") from None
            base = str(path.parent)
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("scenario", f"not valid YAML: {exc}") from None
        return cls.from_dict(raw, base)

    # -- serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "units": {"length": self.units},
            "seed": self.seed,
            "ground_station": dict(zip(("x_unit", "y_unit", "z_unit"), self.gs_position)),
            "antenna": self.antenna,
            "path_loss": {"alpha": self.alpha},
            "intensity": self.intensity,
            "region": {"outer_radius_unit": self.outer_radius},
            "budget": self.budget,
            "grid": {"n_theta": self.grid[0], "n_phi": self.grid[1]},
            "nfz": {"clamp_floor": self.clamp_floor},
            "validate": {"replications": self.replications},
        }
        if self.spectrum is not None:
            out["spectrum"] = self.spectrum
        else:
            out["power"] = {"avg_power_linear": self.avg_power}
        if self.compare_volumes:
            out["compare"] = {"volumes_unit3": list(self.compare_volumes)}
        if self.sweep_widths:
            out["sweep"] = {"w_mhz": list(self.sweep_widths)}
        return json.loads(json.dumps(out))

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    # -- model objects ----------------------------------------------------------
    def pattern(self):
        a = self.antenna
        if a["kind"] == "ula":
            return UlaPattern(a["elements"], a["spacing_ratio"])
        if a["kind"] == "constant":
            return ConstantPattern(a["gain_linear"])
        return TabulatedPattern.from_csv(Path(self.base_dir) / a["file"])

    def loss(self) -> BoundedPowerLaw:
        return BoundedPowerLaw(self.alpha)

    def intensity_field(self):
        f = self.intensity
        if f["kind"] == "homogeneous":
            return HomogeneousField(f["lambda_per_unit3"])
        if f["kind"] == "banded":
            return banded_field()
        return PiecewiseField(
            tuple(Cell.from_degrees(c["theta_deg"], c["phi_deg"], c["lambda_per_unit3"]) for c in f["cells"]),
            default=f["default_lambda_per_unit3"],
        )

    def plan(self, guard_width: float | None = None) -> SpectrumPlan | None:
        s = self.spectrum
        if s is None:
            return None
        m = s["mask"]
        if m == "default":
            mask = default_mask()
        elif "file" in m:
            mask = EmissionMask.from_csv(Path(self.base_dir) / m["file"])
        elif "constant_linear" in m:
            mask = EmissionMask.constant(m["constant_linear"])
        else:
            mask = EmissionMask(tuple(b[0] for b in m["breakpoints"]),
                                tuple(-math.inf if b[1] == "-inf" else b[1] for b in m["breakpoints"]))
        return SpectrumPlan(
            sat_bandwidth=s["sat_bandwidth_mhz"], sat_center=s["sat_center_mhz"],
            drone_bandwidth=s["drone_bandwidth_mhz"], blocks=s["blocks"],
            guard_width=s["w_mhz"] if guard_width is None else guard_width,
            tx_power=s["tx_power_linear"], mask=mask,
        )

    def power(self, guard_width: float | None = None) -> float:
        if self.spectrum is None:
            return float(self.avg_power)
        return average_emission_power(self.plan(guard_width))

    def outer(self) -> float:
        if self.outer_radius != "auto":
            return float(self.outer_radius)
        # tail beyond R of int rho**(2 - alpha) relative to the whole ray integral
        k = self.alpha - 3.0
        whole = 1.0 / 3.0 + 1.0 / k
        return (AUTO_TAIL_FRACTION * k * whole) ** (-1.0 / k)

    def angular_grid(self, n_theta=None, n_phi=None) -> AngularGrid:
        tb, pb = default_breaks(self.pattern(), self.intensity_field())
        return AngularGrid(n_theta or self.grid[0], n_phi or self.grid[1], tb, pb)


def _parse_antenna(a, path, base_dir):
    kind = a.get("kind")
    if kind == "ula":
        _check_keys(a, {"kind", "elements", "spacing_ratio"}, path)
        m = _get(a, "elements", path, int)
        if m < 1:
            raise ConfigError(f"{path}.elements", "must be >= 1")
        s = _positive(_get(a, "spacing_ratio", path), f"{path}.spacing_ratio")
        return {"kind": "ula", "elements": m, "spacing_ratio": s}
    if kind == "constant":
        _check_keys(a, {"kind", "gain_linear"}, path)
        return {"kind": "constant", "gain_linear": _positive(_get(a, "gain_linear", path), f"{path}.gain_linear", False)}
    if kind == "tabulated":
        _check_keys(a, {"kind", "file"}, path)
        f = str(_get(a, "file", path, str))
        try:
            TabulatedPattern.from_csv(Path(base_dir) / f)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{path}.file", str(exc)) from None
        return {"kind": "tabulated", "file": f}
    raise ConfigError(f"{path}.kind", f"expected 'ula', 'constant' or 'tabulated', got {kind!r}")


def _parse_intensity(f, path):
    kind = f.get("kind")
    if kind == "homogeneous":
        _check_keys(f, {"kind", "lambda_per_unit3"}, path)
        return {"kind": kind, "lambda_per_unit3": _positive(_get(f, "lambda_per_unit3", path), f"{path}.lambda_per_unit3", False)}
    if kind == "banded":
        _check_keys(f, {"kind"}, path)
        return {"kind": kind}
    if kind == "piecewise":
        _check_keys(f, {"kind", "cells", "default_lambda_per_unit3"}, path)
        cells = []
        raw_cells = f.get("cells", [])
        if not isinstance(raw_cells, list):
            raise ConfigError(f"{path}.cells", "expected a list")
        for i, c in enumerate(raw_cells):
            cp = f"{path}.cells[{i}]"
            if not isinstance(c, dict):
                raise ConfigError(cp, "expected a mapping")
            _check_keys(c, {"theta_deg", "phi_deg", "lambda_per_unit3"}, cp)
            try:
                t = [float(x) for x in c["theta_deg"]]
                ph = [float(x) for x in c["phi_deg"]]
                lam = float(c["lambda_per_unit3"])
                Cell.from_degrees(t, ph, lam)
            except KeyError as exc:
                raise ConfigError(f"{cp}.{exc.args[0]}", "required field missing") from None
            except (TypeError, ValueError) as exc:
                raise ConfigError(cp, str(exc)) from None
            cells.append({"theta_deg": t, "phi_deg": ph, "lambda_per_unit3": lam})
        default = _positive(_get(f, "default_lambda_per_unit3", path, float, 0.0), f"{path}.default_lambda_per_unit3", False)
        try:
            PiecewiseField(tuple(Cell.from_degrees(c["theta_deg"], c["phi_deg"], c["lambda_per_unit3"]) for c in cells), default)
        except ValueError as exc:
            raise ConfigError(f"{path}.cells", str(exc)) from None
        return {"kind": kind, "cells": cells, "default_lambda_per_unit3": default}
    raise ConfigError(f"{path}.kind", f"expected 'homogeneous', 'piecewise' or 'banded', got {kind!r}")


def _parse_spectrum(s, path, base_dir):
    _check_keys(s, {"sat_bandwidth_mhz", "sat_center_mhz", "drone_bandwidth_mhz", "blocks", "w_mhz",
                    "tx_power_linear", "mask"}, path)
    out = {
        "sat_bandwidth_mhz": _positive(_get(s, "sat_bandwidth_mhz", path), f"{path}.sat_bandwidth_mhz"),
        "sat_center_mhz": _get(s, "sat_center_mhz", path, float, 0.0),
        "drone_bandwidth_mhz": _positive(_get(s, "drone_bandwidth_mhz", path), f"{path}.drone_bandwidth_mhz"),
        "blocks": _get(s, "blocks", path, int),
        "w_mhz": _positive(_get(s, "w_mhz", path, float, 0.0), f"{path}.w_mhz", False),
        "tx_power_linear": _positive(_get(s, "tx_power_linear", path, float, 1.0), f"{path}.tx_power_linear", False),
    }
    if out["blocks"] < 1:
        raise ConfigError(f"{path}.blocks", "must be >= 1")
    m = s.get("mask", "default")
    mp = f"{path}.mask"
    if m == "default":
        out["mask"] = "default"
    elif isinstance(m, dict) and "file" in m:
        _check_keys(m, {"file"}, mp)
        try:
            EmissionMask.from_csv(Path(base_dir) / m["file"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{mp}.file", str(exc)) from None
        out["mask"] = {"file": str(m["file"])}
    elif isinstance(m, dict) and "constant_linear" in m:
        _check_keys(m, {"constant_linear"}, mp)
        out["mask"] = {"constant_linear": _positive(_get(m, "constant_linear", mp), f"{mp}.constant_linear", False)}
    elif isinstance(m, dict) and "breakpoints" in m:
        _check_keys(m, {"breakpoints"}, mp)
        bps = []
        for i, b in enumerate(m["breakpoints"]):
            try:
                off = float(b[0])
                lvl = "-inf" if str(b[1]).strip().lower() in ("-inf", "-.inf") else float(b[1])
            except (TypeError, ValueError, IndexError):
                raise ConfigError(f"{mp}.breakpoints[{i}]", "expected [offset_mhz, level_db]") from None
            bps.append([off, lvl])
        try:
            EmissionMask(tuple(b[0] for b in bps), tuple(-math.inf if b[1] == "-inf" else b[1] for b in bps))
        except ValueError as exc:
            raise ConfigError(f"{mp}.breakpoints", str(exc)) from None
        out["mask"] = {"breakpoints": bps}
    else:
        raise ConfigError(mp, "expected 'default' or a mapping with file, constant_linear or breakpoints")
    return out


def _parse_budget(b, path):
    modes = [k for k in ("a_prime_linear", "a_prime_fraction", "target_volume_unit3") if k in b]
    _check_keys(b, {"a_prime_linear", "a_prime_fraction", "target_volume_unit3"}, path)
    if len(modes) != 1:
        raise ConfigError(path, "set exactly one of a_prime_linear, a_prime_fraction, target_volume_unit3")
    k = modes[0]
    v = _positive(_get(b, k, path), f"{path}.{k}", strict=(k == "target_volume_unit3"))
    if k == "a_prime_fraction" and v > 1:
        raise ConfigError(f"{path}.{k}", "fraction must lie in [0, 1]")
    return {k: v}
