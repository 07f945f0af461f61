"""Command-line front end: ``nfzopt <subcommand> --scenario FILE --out DIR``.

Every output is CSV whose first line is a comment carrying the tool version
and the digest of the effective scenario. Exit statuses: 0 success, 2 config
error, 3 infeasible budget, 4 validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapabilityError, ConfigError, InfeasibleBudgetError
from .field import HemisphericalRegion, expected_interference, interference_variance
from .montecarlo import replication_streams, run_replications, sample_ppp, write_points_csv
from .nfz import (
    Budget,
    NfzSurface,
    best_cylinder_of_volume,
    build_optimal_nfz,
    compare_shapes,
    dome_of_volume,
    optimal_nfz_of_volume,
    surface_volume,
    theorem_residual,
    write_surface_csv,
)
from .scenario import Scenario

log = logging.getLogger("nfzopt")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_VALIDATION = 0, 2, 3, 4
Z_LIMIT = 4.0


class Context:
    """Scenario plus the model objects every subcommand needs."""

    def __init__(self, scenario: Scenario, out: Path, threads: int):
        self.sc = scenario
        self.out = out
        self.threads = threads
        self.pattern = scenario.pattern()
        self.field = scenario.intensity_field()
        self.loss = scenario.loss()
        self.grid = scenario.angular_grid()
        self.outer = scenario.outer()
        self.header = f"nfzopt {__version__} scenario={scenario.digest()} name={scenario.name}"

    def args(self, power):
        return self.field, self.pattern, self.loss, power, self.grid

    def total(self, power: float) -> float:
        return expected_interference(HemisphericalRegion(self.outer), *self.args(power))

    def a_prime(self, base_power: float) -> float:
        b = self.sc.budget
        if "a_prime_linear" in b:
            return b["a_prime_linear"]
        if "a_prime_fraction" in b:
            return b["a_prime_fraction"] * self.total(base_power)
        raise ConfigError("scenario.budget", "this subcommand needs a budget, not a target volume")

    def optimal(self, power: float, a_prime: float | None = None) -> NfzSurface:
        b = self.sc.budget
        if "target_volume_unit3" in b and a_prime is None:
            try:
                return optimal_nfz_of_volume(b["target_volume_unit3"], *self.args(power), self.outer,
                                             self.sc.clamp_floor)
            except ValueError as exc:
                raise ConfigError("scenario.budget.target_volume_unit3", str(exc)) from None
        if a_prime is None:
            a_prime = self.a_prime(power)
        budget = Budget.from_cap(self.total(power), a_prime)
        return build_optimal_nfz(budget, *self.args(power), self.outer, self.sc.clamp_floor)

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        return self.out / name

    def write_rows(self, name: str, columns, rows) -> Path:
        lines = [f"# {self.header}", ",".join(columns)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        p = self.path(name)
        p.write_text("\n".join(lines) + "\n")
        return p


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _grid_arg(text: str):
    try:
        a, b = text.lower().split("x")
        n_theta, n_phi = int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError("expected <n_theta>x<n_phi>, e.g. 128x256") from None
    if n_theta < 1 or n_phi < 1:
        raise argparse.ArgumentTypeError("node counts must be positive")
    return n_theta, n_phi


def _threads_arg(text: str) -> int:
    if text == "auto":
        return os.cpu_count() or 1
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1 or 'auto'")
    return n


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


# -- subcommands ----------------------------------------------------------------

def cmd_optimize(ctx: Context, args) -> int:
    power = ctx.sc.power()
    surf = ctx.optimal(power)
    e_a = ctx.total(power)
    e_b = expected_interference(HemisphericalRegion(surf), *ctx.args(power))
    mu = surf.params.get("mu", math.inf)
    resid = theorem_residual(surf, ctx.field, ctx.pattern, ctx.loss, power, ctx.outer) if math.isfinite(mu) else 0.0
    write_surface_csv(surf, ctx.path("surface.csv"), ctx.header)
    ctx.write_rows("summary.csv", ["key", "value"], [
        ("status", surf.params.get("status", "optimal")),
        ("mu", mu),
        ("avg_power", power),
        ("expected_total", e_a),
        ("required_reduction", surf.params.get("a", e_b)),
        ("eliminated", e_b),
        ("volume", surface_volume(surf)),
        ("residual_max", resid),
        ("iterations", surf.params.get("iterations", 0)),
    ])
    return EXIT_OK


def cmd_compare(ctx: Context, args) -> int:
    volumes = args.volumes or list(ctx.sc.compare_volumes)
    if not volumes:
        raise ConfigError("scenario.compare.volumes_unit3", "no volumes given (use --volumes)")
    power = ctx.sc.power()
    rows = []
    for v in volumes:
        try:
            results = compare_shapes(v, *ctx.args(power), ctx.outer, ctx.sc.clamp_floor)
        except ValueError as exc:
            raise ConfigError("scenario.compare.volumes_unit3", str(exc)) from None
        rows += [(r.shape, r.volume, r.eliminated) for r in results]
    ctx.write_rows("comparison.csv", ["shape", "volume", "eliminated_interference"], rows)
    return EXIT_OK


def sweep_rows(ctx: Context, widths):
    if ctx.sc.spectrum is None:
        raise ConfigError("scenario.spectrum", "the guard-band sweep needs a spectrum plan")
    a_prime = ctx.a_prime(ctx.sc.power())
    rows = []
    for w in widths:
        power = ctx.sc.power(w)
        surf = ctx.optimal(power, a_prime) if power > 0 else None
        rows.append((float(w), power, surface_volume(surf) if surf is not None else 0.0))
    return rows


def cmd_sweep_guard(ctx: Context, args) -> int:
    widths = args.widths or list(ctx.sc.sweep_widths) or list(range(8))
    ctx.write_rows("sweep.csv", ["w_mhz", "P", "volume"], sweep_rows(ctx, widths))
    return EXIT_OK


def validation_record(ctx: Context, n: int, seed: int):
    power = ctx.sc.power()
    surf = ctx.optimal(power)
    region = HemisphericalRegion(outer=ctx.outer, inner=surf)
    analytic = expected_interference(region, *ctx.args(power))
    variance = interference_variance(region, *ctx.args(power))
    mc = run_replications(region, ctx.field, ctx.pattern, ctx.loss, power, n, seed, ctx.threads)
    z = mc.zscore(analytic)
    return region, [
        ("replications", n),
        ("seed", seed),
        ("sample_mean", mc.mean),
        ("sample_std", mc.std),
        ("std_error", mc.stderr),
        ("analytic_mean", analytic),
        ("analytic_std_error", math.sqrt(variance / n)),
        ("z", z),
        ("passed", abs(z) <= Z_LIMIT),
    ]


def cmd_validate(ctx: Context, args) -> int:
    n = args.replications or ctx.sc.replications
    if n < 100:
        raise ConfigError("--replications", "need at least 100 replications")
    region, rows = validation_record(ctx, n, ctx.sc.seed)
    ctx.write_rows("validation.csv", ["key", "value"], rows)
    if args.export_points:
        pts = sample_ppp(region, ctx.field, replication_streams(ctx.sc.seed, 1)[0])
        write_points_csv(pts + np.asarray(ctx.sc.gs_position), ctx.path("points.csv"))
    return EXIT_OK if dict(rows)["passed"] else EXIT_VALIDATION


def cmd_export_surface(ctx: Context, args) -> int:
    power = ctx.sc.power()
    if args.shape == "optimal":
        surf = ctx.optimal(power)
    else:
        volume = args.volume
        if volume is None:
            volume = surface_volume(ctx.optimal(power))
        if args.shape == "dome":
            surf = dome_of_volume(volume, ctx.grid)
        else:
            surf = best_cylinder_of_volume(volume, *ctx.args(power), ctx.outer)
    write_surface_csv(surf, ctx.path(f"surface_{args.shape}.csv"), ctx.header)
    return EXIT_OK


COMMANDS = {
    "optimize": cmd_optimize,
    "compare": cmd_compare,
    "sweep-guard": cmd_sweep_guard,
    "validate": cmd_validate,
    "export-surface": cmd_export_surface,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True,
                        help="scenario YAML file or bundled name (paper_fig_bcd, paper_fig_f, symmetric_smoke)")
    common.add_argument("--out", default=".", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--grid", type=_grid_arg, help="angular grid as <n_theta>x<n_phi>")
    common.add_argument("--threads", type=_threads_arg, default=1, help="worker threads or 'auto'")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nfzopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nfzopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("optimize", parents=[common], help="build the minimum-volume NFZ for the budget")
    p = sub.add_parser("compare", parents=[common], help="optimal vs dome vs cylinder at equal volumes")
    p.add_argument("--volumes", type=_floats, help="comma-separated volumes")
    p = sub.add_parser("sweep-guard", parents=[common], help="NFZ volume against guard-band width")
    p.add_argument("--widths", type=_floats, help="comma-separated guard widths in MHz")
    p = sub.add_parser("validate", parents=[common], help="Monte Carlo check of the analytic mean")
    p.add_argument("--replications", type=int)
    p.add_argument("--export-points", action="store_true", help="also write one drone draw as points.csv")
    p = sub.add_parser("export-surface", parents=[common], help="write one NFZ shape as CSV")
    p.add_argument("--shape", choices=["optimal", "dome", "cylinder"], default="optimal")
    p.add_argument("--volume", type=float, help="volume for dome/cylinder (default: optimal's)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        sc = Scenario.load(args.scenario)
        overrides = {}
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed", "must fit in an unsigned 64-bit integer")
            overrides["seed"] = args.seed
        if args.grid is not None:
            overrides["grid"] = args.grid
        if overrides:
            sc = dataclasses.replace(sc, **overrides)
        ctx = Context(sc, args.out, args.threads)
        return COMMANDS[args.command](ctx, args)
    except ConfigError as exc:
        return _fail(args, EXIT_CONFIG, "config", str(exc), field=exc.path)
    except InfeasibleBudgetError as exc:
        return _fail(args, EXIT_INFEASIBLE, "infeasible_budget", str(exc))
    except CapabilityError as exc:
        return _fail(args, EXIT_CONFIG, "capability", str(exc))


def _fail(args, status: int, kind: str, message: str, **extra) -> int:
    record = {"error": kind, "message": message, "exit_status": status, **extra}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
