"""Single runs and multi-level studies driven by a :class:`RunConfig`."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .diagnostics import (
    ConsistencyMonitor,
    ConsistencyReport,
    CosineBumpTestFunction,
    DiagnosticsMonitor,
    DiagnosticsRecord,
    EocTable,
    cesaro_differences,
    consistency_errors,
    error_norms,
    probe_p1,
)
from .initial import initial_profile, interpolate_initial_condition
from .mesh import FeOperators, Mesh, assemble_fe_operators, build_uniform_periodic_mesh
from .models import ModelSpec, check_admissible, conserved_from_primitive
from .riemann import periodic_sod_reference
from .timestepping import Trajectory, integrate


class StudyError(ValueError):
    pass


@dataclass(eq=False)
class RunResult:
    config: RunConfig
    mesh: Mesh
    ops: FeOperators
    model: ModelSpec
    trajectory: Trajectory
    record: DiagnosticsRecord


def build_discretization(cfg: RunConfig):
    mesh = build_uniform_periodic_mesh(cfg.mesh.dim, cfg.mesh.cells, cfg.mesh.extent)
    return mesh, assemble_fe_operators(mesh), cfg.model_spec()


def run_simulation(cfg: RunConfig, monitors=()) -> RunResult:
    """Interpolate the initial condition and integrate to t_end with diagnostics on."""
    mesh, ops, model = build_discretization(cfg)
    params = cfg.admissibility_params()
    u0 = interpolate_initial_condition(mesh, model, cfg.initial.name, cfg.initial.params, params, cfg.seed)
    diag = DiagnosticsMonitor(ops, model, params, cfg.output.entropy_offset)
    traj = integrate(u0, ops, model, cfg.limiter_config(), cfg.integrator_config(), params, [diag, *monitors])
    traj.diagnostics = diag.record
    return RunResult(cfg, mesh, ops, model, traj, diag.record)


def exact_reference(cfg: RunConfig, t: float):
    """Exact solution at time ``t`` as a callable of points, where one is known."""
    model = cfg.model_spec()
    extent = np.asarray(cfg.mesh.extent, dtype=float)
    u0 = initial_profile(model, cfg.initial.name, cfg.initial.params, extent, cfg.seed)
    if cfg.initial.name == "constant":
        return u0
    if model.kind == "advection":
        a = np.asarray(model.velocity)
        return lambda x: u0(np.mod(np.atleast_2d(x) - a * t, extent))
    if model.kind == "euler" and cfg.initial.name == "sod" and model.dim == 1:
        p = {"left": [1.0, 0.0, 1.0], "right": [0.125, 0.0, 0.1], "x0": None, **cfg.initial.params}
        x0 = 0.5 * extent[0] if p["x0"] is None else p["x0"]

        def ref(x):
            rho, vel, prs = periodic_sod_reference(
                np.atleast_2d(x)[:, 0], t, model.gamma, p["left"], p["right"], x0, extent[0]
            )
            return conserved_from_primitive(model, rho, vel[:, None], prs)

        return ref
    raise StudyError(f"no exact reference for {model.kind} with initial condition {cfg.initial.name!r}")


def _levels(cfg: RunConfig, levels):
    levels = list(levels if levels else cfg.study.levels)
    if len(levels) < 2:
        raise StudyError("a study needs at least two levels")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise StudyError("levels must be strictly increasing cell counts")
    return levels


@dataclass(eq=False)
class ConvergenceResult:
    table: EocTable
    runs: list


def convergence_study(cfg: RunConfig, levels=None, component: int = 0) -> ConvergenceResult:
    """Errors of one component against the exact solution at t_end, per level."""
    levels = _levels(cfg, levels)
    ref = exact_reference(cfg, cfg.integrator.t_end)
    h, l1, l2, linf, runs = [], [], [], [], []
    for n in levels:
        res = run_simulation(cfg.with_cells(n))
        err = error_norms(res.mesh, res.trajectory.final.values[:, component], lambda x: ref(x)[:, component])
        h.append(res.mesh.h_max)
        l1.append(float(err.l1[0]))
        l2.append(float(err.l2[0]))
        linf.append(float(err.linf[0]))
        runs.append(res)
    return ConvergenceResult(EocTable(h, l1, l2, linf), runs)


def consistency_study(cfg: RunConfig, levels=None, alpha_rule: str | None = None) -> ConsistencyReport:
    """Time-integrated R1, R2, R3 against the built-in cosine test function."""
    levels = _levels(cfg, levels)
    rule = alpha_rule or cfg.study.alpha_rule
    h, r1, r2, r3 = [], [], [], []
    for n in levels:
        level_cfg = cfg.with_cells(n)
        mesh, ops, model = build_discretization(level_cfg)
        if rule == "one":
            level_cfg = level_cfg.with_limiter(alpha_override=1.0)
        elif rule == "one_minus_h":
            level_cfg = level_cfg.with_limiter(alpha_override=1.0 - mesh.h_max)
        elif rule != "config":
            raise StudyError(f"unknown alpha rule {rule!r}")
        phi = CosineBumpTestFunction(cfg.integrator.t_end, cfg.mesh.extent)
        mon = ConsistencyMonitor(mesh, ops, model, phi)
        run_simulation(level_cfg, monitors=[mon])
        a, b, c = consistency_errors(mon)
        h.append(mesh.h_max)
        r1.append(a)
        r2.append(b)
        r3.append(c)
    return ConsistencyReport(h, r1, r2, r3)


def probe_grid(extent, points_per_axis: int) -> np.ndarray:
    """Cell-centred uniform grid covering the periodic box."""
    axes = [(np.arange(points_per_axis) + 0.5) * L / points_per_axis for L in extent]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


@dataclass(eq=False)
class CesaroResult:
    differences: list
    probes: np.ndarray
    fields: list


def cesaro_study(cfg: RunConfig, levels=None, probe_points: int | None = None, component: int = 0) -> CesaroResult:
    """Probe t_end snapshots of every level on one grid and form the Cesaro differences."""
    levels = _levels(cfg, levels)
    pts = probe_grid(cfg.mesh.extent, probe_points or cfg.study.probe_points)
    fields = []
    for n in levels:
        res = run_simulation(cfg.with_cells(n))
        fields.append(probe_p1(res.mesh, res.trajectory.final.values, pts)[:, component])
    volume = float(np.prod(cfg.mesh.extent))
    return CesaroResult(cesaro_differences(fields, volume), pts, fields)


# -- assertion checks --------------------------------------------------------

@dataclass(frozen=True)
class AssertionOutcome:
    name: str
    passed: bool
    detail: str


def check_run_assertions(res: RunResult) -> list[AssertionOutcome]:
    a = res.config.assertions
    rec = res.record
    out = []
    if a.conservation_tol is not None:
        drift = float(np.max(rec.conservation_drift()))
        out.append(AssertionOutcome("conservation", drift <= a.conservation_tol, f"max relative drift {drift:.3e}"))
    if a.bounds_tol is not None:
        lo, hi = res.config.admissibility.scalar_bounds
        over = max(max(lo - np.min(rec.minima), 0.0), max(np.max(rec.maxima) - hi, 0.0))
        out.append(AssertionOutcome("bounds", over <= a.bounds_tol, f"max bound violation {over:.3e}"))
    if a.positivity:
        bad = sum(len(check_admissible(res.model, s.values, res.config.admissibility_params()))
                  for s in res.trajectory.snapshots)
        out.append(AssertionOutcome("positivity", bad == 0, f"{bad} inadmissible snapshot values"))
    if a.entropy_increase_tol is not None:
        inc = rec.entropy_increments()
        worst = float(inc.max()) if inc.size else 0.0
        limit = a.entropy_increase_tol * abs(rec.total_entropy[0])
        out.append(AssertionOutcome("entropy", worst <= limit, f"max increment {worst:.3e} (limit {limit:.3e})"))
    return out


def check_convergence_assertions(cfg: RunConfig, table: EocTable) -> list[AssertionOutcome]:
    a = cfg.assertions
    out = []
    eocs = [e for e in table.eoc_l1 if not math.isnan(e)]
    if a.eoc_min is not None:
        out.append(AssertionOutcome("eoc_min", bool(eocs) and min(eocs) >= a.eoc_min, f"L1 EOCs {eocs}"))
    if a.eoc_max is not None:
        out.append(AssertionOutcome("eoc_max", bool(eocs) and max(eocs) <= a.eoc_max, f"L1 EOCs {eocs}"))
    if a.error_decreasing:
        ok = all(b < c for c, b in zip(table.l1, table.l1[1:]))
        out.append(AssertionOutcome("error_decreasing", ok, f"L1 errors {table.l1}"))
    return out


def check_consistency_assertions(cfg: RunConfig, report: ConsistencyReport) -> list[AssertionOutcome]:
    out = []
    if cfg.assertions.slope_min:
        slopes = report.slopes()
        for (name, s), lim in zip(slopes.items(), cfg.assertions.slope_min):
            out.append(AssertionOutcome(f"slope_{name}", s >= lim, f"slope {s:.3f} (min {lim})"))
    return out


def check_cesaro_assertions(cfg: RunConfig, diffs) -> list[AssertionOutcome]:
    if not cfg.assertions.cesaro_decreasing:
        return []
    ok = all(b < a for a, b in zip(diffs, diffs[1:]))
    return [AssertionOutcome("cesaro_decreasing", ok, f"differences {diffs}")]
