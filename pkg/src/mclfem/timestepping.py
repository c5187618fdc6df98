"""Explicit SSP Runge-Kutta integration with the CFL restriction dt * a_i(u) <= m_i."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mesh import FeOperators
from .models import AdmissibilityParams, ModelSpec, check_admissible
from .scheme import LimiterConfig, SemiDiscreteOperator

METHODS = ("forward_euler", "ssp_rk2", "ssp_rk3")

# Shu-Osher form: stage k computes  a*u0 + b*(w + dt*L(w))
_SHU_OSHER = {
    "forward_euler": ((0.0, 1.0),),
    "ssp_rk2": ((0.0, 1.0), (0.5, 0.5)),
    "ssp_rk3": ((0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0)),
}


class IntegrationError(RuntimeError):
    pass


class StageError(IntegrationError):
    """A forward Euler stage produced an inadmissible nodal state."""

    def __init__(self, violations, t):
        self.violations = violations
        first = violations[0]
        super().__init__(
            f"stage at t={t:.6g}: node {first.node} {first.quantity}={first.value!r} "
            f"violates bound {first.bound!r} ({len(violations)} violation(s))"
        )


class CflViolation(IntegrationError):
    def __init__(self, ratio):
        self.ratio = ratio
        super().__init__(f"stage CFL violated: max dt*a_i/m_i = {ratio:.6g}")


@dataclass(frozen=True)
class TimeIntegratorConfig:
    method: str = "ssp_rk3"
    cfl: float = 0.5
    t_end: float = 1.0
    max_steps: int = 1_000_000
    stage_admissibility_check: bool = True
    snapshot_times: tuple = ()
    max_dt: float = math.inf
    max_retries: int = 10

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        if times and (times[0] < 0 or times[-1] > self.t_end):
            raise ValueError("snapshot times must lie in [0, t_end]")
        object.__setattr__(self, "snapshot_times", times)


@dataclass(frozen=True, eq=False)
class StateField:
    values: np.ndarray
    time: float


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    dt: float
    cfl_bound: float
    retries: int


@dataclass(eq=False)
class Trajectory:
    snapshots: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    diagnostics: object = None

    @property
    def final(self) -> StateField:
        return self.snapshots[-1]

    def times(self) -> list[float]:
        return [s.time for s in self.snapshots]


def viscosity_sums(ops: FeOperators, d) -> np.ndarray:
    """a_i(u) = sum_{j != i} 2 d_ij."""
    d = np.asarray(d, dtype=float)
    return ops.gather(2.0 * d, 2.0 * d)


def compute_cfl_dt(ops: FeOperators, d, cfl: float, max_dt: float = math.inf) -> float:
    """dt = cfl * min_i m_i / a_i(u); ``max_dt`` when every d_ij vanishes."""
    a = viscosity_sums(ops, d)
    active = a > 0
    if not np.any(active):
        return max_dt
    return float(min(cfl * np.min(ops.lumped_mass[active] / a[active]), max_dt))


def stage_cfl_ratio(ops: FeOperators, d, dt: float) -> float:
    return float(np.max(dt * viscosity_sums(ops, d) / ops.lumped_mass))


def ssp_stage(u, dt: float, rhs: Callable, checker: Callable | None = None, t: float = 0.0):
    """Forward Euler stage u + dt * rhs(u); ``checker(u_new)`` returns violations."""
    new = u + dt * rhs(u)
    if checker is not None:
        violations = checker(new)
        if violations:
            raise StageError(violations, t)
    return new


def integrate(
    u0: StateField,
    ops: FeOperators,
    model: ModelSpec,
    limiter: LimiterConfig,
    config: TimeIntegratorConfig,
    params: AdmissibilityParams = AdmissibilityParams(),
    monitors=(),
) -> Trajectory:
    """Advance ``u0`` to ``config.t_end``.

    dt comes from the step-start state; every stage is re-checked against
    dt * a_i <= m_i and the whole step is retried with dt halved on failure.
    ``monitors`` are called as ``monitor(t, u, edge_data, dt)`` for the
    initial state and every accepted step (``dt`` is the step that led to
    the state, 0 for the initial one).
    """
    rhs = SemiDiscreteOperator(ops, model, limiter, params)
    stages = _SHU_OSHER[config.method]
    checker = None
    if config.stage_admissibility_check:
        checker = lambda w: check_admissible(model, w, params)  # noqa: E731

    u = np.array(u0.values, dtype=float).reshape(ops.n_nodes, model.m)
    t = float(u0.time)
    if checker is not None and checker(u):
        raise StageError(checker(u), t)
    targets = [s for s in config.snapshot_times if s > t]
    if not targets or targets[-1] < config.t_end:
        targets.append(config.t_end)
    traj = Trajectory(snapshots=[StateField(u.copy(), t)])

    dudt0 = rhs(u)
    edges0 = rhs.last_edges
    for mon in monitors:
        mon(t, u, edges0, 0.0)

    step = 0
    target_idx = 0
    while target_idx < len(targets):
        if step >= config.max_steps:
            raise IntegrationError(f"max_steps={config.max_steps} exceeded at t={t:.6g}")
        t_next = targets[target_idx]
        bound = compute_cfl_dt(ops, edges0.d, config.cfl, config.max_dt)
        dt = bound
        hit = False
        if t + dt >= t_next * (1.0 - 1e-14) - 1e-300:
            dt = t_next - t
            hit = True
        for retry in range(config.max_retries + 1):
            try:
                new = _ssp_step(u, dt, stages, rhs, dudt0, edges0, ops, checker, t)
                break
            except CflViolation:
                dt *= 0.5
                hit = False
        else:
            raise IntegrationError(f"stage CFL violated after {config.max_retries} retries at t={t:.6g}")
        step += 1
        t = t_next if hit else t + dt
        u = new
        traj.steps.append(StepRecord(step, t, dt, bound, retry))
        dudt0 = rhs(u)
        edges0 = rhs.last_edges
        for mon in monitors:
            mon(t, u, edges0, dt)
        if hit:
            traj.snapshots.append(StateField(u.copy(), t))
            target_idx += 1
    return traj


def _ssp_step(u, dt, stages, rhs, dudt0, edges0, ops, checker, t):
    w = u
    for k, (a, b) in enumerate(stages):
        if k == 0:
            dudt, edges = dudt0, edges0
        else:
            dudt = rhs(w)
            edges = rhs.last_edges
        ratio = stage_cfl_ratio(ops, edges.d, dt)
        if ratio > 1.0 + 1e-12:
            raise CflViolation(ratio)
        euler = w + dt * dudt
        w = euler if a == 0.0 else a * u + b * euler
        if checker is not None:
            violations = checker(w)
            if violations:
                raise StageError(violations, t)
    return w
