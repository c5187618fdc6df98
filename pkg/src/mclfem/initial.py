"""Named initial conditions and their nodal interpolation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import Mesh
from .models import AdmissibilityParams, ModelSpec, check_admissible, conserved_from_primitive
from .timestepping import StateField


class InitialConditionError(ValueError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    """Registered profile: ``func(x, extent, model, params, rng) -> (P, m)`` conserved states."""

    name: str
    kinds: tuple
    defaults: dict
    func: Callable
    dims: tuple = (1, 2)

    def validate(self, params: dict, model: ModelSpec, path: str = "initial") -> None:
        if model.kind not in self.kinds:
            raise InitialConditionError(f"{path}.name: {self.name!r} is not defined for {model.kind}")
        if model.dim not in self.dims:
            raise InitialConditionError(f"{path}.name: {self.name!r} needs dim in {self.dims}")
        for key, value in params.items():
            if key not in self.defaults:
                raise InitialConditionError(f"{path}.{key}: unknown key for {self.name!r}")
            ref = self.defaults[key]
            if isinstance(ref, (list, tuple)):
                ok = isinstance(value, list) and all(isinstance(v, (int, float)) for v in value)
            elif ref is None or isinstance(ref, (int, float)):
                ok = isinstance(value, (int, float)) and not isinstance(value, bool)
            elif isinstance(ref, str):
                ok = isinstance(value, str)
            else:
                ok = False
            if not ok:
                raise InitialConditionError(f"{path}.{key}: bad value {value!r}")

    def evaluate(self, x, extent, model: ModelSpec, params: dict | None = None, seed: int = 0) -> np.ndarray:
        merged = {**self.defaults, **(params or {})}
        x = np.atleast_2d(np.asarray(x, dtype=float))
        extent = np.asarray(extent, dtype=float)
        out = self.func(x, extent, model, merged, np.random.default_rng(seed))
        return np.asarray(out, dtype=float).reshape(len(x), model.m)


def _euler_state(model, rho, vel, p):
    rho = np.asarray(rho, dtype=float)
    v = np.broadcast_to(np.asarray(vel, dtype=float), rho.shape + (model.dim,))
    return conserved_from_primitive(model, rho, v, np.broadcast_to(p, rho.shape))


def _velocity(params, model):
    v = list(params["velocity"]) or [0.0] * model.dim
    if len(v) != model.dim:
        raise InitialConditionError(f"velocity needs {model.dim} components")
    return np.array(v, dtype=float)


def _constant(x, L, model, p, rng):
    if model.is_scalar:
        return np.full(len(x), p["value"])
    return _euler_state(model, np.full(len(x), p["rho"]), _velocity(p, model), p["pressure"])


def _sine_wave(x, L, model, p, rng):
    wave = p["offset"] + p["amplitude"] * np.sin(2.0 * np.pi * p["wavenumber"] * x[:, 0] / L[0])
    if model.is_scalar:
        return wave
    return _euler_state(model, wave, _velocity(p, model), p["pressure"])


def _step(x, L, model, p, rng):
    start = p["start"] * L[0]
    stop = p["stop"] * L[0]
    inside = (x[:, 0] >= start) & (x[:, 0] < stop)
    return np.where(inside, p["high"], p["low"])


def _composite_smooth(x, L, model, p, rng):
    s = np.zeros(len(x))
    for a in range(x.shape[1]):
        t = 2.0 * np.pi * x[:, a] / L[a]
        s += np.sin(t) + 0.5 * np.cos(2.0 * t)
    return p["offset"] + p["amplitude"] * s


def _sod(x, L, model, p, rng):
    x0 = 0.5 * L[0] if p["x0"] is None else p["x0"]
    left = x[:, 0] < x0
    rl, ul, pl = p["left"]
    rr, ur, pr = p["right"]
    rho = np.where(left, rl, rr)
    vel = np.zeros((len(x), model.dim))
    vel[:, 0] = np.where(left, ul, ur)
    return _euler_state(model, rho, vel, np.where(left, pl, pr))


def _euler_blast(x, L, model, p, rng):
    centre = np.asarray(p["centre"], dtype=float) if p["centre"] else 0.5 * L
    if len(centre) != model.dim:
        raise InitialConditionError(f"centre needs {model.dim} components")
    r = np.linalg.norm(x - centre, axis=1)
    inside = r < p["radius"] * L.min()
    prs = np.where(inside, p["p_blast"], p["p_ambient"])
    return _euler_state(model, np.full(len(x), p["rho"]), np.zeros(model.dim), prs)


def _kelvin_helmholtz_2d(x, L, model, p, rng):
    y = x[:, 1] / L[1]
    band = np.abs(y - 0.5) < 0.25
    rho = np.where(band, p["rho_inner"], p["rho_outer"])
    vel = np.zeros((len(x), 2))
    vel[:, 0] = np.where(band, -p["shear"], p["shear"])
    if p["perturbation"] == "random":
        vel[:, 1] = p["amplitude"] * rng.uniform(-1.0, 1.0, len(x))
    elif p["perturbation"] == "sine":
        vel[:, 1] = p["amplitude"] * np.sin(4.0 * np.pi * x[:, 0] / L[0])
    else:
        raise InitialConditionError("perturbation must be 'sine' or 'random'")
    return _euler_state(model, rho, vel, p["pressure"])


INITIAL_CONDITIONS = {
    ic.name: ic
    for ic in (
        InitialCondition("constant", ("advection", "burgers", "euler"),
                         {"value": 1.0, "rho": 1.0, "velocity": [], "pressure": 1.0}, _constant),
        InitialCondition("sine_wave", ("advection", "burgers", "euler"),
                         {"amplitude": 1.0, "offset": 0.0, "wavenumber": 1, "velocity": [], "pressure": 1.0},
                         _sine_wave),
        InitialCondition("step", ("advection", "burgers"),
                         {"low": 0.0, "high": 1.0, "start": 0.25, "stop": 0.75}, _step),
        InitialCondition("composite_smooth", ("advection", "burgers"),
                         {"amplitude": 1.0, "offset": 0.0}, _composite_smooth),
        InitialCondition("sod", ("euler",),
                         {"left": [1.0, 0.0, 1.0], "right": [0.125, 0.0, 0.1], "x0": None}, _sod),
        InitialCondition("euler_blast", ("euler",),
                         {"rho": 1.0, "p_ambient": 0.1, "p_blast": 10.0, "radius": 0.1, "centre": []},
                         _euler_blast),
        InitialCondition("kelvin_helmholtz_2d", ("euler",),
                         {"rho_inner": 2.0, "rho_outer": 1.0, "shear": 0.5, "pressure": 2.5,
                          "amplitude": 0.01, "perturbation": "sine"},
                         _kelvin_helmholtz_2d, dims=(2,)),
    )
}


def interpolate_initial_condition(
    mesh: Mesh,
    model: ModelSpec,
    name: str,
    params: dict | None = None,
    admissibility: AdmissibilityParams = AdmissibilityParams(),
    seed: int = 0,
) -> StateField:
    """Nodal interpolant u_i = u0(x_i), checked for admissibility."""
    if name not in INITIAL_CONDITIONS:
        raise InitialConditionError(f"unknown initial condition {name!r}")
    ic = INITIAL_CONDITIONS[name]
    ic.validate(params or {}, model)
    values = ic.evaluate(mesh.node_coords, mesh.domain_extent, model, params, seed)
    bad = check_admissible(model, values, admissibility)
    if bad:
        v = bad[0]
        where = tuple(float(c) for c in mesh.node_coords[v.node])
        raise InitialConditionError(
            f"inadmissible initial value at node {v.node} x={where}: {v.quantity}={v.value!r} (bound {v.bound!r})"
        )
    return StateField(values, 0.0)


def initial_profile(model: ModelSpec, name: str, params: dict | None, extent, seed: int = 0) -> Callable:
    """u0 as a callable of points (P, d) -> (P, m)."""
    ic = INITIAL_CONDITIONS[name]
    return lambda x: ic.evaluate(x, extent, model, params, seed)
