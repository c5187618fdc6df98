"""Conservation laws: fluxes, wave-speed bounds, entropy pairs and admissibility.

All functions are vectorised over leading axes: a state array has shape
``(..., m)`` and a flux array has shape ``(..., m, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

KINDS = ("advection", "burgers", "euler")
WAVE_SPEED_ESTIMATES = ("simple", "guaranteed")


class InadmissibleStateError(ValueError):
    """State outside the domain where the model is defined (rho <= 0 or p <= 0)."""


@dataclass(frozen=True)
class ModelSpec:
    """Conservation-law descriptor.

    ``wave_speed`` selects the Euler bound: ``"simple"`` is
    max(|v_L.n| + c_L, |v_R.n| + c_R) scaled by ``wave_speed_safety``;
    ``"guaranteed"`` uses the two-rarefaction pressure estimate, which is a
    rigorous upper bound for 1 < gamma <= 5/3.
    """

    kind: str
    dim: int = 1
    velocity: tuple = ()
    gamma: float = 1.4
    wave_speed: str = "simple"
    wave_speed_safety: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.kind == "advection":
            object.__setattr__(self, "velocity", tuple(float(a) for a in self.velocity))
            if len(self.velocity) != self.dim:
                raise ValueError(f"advection velocity needs {self.dim} components")
        if self.kind == "euler" and not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.wave_speed not in WAVE_SPEED_ESTIMATES:
            raise ValueError(f"unknown wave speed estimate {self.wave_speed!r}")
        if not self.wave_speed_safety >= 1.0:
            raise ValueError("wave_speed_safety must be >= 1")

    @classmethod
    def advection(cls, velocity) -> "ModelSpec":
        velocity = tuple(np.atleast_1d(np.asarray(velocity, dtype=float)))
        return cls("advection", dim=len(velocity), velocity=velocity)

    @classmethod
    def burgers(cls, dim: int = 1) -> "ModelSpec":
        return cls("burgers", dim=dim)

    @classmethod
    def euler(cls, dim: int = 1, gamma: float = 1.4, **kw) -> "ModelSpec":
        return cls("euler", dim=dim, gamma=gamma, **kw)

    @property
    def m(self) -> int:
        return self.dim + 2 if self.kind == "euler" else 1

    @property
    def is_scalar(self) -> bool:
        return self.kind != "euler"

    def component_names(self) -> list[str]:
        if self.kind != "euler":
            return ["u"]
        return ["rho"] + [f"m{k + 1}" for k in range(self.dim)] + ["E"]


class EntropyPairEval(NamedTuple):
    eta: np.ndarray
    v: np.ndarray
    q: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True)
class AdmissibilityParams:
    rho_floor: float = 1e-12
    pressure_floor: float = 1e-12
    energy_cap: float = math.inf
    scalar_bounds: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        if not self.rho_floor > 0:
            raise ValueError("rho_floor must be positive")
        if not self.energy_cap > 0:
            raise ValueError("energy_cap must be positive")
        if self.pressure_floor < 0:
            raise ValueError("pressure_floor must be nonnegative")
        lo, hi = self.scalar_bounds
        if lo > hi:
            raise ValueError(f"scalar bounds {self.scalar_bounds} are inconsistent")


@dataclass(frozen=True)
class Violation:
    node: int | None
    quantity: str
    value: float
    bound: float

    @property
    def amount(self) -> float:
        return abs(self.value - self.bound)


# -- Euler helpers -----------------------------------------------------------


def pressure(model: ModelSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    mom = u[..., 1 : 1 + model.dim]
    return (model.gamma - 1.0) * (u[..., -1] - 0.5 * np.sum(mom**2, axis=-1) / rho)


def _require_density(u):
    if np.any(~(u[..., 0] > 0)):
        raise InadmissibleStateError(f"nonpositive density {float(np.min(u[..., 0]))!r}")


def primitive_from_conserved(model: ModelSpec, u):
    """(rho, m, E) -> (rho, velocity, p)."""
    u = np.asarray(u, dtype=float)
    _require_density(u)
    rho = u[..., 0]
    vel = u[..., 1 : 1 + model.dim] / rho[..., None]
    return rho, vel, pressure(model, u)


def conserved_from_primitive(model: ModelSpec, rho, velocity, p) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    vel = np.asarray(velocity, dtype=float)
    if vel.ndim == rho.ndim:
        vel = vel[..., None]
    p = np.asarray(p, dtype=float)
    E = p / (model.gamma - 1.0) + 0.5 * rho * np.sum(vel**2, axis=-1)
    return np.concatenate([rho[..., None], rho[..., None] * vel, E[..., None]], axis=-1)


def sound_speed(model: ModelSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return np.sqrt(model.gamma * pressure(model, u) / u[..., 0])


# -- model operations --------------------------------------------------------


def flux(model: ModelSpec, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    d = model.dim
    if model.kind == "advection":
        return u[..., :, None] * np.asarray(model.velocity)
    if model.kind == "burgers":
        return np.repeat(0.5 * u[..., :, None] ** 2, d, axis=-1)
    _require_density(u)
    rho = u[..., 0]
    mom = u[..., 1 : 1 + d]
    E = u[..., -1]
    vel = mom / rho[..., None]
    p = pressure(model, u)
    f = np.empty(u.shape + (d,))
    f[..., 0, :] = mom
    f[..., 1 : 1 + d, :] = mom[..., :, None] * vel[..., None, :] + p[..., None, None] * np.eye(d)
    f[..., -1, :] = vel * (E + p)[..., None]
    return f


def _euler_speed_simple(model, uL, uR, n):
    _require_density(uL)
    _require_density(uR)
    vnL = np.sum(uL[..., 1 : 1 + model.dim] * n, axis=-1) / uL[..., 0]
    vnR = np.sum(uR[..., 1 : 1 + model.dim] * n, axis=-1) / uR[..., 0]
    return np.maximum(np.abs(vnL) + sound_speed(model, uL), np.abs(vnR) + sound_speed(model, uR))


def _euler_speed_guaranteed(model, uL, uR, n):
    g = model.gamma
    rL, rR = uL[..., 0], uR[..., 0]
    _require_density(uL)
    _require_density(uR)
    vL = np.sum(uL[..., 1 : 1 + model.dim] * n, axis=-1) / rL
    vR = np.sum(uR[..., 1 : 1 + model.dim] * n, axis=-1) / rR
    pL, pR = pressure(model, uL), pressure(model, uR)
    if np.any(pL <= 0) or np.any(pR <= 0):
        raise InadmissibleStateError("nonpositive pressure")
    cL, cR = np.sqrt(g * pL / rL), np.sqrt(g * pR / rR)
    z = (g - 1.0) / (2.0 * g)
    num = np.maximum(cL + cR - 0.5 * (g - 1.0) * (vR - vL), 0.0)
    p_star = (num / (cL * pL ** (-z) + cR * pR ** (-z))) ** (1.0 / z)
    k = (g + 1.0) / (2.0 * g)
    lam_l = vL - cL * np.sqrt(1.0 + k * np.maximum(p_star / pL - 1.0, 0.0))
    lam_r = vR + cR * np.sqrt(1.0 + k * np.maximum(p_star / pR - 1.0, 0.0))
    return np.maximum(np.abs(lam_l), np.abs(lam_r))


def max_wave_speed(model: ModelSpec, uL, uR, n) -> np.ndarray:
    """Upper bound on the signal speeds of the Riemann problem for f(u).n."""
    uL = np.asarray(uL, dtype=float)
    uR = np.asarray(uR, dtype=float)
    n = np.asarray(n, dtype=float)
    if model.kind == "advection":
        speed = np.abs(np.sum(np.asarray(model.velocity) * n, axis=-1))
        return np.broadcast_to(speed, np.broadcast_shapes(uL.shape[:-1], uR.shape[:-1], n.shape[:-1])).copy()
    if model.kind == "burgers":
        return np.abs(np.sum(n, axis=-1)) * np.maximum(np.abs(uL[..., 0]), np.abs(uR[..., 0]))
    if model.wave_speed == "guaranteed":
        lam = _euler_speed_guaranteed(model, uL, uR, n)
    else:
        lam = _euler_speed_simple(model, uL, uR, n)
    return model.wave_speed_safety * lam


def entropy_pair(model: ModelSpec, u) -> EntropyPairEval:
    """Square entropy for scalar models, -rho*s/(gamma-1) for Euler."""
    u = np.asarray(u, dtype=float)
    d = model.dim
    if model.kind == "advection":
        a = np.asarray(model.velocity)
        s = u[..., 0]
        eta = 0.5 * s**2
        return EntropyPairEval(eta, u.copy(), eta[..., None] * a, eta[..., None] * a)
    if model.kind == "burgers":
        s = u[..., 0]
        ones = np.ones(d)
        return EntropyPairEval(
            0.5 * s**2, u.copy(), (s**3 / 3.0)[..., None] * ones, (s**3 / 6.0)[..., None] * ones
        )
    g = model.gamma
    rho = u[..., 0]
    if np.any(~(rho > 0)):
        raise InadmissibleStateError(f"nonpositive density {float(np.min(rho))!r}")
    p = pressure(model, u)
    if np.any(~(p > 0)):
        raise InadmissibleStateError(f"nonpositive pressure {float(np.min(p))!r}")
    mom = u[..., 1 : 1 + d]
    vel = mom / rho[..., None]
    s = np.log(p) - g * np.log(rho)
    eta = -rho * s / (g - 1.0)
    v = np.empty_like(u)
    v[..., 0] = (g - s) / (g - 1.0) - 0.5 * rho * np.sum(vel**2, axis=-1) / p
    v[..., 1 : 1 + d] = mom / p[..., None]
    v[..., -1] = -rho / p
    return EntropyPairEval(eta, v, eta[..., None] * vel, mom.copy())


def check_admissible(model: ModelSpec, u, params: AdmissibilityParams) -> list[Violation]:
    """List of bound violations; empty when every state is admissible.

    Accepts one state ``(m,)`` (``node`` is then None) or a field ``(N, m)``.
    """
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    U = u[None] if single else u
    out: list[Violation] = []

    def report(mask, quantity, values, bound):
        for k in np.flatnonzero(mask):
            out.append(Violation(None if single else int(k), quantity, float(values[k]), float(bound)))

    if model.kind != "euler":
        lo, hi = params.scalar_bounds
        s = U[:, 0]
        report(~(s >= lo), "lower_bound", s, lo)
        report(~(s <= hi), "upper_bound", s, hi)
        return out
    rho = U[:, 0]
    report(~(rho >= params.rho_floor), "density", rho, params.rho_floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(rho > 0, pressure(model, np.where(rho[:, None] > 0, U, 1.0)), -np.inf)
    report(~(p >= params.pressure_floor), "pressure", p, params.pressure_floor)
    report(~(U[:, -1] <= params.energy_cap), "energy", U[:, -1], params.energy_cap)
    return out


def admissible_mask(model: ModelSpec, u, params: AdmissibilityParams) -> np.ndarray:
    """Positivity part of admissibility (rho >= floor, p >= floor) as a boolean mask."""
    u = np.asarray(u, dtype=float)
    if model.kind != "euler":
        lo, hi = params.scalar_bounds
        return (u[..., 0] >= lo) & (u[..., 0] <= hi)
    rho = u[..., 0]
    safe = np.where(rho > 0, rho, 1.0)
    mom = u[..., 1 : 1 + model.dim]
    p = (model.gamma - 1.0) * (u[..., -1] - 0.5 * np.sum(mom**2, axis=-1) / safe)
    return (rho >= params.rho_floor) & (p >= params.pressure_floor)
