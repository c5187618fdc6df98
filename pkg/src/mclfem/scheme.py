"""Semi-discrete right-hand side of the flux-corrected P1 scheme.

    m_i du_i/dt = sum_{j != i} 2 d_ij (ubar*_ij - u_i),   ubar*_ij = ubar_ij + f*_ij / (2 d_ij)

Edge quantities are arrays over the unordered edges of :class:`FeOperators`
(``i < j``).  Because c_ji = -c_ij is enforced by storage, the bar states of
both orientations coincide and one array holds them; fluxes are stored for
the ``ij`` orientation and negated for ``ji``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import FeOperators
from .models import (
    AdmissibilityParams,
    ModelSpec,
    admissible_mask,
    entropy_pair,
    flux,
    max_wave_speed,
)

MODES = ("target", "low_order", "mcl", "mcl_entropy", "bv_entropy")
ENTROPY_MODES = ("mcl_entropy", "bv_entropy")
STENCILS = ("nodal", "nodal_plus_bar_states")


class LimiterError(RuntimeError):
    pass


class DegenerateEdgeError(LimiterError):
    """An edge has zero graph viscosity but a nonzero flux difference."""


class LowOrderFailure(LimiterError):
    """Low-order bar states left the admissible set; the wave-speed bound is too small."""


@dataclass(frozen=True)
class LimiterConfig:
    """Flux limiting options.

    ``alpha_override`` forces f*_ij = alpha d_ij (u_i - u_j) with a fixed
    correction factor regardless of ``mode`` (used by consistency studies).
    ``apply_bounds=False`` turns the MCL clip into the identity.
    """

    mode: str = "mcl"
    entropy_margin: float = 1e-3
    bound_stencil: str = "nodal_plus_bar_states"
    richardson_sweeps: int = 5
    alpha_override: float | None = None
    apply_bounds: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown limiter mode {self.mode!r}")
        if self.bound_stencil not in STENCILS:
            raise ValueError(f"unknown bound stencil {self.bound_stencil!r}")
        if self.entropy_margin < 0 or (self.mode in ENTROPY_MODES and not self.entropy_margin > 0):
            raise ValueError("entropy_margin must be > 0 in entropy modes")
        if self.richardson_sweeps < 0:
            raise ValueError("richardson_sweeps must be >= 0")
        if self.alpha_override is not None and not 0.0 <= self.alpha_override <= 1.0:
            raise ValueError("alpha_override must lie in [0, 1]")

    @property
    def needs_time_derivative(self) -> bool:
        return self.alpha_override is None and self.mode in ("target", "mcl", "mcl_entropy")


@dataclass
class EdgeData:
    d: np.ndarray
    bar_state: np.ndarray
    limited_flux: np.ndarray
    target_flux: np.ndarray | None = None
    alpha: np.ndarray | None = None
    d_min: np.ndarray | None = None
    cap_insufficient: np.ndarray | None = None
    entropy_residual: np.ndarray | None = None
    richardson_residual: float | None = None

    @property
    def limited_bar_states(self):
        """(ubar*_ij, ubar*_ji) for every edge."""
        d = self.d[:, None]
        shift = np.divide(self.limited_flux, 2.0 * d, out=np.zeros_like(self.limited_flux), where=d > 0)
        return self.bar_state + shift, self.bar_state - shift


def _edge_states(ops: FeOperators, u: np.ndarray):
    return u[ops.edges[:, 0]], u[ops.edges[:, 1]]


def _normal_flux(F: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.einsum("emk,ek->em", F, c)


def compute_graph_viscosity(ops: FeOperators, model: ModelSpec, u) -> np.ndarray:
    """d_ij = max(lambda_ij |c_ij|, lambda_ji |c_ji|) per unordered edge."""
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, model.m)
    ui, uj = _edge_states(ops, u)
    cn = ops.edge_norms
    n = np.divide(ops.grad_coeffs, cn[:, None], out=np.zeros_like(ops.grad_coeffs), where=cn[:, None] > 0)
    lam_ij = max_wave_speed(model, ui, uj, n)
    lam_ji = max_wave_speed(model, uj, ui, -n)
    return np.maximum(lam_ij * cn, lam_ji * cn)


def solve_nodal_time_derivatives(ops: FeOperators, model: ModelSpec, u, sweeps: int = 5):
    """Richardson iteration for M_C udot = -sum_j f_j . c_ij, preconditioned by M_L.

    Returns ``(udot, residual)`` where ``residual`` is the infinity norm of
    ``b - M_C udot`` for the returned iterate.
    """
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, model.m)
    F = flux(model, u)
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    # -sum_j f_j.c_ij = sum_j (f_i - f_j).c_ij by zero row sums; exact for constant states
    v = _normal_flux(F[i] - F[j], ops.grad_coeffs)
    b = ops.gather(v, v)
    inv_m = 1.0 / ops.lumped_mass[:, None]
    udot = b * inv_m
    for _ in range(sweeps):
        udot = udot + inv_m * (b - ops.mass_matrix @ udot)
    residual = float(np.abs(b - ops.mass_matrix @ udot).max())
    return udot, residual


def compute_target_fluxes(ops: FeOperators, d, u, udot) -> np.ndarray:
    """f_ij = m_ij (udot_i - udot_j) + d_ij (u_i - u_j)."""
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, -1)
    udot = np.asarray(udot, dtype=float).reshape(u.shape)
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    return ops.consistent_mass[:, None] * (udot[i] - udot[j]) + np.asarray(d)[:, None] * (u[i] - u[j])


def compute_bar_states(ops: FeOperators, model: ModelSpec, d, u, allow_degenerate: bool = False) -> np.ndarray:
    """ubar_ij = (u_i + u_j)/2 - (f_j - f_i).c_ij / (2 d_ij).

    Edges with d_ij = 0 raise :class:`DegenerateEdgeError` unless
    ``allow_degenerate`` is set, in which case they fall back to the
    arithmetic mean provided f_j.c_ij == f_i.c_ij.
    """
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, model.m)
    d = np.asarray(d, dtype=float)
    F = flux(model, u)
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    fci = _normal_flux(F[i], ops.grad_coeffs)
    fcj = _normal_flux(F[j], ops.grad_coeffs)
    avg = 0.5 * (u[i] + u[j])
    deg = ~(d > 0)
    bar = avg.copy()
    ok = ~deg
    bar[ok] = avg[ok] - (fcj[ok] - fci[ok]) / (2.0 * d[ok, None])
    if np.any(deg):
        if not allow_degenerate:
            raise DegenerateEdgeError(f"d_ij = 0 on edge {int(np.flatnonzero(deg)[0])}")
        scale = np.abs(fci[deg]) + np.abs(fcj[deg]) + 1e-300
        bad = np.abs(fcj[deg] - fci[deg]) > 1e-14 * scale
        if np.any(bad):
            e = int(np.flatnonzero(deg)[np.flatnonzero(bad.any(axis=1))[0]])
            raise DegenerateEdgeError(f"edge {e} has d_ij = 0 but a nonzero flux difference")
    return bar


def local_bounds(ops: FeOperators, values, bar=None, stencil: str = "nodal_plus_bar_states"):
    """Per-node (min, max) of one component over N_i, optionally with the bar states."""
    values = np.asarray(values, dtype=float)
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    umax = np.maximum(values, ops.gather(values[j], values[i], np.maximum))
    umin = np.minimum(values, ops.gather(values[j], values[i], np.minimum))
    if stencil == "nodal_plus_bar_states":
        if bar is None:
            raise ValueError("bar states required for the nodal_plus_bar_states stencil")
        umax = np.maximum(umax, ops.gather(bar, bar, np.maximum))
        umin = np.minimum(umin, ops.gather(bar, bar, np.minimum))
    return umin, umax


def mcl_limit_scalar(ops: FeOperators, d, bar, target, umin, umax) -> np.ndarray:
    """Clip f_ij so that ubar_ij + f*/(2d) and ubar_ji - f*/(2d) respect the local bounds.

    The result always lies between 0 and f_ij, so the limiter never
    amplifies or reverses a flux even if the bar state sits outside the
    bounds.
    """
    d = np.asarray(d, dtype=float)
    bar = np.asarray(bar, dtype=float)
    f = np.asarray(target, dtype=float)
    umin = np.asarray(umin, dtype=float)
    umax = np.asarray(umax, dtype=float)
    if np.any(umin > umax):
        k = int(np.flatnonzero(umin > umax)[0])
        raise LimiterError(f"inconsistent bounds at node {k}: {umin[k]!r} > {umax[k]!r}")
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    two_d = 2.0 * d
    cap_pos = np.minimum(two_d * (umax[i] - bar), two_d * (bar - umin[j]))
    cap_neg = np.maximum(two_d * (umin[i] - bar), two_d * (bar - umax[j]))
    out = np.zeros_like(f)
    pos = f > 0
    neg = f < 0
    out[pos] = np.maximum(np.minimum(f[pos], cap_pos[pos]), 0.0)
    out[neg] = np.minimum(np.maximum(f[neg], cap_neg[neg]), 0.0)
    return out


def _largest_feasible_scale(feasible, n: int, iterations: int = 40, tol: float = 1e-12) -> np.ndarray:
    """Largest s in [0, 1] per edge with ``feasible(s, idx)`` true.

    ``feasible`` must describe an interval containing 0 (convex constraint
    sets). Bisection keeps the lower end feasible, so the result is always
    feasible.
    """
    scale = np.ones(n)
    bad = ~feasible(scale, np.arange(n))
    if not np.any(bad):
        return scale
    idx = np.flatnonzero(bad)
    if not np.all(feasible(np.zeros(len(idx)), idx)):
        raise LowOrderFailure("limited state inadmissible at zero correction")
    lo = np.zeros(len(idx))
    hi = np.ones(len(idx))
    for _ in range(iterations):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        ok = feasible(mid, idx)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    scale[idx] = lo
    return scale


def max_admissible_scale(model, base_ij, dir_ij, base_ji, dir_ji, params, iterations: int = 40, tol: float = 1e-12):
    """Largest s in [0, 1] with base + s*dir admissible for both orientations."""

    def feasible(s, idx):
        s = s[:, None]
        return admissible_mask(model, base_ij[idx] + s * dir_ij[idx], params) & admissible_mask(
            model, base_ji[idx] + s * dir_ji[idx], params
        )

    return _largest_feasible_scale(feasible, len(base_ij), iterations, tol)


def _shift(flux_, d):
    return np.divide(flux_, 2.0 * d[:, None], out=np.zeros_like(flux_), where=d[:, None] > 0)


def specific_quantities(u) -> np.ndarray:
    """Velocity components and specific total energy E / rho of Euler states."""
    u = np.asarray(u, dtype=float)
    return u[..., 1:] / u[..., :1]


def euler_specific_bounds(ops: FeOperators, u, bar, stencil: str = "nodal_plus_bar_states"):
    """Per-node (min, max) of velocity components and E / rho, shape (N, d+1) each."""
    q = specific_quantities(u)
    qbar = specific_quantities(bar) if bar is not None else None
    lo = np.empty_like(q)
    hi = np.empty_like(q)
    for k in range(q.shape[1]):
        lo[:, k], hi[:, k] = local_bounds(ops, q[:, k], None if qbar is None else qbar[:, k], stencil)
    return lo, hi


def _within(q, lo, hi):
    tol = 1e-12 * np.maximum(np.maximum(np.abs(lo), np.abs(hi)), 1.0)
    return np.all((q >= lo - tol) & (q <= hi + tol), axis=-1)


def mcl_limit_euler(
    ops: FeOperators,
    model: ModelSpec,
    d,
    bar,
    target,
    params: AdmissibilityParams,
    rho_bounds,
    specific_bounds=None,
    iterations: int = 40,
    tol: float = 1e-12,
):
    """Density clip followed by a common factor for momentum and energy.

    The density flux is clipped with :func:`mcl_limit_scalar`. The other
    components are split into the part carried by the limited density flux
    at the bar-state velocity and specific energy, plus a remainder g scaled
    by one factor beta_ij in [0, 1]. beta is the largest value (bisection)
    keeping both limited bar states at rho >= rho_floor and p >= p_floor and,
    if ``specific_bounds`` are given, velocity and E/rho inside the local
    bounds of the receiving node. beta = 0 reproduces the bar-state
    velocity and specific energy, so it is always feasible when the limited
    density is. Returns ``(f_star, beta)``.
    """
    d = np.asarray(d, dtype=float)
    bar = np.asarray(bar, dtype=float)
    target = np.asarray(target, dtype=float)
    if not np.all(admissible_mask(model, bar, params)):
        e = int(np.flatnonzero(~admissible_mask(model, bar, params))[0])
        raise LowOrderFailure(f"bar state of edge {e} is inadmissible: {bar[e]!r}")
    rmin, rmax = rho_bounds
    f_rho = mcl_limit_scalar(ops, d, bar[:, 0], target[:, 0], rmin, rmax)
    # the density floor is linear in the density flux; the margin absorbs rounding
    room = (bar[:, 0] - params.rho_floor) * (1.0 - 1e-12)
    delta = np.abs(_shift(f_rho[:, None], d)[:, 0])
    over = delta > room
    if np.any(over):
        f_rho = f_rho.copy()
        f_rho[over] *= np.clip(room[over] / delta[over], 0.0, 1.0)
    qbar = specific_quantities(bar)
    carried = f_rho[:, None] * qbar
    rest = target[:, 1:] - carried

    if specific_bounds is not None:
        i, j = ops.edges[:, 0], ops.edges[:, 1]
        qlo, qhi = specific_bounds
        lo_i, hi_i = np.minimum(qlo[i], qbar), np.maximum(qhi[i], qbar)
        lo_j, hi_j = np.minimum(qlo[j], qbar), np.maximum(qhi[j], qbar)

    def assemble(s, idx):
        f = np.empty((len(idx), target.shape[1]))
        f[:, 0] = f_rho[idx]
        f[:, 1:] = carried[idx] + s[:, None] * rest[idx]
        return f

    def states(s, idx):
        # the same arithmetic as EdgeData.limited_bar_states, so feasibility survives rounding
        shift = _shift(assemble(s, idx), d[idx])
        return bar[idx] + shift, bar[idx] - shift

    def feasible(s, idx):
        st_ij, st_ji = states(s, idx)
        ok = admissible_mask(model, st_ij, params) & admissible_mask(model, st_ji, params)
        if specific_bounds is not None:
            ok &= _within(specific_quantities(st_ij), lo_i[idx], hi_i[idx])
            ok &= _within(specific_quantities(st_ji), lo_j[idx], hi_j[idx])
        return ok

    beta = _largest_feasible_scale(feasible, len(d), iterations, tol)
    return assemble(beta, np.arange(len(d))), beta


def _dmin_from(ui, uj, Fi, Fj, vi, vj, psii, psij, c):
    dv = vi - vj
    denom = np.sum(dv * (uj - ui), axis=-1)
    num = 2.0 * np.sum((psij - psii) * c, axis=-1) + np.sum(dv * _normal_flux(Fj + Fi, c), axis=-1)
    scale = (np.linalg.norm(vi, axis=-1) + np.linalg.norm(vj, axis=-1)) * (
        np.linalg.norm(ui, axis=-1) + np.linalg.norm(uj, axis=-1)
    )
    degenerate = np.abs(denom) <= 1e-14 * scale
    dmin = np.divide(num, denom, out=np.zeros_like(num), where=~degenerate)
    return dmin, degenerate


def entropy_dmin(model: ModelSpec, u_i, u_j, f_i, f_j, c_ij):
    """Solve 1/2 (v_i-v_j)^T [d (u_j-u_i) - (f_j+f_i).c_ij] = (psi_j-psi_i).c_ij for d.

    Vectorised over leading axes. Returns ``(d_min, degenerate)``; for
    (numerically) equal states ``d_min`` is 0 and ``degenerate`` is True.
    """
    u_i = np.atleast_2d(np.asarray(u_i, dtype=float))
    u_j = np.atleast_2d(np.asarray(u_j, dtype=float))
    c = np.atleast_2d(np.asarray(c_ij, dtype=float))
    Fi = np.asarray(f_i, dtype=float).reshape(u_i.shape + (c.shape[-1],))
    Fj = np.asarray(f_j, dtype=float).reshape(u_j.shape + (c.shape[-1],))
    ei, ej = entropy_pair(model, u_i), entropy_pair(model, u_j)
    return _dmin_from(u_i, u_j, Fi, Fj, ei.v, ej.v, ei.psi, ej.psi, c)


def entropy_cap(d, d_min, theta, c_norm, alpha_candidate):
    """alpha = min(candidate, max(0, 1 - (max(d_min, 0) + theta |c|) / d)).

    Returns ``(alpha, insufficient)`` where ``insufficient`` flags edges on
    which even alpha = 0 cannot give (1 - alpha) d >= max(d_min, 0) + theta |c|.
    """
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("entropy_cap requires d_ij > 0")
    need = np.maximum(np.asarray(d_min, dtype=float), 0.0) + theta * np.asarray(c_norm, dtype=float)
    alpha = np.minimum(alpha_candidate, np.maximum(0.0, 1.0 - need / d))
    return alpha, d < need


def _residual_from(ui, uj, Fi, Fj, vi, vj, psii, psij, c, d, fstar):
    bracket = d[..., None] * (uj - ui) - _normal_flux(Fj + Fi, c) + fstar
    return 0.5 * np.sum((vi - vj) * bracket, axis=-1) - np.sum((psij - psii) * c, axis=-1)


def edge_entropy_residual(model: ModelSpec, u_i, u_j, f_i, f_j, c_ij, d_ij, fstar):
    """LHS - RHS of the per-edge entropy condition; <= 0 means entropy stable."""
    u_i = np.atleast_2d(np.asarray(u_i, dtype=float))
    u_j = np.atleast_2d(np.asarray(u_j, dtype=float))
    c = np.atleast_2d(np.asarray(c_ij, dtype=float))
    Fi = np.asarray(f_i, dtype=float).reshape(u_i.shape + (c.shape[-1],))
    Fj = np.asarray(f_j, dtype=float).reshape(u_j.shape + (c.shape[-1],))
    fstar = np.asarray(fstar, dtype=float).reshape(u_i.shape)
    ei, ej = entropy_pair(model, u_i), entropy_pair(model, u_j)
    return _residual_from(u_i, u_j, Fi, Fj, ei.v, ej.v, ei.psi, ej.psi, c, np.atleast_1d(d_ij), fstar)


def _bound_candidate(ops, model, d, bar, u, full, limiter, params):
    """Largest alpha such that alpha * full keeps the limited bar states in bounds."""
    if model.is_scalar:
        umin, umax = local_bounds(ops, u[:, 0], bar[:, 0], limiter.bound_stencil)
        fl = mcl_limit_scalar(ops, d, bar[:, 0], full[:, 0], umin, umax)
        return np.divide(fl, full[:, 0], out=np.ones_like(fl), where=full[:, 0] != 0)
    rmin, rmax = local_bounds(ops, u[:, 0], bar[:, 0], limiter.bound_stencil)
    fl = mcl_limit_scalar(ops, d, bar[:, 0], full[:, 0], rmin, rmax)
    a_rho = np.divide(fl, full[:, 0], out=np.ones_like(fl), where=full[:, 0] != 0)
    shift = _shift(a_rho[:, None] * full, d)
    qlo, qhi = euler_specific_bounds(ops, u, bar, limiter.bound_stencil)
    qbar = specific_quantities(bar)
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    lo_i, hi_i = np.minimum(qlo[i], qbar), np.maximum(qhi[i], qbar)
    lo_j, hi_j = np.minimum(qlo[j], qbar), np.maximum(qhi[j], qbar)

    def feasible(s, idx):
        st_ij = bar[idx] + s[:, None] * shift[idx]
        st_ji = bar[idx] - s[:, None] * shift[idx]
        ok = admissible_mask(model, st_ij, params) & admissible_mask(model, st_ji, params)
        ok &= _within(specific_quantities(st_ij), lo_i[idx], hi_i[idx])
        return ok & _within(specific_quantities(st_ji), lo_j[idx], hi_j[idx])

    return a_rho * _largest_feasible_scale(feasible, len(d))


def semidiscrete_rhs(ops: FeOperators, model: ModelSpec, u, limiter: LimiterConfig, params: AdmissibilityParams):
    """Evaluate du/dt for every node. Returns ``(dudt, EdgeData)``."""
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, model.m)
    i, j = ops.edges[:, 0], ops.edges[:, 1]
    c = ops.grad_coeffs
    d = compute_graph_viscosity(ops, model, u)
    bar = compute_bar_states(ops, model, d, u, allow_degenerate=True)
    edges = EdgeData(d=d, bar_state=bar, limited_flux=np.zeros_like(bar))
    positive = d > 0

    entropy_needed = limiter.alpha_override is None and limiter.mode in ENTROPY_MODES
    if entropy_needed:
        F = flux(model, u)
        ent = entropy_pair(model, u)
        args = (u[i], u[j], F[i], F[j], ent.v[i], ent.v[j], ent.psi[i], ent.psi[j], c)

    if limiter.alpha_override is not None:
        alpha = np.full(len(d), float(limiter.alpha_override))
        edges.alpha = alpha
        edges.limited_flux = alpha[:, None] * d[:, None] * (u[i] - u[j])
    elif limiter.mode == "low_order":
        pass
    elif limiter.mode == "bv_entropy":
        full = d[:, None] * (u[i] - u[j])
        cand = _bound_candidate(ops, model, d, bar, u, full, limiter, params) if limiter.apply_bounds else np.ones(len(d))
        dmin, _ = _dmin_from(*args)
        alpha = np.zeros(len(d))
        insufficient = np.zeros(len(d), dtype=bool)
        alpha[positive], insufficient[positive] = entropy_cap(
            d[positive], dmin[positive], limiter.entropy_margin, ops.edge_norms[positive], cand[positive]
        )
        edges.alpha, edges.d_min, edges.cap_insufficient = alpha, dmin, insufficient
        edges.limited_flux = alpha[:, None] * d[:, None] * (u[i] - u[j])
    else:
        udot, res = solve_nodal_time_derivatives(ops, model, u, limiter.richardson_sweeps)
        target = compute_target_fluxes(ops, d, u, udot)
        edges.target_flux = target
        edges.richardson_residual = res
        if limiter.mode == "target" or not limiter.apply_bounds:
            fstar = target
        elif model.is_scalar:
            umin, umax = local_bounds(ops, u[:, 0], bar[:, 0], limiter.bound_stencil)
            fstar = mcl_limit_scalar(ops, d, bar[:, 0], target[:, 0], umin, umax)[:, None]
        else:
            rb = local_bounds(ops, u[:, 0], bar[:, 0], limiter.bound_stencil)
            sb = euler_specific_bounds(ops, u, bar, limiter.bound_stencil)
            fstar, _ = mcl_limit_euler(ops, model, d, bar, target, params, rb, sb)
        if limiter.mode == "mcl_entropy":
            zero = np.zeros(len(d))
            r0 = _residual_from(*args, d, np.zeros_like(fstar))
            slope = 0.5 * np.sum((args[4] - args[5]) * fstar, axis=-1)
            scale = np.ones(len(d))
            over = r0 + slope > 0
            scale[over] = np.clip(np.divide(-r0[over], slope[over], out=zero[over], where=slope[over] > 0), 0.0, 1.0)
            fstar = scale[:, None] * fstar
            edges.alpha = scale
            edges.cap_insufficient = r0 > 0
        else:
            edges.alpha = np.divide(fstar, target, out=np.ones_like(fstar), where=target != 0)
        edges.limited_flux = fstar

    if entropy_needed:
        edges.entropy_residual = _residual_from(*args, d, edges.limited_flux)

    two_d = 2.0 * d[:, None]
    fstar = edges.limited_flux
    contrib_ij = two_d * (bar - u[i]) + fstar
    contrib_ji = two_d * (bar - u[j]) - fstar
    dudt = ops.gather(contrib_ij, contrib_ji) / ops.lumped_mass[:, None]
    return dudt, edges


class SemiDiscreteOperator:
    """Callable wrapper around :func:`semidiscrete_rhs` that remembers the last edge data."""

    def __init__(self, ops: FeOperators, model: ModelSpec, limiter: LimiterConfig, params: AdmissibilityParams):
        self.ops = ops
        self.model = model
        self.limiter = limiter
        self.params = params
        self.last_edges: EdgeData | None = None

    def __call__(self, u):
        dudt, self.last_edges = semidiscrete_rhs(self.ops, self.model, u, self.limiter, self.params)
        return dudt
