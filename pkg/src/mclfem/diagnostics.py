"""Measurable quantities: entropy, weak-BV functional, consistency errors, norms, averages."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import FeOperators, Mesh, d_h_form, h1_seminorm_sq
from .models import AdmissibilityParams, ModelSpec, entropy_pair, flux, pressure


class ConfigurationError(ValueError):
    pass


# -- quadrature (barycentric points, weights summing to 1) -------------------

def _gauss_segment():
    x, w = np.polynomial.legendre.leggauss(3)  # exact for degree 5
    s = 0.5 * (x + 1.0)
    return np.stack([1.0 - s, s], axis=1), 0.5 * w


def _dunavant5():
    a1, b1 = 0.059715871789770, 0.470142064105115
    a2, b2 = 0.797426985353087, 0.101286507323456
    pts = [(1 / 3, 1 / 3, 1 / 3)]
    pts += [(a1, b1, b1), (b1, a1, b1), (b1, b1, a1)]
    pts += [(a2, b2, b2), (b2, a2, b2), (b2, b2, a2)]
    w = [0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3
    return np.array(pts), np.array(w)


def quadrature_rule(dim: int):
    """Degree-5 rule on the reference simplex as (barycentric points, weights)."""
    return _gauss_segment() if dim == 1 else _dunavant5()


# -- nodal reductions --------------------------------------------------------

def conserved_totals(ops: FeOperators, u) -> np.ndarray:
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, -1)
    return ops.lumped_mass @ u


def total_entropy(ops: FeOperators, model: ModelSpec, u, offset: float = 0.0) -> float:
    """eta_Omega = sum_i m_i (eta(u_i) + offset)."""
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, model.m)
    eta = entropy_pair(model, u).eta
    return float(ops.lumped_mass @ (eta + offset))


def bv_integrand(ops: FeOperators, u) -> float:
    """sum_i sum_{j != i} |c_ij| ||u_j - u_i||_2^2."""
    u = np.asarray(u, dtype=float).reshape(ops.n_nodes, -1)
    du = u[ops.edges[:, 1]] - u[ops.edges[:, 0]]
    return float(2.0 * ops.edge_norms @ np.sum(du**2, axis=1))


def trapezoid(times, values) -> float:
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) < 2:
        return 0.0
    dt = np.diff(t).reshape((-1,) + (1,) * (v.ndim - 1))
    return np.sum(0.5 * dt * (v[1:] + v[:-1]), axis=0)


@dataclass
class DiagnosticsRecord:
    component_names: list
    times: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    conserved_totals: list = field(default_factory=list)
    absolute_totals: list = field(default_factory=list)
    total_entropy: list = field(default_factory=list)
    bv_integrand: list = field(default_factory=list)
    minima: list = field(default_factory=list)
    maxima: list = field(default_factory=list)
    max_entropy_residual: list = field(default_factory=list)
    cap_insufficient: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def bv_time_integral(self) -> float:
        return float(trapezoid(self.times, self.bv_integrand))

    def conservation_drift(self) -> np.ndarray:
        """max_t |total(t) - total(0)| per component, relative to |total(0)|.

        Components whose initial total vanishes (e.g. momentum at rest) are
        measured against max_t sum_i m_i |u_i(t)| instead.
        """
        tot = np.asarray(self.conserved_totals)
        ref = np.abs(tot[0])
        if self.absolute_totals:
            ref = np.maximum(ref, np.asarray(self.absolute_totals).max(axis=0))
        ref = np.where(ref > 0, ref, 1.0)
        return np.abs(tot - tot[0]).max(axis=0) / ref

    def entropy_increments(self) -> np.ndarray:
        return np.diff(np.asarray(self.total_entropy))

    def header(self) -> list[str]:
        names = self.component_names
        return (
            ["step", "t", "dt"]
            + [f"total_{n}" for n in names]
            + ["eta_omega", "bv_integrand"]
            + [f"min_{n}" for n in names]
            + [f"max_{n}" for n in names]
            + ["max_entropy_residual", "cap_insufficient", "flags_ok"]
        )

    def rows(self):
        for k in range(len(self.times)):
            yield (
                [k, self.times[k], self.dts[k]]
                + list(self.conserved_totals[k])
                + [self.total_entropy[k], self.bv_integrand[k]]
                + list(self.minima[k])
                + list(self.maxima[k])
                + [self.max_entropy_residual[k], self.cap_insufficient[k], int(all(self.flags[k].values()))]
            )


class DiagnosticsMonitor:
    """Integrator hook that fills a :class:`DiagnosticsRecord` at every accepted step."""

    def __init__(self, ops: FeOperators, model: ModelSpec, params: AdmissibilityParams = AdmissibilityParams(),
                 entropy_offset: float = 0.0):
        self.ops = ops
        self.model = model
        self.params = params
        self.entropy_offset = entropy_offset
        self.record = DiagnosticsRecord(component_names=model.component_names())

    def __call__(self, t, u, edges, dt):
        r = self.record
        u = np.asarray(u).reshape(self.ops.n_nodes, self.model.m)
        r.times.append(float(t))
        r.dts.append(float(dt))
        r.conserved_totals.append(conserved_totals(self.ops, u))
        r.absolute_totals.append(conserved_totals(self.ops, np.abs(u)))
        r.total_entropy.append(total_entropy(self.ops, self.model, u, self.entropy_offset))
        r.bv_integrand.append(bv_integrand(self.ops, u))
        r.minima.append(u.min(axis=0))
        r.maxima.append(u.max(axis=0))
        res = getattr(edges, "entropy_residual", None)
        r.max_entropy_residual.append(float(res.max()) if res is not None and res.size else math.nan)
        ins = getattr(edges, "cap_insufficient", None)
        r.cap_insufficient.append(int(ins.sum()) if ins is not None else 0)
        r.flags.append(_state_flags(self.model, u, self.params))


def _state_flags(model, u, params) -> dict:
    if model.is_scalar:
        lo, hi = params.scalar_bounds
        return {"bounds": bool(u.min() >= lo and u.max() <= hi)}
    return {
        "density": bool(u[:, 0].min() >= params.rho_floor),
        "energy": bool(u[:, -1].max() <= params.energy_cap),
    }


@dataclass
class WeakBV:
    integral: float
    times: np.ndarray
    integrand: np.ndarray


def weak_bv_functional(ops: FeOperators, trajectory) -> WeakBV:
    """Time integral of the |c_ij|-weighted squared jumps.

    Uses the per-step record when the trajectory carries one, otherwise the
    snapshots.
    """
    rec = getattr(trajectory, "diagnostics", None)
    if isinstance(rec, DiagnosticsRecord) and rec.times:
        t = np.asarray(rec.times)
        vals = np.asarray(rec.bv_integrand)
    else:
        if not trajectory.snapshots:
            raise ValueError("empty trajectory")
        t = np.array([s.time for s in trajectory.snapshots])
        vals = np.array([bv_integrand(ops, s.values) for s in trajectory.snapshots])
    return WeakBV(float(trapezoid(t, vals)), t, vals)


# -- Lax-Wendroff consistency terms ------------------------------------------

class CosineBumpTestFunction:
    """phi(x, t) = cos(2 pi x_1 / L_1) [cos(2 pi x_2 / L_2)] * sin(pi t / T)^4."""

    def __init__(self, t_end: float, extent):
        self.t_end = float(t_end)
        self.k = 2.0 * np.pi / np.atleast_1d(np.asarray(extent, dtype=float))

    def _space(self, x):
        x = np.atleast_2d(x)
        return np.prod(np.cos(self.k * x), axis=1)

    def _bump(self, t):
        return np.sin(np.pi * t / self.t_end) ** 4

    def _bump_dt(self, t):
        s = np.sin(np.pi * t / self.t_end)
        return 4.0 * s**3 * np.cos(np.pi * t / self.t_end) * np.pi / self.t_end

    def value(self, x, t):
        return self._space(x) * self._bump(t)

    def time_derivative(self, x, t):
        return self._space(x) * self._bump_dt(t)

    def gradient(self, x, t):
        x = np.atleast_2d(x)
        c = np.cos(self.k * x)
        s = np.sin(self.k * x)
        g = np.empty_like(x)
        for a in range(x.shape[1]):
            others = np.prod(np.delete(c, a, axis=1), axis=1) if x.shape[1] > 1 else 1.0
            g[:, a] = -self.k[a] * s[:, a] * others
        return g * self._bump(t)


class ConsistencyMonitor:
    """Integrator hook recording the instantaneous R1, R2, R3 integrands.

    R1: phidot^T (M_C - M_L) u                       (mass lumping)
    R2: int grad(phi_h) . (f(u_h) - I_h f(u_h))      (group FE, degree-5 quadrature)
    R3: sum_i phi_i sum_j (d_ij (u_i - u_j) - f*_ij)  (limiter; equals
        sum_i phi_i sum_j (1 - alpha_ij) d_ij (u_i - u_j) for f* = alpha d (u_i - u_j))
    """

    def __init__(self, mesh: Mesh, ops: FeOperators, model: ModelSpec, test_function):
        self.mesh, self.ops, self.model, self.phi = mesh, ops, model, test_function
        x = mesh.node_coords
        T = test_function.t_end
        scale = max(np.abs(test_function.value(x, 0.5 * T)).max(), np.abs(test_function.value(x, T / 3)).max(), 1e-300)
        edge = max(np.abs(test_function.value(x, 0.0)).max(), np.abs(test_function.value(x, T)).max())
        if edge > 1e-12 * scale:
            raise ConfigurationError("test function is not compactly supported in (0, t_end)")
        self.bary, self.weights = quadrature_rule(mesh.dim)
        self.times: list[float] = []
        self.samples: list[np.ndarray] = []

    def integrands(self, t, u, edges):
        mesh, ops, model = self.mesh, self.ops, self.model
        u = np.asarray(u).reshape(ops.n_nodes, model.m)
        x = mesh.node_coords
        phi = self.phi.value(x, t)
        phidot = self.phi.time_derivative(x, t)
        r1 = phidot @ (ops.mass_matrix @ u) - (ops.lumped_mass * phidot) @ u

        loc_u = u[mesh.elements]  # (K, d+1, m)
        F = flux(model, u)[mesh.elements]  # (K, d+1, m, d)
        uq = np.einsum("qa,kam->kqm", self.bary, loc_u)
        fq = flux(model, uq)
        If = np.einsum("qa,kamd->kqmd", self.bary, F)
        grad_phi = np.einsum("ka,kad->kd", phi[mesh.elements], mesh.element_gradients)
        r2 = np.einsum("q,k,kqmd,kd->m", self.weights, mesh.element_volumes, fq - If, grad_phi)

        i, j = ops.edges[:, 0], ops.edges[:, 1]
        term = edges.d[:, None] * (u[i] - u[j]) - edges.limited_flux
        r3 = (phi[i] - phi[j]) @ term
        return np.stack([r1, r2, r3])

    def __call__(self, t, u, edges, dt):
        self.times.append(float(t))
        self.samples.append(self.integrands(t, u, edges))

    def totals(self) -> np.ndarray:
        """Time integrals of (R1, R2, R3), shape (3, m)."""
        return trapezoid(self.times, np.asarray(self.samples))


@dataclass
class ConsistencyReport:
    h: list
    R1: list
    R2: list
    R3: list
    test_function: str = "cos(2 pi x) sin^4(pi t / T)"

    def slopes(self) -> dict:
        return {name: fit_slope(self.h, getattr(self, name)) for name in ("R1", "R2", "R3")}

    def header(self):
        return ["h", "R1", "R2", "R3"]

    def rows(self):
        return [[h, a, b, c] for h, a, b, c in zip(self.h, self.R1, self.R2, self.R3)]


def consistency_errors(monitor: ConsistencyMonitor) -> tuple[float, float, float]:
    """Absolute R1, R2, R3 (summed over components) from a finished run."""
    tot = np.abs(monitor.totals().sum(axis=1))
    return float(tot[0]), float(tot[1]), float(tot[2])


def fit_slope(h, values) -> float:
    """Least-squares slope of log|value| against log h; NaN if any value is zero."""
    v = np.abs(np.asarray(values, dtype=float))
    if np.any(v == 0) or len(v) < 2:
        return math.nan
    return float(np.polyfit(np.log(np.asarray(h, dtype=float)), np.log(v), 1)[0])


# -- errors and convergence tables -------------------------------------------

@dataclass
class ErrorNorms:
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray

    @property
    def total_l1(self) -> float:
        return float(self.l1.sum())

    @property
    def total_l2(self) -> float:
        return float(np.sqrt(np.sum(self.l2**2)))

    @property
    def total_linf(self) -> float:
        return float(self.linf.max())


def error_norms(mesh: Mesh, values, reference) -> ErrorNorms:
    """L1, L2, Linf of u_h - u_exact per component by degree-5 quadrature.

    ``reference(x)`` receives wrapped coordinates of shape (P, d) and
    returns (P, m) or (P,).
    """
    bary, w = quadrature_rule(mesh.dim)
    u = np.asarray(values, dtype=float).reshape(mesh.n_nodes, -1)
    xq = np.einsum("qa,kad->kqd", bary, mesh.element_vertices)
    K, Q, d = xq.shape
    ref = np.asarray(reference(np.mod(xq.reshape(-1, d), mesh.domain_extent)), dtype=float)
    ref = ref.reshape(K, Q, -1)
    uq = np.einsum("qa,kam->kqm", bary, u[mesh.elements])
    err = np.abs(uq - ref)
    vol = mesh.element_volumes
    l1 = np.einsum("q,k,kqm->m", w, vol, err)
    l2 = np.sqrt(np.einsum("q,k,kqm->m", w, vol, err**2))
    linf = err.max(axis=(0, 1))
    return ErrorNorms(l1, l2, linf)


@dataclass
class EocTable:
    h: list
    l1: list
    l2: list
    linf: list

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.h, self.h[1:])):
            raise ValueError("mesh sizes must be strictly decreasing")

    @staticmethod
    def _eoc(h, e):
        return [math.nan] + [
            math.log(e[k] / e[k + 1]) / math.log(h[k] / h[k + 1]) if e[k] > 0 and e[k + 1] > 0 else math.nan
            for k in range(len(e) - 1)
        ]

    @property
    def eoc_l1(self):
        return self._eoc(self.h, self.l1)

    @property
    def eoc_l2(self):
        return self._eoc(self.h, self.l2)

    @property
    def eoc_linf(self):
        return self._eoc(self.h, self.linf)

    def header(self):
        return ["h", "L1", "L2", "Linf", "EOC_L1", "EOC_L2", "EOC_Linf"]

    def rows(self):
        return [list(r) for r in zip(self.h, self.l1, self.l2, self.linf, self.eoc_l1, self.eoc_l2, self.eoc_linf)]


# -- probing and Cesaro averages --------------------------------------------

def probe_p1(mesh: Mesh, values, points) -> np.ndarray:
    """Evaluate the P1 field at arbitrary points (periodically wrapped)."""
    u = np.asarray(values, dtype=float).reshape(mesh.n_nodes, -1)
    pts = np.mod(np.atleast_2d(np.asarray(points, dtype=float)), mesh.domain_extent)
    out = np.full((len(pts), u.shape[1]), np.nan)
    X = mesh.element_vertices
    B = np.linalg.inv(np.concatenate([np.ones(X.shape[:2] + (1,)), X], axis=2))
    shifts = [np.zeros(mesh.dim)]
    for a in range(mesh.dim):
        for s in list(shifts):
            e = np.zeros(mesh.dim)
            e[a] = mesh.domain_extent[a]
            shifts.append(s + e)
    remaining = np.arange(len(pts))
    for shift in shifts:
        if remaining.size == 0:
            break
        p = pts[remaining] + shift
        for start in range(0, len(p), 256):
            chunk = p[start : start + 256]
            hom = np.concatenate([np.ones((len(chunk), 1)), chunk], axis=1)
            lam = np.einsum("pc,kca->pka", hom, B)
            inside = np.all(lam >= -1e-12, axis=2)
            has = inside.any(axis=1)
            k = inside.argmax(axis=1)
            sel = np.flatnonzero(has)
            idx = remaining[start + sel]
            todo = np.isnan(out[idx, 0])
            sel, idx = sel[todo], idx[todo]
            lam_sel = lam[sel, k[sel]]
            out[idx] = np.einsum("pa,pam->pm", lam_sel, u[mesh.elements[k[sel]]])
        remaining = remaining[np.isnan(out[remaining, 0])]
    if remaining.size:
        raise ValueError(f"{remaining.size} probe points outside the mesh")
    return out


def cesaro_average(fields) -> np.ndarray:
    """Arithmetic mean of fields sampled on a shared probe grid."""
    fields = [np.asarray(f, dtype=float) for f in fields]
    if not fields:
        raise ValueError("empty field list")
    shape = fields[0].shape
    if any(f.shape != shape for f in fields):
        raise ValueError("fields live on different probe grids")
    return np.mean(np.stack(fields), axis=0)


def cesaro_differences(fields, volume: float = 1.0) -> list[float]:
    """||Avg_N - Avg_{N-1}||_L1 for N = 2..len(fields) on a uniform periodic probe grid."""
    fields = [np.asarray(f, dtype=float) for f in fields]
    out = []
    for N in range(2, len(fields) + 1):
        diff = cesaro_average(fields[:N]) - cesaro_average(fields[: N - 1])
        out.append(float(np.abs(diff).sum() * volume / diff.shape[0]))
    return out


# -- Euler non-degeneracy ----------------------------------------------------

@dataclass
class NondegeneracyReport:
    times: list
    min_density: list
    max_energy: list
    min_pressure: list
    density_ok: list
    energy_ok: list
    velocity_ok: list

    @property
    def ok(self) -> bool:
        return all(self.density_ok) and all(self.energy_ok) and all(self.velocity_ok)

    @property
    def positive(self) -> bool:
        return min(self.min_density) > 0 and min(self.min_pressure) > 0


def nondegeneracy_monitor(trajectory, model: ModelSpec, params: AdmissibilityParams) -> NondegeneracyReport:
    """Per-snapshot min rho, max E, min p and the bounds rho >= rho_floor, E <= E_cap."""
    if model.kind != "euler":
        raise ValueError("non-degeneracy monitor applies to the Euler model")
    rep = NondegeneracyReport([], [], [], [], [], [], [])
    vmax_sq = 2.0 * params.energy_cap / params.rho_floor
    for snap in trajectory.snapshots:
        u = np.asarray(snap.values).reshape(-1, model.m)
        rho = u[:, 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            p = pressure(model, u)
            v2 = np.sum(u[:, 1 : 1 + model.dim] ** 2, axis=1) / rho**2
        rep.times.append(snap.time)
        rep.min_density.append(float(rho.min()))
        rep.max_energy.append(float(u[:, -1].max()))
        rep.min_pressure.append(float(np.nanmin(p)))
        rep.density_ok.append(bool(rho.min() >= params.rho_floor))
        rep.energy_ok.append(bool(u[:, -1].max() <= params.energy_cap))
        rep.velocity_ok.append(bool(np.all(rho > 0) and np.nanmax(v2) <= vmax_sq))
    return rep


def seminorm_equivalence_ratio(mesh: Mesh, ops: FeOperators, v) -> float:
    """d_h(v, v) / (h_max |v|_{H1}^2)."""
    v = np.asarray(v, dtype=float).reshape(mesh.n_nodes, -1)
    return d_h_form(ops, v, v) / (mesh.h_max * h1_seminorm_sq(mesh, v, v.shape[1]))
