from math import factorial

import numpy as np
import pytest

from mclfem.diagnostics import (
    ConfigurationError,
    ConsistencyMonitor,
    CosineBumpTestFunction,
    DiagnosticsMonitor,
    DiagnosticsRecord,
    EocTable,
    bv_integrand,
    cesaro_average,
    cesaro_differences,
    conserved_totals,
    consistency_errors,
    error_norms,
    fit_slope,
    seminorm_equivalence_ratio,
    nondegeneracy_monitor,
    probe_p1,
    quadrature_rule,
    total_entropy,
    trapezoid,
    weak_bv_functional,
)
from mclfem.mesh import assemble_fe_operators, build_uniform_periodic_mesh
from mclfem.models import AdmissibilityParams, ModelSpec, conserved_from_primitive
from mclfem.scheme import LimiterConfig, semidiscrete_rhs
from mclfem.timestepping import StateField, TimeIntegratorConfig, Trajectory, integrate
from oracles import dense

BURGERS = ModelSpec.burgers(1)


def setup(dim, n, extent=None):
    mesh = build_uniform_periodic_mesh(dim, n, extent or [1.0] * dim)
    return mesh, assemble_fe_operators(mesh)


def test_quadrature_exact_for_degree_five():
    for dim in (1, 2):
        bary, w = quadrature_rule(dim)
        assert w.sum() == pytest.approx(1.0, rel=1e-14)
        # reference simplex moments: int l0^a l1^b = a! b! d! / (a + b + d)!
        for a, b in [(5, 0), (3, 2), (2, 2), (4, 1)]:
            exact = factorial(a) * factorial(b) * factorial(dim) / factorial(a + b + dim)
            assert np.sum(w * bary[:, 0] ** a * bary[:, 1] ** b) == pytest.approx(exact, rel=1e-12)


def test_total_entropy_examples():
    for dim in (1, 2):
        mesh, ops = setup(dim, 8)
        c = 0.7
        u = np.full(ops.n_nodes, c)
        assert total_entropy(ops, ModelSpec.burgers(dim), u) == pytest.approx(c**2 / 2, rel=1e-14)
        shifted = total_entropy(ops, ModelSpec.burgers(dim), u, offset=3.0)
        assert shifted - total_entropy(ops, ModelSpec.burgers(dim), u) == pytest.approx(3.0, rel=1e-14)
    model = ModelSpec.euler(1)
    mesh, ops = setup(1, 8)
    u = conserved_from_primitive(model, np.ones(8), np.zeros((8, 1)), np.ones(8))
    assert total_entropy(ops, model, u) == pytest.approx(0.0, abs=1e-15)


def test_bv_integrand_examples():
    mesh, ops = setup(1, 4)
    assert bv_integrand(ops, np.full(4, 2.0)) == 0.0
    assert bv_integrand(ops, np.array([0.0, 1.0, 0.0, 0.0])) == pytest.approx(2.0, abs=1e-15)
    mesh, ops = setup(2, 6)
    v = np.random.default_rng(0).random(ops.n_nodes)
    assert bv_integrand(ops, v) >= 0


def test_weak_bv_functional_trapezoid():
    mesh, ops = setup(1, 4)
    bump = np.array([0.0, 1.0, 0.0, 0.0])
    traj = Trajectory(snapshots=[StateField(bump, 0.0), StateField(2 * bump, 0.5), StateField(bump, 1.5)])
    bv = weak_bv_functional(ops, traj)
    # integrand 2, 8, 2 at t = 0, 0.5, 1.5
    assert bv.integral == pytest.approx(0.5 * 0.5 * 10 + 0.5 * 1.0 * 10, rel=1e-14)
    with pytest.raises(ValueError):
        weak_bv_functional(ops, Trajectory())


def test_trapezoid():
    assert trapezoid([0.0], [3.0]) == 0.0
    assert trapezoid([0.0, 1.0, 3.0], [1.0, 1.0, 2.0]) == pytest.approx(4.0)


def test_conservation_drift_normalisation():
    rec = DiagnosticsRecord(["rho", "m"])
    rec.conserved_totals = [np.array([2.0, 0.0]), np.array([2.0 + 2e-12, 1e-13])]
    rec.absolute_totals = [np.array([2.0, 0.5]), np.array([2.0, 0.5])]
    np.testing.assert_allclose(rec.conservation_drift(), [1e-12, 2e-13], rtol=1e-3)


def _burgers_run(n=64, mode="bv_entropy", t_end=0.3, monitors=()):
    mesh, ops = setup(1, n)
    u = np.sin(2 * np.pi * mesh.node_coords[:, :1]) + 0.5
    mon = DiagnosticsMonitor(ops, BURGERS, AdmissibilityParams())
    cfg = TimeIntegratorConfig(method="ssp_rk3", cfl=0.5, t_end=t_end)
    traj = integrate(StateField(u, 0.0), ops, BURGERS, LimiterConfig(mode=mode), cfg, AdmissibilityParams(),
                     [mon, *monitors])
    return mesh, ops, traj, mon.record


def test_monitor_record_through_shock():
    mesh, ops, traj, rec = _burgers_run()
    assert len(rec.times) == len(traj.steps) + 1
    assert np.max(rec.conservation_drift()) <= 1e-11
    inc = rec.entropy_increments()
    assert np.all(inc <= 1e-10 * abs(rec.total_entropy[0]))
    assert np.nanmax(rec.max_entropy_residual) <= 1e-12
    assert all(b >= 0 for b in rec.bv_integrand)
    rows = list(rec.rows())
    assert len(rows) == len(rec.times) and all(len(r) == len(rec.header()) for r in rows)
    traj.diagnostics = rec
    assert weak_bv_functional(ops, traj).integral == pytest.approx(rec.bv_time_integral)


def test_cosine_bump_derivatives():
    phi = CosineBumpTestFunction(0.4, [1.0, 2.0])
    rng = np.random.default_rng(0)
    x = rng.random((20, 2))
    t = 0.13
    eps = 1e-6
    dt = (phi.value(x, t + eps) - phi.value(x, t - eps)) / (2 * eps)
    np.testing.assert_allclose(phi.time_derivative(x, t), dt, rtol=1e-6, atol=1e-8)
    for a in range(2):
        e = np.zeros(2)
        e[a] = eps
        g = (phi.value(x + e, t) - phi.value(x - e, t)) / (2 * eps)
        np.testing.assert_allclose(phi.gradient(x, t)[:, a], g, rtol=1e-6, atol=1e-8)
    assert np.all(phi.value(x, 0.0) == 0.0) and np.all(phi.value(x, 0.4) < 1e-12)


class _Zero:
    t_end = 1.0

    def value(self, x, t):
        return np.zeros(len(np.atleast_2d(x)))

    time_derivative = value


class _NotCompact(_Zero):
    def value(self, x, t):
        return np.ones(len(np.atleast_2d(x)))


def test_consistency_monitor_configuration():
    mesh, ops = setup(1, 16)
    with pytest.raises(ConfigurationError):
        ConsistencyMonitor(mesh, ops, BURGERS, _NotCompact())
    mon = ConsistencyMonitor(mesh, ops, BURGERS, _Zero())
    u = np.sin(2 * np.pi * mesh.node_coords[:, :1])
    _, edges = semidiscrete_rhs(ops, BURGERS, u, LimiterConfig(mode="bv_entropy"), AdmissibilityParams())
    assert np.all(mon.integrands(0.3, u, edges) == 0.0)


def test_consistency_integrands_against_oracles():
    mesh, ops = setup(1, 16)
    phi = CosineBumpTestFunction(1.0, [1.0])
    mon = ConsistencyMonitor(mesh, ops, BURGERS, phi)
    rng = np.random.default_rng(2)
    u = rng.uniform(-1, 1, (16, 1))
    t = 0.4
    _, edges = semidiscrete_rhs(ops, BURGERS, u, LimiterConfig(mode="bv_entropy"), AdmissibilityParams())
    r1, r2, r3 = mon.integrands(t, u, edges)[:, 0]
    M, C = dense(ops)
    x = mesh.node_coords
    pd = phi.time_derivative(x, t)
    assert r1 == pytest.approx(pd @ (M - np.diag(M.sum(axis=1))) @ u[:, 0], rel=1e-12, abs=1e-14)
    # int (u_h^2 - I_h u^2)/2 on a segment is -h (a - b)^2 / 12; grad phi_h is constant per element
    p = phi.value(x, t)
    ref2 = 0.0
    for e, (a, b) in enumerate(mesh.elements):
        xa, xb = mesh.element_vertices[e, :, 0]
        ref2 += (p[b] - p[a]) / (xb - xa) * (-(xb - xa) * (u[a, 0] - u[b, 0]) ** 2 / 12)
    assert r2 == pytest.approx(ref2, rel=1e-12)
    i, j = ops.edges.T
    ref3 = np.sum((p[i] - p[j]) * (1 - edges.alpha) * edges.d * (u[i, 0] - u[j, 0]))
    assert r3 == pytest.approx(ref3, rel=1e-12)


def test_consistency_target_mode_r3_zero_and_linear_r2_zero():
    mesh, ops = setup(1, 32)
    phi = CosineBumpTestFunction(0.1, [1.0])
    mon = ConsistencyMonitor(mesh, ops, BURGERS, phi)
    cfg = TimeIntegratorConfig(cfl=0.5, t_end=0.1)
    u = StateField(np.sin(2 * np.pi * mesh.node_coords[:, :1]), 0.0)
    integrate(u, ops, BURGERS, LimiterConfig(mode="mcl", alpha_override=1.0), cfg, AdmissibilityParams(), [mon])
    assert consistency_errors(mon)[2] == 0.0
    adv = ModelSpec.advection([1.0])
    mon = ConsistencyMonitor(mesh, ops, adv, phi)
    integrate(u, ops, adv, LimiterConfig(mode="mcl"), cfg, AdmissibilityParams(), [mon])
    assert consistency_errors(mon)[1] == pytest.approx(0.0, abs=1e-15)


def test_fit_slope():
    h = [0.1, 0.05, 0.025]
    assert fit_slope(h, [2 * x**1.5 for x in h]) == pytest.approx(1.5, rel=1e-12)
    assert np.isnan(fit_slope(h, [0.0, 0.0, 0.0]))


def test_error_norms():
    mesh, ops = setup(1, 16)
    err = error_norms(mesh, np.full(16, 0.3), lambda x: np.full(len(x), 0.3))
    assert err.total_l1 == 0.0 and err.total_linf == 0.0
    l2 = []
    for n in (16, 32, 64):
        mesh, _ = setup(1, n)
        f = lambda x: np.sin(2 * np.pi * x[:, 0])  # noqa: E731
        e = error_norms(mesh, f(mesh.node_coords), f)
        assert e.total_l1 <= e.total_l2 + 1e-15
        l2.append(e.total_l2)
    assert np.log2(l2[0] / l2[1]) == pytest.approx(2.0, abs=0.05)
    assert np.log2(l2[1] / l2[2]) == pytest.approx(2.0, abs=0.05)


def test_error_norms_2d_constant_offset():
    mesh, _ = setup(2, 4, [2.0, 1.0])
    e = error_norms(mesh, np.zeros((16, 2)), lambda x: np.tile([1.0, -2.0], (len(x), 1)))
    np.testing.assert_allclose(e.l1, [2.0, 4.0], rtol=1e-13)
    np.testing.assert_allclose(e.l2, [np.sqrt(2.0), np.sqrt(8.0)], rtol=1e-13)


def test_eoc_table():
    t = EocTable([0.1, 0.05, 0.025], [1.0, 0.25, 0.0625], [1.0, 0.5, 0.25], [1.0, 1.0, 1.0])
    assert np.isnan(t.eoc_l1[0])
    np.testing.assert_allclose(t.eoc_l1[1:], [2.0, 2.0])
    np.testing.assert_allclose(t.eoc_l2[1:], [1.0, 1.0])
    np.testing.assert_allclose(t.eoc_linf[1:], [0.0, 0.0])
    assert len(t.rows()) == 3 and len(t.rows()[0]) == len(t.header())
    with pytest.raises(ValueError):
        EocTable([0.1, 0.1], [1, 1], [1, 1], [1, 1])


def test_probe_p1():
    mesh, _ = setup(1, 8)
    v = np.arange(8.0)
    np.testing.assert_allclose(probe_p1(mesh, v, mesh.node_coords)[:, 0], v)
    np.testing.assert_allclose(probe_p1(mesh, v, [[1 / 16], [15 / 16], [1.0 + 1 / 16]])[:, 0], [0.5, 3.5, 0.5])
    mesh, _ = setup(2, 4)
    x = mesh.node_coords
    v = np.cos(2 * np.pi * x[:, 0]) + x[:, 1]
    np.testing.assert_allclose(probe_p1(mesh, v, x + [1.0, 0.0])[:, 0], v, atol=1e-14)


def test_cesaro_examples():
    f = np.random.default_rng(0).random(10)
    np.testing.assert_allclose(cesaro_average([f, f, f]), f, rtol=1e-15)
    np.testing.assert_array_equal(cesaro_average([np.zeros(4), np.full(4, 2.0)]), np.ones(4))
    with pytest.raises(ValueError):
        cesaro_average([])
    with pytest.raises(ValueError):
        cesaro_average([np.zeros(4), np.zeros(5)])
    # Avg_2 - Avg_1 = (f2 - f1)/2, Avg_3 - Avg_2 = (f3 - Avg_2)/3
    d = cesaro_differences([np.zeros(4), np.full(4, 2.0), np.full(4, 4.0)])
    np.testing.assert_allclose(d, [1.0, 1.0])


def test_nondegeneracy_monitor():
    model = ModelSpec.euler(1)
    u = conserved_from_primitive(model, np.ones(8), np.zeros((8, 1)), np.ones(8))
    params = AdmissibilityParams(rho_floor=0.5, energy_cap=10.0)
    rep = nondegeneracy_monitor(Trajectory([StateField(u, 0.0)]), model, params)
    assert rep.ok and rep.positive
    assert rep.min_density == [1.0] and rep.max_energy == pytest.approx([2.5], rel=1e-15)
    bad = u.copy()
    bad[3, 0] = -0.1
    rep = nondegeneracy_monitor(Trajectory([StateField(u, 0.0), StateField(bad, 0.1)]), model, params)
    assert rep.density_ok == [True, False] and not rep.ok and not rep.positive
    with pytest.raises(ValueError):
        nondegeneracy_monitor(Trajectory([StateField(u, 0.0)]), BURGERS, params)


def test_seminorm_equivalence_ratio_one_dimensional_identity():
    mesh, ops = setup(1, 32)
    v = np.random.default_rng(0).random(32)
    assert seminorm_equivalence_ratio(mesh, ops, v) == pytest.approx(1.0, rel=1e-12)


def test_conserved_totals():
    mesh, ops = setup(2, 4, [2.0, 1.0])
    assert conserved_totals(ops, np.full((16, 2), [1.0, 3.0])) == pytest.approx([2.0, 6.0])
