import numpy as np
import pytest

from mclfem.initial import INITIAL_CONDITIONS, InitialConditionError, initial_profile, interpolate_initial_condition
from mclfem.mesh import build_uniform_periodic_mesh
from mclfem.models import AdmissibilityParams, ModelSpec, conserved_from_primitive


def test_constant_and_sine():
    mesh = build_uniform_periodic_mesh(1, 16, [1.0])
    u = interpolate_initial_condition(mesh, ModelSpec.burgers(1), "constant", {"value": 0.3})
    assert np.all(u.values == 0.3) and u.time == 0.0
    u = interpolate_initial_condition(mesh, ModelSpec.advection([1.0]), "sine_wave")
    np.testing.assert_array_equal(u.values[:, 0], np.sin(2 * np.pi * mesh.node_coords[:, 0]))


def test_sod_states():
    model = ModelSpec.euler(1)
    mesh = build_uniform_periodic_mesh(1, 8, [2.0])
    u = interpolate_initial_condition(mesh, model, "sod").values
    left = mesh.node_coords[:, 0] < 1.0
    L = conserved_from_primitive(model, np.array([1.0]), np.array([[0.0]]), np.array([1.0]))[0]
    R = conserved_from_primitive(model, np.array([0.125]), np.array([[0.0]]), np.array([0.1]))[0]
    np.testing.assert_allclose(u[left], np.tile(L, (left.sum(), 1)))
    np.testing.assert_allclose(u[~left], np.tile(R, ((~left).sum(), 1)))


def test_step_fractions():
    mesh = build_uniform_periodic_mesh(1, 8, [2.0])
    u = interpolate_initial_condition(mesh, ModelSpec.advection([1.0]), "step").values[:, 0]
    np.testing.assert_array_equal(u, [0, 0, 1, 1, 1, 1, 0, 0])


def test_blast_and_kelvin_helmholtz():
    model = ModelSpec.euler(2)
    mesh = build_uniform_periodic_mesh(2, 16, [1.0, 1.0])
    u = interpolate_initial_condition(mesh, model, "euler_blast").values
    assert np.all(u[:, 0] == 1.0) and u[:, 3].max() > u[:, 3].min()
    a = interpolate_initial_condition(mesh, model, "kelvin_helmholtz_2d", {"perturbation": "random"}, seed=4)
    b = interpolate_initial_condition(mesh, model, "kelvin_helmholtz_2d", {"perturbation": "random"}, seed=4)
    c = interpolate_initial_condition(mesh, model, "kelvin_helmholtz_2d", {"perturbation": "random"}, seed=5)
    assert np.array_equal(a.values, b.values) and not np.array_equal(a.values, c.values)
    with pytest.raises(InitialConditionError):
        interpolate_initial_condition(mesh, model, "kelvin_helmholtz_2d", {"perturbation": "noise"})


def test_inadmissible_value_names_node():
    mesh = build_uniform_periodic_mesh(1, 8, [1.0])
    with pytest.raises(InitialConditionError, match=r"node \d+ x="):
        interpolate_initial_condition(mesh, ModelSpec.euler(1), "sine_wave")
    with pytest.raises(InitialConditionError, match="node"):
        interpolate_initial_condition(mesh, ModelSpec.burgers(1), "step", {"high": 2.0},
                                      AdmissibilityParams(scalar_bounds=(0.0, 1.0)))


def test_validation():
    mesh = build_uniform_periodic_mesh(1, 8, [1.0])
    with pytest.raises(InitialConditionError):
        interpolate_initial_condition(mesh, ModelSpec.burgers(1), "vortex")
    with pytest.raises(InitialConditionError):
        interpolate_initial_condition(mesh, ModelSpec.burgers(1), "sod")
    with pytest.raises(InitialConditionError):
        interpolate_initial_condition(mesh, ModelSpec.burgers(1), "sine_wave", {"amplitude": "big"})
    assert set(INITIAL_CONDITIONS) == {"constant", "sine_wave", "step", "composite_smooth", "sod", "euler_blast",
                                       "kelvin_helmholtz_2d"}


def test_profile_matches_interpolant():
    mesh = build_uniform_periodic_mesh(2, 8, [1.0, 2.0])
    model = ModelSpec.burgers(2)
    u0 = initial_profile(model, "composite_smooth", {"amplitude": 0.5}, [1.0, 2.0])
    u = interpolate_initial_condition(mesh, model, "composite_smooth", {"amplitude": 0.5})
    np.testing.assert_array_equal(u0(mesh.node_coords), u.values)
