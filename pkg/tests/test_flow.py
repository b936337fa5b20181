import math

import numpy as np
import pytest

from hjcheck.errors import DomainError, InputError, IntegrationError
from hjcheck.flow import FlowSpec, Trajectory, compare, integrate, lift_and_compare, read_csv
from hjcheck.geometry import ScalarField, hamiltonian_field
from hjcheck.hj import Section
from hjcheck.models import build_model, canonical_bivector

CAN1 = canonical_bivector(1)
OSC = ScalarField(lambda z: 0.5 * (z[0] ** 2 + z[1] ** 2), lambda z: np.array([z[0], z[1]]))


def oscillator_spec(steps, t1=2 * math.pi, z0=(1.0, 0.0)):
    return FlowSpec(lambda z: hamiltonian_field(CAN1, OSC, z), 0.0, t1, steps, list(z0))


def energy_section(energy=1.0):
    return Section(CAN1.chart, lambda x: np.array([math.sqrt(2 * energy - x[0] ** 2)]))


def test_exponential_growth():
    traj = integrate(FlowSpec(lambda y: y, 0.0, 1.0, 100, [1.0]))
    assert traj.final[0] == pytest.approx(math.e, abs=1e-8)
    assert traj.times[-1] == 1.0 and traj.times.size == 101


def test_zero_field_is_constant():
    traj = integrate(FlowSpec(lambda y: np.zeros_like(y), 0.0, 3.0, 17, [0.2, -1.0, 4.0]))
    assert np.all(traj.states == np.array([0.2, -1.0, 4.0]))


def test_oscillator_closes_and_conserves_energy():
    traj = integrate(oscillator_spec(10_000))
    np.testing.assert_allclose(traj.final, [1.0, 0.0], atol=1e-6)
    assert abs(OSC(traj.final) - OSC(traj.states[0])) <= 1e-8


def test_rk4_order():
    errors = []
    for steps in (50, 100):
        errors.append(np.linalg.norm(integrate(oscillator_spec(steps)).final - [1.0, 0.0]))
    order = math.log2(errors[0] / errors[1])
    assert 3.5 <= order <= 4.5


def test_flow_spec_validation():
    with pytest.raises(InputError):
        FlowSpec(lambda y: y, 0.0, 1.0, 0, [1.0])
    with pytest.raises(InputError):
        FlowSpec(lambda y: y, 1.0, 1.0, 10, [1.0])
    with pytest.raises(IntegrationError):
        integrate(FlowSpec(lambda y: np.array([np.inf]), 0.0, 1.0, 2, [1.0]))
    with pytest.raises(InputError):
        integrate(FlowSpec(lambda y: np.zeros(2), 0.0, 1.0, 2, [1.0]))


def test_compare_examples():
    t = np.linspace(0, 1, 5)
    a = Trajectory(t, np.tile([1.0, 2.0], (5, 1)))
    assert compare(a, a) == 0.0
    b = Trajectory(t, np.tile([1.25, 2.0], (5, 1)))
    assert compare(a, b) == 0.25
    assert compare(a, b, indices=[1]) == 0.0
    with pytest.raises(InputError):
        compare(a, Trajectory(np.linspace(0, 2, 5), a.states))


def test_lift_and_compare_oscillator():
    result = lift_and_compare(CAN1, OSC, energy_section(), [0.5], 0.5, 1000)
    assert result.max_error <= 1e-6
    assert not result.exited
    # both legs follow the closed-form orbit q = sin(t + asin(0.5)) * sqrt(2)
    phase = math.asin(0.5 / math.sqrt(2))
    exact_q = math.sqrt(2) * np.sin(result.base.times + phase)
    np.testing.assert_allclose(result.base.states[:, 0], exact_q, atol=1e-9)


def test_lift_and_compare_constant_hamiltonian():
    result = lift_and_compare(CAN1, ScalarField.constant(2.0), energy_section(), [0.3], 1.0, 10)
    assert result.max_error == 0.0


def test_lift_and_compare_nonholonomic_straight_line():
    model = build_model("nonholonomic-particle")
    detail = model.detail
    sec = detail.section_from_one_form(lambda q: np.array([0.0, 1.0, 0.0]))
    result = lift_and_compare(model.bivector, model.hamiltonian, sec, [0.0, 0.0, 0.0], 1.0, 200)
    assert result.max_error <= 1e-6
    t = result.lifted.times
    expected = np.column_stack([0 * t, t, 0 * t, 0 * t, np.ones_like(t)])
    np.testing.assert_allclose(result.lifted.states, expected, atol=1e-6)


def test_domain_exit_is_flagged():
    # the base curve runs to q = sqrt(2), where the section stops being real
    result = lift_and_compare(CAN1, OSC, energy_section(), [1.3], 1.0, 200)
    assert result.exited
    assert 0.0 < result.exit_time < 1.0
    assert result.base.times[-1] < result.exit_time + 1e-12
    assert result.base.times.size == result.upstairs.times.size == result.lifted.times.size

    def bounded(x):
        if x[0] >= 1.0:
            raise DomainError("left the unit interval")
        return np.array([1.0])

    with pytest.raises(DomainError):
        integrate(FlowSpec(bounded, 0.0, 5.0, 50, [0.0]))
    stopped = integrate(FlowSpec(bounded, 0.0, 5.0, 50, [0.0]), stop_on_domain_exit=True)
    assert stopped.exited and stopped.final[0] < 1.0


def test_csv_round_trip(tmp_path):
    traj = integrate(oscillator_spec(37, t1=1.3, z0=(0.1, 0.7)))
    path = tmp_path / "osc.csv"
    traj.to_csv(path, ["q1", "p1"])
    assert path.read_text().splitlines()[0] == "t,q1,p1"
    names, back = read_csv(path)
    assert names == ["q1", "p1"]
    assert np.array_equal(back.times, traj.times) and np.array_equal(back.states, traj.states)
    with pytest.raises(InputError):
        traj.to_csv(path, ["q1"])


def test_time_coordinate_advances_exactly():
    model = build_model("time-oscillator", {"drive": 0.4}).detail
    t0 = 0.25
    traj = integrate(FlowSpec(model.evolution_field, t0, t0 + 2.0, 64, [t0, 0.3, -0.1]))
    ulp = np.spacing(traj.times[-1])
    for i, t in enumerate(traj.times):
        assert abs(traj.states[i, 0] - t) <= (i + 1) * ulp
