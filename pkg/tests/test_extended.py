import math

import numpy as np
import pytest

from hjcheck.geometry import FiberedBivector, ScalarField, hamiltonian_field, rank_at, subspace_lagrangian_check
from hjcheck.hj import Section, graph_tangent
from hjcheck.models import (
    build_forced,
    build_model,
    build_time_dependent,
    canonical_bivector,
    forced_section_check,
    mu_relatedness_defect,
    tdep_hj_check,
)
from hjcheck.models.canonical import cotangent_chart


def osc_td(omega=1.0, drive=0.0):
    def h(u):
        t, q, p = u
        return 0.5 * (p * p + omega ** 2 * q * q) - drive * q * math.cos(t)

    def grad(u):
        t, q, p = u
        return np.array([drive * q * math.sin(t), omega ** 2 * q - drive * math.cos(t), p])

    return ScalarField(h, grad)


def free_force(c):
    return build_forced(1, ScalarField(lambda u: 0.5 * u[2] ** 2, lambda u: np.array([0.0, 0.0, u[2]])),
                        lambda u: np.array([c]))


def test_extended_chart_and_block():
    model = build_time_dependent(canonical_bivector(1), osc_td())
    assert model.chart.names == ("t", "q1", "e", "p1")
    m = model.bivector.matrix([0.3, 0.1, 2.0, -0.4])
    np.testing.assert_array_equal(m[np.ix_([0, 2], [0, 2])], [[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(m[np.ix_([1, 3], [1, 3])], canonical_bivector(1).matrix([0, 0]))


def test_zero_inner_gives_rank_two():
    inner = FiberedBivector.constant(cotangent_chart(2), np.zeros((4, 4)))
    model = build_time_dependent(inner, ScalarField.constant(0.0))
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert rank_at(model.bivector, rng.normal(size=6)) == 2


@pytest.mark.parametrize("model", [
    build_time_dependent(canonical_bivector(1), osc_td(1.3, 0.7)),
    build_model("time-oscillator", {"omega": 2.0, "drive": 0.5}).detail,
    build_time_dependent(canonical_bivector(2), ScalarField(
        lambda u: u[0] * u[1] * u[4] + u[3] ** 2,
        lambda u: np.array([u[1] * u[4], u[0] * u[4], 0.0, 2 * u[3], u[0] * u[1]]))),
])
def test_projection_identity(model):
    rng = np.random.default_rng(1)
    for _ in range(100):
        w = rng.uniform(-2, 2, size=model.chart.dim)
        pushed = model.mu_push(hamiltonian_field(model.bivector, model.h_ext, w))
        np.testing.assert_allclose(pushed, model.evolution_field(model.mu(w)), atol=1e-12, rtol=0)


def separable_section(energy=1.0, drift=0.0):
    chart = build_model("time-oscillator").chart
    return Section(chart, lambda x: np.array([-energy + drift * x[0], math.sqrt(2 * energy - x[1] ** 2)]))


def test_tdep_separable_solution():
    model = build_model("time-oscillator").detail
    coefficients = []
    for t in np.linspace(0, 1, 4):
        for q in np.linspace(-1, 1, 5):
            res = tdep_hj_check(model, separable_section(), [t, q])
            assert res.residual <= 1e-8
            assert res.lagrangian_residual <= 1e-8
            coefficients.append(res.coefficient)
            assert mu_relatedness_defect(model, separable_section(), [t, q]) <= 1e-6
    assert max(coefficients) - min(coefficients) <= 1e-8
    assert coefficients[0] == pytest.approx(0.0, abs=1e-8)


def test_tdep_coefficient_recovers_e_multiplier():
    # e = -E + alpha t shifts h_ext o gamma by alpha t; B = -alpha compensates
    model = build_model("time-oscillator").detail
    res = tdep_hj_check(model, separable_section(drift=0.3), [0.5, 0.2])
    assert res.residual <= 1e-8
    assert res.coefficient == pytest.approx(-0.3, abs=1e-7)


def test_tdep_reduces_and_detects_failure():
    h_q = ScalarField(lambda u: u[1], lambda u: np.array([0.0, 1.0, 0.0]))
    model = build_time_dependent(canonical_bivector(1), h_q)
    res = tdep_hj_check(model, Section.constant(model.chart, [0.0, 0.0]), [0.2, 0.4])
    assert res.residual == pytest.approx(1.0)
    osc = build_time_dependent(canonical_bivector(1), osc_td())
    # time-independent section with d(h o gamma) = 0
    sec = Section(osc.chart, lambda x: np.array([0.0, math.sqrt(2 - x[1] ** 2)]))
    assert tdep_hj_check(osc, sec, [0.7, -0.3]).residual <= 1e-8


def test_forced_components_and_field():
    model = free_force(2.0)
    m = model.bivector.matrix([0.0, 0.5, 1.0, -0.3])
    assert m[0, 2] == -1.0          # Lambda(dt, de)
    assert m[2, 3] == -2.0          # Lambda(de, dp) = -F
    assert m[1, 3] == -1.0          # Lambda(dq, dp)
    np.testing.assert_array_equal(model.evolution_field([0.0, 0.5, -0.3]), [1.0, -0.3, -2.0])
    w = np.array([0.1, 0.5, 3.0, -0.3])
    pushed = model.mu_push(hamiltonian_field(model.bivector, model.h_ext, w))
    np.testing.assert_allclose(pushed, model.evolution_field(model.mu(w)), atol=1e-14)


def test_forced_without_force_is_time_dependent_model():
    h = ScalarField(lambda u: 0.5 * u[2] ** 2 + u[1] ** 3)
    forced = build_forced(1, h, lambda u: np.zeros(1))
    plain = build_time_dependent(canonical_bivector(1), h)
    w = np.array([0.3, 0.2, -1.0, 0.7])
    np.testing.assert_array_equal(forced.bivector.matrix(w), plain.bivector.matrix(w))


def test_forced_inverse_and_closed_form():
    rng = np.random.default_rng(6)
    model = build_forced(2, ScalarField(lambda u: u[3] ** 2 + u[4] ** 2),
                         lambda u: np.array([np.sin(u[0]) + u[1], u[2] * u[3]]))
    for _ in range(100):
        w = rng.uniform(-2, 2, size=6)
        lam = model.bivector.matrix(w)
        omega = model.omega(w)
        np.testing.assert_allclose(omega @ lam, np.eye(6), atol=1e-10)
        np.testing.assert_allclose(omega, model.omega_closed_form(w), atol=1e-10)


def test_forced_section_examples():
    c, a = 1.5, 0.7
    model = free_force(c)
    moving = Section(model.chart, lambda x: np.array([np.cos(x[0]), a - c * x[0]]))
    fixed = Section(model.chart, lambda x: np.array([0.0, a]))
    assert forced_section_check(model, moving, [0.4, -0.2]) <= 1e-8
    assert forced_section_check(model, fixed, [0.4, -0.2]) == pytest.approx(abs(c))
    free = free_force(0.0)
    closed = Section(free.chart, lambda x: np.array([x[1], x[0]]))
    assert forced_section_check(free, closed, [0.3, 0.3]) <= 1e-8


def test_forced_section_check_agrees_with_subspace_test():
    rng = np.random.default_rng(14)
    for _ in range(500):
        c = rng.uniform(-2, 2)
        model = free_force(c)
        s = rng.normal(size=(2, 2))
        jac = s + s.T
        jac[1, 0] -= c
        if rng.random() < 0.5:
            jac[0, 1] += rng.uniform(0.5, 1.5)
        y0 = rng.normal(size=2)
        sec = Section(model.chart, lambda x, j=jac, y0=y0: y0 + j @ x, lambda x, j=jac: j)
        x = rng.uniform(-1, 1, size=2)
        lhs = forced_section_check(model, sec, x) <= 1e-8
        rhs = subspace_lagrangian_check(model.bivector, sec.point(x), graph_tangent(sec, x)).holds
        assert lhs == rhs
