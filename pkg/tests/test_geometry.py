import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjcheck import linalg
from hjcheck.errors import DomainError, InputError
from hjcheck.geometry import (
    FiberedBivector,
    FiberedChart,
    ScalarField,
    characteristic_subspace,
    fd_gradient,
    hamiltonian_field,
    lemma_check,
    rank_at,
    rank_scan,
    sharp_apply,
    subspace_lagrangian_check,
)
from hjcheck.hj import Section, graph_tangent
from hjcheck.models import build_model, canonical_bivector
from hjcheck.models.registry import REGISTRY

OSC = ScalarField(lambda z: 0.5 * (z[0] ** 2 + z[1] ** 2), lambda z: np.array([z[0], z[1]]))


def random_bivector(rng, n):
    chart = FiberedChart.numbered(n // 2 + n % 2, n // 2)
    a = rng.normal(size=(n, n))
    return FiberedBivector.constant(chart, a - a.T)


def sample_point(model, rng):
    z = rng.uniform(-1.0, 1.0, size=model.chart.dim)
    return z


def test_chart_validation():
    with pytest.raises(InputError):
        FiberedChart(("x",), ("x",))
    with pytest.raises(InputError):
        FiberedChart((), ())
    chart = FiberedChart.numbered(2, 1, "q", "p")
    assert chart.names == ("q1", "q2", "p1")
    assert chart.index("p1") == 2
    with pytest.raises(InputError):
        chart.index("r")
    with pytest.raises(InputError):
        chart.check_point([1.0, 2.0])
    with pytest.raises(InputError):
        chart.check_base_point([np.inf, 0.0])


def test_bivector_rejects_bad_matrices():
    chart = FiberedChart.numbered(1, 1)
    with pytest.raises(InputError):
        FiberedBivector.constant(chart, [[0.0, 1.0], [1.0, 0.0]]).matrix([0.0, 0.0])
    with pytest.raises(InputError):
        FiberedBivector.constant(chart, np.eye(3)).matrix([0.0, 0.0])
    with pytest.raises(InputError):
        FiberedBivector.from_upper(chart, {("y1", "x1"): lambda z: 1.0})


def test_from_upper_fills_lower_triangle():
    chart = FiberedChart(("x", "y"), ("p",))
    b = FiberedBivector.from_upper(chart, {("x", "p"): lambda z: z[1], ("y", "p"): lambda z: 2.0})
    m = b.matrix([0.0, 3.0, 0.0])
    assert m[0, 2] == 3.0 and m[2, 0] == -3.0
    assert m[1, 2] == 2.0 and m[2, 1] == -2.0
    np.testing.assert_array_equal(m, -m.T)


def test_sharp_pinned_sign():
    b = canonical_bivector(1)
    # sharp(dq) = (0, s) with s = -1, so that X_h = (h_p, -h_q)
    np.testing.assert_array_equal(sharp_apply(b, [0.3, 0.2], [1.0, 0.0]), [0.0, -1.0])
    np.testing.assert_array_equal(sharp_apply(b, [0.3, 0.2], [0.0, 0.0]), [0.0, 0.0])


def test_hamiltonian_field_examples():
    b = canonical_bivector(1)
    np.testing.assert_allclose(hamiltonian_field(b, OSC, [1.0, 0.0]), [0.0, -1.0])
    np.testing.assert_array_equal(hamiltonian_field(b, ScalarField.constant(2.0), [0.4, 1.0]), [0, 0])


def test_scalar_field_domain():
    f = ScalarField(lambda z: np.log(z[0]))
    with np.errstate(invalid="ignore"), pytest.raises(DomainError):
        f([-1.0])
    assert f.grad([2.0])[0] == pytest.approx(0.5, abs=1e-8)


def test_fd_gradient_accuracy():
    f = lambda z: np.sin(z[0]) * z[1] ** 3
    z = np.array([0.7, -1.3])
    exact = np.array([np.cos(z[0]) * z[1] ** 3, 3 * np.sin(z[0]) * z[1] ** 2])
    np.testing.assert_allclose(fd_gradient(f, z), exact, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_sharp_is_antisymmetric_and_linear(n, seed):
    rng = np.random.default_rng(seed)
    b = random_bivector(rng, n)
    z = rng.normal(size=n)
    a1, a2 = rng.normal(size=n), rng.normal(size=n)
    c1, c2 = rng.normal(size=2)
    assert abs(sharp_apply(b, z, a1) @ a1) <= 1e-12 * (1 + np.abs(a1).sum() ** 2 * np.abs(b.matrix(z)).max())
    lhs = sharp_apply(b, z, c1 * a1 + c2 * a2)
    rhs = c1 * sharp_apply(b, z, a1) + c2 * sharp_apply(b, z, a2)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1.0, np.abs(lhs).max()) * n)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_bivectors_antisymmetric_and_analytic_gradient_matches(name):
    model = build_model(name)
    rng = np.random.default_rng(3)
    for _ in range(20):
        z = sample_point(model, rng)
        m = model.bivector.matrix(z)
        np.testing.assert_allclose(m + m.T, 0.0, atol=1e-14)
        analytic = hamiltonian_field(model.bivector, model.hamiltonian, z)
        fd = model.bivector.matrix(z).T @ model.hamiltonian.fd_grad(z)
        np.testing.assert_allclose(analytic, fd, atol=1e-5)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_lemma_holds_for_every_model(name):
    model = build_model(name)
    rng = np.random.default_rng(5)
    for _ in range(20):
        assert lemma_check(model.bivector, sample_point(model, rng)).holds


def test_characteristic_subspace_examples():
    assert characteristic_subspace(canonical_bivector(2), np.zeros(4)).dim == 4
    zero = FiberedBivector.constant(FiberedChart.numbered(1, 1), np.zeros((2, 2)))
    assert characteristic_subspace(zero, [0.0, 0.0]).dim == 0
    assert lemma_check(zero, [0.0, 0.0]).holds
    nh = build_model("nonholonomic-particle")
    assert characteristic_subspace(nh.bivector, [0.1, 0.3, -0.2, 1.0, 0.5]).dim == 4


def test_lemma_rank_two_example():
    chart = FiberedChart(("a", "b"), ("c",))
    m = np.zeros((3, 3))
    m[0, 1], m[1, 0] = 1.0, -1.0
    b = FiberedBivector.constant(chart, m)
    assert lemma_check(b, np.zeros(3)).holds
    k = linalg.annihilator(characteristic_subspace(b, np.zeros(3)))
    assert linalg.same_subspace(k, linalg.span([[0.0, 0.0, 1.0]]), 1e-12)[0]


def test_subspace_lagrangian_examples():
    b = canonical_bivector(1)
    sec = Section(b.chart, lambda x: np.array([x[0] ** 2]))
    assert subspace_lagrangian_check(b, sec.point([0.4]), graph_tangent(sec, [0.4])).holds

    b2 = canonical_bivector(2)
    sec2 = Section(b2.chart, lambda x: np.array([x[1], 0.0]))
    check = subspace_lagrangian_check(b2, sec2.point([0.2, 0.5]), graph_tangent(sec2, [0.2, 0.5]))
    assert not check.holds
    assert check.defect > 0.1

    assert not subspace_lagrangian_check(b, [0.0, 0.0], linalg.Subspace.full(2)).holds


def test_subspace_check_dimension_guard():
    with pytest.raises(InputError):
        subspace_lagrangian_check(canonical_bivector(1), [0.0, 0.0], linalg.Subspace.full(3))


def test_rank_scan_reports_jumps():
    chart = FiberedChart.numbered(1, 1)
    b = FiberedBivector(chart, lambda z: np.array([[0.0, z[0]], [-z[0], 0.0]]))
    stats = rank_scan(b, [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]])
    assert stats.ranks == (2, 0, 2)
    assert not stats.constant
    assert rank_at(b, [0.5, 0.0]) == 2
    with pytest.raises(InputError):
        rank_scan(b, [])
