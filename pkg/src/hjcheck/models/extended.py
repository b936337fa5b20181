"""Extended phase spaces: time-dependent Hamiltonians and external forces.

Both constructions adjoin a time coordinate t to the base and its conjugate
e to the fiber. Extended charts are ordered ``(t, x..., e, y...)``; the
projection mu forgets e. The extended Hamiltonian is ``h_ext = h o mu + e``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from hjcheck import linalg
from hjcheck.errors import InputError
from hjcheck.geometry import (
    FiberedBivector,
    FiberedChart,
    ScalarField,
    characteristic_subspace,
    hamiltonian_field,
)
from hjcheck.hj import Section, graph_tangent, lagrangian_residual_norm, relatedness_defect
from hjcheck.models.canonical import canonical_bivector

TIME_INDEX = 0


def extended_chart(inner: FiberedChart) -> FiberedChart:
    if "t" in inner.names or "e" in inner.names:
        raise InputError("inner chart already uses the names 't' or 'e'")
    return FiberedChart(("t",) + inner.base, ("e",) + inner.fiber)


class _Layout:
    """Index bookkeeping between (t, x, e, y) and the inner (x, y)."""

    def __init__(self, inner: FiberedChart):
        nb = inner.n_base
        self.inner_dim = inner.dim
        self.e_index = nb + 1
        self.inner_indices = np.array(list(range(1, nb + 1)) + list(range(nb + 2, inner.dim + 2)))
        # mu-image coordinates (t, x, y): everything but e
        self.mu_indices = np.array([0] + list(self.inner_indices))

    def inner(self, w) -> np.ndarray:
        return np.asarray(w, dtype=float)[self.inner_indices]

    def mu(self, w) -> np.ndarray:
        return np.asarray(w, dtype=float)[self.mu_indices]


def _extended_h(layout: _Layout, h: ScalarField) -> ScalarField:
    """h_ext(w) = h(mu(w)) + e, with the gradient assembled from grad h."""

    def value(w):
        w = np.asarray(w, dtype=float)
        return h(layout.mu(w)) + w[layout.e_index]

    def grad(w):
        w = np.asarray(w, dtype=float)
        g = np.zeros(w.size)
        g[layout.mu_indices] = h.grad(layout.mu(w))
        g[layout.e_index] += 1.0
        return g

    return ScalarField(value, grad)


@dataclass(frozen=True)
class TimeDependentModel:
    """T*R x E with Lambda_ext = d/dt ^ d/de + Lambda.

    ``hamiltonian`` is a function on R x E with coordinates (t, x, y).
    """

    inner: FiberedBivector
    hamiltonian: ScalarField
    chart: FiberedChart = field(init=False)
    bivector: FiberedBivector = field(init=False)
    h_ext: ScalarField = field(init=False)
    layout: _Layout = field(init=False, repr=False)

    def __post_init__(self):
        chart = extended_chart(self.inner.chart)
        layout = _Layout(self.inner.chart)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "bivector", FiberedBivector(chart, self._components))
        object.__setattr__(self, "h_ext", _extended_h(layout, self.hamiltonian))

    def _components(self, w) -> np.ndarray:
        lay = self.layout
        n = self.chart.dim
        m = np.zeros((n, n))
        m[0, lay.e_index] = -1.0
        m[lay.e_index, 0] = 1.0
        idx = lay.inner_indices
        m[np.ix_(idx, idx)] = self.inner.matrix(lay.inner(w))
        return m

    def mu(self, w) -> np.ndarray:
        return self.layout.mu(w)

    def mu_push(self, v) -> np.ndarray:
        """T mu: drop the e-component of a tangent vector."""
        return np.asarray(v, dtype=float)[self.layout.mu_indices]

    def evolution_field(self, u) -> np.ndarray:
        """d/dt + X_h at u = (t, x, y), with X_h taken at frozen t."""
        u = np.asarray(u, dtype=float)
        inner_point = u[1:]

        def frozen(z):
            return self.hamiltonian(np.concatenate([[u[0]], z]))

        def frozen_grad(z):
            return self.hamiltonian.grad(np.concatenate([[u[0]], z]))[1:]

        xh = hamiltonian_field(self.inner, ScalarField(frozen, frozen_grad), inner_point)
        return np.concatenate([[1.0], xh])


def build_time_dependent(inner: FiberedBivector, hamiltonian: ScalarField) -> TimeDependentModel:
    return TimeDependentModel(inner, hamiltonian)


@dataclass(frozen=True)
class ForcedModel:
    """T*(R x Q) with Lambda~ = F_i d/de ^ d/dp_i + d/dt ^ d/de + d/dq^i ^ d/dp_i.

    ``hamiltonian`` and ``force`` are functions of u = (t, q, p); ``force``
    returns the n components of the semi-basic force.
    """

    n: int
    hamiltonian: ScalarField
    force: Callable[[np.ndarray], np.ndarray]
    chart: FiberedChart = field(init=False)
    bivector: FiberedBivector = field(init=False)
    h_ext: ScalarField = field(init=False)
    layout: _Layout = field(init=False, repr=False)

    def __post_init__(self):
        inner = canonical_bivector(self.n).chart
        chart = extended_chart(inner)
        layout = _Layout(inner)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "bivector", FiberedBivector(chart, self._components))
        object.__setattr__(self, "h_ext", _extended_h(layout, self.hamiltonian))

    def force_at(self, u) -> np.ndarray:
        f = np.atleast_1d(np.asarray(self.force(np.asarray(u, dtype=float)), dtype=float))
        if f.shape != (self.n,):
            raise InputError(f"force returned shape {f.shape}, expected {(self.n,)}")
        return f

    def _components(self, w) -> np.ndarray:
        n = self.n
        e = n + 1
        q = slice(1, n + 1)
        p = slice(n + 2, 2 * n + 2)
        f = self.force_at(self.mu(w))
        m = np.zeros((2 * n + 2, 2 * n + 2))
        m[0, e], m[e, 0] = -1.0, 1.0
        m[q, p] = -np.eye(n)
        m[p, q] = np.eye(n)
        m[e, p] = -f
        m[p, e] = f
        return m

    def mu(self, w) -> np.ndarray:
        return self.layout.mu(w)

    def mu_push(self, v) -> np.ndarray:
        return np.asarray(v, dtype=float)[self.layout.mu_indices]

    def omega(self, w) -> np.ndarray:
        """The almost-symplectic form as the matrix inverse of the bivector."""
        return np.linalg.inv(self.bivector.matrix(w))

    def omega_closed_form(self, w) -> np.ndarray:
        """dq^i ^ dp_i + dt ^ de + F_i dq^i ^ dt, as a component matrix."""
        n = self.n
        e = n + 1
        q = slice(1, n + 1)
        p = slice(n + 2, 2 * n + 2)
        f = self.force_at(self.mu(w))
        m = np.zeros((2 * n + 2, 2 * n + 2))
        m[q, p] = np.eye(n)
        m[p, q] = -np.eye(n)
        m[0, e], m[e, 0] = 1.0, -1.0
        m[q, 0] = f
        m[0, q] = -f
        return m

    def evolution_field(self, u) -> np.ndarray:
        """d/dt + X_h + V_F at u = (t, q, p): (1, dh/dp, -dh/dq - F)."""
        u = np.asarray(u, dtype=float)
        n = self.n
        g = self.hamiltonian.grad(u)
        return np.concatenate([[1.0], g[n + 1:], -g[1:n + 1] - self.force_at(u)])


def build_forced(n: int, hamiltonian: ScalarField, force: Callable[[np.ndarray], np.ndarray]
                 ) -> ForcedModel:
    if n < 1:
        raise InputError("configuration dimension must be at least 1")
    return ForcedModel(n, hamiltonian, force)


class ExtendedHJResult(NamedTuple):
    residual: float
    coefficient: float
    intersection_dim: int
    lagrangian_residual: float

    def holds(self, tol: float) -> bool:
        return self.residual <= tol


def tdep_hj_check(model: TimeDependentModel | ForcedModel, section: Section, x,
                  rank_tol: float = linalg.DEFAULT_TOL) -> ExtendedHJResult:
    """Distance of dh_ext + B dt to (T Im(gamma) ∩ C_ext)°, minimized over B.

    ``x`` is a base point (t, q...). Returns the minimizing B (least-norm when
    dt already lies in the annihilator) and the residual distance.
    """
    x = model.chart.check_base_point(x)
    w = section.point(x)
    tangent = graph_tangent(section, x, rank_tol)
    inter = linalg.intersect(tangent, characteristic_subspace(model.bivector, w, rank_tol))
    target_space = linalg.annihilator(inter)
    dt = np.zeros(model.chart.dim)
    dt[TIME_INDEX] = 1.0
    fit = linalg.solve_affine_membership(model.h_ext.grad(w), target_space, dt)
    return ExtendedHJResult(fit.residual, fit.coefficient, inter.dim,
                            lagrangian_residual_norm(model.bivector, section, x))


def mu_relatedness_defect(model: TimeDependentModel | ForcedModel, section: Section, x) -> float:
    """Relatedness of the evolution field and its projection, seen through mu."""
    return relatedness_defect(model.bivector, model.h_ext, section, x,
                              indices=model.layout.mu_indices)


def forced_section_check(model: ForcedModel, section: Section, x) -> float:
    """max |d gamma - (F o mu o gamma) ^ dt| over components in (t, q).

    ``section`` is the 1-form gamma = gamma_t dt + gamma_i dq^i on R x Q, given
    as a section of the extended chart with fiber (e, p) = (gamma_t, gamma_q).
    """
    x = model.chart.check_base_point(x)
    jac = section.jacobian(x)
    d_gamma = jac.T - jac
    f = model.force_at(model.mu(section.point(x)))
    f_wedge_dt = np.zeros_like(d_gamma)
    f_wedge_dt[1:, 0] = f
    f_wedge_dt[0, 1:] = -f
    return float(np.max(np.abs(d_gamma - f_wedge_dt), initial=0.0))
