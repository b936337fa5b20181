"""Nonholonomic systems with linear constraints, in adapted momentum coordinates.

The constraint submanifold M of T*Q is charted by ``(q^i, pa_alpha)`` where
``pa_alpha = X^i_alpha p_i`` for a basis X_alpha of the constraint
distribution D. The momenta paired with the complement Y_a = g^{-1} mu^a
vanish identically on M, so a point of M determines p by solving
``[X; Y] p = (pa; 0)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from hjcheck.errors import InputError
from hjcheck.geometry import FiberedBivector, FiberedChart, ScalarField, fd_jacobian, fd_step
from hjcheck.hj import Section
from hjcheck.linalg import rank

Matrix = Callable[[np.ndarray], np.ndarray]


def _as_matrix_func(m) -> Matrix:
    if callable(m):
        return m
    const = np.array(m, dtype=float)
    return lambda q: const


def _as_scalar_field(v) -> ScalarField:
    if v is None:
        return ScalarField.constant(0.0)
    if isinstance(v, ScalarField):
        return v
    return ScalarField(v)


@dataclass(frozen=True)
class NonholonomicModel:
    n: int
    k: int
    metric: Matrix
    potential: ScalarField
    constraints: Matrix
    d_basis: Matrix
    d_basis_jac: Matrix
    chart: FiberedChart = field(init=False)
    bivector: FiberedBivector = field(init=False)
    hamiltonian: ScalarField = field(init=False)
    hamiltonian_override: ScalarField | None = None

    def __post_init__(self):
        names_q = tuple(f"q{i + 1}" for i in range(self.n))
        names_p = tuple(f"pa{a + 1}" for a in range(self.n - self.k))
        chart = FiberedChart(names_q, names_p)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "bivector", FiberedBivector(chart, self.bracket_matrix))
        h = self.hamiltonian_override or ScalarField(self._restricted_energy)
        object.__setattr__(self, "hamiltonian", h)

    @property
    def rank_d(self) -> int:
        return self.n - self.k

    def complement(self, q) -> np.ndarray:
        """Rows Y_a = g^{-1} mu^a."""
        return np.linalg.solve(self.metric(q), self.constraints(q).T).T

    def adapted_frame(self, q) -> np.ndarray:
        return np.vstack([self.d_basis(q), self.complement(q)])

    def momenta(self, z) -> np.ndarray:
        """Canonical momenta p_i of the point (q, pa) of M."""
        z = np.asarray(z, dtype=float)
        q, pa = z[: self.n], z[self.n:]
        return np.linalg.solve(self.adapted_frame(q), np.concatenate([pa, np.zeros(self.k)]))

    def adapted_momenta(self, q, p) -> np.ndarray:
        """All n adapted momenta (X p ; Y p); the last k vanish exactly on M."""
        return self.adapted_frame(q) @ np.asarray(p, dtype=float)

    def constraint_values(self, q, p) -> np.ndarray:
        return self.complement(q) @ np.asarray(p, dtype=float)

    def lie_brackets(self, q) -> np.ndarray:
        """[X_alpha, X_beta] as an array of shape (n-k, n-k, n)."""
        x = self.d_basis(q)
        dj = self.d_basis_jac(q)
        # dj[a] @ x[b] is the derivative of X_a along X_b
        along = np.einsum("aji,bi->abj", dj, x)
        return np.transpose(along, (1, 0, 2)) - along

    def bracket_matrix(self, z) -> np.ndarray:
        """Components of the nonholonomic bracket at z = (q, pa).

        Lambda(dq^i, dq^j) = 0, Lambda(dq^i, dpa_alpha) = -X^i_alpha and
        Lambda(dpa_alpha, dpa_beta) = <p, [X_alpha, X_beta]> with p on M.
        """
        z = np.asarray(z, dtype=float)
        n, r = self.n, self.rank_d
        q = z[:n]
        x = self.d_basis(q)
        p = self.momenta(z)
        m = np.zeros((n + r, n + r))
        m[:n, n:] = -x.T
        m[n:, :n] = x
        m[n:, n:] = self.lie_brackets(q) @ p
        return m

    def canonical_energy(self, q, p) -> float:
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        return 0.5 * float(p @ np.linalg.solve(self.metric(q), p)) + self.potential(q)

    def _restricted_energy(self, z) -> float:
        return self.canonical_energy(z[: self.n], self.momenta(z))

    def section_from_one_form(self, one_form: Callable[[np.ndarray], np.ndarray],
                              tol: float = 1e-10) -> Section:
        """The section q -> (q, X(q) gamma(q)) of M -> Q for an M-valued 1-form gamma."""

        def fiber(q):
            g = np.asarray(one_form(q), dtype=float)
            _check_in_m(self, q, g, tol)
            return self.d_basis(q) @ g

        return Section(self.chart, fiber)

    def one_form_of(self, section: Section) -> Callable[[np.ndarray], np.ndarray]:
        return lambda q: self.momenta(section.point(q))

    def check_invariants(self, q, tol: float = 1e-10) -> None:
        """Raise InputError if the model data is inconsistent at q."""
        q = np.asarray(q, dtype=float)
        g = self.metric(q)
        if not np.allclose(g, g.T, rtol=1e-12, atol=1e-14):
            raise InputError(f"metric is not symmetric at q = {q.tolist()}")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise InputError(f"metric is not positive definite at q = {q.tolist()}") from None
        mu = self.constraints(q)
        if rank(mu, tol) < self.k:
            raise InputError(f"constraint forms are dependent at q = {q.tolist()}")
        x = self.d_basis(q)
        if x.shape != (self.rank_d, self.n):
            raise InputError(f"D-basis has shape {x.shape}, expected {(self.rank_d, self.n)}")
        if np.max(np.abs(mu @ x.T), initial=0.0) > tol * max(1.0, float(np.abs(x).max())):
            raise InputError(f"D-basis is not annihilated by the constraints at q = {q.tolist()}")
        if rank(self.adapted_frame(q), tol) < self.n:
            raise InputError(f"D-basis and complement are dependent at q = {q.tolist()}")


def _check_in_m(model: NonholonomicModel, q, one_form_value, tol: float) -> None:
    c = model.constraint_values(q, one_form_value)
    bound = tol * max(1.0, float(np.linalg.norm(one_form_value)))
    if np.max(np.abs(c), initial=0.0) > bound:
        raise InputError(
            f"1-form is not valued in the constraint submanifold at q = {np.asarray(q).tolist()}: "
            f"constraint values {c.tolist()}"
        )


def default_d_basis(metric: Matrix, constraints: Matrix, q_ref) -> Matrix:
    """A smooth g-orthonormal basis of D = ker(mu).

    A g-orthonormal basis of D at ``q_ref`` is carried to q by the
    g-orthogonal projector onto D(q) and re-orthonormalized symmetrically.
    """
    q_ref = np.asarray(q_ref, dtype=float)

    def project(q, vectors):
        g = metric(q)
        mu = constraints(q)
        ginv_mut = np.linalg.solve(g, mu.T)
        coeff = np.linalg.solve(mu @ ginv_mut, mu @ vectors.T)
        return (vectors.T - ginv_mut @ coeff).T

    def orthonormalize(q, vectors):
        gram = vectors @ metric(q) @ vectors.T
        w, v = np.linalg.eigh(gram)
        return (v @ np.diag(w ** -0.5) @ v.T) @ vectors

    mu0 = constraints(q_ref)
    _, s, vt = np.linalg.svd(mu0)
    r = int(np.count_nonzero(s > 1e-10 * s[0]))
    reference = orthonormalize(q_ref, project(q_ref, vt[r:]))
    reference.setflags(write=False)

    def basis(q):
        return orthonormalize(q, project(np.asarray(q, dtype=float), reference))

    return basis


def build_nonholonomic(metric, potential, constraints, d_basis: Matrix | None = None,
                       d_basis_jac: Matrix | None = None, q_ref=None,
                       hamiltonian: ScalarField | None = None) -> NonholonomicModel:
    """Nonholonomic bracket and restricted Hamiltonian for L = 1/2 g(v, v) - V(q).

    ``constraints(q)`` returns the k x n matrix of the forms mu^a. When
    ``d_basis`` is omitted a g-orthonormal basis of D is built around
    ``q_ref``, which defaults to the origin and is required when the metric
    is a function. Jacobians of the basis default to central
    differences.
    """
    if q_ref is None:
        if callable(metric):
            raise InputError("q_ref is required when the metric is given as a function")
        q_ref = np.zeros(np.asarray(metric).shape[0])
    q_ref = np.asarray(q_ref, dtype=float)
    metric = _as_matrix_func(metric)
    constraints = _as_matrix_func(constraints)
    potential = _as_scalar_field(potential)
    mu_probe = np.atleast_2d(np.asarray(constraints(q_ref), dtype=float))
    if mu_probe.shape[1] != q_ref.size:
        raise InputError(f"constraint matrix has {mu_probe.shape[1]} columns, expected {q_ref.size}")
    k, n = mu_probe.shape
    if k >= n:
        raise InputError(f"need fewer constraints than dimensions, got k = {k}, n = {n}")
    if d_basis is None:
        g0 = np.asarray(metric(q_ref), dtype=float)
        try:
            np.linalg.cholesky(0.5 * (g0 + g0.T))
        except np.linalg.LinAlgError:
            raise InputError(f"metric is not positive definite at q = {q_ref.tolist()}") from None
        d_basis = default_d_basis(metric, constraints, q_ref)
        d_basis_jac = None
    if d_basis_jac is None:
        basis = d_basis
        r = n - k

        def d_basis_jac(q):
            q = np.asarray(q, dtype=float)
            flat = fd_jacobian(lambda s: np.asarray(basis(s)).ravel(), q, r * n)
            return flat.reshape(r, n, n)

    model = NonholonomicModel(n, k, metric, potential, constraints, d_basis, d_basis_jac,
                              hamiltonian_override=hamiltonian)
    model.check_invariants(q_ref)
    return model


def _directional_derivative(f: Callable[[np.ndarray], float], q: np.ndarray, v: np.ndarray) -> float:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    h = float(np.max(fd_step(q))) / norm
    return (f(q + h * v) - f(q - h * v)) / (2.0 * h)


def nh_section_check(model: NonholonomicModel, one_form: Callable[[np.ndarray], np.ndarray], q,
                     tol: float = 1e-10) -> float:
    """max over alpha < beta of |d gamma(X_alpha, X_beta)(q)|.

    Uses d gamma(X, Y) = X(gamma(Y)) - Y(gamma(X)) - gamma([X, Y]) with the
    directional derivatives taken by central differences.
    """
    q = np.asarray(q, dtype=float)
    g = np.asarray(one_form(q), dtype=float)
    _check_in_m(model, q, g, tol)
    x = model.d_basis(q)
    brackets = model.lie_brackets(q)
    r = model.rank_d
    worst = 0.0
    for a in range(r):
        for b in range(a + 1, r):
            def pair_b(s, b=b):
                return float(np.asarray(one_form(s)) @ model.d_basis(s)[b])

            def pair_a(s, a=a):
                return float(np.asarray(one_form(s)) @ model.d_basis(s)[a])

            value = (_directional_derivative(pair_b, q, x[a])
                     - _directional_derivative(pair_a, q, x[b])
                     - float(g @ brackets[a, b]))
            worst = max(worst, abs(value))
    return worst


class NHHJResult(NamedTuple):
    defect: float
    lagrangian_residual: float

    def holds(self, tol: float) -> bool:
        return self.defect <= tol


def nh_hj_check(model: NonholonomicModel, one_form: Callable[[np.ndarray], np.ndarray], q,
                tol: float = 1e-10) -> NHHJResult:
    """max_alpha |<d(h o gamma), X_alpha>| together with the Lagrangian residual at q."""
    q = np.asarray(q, dtype=float)
    residual = nh_section_check(model, one_form, q, tol)
    composite = ScalarField(lambda s: model.canonical_energy(s, one_form(s)))
    d = composite.fd_grad(q)
    defect = float(np.max(np.abs(model.d_basis(q) @ d), initial=0.0))
    return NHHJResult(defect, residual)


def nonholonomic_particle(mass: float = 1.0, potential: ScalarField | None = None
                          ) -> NonholonomicModel:
    """Particle in R^3 with the constraint dz - y dx = 0.

    D is spanned by X1 = d/dx + y d/dz and X2 = d/dy; on M the energy is
    (pa1^2 / (1 + y^2) + pa2^2) / (2 m) + V.
    """
    if mass <= 0:
        raise InputError("mass must be positive")
    m = float(mass)

    def d_basis(q):
        return np.array([[1.0, 0.0, q[1]], [0.0, 1.0, 0.0]])

    def d_basis_jac(q):
        dj = np.zeros((2, 3, 3))
        dj[0, 2, 1] = 1.0
        return dj

    def constraints(q):
        return np.array([[-q[1], 0.0, 1.0]])

    pot = _as_scalar_field(potential)

    def energy(z):
        y, p1, p2 = z[1], z[3], z[4]
        return (p1 * p1 / (1.0 + y * y) + p2 * p2) / (2.0 * m) + pot(z[:3])

    def energy_grad(z):
        y, p1, p2 = z[1], z[3], z[4]
        s = 1.0 + y * y
        g = np.zeros(5)
        g[:3] = pot.grad(z[:3])
        g[1] += -p1 * p1 * y / (m * s * s)
        g[3] = p1 / (m * s)
        g[4] = p2 / m
        return g

    return build_nonholonomic(m * np.eye(3), pot, constraints, d_basis, d_basis_jac,
                              q_ref=np.zeros(3), hamiltonian=ScalarField(energy, energy_grad))
