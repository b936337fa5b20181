"""Randomized agreement between the coordinate residual test and the subspace test.

Sections are drawn per model family from explicit polynomial families,
half of them Lagrangian by construction and half perturbed off it, so both
verdicts are well represented. Jacobians are analytic to keep the residuals
away from the tolerance.

For an arbitrary bivector the residual test only says sharp(TN°) ⊂ TN, which
is weaker than the subspace definition (with one fiber coordinate the
residual vanishes identically). The families here are the built-in ones,
for which the two agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hjcheck.geometry import subspace_lagrangian_check
from hjcheck.hj import Section, graph_tangent, lagrangian_residual_norm
from hjcheck.models.registry import REGISTRY, Model, build_model


@dataclass(frozen=True)
class CrossCheckSample:
    model: str
    point: tuple[float, ...]
    constructed_lagrangian: bool
    residual: float
    residual_holds: bool
    subspace_holds: bool
    subspace_defect: float

    @property
    def agree(self) -> bool:
        return self.residual_holds == self.subspace_holds


def _symmetric(rng, n) -> np.ndarray:
    a = rng.normal(size=(n, n))
    return 0.5 * (a + a.T)


def _antisymmetric(rng, n) -> np.ndarray:
    a = rng.normal(size=(n, n))
    k = a - a.T
    return k / max(1.0, float(np.abs(k).max()))


def _cotangent_section(model: Model, rng, lagrangian: bool) -> Section:
    """gamma = dS for a cubic S, plus a constant antisymmetric Jacobian when perturbed."""
    n = model.chart.n_base
    a = rng.normal(size=n)
    s2 = _symmetric(rng, n)
    b = rng.normal(size=n)
    k = np.zeros((n, n)) if lagrangian else _antisymmetric(rng, n)
    if not lagrangian and n > 1 and np.abs(k).max() < 0.1:
        k[0, 1], k[1, 0] = 0.5, -0.5

    def fiber(x):
        return a + (s2 + k) @ x + 0.5 * b * x * x

    def jac(x):
        return s2 + k + np.diag(b * x)

    return Section(model.chart, fiber, jac)


def _extended_section(model: Model, rng, lagrangian: bool) -> Section:
    """gamma = dS(t, q) minus c t dq for forced models; perturbed by kappa q dt."""
    n = model.chart.n_base
    a = rng.normal(size=n)
    s2 = _symmetric(rng, n)
    b = rng.normal(size=n)
    c = float(model.params.get("c", 0.0)) if model.family == "forced" else 0.0
    kappa = 0.0 if lagrangian else rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
    shift = np.zeros((n, n))
    shift[1, 0] = -c        # d gamma_q / dt
    shift[0, 1] = kappa     # d gamma_t / dq

    def fiber(x):
        return a + (s2 + shift) @ x + 0.5 * b * x * x

    def jac(x):
        return s2 + shift + np.diag(b * x)

    return Section(model.chart, fiber, jac)


def _nonholonomic_section(model: Model, rng, lagrangian: bool) -> Section:
    """pa1 = phi(x, z) sqrt(1 + y^2), pa2 = f(y, z - x y); perturbed by eps x in pa2."""
    p = rng.normal(size=3)
    f = rng.normal(size=3)
    eps = 0.0 if lagrangian else rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])

    def fiber(q):
        x, y, z = q
        r = np.sqrt(1.0 + y * y)
        u = z - x * y
        return np.array([(p[0] + p[1] * x + p[2] * z) * r,
                         f[0] + f[1] * y + f[2] * u + eps * x])

    def jac(q):
        x, y, z = q
        r = np.sqrt(1.0 + y * y)
        phi = p[0] + p[1] * x + p[2] * z
        return np.array([[p[1] * r, phi * y / r, p[2] * r],
                         [-f[2] * y + eps, f[1] - f[2] * x, f[2]]])

    return Section(model.chart, fiber, jac)


def random_section(model: Model, rng: np.random.Generator, lagrangian: bool) -> Section:
    if model.family == "nonholonomic":
        return _nonholonomic_section(model, rng, lagrangian)
    if model.extended:
        return _extended_section(model, rng, lagrangian)
    return _cotangent_section(model, rng, lagrangian)


def run_cross_check(seed: int = 0, samples: int = 500, residual_tol: float = 1e-8,
                    subspace_tol: float = 1e-6, models: list[str] | None = None
                    ) -> list[CrossCheckSample]:
    """Draw (model, section, point) triples and compare the two Lagrangian tests."""
    rng = np.random.default_rng(seed)
    names = models or sorted(REGISTRY)
    built = {name: build_model(name) for name in names}
    out = []
    for i in range(samples):
        name = names[i % len(names)]
        model = built[name]
        lagrangian = bool(rng.random() < 0.5)
        sec = random_section(model, rng, lagrangian)
        x = rng.uniform(-1.0, 1.0, size=model.chart.n_base)
        residual = lagrangian_residual_norm(model.bivector, sec, x)
        sub = subspace_lagrangian_check(model.bivector, sec.point(x), graph_tangent(sec, x),
                                        subspace_tol)
        out.append(CrossCheckSample(name, tuple(float(v) for v in x), lagrangian, residual,
                                    residual <= residual_tol, sub.holds, sub.defect))
    return out
