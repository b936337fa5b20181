"""Cotangent bundles with their canonical structure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from hjcheck.errors import InputError
from hjcheck.geometry import FiberedBivector, FiberedChart, ScalarField
from hjcheck.hj import Section


def cotangent_chart(n: int) -> FiberedChart:
    return FiberedChart.numbered(n, n, "q", "p")


def canonical_matrix(n: int) -> np.ndarray:
    """Component matrix with Lambda(dq^i, dp_i) = -1 in (q, p) order."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def canonical_bivector(n: int) -> FiberedBivector:
    return FiberedBivector.constant(cotangent_chart(n), canonical_matrix(n))


@dataclass(frozen=True)
class CanonicalModel:
    n: int
    bivector: FiberedBivector
    hamiltonian: ScalarField

    @property
    def chart(self) -> FiberedChart:
        return self.bivector.chart

    def hamilton_rhs(self, z) -> np.ndarray:
        """(dh/dp, -dh/dq), written out directly from Hamilton's equations."""
        g = self.hamiltonian.grad(z)
        return np.concatenate([g[self.n:], -g[: self.n]])


def build_canonical(n: int, h: ScalarField) -> CanonicalModel:
    if n < 1:
        raise InputError("configuration dimension must be at least 1")
    return CanonicalModel(n, canonical_bivector(n), h)


def closed_form_check(section: Section, x) -> float:
    """max |d gamma_i/dq^j - d gamma_j/dq^i| for a 1-form gamma on Q."""
    jac = section.jacobian(x)
    if jac.shape[0] != jac.shape[1]:
        raise InputError("closed_form_check needs a section of a cotangent bundle")
    return float(np.max(np.abs(jac - jac.T), initial=0.0))


def _metric_at(g, q) -> np.ndarray:
    m = np.asarray(g(q) if callable(g) else g, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"metric must be a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-14):
        raise InputError("metric is not symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise InputError("metric is not positive definite") from None
    return m


def legendre(g: np.ndarray | Callable, q, v) -> np.ndarray:
    """p_i = g_ij(q) v^j for L = 1/2 g(v, v) - V(q)."""
    return _metric_at(g, q) @ np.asarray(v, dtype=float)


def legendre_inv(g: np.ndarray | Callable, q, p) -> np.ndarray:
    return np.linalg.solve(_metric_at(g, q), np.asarray(p, dtype=float))
