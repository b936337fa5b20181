"""Named built-in models, each taking a handful of numeric parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from hjcheck.errors import InputError
from hjcheck.geometry import FiberedBivector, FiberedChart, ScalarField
from hjcheck.models.canonical import build_canonical, canonical_bivector
from hjcheck.models.extended import build_forced, build_time_dependent
from hjcheck.models.nonholonomic import nonholonomic_particle

FAMILIES = ("canonical", "nonholonomic", "time-dependent", "forced", "generic")


@dataclass(frozen=True)
class Model:
    """What the checks need from any model, plus the family-specific object.

    ``hamiltonian`` is the function whose Hamiltonian field is checked: the
    energy for canonical and nonholonomic models, h_ext for extended ones.
    """

    name: str
    family: str
    bivector: FiberedBivector
    hamiltonian: ScalarField
    params: dict = field(default_factory=dict)
    detail: Any = None

    @property
    def chart(self) -> FiberedChart:
        return self.bivector.chart

    @property
    def transitive(self) -> bool:
        return self.family in ("canonical", "forced")

    @property
    def extended(self) -> bool:
        return self.family in ("time-dependent", "forced")


@dataclass(frozen=True)
class RegistryEntry:
    factory: Callable[..., Model]
    defaults: dict
    description: str
    # coordinate names a user-supplied Hamiltonian may use, given the params
    hamiltonian_coords: Callable[[dict], tuple[str, ...]] | None = None


def _canonical(params, hamiltonian=None) -> Model:
    n = _positive_int(params, "n")
    h = hamiltonian or ScalarField.constant(0.0)
    m = build_canonical(n, h)
    return Model("canonical", "canonical", m.bivector, h, params, m)


def _oscillator(params, hamiltonian=None) -> Model:
    w = float(params["omega"])
    m_ = _positive(params, "mass")

    def h(z):
        return 0.5 * (z[1] ** 2 / m_ + m_ * w * w * z[0] ** 2)

    def grad(z):
        return np.array([m_ * w * w * z[0], z[1] / m_])

    m = build_canonical(1, ScalarField(h, grad))
    return Model("oscillator", "canonical", m.bivector, m.hamiltonian, params, m)


def _free_particle(params, hamiltonian=None) -> Model:
    n = _positive_int(params, "n")
    mass = _positive(params, "mass")

    def h(z):
        return 0.5 * float(z[n:] @ z[n:]) / mass

    def grad(z):
        return np.concatenate([np.zeros(n), z[n:] / mass])

    m = build_canonical(n, ScalarField(h, grad))
    return Model("free-particle", "canonical", m.bivector, m.hamiltonian, params, m)


def _nonholonomic_particle(params, hamiltonian=None) -> Model:
    m = nonholonomic_particle(_positive(params, "mass"))
    return Model("nonholonomic-particle", "nonholonomic", m.bivector, m.hamiltonian, params, m)


def _forced_linear(params, hamiltonian=None) -> Model:
    c = float(params["c"])
    mass = _positive(params, "mass")

    def h(u):
        return 0.5 * u[2] ** 2 / mass

    def grad(u):
        return np.array([0.0, 0.0, u[2] / mass])

    m = build_forced(1, ScalarField(h, grad), lambda u: np.array([c]))
    return Model("forced-linear", "forced", m.bivector, m.h_ext, params, m)


def _time_oscillator(params, hamiltonian=None) -> Model:
    w = float(params["omega"])
    a = float(params["drive"])

    def h(u):
        t, q, p = u
        return 0.5 * (p * p + w * w * q * q) - a * q * math.cos(t)

    def grad(u):
        t, q, p = u
        return np.array([a * q * math.sin(t), w * w * q - a * math.cos(t), p])

    m = build_time_dependent(canonical_bivector(1), ScalarField(h, grad))
    return Model("time-oscillator", "time-dependent", m.bivector, m.h_ext, params, m)


def _positive(params, key) -> float:
    v = float(params[key])
    if not v > 0:
        raise InputError(f"parameter {key!r} must be positive, got {v}")
    return v


def _positive_int(params, key) -> int:
    v = params[key]
    if int(v) != v or int(v) < 1:
        raise InputError(f"parameter {key!r} must be a positive integer, got {v}")
    return int(v)


REGISTRY: dict[str, RegistryEntry] = {
    "canonical": RegistryEntry(
        _canonical, {"n": 1},
        "T*R^n with the canonical structure; Hamiltonian from the config (default 0)",
        lambda p: tuple(f"q{i + 1}" for i in range(int(p["n"])))
        + tuple(f"p{i + 1}" for i in range(int(p["n"])))),
    "oscillator": RegistryEntry(
        _oscillator, {"omega": 1.0, "mass": 1.0},
        "harmonic oscillator h = p^2/(2m) + m omega^2 q^2/2 on T*R"),
    "free-particle": RegistryEntry(
        _free_particle, {"n": 2, "mass": 1.0},
        "free particle h = |p|^2/(2m) on T*R^n"),
    "nonholonomic-particle": RegistryEntry(
        _nonholonomic_particle, {"mass": 1.0},
        "particle in R^3 constrained by dz - y dx = 0, in adapted momenta (pa1, pa2)"),
    "forced-linear": RegistryEntry(
        _forced_linear, {"c": 1.0, "mass": 1.0},
        "h = p^2/(2m) on T*R with constant force F = c, extended by (t, e)"),
    "time-oscillator": RegistryEntry(
        _time_oscillator, {"omega": 1.0, "drive": 0.0},
        "h = (p^2 + omega^2 q^2)/2 - drive q cos t, extended by (t, e)"),
}


def build_model(name: str, params: dict | None = None,
                hamiltonian: ScalarField | None = None) -> Model:
    try:
        entry = REGISTRY[name]
    except KeyError:
        raise InputError(f"unknown model {name!r}; known models: {sorted(REGISTRY)}") from None
    params = dict(params or {})
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise InputError(f"model {name!r} has no parameters {sorted(unknown)}; "
                         f"accepted: {sorted(entry.defaults)}")
    if hamiltonian is not None and entry.hamiltonian_coords is None:
        raise InputError(f"model {name!r} has a fixed Hamiltonian")
    merged = {**entry.defaults, **params}
    return entry.factory(merged, hamiltonian)
