"""Experiment configs: JSON files validated against a versioned schema.

A config names a model (a registry entry or an inline bivector), a section
given by expressions, a grid over a box in the base, an optional flow and a
list of checks. Expressions use the grammar of :mod:`hjcheck.expr`; they
may refer to the chart coordinates and to the names in ``params``.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import jsonschema
import numpy as np

from hjcheck import linalg
from hjcheck.errors import HJError, InputError
from hjcheck.expr import ParseError, compile_expr, expression_field, expression_vector, parse
from hjcheck.geometry import FiberedBivector, FiberedChart
from hjcheck.hj import Section, uniform_grid
from hjcheck.models.registry import REGISTRY, Model, build_model

SCHEMA_VERSION = 1
CHECKS = ("lagrangian", "hj", "flow", "rank")

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}
_INTERVAL = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hjcheck experiment config",
    "type": "object",
    "required": ["model", "domain", "checks"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "description": {"type": "string"},
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["name"],
                    "additionalProperties": False,
                    "properties": {
                        "name": {"type": "string"},
                        "params": {"type": "object", "additionalProperties": {"type": "number"}},
                        "hamiltonian": {"type": "string"},
                    },
                },
                {
                    "type": "object",
                    "required": ["inline"],
                    "additionalProperties": False,
                    "properties": {
                        "inline": {
                            "type": "object",
                            "required": ["base", "fiber", "bivector", "hamiltonian"],
                            "additionalProperties": False,
                            "properties": {
                                "base": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                                "fiber": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                                "bivector": {"type": "object", "additionalProperties": {"type": "string"}},
                                "hamiltonian": {"type": "string"},
                            },
                        }
                    },
                },
            ]
        },
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "section": {
            "type": "object",
            "minProperties": 1,
            "properties": {
                "one_form": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            },
            "additionalProperties": {"type": "string"},
        },
        "domain": {
            "type": "object",
            "required": ["box"],
            "additionalProperties": False,
            "properties": {
                "box": {"type": "array", "items": _INTERVAL, "minItems": 1},
                "grid": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "fiber_box": {"type": "array", "items": _INTERVAL},
            },
        },
        "flow": {
            "type": "object",
            "required": ["x0", "t1", "steps"],
            "additionalProperties": False,
            "properties": {
                "x0": _NUMBER_LIST,
                "t0": {"type": "number"},
                "t1": {"type": "number"},
                "steps": {"type": "integer", "minimum": 1},
                "exact": {"type": "object", "additionalProperties": {"type": "string"}},
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                name: {"type": "number", "exclusiveMinimum": 0}
                for name in ("rank_tol", "residual_tol", "defect_tol", "flow_tol")
            },
        },
        "expected_rank": {"type": "integer", "minimum": 0},
        "checks": {"type": "array", "items": {"enum": list(CHECKS)}, "uniqueItems": True},
    },
}

DEFAULT_TOLERANCES = {
    "rank_tol": linalg.DEFAULT_TOL,
    "residual_tol": 1e-8,
    "defect_tol": 1e-8,
    "flow_tol": 1e-6,
}
DEFAULT_GRID_COUNT = 11


class ConfigError(InputError):
    """A config that cannot be read, fails the schema or has a bad expression."""

    def __init__(self, message: str, source: str = "<config>", location: str = ""):
        where = f"{source}: {location}: " if location else f"{source}: "
        super().__init__(where + message)
        self.source = source
        self.location = location


@dataclass(frozen=True)
class Experiment:
    """A validated config with everything compiled."""

    raw: dict
    source: str
    model: Model
    section: Section | None
    one_form: Callable[[np.ndarray], np.ndarray] | None
    grid: np.ndarray
    total_grid: np.ndarray | None
    flow: dict | None
    exact: dict[str, Callable[[float], float]] | None
    tolerances: dict
    checks: tuple[str, ...]
    expected_rank: int | None

    def with_checks(self, checks) -> "Experiment":
        return _replace(self, checks=tuple(checks))


def _replace(exp: Experiment, **changes) -> Experiment:
    fields = {k: getattr(exp, k) for k in Experiment.__dataclass_fields__}
    fields.update(changes)
    return Experiment(**fields)


def bundled_configs() -> list[str]:
    root = resources.files("hjcheck") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def resolve_path(path: str | Path) -> Path:
    """``path`` itself if it exists, else a bundled config of that name."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.name.endswith(".json") else p.name + ".json"
    if p.parent == Path(".") and name in bundled_configs():
        return Path(str(resources.files("hjcheck") / "configs" / name))
    raise ConfigError("file not found", str(path))


def read_config(path: str | Path) -> tuple[dict, str]:
    p = resolve_path(path)
    text = p.read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", str(p),
                          f"line {exc.lineno} column {exc.colno}") from None
    return raw, str(p)


def validate(raw: Any, source: str = "<config>") -> None:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        err = errors[0]
        location = ".".join(str(p) for p in err.absolute_path) or "(top level)"
        raise ConfigError(err.message, source, location)


def apply_overrides(raw: dict, tol: float | None = None, grid: int | None = None) -> dict:
    """Copy of ``raw`` with ``--tol`` (defect_tol) and ``--grid`` (every axis) applied."""
    raw = copy.deepcopy(raw)
    if tol is not None:
        raw.setdefault("tolerances", {})["defect_tol"] = float(tol)
    if grid is not None:
        raw["domain"]["grid"] = [int(grid)] * len(raw["domain"]["box"])
    return raw


def load(path: str | Path, tol: float | None = None, grid: int | None = None) -> Experiment:
    raw, source = read_config(path)
    validate(raw, source)
    raw = apply_overrides(raw, tol, grid)
    validate(raw, source)
    return compile_config(raw, source)


def compile_config(raw: dict, source: str = "<config>") -> Experiment:
    """Build the model, section and grids of an already validated config."""
    params = {k: float(v) for k, v in raw.get("params", {}).items()}
    model = _build_model(raw["model"], params, source)
    chart = model.chart

    section, one_form = _build_section(raw.get("section"), model, params, source)

    box = [tuple(iv) for iv in raw["domain"]["box"]]
    if len(box) != chart.n_base:
        raise ConfigError(f"{len(box)} intervals for a {chart.n_base}-dimensional base",
                          source, "domain.box")
    for i, (lo, hi) in enumerate(box):
        if not hi > lo:
            raise ConfigError(f"empty interval [{lo}, {hi}]", source, f"domain.box.{i}")
    counts = raw["domain"].get("grid", [DEFAULT_GRID_COUNT] * len(box))
    if len(counts) != len(box):
        raise ConfigError(f"{len(counts)} grid counts for {len(box)} intervals", source, "domain.grid")
    grid = uniform_grid(box, counts)

    total_grid = None
    if "fiber_box" in raw["domain"]:
        fbox = [tuple(iv) for iv in raw["domain"]["fiber_box"]]
        if len(fbox) != chart.n_fiber:
            raise ConfigError(f"{len(fbox)} intervals for a {chart.n_fiber}-dimensional fiber",
                              source, "domain.fiber_box")
        total_grid = uniform_grid(box + fbox, list(counts) + [min(counts)] * len(fbox))

    flow, exact = None, None
    if "flow" in raw:
        flow = dict(raw["flow"])
        if len(flow["x0"]) != chart.n_base:
            raise ConfigError(f"x0 has {len(flow['x0'])} components, base has {chart.n_base}",
                              source, "flow.x0")
        if not flow["t1"] > flow.get("t0", 0.0):
            raise ConfigError("t1 must exceed t0", source, "flow.t1")
        if "exact" in flow:
            exact = {}
            for name, text in flow["exact"].items():
                if name not in chart.names:
                    raise ConfigError(f"unknown coordinate {name!r}", source, f"flow.exact.{name}")
                node = _parse(text, ["time"] + list(params), source, f"flow.exact.{name}")
                f = compile_expr(node)
                exact[name] = (lambda fn: lambda s: fn({**params, "time": s}))(f)

    tolerances = {**DEFAULT_TOLERANCES, **raw.get("tolerances", {})}
    checks = tuple(raw["checks"])
    if ("lagrangian" in checks or "hj" in checks or "flow" in checks) and section is None:
        raise ConfigError("these checks need a section", source, "section")
    if "flow" in checks and flow is None:
        raise ConfigError("the flow check needs a flow block", source, "flow")
    return Experiment(raw, source, model, section, one_form, grid, total_grid, flow, exact,
                      tolerances, checks, raw.get("expected_rank"))


def _parse(text: str, declared, source: str, location: str):
    try:
        return parse(text, declared)
    except ParseError as exc:
        raise ConfigError(str(exc), source, location) from None


def _build_model(spec: dict, params: dict, source: str) -> Model:
    if "inline" in spec:
        return _inline_model(spec["inline"], params, source)
    name = spec["name"]
    if name not in REGISTRY:
        raise ConfigError(f"unknown model {name!r}; known models: {sorted(REGISTRY)}",
                          source, "model.name")
    entry = REGISTRY[name]
    model_params = {**entry.defaults, **spec.get("params", {})}
    h = None
    if "hamiltonian" in spec:
        if entry.hamiltonian_coords is None:
            raise ConfigError(f"model {name!r} has a fixed Hamiltonian", source, "model.hamiltonian")
        coords = entry.hamiltonian_coords(model_params)
        _parse(spec["hamiltonian"], list(coords) + list(params), source, "model.hamiltonian")
        h = expression_field(spec["hamiltonian"], coords, params)
    try:
        return build_model(name, spec.get("params", {}), h)
    except HJError as exc:
        raise ConfigError(str(exc), source, "model.params") from None


def _inline_model(spec: dict, params: dict, source: str) -> Model:
    try:
        chart = FiberedChart(tuple(spec["base"]), tuple(spec["fiber"]))
    except HJError as exc:
        raise ConfigError(str(exc), source, "model.inline") from None
    coords = list(chart.names)
    declared = coords + list(params)
    entries = {}
    for key, text in spec["bivector"].items():
        location = f"model.inline.bivector.{key}"
        parts = [s.strip() for s in key.split(",")]
        if len(parts) != 2 or any(p not in coords for p in parts):
            raise ConfigError("keys must be 'a,b' with a and b chart coordinates", source, location)
        a, b = chart.index(parts[0]), chart.index(parts[1])
        if a >= b:
            raise ConfigError("only strict upper-triangle entries (a before b in the chart) "
                              "may be given", source, location)
        f = compile_expr(_parse(text, declared, source, location))
        entries[(parts[0], parts[1])] = (lambda fn: lambda z: fn({**params, **dict(zip(coords, map(float, z)))}))(f)
    _parse(spec["hamiltonian"], declared, source, "model.inline.hamiltonian")
    h = expression_field(spec["hamiltonian"], coords, params)
    bivector = FiberedBivector.from_upper(chart, entries)
    return Model("inline", "generic", bivector, h, dict(params), spec)


def _build_section(spec: dict | None, model: Model, params: dict, source: str):
    if spec is None:
        return None, None
    chart = model.chart
    base = list(chart.base)
    declared = base + list(params)
    if model.family == "nonholonomic":
        if set(spec) != {"one_form"}:
            raise ConfigError("nonholonomic sections are given as 'one_form' with one expression "
                              "per configuration coordinate", source, "section")
        texts = spec["one_form"]
        if len(texts) != chart.n_base:
            raise ConfigError(f"{len(texts)} components for {chart.n_base} coordinates",
                              source, "section.one_form")
        for i, text in enumerate(texts):
            _parse(text, declared, source, f"section.one_form.{i}")
        one_form = expression_vector(texts, base, params)
        nh = model.detail
        return nh.section_from_one_form(one_form), one_form
    if "one_form" in spec:
        raise ConfigError("'one_form' is only used by nonholonomic models", source, "section.one_form")
    missing = [name for name in chart.fiber if name not in spec]
    extra = [name for name in spec if name not in chart.fiber]
    if extra:
        raise ConfigError(f"unknown fiber coordinates {extra}; fiber is {list(chart.fiber)}",
                          source, "section")
    if missing:
        raise ConfigError(f"missing fiber coordinates {missing}", source, "section")
    texts = [spec[name] for name in chart.fiber]
    for name, text in zip(chart.fiber, texts):
        _parse(text, declared, source, f"section.{name}")
    return Section(chart, expression_vector(texts, base, params)), None
