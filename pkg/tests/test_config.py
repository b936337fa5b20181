import copy

import numpy as np
import pytest

from hjcheck.config import (
    DEFAULT_TOLERANCES,
    ConfigError,
    apply_overrides,
    bundled_configs,
    compile_config,
    read_config,
    resolve_path,
    validate,
)
from hjcheck.errors import InputError
from hjcheck.geometry import hamiltonian_field

INLINE = {
    "version": 1,
    "model": {"inline": {"base": ["x"], "fiber": ["y"], "bivector": {"x,y": "-k"},
                         "hamiltonian": "y^2/2"}},
    "params": {"k": 2.0},
    "section": {"y": "1"},
    "domain": {"box": [[0.0, 1.0]], "grid": [3]},
    "checks": ["lagrangian"],
}


def compiled(raw):
    validate(raw)
    return compile_config(raw)


def test_bundled_configs_validate_and_compile():
    for name in bundled_configs():
        raw, source = read_config(resolve_path(name))
        validate(raw, source)
        exp = compile_config(raw, source)
        assert exp.checks and exp.grid.shape[1] == exp.model.chart.n_base


def test_inline_bivector_fills_lower_triangle():
    exp = compiled(copy.deepcopy(INLINE))
    m = exp.model.bivector.matrix([0.3, 1.0])
    np.testing.assert_array_equal(m, [[0.0, -2.0], [2.0, 0.0]])
    # inline Hamiltonians are differentiated numerically
    np.testing.assert_allclose(hamiltonian_field(exp.model.bivector, exp.model.hamiltonian, [0.3, 1.0]),
                               [2.0, 0.0], atol=1e-8)
    assert exp.tolerances == DEFAULT_TOLERANCES


@pytest.mark.parametrize("key, fragment", [
    ("y,x", "strict upper-triangle"),
    ("x,x", "strict upper-triangle"),
    ("x,z", "chart coordinates"),
    ("x", "chart coordinates"),
])
def test_inline_bivector_keys_are_checked(key, fragment):
    raw = copy.deepcopy(INLINE)
    raw["model"]["inline"]["bivector"] = {key: "1"}
    with pytest.raises(ConfigError) as info:
        compiled(raw)
    assert fragment in str(info.value)
    assert f"model.inline.bivector.{key}" in str(info.value)


def test_section_components_are_checked():
    raw = copy.deepcopy(INLINE)
    raw["section"] = {"y": "1", "w": "0"}
    with pytest.raises(ConfigError, match="unknown fiber"):
        compiled(raw)
    raw["section"] = {"one_form": ["1"]}
    with pytest.raises(ConfigError, match="only used by nonholonomic"):
        compiled(raw)
    raw["section"] = {"y": "y + 1"}
    with pytest.raises(ConfigError, match="section.y"):
        compiled(raw)


def test_nonholonomic_section_needs_one_form():
    raw, _ = read_config(resolve_path("nonholonomic-particle.json"))
    raw = copy.deepcopy(raw)
    raw["section"] = {"pa1": "0", "pa2": "1"}
    with pytest.raises(ConfigError, match="one_form"):
        compiled(raw)
    raw["section"] = {"one_form": ["0", "1"]}
    with pytest.raises(ConfigError, match="2 components for 3"):
        compiled(raw)


def test_model_errors():
    raw, _ = read_config(resolve_path("oscillator-hj.json"))
    raw = copy.deepcopy(raw)
    raw["model"]["hamiltonian"] = "q1"
    with pytest.raises(ConfigError, match="fixed Hamiltonian"):
        compiled(raw)
    del raw["model"]["hamiltonian"]
    raw["model"]["params"] = {"mass": -1.0}
    with pytest.raises(ConfigError, match="model.params"):
        compiled(raw)


def test_canonical_model_takes_a_hamiltonian():
    raw = {
        "version": 1,
        "model": {"name": "canonical", "params": {"n": 1}, "hamiltonian": "p1^2/2 - cos(q1)"},
        "section": {"p1": "sqrt(2*(E + cos(q1)))"},
        "params": {"E": 2.0},
        "domain": {"box": [[-1.0, 1.0]], "grid": [4]},
        "checks": ["hj"],
    }
    exp = compiled(raw)
    assert exp.model.hamiltonian([0.0, 2.0]) == pytest.approx(1.0)


def test_overrides_do_not_touch_the_input():
    raw = copy.deepcopy(INLINE)
    out = apply_overrides(raw, tol=1e-6, grid=9)
    assert out["tolerances"]["defect_tol"] == 1e-6 and out["domain"]["grid"] == [9]
    assert raw == INLINE
    with pytest.raises(ConfigError, match="domain.grid"):
        validate(apply_overrides(raw, grid=1))


def test_grid_and_fiber_box_shapes():
    raw, _ = read_config(resolve_path("nonholonomic-particle.json"))
    exp = compiled(copy.deepcopy(raw))
    assert exp.grid.shape == (27, 3)
    assert exp.total_grid.shape == (3 ** 5, 5)
    bad = copy.deepcopy(raw)
    bad["domain"]["grid"] = [3, 3]
    with pytest.raises(ConfigError, match="2 grid counts for 3 intervals"):
        compiled(bad)


def test_config_error_is_an_input_error():
    assert issubclass(ConfigError, InputError)
    with pytest.raises(ConfigError, match="file not found"):
        resolve_path("no-such-config")
