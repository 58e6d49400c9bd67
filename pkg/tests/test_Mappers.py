import numpy as np
import pytest

from tipping_lab.core.ErrorHandle import ConfigError
from tipping_lab.core.Scenario import GridSection, ScenarioConfig
from tipping_lab.core.Settings import AnalysisSettings
from tipping_lab.enums.Enums import ModelKind, ParameterKind
from tipping_lab.processing.Mappers import (GridMapper, MapperFactory, ModelMapper, ProfileMapper,
                                            SettingsMapper, collect_overrides)


@pytest.fixture
def toy(toy_text):
    return ScenarioConfig.from_yaml(toy_text)


def _config(text, old, new):
    return ScenarioConfig.from_yaml(text.replace(old, new))

#-----------------------------------------------------------------------------------------------

def test_model_mapper(toy):
    model = ModelMapper().map(toy)
    assert model.kind == ModelKind.POLYNOMIAL
    assert model.provenance == "toy"
    assert model.family.evaluate(0.0, 1.0, 0.25) == pytest.approx(0.25)


def test_model_mapper_unknown_coefficient(toy_text):
    config = _config(toy_text, "c1: 1.0", "c9: 1.0")
    with pytest.raises(ConfigError) as err:
        ModelMapper().map(config)
    assert err.value.key == "model.coefficients.c9"
    assert err.value.line == 5


def test_model_mapper_constraint_violation(toy_text):
    text = toy_text.replace("kind: polynomial", "kind: multiplicative").replace(
        "    c1: 1.0\n    c3: -1.0\n    direction: {c0: 1.0}\n", "    r: -1.0\n    K: 1.0\n    S: 0.5\n")
    with pytest.raises(ConfigError) as err:
        ModelMapper().map(ScenarioConfig.from_yaml(text))
    assert err.value.key == "model.coefficients"
    assert err.value.line == 4


def test_profile_mapper(toy, toy_text):
    profile = ProfileMapper().map(toy)
    assert profile(0.0) == pytest.approx(1.0)
    config = _config(toy_text, "kind: gaussian-impulse", "kind: triangle")
    with pytest.raises(ConfigError) as err:
        ProfileMapper().map(config)
    assert err.value.key == "profile.kind"
    assert err.value.line == 9

#-----------------------------------------------------------------------------------------------

def test_settings_mapper_reads_config(toy):
    settings = SettingsMapper().map(toy)
    assert settings.bisection_tol == 0.01
    assert settings.integrator.rtol == 1e-8


def test_settings_mapper_overrides_win(toy):
    overrides = {"rtol": 1e-9, "atol": None, "tol_bisect": 0.5, "workers": 2,
                 "cache": "/tmp/tipping-cache", "progress": True, "out": "elsewhere"}
    settings = SettingsMapper(overrides).map(toy)
    assert settings.integrator.rtol == 1e-9
    assert settings.integrator.atol == AnalysisSettings().integrator.atol
    assert settings.bisection_tol == 0.5
    assert settings.workers == 2
    assert settings.cache_dir == "/tmp/tipping-cache"
    assert settings.progress


def test_settings_mapper_unknown_key(toy_text):
    config = _config(toy_text, "  bisection_tol: 0.01", "  colour: 0.01")
    with pytest.raises(ConfigError) as err:
        SettingsMapper().map(config)
    assert err.value.key == "settings.colour"
    assert err.value.line == 17


def test_settings_mapper_invalid_value(toy):
    with pytest.raises(ConfigError) as err:
        SettingsMapper({"workers": 0}).map(toy)
    assert err.value.key == "settings"
    assert err.value.line == 16

#-----------------------------------------------------------------------------------------------

def test_log_grid(toy):
    grid = GridMapper(AnalysisSettings(rate_scan_per_decade=4)).map(toy)
    assert len(grid) == 9
    assert grid[0] == pytest.approx(0.1)
    assert grid[-1] == pytest.approx(10.0)
    assert np.allclose(np.diff(np.log10(grid)), 0.25)
    assert len(GridMapper().map(toy)) == 33


def test_size_grid_includes_zero():
    grid = GridMapper().from_section(GridSection(start=-1.0, stop=1.0, points=4), ParameterKind.SIZE_SPLIT)
    assert len(grid) == 5
    assert 0.0 in grid
    rate = GridMapper().from_section(GridSection(start=-1.0, stop=1.0, points=4), ParameterKind.RATE)
    assert 0.0 not in rate


def test_explicit_values_are_sorted():
    grid = GridMapper().from_section(GridSection(values=[2.0, 0.5, 1.0]))
    assert grid.tolist() == [0.5, 1.0, 2.0]


@pytest.mark.parametrize("section", [
    GridSection(start=0.0, stop=1.0, spacing="log"),
    GridSection(start=2.0, stop=1.0),
])
def test_bad_grid(section):
    with pytest.raises(ConfigError) as err:
        GridMapper().from_section(section)
    assert err.value.key == "analysis.grid"


def test_grid_required(toy_text):
    config = _config(toy_text, "  command: tipping\n  parameter: rate\n  grid: {start: 0.1, stop: 10.0, spacing: log}\n",
                     "  command: classify\n")
    with pytest.raises(ConfigError) as err:
        GridMapper().map(config)
    assert err.value.key == "analysis"
    assert err.value.line == 12

#-----------------------------------------------------------------------------------------------

def test_mapper_factory():
    assert isinstance(MapperFactory.create_mapper("grid"), GridMapper)
    assert MapperFactory.create_mapper("settings", overrides={"workers": 3}).overrides == {"workers": 3}
    with pytest.raises(ValueError):
        MapperFactory.create_mapper("output")


def test_collect_overrides_precedence():
    flags = {"rtol": None, "atol": 1e-11, "rate": 0.5, "span": None}
    environ = {"TIPPINGLAB_RTOL": "1e-6", "TIPPINGLAB_ATOL": "1e-3", "TIPPINGLAB_WORKERS": "3"}
    merged = collect_overrides(flags, environ)
    assert merged == {"rtol": 1e-6, "atol": 1e-11, "workers": 3, "rate": 0.5}


def test_collect_overrides_bad_environment():
    with pytest.raises(ConfigError) as err:
        collect_overrides({}, {"TIPPINGLAB_WORKERS": "many"})
    assert err.value.key == "TIPPINGLAB_WORKERS"
