import json
import logging
import time

import pytest

from tipping_lab import cli
from tipping_lab.core.Scenario import ScenarioConfig
from tipping_lab.core.Settings import AnalysisSettings, AuditGrids
from tipping_lab.enums.Enums import CaseName
from tipping_lab.processing.Classify import classify
from tipping_lab.processing.Hyperbolic import in_Rf
from tipping_lab.processing.Mappers import ModelMapper, ProfileMapper
from tipping_lab.processing.Tipping import find_rate_tipping
from tipping_lab.utility.path_utils import load_scenario_text

RATE_SEARCH_BUDGET = 600.0


def _scenario(name):
    config = ScenarioConfig.from_yaml(load_scenario_text(f"{name}.yaml"))
    return ModelMapper().map(config), ProfileMapper().map(config)


@pytest.fixture(scope="module")
def invasion():
    return _scenario("invasion")


@pytest.fixture(scope="module")
def extinction():
    return _scenario("extinction")


@pytest.fixture
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers[:]:
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)

#-----------------------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.parametrize("rate, expected", [(1.0, CaseName.A), (0.1, CaseName.C1)])
def test_invasion_cases(invasion, rate, expected):
    model, profile = invasion
    label = classify(model.family, profile.rate(rate))
    assert label.case == expected


@pytest.mark.slow
@pytest.mark.parametrize("rate, expected", [(1.0, CaseName.A), (0.1, CaseName.C2)])
def test_extinction_cases(extinction, rate, expected):
    model, profile = extinction
    assert classify(model.family, profile.rate(rate)).case == expected


@pytest.mark.slow
@pytest.mark.parametrize("gamma, member", [(1.0, False), (2.0, True), (8.5, True), (9.0, False)])
def test_invasion_frozen_membership(invasion, gamma, member):
    model, _ = invasion
    assert bool(in_Rf(model.family, gamma, grids=AuditGrids.coarse())) is member

#-----------------------------------------------------------------------------------------------

@pytest.mark.slow
def test_invasion_has_one_critical_rate_within_budget(invasion):
    model, profile = invasion
    started = time.perf_counter()
    result = find_rate_tipping(model.family, profile, 0.1, 1.0, settings=AnalysisSettings())
    elapsed = time.perf_counter() - started
    assert len(result.critical) == 1
    critical = result.critical[0]
    assert 0.1 < critical.value < 1.0
    assert critical.half_width <= 1e-3
    assert critical.cases == (CaseName.C1, CaseName.A)
    assert elapsed < RATE_SEARCH_BUDGET


@pytest.mark.slow
def test_extinction_has_one_critical_rate(extinction):
    model, profile = extinction
    result = find_rate_tipping(model.family, profile, 0.1, 1.0, settings=AnalysisSettings())
    assert len(result.critical) == 1
    assert 0.1 < result.critical[0].value < 1.0
    assert result.critical[0].cases == (CaseName.C2, CaseName.A)

#-----------------------------------------------------------------------------------------------

@pytest.mark.slow
def test_cli_invasion_at_unit_rate(capsys, tmp_path, restore_logging):
    code = cli.run(["scenario", "invasion", "--rate", "1.0", "--no-write", "--out", str(tmp_path)], environ={})
    assert code == 0
    record = json.loads(capsys.readouterr().out)
    assert record["case"] == "A"
