import json
import logging
from unittest.mock import MagicMock

import pandas as pd
import pytest

from tipping_lab import cli
from tipping_lab.core import Pipeline
from tipping_lab.core.LoggingConfig import setup_logging
from tipping_lab.enums.Enums import CaseName


@pytest.fixture
def scenario_file(tmp_path, toy_text):
    path = tmp_path / "toy.yaml"
    path.write_text(toy_text, encoding="utf-8")
    return str(path)


@pytest.fixture(autouse=True)
def restore_logging():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers[:]:
        if handler not in handlers:
            root.removeHandler(handler)
            handler.close()
    root.setLevel(level)


def _fake_classify(monkeypatch, case=CaseName.A):
    label = MagicMock()
    label.case = case
    label.gap, label.t_gamma, label.residuals = 0.5, 2.0, {}
    label.to_record.return_value = {"case": case.value}
    label.to_frame.return_value = pd.DataFrame({"t": [0.0]})
    monkeypatch.setattr(Pipeline, "classify", MagicMock(return_value=label))

#-----------------------------------------------------------------------------------------------

def test_parser_flags():
    args = cli.build_parser().parse_args(["tipping", "toy.yaml", "--span", "-10", "10", "--rate", "0.5",
                                          "--tol-bisect", "1e-4", "--no-write"])
    assert args.command == "tipping"
    assert args.span == [-10.0, 10.0]
    assert args.tol_bisect == 1e-4
    assert args.write is False
    overrides = cli._overrides(args, environ={"TIPPINGLAB_WORKERS": "2"})
    assert overrides["command"] == "tipping"
    assert overrides["rate"] == 0.5
    assert overrides["workers"] == 2
    assert "phase" not in overrides


def test_scenario_subcommand_override():
    args = cli.build_parser().parse_args(["scenario", "invasion", "--command", "audit"])
    assert cli._overrides(args, environ={})["command"] == "audit"
    args = cli.build_parser().parse_args(["scenario", "invasion"])
    assert "command" not in cli._overrides(args, environ={})


def test_list_scenarios(capsys):
    assert cli.run(["scenario", "--list"]) == 0
    out = capsys.readouterr().out
    assert "holling3-strong" in out
    assert len(out.strip().splitlines()) == 5


def test_unknown_command():
    with pytest.raises(SystemExit):
        cli.run(["simulate", "toy.yaml"])

#-----------------------------------------------------------------------------------------------

def test_classify_prints_record(monkeypatch, capsys, scenario_file, tmp_path):
    _fake_classify(monkeypatch)
    code = cli.run(["classify", scenario_file, "--no-write", "--out", str(tmp_path / "out")], environ={})
    assert code == 0
    assert json.loads(capsys.readouterr().out) == {"case": "A"}


def test_classify_writes_run_directory(monkeypatch, capsys, scenario_file, tmp_path):
    _fake_classify(monkeypatch)
    out = tmp_path / "out"
    assert cli.run(["classify", scenario_file, "--out", str(out)], environ={}) == 0
    assert "results:" in capsys.readouterr().err
    runs = [p for p in out.iterdir() if p.name.startswith("toy-")]
    assert len(runs) == 1
    assert (runs[0] / "result.json").exists()
    assert (out / "logs" / "tippinglab.log").exists()


def test_unclassifiable_exit_code(monkeypatch, scenario_file, tmp_path):
    _fake_classify(monkeypatch, CaseName.UNCLASSIFIABLE)
    assert cli.run(["classify", scenario_file, "--no-write", "--out", str(tmp_path)], environ={}) == 2


def test_missing_file(capsys, tmp_path):
    code = cli.run(["classify", str(tmp_path / "missing.yaml"), "--no-write", "--out", str(tmp_path)],
                   environ={})
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_bad_environment(capsys, scenario_file):
    code = cli.run(["classify", scenario_file], environ={"TIPPINGLAB_RTOL": "tight"})
    assert code == 1
    assert "TIPPINGLAB_RTOL" in capsys.readouterr().err

#-----------------------------------------------------------------------------------------------

def test_setup_logging(tmp_path):
    setup_logging(logging.DEBUG, log_dir=str(tmp_path / "logs"))
    logging.getLogger("tipping_lab.test").debug("hello")
    for handler in logging.getLogger().handlers:
        handler.flush()
    text = (tmp_path / "logs" / "tippinglab.log").read_text(encoding="utf-8")
    assert "[DEBUG] tipping_lab.test - hello" in text
