"""
Scenario documents: YAML in, validated ScenarioConfig out.

Errors carry the dotted key path and the 1-based line of the offending node.
"""
from typing import Any, Dict, List, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, model_validator

from .ErrorHandle import ConfigError
from ..enums.Enums import Command, ModelKind, ParameterKind


class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ModelKind
    coefficients: Dict[str, Any] = Field(default_factory=dict)
    provenance: str = ""


class GridSection(BaseModel):
    """Parameter grid: explicit values, or start/stop with log or linear spacing."""
    model_config = ConfigDict(extra="forbid")

    values: Optional[List[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    points: Optional[int] = None
    spacing: str = "linear"

    @model_validator(mode='after')
    def check_values(self):
        if self.values is None and (self.start is None or self.stop is None):
            raise ValueError("grid needs 'values' or both 'start' and 'stop'")
        if self.spacing not in ("linear", "log"):
            raise ValueError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.points is not None and self.points < 2:
            raise ValueError("grid needs at least 2 points")
        return self


class AnalysisSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    command: Command = Command.CLASSIFY
    parameter: Optional[ParameterKind] = None
    grid: Optional[GridSection] = None
    gamma: float = 0.0
    gamma_range: Optional[Tuple[float, float]] = None
    span: Optional[Tuple[float, float]] = None
    horizon: Optional[float] = None
    rf_interval: Optional[Tuple[float, float]] = None

    @model_validator(mode='after')
    def check_values(self):
        if self.command in (Command.SWEEP, Command.TIPPING) and self.parameter is None:
            raise ValueError(f"'{self.command.value}' needs analysis.parameter")
        if self.command in (Command.SWEEP, Command.TIPPING, Command.COLLAPSE) and self.grid is None:
            raise ValueError(f"'{self.command.value}' needs analysis.grid")
        if self.span is not None and self.span[1] <= self.span[0]:
            raise ValueError(f"span must be increasing, got {list(self.span)}")
        if self.horizon is not None and self.horizon <= 0:
            raise ValueError("horizon must be positive")
        return self


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: str = "results"
    trajectories: bool = True


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    description: str = ""
    model: ModelSection
    profile: Dict[str, Any]
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    settings: Dict[str, Any] = Field(default_factory=dict)
    output: OutputSection = Field(default_factory=OutputSection)
    _lines: Dict[str, int] = PrivateAttr(default_factory=dict)

    def line_of(self, key: Optional[str]) -> Optional[int]:
        return line_of(self._lines, key)

    def located(self, error: ConfigError) -> ConfigError:
        """The same error with the line of its key filled in."""
        if error.line is not None or not error.key:
            return error
        return ConfigError(error.detail, key=error.key, line=self.line_of(error.key))

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def __eq__(self, other) -> bool:
        # source line numbers are not part of the document
        return isinstance(other, ScenarioConfig) and self.to_dict() == other.to_dict()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False)

    @classmethod
    def from_dict(cls, data: Any, lines: Optional[Dict[str, int]] = None) -> "ScenarioConfig":
        lines = lines or {}
        if not isinstance(data, dict):
            raise ConfigError("scenario document must be a mapping", line=1)
        try:
            config = cls.model_validate(data)
            config._lines = lines
            return config
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(str(p) for p in first["loc"])
            raise ConfigError(first["msg"], key=key or None, line=line_of(lines, key)) from None

    @classmethod
    def from_yaml(cls, text: str) -> "ScenarioConfig":
        try:
            data = yaml.safe_load(text)
            lines = key_lines(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            raise ConfigError(f"YAML syntax error: {getattr(e, 'problem', e)}",
                              line=None if mark is None else mark.line + 1) from None
        return cls.from_dict(data, lines)

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_yaml(f.read())


def key_lines(text: str) -> Dict[str, int]:
    """Dotted key path -> 1-based line of its value node."""
    root = yaml.compose(text)
    lines: Dict[str, int] = {}

    def walk(node, path: str):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                child = f"{path}.{key_node.value}" if path else str(key_node.value)
                lines[child] = key_node.start_mark.line + 1
                walk(value_node, child)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                child = f"{path}[{i}]"
                lines[child] = item.start_mark.line + 1
                lines[f"{path}.{i}"] = lines[child]
                walk(item, child)

    if root is not None:
        walk(root, "")
    return lines


def line_of(lines: Dict[str, int], key: Optional[str]) -> Optional[int]:
    """Line of the key, or of its closest recorded ancestor."""
    while key:
        if key in lines:
            return lines[key]
        cut = max(key.rfind("."), key.rfind("["))
        key = key[:cut] if cut > 0 else ""
    return None
