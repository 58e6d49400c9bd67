from typing import Any, Dict, Mapping, Optional, Protocol

import numpy as np
from pydantic import ValidationError

from ..core import Config as cfg
from ..core.ErrorHandle import ConfigError, InvalidSettings, TippingLabError
from ..core.Scenario import GridSection, ScenarioConfig
from ..core.Settings import AnalysisSettings
from ..enums.Enums import ParameterKind
from ..fields.Profiles import TransitionProfile
from ..models.PopulationModels import PopulationModel, build_model


class ISectionMapper(Protocol):
    """Scenario section -> domain object"""

    def map(self, config: ScenarioConfig) -> Any:
        """
        Builds the domain object of one section of the scenario.

        Args:
            config (ScenarioConfig): validated scenario document.

        Returns:
            Any: model, profile, settings or parameter grid.

        Raises:
            ConfigError: with the key path and source line of the offending entry.
        """
        ...


class ModelMapper:
    def map(self, config: ScenarioConfig) -> PopulationModel:
        section = config.model
        try:
            return build_model(section.kind, section.coefficients, provenance=section.provenance or config.name)
        except ConfigError as e:
            raise config.located(e) from None
        except TippingLabError as e:
            raise config.located(ConfigError(str(e), key="model.coefficients")) from None


class ProfileMapper:
    def map(self, config: ScenarioConfig) -> TransitionProfile:
        try:
            return TransitionProfile.from_config(config.profile, "profile")
        except ConfigError as e:
            raise config.located(e) from None


class SettingsMapper:
    """config.settings merged with overrides (flag > env > config > defaults)."""

    def __init__(self, overrides: Optional[Mapping[str, Any]] = None):
        self.overrides = dict(overrides or {})

    def map(self, config: ScenarioConfig) -> AnalysisSettings:
        data: Dict[str, Any] = {k: v for k, v in config.settings.items()}
        integrator = dict(data.pop("integrator", {}) or {})
        for key, value in self.overrides.items():
            if value is None:
                continue
            if key in ("rtol", "atol"):
                integrator[key] = value
            elif key == "tol_bisect":
                data["bisection_tol"] = value
            elif key == "workers":
                data["workers"] = value
            elif key == "cache":
                data["cache_dir"] = value
            elif key == "progress":
                data["progress"] = value
        if integrator:
            data["integrator"] = integrator
        try:
            return AnalysisSettings(**data)
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(["settings"] + [str(p) for p in first["loc"]])
            raise config.located(ConfigError(first["msg"], key=key)) from None
        except InvalidSettings as e:
            raise config.located(ConfigError(str(e), key="settings")) from None


class GridMapper:
    """Parameter grid of sweep/tipping/collapse requests."""

    def __init__(self, settings: Optional[AnalysisSettings] = None):
        self.settings = settings or AnalysisSettings()

    def map(self, config: ScenarioConfig) -> np.ndarray:
        grid = config.analysis.grid
        if grid is None:
            raise config.located(ConfigError("analysis.grid is required", key="analysis"))
        return self.from_section(grid, config.analysis.parameter)

    def from_section(self, grid: GridSection, parameter: Optional[ParameterKind] = None) -> np.ndarray:
        if grid.values is not None:
            return np.array(sorted(float(v) for v in grid.values))
        lo, hi = float(grid.start), float(grid.stop)
        if grid.spacing == "log":
            if not 0 < lo < hi:
                raise ConfigError(f"log grid needs 0 < start < stop, got [{lo}, {hi}]", key="analysis.grid")
            points = grid.points or max(2, int(np.ceil(self.settings.rate_scan_per_decade * np.log10(hi / lo))) + 1)
            return np.geomspace(lo, hi, points)
        if not lo < hi:
            raise ConfigError(f"grid needs start < stop, got [{lo}, {hi}]", key="analysis.grid")
        values = np.linspace(lo, hi, grid.points or self.settings.size_scan_points)
        if parameter in (ParameterKind.SIZE_SPLIT, ParameterKind.SIZE_SHIFT) and lo < 0 < hi:
            values = np.union1d(values, [0.0])
        return values


class MapperFactory:
    """Mapper factory sınıfı"""
    _mappers = {
        "model": ModelMapper,
        "profile": ProfileMapper,
        "settings": SettingsMapper,
        "grid": GridMapper,
    }

    @staticmethod
    def create_mapper(section: str, **kwargs) -> ISectionMapper:
        mapper_class = MapperFactory._mappers.get(section)
        if not mapper_class:
            raise ValueError(f"No mapper for section: {section}")
        return mapper_class(**kwargs)


def collect_overrides(flags: Mapping[str, Any], environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """Flag values win over TIPPINGLAB_* environment values; None means unset."""
    merged: Dict[str, Any] = {}
    for name in cfg.ENV_OVERRIDES:
        value = flags.get(name)
        if value is None:
            try:
                value = cfg.get_env_override(name, environ)
            except ValueError as e:
                suffix = cfg.ENV_OVERRIDES[name][0]
                raise ConfigError(f"bad environment value: {e}", key=cfg.ENV_PREFIX + suffix) from None
        if value is not None:
            merged[name] = value
    for name, value in flags.items():
        if name not in merged and value is not None:
            merged[name] = value
    return merged
