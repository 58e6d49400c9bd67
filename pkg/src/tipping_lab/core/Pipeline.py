import asyncio
from dataclasses import dataclass, field
import inspect
import logging
import os
import time
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import Config as cfg
from .ErrorHandle import ConfigError, ScenarioError
from .Scenario import AnalysisSection, ScenarioConfig
from .Settings import AnalysisSettings
from ..enums.Enums import CaseName, Command, ParameterKind, ScenarioSource
from ..fields.Audit import hypothesis_audit
from ..fields.Profiles import TransitionProfile
from ..fields.ScalarField import additive_family
from ..models.Allee import allee_type, balance_average, capacity_crossings, collapse_scan, collapse_scan_async
from ..models.PopulationModels import PopulationModel
from ..processing.Classify import classify
from ..processing.Hyperbolic import in_Rf
from ..processing.Mappers import MapperFactory
from ..processing.ResultHandle import Result, async_result_decorator, result_decorator
from ..processing.Tipping import (ProfileBuilder, find_phase_tipping, find_rate_tipping, find_shift_tipping,
                                  find_size_tipping, sweep, sweep_async, sweep_frame)
from ..providers.IProvider import IScenarioProvider
from ..providers.ProvidersFactory import ScenarioProviderFactory
from ..utility.Exporters import run_directory, write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNCLASSIFIABLE = 2

# CLI transform flag -> profile transform
TRANSFORM_FLAGS = {"rate": "rate", "phase": "phase", "size": "scale"}


@dataclass
class AnalysisResult:
    command: Command
    exit_code: int
    record: Dict[str, Any]
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    run_dir: Optional[str] = None
    execution_time: float = 0.0
    logs: List[str] = field(default_factory=list)


@dataclass
class AnalysisContext:
    config: ScenarioConfig
    overrides: Dict[str, Any] = field(default_factory=dict)
    emit: bool = True
    settings: Optional[AnalysisSettings] = None
    model: Optional[PopulationModel] = None
    profile: Optional[TransitionProfile] = None
    grid: Optional[np.ndarray] = None
    record: Dict[str, Any] = field(default_factory=dict)
    frames: Dict[str, pd.DataFrame] = field(default_factory=dict)
    exit_code: int = EXIT_OK
    run_dir: Optional[str] = None
    logs: List[str] = field(default_factory=list)
    start_time: float = field(default_factory=time.time)


class AnalysisPipeline:
    """validate -> build model -> build profile -> analyse -> emit, railway style."""

    # ASENKRON methods
    async def execute_async(self, config: ScenarioConfig, overrides: Optional[Dict[str, Any]] = None,
                            emit: bool = True) -> Result[AnalysisResult, Exception]:
        context = AnalysisContext(config=config, overrides=dict(overrides or {}), emit=emit)
        return await self._compose_async(
            self._validate_inputs,
            self._build_model,
            self._build_profile,
            self._analyse_async,
            self._emit_artifacts,
            self._generate_final_result,
        )(context)

    def _compose_async(self, *funcs: Callable) -> Callable:
        async def composed(input: AnalysisContext) -> Result[AnalysisResult, Exception]:
            current_result = Result.ok(input)
            for func in funcs:
                if not current_result.success:
                    break
                if inspect.iscoroutinefunction(func):
                    current_result = await func(current_result.value)
                else:
                    current_result = func(current_result.value)
            return current_result
        return composed

    @async_result_decorator
    async def _analyse_async(self, context: AnalysisContext) -> AnalysisContext:
        command = context.config.analysis.command
        if command == Command.SWEEP:
            family, builder = self._sweep_target(context)
            points = await sweep_async(family, builder, context.grid, context.config.analysis.span, context.settings)
            self._sweep_outcome(context, points)
        elif command == Command.COLLAPSE:
            scan = await collapse_scan_async(context.model, context.profile, context.grid,
                                             self._horizon(context, cfg.COLLAPSE_TAIL_HORIZON), context.settings)
            self._collapse_outcome(context, scan)
        else:
            # blocking analyses (their own process pools use asyncio.run) go to a worker thread
            await asyncio.to_thread(self._dispatch, context)
        return context

    # SENKRON metodlar
    def execute_sync(self, config: ScenarioConfig, overrides: Optional[Dict[str, Any]] = None,
                     emit: bool = True) -> Result[AnalysisResult, Exception]:
        context = AnalysisContext(config=config, overrides=dict(overrides or {}), emit=emit)
        return self._compose_sync(
            self._validate_inputs,
            self._build_model,
            self._build_profile,
            self._analyse_sync,
            self._emit_artifacts,
            self._generate_final_result,
        )(context)

    def _compose_sync(self, *funcs: Callable) -> Callable:
        def composed(input: AnalysisContext) -> Result[AnalysisResult, Exception]:
            current_result = Result.ok(input)
            for func in funcs:
                if not current_result.success:
                    break
                current_result = func(current_result.value)
            return current_result
        return composed

    @result_decorator
    def _analyse_sync(self, context: AnalysisContext) -> AnalysisContext:
        self._dispatch(context)
        return context

    # ORTAK metodlar (hem sync hem async için)

    @result_decorator
    def _validate_inputs(self, context: AnalysisContext) -> AnalysisContext:
        """Applies flag/env overrides to the document and resolves settings."""
        config = context.config.model_copy(deep=True)
        o = context.overrides
        analysis_updates = {}
        if o.get("horizon") is not None:
            analysis_updates["horizon"] = float(o["horizon"])
        if o.get("span") is not None:
            span = tuple(float(v) for v in o["span"])
            if len(span) != 2 or span[1] <= span[0]:
                raise ConfigError(f"span must be two increasing numbers, got {list(span)}", key="span")
            analysis_updates["span"] = span
        if o.get("command") is not None:
            analysis_updates["command"] = Command(o["command"])
        if analysis_updates:
            try:
                config.analysis = AnalysisSection.model_validate({**config.analysis.model_dump(), **analysis_updates})
            except ValidationError as e:
                raise ConfigError(e.errors()[0]["msg"], key="analysis") from None
        transforms = [{TRANSFORM_FLAGS[k]: float(o[k])} for k in ("rate", "phase", "size") if o.get(k) is not None]
        if transforms:
            config.profile = dict(config.profile)
            config.profile["transforms"] = list(config.profile.get("transforms") or []) + transforms
        if o.get("out") is not None:
            config.output = config.output.model_copy(update={"dir": str(o["out"])})
        context.config = config
        context.settings = MapperFactory.create_mapper("settings", overrides=o).map(config)
        if config.analysis.command in (Command.SWEEP, Command.TIPPING, Command.COLLAPSE):
            context.grid = MapperFactory.create_mapper("grid", settings=context.settings).map(config)
        context.logs.append(f"command {config.analysis.command.value} on scenario '{config.name}'")
        return context

    @result_decorator
    def _build_model(self, context: AnalysisContext) -> AnalysisContext:
        context.model = MapperFactory.create_mapper("model").map(context.config)
        context.logs.append(f"model {context.model.kind.value}")
        return context

    @result_decorator
    def _build_profile(self, context: AnalysisContext) -> AnalysisContext:
        context.profile = MapperFactory.create_mapper("profile").map(context.config)
        context.logs.append(f"profile {context.profile.describe()}")
        return context

    def _horizon(self, context: AnalysisContext, default: float) -> float:
        horizon = context.config.analysis.horizon
        return default if horizon is None else float(horizon)

    def _dispatch(self, context: AnalysisContext) -> None:
        command = context.config.analysis.command
        analysis = context.config.analysis
        model, profile, settings = context.model, context.profile, context.settings

        if command == Command.AUDIT:
            lo, hi = analysis.gamma_range or profile.extrema()
            report = hypothesis_audit(model.family, (lo, hi))
            limits = sorted(set(profile.limits))
            membership = [in_Rf(model.family, g, settings=settings) for g in limits]
            context.record = {"audit": report.to_record(), "rf": [m.to_record() for m in membership]}
        elif command == Command.CLASSIFY:
            label = classify(model.family, profile, analysis.span, settings)
            context.record = label.to_record()
            if context.config.output.trajectories:
                context.frames["trajectories"] = label.to_frame()
            context.frames["classification"] = pd.DataFrame([self._label_row(label)])
            if label.case == CaseName.UNCLASSIFIABLE:
                context.exit_code = EXIT_UNCLASSIFIABLE
        elif command == Command.SWEEP:
            family, builder = self._sweep_target(context)
            self._sweep_outcome(context, sweep(family, builder, context.grid, analysis.span, settings))
        elif command == Command.TIPPING:
            result = self._tipping(context)
            context.record = result.to_record()
            context.frames["phi"] = result.to_frame()
        elif command == Command.ALLEE:
            horizon = self._horizon(context, cfg.ALLEE_HORIZON)
            report = allee_type(model, analysis.gamma, horizon, settings)
            context.record = report.to_record()
            if model.has("S"):
                context.record["balance_average"] = balance_average(model, analysis.gamma, horizon, settings)
                context.record["capacity_crossings"] = capacity_crossings(
                    model, analysis.gamma, horizon, settings).to_record()
            if report.triple is not None and report.triple.found:
                context.frames["triple"] = report.triple.to_frame()
        elif command == Command.COLLAPSE:
            scan = collapse_scan(model, profile, context.grid, self._horizon(context, cfg.COLLAPSE_TAIL_HORIZON),
                                 settings)
            self._collapse_outcome(context, scan)
        else:
            raise ConfigError(f"unsupported command {command}", key="analysis.command")
        context.logs.append(f"{command.value} finished")

    @staticmethod
    def _label_row(label) -> Dict[str, Any]:
        row = {"case": label.case.value, "gap": label.gap, "t_gamma": label.t_gamma}
        row.update(label.residuals)
        return row

    def _sweep_target(self, context: AnalysisContext):
        kind = context.config.analysis.parameter
        family = context.model.family
        if kind == ParameterKind.SIZE_SHIFT:
            family = additive_family(context.model.base_field)
        return family, ProfileBuilder(context.profile, kind)

    def _sweep_outcome(self, context: AnalysisContext, points) -> None:
        context.record = {"parameter": context.config.analysis.parameter.value,
                          "points": [p.to_record() for p in points]}
        context.frames["sweep"] = sweep_frame(points)

    def _collapse_outcome(self, context: AnalysisContext, scan) -> None:
        context.record = scan.to_record()
        context.frames["collapse"] = scan.to_frame()
        if context.config.output.trajectories:
            context.frames["curves"] = scan.curves_frame()

    def _tipping(self, context: AnalysisContext):
        analysis = context.config.analysis
        lo, hi = float(np.min(context.grid)), float(np.max(context.grid))
        family, profile, settings = context.model.family, context.profile, context.settings
        tol = settings.bisection_tol
        if analysis.parameter == ParameterKind.RATE:
            return find_rate_tipping(family, profile, lo, hi, tol, settings, analysis.rf_interval)
        if analysis.parameter == ParameterKind.PHASE:
            return find_phase_tipping(family, profile, lo, hi, tol, settings, analysis.rf_interval)
        if analysis.parameter == ParameterKind.SIZE_SPLIT:
            return find_size_tipping(family, profile, lo, hi, tol, settings)
        return find_shift_tipping(context.model.base_field, profile, lo, hi, tol, settings)

    @result_decorator
    def _emit_artifacts(self, context: AnalysisContext) -> AnalysisContext:
        """One directory per run: config snapshot, result.json and one CSV per table."""
        if not context.emit:
            return context
        config = context.config
        run_dir = run_directory(config.output.dir, config.name)
        snapshot = config.model_copy(update={"settings": context.settings.model_dump(mode="json")})
        with open(os.path.join(run_dir, "config.yaml"), "w", encoding="utf-8") as f:
            f.write(snapshot.to_yaml())
        write_json({"scenario": config.name, "command": config.analysis.command.value,
                    "result": context.record}, os.path.join(run_dir, "result.json"))
        for name, frame in sorted(context.frames.items()):
            write_csv(frame, os.path.join(run_dir, f"{name}.csv"))
        context.run_dir = run_dir
        context.logs.append(f"artifacts in {run_dir}")
        return context

    @result_decorator
    def _generate_final_result(self, context: AnalysisContext) -> AnalysisResult:
        exec_time = time.time() - context.start_time
        context.logs.append(f"Execution time: {exec_time:.2f} sec")
        return AnalysisResult(command=context.config.analysis.command, exit_code=context.exit_code,
                              record=context.record, frames=context.frames, run_dir=context.run_dir,
                              execution_time=exec_time, logs=context.logs)


class TippingLabAPI:
    """Scenario provider + analysis pipeline with Result pattern"""

    def __init__(self, source: ScenarioSource = ScenarioSource.BUNDLED, use_cache: bool = True, **kwargs: Any):
        self.provider: IScenarioProvider = ScenarioProviderFactory.create_provider(source, use_cache, **kwargs)
        self.pipeline = AnalysisPipeline()

    def load(self, name: str) -> Result[ScenarioConfig, ScenarioError]:
        return self.provider.load(name)

    def list_scenarios(self) -> List[str]:
        return self.provider.list_names()

    def _config(self, scenario: Union[str, ScenarioConfig]) -> Result[ScenarioConfig, ScenarioError]:
        if isinstance(scenario, ScenarioConfig):
            return Result.ok(scenario)
        return self.provider.load(scenario)

    def run_sync(self, scenario: Union[str, ScenarioConfig], overrides: Optional[Dict[str, Any]] = None,
                 emit: bool = True) -> Result[AnalysisResult, Exception]:
        config_result = self._config(scenario)
        if not config_result.success:
            return config_result
        return self.pipeline.execute_sync(config_result.value, overrides, emit)

    async def run_async(self, scenario: Union[str, ScenarioConfig], overrides: Optional[Dict[str, Any]] = None,
                        emit: bool = True) -> Result[AnalysisResult, Exception]:
        """
        Asynchronously runs the pipeline on a scenario.

        Args:
            scenario (str | ScenarioConfig): provider name/path or an already parsed document.
            overrides (dict): flag/env overrides (rtol, atol, horizon, span, tol_bisect, workers, out,
                rate, phase, size, command, cache).
            emit (bool): write the run directory.

        Returns:
            Result[AnalysisResult, Exception]: analysis result or the first failing step's error.
        """
        config_result = self._config(scenario)
        if not config_result.success:
            return config_result
        return await self.pipeline.execute_async(config_result.value, overrides, emit)


def exit_code(result: Result) -> int:
    """0 success, 2 Unclassifiable, 1 any error."""
    code = result.map(lambda outcome: outcome.exit_code)
    return code.value if code.success else EXIT_ERROR
