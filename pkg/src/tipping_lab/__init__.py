"""
tipping_lab
===========

Tipping analysis of nonautonomous d-concave scalar equations and population
models with Allee effect.
"""

__version__ = "0.1.0"

# --- Core API ---
from .core.LoggingConfig import setup_logging
from .core.Pipeline import AnalysisPipeline, TippingLabAPI
from .core.Scenario import ScenarioConfig
from .core.Settings import AnalysisSettings, IntegratorSettings

# --- Enums ---
from .enums.Enums import CaseName, Command, ModelKind, ParameterKind, ScenarioSource

# --- Fields ---
from .fields.Profiles import TransitionProfile
from .fields.ScalarField import ParametricFamily, ScalarField, polynomial_field

# --- Processing ---
from .processing.Classify import classify, forward_attraction_probe
from .processing.Tipping import find_phase_tipping, find_rate_tipping, find_shift_tipping, find_size_tipping

# --- Models ---
from .models.PopulationModels import build_model, i_beta_sup
from .models.Allee import allee_type, collapse_scan, strength_ratios

__all__ = [
    "__version__",
    "setup_logging",
    "AnalysisPipeline", "TippingLabAPI", "ScenarioConfig",
    "AnalysisSettings", "IntegratorSettings",
    "CaseName", "Command", "ModelKind", "ParameterKind", "ScenarioSource",
    "TransitionProfile", "ParametricFamily", "ScalarField", "polynomial_field",
    "classify", "forward_attraction_probe",
    "find_rate_tipping", "find_phase_tipping", "find_size_tipping", "find_shift_tipping",
    "build_model", "i_beta_sup", "allee_type", "collapse_scan", "strength_ratios",
]
