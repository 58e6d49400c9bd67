import math
import os
from typing import Any, Dict, Optional

# Config.py

# Sayısal varsayılanlar (numeric defaults)
# Every tunable threshold of the analysis lives here; settings models read
# their defaults from this ledger.

# --- integrator ---
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_MAX_STEP = 1.0
DEFAULT_MIN_STEP = 1e-12
DEFAULT_OUTPUT_STEP = 0.05
GUARD_FACTOR = 4.0
INTEGRATOR_METHODS = ("DOP853", "RK45")

# --- pullback ---
PULLBACK_HORIZONS = (25.0, 50.0, 100.0, 200.0, 400.0)
PULLBACK_MAX_HORIZON = 1600.0
PULLBACK_TOL = 1e-7

# --- coercivity ---
COERCIVITY_SLOPE = 1.0
COERCIVITY_SEARCH_BOUND = 1e6
COERCIVITY_SHELL = 10.0          # sup of f/x taken over rho <= |x| <= SHELL*rho
COERCIVITY_SHELL_POINTS = 48
COERCIVITY_MAX_TIMES = 4001

# --- hyperbolic ---
SEPARATION_THRESHOLD = 1e-4
DICHOTOMY_MARGIN = 1e-3
DICHOTOMY_WINDOW = 50.0
DICHOTOMY_WINDOW_LENGTHS = 5     # window lengths sampled in [l, 2l]
CONTRACTION_TOL = 1e-9
CONTRACTION_MAX_ITER = 200
KERNEL_CUTOFF = 1e-12

# --- classify ---
TRACKING_TOL = 1e-4
TAIL_FRACTION = 0.2
TOL_B = 1e-5
PROFILE_TOL = 1e-6
SPAN_PAD_MIN = 50.0
SPAN_PAD_FRACTION = 0.25
MAX_SPAN = 2000.0

# --- tipping ---
BISECTION_TOL = 1e-3
RATE_SCAN_PER_DECADE = 16
SIZE_SCAN_POINTS = 33

# --- models ---
EXTINCTION_EPS = 1e-2
INDICATOR_WINDOWS = (100.0, 200.0, 400.0)
INDICATOR_STABILITY = 1e-3
ALLEE_HORIZON = 800.0
COLLAPSE_TAIL_HORIZON = 600.0
QUASIPERIODIC_FREQUENCY = math.sqrt(5.0) / 2.0

# --- audit grids ---
AUDIT_T_RANGE = (0.0, 200.0)
AUDIT_T_STEP = 0.05
AUDIT_X_FACTOR = 3.0
AUDIT_X_STEP = 0.05
AUDIT_X_MAX_POINTS = 801
AUDIT_GAMMA_POINTS = 33
AUDIT_FD_STEP = 1e-5
AUDIT_FD_TOL = 1e-6
AUDIT_H5_MARGIN = 1e-8
AUDIT_CHUNK = 400

# --- output ---
FLOAT_FORMAT = "%.17g"
ENV_PREFIX = "TIPPINGLAB_"

# Senaryo kayıt defteri
# key: scenario name used by the CLI
# file: bundled YAML under tipping_lab/data/scenarios
# command: default analysis of the scenario
SCENARIO_REGISTRY: Dict[str, Dict[str, Any]] = {
    'invasion': {
        'file': 'invasion.yaml',
        'command': 'classify',
        'description': 'Migration transition with a pulse above the future immigration level',
    },
    'extinction': {
        'file': 'extinction.yaml',
        'command': 'classify',
        'description': 'Migration transition with a pulse below the future immigration level',
    },
    'holling3-strong': {
        'file': 'holling3-strong.yaml',
        'command': 'collapse',
        'description': 'Holling III predation ramp on a strong Allee population',
    },
    'holling3-weak': {
        'file': 'holling3-weak.yaml',
        'command': 'collapse',
        'description': 'Holling III predation ramp on a weak Allee population',
    },
    'cubic-pulse': {
        'file': 'cubic-pulse.yaml',
        'command': 'tipping',
        'description': 'Toy cubic family -x^3+x+gamma with a gaussian pulse',
    },
}

# CLI flag -> (env var suffix, parser)
ENV_OVERRIDES = {
    'rtol': ('RTOL', float),
    'atol': ('ATOL', float),
    'horizon': ('HORIZON', float),
    'tol_bisect': ('TOL_BISECT', float),
    'workers': ('WORKERS', int),
    'out': ('OUT', str),
    'log_level': ('LOG_LEVEL', str),
}


def get_env_override(name: str, environ: Optional[Dict[str, str]] = None) -> Optional[Any]:
    """Ortam değişkeninden (TIPPINGLAB_*) override değeri oku"""
    if name not in ENV_OVERRIDES:
        raise KeyError(f"Unknown override: {name}")
    environ = os.environ if environ is None else environ
    suffix, parser = ENV_OVERRIDES[name]
    raw = environ.get(ENV_PREFIX + suffix)
    if raw is None or raw == "":
        return None
    return parser(raw)


def get_scenario_entry(name: str) -> Dict[str, Any]:
    """Return the registry entry of a bundled scenario"""
    try:
        return SCENARIO_REGISTRY[name]
    except KeyError:
        raise KeyError(f"Unknown scenario '{name}'. Available: {sorted(SCENARIO_REGISTRY)}") from None
