from enum import Enum


class CaseName(str, Enum):
    A = "A"
    B1 = "B1"
    B2 = "B2"
    C1 = "C1"
    C2 = "C2"
    UNCLASSIFIABLE = "Unclassifiable"


class ProfileKind(str, Enum):
    ARCTAN_SIGMOID = "arctan-sigmoid"
    GAUSSIAN_IMPULSE = "gaussian-impulse"
    CONSTANT = "constant"
    CUSTOM_SAMPLED = "custom-sampled"
    EXPRESSION = "expression"


class ModelKind(str, Enum):
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE_HOLLING2 = "additive-holling2"
    HOLLING3_FAMILY = "holling3-family"
    MIGRATION_FAMILY = "migration-family"
    POLYNOMIAL = "polynomial"


class Side(str, Enum):
    UPPER = "upper"
    LOWER = "lower"


class Direction(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    BOTH = "both"


class TerminalStatus(str, Enum):
    REACHED_HORIZON = "reached-horizon"
    BLOW_UP = "blow-up"
    STEP_COLLAPSE = "step-collapse"


class DichotomyType(str, Enum):
    ATTRACTIVE = "attractive"
    REPULSIVE = "repulsive"
    INDETERMINATE = "indeterminate"


class NotFoundReason(str, Enum):
    COLLAPSED = "collapsed-to-fewer"
    INDETERMINATE = "indeterminate-dichotomy"


class Monotonicity(str, Enum):
    NONDECREASING = "nondecreasing"
    NONINCREASING = "nonincreasing"
    UNKNOWN = "unknown"


class AlleeType(str, Enum):
    STRONG = "Strong"
    WEAK = "Weak"
    INDETERMINATE = "Indeterminate"


class ParameterKind(str, Enum):
    RATE = "rate"
    PHASE = "phase"
    SIZE_SPLIT = "size-split"
    SIZE_SHIFT = "size-shift"


class Command(str, Enum):
    AUDIT = "audit"
    CLASSIFY = "classify"
    SWEEP = "sweep"
    TIPPING = "tipping"
    ALLEE = "allee"
    COLLAPSE = "collapse"


class ScenarioSource(str, Enum):
    BUNDLED = "bundled"
    FILE = "file"
