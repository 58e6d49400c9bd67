"""
Result emission: JSON records and CSV tables with floats written at 17
significant digits, one subdirectory per run.
"""
import json
import logging
import math
import os
import re
from datetime import datetime
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from ..core import Config as cfg

logger = logging.getLogger(__name__)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        # JSON has no inf/nan
        return value if math.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def to_json(record: Dict[str, Any]) -> str:
    return json.dumps(_jsonable(record), indent=2, sort_keys=False)


def write_json(record: Dict[str, Any], path: str) -> str:
    with open(path, "w", encoding="utf-8") as f:
        f.write(to_json(record))
        f.write("\n")
    logger.debug("wrote %s", path)
    return path


def frame_to_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=cfg.FLOAT_FORMAT, lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(frame_to_csv(frame))
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def run_directory(out_dir: str, name: str, stamp: Optional[str] = None) -> str:
    """<out_dir>/<name>-<stamp>; a numeric suffix keeps runs apart."""
    stamp = stamp or datetime.now().strftime("%Y%m%d-%H%M%S")
    base = os.path.join(out_dir, f"{re.sub(r'[^A-Za-z0-9_.-]+', '_', name)}-{stamp}")
    path, n = base, 1
    while os.path.exists(path):
        n += 1
        path = f"{base}-{n}"
    os.makedirs(path)
    return path
