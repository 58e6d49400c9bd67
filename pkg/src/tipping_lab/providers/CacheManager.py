import hashlib
import json
import logging
import os
import time
from functools import lru_cache
from typing import TYPE_CHECKING, Optional

import numpy as np
import pandas as pd

from ..enums.Enums import Direction, TerminalStatus

if TYPE_CHECKING:
    from ..core.Settings import IntegratorSettings
    from ..fields.ScalarField import ScalarField
    from ..processing.Integrator import Trajectory

logger = logging.getLogger(__name__)

_COLUMNS = ("t", "x", "dxdt", "fx", "int_fx")


class TrajectoryCache:
    """Integration results on disk: one parquet file of samples plus a JSON sidecar per run."""

    def __init__(self, cache_dir: str = ".cache", expiry_hours: Optional[float] = None):
        self.cache_dir = cache_dir
        self.expiry_seconds = None if expiry_hours is None else expiry_hours * 3600
        os.makedirs(cache_dir, exist_ok=True)

    def _generate_key(self, field_: "ScalarField", s: float, x0: float, t_end: float,
                      settings: "IntegratorSettings") -> str:
        # field config + exact float reprs identify the run
        payload = json.dumps({
            "field": field_.to_config(),
            "s": repr(float(s)),
            "x0": repr(float(x0)),
            "t_end": repr(float(t_end)),
            "settings": settings.model_dump(mode="json"),
        }, sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()

    def _paths(self, key: str):
        base = os.path.join(self.cache_dir, key)
        return f"{base}.parquet", f"{base}.json"

    def load(self, field_, s, x0, t_end, settings) -> Optional["Trajectory"]:
        from ..processing.Integrator import Trajectory

        data_path, meta_path = self._paths(self._generate_key(field_, s, x0, t_end, settings))
        if not (os.path.exists(data_path) and os.path.exists(meta_path)):
            return None
        if self.expiry_seconds is not None and time.time() - os.path.getmtime(data_path) > self.expiry_seconds:
            logger.info("cache entry %s expired, removing", os.path.basename(data_path))
            self._remove(data_path, meta_path)
            return None
        try:
            frame = pd.read_parquet(data_path, engine="pyarrow")
            with open(meta_path, encoding="utf-8") as f:
                meta = json.load(f)
            return Trajectory(
                anchor=meta["anchor"], x0=meta["x0"],
                **{c: frame[c].to_numpy(dtype=float) for c in _COLUMNS},
                direction=Direction(meta["direction"]),
                status=TerminalStatus(meta["status"]),
                event_time=meta["event_time"], event_sign=meta["event_sign"],
            )
        except Exception as e:
            logger.warning("cache read failed for %s: %s", data_path, e)
            return None

    def store(self, field_, s, x0, t_end, settings, traj: "Trajectory") -> None:
        data_path, meta_path = self._paths(self._generate_key(field_, s, x0, t_end, settings))
        try:
            pd.DataFrame({c: np.asarray(getattr(traj, c)) for c in _COLUMNS}).to_parquet(
                data_path, engine="pyarrow", index=False)
            with open(meta_path, "w", encoding="utf-8") as f:
                json.dump({"anchor": traj.anchor, "x0": traj.x0, "direction": traj.direction.value,
                           "status": traj.status.value, "event_time": traj.event_time,
                           "event_sign": traj.event_sign}, f)
        except Exception as e:
            logger.warning("cache write failed for %s: %s", data_path, e)

    def clear(self) -> int:
        removed = 0
        for name in os.listdir(self.cache_dir):
            if name.endswith((".parquet", ".json")):
                os.remove(os.path.join(self.cache_dir, name))
                removed += 1
        return removed

    @staticmethod
    def _remove(*paths: str) -> None:
        for p in paths:
            if os.path.exists(p):
                os.remove(p)


@lru_cache(maxsize=None)
def _cache_at(cache_dir: str) -> TrajectoryCache:
    return TrajectoryCache(cache_dir)


def cache_for(cache_dir: Optional[str]) -> Optional[TrajectoryCache]:
    """Shared cache instance for a directory; None disables caching."""
    if not cache_dir:
        return None
    return _cache_at(os.path.abspath(cache_dir))
