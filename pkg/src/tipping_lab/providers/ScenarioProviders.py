import glob
import logging
import os
from typing import List, Optional

from ..core import Config as cfg
from ..core.ErrorHandle import ConfigError, ScenarioError
from ..core.Scenario import ScenarioConfig
from ..enums.Enums import ScenarioSource
from ..processing.ResultHandle import Result
from ..utility.path_utils import load_scenario_text

logger = logging.getLogger(__name__)


class BundledScenarioProvider:
    """Scenarios shipped under tipping_lab/data/scenarios, addressed by registry name."""

    def __init__(self):
        self.name = ScenarioSource.BUNDLED.value

    def get_name(self) -> str:
        return self.name

    def list_names(self) -> List[str]:
        return sorted(cfg.SCENARIO_REGISTRY)

    def load(self, name: str) -> Result[ScenarioConfig, ScenarioError]:
        try:
            entry = cfg.get_scenario_entry(name)
            config = ScenarioConfig.from_yaml(load_scenario_text(entry["file"]))
            logger.info("loaded bundled scenario %s", name)
            return Result.ok(config)
        except (KeyError, FileNotFoundError, ConfigError) as e:
            return Result.fail(ScenarioError(self.name, e, f"{self.name} scenario '{name}': {e}"))


class FileScenarioProvider:
    """YAML scenario documents on disk; names are paths, relative to base_dir when given."""

    def __init__(self, base_dir: Optional[str] = None):
        self.name = ScenarioSource.FILE.value
        self.base_dir = base_dir

    def get_name(self) -> str:
        return self.name

    def _path(self, name: str) -> str:
        if self.base_dir and not os.path.isabs(name):
            return os.path.join(self.base_dir, name)
        return name

    def list_names(self) -> List[str]:
        if not self.base_dir:
            return []
        return sorted(os.path.relpath(p, self.base_dir)
                      for p in glob.glob(os.path.join(self.base_dir, "*.y*ml")))

    def load(self, name: str) -> Result[ScenarioConfig, ScenarioError]:
        path = self._path(name)
        try:
            return Result.ok(ScenarioConfig.from_file(path))
        except (OSError, ConfigError) as e:
            return Result.fail(ScenarioError(path, e))
