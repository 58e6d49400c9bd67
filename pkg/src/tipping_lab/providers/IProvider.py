from typing import List, Protocol

from ..core.ErrorHandle import ScenarioError
from ..core.Scenario import ScenarioConfig
from ..processing.ResultHandle import Result


class IScenarioProvider(Protocol):
    """Senaryo sağlayıcı interface'i"""

    def load(self, name: str) -> Result[ScenarioConfig, ScenarioError]:
        """Senaryoyu adına (veya dosya yoluna) göre yükle"""
        ...

    def list_names(self) -> List[str]:
        """Yüklenebilir senaryo adları"""
        ...

    def get_name(self) -> str:
        """Sağlayıcı adı"""
        ...
