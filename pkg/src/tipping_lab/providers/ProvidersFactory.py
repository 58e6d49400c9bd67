from typing import Dict

from ..core.ErrorHandle import ScenarioError
from ..core.Scenario import ScenarioConfig
from ..enums.Enums import ScenarioSource
from ..processing.ResultHandle import Result
from .IProvider import IScenarioProvider
from .ScenarioProviders import BundledScenarioProvider, FileScenarioProvider


class CachedScenarioProxy:
    """Parsed documents kept per name; copies are handed out."""

    def __init__(self, provider: IScenarioProvider):
        self._provider = provider
        self._cache: Dict[str, ScenarioConfig] = {}

    def load(self, name: str) -> Result[ScenarioConfig, ScenarioError]:
        cached = self._cache.get(name)
        if cached is not None:
            return Result.ok(cached.model_copy(deep=True))
        result = self._provider.load(name)
        if result.success:
            self._cache[name] = result.value.model_copy(deep=True)
        return result

    def __getattr__(self, name):
        return getattr(self._provider, name)


class ScenarioProviderFactory:
    """Provider factory sınıfı"""

    @staticmethod
    def create_provider(source: ScenarioSource, use_cache: bool = False, **kwargs) -> IScenarioProvider:
        source = ScenarioSource(source)
        if source == ScenarioSource.BUNDLED:
            provider = BundledScenarioProvider()
        elif source == ScenarioSource.FILE:
            provider = FileScenarioProvider(**kwargs)
        else:
            raise ValueError(f"Unknown scenario source: {source}")

        if use_cache:
            return CachedScenarioProxy(provider)
        return provider
