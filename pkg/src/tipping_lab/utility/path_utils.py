import importlib.resources as pkg_resources
from typing import List

from tipping_lab import data  # paket içinde data klasörü

SCENARIO_DIR = "scenarios"


def load_scenario_text(filename: str) -> str:
    """
    Paket içindeki data/scenarios klasöründen YAML metnini oku.
    """
    resource = pkg_resources.files(data).joinpath(SCENARIO_DIR).joinpath(filename)
    if not resource.is_file():
        raise FileNotFoundError(f"bundled scenario file not found: {filename}")
    return resource.read_text(encoding="utf-8")


def list_scenario_files() -> List[str]:
    folder = pkg_resources.files(data).joinpath(SCENARIO_DIR)
    return sorted(p.name for p in folder.iterdir() if p.name.endswith(".yaml"))
