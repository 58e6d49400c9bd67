"""Generate API documentation automatically."""
from pathlib import Path

SECTIONS = {
    "core": ("Core Modules", ["Config", "Settings", "Scenario", "Pipeline", "ErrorHandle", "LoggingConfig"]),
    "fields": ("Fields and Profiles", ["Coefficients", "ScalarField", "Profiles", "Audit"]),
    "processing": ("Processing", ["Integrator", "Hyperbolic", "Classify", "Tipping", "Mappers", "ResultHandle"]),
    "models": ("Population Models", ["PopulationModels", "Allee"]),
    "providers": ("Providers", ["IProvider", "ScenarioProviders", "ProvidersFactory", "CacheManager"]),
    "utility": ("Utilities", ["Exporters", "parallel", "path_utils"]),
}


def generate_api_pages():
    """Generate API pages for all modules."""
    docs_path = Path("docs")
    api_path = docs_path / "api"
    api_path.mkdir(exist_ok=True)

    for package, (title, modules) in SECTIONS.items():
        blocks = [f"# {title}\n"]
        for module in modules:
            blocks.append(f"""::: tipping_lab.{package}.{module}
    options:
      show_root_heading: true
      show_source: true
      members_order: source
""")
        (api_path / f"{package}.md").write_text("\n".join(blocks))


if __name__ == "__main__":
    generate_api_pages()
