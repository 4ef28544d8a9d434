"""Loaders for the data files bundled with the package.

Every asset starts with a `# version:` line so downstream records can say
which template or table produced them. Text assets are returned with that
header stripped.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .records import EvidenceCategory


class AssetError(ValueError):
    pass


def _asset_root():
    return resources.files("factpipe").joinpath("assets")


def asset_path(relpath: str) -> Path:
    """Filesystem path of a bundled asset (the package is installed flat)."""
    return Path(str(_asset_root().joinpath(relpath)))


def asset_text(relpath: str) -> str:
    try:
        return _asset_root().joinpath(relpath).read_text(encoding="utf-8")
    except (FileNotFoundError, NotADirectoryError) as exc:
        raise AssetError(f"no bundled asset at {relpath!r}") from exc


@dataclass(frozen=True)
class PromptTemplate:
    version: str
    text: str

    def render(self, **kwargs: str) -> str:
        return self.text.format(**kwargs)


def parse_versioned_text(raw: str, *, what: str) -> PromptTemplate:
    lines = raw.split("\n")
    if not lines or not lines[0].startswith("# version:"):
        raise AssetError(f"{what} is missing its '# version:' header")
    version = lines[0].split(":", 1)[1].strip()
    if not version:
        raise AssetError(f"{what} has an empty version")
    body = "\n".join(lines[1:]).lstrip("\n")
    return PromptTemplate(version=version, text=body)


def load_prompt(name: str) -> PromptTemplate:
    return parse_versioned_text(asset_text(f"prompts/{name}.txt"), what=f"prompt {name}")


@dataclass(frozen=True)
class CategoryDefinitions:
    version: str
    language: str
    definitions: dict[EvidenceCategory, str]

    def as_block(self) -> str:
        lines = [f"{cat.value}: {self.definitions[cat]}" for cat in EvidenceCategory]
        return "\n".join(lines)


def load_category_definitions(language: str) -> CategoryDefinitions:
    """Category definitions in the article language; English is the fallback."""
    name = language if language in ("fr", "de", "en") else "en"
    data = yaml.safe_load(asset_text(f"categories/{name}.yaml"))
    try:
        version = data["version"]
        defs_raw = data["categories"]
    except (KeyError, TypeError) as exc:
        raise AssetError(f"malformed category asset {name}: {exc}") from exc
    definitions: dict[EvidenceCategory, str] = {}
    for cat in EvidenceCategory:
        if cat.value not in defs_raw:
            raise AssetError(f"category asset {name} lacks a definition for {cat.value}")
        definitions[cat] = str(defs_raw[cat.value]).strip()
    return CategoryDefinitions(version=version, language=data.get("language", name), definitions=definitions)


def default_mapping_table_path() -> Path:
    return asset_path("verdicts/rating_map.tsv")


def default_adapter_registry_path() -> Path:
    return asset_path("adapters/registry.yaml")


def default_rubric_dir() -> Path:
    return asset_path("rubrics")
