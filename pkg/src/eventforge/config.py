"""Pipeline configuration: a TOML file plus command-line overrides."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .dates import FlexDate, parse_iso
from .identify import DEFAULT_CATEGORY_PATTERNS, ConfigError, compile_category_patterns
from .ingest import PropertyMap, RegistryError, SourceConfig, source_kind, source_language
from .model import SourceKind
from .vocab import DBO, Namespaces

_TOP_KEYS = {
    "base", "languages", "creation_date", "output", "workdir", "id_map", "blacklist", "mapping_table",
    "type_alignment", "target_type_namespace", "place_types", "link_graph", "sentences", "matching",
    "category_patterns", "sources",
}
_SOURCE_KEYS = {"path", "namespace", "trust_rank", "creation_date", "event_roots", "properties"}


@dataclass
class PipelineConfig:
    sources: list[SourceConfig]
    languages: list[str]
    output: Path
    workdir: Path
    base: str | None = None
    creation_date: FlexDate | None = None
    id_map: Path | None = None
    blacklist: Path | None = None
    mapping_table: Path | None = None
    type_alignment: Path | None = None
    target_type_namespace: str | None = DBO
    place_types: list[str] = field(default_factory=list)
    link_graph: Path | None = None
    sentences: Path | None = None
    match_jaccard: float = 0.5
    match_undated: bool = True
    category_patterns: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_CATEGORY_PATTERNS))

    @property
    def ns(self) -> Namespaces:
        return Namespaces.from_env(self.base)

    def input_files(self) -> list[tuple[str, Path | None]]:
        files = [(f"source {s.name}", Path(s.path) if s.path else None) for s in self.sources]
        files += [
            ("id_map", self.id_map), ("blacklist", self.blacklist), ("mapping_table", self.mapping_table),
            ("type_alignment", self.type_alignment), ("link_graph", self.link_graph), ("sentences", self.sentences),
        ]
        return files

    def validate(self) -> None:
        """Fail fast before any work: languages, source names, patterns, files."""
        if not self.languages:
            raise ConfigError("at least one language must be configured")
        for s in self.sources:
            try:
                lang = source_language(s.name)
                source_kind(s.name)
            except RegistryError as exc:
                raise ConfigError(str(exc)) from None
            if lang is not None and lang not in self.languages:
                raise ConfigError(f"source {s.name} uses language {lang!r}, not in languages {self.languages}")
            if not s.path:
                raise ConfigError(f"source {s.name} has no input path")
        compile_category_patterns(self.category_patterns)
        if not 0.0 <= self.match_jaccard <= 1.0:
            raise ConfigError("matching.jaccard must lie in [0, 1]")
        missing = [f"{what}: {p}" for what, p in self.input_files() if p is not None and not p.is_file()]
        if missing:
            raise ConfigError("missing input files:\n  " + "\n  ".join(missing))


def _date(value: Any, where: str) -> FlexDate | None:
    if value is None:
        return None
    try:
        return parse_iso(str(value))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _path(base: Path, value: Any) -> Path | None:
    if value in (None, ""):
        return None
    p = Path(str(value)).expanduser()
    return p if p.is_absolute() else base / p


def _properties(data: dict, where: str) -> PropertyMap:
    try:
        return PropertyMap.from_mapping(data)
    except RegistryError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict, base_dir: Path, overrides: Iterable[str] = ()) -> PipelineConfig:
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    sources_data = dict(data.get("sources") or {})
    paths: dict[str, str] = {}
    for item in overrides:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise ConfigError(f"--source expects name=path, got {item!r}")
        paths[name.strip()] = path.strip()
    for name in paths:
        sources_data.setdefault(name, {})
    sources = []
    for name, sd in sources_data.items():
        extra = set(sd) - _SOURCE_KEYS
        if extra:
            raise ConfigError(f"sources.{name}: unknown keys {', '.join(sorted(extra))}")
        path = Path(paths[name]).expanduser() if name in paths else _path(base_dir, sd.get("path"))
        kind = source_kind(name) if name.split("-")[0] in ("wikidata", "yago", "wcep", "dbpedia", "wikipedia") else None
        props = sd.get("properties")
        if props is not None and kind is not SourceKind.KG:
            raise ConfigError(f"sources.{name}: properties only apply to knowledge-graph sources")
        sources.append(SourceConfig(
            name=name,
            path=str(path) if path else None,
            namespace=sd.get("namespace"),
            trust_rank=sd.get("trust_rank"),
            creation_date=_date(sd.get("creation_date"), f"sources.{name}.creation_date"),
            event_roots=list(sd.get("event_roots") or []),
            properties=_properties(props, f"sources.{name}.properties") if props is not None else PropertyMap(),
        ))
    output = _path(base_dir, data.get("output") or "eventkg.nq")
    workdir = _path(base_dir, data.get("workdir")) or output.with_name(output.name + ".work")
    matching = data.get("matching") or {}
    patterns = dict(DEFAULT_CATEGORY_PATTERNS)
    patterns.update(data.get("category_patterns") or {})
    return PipelineConfig(
        sources=sources,
        languages=[str(x).lower() for x in data.get("languages", ["en"])],
        output=output,
        workdir=workdir,
        base=data.get("base"),
        creation_date=_date(data.get("creation_date"), "creation_date"),
        id_map=_path(base_dir, data.get("id_map")),
        blacklist=_path(base_dir, data.get("blacklist")),
        mapping_table=_path(base_dir, data.get("mapping_table")),
        type_alignment=_path(base_dir, data.get("type_alignment")),
        target_type_namespace=data.get("target_type_namespace", DBO),
        place_types=list(data.get("place_types") or []),
        link_graph=_path(base_dir, data.get("link_graph")),
        sentences=_path(base_dir, data.get("sentences")),
        match_jaccard=float(matching.get("jaccard", 0.5)),
        match_undated=bool(matching.get("undated_compatible", True)),
        category_patterns=patterns,
    )


def load_config(path: str | Path, overrides: Iterable[str] = (), output: str | Path | None = None) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = config_from_dict(data, path.resolve().parent, overrides)
    if output is not None:
        cfg.output = Path(output)
        if "workdir" not in data:
            cfg.workdir = cfg.output.with_name(cfg.output.name + ".work")
    return cfg
