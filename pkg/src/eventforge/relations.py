"""Relation classification (temporal, structural, indirect, plain) and
interlinking counts (links, mentions)."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Callable, Hashable, Iterable, Iterator, Mapping

from .ingest import RegistryError, read_tsv
from .model import MemberKey, RawRelation, RelationCategory
from .vocab import CONTAINED_IN_PLACE, ROLE_ALIASES

logger = logging.getLogger(__name__)

GUARDS = ("both-endpoints-events", "subject-is-place", "none")
MAPPING_COLUMNS = ("source", "source_predicate_iri", "target_role_iri", "guard")
LINK_COLUMNS = ("language", "from_id", "to_id")
SENTENCE_COLUMNS = ("language", "sentence_id", "entity_ids")


@dataclass(frozen=True)
class PredicateMapping:
    source: str
    source_predicate: str
    target_role: str
    guard: str = "none"
    inverse: bool = False

    def __post_init__(self) -> None:
        if self.guard not in GUARDS:
            raise RegistryError(f"unknown guard {self.guard!r}")


MappingTable = dict[tuple[str, str], PredicateMapping]


def parse_role(text: str) -> tuple[str, bool]:
    """``^iri`` marks an inverse mapping (object becomes subject); short role
    names such as ``hasSubEvent`` expand to their vocabulary IRIs."""
    text = text.strip()
    inverse = text.startswith("^")
    text = text.lstrip("^").strip("<>")
    iri = ROLE_ALIASES.get(text)
    return (iri.value if iri is not None else text), inverse


def build_mapping_table(rows: Iterable[Mapping[str, str]]) -> MappingTable:
    table: MappingTable = {}
    for row in rows:
        role, inverse = parse_role(row["target_role_iri"])
        m = PredicateMapping(
            row["source"].strip(), row["source_predicate_iri"].strip().strip("<>"), role,
            (row.get("guard") or "none").strip() or "none", inverse,
        )
        key = (m.source, m.source_predicate)
        if key in table:
            raise RegistryError(f"duplicate mapping for {m.source} {m.source_predicate}")
        table[key] = m
    return table


def read_mapping_table(path: str) -> MappingTable:
    with open(path, encoding="utf-8", newline="") as fh:
        return build_mapping_table(row for _, row in read_tsv(fh, MAPPING_COLUMNS))


# --- per-relation tests ---------------------------------------------------------

def valid_scope(rel: RawRelation) -> bool:
    if not rel.has_validity or not isinstance(rel.object, MemberKey):
        return False
    if rel.begin is not None and rel.end is not None and rel.end.earliest < rel.begin.earliest:
        return False
    return True


def structural_mapping(
    rel: RawRelation, table: MappingTable, events: set[MemberKey], places: set[MemberKey]
) -> PredicateMapping | None:
    m = table.get((rel.source, rel.predicate))
    if m is None or not isinstance(rel.object, MemberKey):
        return None
    subj, obj = (rel.object, rel.subject) if m.inverse else (rel.subject, rel.object)
    if m.guard == "both-endpoints-events" and not (subj in events and obj in events):
        return None
    if m.guard == "subject-is-place" and subj not in places:
        return None
    return m


def is_indirect(rel: RawRelation, events: set[MemberKey], dated: set[MemberKey]) -> bool:
    if not isinstance(rel.object, MemberKey):
        return False
    return rel.subject in events or rel.object in events or (rel.subject in dated and rel.object in dated)


def _apply_mapping(rel: RawRelation, m: PredicateMapping, category: RelationCategory) -> RawRelation:
    if m.inverse:
        return replace(rel, subject=rel.object, object=rel.subject, role_type=m.target_role, category=category)
    return replace(rel, role_type=m.target_role, category=category)


# --- extraction passes ------------------------------------------------------------

def _warn_demoted(rel: RawRelation, warnings: list[str] | None) -> None:
    msg = f"{rel.source} {rel.subject} {rel.predicate}: unusable validity [{rel.begin}, {rel.end}]; demoted"
    logger.warning(msg)
    if warnings is not None:
        warnings.append(msg)


def extract_temporal_relations(relations: Iterable[RawRelation], warnings: list[str] | None = None) -> Iterator[RawRelation]:
    """Relations with a usable start and/or end annotation."""
    for rel in relations:
        if not rel.has_validity:
            continue
        if valid_scope(rel):
            yield replace(rel, category=RelationCategory.TEMPORAL)
        else:
            _warn_demoted(rel, warnings)


def extract_indirect_relations(
    relations: Iterable[RawRelation], dated: set[MemberKey], events: set[MemberKey]
) -> Iterator[RawRelation]:
    """Relations touching an event, or joining two entities with known existence time."""
    for rel in relations:
        if is_indirect(rel, events, dated):
            yield replace(rel, category=RelationCategory.INDIRECT)


def map_structural(
    relations: Iterable[RawRelation], table: MappingTable, events: set[MemberKey], places: set[MemberKey]
) -> Iterator[RawRelation]:
    for rel in relations:
        m = structural_mapping(rel, table, events, places)
        if m is not None:
            yield _apply_mapping(rel, m, RelationCategory.STRUCTURAL)


def classify_relations(
    relations: Iterable[RawRelation],
    table: MappingTable,
    events: set[MemberKey],
    dated: set[MemberKey],
    places: set[MemberKey],
    warnings: list[str] | None = None,
) -> list[RawRelation]:
    """Assign every relation exactly one category: temporal > structural > indirect > plain.

    A temporal relation whose predicate is mapped keeps the mapped role too.
    Unusable validity is dropped and the relation falls through to the other rules.
    """
    out = []
    for rel in relations:
        if rel.has_validity and not valid_scope(rel):
            _warn_demoted(rel, warnings)
            rel = replace(rel, begin=None, end=None)
        m = structural_mapping(rel, table, events, places)
        if rel.has_validity:
            out.append(_apply_mapping(rel, m, RelationCategory.TEMPORAL) if m else replace(rel, category=RelationCategory.TEMPORAL))
        elif m is not None:
            out.append(_apply_mapping(rel, m, RelationCategory.STRUCTURAL))
        elif is_indirect(rel, events, dated):
            out.append(replace(rel, category=RelationCategory.INDIRECT))
        else:
            out.append(replace(rel, category=RelationCategory.PLAIN))
    return out


def known_places(
    seeds: Iterable[MemberKey], relations: Iterable[RawRelation], table: MappingTable
) -> set[MemberKey]:
    """Places: the seeds (event locations, entities of a place type) and, transitively,
    everything a place is mapped as contained in."""
    places = set(seeds)
    up: dict[MemberKey, set[MemberKey]] = defaultdict(set)
    for rel in relations:
        m = table.get((rel.source, rel.predicate))
        if m is not None and m.target_role == CONTAINED_IN_PLACE.value and isinstance(rel.object, MemberKey):
            child, parent = (rel.object, rel.subject) if m.inverse else (rel.subject, rel.object)
            up[child].add(parent)
    stack = list(places)
    while stack:
        for parent in up.get(stack.pop(), ()):
            if parent not in places:
                places.add(parent)
                stack.append(parent)
    return places


# --- interlinking ------------------------------------------------------------------

@dataclass
class PairCounts:
    """Per-language counts for entity pairs. Symmetric counts store each
    unordered pair once, smaller id first."""

    symmetric: bool
    per_language: dict[tuple, dict[str, int]] = field(default_factory=dict)

    def _key(self, a: Hashable, b: Hashable) -> tuple:
        return (a, b) if not self.symmetric or a <= b else (b, a)

    def get(self, a: Hashable, b: Hashable, language: str | None = None) -> int:
        langs = self.per_language.get(self._key(a, b))
        if not langs:
            return 0
        return sum(langs.values()) if language is None else langs.get(language, 0)

    def add(self, a: Hashable, b: Hashable, language: str, n: int = 1) -> None:
        langs = self.per_language.setdefault(self._key(a, b), {})
        langs[language] = langs.get(language, 0) + n

    def pairs(self) -> list[tuple]:
        return sorted(self.per_language)

    def totals(self) -> dict[tuple, int]:
        return {k: sum(v.values()) for k, v in sorted(self.per_language.items())}


def compute_links(
    link_rows: Iterable[tuple[str, Hashable, Hashable]],
    is_event: Callable[[Hashable], bool] | set,
) -> PairCounts:
    """Directed article-level link counts for pairs with at least one event.

    An article linking the same target several times counts once per language.
    """
    check = is_event.__contains__ if isinstance(is_event, (set, frozenset)) else is_event
    seen = set()
    for lang, a, b in link_rows:
        if a != b:
            seen.add((lang, a, b))  # article-level; anchor-level would count every row
    stats = PairCounts(symmetric=False)
    for lang, a, b in sorted(seen):
        if check(a) or check(b):
            stats.add(a, b, lang)
    return stats


def compute_mentions(
    sentences: Iterable[tuple[str, Hashable, Iterable[Hashable]]],
    pairs: Iterable[tuple[Hashable, Hashable]] | None = None,
) -> PairCounts:
    """Number of sentences mentioning both entities of a pair, per language."""
    stats = PairCounts(symmetric=True)
    wanted = None if pairs is None else {stats._key(a, b) for a, b in pairs if a != b}
    merged: dict[tuple, set] = defaultdict(set)
    for lang, sid, ents in sentences:
        merged[(lang, sid)].update(ents)
    for (lang, _), ents in sorted(merged.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
        for a, b in combinations(sorted(ents), 2):
            if wanted is None or (a, b) in wanted:
                stats.add(a, b, lang)
    return stats


def read_link_graph(path: str) -> list[tuple[str, str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [(r["language"].strip(), r["from_id"].strip(), r["to_id"].strip()) for _, r in read_tsv(fh, LINK_COLUMNS)]


def read_sentences(path: str) -> list[tuple[str, str, frozenset[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [
            (r["language"].strip(), r["sentence_id"].strip(),
             frozenset(x.strip() for x in r["entity_ids"].split("|") if x.strip()))
            for _, r in read_tsv(fh, SENTENCE_COLUMNS)
        ]

