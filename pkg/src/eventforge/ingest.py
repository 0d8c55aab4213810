"""Source registry, KG dump loading and event-list record loading."""
from __future__ import annotations

import csv
import hashlib
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple
from urllib.parse import unquote

from .dates import FlexDate, TemporalScope, parse_date_literal
from .identify import parse_list_title, resolve_row_date
from .model import ListEventRecord, MemberKey, RawEntity, RawRelation, SourceKind
from .rdf import RDF, BlankNode, Iri, Literal, Triple
from .vocab import OWL, RDFS, Namespaces

logger = logging.getLogger(__name__)

FAMILY_TRUST = {"wikidata": 1, "dbpedia": 2, "wikipedia": 3, "wcep": 4, "yago": 5}
LANGUAGE_ORDER = ["en", "fr", "de", "ru", "pt"]
_LANG_SOURCE = re.compile(r"^(dbpedia|wikipedia)-([a-z]{2,3})$")


class RegistryError(ValueError):
    pass


def source_family(name: str) -> str:
    m = _LANG_SOURCE.match(name)
    if m:
        return m.group(1)
    if name in ("wikidata", "yago", "wcep"):
        return name
    raise RegistryError(f"unknown source name {name!r}")


def source_language(name: str) -> str | None:
    m = _LANG_SOURCE.match(name)
    return m.group(2) if m else None


def source_kind(name: str) -> SourceKind:
    family = source_family(name)
    if family == "wikipedia":
        return SourceKind.EVENT_LIST
    if family == "wcep":
        return SourceKind.CURRENT_EVENTS
    return SourceKind.KG


@dataclass
class SourceConfig:
    name: str
    path: str | None = None
    namespace: str | None = None
    trust_rank: int | None = None
    creation_date: FlexDate | None = None
    event_roots: list[str] = field(default_factory=list)
    properties: PropertyMap | None = None


@dataclass(frozen=True)
class DatasetDescriptor:
    source: str
    graph_iri: Iri
    trust_rank: int
    language: str | None
    kind: SourceKind
    namespace: str | None = None
    creation_date: FlexDate | None = None


def _default_rank_key(name: str) -> tuple:
    lang = source_language(name)
    lang_pos = LANGUAGE_ORDER.index(lang) if lang in LANGUAGE_ORDER else len(LANGUAGE_ORDER)
    return (FAMILY_TRUST[source_family(name)], lang_pos, lang or "", name)


def register_sources(sources: Iterable[SourceConfig], ns: Namespaces) -> list[DatasetDescriptor]:
    """Validate the source list and assign trust ranks and graph IRIs.

    Explicit ranks must be given for all sources or none; by default ranks
    follow Wikidata, DBpedia, Wikipedia, WCEP, YAGO, and within a family the
    language order en, fr, de, ru, pt.
    """
    sources = list(sources)
    if not sources:
        raise RegistryError("at least one source must be configured")
    names = [s.name for s in sources]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise RegistryError(f"duplicate source names: {', '.join(dupes)}")
    for s in sources:
        source_family(s.name)
    explicit = [s.trust_rank for s in sources if s.trust_rank is not None]
    if explicit and len(explicit) != len(sources):
        raise RegistryError("trust_rank must be set on every source or on none")
    if explicit:
        if len(set(explicit)) != len(explicit):
            raise RegistryError(f"duplicate trust ranks: {sorted(explicit)}")
        if any(r < 1 for r in explicit):
            raise RegistryError("trust ranks start at 1")
        ordered = sorted(sources, key=lambda s: s.trust_rank)
        ranks = [s.trust_rank for s in ordered]
    else:
        ordered = sorted(sources, key=lambda s: _default_rank_key(s.name))
        ranks = list(range(1, len(ordered) + 1))
    return [
        DatasetDescriptor(
            source=s.name,
            graph_iri=ns.g(s.name),
            trust_rank=rank,
            language=source_language(s.name),
            kind=source_kind(s.name),
            namespace=s.namespace,
            creation_date=s.creation_date,
        )
        for s, rank in zip(ordered, ranks)
    ]


class KeyResolver:
    """Maps IRIs to member keys by longest matching source namespace."""

    def __init__(self, descriptors: Iterable[DatasetDescriptor]):
        self._prefixes = sorted(
            ((d.namespace, d.source) for d in descriptors if d.namespace),
            key=lambda p: len(p[0]),
            reverse=True,
        )
        self._namespaces = {d.source: d.namespace for d in descriptors}

    def resolve(self, iri: str, default_source: str | None = None) -> MemberKey | None:
        for prefix, source in self._prefixes:
            if iri.startswith(prefix) and len(iri) > len(prefix):
                return MemberKey(source, iri[len(prefix):])
        if default_source is not None:
            return MemberKey(default_source, iri)
        return None

    def iri(self, key: MemberKey) -> str | None:
        """Inverse of :meth:`resolve`; ``None`` for blank-node style ids."""
        if key.local_id.startswith("_:"):
            return None
        ns = self._namespaces.get(key.source)
        if ns and "://" not in key.local_id:
            return ns + key.local_id
        return key.local_id if "://" in key.local_id else None


# --- property routing ---------------------------------------------------------

PROPERTY_FIELDS = (
    "label", "alias", "description", "type", "subclass_of", "begin", "end", "same_as",
    "category", "location", "statement_subject", "statement_predicate", "statement_object",
    "validity_begin", "validity_end",
)


@dataclass(frozen=True)
class PropertyMap:
    """Which source predicates carry which entity fields."""

    label: frozenset[str] = frozenset({RDFS + "label"})
    alias: frozenset[str] = frozenset()
    description: frozenset[str] = frozenset()
    type: frozenset[str] = frozenset({RDF + "type"})
    subclass_of: frozenset[str] = frozenset({RDFS + "subClassOf"})
    begin: frozenset[str] = frozenset()
    end: frozenset[str] = frozenset()
    same_as: frozenset[str] = frozenset({OWL + "sameAs"})
    category: frozenset[str] = frozenset()
    location: frozenset[str] = frozenset()
    statement_subject: frozenset[str] = frozenset({RDF + "subject"})
    statement_predicate: frozenset[str] = frozenset({RDF + "predicate"})
    statement_object: frozenset[str] = frozenset({RDF + "object"})
    validity_begin: frozenset[str] = frozenset()
    validity_end: frozenset[str] = frozenset()

    @classmethod
    def from_mapping(cls, data: Mapping[str, Iterable[str] | str]) -> PropertyMap:
        unknown = set(data) - set(PROPERTY_FIELDS)
        if unknown:
            raise RegistryError(f"unknown property map keys: {', '.join(sorted(unknown))}")
        kwargs = {k: frozenset([v] if isinstance(v, str) else v) for k, v in data.items()}
        return cls(**kwargs)

    def route(self) -> dict[str, str]:
        table: dict[str, str] = {}
        for name in PROPERTY_FIELDS:
            for pred in getattr(self, name):
                if pred in table:
                    raise RegistryError(f"predicate {pred} mapped to both {table[pred]} and {name}")
                table[pred] = name
        return table


class LoadWarning(NamedTuple):
    source: str
    subject: str
    message: str


def category_name(term: Iri | Literal) -> str:
    if isinstance(term, Literal):
        return term.lexical
    tail = unquote(term.value.rstrip("/").rsplit("/", 1)[-1])
    if ":" in tail:
        tail = tail.split(":", 1)[1]
    return tail.replace("_", " ")


def _node_id(term) -> str:
    return f"_:{term.label}" if isinstance(term, BlankNode) else term.value


@dataclass
class KgLoad:
    entities: dict[str, RawEntity]
    relations: list[RawRelation]
    warnings: list[LoadWarning]


def load_kg_dump(
    source: str,
    triples: Iterable[Triple],
    mapping: PropertyMap,
    resolver: KeyResolver,
    language: str | None = None,
) -> KgLoad:
    """Route a source's triples into RawEntity records and RawRelations.

    Subjects carrying statement-subject/predicate/object predicates are
    reified statements: they become (possibly validity-annotated) relations
    and are not entities themselves.
    """
    route = mapping.route()
    by_subject: dict[str, list[tuple[str, object]]] = defaultdict(list)
    order: list[str] = []
    blank_subjects: set[str] = set()
    for t in triples:
        sid = _node_id(t.subject)
        if sid not in by_subject:
            order.append(sid)
        if isinstance(t.subject, BlankNode):
            blank_subjects.add(sid)
        by_subject[sid].append((t.predicate.value, t.object))

    statement_roles = {"statement_subject", "statement_predicate", "statement_object"}
    statement_nodes = {
        sid for sid, pos in by_subject.items() if any(route.get(p) in statement_roles for p, _ in pos)
    }
    warnings: list[LoadWarning] = []
    entities: dict[str, RawEntity] = {}
    relations: set[RawRelation] = set()
    annotated: set[tuple] = set()

    def warn(sid: str, msg: str) -> None:
        warnings.append(LoadWarning(source, sid, msg))
        logger.debug("%s %s: %s", source, sid, msg)

    def to_date(sid: str, term) -> FlexDate | None:
        if not isinstance(term, Literal):
            warn(sid, f"timestamp is not a literal: {term}")
            return None
        try:
            return parse_date_literal(term)
        except ValueError as exc:
            warn(sid, f"unparseable timestamp {term.lexical!r}: {exc}")
            return None

    def object_key(term) -> MemberKey | Literal | None:
        if isinstance(term, Literal):
            return term
        if isinstance(term, BlankNode) or term.value in statement_nodes:
            return None
        return resolver.resolve(term.value, source)

    for sid in order:
        pos = by_subject[sid]
        if sid in statement_nodes:
            parts: dict[str, list] = defaultdict(list)
            for p, o in pos:
                parts[route.get(p, "other")].append(o)
            subj, pred, obj = parts["statement_subject"], parts["statement_predicate"], parts["statement_object"]
            if len(subj) != 1 or len(pred) != 1 or len(obj) != 1 or not isinstance(pred[0], Iri) \
                    or not isinstance(subj[0], Iri):
                warn(sid, "incomplete or ambiguous reified statement; skipped")
                continue
            okey = object_key(obj[0])
            if okey is None:
                warn(sid, "reified statement object is not resolvable; skipped")
                continue
            begins = [d for d in (to_date(sid, o) for o in parts["validity_begin"]) if d]
            ends = [d for d in (to_date(sid, o) for o in parts["validity_end"]) if d]
            skey = resolver.resolve(subj[0].value, source)
            rel = RawRelation(
                source, skey, pred[0].value, okey,
                begin=min(begins, key=FlexDate.sort_key) if begins else None,
                end=max(ends, key=lambda d: d.latest) if ends else None,
            )
            relations.add(rel)
            if rel.has_validity:
                annotated.add((skey, rel.predicate, okey))
            continue
        if sid in blank_subjects:
            warn(sid, "blank-node subject outside a reified statement; skipped")
            continue
        key = resolver.resolve(sid, source)
        if key.source != source:
            key = MemberKey(source, sid)
        ent = entities.get(key.local_id)
        if ent is None:
            ent = entities[key.local_id] = RawEntity(source, key.local_id)
        begins: list[FlexDate] = []
        ends: list[FlexDate] = []
        for p, o in pos:
            kind = route.get(p)
            if kind in ("label", "alias", "description"):
                if not isinstance(o, Literal):
                    warn(sid, f"{kind} value is not a literal")
                    continue
                lang = o.language or language or ""
                if kind == "label" and lang not in ent.labels:
                    ent.labels[lang] = o.lexical
                elif kind == "description":
                    ent.descriptions.setdefault(lang, set()).add(o.lexical)
                elif ent.labels.get(lang) != o.lexical:
                    ent.aliases.setdefault(lang, set()).add(o.lexical)
            elif kind in ("type", "subclass_of"):
                if isinstance(o, Iri):
                    (ent.types if kind == "type" else ent.superclasses).add(o.value)
            elif kind in ("begin", "end"):
                d = to_date(sid, o)
                if d is not None:
                    (begins if kind == "begin" else ends).append(d)
            elif kind == "same_as":
                if isinstance(o, Iri):
                    other = resolver.resolve(o.value)
                    if other is not None and other != key:
                        ent.same_as.add(other)
            elif kind == "category":
                if isinstance(o, (Iri, Literal)):
                    ent.categories.add(category_name(o))
            elif kind == "location":
                if isinstance(o, Iri):
                    ent.locations.add(resolver.resolve(o.value, source))
            elif kind in ("validity_begin", "validity_end") or kind in statement_roles:
                warn(sid, f"{kind} predicate on a non-statement subject; ignored")
            else:
                okey = object_key(o)
                if okey is not None:
                    relations.add(RawRelation(source, key, p, okey))
        begin = min(begins, key=FlexDate.sort_key) if begins else None
        end = max(ends, key=lambda d: d.latest) if ends else None
        if begin is not None and end is not None and begin.earliest > end.earliest:
            warn(sid, f"existence ends before it begins ({begin} > {end}); end dropped")
            end = None
        if begin is not None or end is not None:
            ent.existence = TemporalScope(begin, end)

    # a validity-annotated statement consumes the bare triple it annotates
    plain_dupes = {
        r for r in relations if not r.has_validity and (r.subject, r.predicate, r.object) in annotated
    }
    rels = sorted(relations - plain_dupes, key=RawRelation.sort_key)
    return KgLoad(entities, rels, warnings)


# --- event-list records -------------------------------------------------------

LIST_COLUMNS = ("list_page", "language", "date_text", "description", "linked_entities", "source_url")


class RowError(NamedTuple):
    row: int
    message: str


def record_local_id(list_page: str, date: TemporalScope, description: str) -> str:
    digest = hashlib.sha1(f"{date.begin}|{date.end}|{description}".encode("utf-8")).hexdigest()[:12]
    return f"{list_page.replace(' ', '_')}#{digest}"


def default_list_url(list_page: str, language: str) -> str:
    return f"https://{language}.wikipedia.org/wiki/{list_page.replace(' ', '_')}"


def read_tsv(stream: Iterable[str], columns: tuple[str, ...]) -> Iterator[tuple[int, dict[str, str]]]:
    """Yield ``(row_number, row)`` from a TSV stream with a header line."""
    reader = csv.reader(stream, delimiter="\t", quoting=csv.QUOTE_NONE)
    header = next(reader, None)
    if header is None:
        return
    header = [h.strip() for h in header]
    missing = [c for c in columns if c not in header]
    if missing:
        raise RegistryError(f"TSV header lacks columns: {', '.join(missing)}")
    for n, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()) or row[0].startswith("#"):
            continue
        row = row + [""] * (len(header) - len(row))
        yield n, dict(zip(header, row))


def load_event_list_records(
    source: str,
    rows: Iterable[tuple[int, Mapping[str, str]]],
    errors: list[RowError] | None = None,
) -> Iterator[ListEventRecord]:
    """Turn tabular event-list rows into dated ListEventRecords.

    Rows whose date cannot be resolved or whose description is empty are
    reported and skipped.
    """
    errs = errors if errors is not None else []
    seen: set[str] = set()
    for n, row in rows:
        page = (row.get("list_page") or "").strip()
        lang = (row.get("language") or source_language(source) or "en").strip().lower()
        desc = " ".join((row.get("description") or "").split())
        if not desc:
            errs.append(RowError(n, "empty description"))
            continue
        try:
            template = parse_list_title(page, lang)
            scope = resolve_row_date(template, row.get("date_text", ""), lang)
        except ValueError as exc:
            errs.append(RowError(n, f"unresolvable date: {exc}"))
            continue
        links = frozenset(x.strip() for x in (row.get("linked_entities") or "").split("|") if x.strip())
        url = (row.get("source_url") or "").strip() or default_list_url(page, lang)
        local_id = record_local_id(page, scope, desc)
        if local_id in seen:
            errs.append(RowError(n, "duplicate row"))
            continue
        seen.add(local_id)
        yield ListEventRecord(source, page, scope, desc, links, lang, url, local_id)
