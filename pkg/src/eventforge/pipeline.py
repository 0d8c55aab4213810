"""Stage orchestration: ingest, identify, extract, integrate, fuse, emit, stats.

Each stage writes its results as TSV (or N-Quads) checkpoints into the work
directory, so any stage can be re-run from the checkpoints of the stages
before it and produce the same bytes as a fresh run.
"""
from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .checkpoint import CheckpointError, read_table, write_table
from .config import PipelineConfig
from .dates import FlexDate, TemporalScope, parse_iso
from .emit import GraphLayout, MemberFacts, RelationNode, dedupe, emit_core, emit_provenance, emit_relation, emit_void
from .fuse import (
    FusedText, FusedView, MemberText, PlaceHierarchy, TimeCandidate, TypeCoverage,
    fuse_locations, fuse_scope, fuse_text, fuse_types, read_type_alignment,
)
from .identify import (
    Candidates, EventCandidate, EventEvidence, collect_event_classes, compile_category_patterns,
    identify_by_category, identify_by_class, merge_candidates, promote_list_events, propagate_same_as,
)
from .ingest import (
    LIST_COLUMNS, DatasetDescriptor, KeyResolver, PropertyMap, load_event_list_records, load_kg_dump,
    read_tsv, register_sources,
)
from .integrate import (
    IdentityCluster, Integration, MatchConfig, ParentLink, SameAsConflict,
    canonical_sort_key, cluster_same_as, id_map_rows, integrate_list_events, read_id_map,
)
from .model import ListEventRecord, MemberKey, RawEntity, RawRelation, RelationCategory, SourceKind
from .rdf import Iri, ParseError, parse_nquads, parse_ntriples, parse_term, format_term, write_nquads
from .relations import (
    PairCounts, classify_relations, compute_links, compute_mentions, known_places, read_link_graph,
    read_mapping_table, read_sentences,
)
from .stats import StatsReport, stats_report
from .vocab import CONTAINED_IN_PLACE, HAS_SUB_EVENT, STRUCTURAL_ROLES, Namespaces

logger = logging.getLogger(__name__)

STAGES = ("ingest", "identify", "extract", "integrate", "fuse", "emit", "stats")
_STRUCTURAL = {r.value for r in STRUCTURAL_ROLES}


class StageError(RuntimeError):
    """A stage failed; the message says which one and why."""


# --- shared context ---------------------------------------------------------------

@dataclass
class Context:
    cfg: PipelineConfig
    ns: Namespaces
    descriptors: list[DatasetDescriptor]
    resolver: KeyResolver
    layout: GraphLayout

    @classmethod
    def build(cls, cfg: PipelineConfig) -> Context:
        ns = cfg.ns
        descriptors = register_sources(cfg.sources, ns)
        return cls(cfg, ns, descriptors, KeyResolver(descriptors), GraphLayout.from_descriptors(descriptors, ns))

    @property
    def trust(self) -> dict[str, int]:
        return {d.source: d.trust_rank for d in self.descriptors}

    @property
    def kinds(self) -> dict[str, SourceKind]:
        return {d.source: d.kind for d in self.descriptors}

    def source_config(self, name: str):
        return next(s for s in self.cfg.sources if s.name == name)

    def checkpoint(self, name: str) -> Path:
        return self.cfg.workdir / name


@dataclass
class State:
    entities: dict[MemberKey, RawEntity] = field(default_factory=dict)
    relations: list[RawRelation] = field(default_factory=list)
    records: list[ListEventRecord] = field(default_factory=list)
    candidates: Candidates = field(default_factory=dict)
    classified: list[RawRelation] = field(default_factory=list)
    links: PairCounts = field(default_factory=lambda: PairCounts(symmetric=False))
    mentions: PairCounts = field(default_factory=lambda: PairCounts(symmetric=True))
    integration: Integration | None = None
    parents: list[ParentLink] = field(default_factory=list)
    texts: dict[MemberKey, str] = field(default_factory=dict)
    views: dict[str, FusedView] = field(default_factory=dict)
    validity: dict[tuple[str, str, str], TemporalScope] = field(default_factory=dict)
    report: StatsReport | None = None
    counters: dict[str, dict[str, int]] = field(default_factory=dict)


def _date_cell(d: FlexDate | None) -> str:
    return d.isoformat() if d is not None else ""


def _cell_date(text: str) -> FlexDate | None:
    return parse_iso(text) if text else None


def _log_counters(state: State, stage: str, **counts: int) -> None:
    state.counters[stage] = dict(counts)
    logger.info("stage=%s %s", stage, " ".join(f"{k}={v}" for k, v in counts.items()))


# --- ingest -----------------------------------------------------------------------

ENTITY_COLUMNS = ("source", "local_id", "field", "lang", "value")
RELATION_COLUMNS = ("source", "subject", "predicate", "object_kind", "object", "begin", "end", "role_type", "category")
RECORD_COLUMNS = ("source", "local_id", "list_page", "language", "begin", "end", "description", "linked", "source_url")


def _kg_triples(path: Path, errors: list[ParseError]):
    with open(path, "rb") as fh:
        if path.suffix == ".nq":
            default = Iri("urn:x-default-graph")
            yield from (q.triple for _, q in parse_nquads(fh, default, errors))
        else:
            yield from (t for _, t in parse_ntriples(fh, errors))


def run_ingest(ctx: Context, state: State) -> None:
    warnings = parse_errors = row_errors = 0
    for d in ctx.descriptors:
        sc = ctx.source_config(d.source)
        path = Path(sc.path)
        if d.kind is SourceKind.KG:
            errors: list[ParseError] = []
            load = load_kg_dump(d.source, _kg_triples(path, errors), sc.properties or PropertyMap(), ctx.resolver, d.language)
            for err in errors:
                logger.warning("%s:%d: %s", path, err.line, err.message)
            parse_errors += len(errors)
            warnings += len(load.warnings)
            for ent in load.entities.values():
                state.entities[ent.key] = ent
            state.relations.extend(load.relations)
        else:
            errs = []
            with open(path, encoding="utf-8", newline="") as fh:
                state.records.extend(load_event_list_records(d.source, read_tsv(fh, LIST_COLUMNS), errs))
            for e in errs:
                logger.warning("%s row %d: %s", path, e.row, e.message)
            row_errors += len(errs)
    if ctx.cfg.link_graph:
        for lang, a, b in read_link_graph(str(ctx.cfg.link_graph)):
            try:
                ent = state.entities.get(MemberKey.parse(a))
            except ValueError:
                continue
            if ent is not None:
                ent.out_links.setdefault(lang, set()).add(b)
    state.relations.sort(key=RawRelation.sort_key)
    state.records.sort(key=lambda r: str(r.key))
    _log_counters(state, "ingest", entities=len(state.entities), relations=len(state.relations),
                  records=len(state.records), warnings=warnings, parse_errors=parse_errors, row_errors=row_errors)


def _entity_rows(entities: dict[MemberKey, RawEntity]):
    for key in sorted(entities, key=str):
        e = entities[key]
        yield (e.source, e.local_id, "entity", "", "")
        for lang in sorted(e.labels):
            yield (e.source, e.local_id, "label", lang, e.labels[lang])
        for name, table in (("alias", e.aliases), ("description", e.descriptions), ("out_link", e.out_links)):
            for lang in sorted(table):
                yield from ((e.source, e.local_id, name, lang, v) for v in sorted(table[lang]))
        if e.existence is not None:
            yield (e.source, e.local_id, "begin", "", _date_cell(e.existence.begin))
            yield (e.source, e.local_id, "end", "", _date_cell(e.existence.end))
        for name, values in (("type", e.types), ("superclass", e.superclasses), ("category", e.categories)):
            yield from ((e.source, e.local_id, name, "", v) for v in sorted(values))
        for name, keys in (("same_as", e.same_as), ("location", e.locations)):
            yield from ((e.source, e.local_id, name, "", str(k)) for k in sorted(keys, key=str))


def _read_entities(path: Path) -> dict[MemberKey, RawEntity]:
    out: dict[MemberKey, RawEntity] = {}
    scopes: dict[MemberKey, list] = {}
    for source, local, name, lang, value in read_table(path, ENTITY_COLUMNS):
        key = MemberKey(source, local)
        e = out.get(key)
        if e is None:
            e = out[key] = RawEntity(source, local)
        if name == "label":
            e.labels[lang] = value
        elif name in ("alias", "description", "out_link"):
            table = {"alias": e.aliases, "description": e.descriptions, "out_link": e.out_links}[name]
            table.setdefault(lang, set()).add(value)
        elif name in ("begin", "end"):
            scopes.setdefault(key, [None, None])[0 if name == "begin" else 1] = _cell_date(value)
        elif name == "type":
            e.types.add(value)
        elif name == "superclass":
            e.superclasses.add(value)
        elif name == "category":
            e.categories.add(value)
        elif name == "same_as":
            e.same_as.add(MemberKey.parse(value))
        elif name == "location":
            e.locations.add(MemberKey.parse(value))
    for key, (b, en) in scopes.items():
        out[key].existence = TemporalScope(b, en)
    return out


def _relation_rows(relations: list[RawRelation]):
    for r in relations:
        if isinstance(r.object, MemberKey):
            kind, obj = "key", str(r.object)
        else:
            kind, obj = "literal", format_term(r.object)
        yield (r.source, str(r.subject), r.predicate, kind, obj, _date_cell(r.begin), _date_cell(r.end),
               r.role_type or "", r.category.value)


def _read_relations(path: Path) -> list[RawRelation]:
    out = []
    for source, subj, pred, kind, obj, b, e, role, cat in read_table(path, RELATION_COLUMNS):
        o = MemberKey.parse(obj) if kind == "key" else parse_term(obj)
        out.append(RawRelation(source, MemberKey.parse(subj), pred, o, _cell_date(b), _cell_date(e),
                               role or None, RelationCategory(cat)))
    return out


def save_ingest(ctx: Context, state: State) -> None:
    write_table(ctx.checkpoint("entities.tsv"), ENTITY_COLUMNS, _entity_rows(state.entities))
    write_table(ctx.checkpoint("relations.tsv"), RELATION_COLUMNS, _relation_rows(state.relations))
    write_table(ctx.checkpoint("records.tsv"), RECORD_COLUMNS, (
        (r.source, r.local_id, r.list_page, r.language, _date_cell(r.date.begin), _date_cell(r.date.end),
         r.description, "|".join(sorted(r.linked_entities)), r.source_url)
        for r in state.records
    ))


def load_ingest(ctx: Context, state: State) -> None:
    state.entities = _read_entities(ctx.checkpoint("entities.tsv"))
    state.relations = _read_relations(ctx.checkpoint("relations.tsv"))
    state.records = [
        ListEventRecord(src, page, TemporalScope(_cell_date(b), _cell_date(e)), desc,
                        frozenset(x for x in linked.split("|") if x), lang, url, local)
        for src, local, page, lang, b, e, desc, linked, url in read_table(ctx.checkpoint("records.tsv"), RECORD_COLUMNS)
    ]


# --- identify ---------------------------------------------------------------------

CANDIDATE_COLUMNS = ("member_key", "kind", "detail")


def _read_blacklist(path: Path | None) -> set[str]:
    if path is None:
        return set()
    with open(path, encoding="utf-8") as fh:
        return {ln.strip().strip("<>") for ln in fh if ln.strip() and not ln.lstrip().startswith("#")}


def _by_source(entities: dict[MemberKey, RawEntity]) -> dict[str, dict[str, RawEntity]]:
    out: dict[str, dict[str, RawEntity]] = defaultdict(dict)
    for key, ent in entities.items():
        out[key.source][key.local_id] = ent
    return out


def run_identify(ctx: Context, state: State) -> None:
    blacklist = _read_blacklist(ctx.cfg.blacklist)
    per_source = _by_source(state.entities)
    streams = []
    for d in ctx.descriptors:
        roots = ctx.source_config(d.source).event_roots
        ents = per_source.get(d.source, {})
        if d.kind is not SourceKind.KG or not roots:
            continue
        pairs = [(ctx.resolver.iri(e.key) or e.local_id, sup) for e in ents.values() for sup in e.superclasses]
        classes = collect_event_classes(pairs, roots, blacklist)
        streams.append(identify_by_class(ents, classes))
    streams.append(promote_list_events(state.records, ctx.kinds))
    seeds = merge_candidates(*streams)
    same_as = sorted({(k, o) for k, e in state.entities.items() for o in e.same_as}, key=lambda p: (str(p[0]), str(p[1])))
    propagated = propagate_same_as(seeds, same_as)
    patterns = compile_category_patterns(ctx.cfg.category_patterns)
    by_category = [
        identify_by_category(per_source.get(d.source, {}), patterns, d.language)
        for d in ctx.descriptors if d.kind is SourceKind.KG
    ]
    state.candidates = merge_candidates(
        (EventCandidate(k, v) for k, v in sorted(propagated.items(), key=lambda kv: str(kv[0]))), *by_category
    )
    kinds = defaultdict(int)
    for evs in state.candidates.values():
        for ev in {e.kind for e in evs}:
            kinds[ev] += 1
    _log_counters(state, "identify", candidates=len(state.candidates),
                  **{k.replace("-", "_"): v for k, v in sorted(kinds.items())})


def save_identify(ctx: Context, state: State) -> None:
    write_table(ctx.checkpoint("candidates.tsv"), CANDIDATE_COLUMNS, (
        (str(k), ev.kind, ev.detail)
        for k in sorted(state.candidates, key=str) for ev in sorted(state.candidates[k])
    ))


def load_identify(ctx: Context, state: State) -> None:
    out: Candidates = {}
    for key, kind, detail in read_table(ctx.checkpoint("candidates.tsv"), CANDIDATE_COLUMNS):
        out.setdefault(MemberKey.parse(key), []).append(EventEvidence(kind, detail))
    state.candidates = out


# --- extract ----------------------------------------------------------------------

COUNT_COLUMNS = ("language", "a", "b", "count")


def _member_key(text: str) -> MemberKey | None:
    try:
        return MemberKey.parse(text)
    except ValueError:
        return None


def run_extract(ctx: Context, state: State) -> None:
    cfg = ctx.cfg
    events = set(state.candidates)
    dated = {k for k, e in state.entities.items() if e.existence is not None}
    table = read_mapping_table(str(cfg.mapping_table)) if cfg.mapping_table else {}
    place_types = set(cfg.place_types)
    seeds = {loc for e in state.entities.values() for loc in e.locations}
    seeds |= {k for k, e in state.entities.items() if e.types & place_types}
    places = known_places(seeds, state.relations, table)
    warnings: list[str] = []
    state.classified = classify_relations(state.relations, table, events, dated, places, warnings)
    if cfg.link_graph:
        rows = []
        for lang, a, b in read_link_graph(str(cfg.link_graph)):
            ka, kb = _member_key(a), _member_key(b)
            if ka is not None and kb is not None:
                rows.append((lang, ka, kb))
        state.links = compute_links(rows, events)
    if cfg.sentences:
        sents = [
            (lang, sid, frozenset(k for k in map(_member_key, ents) if k is not None))
            for lang, sid, ents in read_sentences(str(cfg.sentences))
        ]
        mentions = compute_mentions(sents)
        state.mentions = PairCounts(symmetric=True, per_language={
            pair: langs for pair, langs in mentions.per_language.items() if pair[0] in events or pair[1] in events
        })
    cats = defaultdict(int)
    for r in state.classified:
        cats[r.category.value] += 1
    _log_counters(state, "extract", **{f"{k}_relations": v for k, v in sorted(cats.items())},
                  demoted=len(warnings), link_pairs=len(state.links.per_language),
                  mention_pairs=len(state.mentions.per_language))


def _count_rows(counts: PairCounts):
    for a, b in counts.pairs():
        langs = counts.per_language[(a, b)]
        for lang in sorted(langs):
            yield (lang, str(a), str(b), str(langs[lang]))


def _read_counts(path: Path, symmetric: bool) -> PairCounts:
    counts = PairCounts(symmetric=symmetric)
    for lang, a, b, n in read_table(path, COUNT_COLUMNS):
        counts.add(MemberKey.parse(a), MemberKey.parse(b), lang, int(n))
    return counts


def save_extract(ctx: Context, state: State) -> None:
    write_table(ctx.checkpoint("classified.tsv"), RELATION_COLUMNS, _relation_rows(state.classified))
    write_table(ctx.checkpoint("links.tsv"), COUNT_COLUMNS, _count_rows(state.links))
    write_table(ctx.checkpoint("mentions.tsv"), COUNT_COLUMNS, _count_rows(state.mentions))


def load_extract(ctx: Context, state: State) -> None:
    state.classified = _read_relations(ctx.checkpoint("classified.tsv"))
    state.links = _read_counts(ctx.checkpoint("links.tsv"), symmetric=False)
    state.mentions = _read_counts(ctx.checkpoint("mentions.tsv"), symmetric=True)


# --- integrate --------------------------------------------------------------------

CLUSTER_COLUMNS = ("canonical_iri", "is_event", "member_key")
EXTRACTED_COLUMNS = ("canonical_iri", "source_url")
PARENT_COLUMNS = ("parent", "child", "source")
TEXT_COLUMNS = ("member_key", "text")
REVIEW_COLUMNS = ("record", "chosen", "tied", "reason")
CONFLICT_COLUMNS = ("canonical_iri", "source", "members")


def run_integrate(ctx: Context, state: State) -> None:
    cfg = ctx.cfg
    ids = set(state.entities)
    for r in state.classified:
        if r.category is not RelationCategory.PLAIN and isinstance(r.object, MemberKey):
            ids.update((r.subject, r.object))
    for e in state.entities.values():
        ids.update(e.locations)
    same_as = sorted({(k, o) for k, e in state.entities.items() for o in e.same_as}, key=lambda p: (str(p[0]), str(p[1])))
    id_map = read_id_map(str(cfg.id_map)) if cfg.id_map else None
    conflicts: list[SameAsConflict] = []
    integ = cluster_same_as(ids, same_as, set(state.candidates), ctx.ns.resource, id_map, conflicts)
    li = integrate_list_events(integ, state.records, state.entities, MatchConfig(cfg.match_jaccard, cfg.match_undated))
    state.integration = integ
    state.parents = sorted(set(li.parents))
    state.texts = li.texts
    write_table(ctx.checkpoint("review.tsv"), REVIEW_COLUMNS,
                ((r.record, r.chosen, "|".join(r.tied), r.reason) for r in li.reviews))
    write_table(ctx.checkpoint("sameas_conflicts.tsv"), CONFLICT_COLUMNS,
                ((c.canonical_id, c.source, "|".join(c.members)) for c in conflicts))
    write_table(ctx.checkpoint("id_map.tsv"), ("canonical_iri", "member_key"), id_map_rows(integ.ordered()))
    _log_counters(state, "integrate", clusters=len(integ.clusters),
                  event_clusters=sum(c.is_event for c in integ.clusters), list_attached=li.attached,
                  list_created=li.created, parents=len(state.parents), reviews=len(li.reviews),
                  same_as_conflicts=len(conflicts))


def save_integrate(ctx: Context, state: State) -> None:
    ordered = state.integration.ordered()
    write_table(ctx.checkpoint("clusters.tsv"), CLUSTER_COLUMNS, (
        (c.canonical_id, "1" if c.is_event else "0", str(k)) for c in ordered for k in c.sorted_members()
    ))
    write_table(ctx.checkpoint("extracted_from.tsv"), EXTRACTED_COLUMNS, (
        (c.canonical_id, u) for c in ordered for u in sorted(c.extracted_from)
    ))
    write_table(ctx.checkpoint("parents.tsv"), PARENT_COLUMNS, state.parents)
    write_table(ctx.checkpoint("texts.tsv"), TEXT_COLUMNS,
                ((str(k), state.texts[k]) for k in sorted(state.texts, key=str)))


def load_integrate(ctx: Context, state: State) -> None:
    clusters: dict[str, IdentityCluster] = {}
    for cid, is_event, key in read_table(ctx.checkpoint("clusters.tsv"), CLUSTER_COLUMNS):
        c = clusters.get(cid)
        if c is None:
            c = clusters[cid] = IdentityCluster(cid, set(), is_event == "1")
        c.members.add(MemberKey.parse(key))
    for cid, url in read_table(ctx.checkpoint("extracted_from.tsv"), EXTRACTED_COLUMNS):
        clusters[cid].extracted_from.add(url)
    state.integration = Integration(list(clusters.values()), ctx.ns.resource)
    state.parents = [ParentLink(*row) for row in read_table(ctx.checkpoint("parents.tsv"), PARENT_COLUMNS)]
    state.texts = {MemberKey.parse(k): t for k, t in read_table(ctx.checkpoint("texts.tsv"), TEXT_COLUMNS)}


# --- relation groups ----------------------------------------------------------------

GroupKey = tuple[str, str, str]


@dataclass
class RelationGroup:
    subject: str
    object: str
    role: str | None
    per_source: dict[str, set[tuple[FlexDate | None, FlexDate | None]]] = field(default_factory=dict)

    @property
    def direct(self) -> bool:
        return self.role in _STRUCTURAL and all(b is None and e is None for v in self.per_source.values() for b, e in v)

    def sorted_validity(self, source: str) -> list[tuple[FlexDate | None, FlexDate | None]]:
        def key(v):
            return tuple((d.sort_key() if d else ()) for d in v)
        return sorted(self.per_source[source], key=key)


def relation_groups(state: State) -> dict[GroupKey, RelationGroup]:
    """Source relations collapsed onto (subject cluster, object cluster, role)."""
    by_member = state.integration.by_member
    groups: dict[GroupKey, RelationGroup] = {}

    def add(s: str, o: str, role: str, source: str, validity) -> None:
        g = groups.get((s, o, role))
        if g is None:
            g = groups[(s, o, role)] = RelationGroup(s, o, role)
        g.per_source.setdefault(source, set()).add(validity)

    for r in state.classified:
        if r.category is RelationCategory.PLAIN or not isinstance(r.object, MemberKey):
            continue
        cs, co = by_member.get(r.subject), by_member.get(r.object)
        if cs is None or co is None or cs is co:
            continue
        add(cs.canonical_id, co.canonical_id, r.role_type or r.predicate, r.source, (r.begin, r.end))
    for p in state.parents:
        add(p.parent, p.child, HAS_SUB_EVENT.value, p.source, (None, None))
    return groups


def _cluster_counts(counts: PairCounts, by_member: dict[MemberKey, IdentityCluster]) -> dict[tuple, dict[str, int]]:
    out: dict[tuple, dict[str, int]] = {}
    for (a, b), langs in counts.per_language.items():
        ca, cb = by_member.get(a), by_member.get(b)
        if ca is None or cb is None or ca is cb:
            continue
        pair = (ca.canonical_id, cb.canonical_id)
        if counts.symmetric:
            pair = tuple(sorted(pair, key=canonical_sort_key))
        acc = out.setdefault(pair, {})
        for lang, n in langs.items():
            acc[lang] = acc.get(lang, 0) + n
    return out


# --- fuse -------------------------------------------------------------------------

VIEW_COLUMNS = ("canonical_iri", "field", "lang", "value")
VALIDITY_COLUMNS = ("subject", "object", "role", "begin", "end")


def _record_index(state: State) -> dict[MemberKey, ListEventRecord]:
    return {r.key: r for r in state.records}


def run_fuse(ctx: Context, state: State) -> None:
    cfg = ctx.cfg
    trust = ctx.trust
    integ = state.integration
    records = _record_index(state)
    alignment = read_type_alignment(str(cfg.type_alignment)) if cfg.type_alignment else {}
    edges = set()
    for r in state.classified:
        if r.role_type == CONTAINED_IN_PLACE.value and isinstance(r.object, MemberKey):
            cs, co = integ.by_member.get(r.subject), integ.by_member.get(r.object)
            if cs is not None and co is not None and cs is not co:
                edges.add((cs.canonical_id, co.canonical_id))
    hierarchy = PlaceHierarchy(sorted(edges))
    coverage = TypeCoverage()
    views: dict[str, FusedView] = {}
    for c in integ.ordered():
        begins, ends, locs, types, texts = [], [], set(), [], []
        for key in c.sorted_members():
            ent = state.entities.get(key)
            if ent is not None:
                if ent.existence is not None:
                    if ent.existence.begin is not None:
                        begins.append(TimeCandidate(ent.existence.begin, key.source))
                    if ent.existence.end is not None:
                        ends.append(TimeCandidate(ent.existence.end, key.source))
                locs.update(integ.by_member[l].canonical_id for l in ent.locations if l in integ.by_member)
                types.append((key.source, ent.types))
                texts.append(MemberText(key.source, ent.labels, ent.aliases, ent.descriptions))
                continue
            rec = records.get(key)
            if rec is not None:
                if rec.date.begin is not None:
                    begins.append(TimeCandidate(rec.date.begin, key.source))
                if rec.date.end is not None:
                    ends.append(TimeCandidate(rec.date.end, key.source))
                texts.append(MemberText(key.source, {}, {}, {rec.language: {state.texts.get(key, rec.description)}}))
        views[c.canonical_id] = FusedView(
            c.canonical_id, c.is_event, fuse_scope(begins, ends, trust), fuse_locations(locs, hierarchy),
            fuse_types(types, alignment, cfg.target_type_namespace, coverage), fuse_text(texts, trust),
        )
    state.views = views
    state.validity = {}
    for key, g in relation_groups(state).items():
        vb = [TimeCandidate(b, src) for src, vs in g.per_source.items() for b, _ in vs if b is not None]
        ve = [TimeCandidate(e, src) for src, vs in g.per_source.items() for _, e in vs if e is not None]
        scope = fuse_scope(vb, ve, trust)
        if scope is not None:
            state.validity[key] = scope
    _log_counters(state, "fuse", views=len(views), dated_events=sum(1 for v in views.values() if v.is_event and v.scope),
                  located_events=sum(1 for v in views.values() if v.is_event and v.locations),
                  types_aligned=coverage.aligned, types_unaligned=coverage.unaligned,
                  place_cycles_broken=len(hierarchy.dropped), fused_validities=len(state.validity))


def _view_rows(views: dict[str, FusedView]):
    for cid in sorted(views, key=canonical_sort_key):
        v = views[cid]
        yield (cid, "event", "", "1" if v.is_event else "0")
        if v.scope is not None:
            yield (cid, "begin", "", _date_cell(v.scope.begin))
            yield (cid, "end", "", _date_cell(v.scope.end))
        yield from ((cid, "location", "", loc) for loc in sorted(v.locations))
        yield from ((cid, "type", "", t) for t in sorted(v.types))
        for lang in sorted(v.text.labels):
            yield (cid, "label", lang, v.text.labels[lang])
        for name, table in (("alias", v.text.aliases), ("description", v.text.descriptions)):
            for lang in sorted(table):
                yield from ((cid, name, lang, x) for x in sorted(table[lang]))


def save_fuse(ctx: Context, state: State) -> None:
    write_table(ctx.checkpoint("fused.tsv"), VIEW_COLUMNS, _view_rows(state.views))
    write_table(ctx.checkpoint("validity.tsv"), VALIDITY_COLUMNS, (
        (s, o, role, _date_cell(v.begin), _date_cell(v.end))
        for (s, o, role), v in sorted(state.validity.items(),
                                      key=lambda kv: (canonical_sort_key(kv[0][0]), canonical_sort_key(kv[0][1]), kv[0][2]))
    ))


def load_fuse(ctx: Context, state: State) -> None:
    views: dict[str, FusedView] = {}
    scopes: dict[str, list] = {}
    for cid, name, lang, value in read_table(ctx.checkpoint("fused.tsv"), VIEW_COLUMNS):
        if name == "event":
            views[cid] = FusedView(cid, value == "1", None, set(), set(), FusedText())
            continue
        v = views[cid]
        if name in ("begin", "end"):
            scopes.setdefault(cid, [None, None])[0 if name == "begin" else 1] = _cell_date(value)
        elif name == "location":
            v.locations.add(value)
        elif name == "type":
            v.types.add(value)
        elif name == "label":
            v.text.labels[lang] = value
        elif name == "alias":
            v.text.aliases.setdefault(lang, set()).add(value)
        elif name == "description":
            v.text.descriptions.setdefault(lang, set()).add(value)
    for cid, (b, e) in scopes.items():
        views[cid].scope = TemporalScope(b, e)
    state.views = views
    state.validity = {
        (s, o, role): TemporalScope(_cell_date(b), _cell_date(e))
        for s, o, role, b, e in read_table(ctx.checkpoint("validity.tsv"), VALIDITY_COLUMNS)
    }


# --- emit -------------------------------------------------------------------------

def build_relation_nodes(ctx: Context, state: State) -> list[RelationNode]:
    """Relation groups plus link-only nodes, numbered in a fixed order."""
    by_member = state.integration.by_member
    groups = relation_groups(state)
    links = _cluster_counts(state.links, by_member)
    mentions = _cluster_counts(state.mentions, by_member)
    reified_pairs = {(g.subject, g.object) for g in groups.values() if not g.direct}
    for s, o in links:
        if (s, o) not in reified_pairs:
            groups[(s, o, "")] = RelationGroup(s, o, None)
    ordered = sorted(groups.items(), key=lambda kv: (canonical_sort_key(kv[0][0]), canonical_sort_key(kv[0][1]), kv[0][2]))
    nodes = []
    n = 0
    for key, g in ordered:
        per_source = {src: g.sorted_validity(src) for src in sorted(g.per_source)}
        if g.direct:
            nodes.append(RelationNode(None, g.subject, g.object, g.role, direct=True, per_source=per_source))
            continue
        mpair = tuple(sorted((g.subject, g.object), key=canonical_sort_key))
        lk, mk = links.get((g.subject, g.object)), mentions.get(mpair)
        nodes.append(RelationNode(
            iri=ctx.ns.r(f"relation_{n}").value, subject=g.subject, object=g.object, role_type=g.role,
            validity=state.validity.get(key), links=sum(lk.values()) if lk else None,
            mentions=sum(mk.values()) if mk else None, per_source=per_source,
            links_by_language=dict(lk or {}), mentions_by_language=dict(mk or {}),
        ))
        n += 1
    return nodes


def _member_facts(ctx: Context, state: State, key: MemberKey, records: dict[MemberKey, ListEventRecord]) -> MemberFacts:
    by_member = state.integration.by_member
    ent = state.entities.get(key)
    if ent is not None:
        return MemberFacts(
            key, key in state.candidates, ent.labels, ent.aliases, ent.descriptions, ent.existence,
            sorted({by_member[l].canonical_id for l in ent.locations if l in by_member}),
        )
    rec = records.get(key)
    if rec is not None:
        return MemberFacts(key, True, descriptions={rec.language: {state.texts.get(key, rec.description)}}, scope=rec.date)
    return MemberFacts(key, key in state.candidates)


def run_emit(ctx: Context, state: State) -> list:
    layout = ctx.layout
    integ = state.integration
    records = _record_index(state)
    nodes = build_relation_nodes(ctx, state)
    emitted = {cid for cid, v in state.views.items() if v.is_event}
    for node in nodes:
        emitted.update((node.subject, node.object))
    places = {n.subject for n in nodes if n.role_type == CONTAINED_IN_PLACE.value}
    places |= {n.object for n in nodes if n.role_type == CONTAINED_IN_PLACE.value}
    frontier = set(emitted)
    while frontier:
        new = set()
        for cid in frontier:
            locs = set(state.views[cid].locations)
            for key in integ.by_id[cid].members:
                ent = state.entities.get(key)
                if ent is not None:
                    locs.update(integ.by_member[l].canonical_id for l in ent.locations if l in integ.by_member)
            places |= locs
            new |= locs - emitted
        emitted |= new
        frontier = new
    quads = []
    kinds = ctx.kinds
    record_urls = {k: r.source_url for k, r in records.items()}
    for cid in sorted(emitted, key=canonical_sort_key):
        cluster = integ.by_id[cid]
        facts = [_member_facts(ctx, state, k, records) for k in cluster.sorted_members()]
        quads.extend(emit_core(state.views[cid], facts, layout, is_place=cid in places))
        quads.extend(emit_provenance(cluster, layout, ctx.resolver.iri, kinds, record_urls))
    for node in nodes:
        quads.extend(emit_relation(node, layout))
    quads = dedupe(quads)
    quads.extend(emit_void(ctx.descriptors, layout, quads, ctx.cfg.creation_date))
    out = ctx.cfg.output
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "wb") as fh:
        write_nquads(quads, fh)
    tmp.replace(out)
    _log_counters(state, "emit", quads=len(quads), cores=len(emitted),
                  events=sum(1 for c in emitted if state.views[c].is_event),
                  relation_nodes=sum(1 for n in nodes if not n.direct), direct_relations=sum(1 for n in nodes if n.direct))
    return quads


# --- stats ------------------------------------------------------------------------

def stats_paths(output: Path) -> tuple[Path, Path]:
    stem = output.name[: -len(output.suffix)] if output.suffix else output.name
    return output.with_name(stem + ".stats.txt"), output.with_name(stem + ".stats.tsv")


def run_stats(ctx: Context, state: State) -> None:
    errors: list[ParseError] = []
    with open(ctx.cfg.output, "rb") as fh:
        quads = [q for _, q in parse_nquads(fh, ctx.layout.fused, errors)]
    if errors:
        raise StageError(f"output {ctx.cfg.output} does not re-parse: line {errors[0].line}: {errors[0].message}")
    report = stats_report(quads, ctx.layout.fused, ctx.layout.relation_class, skip_graphs=[ctx.layout.metadata])
    txt, tsv = stats_paths(ctx.cfg.output)
    txt.write_text(report.text(), encoding="utf-8")
    tsv.write_text(report.tsv(), encoding="utf-8")
    state.report = report
    fused = report.graphs.get(ctx.layout.graph_name(ctx.layout.fused))
    _log_counters(state, "stats", quads=len(quads), events=fused.events if fused else 0,
                  multi_source_start=report.multi_source_start, agreeing_start=report.agreeing_start)


# --- driver -----------------------------------------------------------------------

_RUNNERS: dict[str, tuple[Callable, Callable | None, Callable | None]] = {
    "ingest": (run_ingest, save_ingest, load_ingest),
    "identify": (run_identify, save_identify, load_identify),
    "extract": (run_extract, save_extract, load_extract),
    "integrate": (run_integrate, save_integrate, load_integrate),
    "fuse": (run_fuse, save_fuse, load_fuse),
    "emit": (run_emit, None, None),
    "stats": (run_stats, None, None),
}


def run_pipeline(cfg: PipelineConfig, start: str = "ingest", stop: str = "stats") -> State:
    """Run stages ``start`` through ``stop``, loading earlier stages from checkpoints."""
    if start not in STAGES or stop not in STAGES:
        raise StageError(f"unknown stage; choose from {', '.join(STAGES)}")
    first, last = STAGES.index(start), STAGES.index(stop)
    if first > last:
        raise StageError(f"--from {start} comes after {stop}")
    ctx = Context.build(cfg)
    cfg.workdir.mkdir(parents=True, exist_ok=True)
    state = State()
    if start != "stats":
        for name in STAGES[:first]:
            loader = _RUNNERS[name][2]
            if loader is None:
                continue
            try:
                loader(ctx, state)
            except (CheckpointError, OSError, ValueError, KeyError) as exc:
                raise StageError(f"cannot resume from {start}: {name} checkpoint unusable: {exc}") from exc
    for name in STAGES[first:last + 1]:
        run, save, _ = _RUNNERS[name]
        t0 = time.perf_counter()
        try:
            run(ctx, state)
            if save is not None:
                save(ctx, state)
        except StageError:
            raise
        except (OSError, ValueError, KeyError) as exc:
            raise StageError(f"stage {name} failed: {exc}") from exc
        logger.info("stage=%s seconds=%.3f", name, time.perf_counter() - t0)
    return state
