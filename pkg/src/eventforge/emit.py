"""Quad layout of the output graph: cores, relations, provenance, VoID."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .dates import FlexDate, TemporalScope
from .fuse import FusedView
from .ingest import DatasetDescriptor
from .integrate import IdentityCluster
from .model import MemberKey, SourceKind
from .rdf import Iri, Literal, Quad
from .vocab import (
    DC_ALTERNATIVE, DC_CREATED, DC_DESCRIPTION, OWL_SAME_AS, RDF_OBJECT, RDF_SUBJECT, RDF_TYPE,
    RDFS_LABEL, SEM_BEGIN, SEM_CORE, SEM_END, SEM_EVENT, SEM_HAS_PLACE, SEM_PLACE, SEM_ROLE_TYPE,
    VOID_DATASET, VOID_TRIPLES, XSD_NON_NEGATIVE_INTEGER, Namespaces,
)


class EmitError(RuntimeError):
    """Raised on inputs that only a pipeline ordering bug can produce."""


FUSED_GRAPH = "event_kg"
METADATA_GRAPH = "metadata"


@dataclass
class GraphLayout:
    ns: Namespaces
    source_graphs: dict[str, Iri]
    language_graph: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_descriptors(cls, descriptors: Iterable[DatasetDescriptor], ns: Namespaces) -> GraphLayout:
        descriptors = sorted(descriptors, key=lambda d: d.trust_rank)
        lang_graph: dict[str, str] = {}
        for d in descriptors:
            if d.language and d.language not in lang_graph:
                lang_graph[d.language] = d.source
        return cls(ns, {d.source: d.graph_iri for d in descriptors}, lang_graph)

    @property
    def fused(self) -> Iri:
        return self.ns.g(FUSED_GRAPH)

    @property
    def metadata(self) -> Iri:
        return self.ns.g(METADATA_GRAPH)

    def graphs(self) -> set[Iri]:
        return set(self.source_graphs.values()) | {self.fused, self.metadata}

    def graph_name(self, graph: Iri) -> str:
        return graph.value[len(self.ns.graph):] if graph.value.startswith(self.ns.graph) else graph.value

    # schema terms
    @property
    def relation_class(self) -> Iri:
        return self.ns.s("Relation")

    @property
    def links(self) -> Iri:
        return self.ns.s("links")

    @property
    def mentions(self) -> Iri:
        return self.ns.s("mentions")

    @property
    def extracted_from(self) -> Iri:
        return self.ns.s("extractedFrom")


def _text(lexical: str, lang: str) -> Literal:
    return Literal(lexical, language=lang) if lang else Literal(lexical)


def _count(n: int) -> Literal:
    return Literal(str(n), datatype=XSD_NON_NEGATIVE_INTEGER)


def _scope_quads(node: Iri, scope: TemporalScope | None, graph: Iri, begin_p: Iri = SEM_BEGIN, end_p: Iri = SEM_END) -> list[Quad]:
    out = []
    if scope is not None:
        if scope.begin is not None:
            out.append(Quad(node, begin_p, scope.begin.to_literal(), graph))
        if scope.end is not None:
            out.append(Quad(node, end_p, scope.end.to_literal(), graph))
    return out


def _text_quads(node: Iri, labels: Mapping[str, str], aliases: Mapping[str, Iterable[str]],
                descriptions: Mapping[str, Iterable[str]], graph: Iri) -> list[Quad]:
    out = []
    for lang in sorted(labels):
        out.append(Quad(node, RDFS_LABEL, _text(labels[lang], lang), graph))
    for lang in sorted(aliases):
        out.extend(Quad(node, DC_ALTERNATIVE, _text(a, lang), graph) for a in sorted(aliases[lang]))
    for lang in sorted(descriptions):
        out.extend(Quad(node, DC_DESCRIPTION, _text(d, lang), graph) for d in sorted(descriptions[lang]))
    return out


@dataclass
class MemberFacts:
    """What one source says about a cluster member."""

    key: MemberKey
    is_event: bool
    labels: Mapping[str, str] = field(default_factory=dict)
    aliases: Mapping[str, Iterable[str]] = field(default_factory=dict)
    descriptions: Mapping[str, Iterable[str]] = field(default_factory=dict)
    scope: TemporalScope | None = None
    locations: Iterable[str] = ()


def emit_core(
    view: FusedView,
    members: Iterable[MemberFacts],
    layout: GraphLayout,
    is_place: bool = False,
) -> list[Quad]:
    """Fused facts into the fused graph, each member's own facts into its source graph."""
    if not view.canonical_id:
        raise EmitError("cluster has no canonical id")
    node = Iri(view.canonical_id)
    g = layout.fused
    out = [Quad(node, RDF_TYPE, SEM_EVENT if view.is_event else SEM_CORE, g)]
    if is_place:
        out.append(Quad(node, RDF_TYPE, SEM_PLACE, g))
    out.extend(Quad(node, RDF_TYPE, Iri(t), g) for t in sorted(view.types))
    out.extend(_text_quads(node, view.text.labels, view.text.aliases, view.text.descriptions, g))
    out.extend(_scope_quads(node, view.scope, g))
    out.extend(Quad(node, SEM_HAS_PLACE, Iri(loc), g) for loc in sorted(view.locations))
    for m in sorted(members, key=lambda m: str(m.key)):
        sg = layout.source_graphs.get(m.key.source)
        if sg is None:
            raise EmitError(f"member {m.key} has no registered source graph")
        out.append(Quad(node, RDF_TYPE, SEM_EVENT if m.is_event else SEM_CORE, sg))
        out.extend(_text_quads(node, m.labels, m.aliases, m.descriptions, sg))
        out.extend(_scope_quads(node, m.scope, sg))
        out.extend(Quad(node, SEM_HAS_PLACE, Iri(loc), sg) for loc in sorted(set(m.locations)))
    return out


@dataclass
class RelationNode:
    iri: str | None
    subject: str
    object: str
    role_type: str | None
    validity: TemporalScope | None = None
    links: int | None = None
    mentions: int | None = None
    direct: bool = False
    per_source: dict[str, list[tuple[FlexDate | None, FlexDate | None]]] = field(default_factory=dict)
    links_by_language: dict[str, int] = field(default_factory=dict)
    mentions_by_language: dict[str, int] = field(default_factory=dict)


def emit_relation(rel: RelationNode, layout: GraphLayout) -> list[Quad]:
    """Structural relations become direct triples; everything else a reified node."""
    s, o = Iri(rel.subject), Iri(rel.object)
    if rel.direct:
        role = Iri(rel.role_type)
        out = [Quad(s, role, o, layout.source_graphs[src]) for src in sorted(rel.per_source)]
        out.append(Quad(s, role, o, layout.fused))
        return out
    node = Iri(rel.iri)
    out = []
    for src in sorted(rel.per_source):
        sg = layout.source_graphs[src]
        out.append(Quad(node, RDF_TYPE, layout.relation_class, sg))
        out.append(Quad(node, RDF_SUBJECT, s, sg))
        out.append(Quad(node, RDF_OBJECT, o, sg))
        if rel.role_type:
            out.append(Quad(node, SEM_ROLE_TYPE, Iri(rel.role_type), sg))
        for begin, end in rel.per_source[src]:
            if begin is not None:
                out.append(Quad(node, SEM_BEGIN, begin.to_literal(), sg))
            if end is not None:
                out.append(Quad(node, SEM_END, end.to_literal(), sg))
    g = layout.fused
    out.append(Quad(node, RDF_TYPE, layout.relation_class, g))
    out.append(Quad(node, RDF_SUBJECT, s, g))
    out.append(Quad(node, RDF_OBJECT, o, g))
    if rel.role_type:
        out.append(Quad(node, SEM_ROLE_TYPE, Iri(rel.role_type), g))
    out.extend(_scope_quads(node, rel.validity, g))
    if rel.links is not None:
        out.append(Quad(node, layout.links, _count(rel.links), g))
    if rel.mentions is not None:
        out.append(Quad(node, layout.mentions, _count(rel.mentions), g))
    for lang in sorted(rel.links_by_language):
        src = layout.language_graph.get(lang)
        if src:
            out.append(Quad(node, layout.links, _count(rel.links_by_language[lang]), layout.source_graphs[src]))
    for lang in sorted(rel.mentions_by_language):
        src = layout.language_graph.get(lang)
        if src:
            out.append(Quad(node, layout.mentions, _count(rel.mentions_by_language[lang]), layout.source_graphs[src]))
    return out


def emit_provenance(
    cluster: IdentityCluster,
    layout: GraphLayout,
    member_iri: Callable[[MemberKey], str | None],
    kinds: Mapping[str, SourceKind],
    record_urls: Mapping[MemberKey, str],
) -> list[Quad]:
    """owl:sameAs per KG member, extractedFrom per list page."""
    if not cluster.members and not cluster.extracted_from:
        raise EmitError(f"cluster {cluster.canonical_id} has neither members nor list pages")
    node = Iri(cluster.canonical_id)
    out = []
    urls_done = set()
    for key in cluster.sorted_members():
        sg = layout.source_graphs[key.source]
        if kinds.get(key.source) == SourceKind.KG:
            iri = member_iri(key)
            if iri:
                out.append(Quad(node, OWL_SAME_AS, Iri(iri), sg))
        else:
            url = record_urls.get(key)
            if url and (url, key.source) not in urls_done:
                urls_done.add((url, key.source))
                out.append(Quad(node, layout.extracted_from, Iri(url), sg))
    leftover = sorted(cluster.extracted_from - {u for u, _ in urls_done})
    out.extend(Quad(node, layout.extracted_from, Iri(u), layout.fused) for u in leftover)
    return out


def emit_void(descriptors: Iterable[DatasetDescriptor], layout: GraphLayout, quads: Iterable[Quad],
              creation_date: FlexDate | None = None) -> list[Quad]:
    """A void:Dataset per source graph plus the fused graph, with quad counts."""
    counts = Counter(q.graph for q in quads)
    g = layout.metadata
    out = []
    datasets = [(d.graph_iri, d.creation_date) for d in sorted(descriptors, key=lambda d: d.trust_rank)]
    datasets.append((layout.fused, creation_date))
    for graph, created in datasets:
        out.append(Quad(graph, RDF_TYPE, VOID_DATASET, g))
        if created is not None:
            out.append(Quad(graph, DC_CREATED, created.to_literal(), g))
        out.append(Quad(graph, VOID_TRIPLES, _count(counts.get(graph, 0)), g))
    return out


def dedupe(quads: Iterable[Quad]) -> list[Quad]:
    seen = set()
    out = []
    for q in quads:
        if q not in seen:
            seen.add(q)
            out.append(q)
    return out
