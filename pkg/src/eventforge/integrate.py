"""Identity resolution: sameAs clustering, canonical ids, and rule-based
attachment of event-list records to knowledge-graph events."""
from __future__ import annotations

import logging
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple
from urllib.parse import unquote

from .dates import TemporalScope, overlaps_at_coarser
from .graphs import connected_components
from .ingest import read_tsv, source_family, RegistryError
from .model import ListEventRecord, MemberKey, RawEntity

logger = logging.getLogger(__name__)

ID_MAP_COLUMNS = ("canonical_iri", "member_key")
_CANON_RE = re.compile(r"(event|entity)_(\d+)$")


@dataclass
class IdentityCluster:
    canonical_id: str
    members: set[MemberKey]
    is_event: bool = False
    extracted_from: set[str] = field(default_factory=set)

    def sorted_members(self) -> list[MemberKey]:
        return sorted(self.members, key=str)


def canonical_sort_key(iri: str) -> tuple:
    m = _CANON_RE.search(iri)
    if m:
        return (iri[: m.start()], m.group(1), int(m.group(2)))
    return (iri, "", -1)


class SameAsConflict(NamedTuple):
    canonical_id: str
    source: str
    members: tuple[str, ...]


class _IdAllocator:
    """Hands out ``event_<n>`` / ``entity_<n>`` ids, reusing a persisted id map."""

    def __init__(self, resource_ns: str, id_map: Mapping[str, str] | None):
        self.ns = resource_ns
        self.id_map = dict(id_map or {})
        self.used: set[str] = set()
        self.next = {"event": 0, "entity": 0}
        for iri in self.id_map.values():
            m = _CANON_RE.search(iri)
            if m and iri.startswith(resource_ns):
                self.next[m.group(1)] = max(self.next[m.group(1)], int(m.group(2)) + 1)

    def assign(self, members: Iterable[MemberKey], is_event: bool) -> str:
        for key in sorted(str(k) for k in members):
            iri = self.id_map.get(key)
            if iri and iri not in self.used:
                self.used.add(iri)
                return iri
        kind = "event" if is_event else "entity"
        while True:
            iri = f"{self.ns}{kind}_{self.next[kind]}"
            self.next[kind] += 1
            if iri not in self.used:
                self.used.add(iri)
                return iri


def read_id_map(path: str) -> dict[str, str]:
    with open(path, encoding="utf-8", newline="") as fh:
        mapping = {}
        for _, row in read_tsv(fh, ID_MAP_COLUMNS):
            key = row["member_key"].strip()
            if key in mapping and mapping[key] != row["canonical_iri"].strip():
                raise RegistryError(f"id map assigns {key} twice")
            mapping[key] = row["canonical_iri"].strip()
        return mapping


def id_map_rows(clusters: Iterable[IdentityCluster]) -> list[tuple[str, str]]:
    rows = []
    for c in clusters:
        rows.extend((c.canonical_id, str(k)) for k in c.sorted_members())
    rows.sort(key=lambda r: (canonical_sort_key(r[0]), r[1]))
    return rows


class Integration:
    """Clusters plus the lookups the later stages need."""

    def __init__(self, clusters: list[IdentityCluster], resource_ns: str, id_map: Mapping[str, str] | None = None):
        self.clusters = clusters
        self.resource_ns = resource_ns
        self.by_member: dict[MemberKey, IdentityCluster] = {}
        self.by_id: dict[str, IdentityCluster] = {}
        for c in clusters:
            self.by_id[c.canonical_id] = c
            for k in c.members:
                self.by_member[k] = c
        self._alloc = _IdAllocator(resource_ns, id_map)
        self._alloc.used.update(self.by_id)
        for c in clusters:
            m = _CANON_RE.search(c.canonical_id)
            if m:
                kind = m.group(1)
                self._alloc.next[kind] = max(self._alloc.next[kind], int(m.group(2)) + 1)

    def new_cluster(self, members: set[MemberKey], is_event: bool, extracted_from: set[str]) -> IdentityCluster:
        c = IdentityCluster(self._alloc.assign(members, is_event), set(members), is_event, set(extracted_from))
        self.clusters.append(c)
        self.by_id[c.canonical_id] = c
        for k in members:
            self.by_member[k] = c
        return c

    def attach(self, cluster: IdentityCluster, key: MemberKey, extracted_from: str) -> None:
        cluster.members.add(key)
        cluster.extracted_from.add(extracted_from)
        self.by_member[key] = cluster

    def ordered(self) -> list[IdentityCluster]:
        return sorted(self.clusters, key=lambda c: canonical_sort_key(c.canonical_id))


def cluster_same_as(
    ids: Iterable[MemberKey],
    same_as: Iterable[tuple[MemberKey, MemberKey]],
    events: set[MemberKey],
    resource_ns: str,
    id_map: Mapping[str, str] | None = None,
    conflicts: list[SameAsConflict] | None = None,
) -> Integration:
    """Connected components of the sameAs graph, with canonical ids assigned in
    order of each component's smallest member key."""
    links = list(same_as)
    nodes = set(ids)
    for a, b in links:
        nodes.update((a, b))
    comps = connected_components(nodes, links)
    comps.sort(key=lambda comp: min(str(k) for k in comp))
    alloc = _IdAllocator(resource_ns, id_map)
    clusters = []
    for comp in comps:
        is_event = any(k in events for k in comp)
        c = IdentityCluster(alloc.assign(comp, is_event), set(comp), is_event)
        clusters.append(c)
        by_source: dict[str, list[str]] = defaultdict(list)
        for k in comp:
            by_source[k.source].append(str(k))
        for source, keys in sorted(by_source.items()):
            if len(keys) > 1:
                conflict = SameAsConflict(c.canonical_id, source, tuple(sorted(keys)))
                logger.info("sameAs cluster %s holds %d members of %s", c.canonical_id, len(keys), source)
                if conflicts is not None:
                    conflicts.append(conflict)
    return Integration(clusters, resource_ns, id_map)


# --- list-event matching -----------------------------------------------------------

def fold(text: str) -> str:
    """Case- and diacritic-insensitive form with underscores read as spaces."""
    text = unicodedata.normalize("NFKD", unquote(text).replace("_", " "))
    text = "".join(ch for ch in text if not unicodedata.combining(ch))
    return " ".join(text.casefold().split())


def link_key(ref: str) -> str:
    """Normalise an entity reference (member key, IRI, or title) for overlap tests."""
    ref = ref.strip()
    if "://" in ref:
        ref = ref.rstrip("/").rsplit("/", 1)[-1]
    else:
        prefix, sep, rest = ref.partition(":")
        if sep and rest:
            try:
                source_family(prefix)
                ref = rest
            except RegistryError:
                pass
    return fold(ref)


_TOPIC_RE = re.compile(r"^([^:]{1,80}?):\s+(\S.*)$")


def split_topic(description: str) -> tuple[str | None, str]:
    """``"World War II: Rommel arrives"`` -> ``("World War II", "Rommel arrives")``."""
    m = _TOPIC_RE.match(description)
    if not m or len(m.group(1).split()) > 8:
        return None, description
    return m.group(1).strip(), m.group(2).strip()


@dataclass
class _IndexedEvent:
    cluster: IdentityCluster
    scope: TemporalScope | None
    labels: set[str]
    keys: set[str]


@dataclass
class MatchConfig:
    jaccard: float = 0.5
    undated_compatible: bool = True


class ReviewRecord(NamedTuple):
    record: str
    chosen: str
    tied: tuple[str, ...]
    reason: str


class MatchResult(NamedTuple):
    cluster: IdentityCluster | None
    parent: IdentityCluster | None
    text: str
    review: ReviewRecord | None


def _envelope(scopes: Iterable[TemporalScope]) -> TemporalScope | None:
    begins = [s.begin or s.end for s in scopes]
    ends = [s.end or s.begin for s in scopes]
    if not begins:
        return None
    return TemporalScope(min(begins, key=lambda d: d.earliest), max(ends, key=lambda d: d.latest))


class KgEventIndex:
    """Frozen lookup over knowledge-graph event clusters, blocked by link keys."""

    def __init__(self, clusters: Iterable[IdentityCluster], entities: Mapping[MemberKey, RawEntity]):
        self.events: list[_IndexedEvent] = []
        self.by_key: dict[str, list[_IndexedEvent]] = defaultdict(list)
        self.by_label: dict[str, list[_IndexedEvent]] = defaultdict(list)
        for c in sorted(clusters, key=lambda c: canonical_sort_key(c.canonical_id)):
            if not c.is_event:
                continue
            ents = [entities[k] for k in c.sorted_members() if k in entities]
            labels = {fold(lbl) for e in ents for lbl in e.labels.values() if lbl.strip()}
            keys = {link_key(k.local_id) for k in c.members} | labels
            for e in ents:
                for targets in e.out_links.values():
                    keys.update(link_key(t) for t in targets)
            keys.discard("")
            scope = _envelope([e.existence for e in ents if e.existence is not None])
            entry = _IndexedEvent(c, scope, labels, keys)
            self.events.append(entry)
            for k in keys:
                self.by_key[k].append(entry)
            for lbl in labels:
                self.by_label[lbl].append(entry)

    def resolve_label(self, text: str, among: set[str]) -> IdentityCluster | None:
        """The event whose label equals ``text`` and which the record links to."""
        hits = [e for e in self.by_label.get(fold(text), ()) if e.keys & among or e.labels & among]
        if not hits:
            return None
        return min(hits, key=lambda e: canonical_sort_key(e.cluster.canonical_id)).cluster


def _contains_phrase(haystack: str, needle: str) -> bool:
    if not needle:
        return False
    return re.search(r"(?<!\w)" + re.escape(needle) + r"(?!\w)", haystack) is not None


def match_list_event(record: ListEventRecord, index: KgEventIndex, config: MatchConfig | None = None) -> MatchResult:
    """Find the KG event a list record describes, or ``None`` for a new event.

    A cluster matches when dates are compatible, at least one linked entity
    overlaps, and a cluster label occurs in the description (or the link
    Jaccard reaches the threshold). A ``Topic: text`` prefix naming a linked
    event makes that event the parent and excludes it from matching.
    """
    config = config or MatchConfig()
    links = {link_key(x) for x in record.linked_entities} - {""}
    topic, text = split_topic(record.description)
    parent = index.resolve_label(topic, links) if topic else None
    if parent is None:
        text = record.description
    folded = fold(text)
    candidates: dict[str, _IndexedEvent] = {}
    for k in sorted(links):
        for entry in index.by_key.get(k, ()):
            candidates.setdefault(entry.cluster.canonical_id, entry)
    scored = []
    for cid in sorted(candidates, key=canonical_sort_key):
        entry = candidates[cid]
        if parent is not None and entry.cluster is parent:
            continue
        if entry.scope is None:
            if not config.undated_compatible:
                continue
        elif not overlaps_at_coarser(record.date, entry.scope):
            continue
        overlap = links & entry.keys
        if not overlap:
            continue
        jaccard = len(overlap) / len(links | entry.keys)
        text_hit = any(_contains_phrase(folded, lbl) for lbl in entry.labels)
        if text_hit or jaccard >= config.jaccard:
            scored.append((jaccard, entry.cluster))
    if not scored:
        return MatchResult(None, parent, text, None)
    best = max(j for j, _ in scored)
    top = [c for j, c in scored if j == best]
    chosen = min(top, key=lambda c: canonical_sort_key(c.canonical_id))
    review = None
    if len(scored) > 1:
        review = ReviewRecord(
            str(record.key), chosen.canonical_id, tuple(c.canonical_id for _, c in scored),
            "tie on link Jaccard" if len(top) > 1 else "several clusters satisfied all rules",
        )
        logger.info("list record %s matched %d clusters; chose %s", record.key, len(scored), chosen.canonical_id)
    return MatchResult(chosen, parent, text, review)


class ParentLink(NamedTuple):
    parent: str
    child: str
    source: str


@dataclass
class ListIntegration:
    reviews: list[ReviewRecord] = field(default_factory=list)
    parents: list[ParentLink] = field(default_factory=list)
    texts: dict[MemberKey, str] = field(default_factory=dict)
    attached: int = 0
    created: int = 0


def integrate_list_events(
    integration: Integration,
    records: Iterable[ListEventRecord],
    entities: Mapping[MemberKey, RawEntity],
    config: MatchConfig | None = None,
) -> ListIntegration:
    """Attach each record to a KG event or open a new event cluster for it."""
    index = KgEventIndex(list(integration.clusters), entities)
    out = ListIntegration()
    for rec in sorted(records, key=lambda r: str(r.key)):
        res = match_list_event(rec, index, config)
        if res.review is not None:
            out.reviews.append(res.review)
        if res.cluster is not None:
            integration.attach(res.cluster, rec.key, rec.source_url)
            target = res.cluster
            out.attached += 1
        else:
            target = integration.new_cluster({rec.key}, True, {rec.source_url})
            out.created += 1
        out.texts[rec.key] = res.text
        if res.parent is not None and res.parent is not target:
            out.parents.append(ParentLink(res.parent.canonical_id, target.canonical_id, rec.source))
    return out
