"""Per-cluster fusion of locations, time stamps, types and text."""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Literal as TLiteral, Mapping, NamedTuple

from .dates import FlexDate, TemporalScope
from .graphs import break_cycles
from .ingest import read_tsv

logger = logging.getLogger(__name__)

Position = TLiteral["begin", "end"]
ALIGNMENT_COLUMNS = ("source", "source_type_iri", "target_type_iri")


# --- locations -------------------------------------------------------------------

class PlaceHierarchy:
    """containedInPlace edges (child, parent) with cycles removed."""

    def __init__(self, edges: Iterable[tuple[Hashable, Hashable]]):
        kept, dropped = break_cycles((a, b) for a, b in edges if a != b)
        for child, parent in dropped:
            logger.warning("containedInPlace cycle broken by dropping %s -> %s", child, parent)
        self.dropped = dropped
        self.parents: dict = defaultdict(set)
        for child, parent in kept:
            self.parents[child].add(parent)
        self._anc: dict = {}

    def ancestors(self, node: Hashable) -> frozenset:
        cached = self._anc.get(node)
        if cached is not None:
            return cached
        # iterative post-order so deep chains don't hit the recursion limit
        stack = [node]
        while stack:
            n = stack[-1]
            pending = [p for p in self.parents.get(n, ()) if p not in self._anc]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            acc = set()
            for p in self.parents.get(n, ()):
                acc.add(p)
                acc |= self._anc[p]
            self._anc[n] = frozenset(acc)
        return self._anc[node]


def fuse_locations(locations: Iterable[Hashable], hierarchy: PlaceHierarchy | Iterable[tuple[Hashable, Hashable]]) -> set:
    """Drop every location that (transitively) contains another one in the set."""
    if not isinstance(hierarchy, PlaceHierarchy):
        hierarchy = PlaceHierarchy(hierarchy)
    locs = set(locations)
    covered = set()
    for loc in locs:
        covered |= hierarchy.ancestors(loc) & locs
    return locs - covered


# --- time -------------------------------------------------------------------------

class TimeCandidate(NamedTuple):
    value: FlexDate
    source: str


def _is_boundary(d: FlexDate, position: Position) -> bool:
    return d.is_unit_start() if position == "begin" else d.is_unit_end()


def fuse_time(
    candidates: Iterable[TimeCandidate],
    position: Position,
    trust: Mapping[str, int],
) -> FlexDate | None:
    """Pick one time stamp from per-source candidates.

    1. Drop day-granular unit boundaries (first / last day of a month or year)
       when any other candidate exists.
    2. Return the value backed by a strict plurality of sources.
    3. Otherwise, among the values tied for most votes, take the one backed by
       the most trusted source.
    """
    votes = sorted(set(candidates), key=lambda c: (c.value.sort_key(), c.source))
    if not votes:
        return None
    if not all(_is_boundary(c.value, position) for c in votes):
        votes = [c for c in votes if not _is_boundary(c.value, position)]
    groups: dict[FlexDate, set[str]] = defaultdict(set)
    for c in votes:
        groups[c.value].add(c.source)
    top = max(len(s) for s in groups.values())
    leaders = [v for v, s in groups.items() if len(s) == top]
    if len(leaders) == 1:
        return leaders[0]

    def rank(value: FlexDate) -> tuple:
        best = min(trust.get(s, math.inf) for s in groups[value])
        return (best, value.sort_key())

    return min(leaders, key=rank)


def fuse_scope(
    begins: Iterable[TimeCandidate], ends: Iterable[TimeCandidate], trust: Mapping[str, int]
) -> TemporalScope | None:
    begin = fuse_time(begins, "begin", trust)
    end = fuse_time(ends, "end", trust)
    if begin is not None and end is not None and begin.earliest > end.earliest:
        logger.warning("fused scope inverted (%s > %s); end dropped", begin, end)
        end = None
    if begin is None and end is None:
        return None
    return TemporalScope(begin, end)


# --- types ------------------------------------------------------------------------

TypeAlignment = dict[tuple[str, str], set[str]]


def read_type_alignment(path: str) -> TypeAlignment:
    table: TypeAlignment = defaultdict(set)
    with open(path, encoding="utf-8", newline="") as fh:
        for _, row in read_tsv(fh, ALIGNMENT_COLUMNS):
            table[(row["source"].strip(), row["source_type_iri"].strip().strip("<>"))].add(
                row["target_type_iri"].strip().strip("<>")
            )
    return dict(table)


@dataclass
class TypeCoverage:
    aligned: int = 0
    unaligned: int = 0


def fuse_types(
    member_types: Iterable[tuple[str, Iterable[str]]],
    alignment: TypeAlignment,
    target_namespace: str | None = None,
    coverage: TypeCoverage | None = None,
) -> set[str]:
    """Union of target-ontology types over all members.

    Types already in ``target_namespace`` pass through; a ``*`` source row in
    the alignment applies to every source.
    """
    out: set[str] = set()
    for source, types in member_types:
        for t in types:
            targets = alignment.get((source, t)) or alignment.get(("*", t))
            if targets:
                out |= targets
            elif target_namespace and t.startswith(target_namespace):
                out.add(t)
            else:
                if coverage is not None:
                    coverage.unaligned += 1
                continue
            if coverage is not None:
                coverage.aligned += 1
    return out


# --- text -------------------------------------------------------------------------

@dataclass
class FusedText:
    labels: dict[str, str] = field(default_factory=dict)
    aliases: dict[str, set[str]] = field(default_factory=dict)
    descriptions: dict[str, set[str]] = field(default_factory=dict)


class MemberText(NamedTuple):
    source: str
    labels: Mapping[str, str]
    aliases: Mapping[str, Iterable[str]]
    descriptions: Mapping[str, Iterable[str]]


def fuse_text(members: Iterable[MemberText], trust: Mapping[str, int]) -> FusedText:
    """Per language, the most trusted source's label wins; other labels become aliases."""
    members = list(members)
    out = FusedText()
    offers: dict[str, list[tuple[float, str]]] = defaultdict(list)
    for m in members:
        for lang, label in m.labels.items():
            offers[lang].append((trust.get(m.source, math.inf), label))
        for lang, aliases in m.aliases.items():
            out.aliases.setdefault(lang, set()).update(aliases)
        for lang, descs in m.descriptions.items():
            out.descriptions.setdefault(lang, set()).update(descs)
    for lang, cands in offers.items():
        cands.sort()
        out.labels[lang] = cands[0][1]
        out.aliases.setdefault(lang, set()).update(label for _, label in cands[1:])
    for lang in list(out.aliases):
        out.aliases[lang].discard(out.labels.get(lang))
        if not out.aliases[lang]:
            del out.aliases[lang]
    return out


# --- whole-cluster view --------------------------------------------------------------

@dataclass
class FusedView:
    canonical_id: str
    is_event: bool
    scope: TemporalScope | None
    locations: set[str]
    types: set[str]
    text: FusedText
