"""Completeness statistics over an emitted quad set."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .rdf import Iri, Quad
from .vocab import RDF_TYPE, SEM_BEGIN, SEM_END, SEM_EVENT, SEM_HAS_PLACE, STRUCTURAL_ROLES


def percent(part: int, whole: int) -> str:
    return f"{100.0 * part / whole:.2f}" if whole else "0.00"


@dataclass
class GraphStats:
    events: int = 0
    with_time: int = 0
    with_location: int = 0
    with_both: int = 0
    relations: int = 0
    temporal_relations: int = 0

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("events", str(self.events)),
            ("time_pct", percent(self.with_time, self.events)),
            ("location_pct", percent(self.with_location, self.events)),
            ("location_and_time_pct", percent(self.with_both, self.events)),
            ("relations", str(self.relations)),
            ("temporal_relations", str(self.temporal_relations)),
        ]


@dataclass
class StatsReport:
    graphs: dict[str, GraphStats] = field(default_factory=dict)
    agreeing_start: int = 0
    multi_source_start: int = 0

    @property
    def start_agreement_pct(self) -> str:
        return percent(self.agreeing_start, self.multi_source_start)

    def tsv(self) -> str:
        lines = ["graph\tkey\tvalue"]
        for name in sorted(self.graphs):
            lines.extend(f"{name}\t{k}\t{v}" for k, v in self.graphs[name].rows())
        lines.append(f"*\tstart_time_multi_source_events\t{self.multi_source_start}")
        lines.append(f"*\tstart_time_agreeing_events\t{self.agreeing_start}")
        lines.append(f"*\tstart_time_agreement_pct\t{self.start_agreement_pct}")
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        header = f"{'graph':<16}{'events':>8}{'time':>9}{'loc':>9}{'L&T':>9}{'rels':>8}{'temporal':>10}"
        lines = [header, "-" * len(header)]
        for name in sorted(self.graphs):
            s = self.graphs[name]
            lines.append(
                f"{name:<16}{s.events:>8}{percent(s.with_time, s.events):>8}%{percent(s.with_location, s.events):>8}%"
                f"{percent(s.with_both, s.events):>8}%{s.relations:>8}{s.temporal_relations:>10}"
            )
        lines.append("")
        lines.append(
            f"start-time agreement: {self.start_agreement_pct}% "
            f"({self.agreeing_start} of {self.multi_source_start} multi-source events)"
        )
        return "\n".join(lines) + "\n"


def _graph_name(graph: Iri) -> str:
    return graph.value.rstrip("/").rsplit("/", 1)[-1]


def stats_report(quads: Iterable[Quad], fused_graph: Iri, relation_class: Iri,
                 skip_graphs: Iterable[Iri] = ()) -> StatsReport:
    """Per-graph event completeness and relation counts, plus the fraction of
    multi-source events whose sources agree on the start time."""
    skip = set(skip_graphs)
    events: dict[Iri, set] = defaultdict(set)
    timed: dict[Iri, set] = defaultdict(set)
    placed: dict[Iri, set] = defaultdict(set)
    rel_nodes: dict[Iri, set] = defaultdict(set)
    rel_timed: dict[Iri, set] = defaultdict(set)
    direct: dict[Iri, int] = defaultdict(int)
    begins: dict = defaultdict(lambda: defaultdict(set))
    graphs: set[Iri] = set()
    for q in quads:
        g = q.graph
        if g in skip:
            continue
        graphs.add(g)
        p = q.predicate
        if p == RDF_TYPE:
            if q.object == SEM_EVENT:
                events[g].add(q.subject)
            elif q.object == relation_class:
                rel_nodes[g].add(q.subject)
        elif p == SEM_BEGIN or p == SEM_END:
            timed[g].add(q.subject)
            rel_timed[g].add(q.subject)
            if p == SEM_BEGIN and g != fused_graph:
                begins[q.subject][g].add(q.object)
        elif p == SEM_HAS_PLACE:
            placed[g].add(q.subject)
        elif p in STRUCTURAL_ROLES:
            direct[g] += 1
    report = StatsReport()
    for g in sorted(graphs, key=lambda x: x.value):
        ev = events[g]
        report.graphs[_graph_name(g)] = GraphStats(
            events=len(ev),
            with_time=len(ev & timed[g]),
            with_location=len(ev & placed[g]),
            with_both=len(ev & timed[g] & placed[g]),
            relations=len(rel_nodes[g]) + direct[g],
            temporal_relations=len(rel_nodes[g] & rel_timed[g]),
        )
    for node in events[fused_graph]:
        per_graph = begins.get(node)
        if not per_graph or len(per_graph) < 2:
            continue
        report.multi_source_start += 1
        values = set().union(*per_graph.values())
        if len(values) == 1:
            report.agreeing_start += 1
    return report
