"""Sub-event timelines read back from an emitted quad set."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .dates import FlexDate, parse_date_literal
from .integrate import fold
from .rdf import Iri, Literal, Quad
from .vocab import DC_ALTERNATIVE, DC_DESCRIPTION, HAS_SUB_EVENT, OWL_SAME_AS, RDFS_LABEL, SEM_BEGIN


class UnknownRootError(KeyError):
    pass


@dataclass(frozen=True)
class TimelineRow:
    iri: str
    begin: FlexDate
    title: str
    sources: tuple[str, ...]


def _pick_text(values: dict[str, str]) -> str:
    for lang in ("en", ""):
        if lang in values:
            return values[lang]
    return values[min(values)] if values else ""


def timeline_query(
    quads: Iterable[Quad],
    root: str,
    start: FlexDate | None,
    end: FlexDate | None,
    fused_graph: Iri,
    extracted_from: Iri,
) -> list[TimelineRow]:
    """Transitive sub-events of ``root`` whose fused begin lies inside [start, end].

    ``root`` is an IRI, label or alias of an event in the fused graph. Rows are
    ordered by begin date, then IRI; each lists the source graphs that
    provide provenance for the event.
    """
    children: dict[Iri, set[Iri]] = defaultdict(set)
    begin: dict[Iri, FlexDate] = {}
    labels: dict[Iri, dict[str, str]] = defaultdict(dict)
    descs: dict[Iri, dict[str, str]] = defaultdict(dict)
    sources: dict[Iri, set[str]] = defaultdict(set)
    names: dict[Iri, set[str]] = defaultdict(set)
    subjects: set = set()
    for q in quads:
        if q.predicate in (OWL_SAME_AS, extracted_from) and q.graph != fused_graph:
            sources[q.subject].add(q.graph.value.rstrip("/").rsplit("/", 1)[-1])
            continue
        if q.graph != fused_graph:
            continue
        subjects.add(q.subject)
        if q.predicate == HAS_SUB_EVENT and isinstance(q.object, Iri):
            children[q.subject].add(q.object)
        elif q.predicate == SEM_BEGIN and isinstance(q.object, Literal):
            try:
                begin[q.subject] = parse_date_literal(q.object)
            except ValueError:
                pass
        elif q.predicate == RDFS_LABEL and isinstance(q.object, Literal):
            labels[q.subject].setdefault(q.object.language or "", q.object.lexical)
            names[q.subject].add(fold(q.object.lexical))
        elif q.predicate == DC_ALTERNATIVE and isinstance(q.object, Literal):
            names[q.subject].add(fold(q.object.lexical))
        elif q.predicate == DC_DESCRIPTION and isinstance(q.object, Literal):
            d = descs[q.subject]
            lang = q.object.language or ""
            if lang not in d or q.object.lexical < d[lang]:
                d[lang] = q.object.lexical

    root_iri = Iri(root) if "://" in root else None
    if root_iri is None or root_iri not in subjects:
        wanted = fold(root)
        hits = sorted((s for s, ns in names.items() if wanted in ns), key=lambda s: s.value)
        if not hits:
            raise UnknownRootError(root)
        if len(hits) > 1:
            raise UnknownRootError(f"{root!r} is ambiguous: {', '.join(h.value for h in hits)}")
        root_iri = hits[0]

    if start is not None and end is not None and start.earliest > end.latest:
        return []
    descendants: set[Iri] = set()
    stack = list(children.get(root_iri, ()))
    while stack:
        n = stack.pop()
        if n in descendants or n == root_iri:
            continue
        descendants.add(n)
        stack.extend(children.get(n, ()))
    rows = []
    for n in descendants:
        b = begin.get(n)
        if b is None:
            continue
        if start is not None and b.earliest < start.earliest:
            continue
        if end is not None and b.latest > end.latest:
            continue
        title = _pick_text(labels.get(n, {})) or _pick_text(descs.get(n, {}))
        rows.append(TimelineRow(n.value, b, title, tuple(sorted(sources.get(n, ())))))
    rows.sort(key=lambda r: (r.begin.earliest, r.begin.granularity, r.iri))
    return rows
