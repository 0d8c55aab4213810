"""Event identification: class closures, sameAs propagation, category
heuristics, and temporal templates for event-list page titles."""
from __future__ import annotations

import logging
import re
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .dates import FlexDate, TemporalScope
from .graphs import connected_components
from .model import ListEventRecord, MemberKey, RawEntity, SourceKind

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


# --- evidence ----------------------------------------------------------------

CLASS_INSTANCE = "class-instance"
SAME_AS_PROPAGATION = "same-as-propagation"
CATEGORY_REGEX = "category-regex"
EVENT_LIST = "event-list"
CURRENT_EVENTS = "current-events"
EVIDENCE_KINDS = (CLASS_INSTANCE, SAME_AS_PROPAGATION, CATEGORY_REGEX, EVENT_LIST, CURRENT_EVENTS)


@dataclass(frozen=True, order=True)
class EventEvidence:
    kind: str
    detail: str

    def __post_init__(self) -> None:
        if self.kind not in EVIDENCE_KINDS:
            raise ValueError(f"unknown evidence kind {self.kind!r}")


@dataclass
class EventCandidate:
    key: MemberKey
    evidence: list[EventEvidence] = field(default_factory=list)
    record: ListEventRecord | None = None


Candidates = dict[MemberKey, list[EventEvidence]]


def merge_candidates(*streams: Iterable[EventCandidate]) -> Candidates:
    merged: Candidates = {}
    for stream in streams:
        for cand in stream:
            bucket = merged.setdefault(cand.key, [])
            for ev in cand.evidence:
                if ev not in bucket:
                    bucket.append(ev)
    return merged


# --- class-based identification ----------------------------------------------

def collect_event_classes(
    subclass_pairs: Iterable[tuple[str, str]],
    roots: Iterable[str],
    blacklist: Iterable[str] = (),
) -> set[str]:
    """Classes reachable downwards from ``roots`` along a path that avoids the blacklist.

    ``subclass_pairs`` holds ``(child, parent)`` edges and may contain cycles.
    A class reachable both through a blacklisted class and through a clean
    path is kept.
    """
    banned = set(blacklist)
    children: dict[str, set[str]] = defaultdict(set)
    for child, parent in subclass_pairs:
        children[parent].add(child)
    seen = {r for r in roots if r not in banned}
    queue = deque(sorted(seen))
    while queue:
        cls = queue.popleft()
        for child in sorted(children.get(cls, ())):
            if child not in seen and child not in banned:
                seen.add(child)
                queue.append(child)
    return seen


def identify_by_class(entities: Mapping[str, RawEntity], event_classes: set[str]) -> Iterator[EventCandidate]:
    for local_id in sorted(entities):
        ent = entities[local_id]
        hits = sorted(ent.types & event_classes)
        if hits:
            yield EventCandidate(ent.key, [EventEvidence(CLASS_INSTANCE, c) for c in hits])


# --- sameAs propagation ----------------------------------------------------

def propagate_same_as(candidates: Candidates, same_as: Iterable[tuple[MemberKey, MemberKey]]) -> Candidates:
    """Mark every entity sameAs-connected to a candidate as a candidate too.

    Returns a new mapping; existing candidates keep their evidence untouched,
    which makes the operation idempotent.
    """
    links = list(same_as)
    nodes = {k for pair in links for k in pair}
    out: Candidates = {k: list(v) for k, v in candidates.items()}
    for component in connected_components(nodes, links):
        seeds = sorted(k for k in component if k in candidates)
        if not seeds:
            continue
        ev = EventEvidence(SAME_AS_PROPAGATION, str(seeds[0]))
        for k in component:
            if k not in out:
                out[k] = [ev]
    return out


DEFAULT_CATEGORY_PATTERNS = {"en": r".* events$"}


def compile_category_patterns(table: Mapping[str, str]) -> dict[str, re.Pattern[str]]:
    compiled = {}
    for lang, pattern in table.items():
        try:
            compiled[lang] = re.compile(pattern)
        except re.error as exc:
            raise ConfigError(f"invalid category pattern for {lang!r}: {pattern!r} ({exc})") from None
    return compiled


def identify_by_category(
    entities: Mapping[str, RawEntity],
    patterns: Mapping[str, re.Pattern[str]],
    language: str | None = None,
) -> Iterator[EventCandidate]:
    """Entities whose article categories match the language's pattern.

    For sources without a language of their own every pattern is tried.
    """
    active = [patterns[language]] if language in patterns else ([] if language else list(patterns.values()))
    if not active:
        return
    for local_id in sorted(entities):
        ent = entities[local_id]
        hits = sorted(c for c in ent.categories if any(p.search(c) for p in active))
        if hits:
            yield EventCandidate(ent.key, [EventEvidence(CATEGORY_REGEX, c) for c in hits])


# --- event lists -------------------------------------------------------------

_MONTHS = {
    "en": ["january", "february", "march", "april", "may", "june", "july", "august",
           "september", "october", "november", "december"],
    "de": ["januar", "februar", "märz", "april", "mai", "juni", "juli", "august",
           "september", "oktober", "november", "dezember"],
    "fr": ["janvier", "février", "mars", "avril", "mai", "juin", "juillet", "août",
           "septembre", "octobre", "novembre", "décembre"],
    "ru": ["январь", "февраль", "март", "апрель", "май", "июнь", "июль", "август",
           "сентябрь", "октябрь", "ноябрь", "декабрь"],
    "pt": ["janeiro", "fevereiro", "março", "abril", "maio", "junho", "julho", "agosto",
           "setembro", "outubro", "novembro", "dezembro"],
}
_RU_GENITIVE = ["января", "февраля", "марта", "апреля", "мая", "июня", "июля", "августа",
                "сентября", "октября", "ноября", "декабря"]


def _month_table(language: str) -> dict[str, int]:
    table: dict[str, int] = {}
    for lang, names in _MONTHS.items():
        if lang != language and language in _MONTHS:
            continue
        for i, name in enumerate(names, start=1):
            table.setdefault(name, i)
            if lang in ("en", "de", "fr", "pt") and len(name) > 3:
                table.setdefault(name[:3], i)
    if language == "ru" or language not in _MONTHS:
        for i, name in enumerate(_RU_GENITIVE, start=1):
            table.setdefault(name, i)
    if language == "en":
        table["sept"] = 9
    if language == "de":
        table["maerz"] = 3
        table["jänner"] = 1
    return table


def _month_alt(language: str) -> str:
    names = sorted(_month_table(language), key=len, reverse=True)
    return "|".join(re.escape(n) for n in names)


@dataclass(frozen=True)
class TemporalTemplate:
    """Date parts fixed by an event-list page title."""

    year: int | None = None
    month: int | None = None
    day: int | None = None
    topic: str | None = None

    @property
    def recurring(self) -> bool:
        return self.year is None


def _title_patterns(language: str) -> list[tuple[str, re.Pattern[str]]]:
    m = _month_alt(language)
    flags = re.IGNORECASE
    year_in = {
        "en": r"(\d{1,4}) in (?P<topic>.+)",
        "de": r"(\d{1,4}) (?:in|im) (?P<topic>.+)",
        "fr": r"(\d{1,4}) (?:en|au|aux|dans l[ae]|dans les|à) ?(?P<topic>.+)",
        "ru": r"(\d{1,4}) (?:год )?в (?P<topic>.+)",
        "pt": r"(\d{1,4}) (?:em|na|no|nas|nos) (?P<topic>.+)",
    }.get(language, r"(\d{1,4}) in (?P<topic>.+)")
    year_only = {"ru": r"(\d{1,4})(?: год)?", "fr": r"(\d{1,4})(?: en)?"}.get(language, r"(\d{1,4})")
    month_year = {
        "pt": rf"(?P<month>{m}) de (\d{{3,4}})",
        "ru": rf"(?P<month>{m}) (\d{{3,4}})(?: года)?",
    }.get(language, rf"(?P<month>{m}) (\d{{3,4}})")
    day = {
        "en": rf"(?P<month>{m}) (?P<day>\d{{1,2}})",
        "de": rf"(?P<day>\d{{1,2}})\. ?(?P<month>{m})",
        "fr": rf"(?P<day>\d{{1,2}}|1er) (?P<month>{m})",
        "ru": rf"(?P<day>\d{{1,2}}) (?P<month>{m})",
        "pt": rf"(?P<day>\d{{1,2}}) de (?P<month>{m})",
    }.get(language, rf"(?P<month>{m}) (?P<day>\d{{1,2}})")
    return [
        ("year", re.compile(year_only, flags)),
        ("year_in", re.compile(year_in, flags)),
        ("month_year", re.compile(month_year, flags)),
        ("day", re.compile(day, flags)),
    ]


_PATTERN_CACHE: dict[str, list[tuple[str, re.Pattern[str]]]] = {}


def parse_list_title(title: str, language: str) -> TemporalTemplate | None:
    """Recognise ``<year>``, ``<year> in <topic>``, ``<month> <year>`` and
    ``<month> <day>`` titles (in the language's own word order)."""
    text = " ".join(title.replace("_", " ").split())
    if not text:
        return None
    patterns = _PATTERN_CACHE.get(language)
    if patterns is None:
        patterns = _PATTERN_CACHE[language] = _title_patterns(language)
    months = _month_table(language)
    for kind, pat in patterns:
        mt = pat.fullmatch(text)
        if not mt:
            continue
        try:
            if kind == "year":
                return TemporalTemplate(year=int(mt.group(1)))
            if kind == "year_in":
                return TemporalTemplate(year=int(mt.group(1)), topic=mt.group("topic"))
            if kind == "month_year":
                month = months[mt.group("month").lower()]
                return TemporalTemplate(year=int(mt.group(2)), month=month)
            month = months[mt.group("month").lower()]
            day_text = mt.group("day")
            day = 1 if day_text == "1er" else int(day_text)
            FlexDate(2000, month, day)  # leap year: accepts Feb 29 pages
            return TemporalTemplate(month=month, day=day)
        except (KeyError, ValueError):
            return None
    return None


_ISO_ROW = re.compile(r"^\s*(-?\d{4})(?:-(\d{2})(?:-(\d{2}))?)?\s*$")
_TOKEN = re.compile(r"\d+(?:er)?|[^\W\d_]+", re.UNICODE)
_RANGE_DASH = re.compile(r"\d\s*[\u2013\u2014-]\s*\d")


def resolve_row_date(template: TemporalTemplate | None, date_text: str, language: str) -> TemporalScope:
    """Combine a page template with a row's own date text.

    Raises ``ValueError`` when no calendar-valid date can be formed.
    """
    text = (date_text or "").strip()
    iso = _ISO_ROW.match(text)
    # a bare year on a recurring "<month> <day>" page completes the template
    if iso and not (iso.group(2) is None and template is not None and template.recurring):
        y, mo, d = iso.groups()
        date = FlexDate(int(y), int(mo) if mo else None, int(d) if d else None)
        return TemporalScope(date, date)
    if template is None:
        raise ValueError("no temporal template and no explicit date")
    months = _month_table(language)
    year, month, days = template.year, template.month, []
    if template.day is not None:
        days.append(template.day)
    for tok in _TOKEN.findall(text.lower()):
        if tok in months and (month is None or template.month is None):
            month = months[tok]
        elif tok[0].isdigit():
            num = int(tok.rstrip("er"))
            if len(tok.rstrip("er")) >= 3 and template.recurring:
                year = num
            elif len(tok.rstrip("er")) <= 2 and template.day is None:
                days.append(num)
    if year is None:
        raise ValueError(f"cannot determine year for {date_text!r}")
    if days and month is None:
        raise ValueError(f"day without month in {date_text!r}")
    if not days:
        begin = FlexDate(year, month)
        return TemporalScope(begin, begin)
    begin = FlexDate(year, month, days[0])
    end = begin
    if len(days) > 1 and _RANGE_DASH.search(text):
        end = FlexDate(year, month, days[1])
    return TemporalScope(begin, end)


def promote_list_events(records: Iterable[ListEventRecord], kinds: Mapping[str, SourceKind]) -> Iterator[EventCandidate]:
    for rec in records:
        kind = CURRENT_EVENTS if kinds.get(rec.source) == SourceKind.CURRENT_EVENTS else EVENT_LIST
        yield EventCandidate(rec.key, [EventEvidence(kind, rec.source_url)], record=rec)
