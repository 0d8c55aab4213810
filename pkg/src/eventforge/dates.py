"""Dates with explicit granularity, and begin/end scopes built from them."""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum

from .rdf import XSD, Iri, Literal

XSD_DATE = XSD + "date"
XSD_DATETIME = XSD + "dateTime"
XSD_GYEARMONTH = XSD + "gYearMonth"
XSD_GYEAR = XSD + "gYear"


class Granularity(IntEnum):
    YEAR = 1
    MONTH = 2
    DAY = 3


def is_leap(year: int) -> bool:
    # proleptic Gregorian, astronomical year numbering (year 0 exists)
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def days_in_month(year: int, month: int) -> int:
    if month == 2:
        return 29 if is_leap(year) else 28
    return 30 if month in (4, 6, 9, 11) else 31


@dataclass(frozen=True, slots=True)
class FlexDate:
    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self) -> None:
        if self.day is not None and self.month is None:
            raise ValueError("day given without month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.day is not None and not 1 <= self.day <= days_in_month(self.year, self.month):
            raise ValueError(f"day out of range: {self.year}-{self.month}-{self.day}")

    @property
    def granularity(self) -> Granularity:
        if self.day is not None:
            return Granularity.DAY
        if self.month is not None:
            return Granularity.MONTH
        return Granularity.YEAR

    @property
    def earliest(self) -> tuple[int, int, int]:
        return (self.year, self.month or 1, self.day or 1)

    @property
    def latest(self) -> tuple[int, int, int]:
        month = self.month or 12
        return (self.year, month, self.day or days_in_month(self.year, month))

    def truncate(self, granularity: Granularity) -> FlexDate:
        if granularity >= self.granularity:
            return self
        if granularity == Granularity.YEAR:
            return FlexDate(self.year)
        return FlexDate(self.year, self.month)

    def sort_key(self) -> tuple[tuple[int, int, int], int]:
        return (self.earliest, int(self.granularity))

    def isoformat(self) -> str:
        y = f"-{abs(self.year):04d}" if self.year < 0 else f"{self.year:04d}"
        if self.month is None:
            return y
        if self.day is None:
            return f"{y}-{self.month:02d}"
        return f"{y}-{self.month:02d}-{self.day:02d}"

    def __str__(self) -> str:
        return self.isoformat()

    def to_literal(self) -> Literal:
        dt = {Granularity.YEAR: XSD_GYEAR, Granularity.MONTH: XSD_GYEARMONTH, Granularity.DAY: XSD_DATE}
        return Literal(self.isoformat(), datatype=Iri(dt[self.granularity]))

    def is_unit_start(self) -> bool:
        """Day-granular first day of a month (which includes January 1st)."""
        return self.day == 1

    def is_unit_end(self) -> bool:
        return self.day is not None and self.day == days_in_month(self.year, self.month)


_ISO_RE = re.compile(r"^\s*(-?\d{1,9})(?:-(\d{2})(?:-(\d{2}))?)?(?:T[0-9:.]+(?:Z|[+-]\d{2}:\d{2})?)?\s*$")
_TZ_RE = re.compile(r"(Z|[+-]\d{2}:\d{2})$")


def parse_iso(text: str) -> FlexDate:
    """Parse ``YYYY``, ``YYYY-MM``, ``YYYY-MM-DD`` (optionally with a time part)."""
    m = _ISO_RE.match(text)
    if not m:
        raise ValueError(f"unparseable date: {text!r}")
    year = int(m.group(1))
    month = int(m.group(2)) if m.group(2) else None
    day = int(m.group(3)) if m.group(3) else None
    return FlexDate(year, month, day)


def parse_date_literal(lit: Literal) -> FlexDate:
    """Turn an xsd:date / gYearMonth / gYear / dateTime literal into a FlexDate.

    Granularity follows the datatype, never widened; untyped literals are read
    by their lexical shape.
    """
    lexical = lit.lexical.strip()
    dt = lit.datatype.value if lit.datatype is not None else None
    if dt != XSD_DATETIME:
        lexical = _TZ_RE.sub("", lexical)
    d = parse_iso(lexical)
    expected = {XSD_GYEAR: Granularity.YEAR, XSD_GYEARMONTH: Granularity.MONTH, XSD_DATE: Granularity.DAY}.get(dt)
    if expected is not None and d.granularity != expected:
        raise ValueError(f"{lit.lexical!r} does not match datatype {dt}")
    if dt == XSD_DATETIME and d.granularity != Granularity.DAY:
        raise ValueError(f"incomplete dateTime {lit.lexical!r}")
    return d


@dataclass(frozen=True, slots=True)
class TemporalScope:
    begin: FlexDate | None = None
    end: FlexDate | None = None

    def __post_init__(self) -> None:
        if self.begin is not None and self.end is not None and self.begin.earliest > self.end.earliest:
            raise ValueError(f"scope begins after it ends: {self.begin} > {self.end}")

    @property
    def empty(self) -> bool:
        return self.begin is None and self.end is None

    def interval(self) -> tuple[tuple[int, int, int], tuple[int, int, int]] | None:
        """Closed day interval covered by the scope, or ``None`` when unbounded."""
        if self.empty:
            return None
        lo = (self.begin or self.end).earliest
        hi = (self.end or self.begin).latest
        return lo, hi


def scope_or_none(begin: FlexDate | None, end: FlexDate | None) -> TemporalScope | None:
    if begin is None and end is None:
        return None
    return TemporalScope(begin, end)


def overlaps_at_coarser(a: TemporalScope, b: TemporalScope) -> bool:
    """Do two bounded scopes intersect once all bounds are cut to the coarsest granularity?"""
    bounds = [d for d in (a.begin, a.end, b.begin, b.end) if d is not None]
    g = min(d.granularity for d in bounds)

    def cut(s: TemporalScope) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
        lo = (s.begin or s.end).truncate(g)
        hi = (s.end or s.begin).truncate(g)
        return lo.earliest, hi.latest

    a_lo, a_hi = cut(a)
    b_lo, b_hi = cut(b)
    return a_lo <= b_hi and b_lo <= a_hi
