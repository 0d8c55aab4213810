from __future__ import annotations

import datetime as dt
import random

import pytest

from eventforge.dates import (
    FlexDate, Granularity, TemporalScope, days_in_month, is_leap, overlaps_at_coarser, parse_date_literal,
    parse_iso, scope_or_none,
)
from eventforge.rdf import Iri, Literal

XSD = "http://www.w3.org/2001/XMLSchema#"


def typed(lex: str, t: str) -> Literal:
    return Literal(lex, datatype=Iri(XSD + t))


def test_leap_years_match_the_calendar_module():
    import calendar
    for y in range(1, 2500):
        assert is_leap(y) == calendar.isleap(y)
        for m in range(1, 13):
            assert days_in_month(y, m) == calendar.monthrange(y, m)[1]


@pytest.mark.parametrize("text,expected", [
    ("1941", FlexDate(1941)),
    ("1941-02", FlexDate(1941, 2)),
    ("1941-02-12", FlexDate(1941, 2, 12)),
    ("1939-09-01T00:00:00Z", FlexDate(1939, 9, 1)),
    ("-0044-03-15", FlexDate(-44, 3, 15)),
    ("  2000-02-29 ", FlexDate(2000, 2, 29)),
])
def test_parse_iso(text, expected):
    assert parse_iso(text) == expected


@pytest.mark.parametrize("text", ["", "19x1", "1941-13", "1941-02-30", "1900-02-29", "Feb 1941", "1941/02/12"])
def test_parse_iso_rejects(text):
    with pytest.raises(ValueError):
        parse_iso(text)


def test_granularity_and_bounds():
    assert FlexDate(1941).granularity is Granularity.YEAR
    assert FlexDate(1941).earliest == (1941, 1, 1) and FlexDate(1941).latest == (1941, 12, 31)
    assert FlexDate(1940, 2).latest == (1940, 2, 29)
    assert FlexDate(1941, 2, 12).earliest == FlexDate(1941, 2, 12).latest


def test_truncate_never_widens():
    d = FlexDate(1941, 2, 12)
    assert d.truncate(Granularity.MONTH) == FlexDate(1941, 2)
    assert d.truncate(Granularity.YEAR) == FlexDate(1941)
    assert FlexDate(1941).truncate(Granularity.DAY) == FlexDate(1941)


def test_isoformat_round_trips_randomly():
    rng = random.Random(7)
    for _ in range(2000):
        y = rng.randint(-3000, 3000)
        m = rng.choice([None, rng.randint(1, 12)])
        d = None if m is None or rng.random() < 0.3 else rng.randint(1, days_in_month(y, m))
        f = FlexDate(y, m, d)
        assert parse_iso(f.isoformat()) == f


def test_unit_boundaries():
    assert FlexDate(1941, 2, 1).is_unit_start()
    assert FlexDate(1941, 1, 1).is_unit_start()
    assert not FlexDate(1941, 2).is_unit_start()
    assert FlexDate(1941, 2, 28).is_unit_end()
    assert not FlexDate(1940, 2, 28).is_unit_end()
    assert FlexDate(1940, 12, 31).is_unit_end()
    assert not FlexDate(1941).is_unit_end()


def test_to_literal_keeps_granularity_on_the_wire():
    assert FlexDate(1941).to_literal() == typed("1941", "gYear")
    assert FlexDate(1941, 2).to_literal() == typed("1941-02", "gYearMonth")
    assert FlexDate(1941, 2, 12).to_literal() == typed("1941-02-12", "date")
    for f in (FlexDate(1941), FlexDate(1941, 2), FlexDate(1941, 2, 12)):
        assert parse_date_literal(f.to_literal()) == f


@pytest.mark.parametrize("lit,expected", [
    (typed("1941-02-12", "date"), FlexDate(1941, 2, 12)),
    (typed("1941-02-12Z", "date"), FlexDate(1941, 2, 12)),
    (typed("1941-02", "gYearMonth"), FlexDate(1941, 2)),
    (typed("1941", "gYear"), FlexDate(1941)),
    (typed("1941-02-12T10:00:00+02:00", "dateTime"), FlexDate(1941, 2, 12)),
    (Literal("1941-02"), FlexDate(1941, 2)),
])
def test_parse_date_literal(lit, expected):
    assert parse_date_literal(lit) == expected


@pytest.mark.parametrize("lit", [typed("1941", "date"), typed("1941-02-12", "gYear"), typed("1941", "dateTime"),
                                 Literal("yesterday")])
def test_parse_date_literal_rejects_mismatches(lit):
    with pytest.raises(ValueError):
        parse_date_literal(lit)


def test_scope_validation_and_interval():
    with pytest.raises(ValueError):
        TemporalScope(FlexDate(1942), FlexDate(1941))
    s = TemporalScope(FlexDate(1941, 2), None)
    assert s.interval() == ((1941, 2, 1), (1941, 2, 28))
    assert TemporalScope().empty and TemporalScope().interval() is None
    assert scope_or_none(None, None) is None
    # ordering uses earliest bounds, so a coarse begin may precede a fine end in the same year
    TemporalScope(FlexDate(1941), FlexDate(1941, 5, 3))
    with pytest.raises(ValueError):
        TemporalScope(FlexDate(1941, 5, 3), FlexDate(1941))


def _brute_overlap(a: TemporalScope, b: TemporalScope) -> bool:
    bounds = [x for x in (a.begin, a.end, b.begin, b.end) if x is not None]
    g = min(x.granularity for x in bounds)

    def days(s):
        lo = (s.begin or s.end).truncate(g)
        hi = (s.end or s.begin).truncate(g)
        start = dt.date(*lo.earliest)
        out, cur = set(), start
        while cur <= dt.date(*hi.latest):
            out.add(cur)
            cur += dt.timedelta(days=1)
        return out

    return bool(days(a) & days(b))


def test_overlaps_at_coarser_matches_day_enumeration():
    rng = random.Random(11)

    def rand_date():
        y = rng.randint(1939, 1942)
        m = rng.choice([None, rng.randint(1, 12)])
        d = None if m is None or rng.random() < 0.4 else rng.randint(1, days_in_month(y, m))
        return FlexDate(y, m, d)

    def rand_scope():
        a, b = rand_date(), rand_date()
        if a.earliest > b.earliest:
            a, b = b, a
        return rng.choice([TemporalScope(a, b), TemporalScope(a, None), TemporalScope(None, b)])

    for _ in range(400):
        s1, s2 = rand_scope(), rand_scope()
        assert overlaps_at_coarser(s1, s2) == _brute_overlap(s1, s2)
        assert overlaps_at_coarser(s1, s2) == overlaps_at_coarser(s2, s1)


def test_coarse_overlap_examples():
    feb12 = TemporalScope(FlexDate(1941, 2, 12), None)
    assert overlaps_at_coarser(feb12, TemporalScope(FlexDate(1941), None))
    assert overlaps_at_coarser(feb12, TemporalScope(FlexDate(1941, 2), None))
    assert not overlaps_at_coarser(feb12, TemporalScope(FlexDate(1941, 3), None))
