from __future__ import annotations

import random

import pytest

from eventforge.dates import FlexDate, TemporalScope
from eventforge.identify import (
    CATEGORY_REGEX, CLASS_INSTANCE, SAME_AS_PROPAGATION, ConfigError, EventCandidate, EventEvidence,
    TemporalTemplate, collect_event_classes, compile_category_patterns, identify_by_category, identify_by_class,
    merge_candidates, parse_list_title, propagate_same_as, resolve_row_date,
)
from eventforge.model import MemberKey, RawEntity

import oracles


def random_dag(rng: random.Random, n: int, p: float) -> list[tuple[str, str]]:
    """(child, parent) edges; parents always have a lower index, plus a few back edges for cycles."""
    edges = [(f"c{j}", f"c{i}") for j in range(n) for i in range(j) if rng.random() < p]
    for _ in range(rng.randint(0, 2)):
        a, b = rng.randrange(n), rng.randrange(n)
        edges.append((f"c{a}", f"c{b}"))
    return edges


def test_class_closure_matches_fixpoint_oracle():
    rng = random.Random(5)
    for _ in range(300):
        n = rng.randint(1, 40)
        edges = random_dag(rng, n, rng.choice([0.05, 0.1, 0.25]))
        classes = [f"c{i}" for i in range(n)]
        roots = rng.sample(classes, rng.randint(1, min(3, n)))
        blacklist = rng.sample(classes, rng.randint(0, min(4, n)))
        assert collect_event_classes(edges, roots, blacklist) == oracles.event_classes(edges, roots, blacklist)


NOISY_CHAIN = [
    ("act", "event"), ("activity", "act"), ("physical_activity", "activity"), ("sport", "physical_activity"),
    ("martial_art", "sport"), ("battle", "event"), ("military_conflict", "event"), ("battle", "military_conflict"),
]


def test_noisy_chain_blacklist_cuts_everything_downstream():
    got = collect_event_classes(NOISY_CHAIN, ["event"], ["activity"])
    assert got == {"event", "act", "battle", "military_conflict"}
    for cls in ("activity", "physical_activity", "sport", "martial_art"):
        assert cls not in got
    # without the blacklist the noise leaks in
    assert "martial_art" in collect_event_classes(NOISY_CHAIN, ["event"])


def test_clean_path_survives_a_blacklisted_one():
    edges = [("b", "a"), ("c", "b"), ("c", "a")]
    assert collect_event_classes(edges, ["a"], ["b"]) == {"a", "c"}
    assert collect_event_classes(edges, ["a"], ["a"]) == set()


def test_identify_by_class_keeps_every_hit_as_evidence():
    ents = {
        "J": RawEntity("wikidata", "J", types={"martial_art"}),
        "B": RawEntity("wikidata", "B", types={"battle", "military_conflict", "thing"}),
    }
    classes = collect_event_classes(NOISY_CHAIN, ["event"], ["activity"])
    cands = list(identify_by_class(ents, classes))
    assert [c.key for c in cands] == [MemberKey("wikidata", "B")]
    assert cands[0].evidence == [EventEvidence(CLASS_INSTANCE, "battle"), EventEvidence(CLASS_INSTANCE, "military_conflict")]


def _random_propagation(rng: random.Random):
    keys = [MemberKey(rng.choice(["wikidata", "dbpedia-en", "yago"]), f"e{i}") for i in range(rng.randint(2, 40))]
    links = [tuple(rng.sample(keys, 2)) for _ in range(rng.randint(0, len(keys)))]
    seeds = rng.sample(keys, rng.randint(0, len(keys) // 3))
    cands = {k: [EventEvidence(CLASS_INSTANCE, "x")] for k in seeds}
    return keys, links, cands


def test_propagation_monotone_idempotent_and_component_complete():
    rng = random.Random(21)
    for _ in range(100):
        keys, links, cands = _random_propagation(rng)
        out = propagate_same_as(cands, links)
        # monotone: nothing lost, evidence untouched
        assert all(out[k] == v for k, v in cands.items())
        # idempotent
        assert propagate_same_as(out, links) == out
        # exactly the components containing a seed
        expected = set(cands)
        for comp in oracles.components(set(), links):
            if comp & set(cands):
                expected |= comp
        assert set(out) == expected
        # more seeds never yield fewer candidates
        extra = dict(cands)
        for k in rng.sample(keys, min(2, len(keys))):
            extra.setdefault(k, [EventEvidence(CLASS_INSTANCE, "y")])
        assert set(out) <= set(propagate_same_as(extra, links))


def test_propagation_evidence_names_the_smallest_seed():
    a, b, c = MemberKey("dbpedia-en", "A"), MemberKey("wikidata", "Q1"), MemberKey("yago", "Y")
    out = propagate_same_as({c: [EventEvidence(CLASS_INSTANCE, "x")], a: [EventEvidence(CLASS_INSTANCE, "x")]},
                            [(a, b), (b, c)])
    assert out[b] == [EventEvidence(SAME_AS_PROPAGATION, "dbpedia-en:A")]


def test_category_rule():
    ents = {
        "K": RawEntity("dbpedia-en", "K", categories={"February 1941 events", "Battles of WWII"}),
        "X": RawEntity("dbpedia-en", "X", categories={"Events organisations"}),
        "Y": RawEntity("dbpedia-en", "Y", categories={"Sports events in France"}),
    }
    pats = compile_category_patterns({"en": r".* events$", "de": r"^Ereignis \d+$"})
    got = list(identify_by_category(ents, pats, "en"))
    assert [c.key.local_id for c in got] == ["K"]
    assert got[0].evidence == [EventEvidence(CATEGORY_REGEX, "February 1941 events")]
    assert list(identify_by_category(ents, pats, "ru")) == []
    assert [c.key.local_id for c in identify_by_category(ents, pats, None)] == ["K"]
    with pytest.raises(ConfigError):
        compile_category_patterns({"en": "(unclosed"})


def test_merge_candidates_dedupes_evidence():
    k = MemberKey("wikidata", "Q1")
    ev = EventEvidence(CLASS_INSTANCE, "x")
    merged = merge_candidates([EventCandidate(k, [ev])], [EventCandidate(k, [ev, EventEvidence(CATEGORY_REGEX, "c")])])
    assert merged == {k: [ev, EventEvidence(CATEGORY_REGEX, "c")]}
    with pytest.raises(ValueError):
        EventEvidence("hunch", "x")


@pytest.mark.parametrize("title,lang,expected", [
    ("1941", "en", TemporalTemplate(year=1941)),
    ("1941_in_Germany", "en", TemporalTemplate(year=1941, topic="Germany")),
    ("February 1941", "en", TemporalTemplate(year=1941, month=2)),
    ("May 4", "en", TemporalTemplate(month=5, day=4)),
    ("February 29", "en", TemporalTemplate(month=2, day=29)),
    ("1941 in Deutschland", "de", TemporalTemplate(year=1941, topic="Deutschland")),
    ("12. Februar", "de", TemporalTemplate(month=2, day=12)),
    ("Février 1941", "fr", TemporalTemplate(year=1941, month=2)),
    ("1er mai", "fr", TemporalTemplate(month=5, day=1)),
    ("1941 год", "ru", TemporalTemplate(year=1941)),
    ("12 февраля", "ru", TemporalTemplate(month=2, day=12)),
    ("Fevereiro de 1941", "pt", TemporalTemplate(year=1941, month=2)),
    ("12 de fevereiro", "pt", TemporalTemplate(month=2, day=12)),
])
def test_list_titles(title, lang, expected):
    assert parse_list_title(title, lang) == expected


@pytest.mark.parametrize("title", ["", "List of battles", "February 30", "Smarch 1941"])
def test_unrecognised_titles(title):
    assert parse_list_title(title, "en") is None


def _day(y, m, d):
    return TemporalScope(FlexDate(y, m, d), FlexDate(y, m, d))


@pytest.mark.parametrize("template,text,lang,expected", [
    (TemporalTemplate(year=1941), "February 12", "en", _day(1941, 2, 12)),
    (TemporalTemplate(year=1941, month=2), "12", "en", _day(1941, 2, 12)),
    (TemporalTemplate(year=1941, month=2), "3–5", "en",
     TemporalScope(FlexDate(1941, 2, 3), FlexDate(1941, 2, 5))),
    (TemporalTemplate(year=1941), "February", "en",
     TemporalScope(FlexDate(1941, 2), FlexDate(1941, 2))),
    (TemporalTemplate(month=5, day=4), "1944", "en", _day(1944, 5, 4)),
    (TemporalTemplate(year=1941), "12. Februar", "de", _day(1941, 2, 12)),
    (TemporalTemplate(year=1941), "1er mai", "fr", _day(1941, 5, 1)),
    (None, "1941-02-12", "en", _day(1941, 2, 12)),
    (TemporalTemplate(year=1941), "1941-03", "en", TemporalScope(FlexDate(1941, 3), FlexDate(1941, 3))),
])
def test_row_dates(template, text, lang, expected):
    assert resolve_row_date(template, text, lang) == expected


@pytest.mark.parametrize("template,text", [
    (None, "February 12"),
    (TemporalTemplate(month=5, day=4), ""),
    (TemporalTemplate(year=1941), "12"),
    (TemporalTemplate(year=1941, month=2), "30"),
])
def test_row_dates_reject(template, text):
    with pytest.raises(ValueError):
        resolve_row_date(template, text, "en")
