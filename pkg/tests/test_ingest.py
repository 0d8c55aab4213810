from __future__ import annotations

import io

import pytest

from eventforge.dates import FlexDate, TemporalScope
from eventforge.ingest import (
    LIST_COLUMNS, KeyResolver, PropertyMap, RegistryError, RowError, SourceConfig, category_name, load_event_list_records,
    load_kg_dump, read_tsv, register_sources, source_kind,
)
from eventforge.model import MemberKey, SourceKind
from eventforge.rdf import Iri, Literal, parse_ntriples
from eventforge.vocab import Namespaces

NS = Namespaces("http://example.org/")
WD = "http://www.wikidata.org/entity/"
DBR = "http://dbpedia.org/resource/"


def descriptors(*names: str):
    spaces = {"wikidata": WD, "dbpedia-en": DBR, "dbpedia-de": "http://de.dbpedia.org/resource/",
              "yago": "http://yago-knowledge.org/resource/"}
    return register_sources([SourceConfig(n, namespace=spaces.get(n)) for n in names], NS)


def test_default_trust_order():
    ds = descriptors("yago", "wikipedia-en", "dbpedia-de", "wcep", "dbpedia-en", "wikidata", "wikipedia-fr")
    assert [(d.source, d.trust_rank) for d in ds] == [
        ("wikidata", 1), ("dbpedia-en", 2), ("dbpedia-de", 3), ("wikipedia-en", 4), ("wikipedia-fr", 5),
        ("wcep", 6), ("yago", 7),
    ]
    assert ds[0].graph_iri == Iri("http://example.org/graph/wikidata")
    assert ds[2].language == "de"
    assert source_kind("wcep") is SourceKind.CURRENT_EVENTS
    assert source_kind("wikipedia-ru") is SourceKind.EVENT_LIST


def test_explicit_ranks_override_defaults():
    ds = register_sources([SourceConfig("wikidata", trust_rank=2), SourceConfig("yago", trust_rank=1)], NS)
    assert [d.source for d in ds] == ["yago", "wikidata"]


@pytest.mark.parametrize("sources,msg", [
    ([], "at least one"),
    ([SourceConfig("wikidata"), SourceConfig("wikidata")], "duplicate source"),
    ([SourceConfig("freebase")], "unknown source"),
    ([SourceConfig("wikidata", trust_rank=1), SourceConfig("yago")], "every source or on none"),
    ([SourceConfig("wikidata", trust_rank=1), SourceConfig("yago", trust_rank=1)], "duplicate trust"),
    ([SourceConfig("wikidata", trust_rank=0)], "start at 1"),
])
def test_registry_rejects_bad_configs(sources, msg):
    with pytest.raises(RegistryError, match=msg):
        register_sources(sources, NS)


def test_key_resolver_longest_prefix_and_inverse():
    ds = register_sources([SourceConfig("dbpedia-en", namespace="http://dbpedia.org/"),
                           SourceConfig("yago", namespace="http://dbpedia.org/resource/yago/")], NS)
    r = KeyResolver(ds)
    assert r.resolve("http://dbpedia.org/resource/yago/X") == MemberKey("yago", "X")
    assert r.resolve("http://dbpedia.org/page/Y") == MemberKey("dbpedia-en", "page/Y")
    assert r.resolve("http://other.org/Z") is None
    assert r.resolve("http://other.org/Z", "yago") == MemberKey("yago", "http://other.org/Z")
    assert r.iri(MemberKey("yago", "X")) == "http://dbpedia.org/resource/yago/X"
    assert r.iri(MemberKey("yago", "http://other.org/Z")) == "http://other.org/Z"
    assert r.iri(MemberKey("yago", "_:b0")) is None


def test_property_map_validation():
    with pytest.raises(RegistryError, match="unknown property"):
        PropertyMap.from_mapping({"colour": "http://x/"})
    with pytest.raises(RegistryError, match="mapped to both"):
        PropertyMap.from_mapping({"begin": "http://x/d", "end": "http://x/d"}).route()


@pytest.mark.parametrize("term,name", [
    (Iri("http://dbpedia.org/resource/Category:February_1941_events"), "February 1941 events"),
    (Iri("http://de.dbpedia.org/resource/Kategorie:Ereignis_1941"), "Ereignis 1941"),
    (Iri("http://x.org/Category:Caf%C3%A9_events/"), "Café events"),
    (Literal("Conflicts in 1941"), "Conflicts in 1941"),
])
def test_category_name(term, name):
    assert category_name(term) == name


WD_DUMP = f"""\
<{WD}Q1> <http://www.w3.org/2000/01/rdf-schema#label> "Battle"@en .
<{WD}Q1> <http://www.w3.org/2000/01/rdf-schema#label> "Schlacht"@de .
<{WD}Q1> <http://www.w3.org/2000/01/rdf-schema#label> "Second label"@en .
<{WD}Q1> <http://www.w3.org/2004/02/skos/core#altLabel> "The Battle"@en .
<{WD}Q1> <http://www.w3.org/2004/02/skos/core#altLabel> "Battle"@en .
<{WD}Q1> <http://schema.org/description> "a fight"@en .
<{WD}Q1> <{WD}P31> <{WD}Q178561> .
<{WD}Q1> <{WD}P580> "1941-02-03"^^<http://www.w3.org/2001/XMLSchema#date> .
<{WD}Q1> <{WD}P580> "1941-01"^^<http://www.w3.org/2001/XMLSchema#gYearMonth> .
<{WD}Q1> <{WD}P582> "1941-04-01"^^<http://www.w3.org/2001/XMLSchema#date> .
<{WD}Q1> <{WD}P276> <{WD}Q2> .
<{WD}Q1> <{WD}P361> <{WD}Q3> .
<{WD}Q1> <http://www.w3.org/2002/07/owl#sameAs> <{DBR}Battle> .
<{WD}Q1> <{WD}P1545> "7" .
<{WD}Q4> <{WD}P580> "not a date" .
<{WD}Q4> <{WD}P580> "1950"^^<http://www.w3.org/2001/XMLSchema#gYear> .
<{WD}Q4> <{WD}P582> "1949"^^<http://www.w3.org/2001/XMLSchema#gYear> .
<{WD}Q178561> <{WD}P279> <{WD}Q1190554> .
<{WD}Q9> <{WD}P108> <{WD}Q10> .
<{WD}S1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#subject> <{WD}Q9> .
<{WD}S1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#predicate> <{WD}P108> .
<{WD}S1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#object> <{WD}Q10> .
<{WD}S1> <{WD}pq580> "1930"^^<http://www.w3.org/2001/XMLSchema#gYear> .
<{WD}S2> <http://www.w3.org/1999/02/22-rdf-syntax-ns#subject> <{WD}Q9> .
<{WD}S2> <http://www.w3.org/1999/02/22-rdf-syntax-ns#object> <{WD}Q10> .
_:b1 <{WD}P31> <{WD}Q5> .
"""

WD_PROPS = PropertyMap.from_mapping({
    "alias": "http://www.w3.org/2004/02/skos/core#altLabel",
    "description": "http://schema.org/description",
    "type": f"{WD}P31",
    "subclass_of": f"{WD}P279",
    "begin": [f"{WD}P580"],
    "end": [f"{WD}P582"],
    "location": f"{WD}P276",
    "validity_begin": f"{WD}pq580",
})


@pytest.fixture
def wd_load():
    ds = descriptors("wikidata", "dbpedia-en")
    triples = [t for _, t in parse_ntriples(io.StringIO(WD_DUMP))]
    return load_kg_dump("wikidata", triples, WD_PROPS, KeyResolver(ds))


def test_entity_fields_are_routed(wd_load):
    q1 = wd_load.entities["Q1"]
    assert q1.labels == {"en": "Battle", "de": "Schlacht"}
    assert q1.aliases == {"en": {"Second label", "The Battle"}}
    assert q1.descriptions == {"en": {"a fight"}}
    assert q1.types == {f"{WD}Q178561"}
    assert q1.locations == {MemberKey("wikidata", "Q2")}
    assert q1.same_as == {MemberKey("dbpedia-en", "Battle")}
    assert wd_load.entities["Q178561"].superclasses == {f"{WD}Q1190554"}


def test_existence_takes_earliest_begin_and_latest_end(wd_load):
    assert wd_load.entities["Q1"].existence == TemporalScope(FlexDate(1941, 1), FlexDate(1941, 4, 1))


def test_inverted_existence_drops_end_and_bad_dates_warn(wd_load):
    assert wd_load.entities["Q4"].existence == TemporalScope(FlexDate(1950), None)
    msgs = [w.message for w in wd_load.warnings if w.subject == f"{WD}Q4"]
    assert any("unparseable" in m for m in msgs) and any("end dropped" in m for m in msgs)


def test_reified_statement_replaces_bare_triple(wd_load):
    rels = [r for r in wd_load.relations if r.subject == MemberKey("wikidata", "Q9")]
    assert len(rels) == 1
    assert rels[0].begin == FlexDate(1930) and rels[0].object == MemberKey("wikidata", "Q10")
    assert "S1" not in wd_load.entities and "S2" not in wd_load.entities
    assert any("incomplete" in w.message for w in wd_load.warnings)


def test_other_predicates_become_relations_including_literals(wd_load):
    preds = {(r.predicate, r.object) for r in wd_load.relations if r.subject == MemberKey("wikidata", "Q1")}
    assert (f"{WD}P361", MemberKey("wikidata", "Q3")) in preds
    assert (f"{WD}P1545", Literal("7")) in preds


def test_blank_subjects_are_skipped(wd_load):
    assert not any(k.startswith("_:") for k in wd_load.entities)
    assert any("blank-node subject" in w.message for w in wd_load.warnings)


def _tsv(rows: list[list[str]]) -> io.StringIO:
    lines = ["\t".join(LIST_COLUMNS)] + ["\t".join(r) for r in rows]
    return io.StringIO("\n".join(lines) + "\n")


def test_event_list_rows():
    rows = [
        ["1941 in Germany", "en", "February 12", "Rommel arrives in Tripoli.", "Erwin_Rommel|Tripoli", ""],
        ["February 1941", "en", "3–5", "A three day event.", "", "http://x/"],
        ["February 1941", "en", "31", "Impossible day.", "", ""],
        ["Some page", "en", "sometime", "No date.", "", ""],
        ["1941", "en", "May 1", "", "", ""],
        ["1941 in Germany", "en", "February 12", "Rommel  arrives in Tripoli.", "", ""],
        ["# comment", "", "", "", "", ""],
        ["May 4", "en", "1944", "Recurring page row.", "", ""],
    ]
    errors: list[RowError] = []
    recs = list(load_event_list_records("wikipedia-en", read_tsv(_tsv(rows), LIST_COLUMNS), errors))
    assert [r.date for r in recs] == [
        TemporalScope(FlexDate(1941, 2, 12), FlexDate(1941, 2, 12)),
        TemporalScope(FlexDate(1941, 2, 3), FlexDate(1941, 2, 5)),
        TemporalScope(FlexDate(1944, 5, 4), FlexDate(1944, 5, 4)),
    ]
    assert recs[0].linked_entities == {"Erwin_Rommel", "Tripoli"}
    assert recs[0].source_url == "https://en.wikipedia.org/wiki/1941_in_Germany"
    assert recs[0].local_id.startswith("1941_in_Germany#")
    assert recs[1].source_url == "http://x/"
    assert [e.row for e in errors] == [4, 5, 6, 7]
    assert "duplicate" in errors[-1].message


def test_read_tsv_requires_columns():
    with pytest.raises(RegistryError, match="lacks columns"):
        list(read_tsv(io.StringIO("list_page\tlanguage\n"), LIST_COLUMNS))
