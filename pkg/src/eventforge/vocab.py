"""Vocabulary IRIs used in the output graph."""
from __future__ import annotations

import os
from dataclasses import dataclass

from .rdf import RDF, XSD, Iri

DEFAULT_BASE = "http://eventkg.l3s.uni-hannover.de/"
BASE_ENV_VAR = "EVENTFORGE_BASE"

RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
DCTERMS = "http://purl.org/dc/terms/"
SEM = "http://semanticweb.cs.vu.nl/2009/11/sem/"
SO = "http://schema.org/"
DBO = "http://dbpedia.org/ontology/"
VOID = "http://rdfs.org/ns/void#"

RDF_TYPE = Iri(RDF + "type")
RDF_SUBJECT = Iri(RDF + "subject")
RDF_OBJECT = Iri(RDF + "object")
RDFS_LABEL = Iri(RDFS + "label")
RDFS_SUBCLASS_OF = Iri(RDFS + "subClassOf")
OWL_SAME_AS = Iri(OWL + "sameAs")
DC_ALTERNATIVE = Iri(DCTERMS + "alternative")
DC_DESCRIPTION = Iri(DCTERMS + "description")
DC_CREATED = Iri(DCTERMS + "created")

SEM_CORE = Iri(SEM + "Core")
SEM_EVENT = Iri(SEM + "Event")
SEM_PLACE = Iri(SEM + "Place")
SEM_HAS_PLACE = Iri(SEM + "hasPlace")
SEM_BEGIN = Iri(SEM + "hasBeginTimeStamp")
SEM_END = Iri(SEM + "hasEndTimeStamp")
SEM_ROLE_TYPE = Iri(SEM + "roleType")

HAS_SUB_EVENT = Iri(SO + "subEvent")
CONTAINED_IN_PLACE = Iri(SO + "containedInPlace")
PREVIOUS_EVENT = Iri(DBO + "previousEvent")
NEXT_EVENT = Iri(DBO + "nextEvent")
STRUCTURAL_ROLES = frozenset({HAS_SUB_EVENT, PREVIOUS_EVENT, NEXT_EVENT, CONTAINED_IN_PLACE})

VOID_DATASET = Iri(VOID + "Dataset")
VOID_TRIPLES = Iri(VOID + "triples")

XSD_NON_NEGATIVE_INTEGER = Iri(XSD + "nonNegativeInteger")

ROLE_ALIASES = {
    "hasSubEvent": HAS_SUB_EVENT,
    "subEvent": HAS_SUB_EVENT,
    "previousEvent": PREVIOUS_EVENT,
    "nextEvent": NEXT_EVENT,
    "containedInPlace": CONTAINED_IN_PLACE,
}


@dataclass(frozen=True)
class Namespaces:
    """Resource / schema / graph namespaces derived from one base IRI."""

    base: str

    @classmethod
    def from_env(cls, base: str | None = None) -> Namespaces:
        return cls(os.environ.get(BASE_ENV_VAR) or base or DEFAULT_BASE)

    @property
    def resource(self) -> str:
        return self.base + "resource/"

    @property
    def schema(self) -> str:
        return self.base + "schema/"

    @property
    def graph(self) -> str:
        return self.base + "graph/"

    def s(self, name: str) -> Iri:
        return Iri(self.schema + name)

    def r(self, name: str) -> Iri:
        return Iri(self.resource + name)

    def g(self, name: str) -> Iri:
        return Iri(self.graph + name)
