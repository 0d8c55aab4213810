"""Record types shared across pipeline stages."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .dates import FlexDate, TemporalScope
from .rdf import Literal


class MemberKey(NamedTuple):
    """A (source, local id) pair naming one record in one reference source."""

    source: str
    local_id: str

    def __str__(self) -> str:
        return f"{self.source}:{self.local_id}"

    @classmethod
    def parse(cls, text: str) -> MemberKey:
        source, sep, local = text.partition(":")
        if not sep or not source or not local:
            raise ValueError(f"member key must look like 'source:local_id', got {text!r}")
        return cls(source, local)


class SourceKind(str, Enum):
    KG = "kg"
    EVENT_LIST = "event-list"
    CURRENT_EVENTS = "current-events"


@dataclass
class RawEntity:
    source: str
    local_id: str
    labels: dict[str, str] = field(default_factory=dict)
    aliases: dict[str, set[str]] = field(default_factory=dict)
    descriptions: dict[str, set[str]] = field(default_factory=dict)
    existence: TemporalScope | None = None
    types: set[str] = field(default_factory=set)
    superclasses: set[str] = field(default_factory=set)
    same_as: set[MemberKey] = field(default_factory=set)
    categories: set[str] = field(default_factory=set)
    out_links: dict[str, set[str]] = field(default_factory=dict)
    locations: set[MemberKey] = field(default_factory=set)

    @property
    def key(self) -> MemberKey:
        return MemberKey(self.source, self.local_id)


class RelationCategory(str, Enum):
    TEMPORAL = "temporal"
    STRUCTURAL = "structural"
    INDIRECT = "indirect"
    PLAIN = "plain"


@dataclass(frozen=True)
class RawRelation:
    source: str
    subject: MemberKey
    predicate: str
    object: MemberKey | Literal
    begin: FlexDate | None = None
    end: FlexDate | None = None
    role_type: str | None = None
    category: RelationCategory = RelationCategory.PLAIN

    @property
    def has_validity(self) -> bool:
        return self.begin is not None or self.end is not None

    @property
    def validity(self) -> TemporalScope | None:
        if not self.has_validity:
            return None
        return TemporalScope(self.begin, self.end)

    def sort_key(self) -> tuple:
        obj = str(self.object) if isinstance(self.object, MemberKey) else "\x00" + self.object.lexical
        return (
            self.source, self.subject, self.predicate, obj,
            self.begin.sort_key() if self.begin else (), self.end.sort_key() if self.end else (),
        )


@dataclass(frozen=True)
class ListEventRecord:
    source: str
    list_page: str
    date: TemporalScope
    description: str
    linked_entities: frozenset[str]
    language: str
    source_url: str
    local_id: str

    def __post_init__(self) -> None:
        if self.date.empty:
            raise ValueError("list event record needs a date")
        if not self.description.strip():
            raise ValueError("list event record needs a description")

    @property
    def key(self) -> MemberKey:
        return MemberKey(self.source, self.local_id)
