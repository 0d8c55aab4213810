"""Line-oriented N-Triples / N-Quads parsing and canonical serialization.

Malformed lines never abort a stream: they are reported as :class:`ParseError`
records and skipped.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, NamedTuple, Union

logger = logging.getLogger(__name__)

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
LANG_STRING = RDF + "langString"

_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_LANG_RE = re.compile(r"[a-zA-Z]+(?:-[a-zA-Z0-9]+)*")
_PN_CHARS_BASE = (
    "A-Za-z\u00c0-\u00d6\u00d8-\u00f6\u00f8-\u02ff\u0370-\u037d\u037f-\u1fff"
    "\u200c-\u200d\u2070-\u218f\u2c00-\u2fef\u3001-\ud7ff\uf900-\ufdcf"
    "\ufdf0-\ufffd\U00010000-\U000effff"
)
_PN_CHARS_U = _PN_CHARS_BASE + "_:"
_PN_CHARS = _PN_CHARS_U + "\\-0-9\u00b7\u0300-\u036f\u203f-\u2040"
_BNODE_LABEL_RE = re.compile(
    f"[{_PN_CHARS_U}0-9](?:[{_PN_CHARS}.]*[{_PN_CHARS}])?"
)


@dataclass(frozen=True, slots=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not self.value or _IRI_FORBIDDEN.search(self.value):
            raise ValueError(f"invalid IRI: {self.value!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __post_init__(self) -> None:
        if not _BNODE_LABEL_RE.fullmatch(self.label):
            raise ValueError(f"invalid blank node label: {self.label!r}")


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: Iri | None = None
    language: str | None = None

    def __post_init__(self) -> None:
        if self.language is not None:
            if self.datatype is not None and self.datatype.value != LANG_STRING:
                raise ValueError("literal cannot carry both datatype and language")
            if not _LANG_RE.fullmatch(self.language):
                raise ValueError(f"invalid language tag: {self.language!r}")
            object.__setattr__(self, "datatype", None)
            object.__setattr__(self, "language", self.language.lower())


Term = Union[Iri, BlankNode, Literal]


class Triple(NamedTuple):
    subject: Iri | BlankNode
    predicate: Iri
    object: Term


class Quad(NamedTuple):
    subject: Iri | BlankNode
    predicate: Iri
    object: Term
    graph: Iri

    @property
    def triple(self) -> Triple:
        return Triple(self.subject, self.predicate, self.object)


class ParseError(NamedTuple):
    line: int
    message: str
    text: str


class _Malformed(Exception):
    pass


# --- parsing -----------------------------------------------------------------

_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_WS = " \t"


def _unescape(raw: str, allow_echar: bool) -> str:
    if "\\" not in raw:
        return raw
    out = []
    i = 0
    n = len(raw)
    while i < n:
        c = raw[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= n:
            raise _Malformed("dangling backslash")
        e = raw[i + 1]
        if e in "uU":
            width = 4 if e == "u" else 8
            digits = raw[i + 2 : i + 2 + width]
            if len(digits) != width or not all(d in "0123456789abcdefABCDEF" for d in digits):
                raise _Malformed(f"bad \\{e} escape")
            cp = int(digits, 16)
            if cp > 0x10FFFF or 0xD800 <= cp <= 0xDFFF:
                raise _Malformed(f"escape out of range: {digits}")
            out.append(chr(cp))
            i += 2 + width
        elif allow_echar and e in _ECHAR:
            out.append(_ECHAR[e])
            i += 2
        else:
            raise _Malformed(f"bad escape \\{e}")
    return "".join(out)


def _skip_ws(s: str, i: int) -> int:
    n = len(s)
    while i < n and s[i] in _WS:
        i += 1
    return i


def _read_iri(s: str, i: int) -> tuple[Iri, int]:
    end = s.find(">", i + 1)
    if end < 0:
        raise _Malformed("unterminated IRI")
    raw = s[i + 1 : end]
    if any(ch in raw for ch in ' <"{}|^`') or any(ord(ch) < 0x21 for ch in raw):
        raise _Malformed(f"illegal character in IRI <{raw}>")
    value = _unescape(raw, allow_echar=False)
    if not value or _IRI_FORBIDDEN.search(value):
        raise _Malformed(f"invalid IRI <{raw}>")
    return Iri(value), end + 1


def _read_bnode(s: str, i: int) -> tuple[BlankNode, int]:
    m = _BNODE_LABEL_RE.match(s, i + 2)
    if not m:
        raise _Malformed("bad blank node label")
    return BlankNode(m.group(0)), m.end()


def _read_literal(s: str, i: int) -> tuple[Literal, int]:
    j = i + 1
    n = len(s)
    while j < n:
        c = s[j]
        if c == "\\":
            j += 2
            continue
        if c == '"':
            break
        if c in "\r\n":
            raise _Malformed("raw line break in literal")
        j += 1
    else:
        raise _Malformed("unterminated literal")
    lexical = _unescape(s[i + 1 : j], allow_echar=True)
    j += 1
    if j < n and s[j] == "@":
        m = _LANG_RE.match(s, j + 1)
        if not m:
            raise _Malformed("bad language tag")
        return Literal(lexical, language=m.group(0).lower()), m.end()
    if s.startswith("^^", j):
        if j + 2 >= n or s[j + 2] != "<":
            raise _Malformed("datatype must be an IRI")
        dt, k = _read_iri(s, j + 2)
        if dt.value == LANG_STRING:
            raise _Malformed("rdf:langString literal without language tag")
        return Literal(lexical, datatype=dt), k
    return Literal(lexical), j


def _read_term(s: str, i: int) -> tuple[Term, int]:
    c = s[i]
    if c == "<":
        return _read_iri(s, i)
    if c == '"':
        return _read_literal(s, i)
    if s.startswith("_:", i):
        return _read_bnode(s, i)
    raise _Malformed(f"unexpected character {c!r} at column {i + 1}")


def _parse_terms(s: str) -> list[Term] | None:
    """Split one statement line into terms; ``None`` for blank/comment lines."""
    i = _skip_ws(s, 0)
    n = len(s)
    if i >= n or s[i] == "#":
        return None
    terms: list[Term] = []
    while True:
        if i >= n:
            raise _Malformed("missing final dot")
        if s[i] == ".":
            i = _skip_ws(s, i + 1)
            if i < n and s[i] != "#":
                raise _Malformed("trailing content after final dot")
            return terms
        term, i = _read_term(s, i)
        terms.append(term)
        if len(terms) > 4:
            raise _Malformed("too many terms")
        i = _skip_ws(s, i)


def _check_spo(terms: list[Term]) -> Triple:
    s, p, o = terms[:3]
    if isinstance(s, Literal):
        raise _Malformed("literal in subject position")
    if not isinstance(p, Iri):
        raise _Malformed("predicate must be an IRI")
    return Triple(s, p, o)


def _lines(stream: IO[bytes] | IO[str] | Iterable[bytes | str]) -> Iterator[tuple[int, str | None, str]]:
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                yield lineno, None, f"invalid UTF-8: {exc.reason}"
                continue
        else:
            text = raw
        yield lineno, text.rstrip("\r\n"), ""


def _report(errors: list[ParseError] | None, err: ParseError) -> None:
    if errors is None:
        logger.warning("line %d: %s", err.line, err.message)
    else:
        errors.append(err)


def parse_ntriples(
    stream: IO[bytes] | IO[str] | Iterable[bytes | str],
    errors: list[ParseError] | None = None,
) -> Iterator[tuple[int, Triple]]:
    """Yield ``(line_number, Triple)`` for every well-formed line.

    Malformed lines are appended to ``errors`` (or logged when it is ``None``).
    """
    for lineno, text, problem in _lines(stream):
        if text is None:
            _report(errors, ParseError(lineno, problem, ""))
            continue
        try:
            terms = _parse_terms(text)
            if terms is None:
                continue
            if len(terms) != 3:
                raise _Malformed(f"expected 3 terms, found {len(terms)}")
            yield lineno, _check_spo(terms)
        except _Malformed as exc:
            _report(errors, ParseError(lineno, str(exc), text))


def parse_nquads(
    stream: IO[bytes] | IO[str] | Iterable[bytes | str],
    default_graph: Iri,
    errors: list[ParseError] | None = None,
) -> Iterator[tuple[int, Quad]]:
    """Yield ``(line_number, Quad)``; three-term lines land in ``default_graph``."""
    for lineno, text, problem in _lines(stream):
        if text is None:
            _report(errors, ParseError(lineno, problem, ""))
            continue
        try:
            terms = _parse_terms(text)
            if terms is None:
                continue
            if len(terms) == 3:
                graph = default_graph
            elif len(terms) == 4:
                graph = terms[3]
                if not isinstance(graph, Iri):
                    raise _Malformed("graph label must be an IRI")
            else:
                raise _Malformed(f"expected 3 or 4 terms, found {len(terms)}")
            s, p, o = _check_spo(terms)
            yield lineno, Quad(s, p, o, graph)
        except _Malformed as exc:
            _report(errors, ParseError(lineno, str(exc), text))


# --- serialization -----------------------------------------------------------

_LITERAL_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t", "\b": "\\b", "\f": "\\f"}
_NEEDS_ESCAPE = re.compile('["\\\\\x00-\x1f\x7f]')


def _escape_char(m: re.Match[str]) -> str:
    c = m.group(0)
    return _LITERAL_ESCAPES.get(c) or f"\\u{ord(c):04X}"


def format_term(term: Term) -> str:
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, Literal):
        body = _NEEDS_ESCAPE.sub(_escape_char, term.lexical)
        if term.language:
            return f'"{body}"@{term.language}'
        if term.datatype is not None:
            return f'"{body}"^^<{term.datatype.value}>'
        return f'"{body}"'
    return f"_:{term.label}"


def format_quad(q: Quad) -> str:
    return f"{format_term(q.subject)} {format_term(q.predicate)} {format_term(q.object)} {format_term(q.graph)} .\n"


def format_triple(t: Triple) -> str:
    return f"{format_term(t.subject)} {format_term(t.predicate)} {format_term(t.object)} .\n"


def serialize_nquads(quads: Iterable[Quad]) -> Iterator[bytes]:
    """Encode quads one line each, in input order."""
    for q in quads:
        yield format_quad(q).encode("utf-8")


def write_nquads(quads: Iterable[Quad], out: IO[bytes]) -> int:
    count = 0
    for line in serialize_nquads(quads):
        out.write(line)
        count += 1
    return count


def parse_term(text: str) -> Term:
    """Parse a single N-Triples term (used by the TSV checkpoint codecs)."""
    try:
        term, end = _read_term(text, 0)
    except (_Malformed, IndexError) as exc:
        raise ValueError(f"cannot parse term {text!r}: {exc}") from None
    if end != len(text):
        raise ValueError(f"trailing characters after term {text!r}")
    return term
