"""RDF terms, triples and a line-oriented N-Triples reader/writer."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"
LUBM = "http://swat.cse.lehigh.edu/onto/univ-bench.owl#"

# prefixes expanded inside <...> when the IRI text starts with "name:"
DEFAULT_PREFIXES = {"rdf": RDF, "rdfs": RDFS, "owl": OWL, "xsd": XSD, "lubm": LUBM}

_SPACE = re.compile(r"\s")  # same characters as str.isspace


class MalformedLine(ValueError):
    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


@dataclass(frozen=True, slots=True)
class Iri:
    value: str

    def __post_init__(self):
        if not self.value or _SPACE.search(self.value):
            raise ValueError(f"invalid IRI {self.value!r}")

    def __hash__(self):  # hot in hierarchy and dictionary lookups; str caches its hash
        return hash(self.value)

    def __str__(self):
        return f"<{self.value}>"


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __str__(self):
        return f"_:{self.label}"


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self):
        if self.datatype is not None and self.language is not None:
            raise ValueError("a literal cannot carry both a datatype and a language tag")

    def __str__(self):
        text = '"' + escape_literal(self.lexical) + '"'
        if self.language is not None:
            return f"{text}@{self.language}"
        if self.datatype is not None:
            return f"{text}^^<{self.datatype}>"
        return text


Term = Union[Iri, BlankNode, Literal]


@dataclass(frozen=True, slots=True)
class Triple:
    s: Term
    p: Iri
    o: Term

    def __post_init__(self):
        if not isinstance(self.p, Iri):
            raise TypeError("predicate must be an IRI")
        if isinstance(self.s, Literal):
            raise TypeError("subject cannot be a literal")

    def __iter__(self):
        return iter((self.s, self.p, self.o))


RDF_TYPE = Iri(RDF + "type")
RDFS_SUBCLASSOF = Iri(RDFS + "subClassOf")
RDFS_SUBPROPERTYOF = Iri(RDFS + "subPropertyOf")
RDFS_DOMAIN = Iri(RDFS + "domain")
RDFS_RANGE = Iri(RDFS + "range")
RDFS_CLASS = Iri(RDFS + "Class")
RDF_PROPERTY = Iri(RDF + "Property")
OWL_CLASS = Iri(OWL + "Class")
OWL_OBJECT_PROPERTY = Iri(OWL + "ObjectProperty")
OWL_DATATYPE_PROPERTY = Iri(OWL + "DatatypeProperty")
OWL_THING = Iri(OWL + "Thing")
OWL_SAMEAS = Iri(OWL + "sameAs")
TOP_PROPERTY = Iri(OWL + "topObjectProperty")


_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {'"': '"', "\\": "\\", "n": "\n", "r": "\r", "t": "\t", "'": "'"}


# characters str.splitlines() treats as line breaks must not appear raw
_LINE_BREAKS = frozenset("\x0b\x0c\x1c\x1d\x1e\x85\u2028\u2029")


def escape_literal(text: str) -> str:
    out = []
    for c in text:
        if c in _ESCAPES:
            out.append(_ESCAPES[c])
        elif c in _LINE_BREAKS:
            out.append(f"\\u{ord(c):04X}")
        else:
            out.append(c)
    return "".join(out)


def expand_iri(text: str, prefixes: dict[str, str]) -> str:
    head, sep, tail = text.partition(":")
    if sep and head in prefixes and not tail.startswith("//"):
        return prefixes[head] + tail
    return text


_LANG = re.compile(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)")
_BNODE = re.compile(r"_:([A-Za-z0-9_\-.]*[A-Za-z0-9_\-])")


class _LineReader:
    def __init__(self, line: str, number: int, prefixes: dict[str, str]):
        self.line = line
        self.pos = 0
        self.number = number
        self.prefixes = prefixes

    def fail(self, reason: str):
        raise MalformedLine(self.number, reason)

    def skip_ws(self):
        while self.pos < len(self.line) and self.line[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.line[self.pos] if self.pos < len(self.line) else ""

    def read_iri(self) -> Iri:
        end = self.line.find(">", self.pos)
        if end < 0:
            self.fail("unterminated IRI")
        text = self.line[self.pos + 1:end]
        if not text or _SPACE.search(text):
            self.fail(f"invalid IRI <{text}>")
        self.pos = end + 1
        return Iri(expand_iri(text, self.prefixes))

    def read_literal(self) -> Literal:
        out = []
        i = self.pos + 1
        line = self.line
        while True:
            if i >= len(line):
                self.fail("unterminated literal")
            c = line[i]
            if c == '"':
                break
            if c == "\\":
                if i + 1 >= len(line):
                    self.fail("unterminated literal")
                e = line[i + 1]
                if e in _UNESCAPES:
                    out.append(_UNESCAPES[e])
                    i += 2
                elif e in "uU":
                    width = 4 if e == "u" else 8
                    digits = line[i + 2:i + 2 + width]
                    if len(digits) != width:
                        self.fail("bad unicode escape")
                    try:
                        out.append(chr(int(digits, 16)))
                    except ValueError:
                        self.fail("bad unicode escape")
                    i += 2 + width
                else:
                    self.fail(f"unknown escape \\{e}")
                continue
            out.append(c)
            i += 1
        self.pos = i + 1
        lexical = "".join(out)
        if line.startswith("^^", self.pos):
            self.pos += 2
            if self.peek() != "<":
                self.fail("expected datatype IRI")
            return Literal(lexical, datatype=self.read_iri().value)
        m = _LANG.match(line, self.pos)
        if m:
            self.pos = m.end()
            return Literal(lexical, language=m.group(1))
        return Literal(lexical)

    def read_term(self, what: str) -> Term:
        c = self.peek()
        if c == "<":
            return self.read_iri()
        if c == '"':
            return self.read_literal()
        if c == "_":
            m = _BNODE.match(self.line, self.pos)
            if m is None:
                self.fail("invalid blank node label")
            self.pos = m.end()
            return BlankNode(m.group(1))
        self.fail(f"expected {what}")


def parse_line(line: str, number: int = 1, prefixes: Optional[dict[str, str]] = None) -> Optional[Triple]:
    """Parse one line; returns None for blank and comment lines."""
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    r = _LineReader(stripped, number, DEFAULT_PREFIXES if prefixes is None else prefixes)
    s = r.read_term("subject")
    if isinstance(s, Literal):
        r.fail("literal in subject position")
    p = r.read_term("predicate")
    if not isinstance(p, Iri):
        r.fail("predicate must be an IRI")
    if r.peek() == ".":
        r.fail("expected object")
    o = r.read_term("object")
    if r.peek() != ".":
        r.fail("expected '.'")
    r.pos += 1
    r.skip_ws()
    if r.pos < len(r.line) and not r.line.startswith("#", r.pos):
        r.fail("trailing content after '.'")
    return Triple(s, p, o)


def iter_ntriples(lines: Iterable[str], prefixes: Optional[dict[str, str]] = None) -> Iterator[Triple]:
    for number, line in enumerate(lines, start=1):
        t = parse_line(line, number, prefixes)
        if t is not None:
            yield t


def parse_ntriples(text: Union[str, Iterable[str]], prefixes: Optional[dict[str, str]] = None) -> list[Triple]:
    """Parse N-Triples text (a string or an iterable of lines) into triples, in input order."""
    if isinstance(text, str):
        text = text.splitlines()
    return list(iter_ntriples(text, prefixes))


def read_ntriples(path, prefixes: Optional[dict[str, str]] = None) -> list[Triple]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_ntriples(fh, prefixes))


def serialize_term(t: Term) -> str:
    return str(t)


def serialize_triple(t: Triple) -> str:
    return f"{t.s} {t.p} {t.o} ."


def parse_term(token: str) -> Term:
    """Parse a single serialized term such as ``<iri>``, ``_:b`` or ``"lit"@en``."""
    r = _LineReader(token.strip(), 1, {})
    term = r.read_term("term")
    if r.peek():
        r.fail("trailing content after term")
    return term


def write_ntriples(triples: Iterable[Triple], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in triples:
            fh.write(serialize_triple(t))
            fh.write("\n")
            n += 1
    return n
