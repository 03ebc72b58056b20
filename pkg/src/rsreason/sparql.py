"""Parser for the continuous-query subset: SELECT / WHERE / BGP / FILTER / UNION.

Reasoning configuration travels in comment pragmas so query files stay plain
SPARQL::

    #pragma reasoning LM|SAM|NONE
    #pragma window count 10000      (or: time 10)
    #pragma sameas on|off

A bare local name such as ``memberOf`` resolves against the default ``:``
prefix, which the benchmark queries need.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .rdf_model import RDF_TYPE, XSD, Iri, Literal, Term, escape_literal

REASONING_MODES = ("LM", "SAM", "NONE")


class SparqlSyntaxError(ValueError):
    def __init__(self, position: int, expected: str, found: str = ""):
        msg = f"at offset {position}: expected {expected}"
        if found:
            msg += f", found {found!r}"
        super().__init__(msg)
        self.position = position
        self.expected = expected


class UnboundSelectVariable(ValueError):
    def __init__(self, name: str):
        super().__init__(f"?{name} is selected but never bound in WHERE")
        self.name = name


class UnboundFilterVariable(ValueError):
    def __init__(self, name: str):
        super().__init__(f"FILTER references ?{name}, which is not bound in its group")
        self.name = name


@dataclass(frozen=True, slots=True, order=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


Slot = Union[Var, Term]


@dataclass(frozen=True)
class TriplePattern:
    s: Slot
    p: Slot
    o: Slot

    def __iter__(self):
        return iter((self.s, self.p, self.o))

    def variables(self) -> list[Var]:
        return [x for x in (self.s, self.p, self.o) if isinstance(x, Var)]


@dataclass(frozen=True)
class Comparison:
    var: Var
    op: str  # one of >= > <= < =
    value: int


@dataclass(frozen=True)
class Bgp:
    patterns: tuple[TriplePattern, ...]


@dataclass(frozen=True)
class Group:
    parts: tuple


@dataclass(frozen=True)
class Union_:
    left: object
    right: object


@dataclass(frozen=True)
class Filter:
    body: object
    condition: tuple[Comparison, ...]


@dataclass(frozen=True)
class CountTumbling:
    size: int


@dataclass(frozen=True)
class TimeTumbling:
    seconds: float


WindowSpec = Union[CountTumbling, TimeTumbling]


@dataclass(frozen=True)
class QueryAst:
    select_vars: tuple[Var, ...]
    body: object
    reasoning: str = "LM"
    window: Optional[WindowSpec] = None
    sameas: bool = False
    name: str = field(default="", compare=False)

    def patterns(self) -> list[TriplePattern]:
        return list(_walk_patterns(self.body))

    def variables(self) -> list[Var]:
        seen: dict[Var, None] = {}
        for tp in self.patterns():
            for v in tp.variables():
                seen.setdefault(v)
        return list(seen)


def _walk_patterns(node):
    if isinstance(node, Bgp):
        yield from node.patterns
    elif isinstance(node, Group):
        for p in node.parts:
            yield from _walk_patterns(p)
    elif isinstance(node, Union_):
        yield from _walk_patterns(node.left)
        yield from _walk_patterns(node.right)
    elif isinstance(node, Filter):
        yield from _walk_patterns(node.body)


def _bound_vars(node) -> set[Var]:
    return {v for tp in _walk_patterns(node) for v in tp.variables()}


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>"{}|^`\\\s]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<dtype>\^\^)
  | (?P<number>[+-]?\d+)
  | (?P<op>>=|<=|&&|\|\||!=|[<>=])
  | (?P<pname>(?:[A-Za-z][A-Za-z0-9_\-]*)?:[A-Za-z0-9_][A-Za-z0-9_\-]*(?:\.[A-Za-z0-9_\-]+)*|(?:[A-Za-z][A-Za-z0-9_\-]*)?:)
  | (?P<word>[A-Za-z_][A-Za-z0-9_\-]*)
  | (?P<punct>[{}().;,*])
""", re.VERBOSE)

_PRAGMA = re.compile(r"#\s*pragma\s+(\w+)\s*(.*)$")
_KEYWORDS = {"SELECT", "WHERE", "PREFIX", "FILTER", "UNION", "OPTIONAL", "DISTINCT", "BASE",
             "ASK", "CONSTRUCT", "DESCRIBE", "GRAPH", "BIND", "VALUES", "MINUS"}
_UNESC = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r", "'": "'"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str):
    tokens = []
    pragmas = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SparqlSyntaxError(pos, "a token", text[pos:pos + 10])
        kind = m.lastgroup
        if kind == "comment":
            pm = _PRAGMA.match(m.group())
            if pm:
                pragmas.append((pm.group(1).lower(), pm.group(2).strip(), pos))
        elif kind == "word" and m.group().upper() in _KEYWORDS:
            tokens.append(_Tok("kw", m.group().upper(), pos))
        elif kind == "word" and m.group() == "a":
            tokens.append(_Tok("a", "a", pos))
        elif kind != "ws":
            tokens.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Tok("eof", "", len(text)))
    return tokens, pragmas


class _Parser:
    def __init__(self, text: str, prefixes: Optional[dict[str, str]]):
        self.tokens, self.pragmas = _tokenize(text)
        self.i = 0
        self.prefixes = dict(prefixes or {})

    @property
    def tok(self) -> _Tok:
        return self.tokens[self.i]

    def advance(self) -> _Tok:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, text: Optional[str] = None) -> _Tok:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            raise SparqlSyntaxError(t.pos, repr(text) if text else kind, t.text)
        return self.advance()

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    # -- grammar ----------------------------------------------------------
    def query(self) -> QueryAst:
        while self.at("kw", "PREFIX"):
            self.advance()
            pname = self.expect("pname")
            if not pname.text.endswith(":"):
                raise SparqlSyntaxError(pname.pos, "prefix name ending in ':'", pname.text)
            iri = self.expect("iri")
            self.prefixes[pname.text[:-1]] = iri.text[1:-1]
        if self.at("kw") and self.tok.text in ("ASK", "CONSTRUCT", "DESCRIBE"):
            raise SparqlSyntaxError(self.tok.pos, "SELECT (only SELECT queries are supported)", self.tok.text)
        self.expect("kw", "SELECT")
        if self.at("kw", "DISTINCT"):
            raise SparqlSyntaxError(self.tok.pos, "variables (DISTINCT is not supported)", "DISTINCT")
        select: list[Var] = []
        star = False
        if self.at("punct", "*"):
            self.advance()
            star = True
        else:
            while self.at("var"):
                select.append(Var(self.advance().text[1:]))
            if not select:
                raise SparqlSyntaxError(self.tok.pos, "at least one variable", self.tok.text)
        if self.at("kw", "WHERE"):
            self.advance()
        body = self.group()
        self.expect("eof")
        if not list(_walk_patterns(body)):
            raise SparqlSyntaxError(self.tokens[-1].pos, "at least one triple pattern")
        bound = _bound_vars(body)
        if star:
            select = sorted(bound, key=lambda v: v.name)
        for v in select:
            if v not in bound:
                raise UnboundSelectVariable(v.name)
        reasoning, window, sameas = self.config()
        return QueryAst(tuple(select), body, reasoning, window, sameas)

    def config(self):
        reasoning, window, sameas = "LM", None, False
        for key, arg, pos in self.pragmas:
            if key == "reasoning":
                mode = arg.upper()
                if mode not in REASONING_MODES:
                    raise SparqlSyntaxError(pos, "LM, SAM or NONE after #pragma reasoning", arg)
                reasoning = mode
            elif key == "window":
                parts = arg.split()
                try:
                    if len(parts) == 2 and parts[0] == "count":
                        window = CountTumbling(int(parts[1]))
                    elif len(parts) == 2 and parts[0] == "time":
                        window = TimeTumbling(float(parts[1]))
                    else:
                        raise ValueError
                except ValueError:
                    raise SparqlSyntaxError(pos, "'count N' or 'time S' after #pragma window", arg) from None
            elif key == "sameas":
                if arg.lower() not in ("on", "off"):
                    raise SparqlSyntaxError(pos, "on or off after #pragma sameas", arg)
                sameas = arg.lower() == "on"
            else:
                raise SparqlSyntaxError(pos, "a known pragma (reasoning, window, sameas)", key)
        return reasoning, window, sameas

    def group(self):
        self.expect("punct", "{")
        parts: list = []
        bgp: list[TriplePattern] = []
        conditions: list[Comparison] = []
        while not self.at("punct", "}"):
            t = self.tok
            if t.kind == "punct" and t.text == ".":
                self.advance()
            elif t.kind == "punct" and t.text == "{":
                if bgp:
                    parts.append(Bgp(tuple(bgp)))
                    bgp = []
                node = self.group()
                while self.at("kw", "UNION"):
                    self.advance()
                    node = Union_(node, self.group())
                parts.append(node)
            elif t.kind == "kw" and t.text == "FILTER":
                self.advance()
                conditions.extend(self.condition())
            elif t.kind == "kw" and t.text == "OPTIONAL":
                raise SparqlSyntaxError(t.pos, "a triple pattern (OPTIONAL is not supported)", t.text)
            elif t.kind == "kw":
                raise SparqlSyntaxError(t.pos, "a triple pattern, group or FILTER", t.text)
            elif t.kind == "eof":
                raise SparqlSyntaxError(t.pos, "'}'")
            else:
                bgp.extend(self.triples_same_subject())
        self.advance()
        if bgp:
            parts.append(Bgp(tuple(bgp)))
        node = parts[0] if len(parts) == 1 else Group(tuple(parts))
        if not parts:
            node = Bgp(())
        if conditions:
            bound = _bound_vars(node)
            for c in conditions:
                if c.var not in bound:
                    raise UnboundFilterVariable(c.var.name)
            node = Filter(node, tuple(conditions))
        return node

    def triples_same_subject(self) -> list[TriplePattern]:
        subject = self.term(allow_literal=False)
        out = []
        while True:
            verb = self.verb()
            while True:
                out.append(TriplePattern(subject, verb, self.term(allow_literal=True)))
                if self.at("punct", ","):
                    self.advance()
                    continue
                break
            if self.at("punct", ";"):
                self.advance()
                while self.at("punct", ";"):
                    self.advance()
                if self.at("punct", ".") or self.at("punct", "}"):
                    break
                continue
            break
        return out

    def verb(self):
        if self.at("a"):
            self.advance()
            return RDF_TYPE
        t = self.tok
        v = self.term(allow_literal=False)
        if not isinstance(v, (Var, Iri)):
            raise SparqlSyntaxError(t.pos, "a predicate IRI or variable", t.text)
        return v

    def term(self, allow_literal: bool):
        t = self.tok
        if t.kind == "var":
            self.advance()
            return Var(t.text[1:])
        if t.kind == "iri":
            self.advance()
            return Iri(t.text[1:-1])
        if t.kind == "pname" or t.kind == "word":
            self.advance()
            return Iri(self.resolve(t))
        if t.kind == "a":
            self.advance()
            return Iri(self.resolve(_Tok("word", "a", t.pos)))
        if t.kind == "string" and allow_literal:
            self.advance()
            lexical = re.sub(r"\\(.)", lambda m: _UNESC.get(m.group(1), m.group(1)), t.text[1:-1])
            if self.at("lang"):
                return Literal(lexical, language=self.advance().text[1:])
            if self.at("dtype"):
                self.advance()
                dt = self.term(allow_literal=False)
                if not isinstance(dt, Iri):
                    raise SparqlSyntaxError(self.tok.pos, "datatype IRI")
                return Literal(lexical, datatype=dt.value)
            return Literal(lexical)
        if t.kind == "number" and allow_literal:
            self.advance()
            return Literal(t.text, datatype=XSD + "integer")
        raise SparqlSyntaxError(t.pos, "a term", t.text)

    def resolve(self, t: _Tok) -> str:
        if t.kind == "word":
            prefix, local = "", t.text
        else:
            prefix, _, local = t.text.partition(":")
        if prefix not in self.prefixes:
            what = "a declared default prefix ':'" if prefix == "" else f"a declared prefix {prefix!r}"
            raise SparqlSyntaxError(t.pos, what, t.text)
        return self.prefixes[prefix] + local

    def condition(self) -> list[Comparison]:
        self.expect("punct", "(")
        out = self.conjunction()
        self.expect("punct", ")")
        return out

    def conjunction(self) -> list[Comparison]:
        out = self.comparison_or_group()
        while self.at("op", "&&"):
            self.advance()
            out.extend(self.comparison_or_group())
        if self.at("op", "||"):
            raise SparqlSyntaxError(self.tok.pos, "'&&' or ')' (disjunctive filters are not supported)", "||")
        return out

    def comparison_or_group(self) -> list[Comparison]:
        if self.at("punct", "("):
            self.advance()
            out = self.conjunction()
            self.expect("punct", ")")
            return out
        left = self.operand()
        op_tok = self.tok
        if op_tok.kind != "op" or op_tok.text not in (">=", ">", "<=", "<", "="):
            raise SparqlSyntaxError(op_tok.pos, "a comparison operator", op_tok.text)
        self.advance()
        right = self.operand()
        if isinstance(left, Var) and isinstance(right, int):
            return [Comparison(left, op_tok.text, right)]
        if isinstance(left, int) and isinstance(right, Var):
            flipped = {">=": "<=", ">": "<", "<=": ">=", "<": ">", "=": "="}[op_tok.text]
            return [Comparison(right, flipped, left)]
        raise SparqlSyntaxError(op_tok.pos, "a comparison between a variable and an integer")

    def operand(self):
        t = self.tok
        if t.kind == "var":
            self.advance()
            return Var(t.text[1:])
        if t.kind == "number":
            self.advance()
            return int(t.text)
        raise SparqlSyntaxError(t.pos, "a variable or integer", t.text)


def parse_query(text: str, prefixes: Optional[dict[str, str]] = None, name: str = "") -> QueryAst:
    ast = _Parser(text, prefixes).query()
    if name:
        ast = QueryAst(ast.select_vars, ast.body, ast.reasoning, ast.window, ast.sameas, name)
    return ast


# -- printing ------------------------------------------------------------

def _fmt_slot(x) -> str:
    if isinstance(x, Var):
        return str(x)
    if isinstance(x, Literal):
        text = '"' + escape_literal(x.lexical) + '"'
        if x.language:
            return f"{text}@{x.language}"
        if x.datatype:
            return f"{text}^^<{x.datatype}>"
        return text
    return str(x)


def _fmt_node(node, indent: str) -> list[str]:
    if isinstance(node, Bgp):
        return [f"{indent}{_fmt_slot(tp.s)} {_fmt_slot(tp.p)} {_fmt_slot(tp.o)} ." for tp in node.patterns]
    if isinstance(node, Group):
        lines = []
        for part in node.parts:
            if isinstance(part, Bgp):
                lines += _fmt_node(part, indent)
            else:
                lines += _fmt_braced(part, indent)
        return lines
    if isinstance(node, Union_):
        return _fmt_braced(node, indent)
    if isinstance(node, Filter):
        lines = _fmt_node(node.body, indent) if not isinstance(node.body, Union_) else _fmt_braced(node.body, indent)
        cond = " && ".join(f"{c.var} {c.op} {c.value}" for c in node.condition)
        return lines + [f"{indent}FILTER ({cond})"]
    raise TypeError(node)


def _fmt_braced(node, indent: str) -> list[str]:
    if isinstance(node, Union_):
        right = _fmt_braced(node.right, indent)
        if isinstance(node.right, Union_):
            # UNION associates to the left, so a nested right side needs its own group
            right = [f"{indent}{{"] + _fmt_braced(node.right, indent + "  ") + [f"{indent}}}"]
        return _fmt_braced(node.left, indent) + [f"{indent}UNION"] + right
    return [f"{indent}{{"] + _fmt_node(node, indent + "  ") + [f"{indent}}}"]


def format_query(ast: QueryAst) -> str:
    """Canonical text for an AST; ``parse_query(format_query(a)) == a``."""
    lines = [f"#pragma reasoning {ast.reasoning}"]
    if isinstance(ast.window, CountTumbling):
        lines.append(f"#pragma window count {ast.window.size}")
    elif isinstance(ast.window, TimeTumbling):
        lines.append(f"#pragma window time {ast.window.seconds!r}")
    if ast.sameas:
        lines.append("#pragma sameas on")
    lines.append("SELECT " + " ".join(str(v) for v in ast.select_vars) + " WHERE {")
    body = ast.body
    if isinstance(body, Union_):
        lines += _fmt_braced(body, "  ")
    else:
        lines += _fmt_node(body, "  ")
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- benchmark queries ---------------------------------------------------

QUERY_HEADER = (
    "PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"
    "PREFIX lubm: <http://swat.cse.lehigh.edu/onto/univ-bench.owl#>\n"
    "PREFIX : <http://swat.cse.lehigh.edu/onto/univ-bench.owl#>\n"
)

# bodies as listed for the benchmark; Q4 and Q7 write memberOf without a prefix
BUILTIN_BODIES = {
    "Q1": "SELECT ?n WHERE {\n ?x rdf:type lubm:Professor; lubm:name ?n.}\n",
    "Q2": ("SELECT ?ns ?nx WHERE {\n ?x rdf:type lubm:Professor; lubm:name ?nx.\n"
           " ?s lubm:advisor ?x; rdf:type lubm:Student.\n ?s lubm:name ?ns. }\n"),
    "Q3": "SELECT ?x ?o  WHERE { ?x lubm:memberOf ?o.}\n",
    "Q4": "SELECT ?o ?n WHERE { \n?x rdf:type lubm:Professor; memberOf ?o;\nlubm:name ?n.}\n",
    "Q5": ("SELECT ?ns ?nx ?o WHERE {\n ?x rdf:type lubm:Professor; lubm:name ?nx;\n"
           " lubm:memberOf ?o.\n ?s lubm:advisor ?x; rdf:type lubm:Student;\n lubm:name ?ns. }\n"),
    "Q6": "SELECT ?n ?e WHERE { ?x rdf:type lubm:PostDoc;\n lubm:name ?n; lubm:emailAddress ?e.}\n",
    "Q7": "SELECT ?o ?n WHERE {\n ?x rdf:type lubm:Faculty; memberOf ?o; \n lubm:name ?n.}\n",
    "Q8": ("SELECT ?ns ?nx ?o WHERE { \n ?x rdf:type lubm:Faculty; lubm:name ?nx; \n"
           " lubm:memberOf ?o. \n ?s lubm:advisor ?x; rdf:type lubm:Student;\n lubm:name ?ns.}\n"),
}

SAMEAS_QUERIES = ("Q6", "Q7", "Q8")


def builtin_query_text(name: str, reasoning: str = "LM") -> str:
    pragmas = f"#pragma reasoning {reasoning}\n"
    if name in SAMEAS_QUERIES:
        pragmas += "#pragma sameas on\n"
    return pragmas + QUERY_HEADER + BUILTIN_BODIES[name]


def builtin_queries(reasoning: str = "LM") -> dict[str, QueryAst]:
    """Q1..Q8 parsed; Q6-Q8 carry the sameAs pragma."""
    return {n: parse_query(builtin_query_text(n, reasoning), name=n) for n in BUILTIN_BODIES}
