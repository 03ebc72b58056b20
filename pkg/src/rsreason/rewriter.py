"""Query rewriting into physical plans.

Four strategies share one plan shape (a union of conjunctive plans):

* ``rewrite_lm`` replaces inferable concepts and properties by a fresh
  variable restricted to the term's id interval. It always yields one disjunct.
* ``rewrite_classic`` expands each inferable constant into every term of its
  subtree and takes the cross product, one disjunct per combination.
* ``rewrite_sam`` is the classic expansion evaluated over SAM-encoded windows.
  For sameAs queries it also renames shared variables apart and joins each
  renamed occurrence back through owl:sameAs.
* ``rewrite_none`` only encodes constants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .encoding import (
    CONCEPT_TAG, LM, NONE, PROPERTY_TAG, SAM, DictionarySet, format_encoded_term,
)
from .rdf_model import RDF_TYPE, Iri
from .sparql import Bgp, Comparison, Filter, Group, QueryAst, TriplePattern, Union_, Var
from .tbox import UnknownTerm

CLASSIC = "CLASSIC"
ID_SPACE_END = 1 << 64


@dataclass(frozen=True)
class PlanPattern:
    """An encoded triple pattern. ``hub`` marks a sameAs-or-self link (s in S(o))."""
    s: object
    p: object
    o: object
    hub: bool = False

    def __iter__(self):
        return iter((self.s, self.p, self.o))

    def variables(self) -> list[Var]:
        return [x for x in (self.s, self.p, self.o) if isinstance(x, Var)]

    def constant_count(self) -> int:
        return sum(1 for x in (self.s, self.p, self.o) if not isinstance(x, Var))


@dataclass(frozen=True)
class RangeFilter:
    var: Var
    lb: int
    ub: int
    extra_intervals: tuple[tuple[int, int], ...] = ()

    def accepts(self, value) -> bool:
        # only known ids fall in a range; lexical passthrough terms never do
        if not isinstance(value, int):
            return False
        if self.lb <= value < self.ub:
            return True
        return any(lb <= value < ub for lb, ub in self.extra_intervals)


@dataclass(frozen=True)
class ConjunctivePlan:
    patterns: tuple[PlanPattern, ...]
    range_filters: tuple[RangeFilter, ...] = ()
    join_order: tuple[int, ...] = ()

    def variables(self) -> list[Var]:
        seen: dict[Var, None] = {}
        for p in self.patterns:
            for v in p.variables():
                seen.setdefault(v)
        return list(seen)


@dataclass(frozen=True)
class PhysicalQuery:
    disjuncts: tuple[ConjunctivePlan, ...]
    select_vars: tuple[Var, ...]
    answer_vars: tuple[Var, ...]
    strategy: str
    encoding: str  # which encode_batch mode the windows must use
    name: str = ""
    sameas: bool = False

    @property
    def has_hub(self) -> bool:
        return any(p.hub for d in self.disjuncts for p in d.patterns)


def is_fresh(v: Var) -> bool:
    """Variables introduced by rewriting carry a '.' the parser never produces."""
    return "." in v.name


# -- AST flattening ------------------------------------------------------

def _dnf(node) -> list[tuple[list[TriplePattern], list[Comparison]]]:
    if isinstance(node, Bgp):
        return [(list(node.patterns), [])]
    if isinstance(node, Union_):
        return _dnf(node.left) + _dnf(node.right)
    if isinstance(node, Filter):
        return [(pats, conds + list(node.condition)) for pats, conds in _dnf(node.body)]
    if isinstance(node, Group):
        out = [([], [])]
        for part in node.parts:
            out = [(p1 + p2, c1 + c2) for p1, c1 in out for p2, c2 in _dnf(part)]
        return out
    raise TypeError(f"unexpected AST node {node!r}")


_OPS = {
    ">=": lambda v: (v, ID_SPACE_END),
    ">": lambda v: (v + 1, ID_SPACE_END),
    "<=": lambda v: (0, v + 1),
    "<": lambda v: (0, v),
    "=": lambda v: (v, v + 1),
}


def _user_filters(conds: list[Comparison]) -> list[RangeFilter]:
    """Intersect the comparisons on each variable into one interval."""
    bounds: dict[Var, tuple[int, int]] = {}
    for c in conds:
        lo, hi = _OPS[c.op](c.value)
        old = bounds.get(c.var, (0, ID_SPACE_END))
        bounds[c.var] = (max(old[0], lo), min(old[1], hi))
    return [RangeFilter(v, lo, hi) for v, (lo, hi) in bounds.items()]


# -- constant handling ---------------------------------------------------

class _Fresh:
    def __init__(self):
        self.n = 0

    def __call__(self, kind: str) -> Var:
        v = Var(f".{kind}{self.n}")
        self.n += 1
        return v


def _check_known(d: DictionarySet, tp: TriplePattern):
    if isinstance(tp.p, Iri) and tp.p not in d.properties:
        raise UnknownTerm(tp.p)
    if tp.p == RDF_TYPE and isinstance(tp.o, Iri) and tp.o not in d.concepts:
        raise UnknownTerm(tp.o)


def _encode_so(x, d: DictionarySet, mode: str):
    return x if isinstance(x, Var) else d.encode_term(x, mode)


def _encode_p(x, d: DictionarySet):
    return x if isinstance(x, Var) else d.encode_term(x, LM, predicate=True)


def _tagged(tag: int, d, term) -> tuple:
    lb, ub, extras = d.bounds(term)
    return lb | tag, ub | tag, tuple((a | tag, b | tag) for a, b in extras)


def _lm_disjunct(patterns, conds, d: DictionarySet) -> ConjunctivePlan:
    fresh = _Fresh()
    out: list[PlanPattern] = []
    filters: list[RangeFilter] = []
    for tp in patterns:
        _check_known(d, tp)
        s, p, o = _encode_so(tp.s, d, LM), _encode_p(tp.p, d), _encode_so(tp.o, d, LM)
        if tp.p == RDF_TYPE and isinstance(tp.o, Iri) and d.concepts.has_descendants(tp.o):
            o = fresh("c")
            filters.append(RangeFilter(o, *_tagged(CONCEPT_TAG, d.concepts, tp.o)))
        if isinstance(tp.p, Iri) and d.properties.has_descendants(tp.p):
            p = fresh("p")
            filters.append(RangeFilter(p, *_tagged(PROPERTY_TAG, d.properties, tp.p)))
        out.append(PlanPattern(s, p, o))
    return _finish(out, filters + _user_filters(conds))


def _alternatives(tp: TriplePattern, d: DictionarySet) -> list[TriplePattern]:
    """Every pattern obtained by swapping inferable constants for their subtree members."""
    if isinstance(tp.p, Iri) and d.properties.has_descendants(tp.p):
        preds = sorted(d.property_forest.subtree(tp.p), key=d.properties.id_of)
    else:
        preds = [tp.p]
    if tp.p == RDF_TYPE and isinstance(tp.o, Iri) and d.concepts.has_descendants(tp.o):
        objs = sorted(d.class_forest.subtree(tp.o), key=d.concepts.id_of)
    else:
        objs = [tp.o]
    return [TriplePattern(tp.s, p, o) for p in preds for o in objs]


def _encode_plain(patterns, d: DictionarySet, mode: str) -> list[PlanPattern]:
    return [PlanPattern(_encode_so(tp.s, d, mode), _encode_p(tp.p, d), _encode_so(tp.o, d, mode))
            for tp in patterns]


def _finish(patterns: list[PlanPattern], filters: list[RangeFilter]) -> ConjunctivePlan:
    return ConjunctivePlan(tuple(patterns), tuple(filters), tuple(join_order(patterns)))


def _flatten(ast: QueryAst):
    # a filter on a variable its branch never binds can never hold
    out = []
    for pats, conds in _dnf(ast.body):
        bound = {v for tp in pats for v in tp.variables()}
        if all(c.var in bound for c in conds):
            out.append((pats, conds))
    return out


def _answer_vars(disjuncts) -> tuple[Var, ...]:
    seen: dict[Var, None] = {}
    for dj in disjuncts:
        for v in dj.variables():
            if not is_fresh(v):
                seen.setdefault(v)
    return tuple(seen)


def _build(ast, disjuncts, strategy, encoding) -> PhysicalQuery:
    answer = _answer_vars(disjuncts)
    for v in ast.select_vars:
        if v not in answer:
            answer = answer + (v,)
    return PhysicalQuery(tuple(disjuncts), ast.select_vars, answer, strategy, encoding,
                         ast.name, ast.sameas)


# -- strategies ----------------------------------------------------------

def rewrite_lm(ast: QueryAst, d: DictionarySet) -> PhysicalQuery:
    """Interval rewriting: one fresh variable plus one range filter per inferable constant."""
    disjuncts = [_lm_disjunct(p, c, d) for p, c in _flatten(ast)]
    return _build(ast, disjuncts, LM, LM)


def _expanded(ast: QueryAst, d: DictionarySet):
    for pats, conds in _flatten(ast):
        for tp in pats:
            _check_known(d, tp)
        for combo in itertools.product(*(_alternatives(tp, d) for tp in pats)):
            yield list(combo), conds


def rewrite_classic(ast: QueryAst, d: DictionarySet, encoding: str = LM) -> PhysicalQuery:
    """Union rewriting: the cross product of every inferable constant's subtree."""
    disjuncts = [_finish(_encode_plain(p, d, encoding), _user_filters(c))
                 for p, c in _expanded(ast, d)]
    return _build(ast, disjuncts, CLASSIC, encoding)


def _sameas_variant(patterns: list[TriplePattern], d: DictionarySet) -> list[PlanPattern]:
    """Rename every occurrence of a subject variable apart and link it to the original via sameAs.

    Constant clique members become a fresh variable linked the same way, so the
    plan reaches every member without enumerating the clique.
    """
    same = d.sameas_id
    subjects = {tp.s for tp in patterns if isinstance(tp.s, Var)}
    counters: dict[Var, int] = {}
    links: list[PlanPattern] = []
    fresh = _Fresh()

    def slot(x):
        if isinstance(x, Var):
            if x not in subjects:
                return x
            counters[x] = counters.get(x, 0) + 1
            v = Var(f"{x.name}.{counters[x]}")
            links.append(PlanPattern(v, same, x, hub=True))
            return v
        enc = d.encode_term(x, SAM)
        if x in d.cliques:
            v = fresh("k")
            links.append(PlanPattern(v, same, enc, hub=True))
            return v
        return enc

    body = []
    for tp in patterns:
        s = slot(tp.s)
        p = _encode_p(tp.p, d)
        o = slot(tp.o)
        body.append(PlanPattern(s, p, o))
    return body + links


def rewrite_sam(ast: QueryAst, d: DictionarySet) -> PhysicalQuery:
    """Classic expansion over SAM-encoded windows, with sameAs links when the query asks for them."""
    disjuncts = []
    for pats, conds in _expanded(ast, d):
        plan = _sameas_variant(pats, d) if ast.sameas else _encode_plain(pats, d, SAM)
        disjuncts.append(_finish(plan, _user_filters(conds)))
    return _build(ast, disjuncts, SAM, SAM)


def rewrite_none(ast: QueryAst, d: DictionarySet) -> PhysicalQuery:
    """Encode constants only; used on pre-materialized windows and for plain evaluation."""
    disjuncts = [_finish(_encode_plain(p, d, SAM), _user_filters(c)) for p, c in _flatten(ast)]
    return _build(ast, disjuncts, NONE, SAM)


def rewrite(ast: QueryAst, d: DictionarySet, mode: Optional[str] = None) -> PhysicalQuery:
    mode = (mode or ast.reasoning).upper()
    if mode == LM:
        return rewrite_lm(ast, d)
    if mode == SAM:
        return rewrite_sam(ast, d)
    if mode == CLASSIC:
        return rewrite_classic(ast, d)
    if mode == NONE:
        return rewrite_none(ast, d)
    raise ValueError(f"unknown reasoning mode {mode!r}")


# -- join order ----------------------------------------------------------

def join_order(patterns) -> list[int]:
    """Greedy static order: most constants first, then patterns sharing a bound variable.

    Hub links only become eligible once one of their variables is bound.
    Ties fall back to textual position.
    """
    remaining = list(range(len(patterns)))
    order: list[int] = []
    bound: set[Var] = set()

    def rank(i):
        return (-patterns[i].constant_count(), i)

    while remaining:
        connected = [i for i in remaining if bound & set(patterns[i].variables())]
        pool = connected or [i for i in remaining if not patterns[i].hub] or remaining
        best = min(pool, key=rank)
        order.append(best)
        remaining.remove(best)
        bound.update(patterns[best].variables())
    return order


# -- statistics and printing ----------------------------------------------

def plan_stats(pq: PhysicalQuery) -> dict[str, int]:
    """Join, union and range-filter counts.

    A plan with sameAs links counts one extra union: each link stands for the
    alternative "the entity itself or one of its sameAs peers".
    """
    joins = sum(max(len(dj.patterns) - 1, 0) for dj in pq.disjuncts)
    unions = max(len(pq.disjuncts) - 1, 0) + (1 if pq.has_hub else 0)
    filters = sum(len(dj.range_filters) for dj in pq.disjuncts)
    return {"joins": joins, "unions": unions, "rangeFilters": filters}


def _slot_text(x) -> str:
    return str(x) if isinstance(x, Var) else format_encoded_term(x)


def format_plan(pq: PhysicalQuery) -> str:
    """Stable text form: one block per disjunct, ids in decimal."""
    lines = [f"query {pq.name or '-'} strategy={pq.strategy} encoding={pq.encoding}",
             "select " + " ".join(str(v) for v in pq.select_vars)]
    for n, dj in enumerate(pq.disjuncts, start=1):
        lines.append(f"disjunct {n}")
        for i, p in enumerate(dj.patterns):
            kind = "link" if p.hub else "pattern"
            lines.append(f"  {kind} {i}: {_slot_text(p.s)} {_slot_text(p.p)} {_slot_text(p.o)}")
        for f in dj.range_filters:
            extra = "".join(f" [{a}, {b})" for a, b in f.extra_intervals)
            lines.append(f"  filter {f.var} in [{f.lb}, {f.ub}){extra}")
        lines.append("  order " + " ".join(str(i) for i in dj.join_order))
    s = plan_stats(pq)
    lines.append(f"stats joins={s['joins']} unions={s['unions']} rangeFilters={s['rangeFilters']}")
    return "\n".join(lines) + "\n"
