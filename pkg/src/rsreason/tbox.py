"""Prefix-interval encoding of concept and property hierarchies.

Every hierarchy term gets a variable-length binary prefix code: the root code
is ``1`` and a child's code is its primary parent's code followed by a local
suffix.  Codes are left-aligned to the same width ``T`` so the whole subtree
of a term occupies one half-open integer interval ``[LB, UB)``::

    LB = raw << (T - bits)
    UB = (raw + 1) << (T - bits)

Terms with several parents are placed under one primary parent; every other
ancestor that does not already cover them gets their interval as an extra
interval.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .rdf_model import (
    OWL_CLASS, OWL_DATATYPE_PROPERTY, OWL_OBJECT_PROPERTY, OWL_SAMEAS, OWL_THING,
    RDF_PROPERTY, RDF_TYPE, RDFS_CLASS, RDFS_DOMAIN, RDFS_RANGE, RDFS_SUBCLASSOF,
    RDFS_SUBPROPERTYOF, TOP_PROPERTY, MalformedLine, Term, Triple, parse_term,
)

CONCEPT = "concept"
PROPERTY = "property"
DEFAULT_MAX_BITS = 62
FORMAT_VERSION = "v1"

_CLASS_TYPES = {OWL_CLASS, RDFS_CLASS}
_PROPERTY_TYPES = {RDF_PROPERTY, OWL_OBJECT_PROPERTY, OWL_DATATYPE_PROPERTY}


class CyclicHierarchy(ValueError):
    def __init__(self, cycle: list[Term]):
        super().__init__("subsumption cycle: " + " -> ".join(str(t) for t in cycle))
        self.cycle = cycle


class CapacityExceeded(ValueError):
    pass


class UnknownTerm(KeyError):
    def __init__(self, term):
        super().__init__(str(term))
        self.term = term


class VersionMismatch(ValueError):
    pass


class CorruptDictionary(ValueError):
    pass


def _ordered_add(d: dict, key):
    if key not in d:
        d[key] = None


@dataclass
class OntologyGraph:
    """Hierarchy edges pulled out of an ontology.

    Edge and declaration containers keep first-appearance order; sibling
    codes are handed out in that order.
    """
    class_edges: list[tuple[Term, Term]] = field(default_factory=list)
    property_edges: list[tuple[Term, Term]] = field(default_factory=list)
    sameas_assertions: list[tuple[Term, Term]] = field(default_factory=list)
    declared_classes: list[Term] = field(default_factory=list)
    declared_properties: list[Term] = field(default_factory=list)
    domain_edges: list[tuple[Term, Term]] = field(default_factory=list)
    range_edges: list[tuple[Term, Term]] = field(default_factory=list)

    def edges(self, kind: str) -> list[tuple[Term, Term]]:
        return self.class_edges if kind == CONCEPT else self.property_edges

    def declared(self, kind: str) -> list[Term]:
        return self.declared_classes if kind == CONCEPT else self.declared_properties

    def tbox_triples(self) -> list[Triple]:
        out = [Triple(a, RDFS_SUBCLASSOF, b) for a, b in self.class_edges]
        out += [Triple(a, RDFS_SUBPROPERTYOF, b) for a, b in self.property_edges]
        return out


def extract_tbox(triples: Iterable[Triple]) -> OntologyGraph:
    classes: dict = {OWL_THING: None}
    props: dict = {TOP_PROPERTY: None}
    cedges: dict = {}
    pedges: dict = {}
    sameas: dict = {}
    domains: dict = {}
    ranges: dict = {}
    for t in triples:
        p = t.p
        if p == RDFS_SUBCLASSOF:
            _ordered_add(classes, t.s)
            _ordered_add(classes, t.o)
            if t.s != t.o:
                _ordered_add(cedges, (t.s, t.o))
        elif p == RDFS_SUBPROPERTYOF:
            _ordered_add(props, t.s)
            _ordered_add(props, t.o)
            if t.s != t.o:
                _ordered_add(pedges, (t.s, t.o))
        elif p == OWL_SAMEAS:
            _ordered_add(sameas, (t.s, t.o))
        elif p == RDF_TYPE and t.o in _CLASS_TYPES:
            _ordered_add(classes, t.s)
        elif p == RDF_TYPE and t.o in _PROPERTY_TYPES:
            _ordered_add(props, t.s)
        elif p == RDFS_DOMAIN:
            _ordered_add(domains, (t.s, t.o))
        elif p == RDFS_RANGE:
            _ordered_add(ranges, (t.s, t.o))
    g = OntologyGraph(
        class_edges=list(cedges), property_edges=list(pedges),
        sameas_assertions=list(sameas), declared_classes=list(classes),
        declared_properties=list(props), domain_edges=list(domains),
        range_edges=list(ranges),
    )
    for kind in (CONCEPT, PROPERTY):
        _check_acyclic(g.declared(kind), g.edges(kind))
    return g


def _check_acyclic(nodes: list[Term], edges: list[tuple[Term, Term]]):
    parents: dict[Term, list[Term]] = {}
    for sub, sup in edges:
        parents.setdefault(sub, []).append(sup)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = dict.fromkeys(nodes, WHITE)
    for start in nodes:
        if color[start] != WHITE:
            continue
        path = [start]
        stack = [iter(parents.get(start, ()))]
        color[start] = GRAY
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                color[path.pop()] = BLACK
                stack.pop()
            elif color[nxt] == GRAY:
                raise CyclicHierarchy(path[path.index(nxt):])
            elif color[nxt] == WHITE:
                color[nxt] = GRAY
                path.append(nxt)
                stack.append(iter(parents.get(nxt, ())))


@dataclass
class Forest:
    """A classified hierarchy: one primary parent per node plus the full closure."""
    kind: str
    root: Term
    nodes: list[Term]
    parents: dict[Term, list[Term]]
    primary: dict[Term, Term]
    children: dict[Term, list[Term]]
    ancestors: dict[Term, frozenset]

    def secondary_parents(self, node: Term) -> list[Term]:
        return [p for p in self.parents.get(node, ()) if p != self.primary.get(node)]

    def subtree(self, node: Term) -> set[Term]:
        """All terms subsumed by ``node`` (itself included), read off the closure."""
        return {n for n in self.nodes if n == node or node in self.ancestors[n]}


def _term_key(t: Term) -> str:
    return str(t)


def classify(g: OntologyGraph, kind: str) -> Forest:
    root = OWL_THING if kind == CONCEPT else TOP_PROPERTY
    nodes = list(g.declared(kind))
    if root not in nodes:
        nodes.insert(0, root)
    parents: dict[Term, list[Term]] = {}
    for sub, sup in g.edges(kind):
        parents.setdefault(sub, []).append(sup)
    if kind == PROPERTY:
        # reserved entries the rewriter and SAM rely on
        for reserved in (RDF_TYPE, OWL_SAMEAS):
            if reserved not in parents:
                if reserved not in nodes:
                    nodes.append(reserved)
    if parents.get(root):
        raise CyclicHierarchy([root, parents[root][0]])
    for n in nodes:
        if n != root and not parents.get(n):
            parents[n] = [root]

    # ancestors in topological order (parents first)
    ancestors: dict[Term, frozenset] = {}
    order = _topological(nodes, parents)
    for n in order:
        acc = set()
        for p in parents.get(n, ()):
            acc.add(p)
            acc |= ancestors[p]
        ancestors[n] = frozenset(acc)

    primary: dict[Term, Term] = {}
    for n in nodes:
        ps = parents.get(n)
        if ps:
            primary[n] = min(ps, key=lambda p: (-len(ancestors[p]), _term_key(p)))
    children: dict[Term, list[Term]] = {n: [] for n in nodes}
    for n in nodes:
        if n in primary:
            children[primary[n]].append(n)
    return Forest(kind, root, nodes, parents, primary, children, ancestors)


def _topological(nodes: list[Term], parents: dict[Term, list[Term]]) -> list[Term]:
    indeg = {n: len(parents.get(n, ())) for n in nodes}
    kids: dict[Term, list[Term]] = {n: [] for n in nodes}
    for n in nodes:
        for p in parents.get(n, ()):
            kids[p].append(n)
    queue = deque(n for n in nodes if indeg[n] == 0)
    out = []
    while queue:
        n = queue.popleft()
        out.append(n)
        for k in kids[n]:
            indeg[k] -= 1
            if indeg[k] == 0:
                queue.append(k)
    if len(out) != len(nodes):
        left = [n for n in nodes if indeg[n] > 0]
        raise CyclicHierarchy(left)
    return out


@dataclass(frozen=True)
class EncodedEntry:
    raw_id: int
    bit_length: int
    normalized_id: int
    lower_bound: int
    upper_bound: int
    extra_intervals: tuple[tuple[int, int], ...] = ()

    def contains(self, value: int) -> bool:
        if self.lower_bound <= value < self.upper_bound:
            return True
        return any(lb <= value < ub for lb, ub in self.extra_intervals)


class HierarchyDictionary:
    """Term <-> normalized id map for one hierarchy, immutable after construction."""

    def __init__(self, kind: str, total_bits: int, entries: dict[Term, EncodedEntry]):
        self.kind = kind
        self.total_bits = total_bits
        self.entries = entries
        self.reverse = {e.normalized_id: t for t, e in entries.items()}
        if len(self.reverse) != len(entries):
            raise CorruptDictionary("duplicate normalized ids")
        self._sorted_ids = sorted(self.reverse)

    def __contains__(self, term) -> bool:
        return term in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return (isinstance(other, HierarchyDictionary) and self.kind == other.kind
                and self.total_bits == other.total_bits and self.entries == other.entries)

    def entry(self, term: Term) -> EncodedEntry:
        try:
            return self.entries[term]
        except KeyError:
            raise UnknownTerm(term) from None

    def id_of(self, term: Term) -> int:
        return self.entry(term).normalized_id

    def bounds(self, term: Term) -> tuple[int, int, tuple[tuple[int, int], ...]]:
        e = self.entry(term)
        return e.lower_bound, e.upper_bound, e.extra_intervals

    def is_subsumed(self, sub: Term, sup: Term) -> bool:
        return self.entry(sup).contains(self.entry(sub).normalized_id)

    def ids_in(self, lb: int, ub: int) -> list[int]:
        ids = self._sorted_ids
        return ids[bisect.bisect_left(ids, lb):bisect.bisect_left(ids, ub)]

    def descendants(self, term: Term) -> list[Term]:
        """Every term whose id falls in the term's intervals, in id order (itself included)."""
        e = self.entry(term)
        found = self.ids_in(e.lower_bound, e.upper_bound)
        for lb, ub in e.extra_intervals:
            found = found + self.ids_in(lb, ub)
        return [self.reverse[i] for i in sorted(found)]

    def has_descendants(self, term: Term) -> bool:
        e = self.entry(term)
        if e.extra_intervals:
            return True
        return len(self.ids_in(e.lower_bound, e.upper_bound)) > 1

    def rows(self) -> list[tuple[Term, EncodedEntry]]:
        return [(self.reverse[i], self.entries[self.reverse[i]]) for i in self._sorted_ids]


def bounds(d: HierarchyDictionary, term: Term):
    return d.bounds(term)


def is_subsumed(d: HierarchyDictionary, sub: Term, sup: Term) -> bool:
    return d.is_subsumed(sub, sup)


def encode_hierarchy(forest: Forest, max_bits: Optional[int] = DEFAULT_MAX_BITS) -> HierarchyDictionary:
    raw = {forest.root: (1, 1)}
    queue = deque([forest.root])
    while queue:
        n = queue.popleft()
        kids = forest.children[n]
        if not kids:
            continue
        width = len(kids).bit_length()  # ceil(log2(c + 1)); suffix 0 stays free
        code, bits = raw[n]
        for i, k in enumerate(kids, start=1):
            raw[k] = ((code << width) | i, bits + width)
            queue.append(k)
    total = max(bits for _, bits in raw.values())
    if max_bits is not None and total > max_bits:
        raise CapacityExceeded(f"{forest.kind} hierarchy needs {total} bits, limit is {max_bits}")

    base = {}
    for n, (code, bits) in raw.items():
        shift = total - bits
        base[n] = (code << shift, (code + 1) << shift)

    # Ancestors whose primary interval misses a descendant get that descendant's
    # interval. Only the topmost missed descendants matter (everything below them
    # nests inside), and those are exactly the ones entered through a secondary
    # edge n -> p: every ancestor of p that is not an ancestor of n's primary
    # parent needs base[n]. Index sets keep this cheap on wide DAGs.
    index = {n: i for i, n in enumerate(forest.nodes)}
    up: list[frozenset] = [frozenset()] * len(forest.nodes)  # ancestors plus self, as indices
    # a parent always has fewer ancestors than its child, so this order puts parents first
    for n in sorted(forest.nodes, key=lambda x: len(forest.ancestors[x])):
        i = index[n]
        acc = {i}
        for p in forest.parents.get(n, ()):
            acc |= up[index[p]]
        up[i] = frozenset(acc)
    pending: dict[int, list[tuple[int, int]]] = {}
    for n in forest.nodes:
        q = forest.primary.get(n)
        if q is None:
            continue
        covered = up[index[q]]
        for p in forest.parents.get(n, ()):
            if p == q:
                continue
            for a in up[index[p]] - covered:
                pending.setdefault(a, []).append(base[n])

    entries = {}
    for n in forest.nodes:
        code, bits = raw[n]
        lb, ub = base[n]
        extras = _merge_intervals(pending.get(index[n], ()))
        entries[n] = EncodedEntry(code, bits, lb, lb, ub, extras)
    return HierarchyDictionary(forest.kind, total, entries)


def _merge_intervals(intervals) -> tuple[tuple[int, int], ...]:
    merged: list[list[int]] = []
    for lb, ub in sorted(intervals):
        if merged and lb <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], ub)
        else:
            merged.append([lb, ub])
    return tuple((lb, ub) for lb, ub in merged)


def build_dictionaries(g: OntologyGraph, max_bits: Optional[int] = DEFAULT_MAX_BITS):
    """Concept and property dictionaries plus their forests (kept for closure lookups)."""
    cf = classify(g, CONCEPT)
    pf = classify(g, PROPERTY)
    return encode_hierarchy(cf, max_bits), encode_hierarchy(pf, max_bits), cf, pf


# -- persistence -------------------------------------------------------------

def format_dictionary(d: HierarchyDictionary) -> str:
    lines = [f"litemat-dict {FORMAT_VERSION} {d.kind} T={d.total_bits}"]
    for term, e in d.rows():
        extras = ";".join(f"{lb}:{ub}" for lb, ub in e.extra_intervals)
        lines.append("\t".join([
            str(term), str(e.raw_id), str(e.bit_length), str(e.normalized_id),
            str(e.lower_bound), str(e.upper_bound), extras,
        ]))
    lines.append(f"#end rows={len(d)}")
    return "\n".join(lines) + "\n"


def persist_dictionary(d: HierarchyDictionary, path) -> None:
    Path(path).write_text(format_dictionary(d), encoding="utf-8")


def parse_dictionary(text: str) -> HierarchyDictionary:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptDictionary("empty dictionary file")
    head = lines[0].split(" ")
    if len(head) != 4 or head[0] != "litemat-dict" or not head[3].startswith("T="):
        raise CorruptDictionary(f"bad header {lines[0]!r}")
    if head[1] != FORMAT_VERSION:
        raise VersionMismatch(f"expected {FORMAT_VERSION}, found {head[1]}")
    kind = head[2]
    if kind not in (CONCEPT, PROPERTY):
        raise CorruptDictionary(f"unknown dictionary kind {kind!r}")
    try:
        total = int(head[3][2:])
    except ValueError:
        raise CorruptDictionary("bad total width") from None
    footer = lines[-1]
    if len(lines) < 2 or not footer.startswith("#end rows="):
        raise CorruptDictionary("missing end marker (truncated file?)")
    body = lines[1:-1]
    if footer != f"#end rows={len(body)}":
        raise CorruptDictionary("row count does not match end marker")

    entries = {}
    for i, line in enumerate(body, start=2):
        cols = line.split("\t")
        if len(cols) != 7:
            raise CorruptDictionary(f"line {i}: expected 7 columns")
        try:
            term = parse_term(cols[0])
            raw, bits, nid, lb, ub = (int(c) for c in cols[1:6])
            extras = tuple(
                tuple(int(x) for x in part.split(":")) for part in cols[6].split(";") if part
            )
        except (ValueError, MalformedLine) as exc:
            raise CorruptDictionary(f"line {i}: {exc}") from None
        shift = total - bits
        if shift < 0 or nid != raw << shift or lb != nid or ub != (raw + 1) << shift:
            raise CorruptDictionary(f"line {i}: bounds inconsistent with raw id")
        if any(len(x) != 2 for x in extras):
            raise CorruptDictionary(f"line {i}: bad extra interval")
        if term in entries:
            raise CorruptDictionary(f"line {i}: duplicate term")
        entries[term] = EncodedEntry(raw, bits, nid, lb, ub, extras)
    return HierarchyDictionary(kind, total, entries)


def load_dictionary(path) -> HierarchyDictionary:
    return parse_dictionary(Path(path).read_text(encoding="utf-8"))
