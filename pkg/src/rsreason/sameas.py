"""owl:sameAs cliques: connected components with (cliqueId, localId) identifiers."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .rdf_model import OWL_SAMEAS, MalformedLine, Term, parse_term
from .tbox import CorruptDictionary


class _UnionFind:
    def __init__(self):
        self.parent: list[int] = []
        self.index: dict[Term, int] = {}
        self.items: list[Term] = []

    def add(self, item: Term) -> int:
        i = self.index.get(item)
        if i is None:
            i = len(self.items)
            self.index[item] = i
            self.items.append(item)
            self.parent.append(i)
        return i

    def find(self, i: int) -> int:
        parent = self.parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                ra, rb = rb, ra
            self.parent[ra] = rb


@dataclass
class CliqueDictionary:
    member_to_id: dict[Term, tuple[int, int]] = field(default_factory=dict)
    clique_members: dict[int, list[Term]] = field(default_factory=dict)

    @property
    def representative(self) -> dict[int, Term]:
        return {c: members[0] for c, members in self.clique_members.items()}

    def representative_of(self, clique_id: int) -> Term:
        return self.clique_members[clique_id][0]

    def lookup(self, term: Term) -> Optional[tuple[int, int]]:
        return self.member_to_id.get(term)

    def members(self, clique_id: int) -> list[Term]:
        return self.clique_members[clique_id]

    def size(self, clique_id: int) -> int:
        return len(self.clique_members[clique_id])

    def __len__(self) -> int:
        return len(self.clique_members)

    def __contains__(self, term) -> bool:
        return term in self.member_to_id


def _from_groups(groups: Iterable[list[Term]]) -> CliqueDictionary:
    ordered = sorted((sorted(g, key=str) for g in groups if len(g) >= 2), key=lambda g: str(g[0]))
    d = CliqueDictionary()
    for cid, members in enumerate(ordered, start=1):
        d.clique_members[cid] = members
        for lid, m in enumerate(members, start=1):
            d.member_to_id[m] = (cid, lid)
    return d


def build_cliques(pairs: Iterable[tuple[Term, Term]]) -> CliqueDictionary:
    """Connected components of the undirected sameAs graph; self-loops never form a clique.

    Clique ids follow the ascending lexicographic minimum member, local ids the
    ascending member order, so any permutation of the input gives the same ids.
    """
    uf = _UnionFind()
    for a, b in pairs:
        if a == b:
            continue
        uf.union(uf.add(a), uf.add(b))
    groups: dict[int, list[Term]] = {}
    for i, item in enumerate(uf.items):
        groups.setdefault(uf.find(i), []).append(item)
    return _from_groups(groups.values())


def lookup(d: CliqueDictionary, term: Term) -> Optional[tuple[int, int]]:
    return d.lookup(term)


def iter_materialized_sameas(d: CliqueDictionary) -> Iterator[tuple[Term, Term, Term]]:
    """All k*k ordered sameAs pairs per clique, reflexive pairs included."""
    for members in d.clique_members.values():
        for a in members:
            for b in members:
                yield (a, OWL_SAMEAS, b)


def materialize_sameas(d: CliqueDictionary) -> list[tuple[Term, Term, Term]]:
    return list(iter_materialized_sameas(d))


def materialized_count(d: CliqueDictionary) -> int:
    return sum(len(m) ** 2 for m in d.clique_members.values())


def format_cliques(d: CliqueDictionary) -> str:
    lines = []
    for cid in sorted(d.clique_members):
        for lid, m in enumerate(d.clique_members[cid], start=1):
            lines.append(f"{m}\t{cid}\t{lid}")
    return "".join(line + "\n" for line in lines)


def persist_cliques(d: CliqueDictionary, path) -> None:
    Path(path).write_text(format_cliques(d), encoding="utf-8")


def parse_cliques(text: str) -> CliqueDictionary:
    d = CliqueDictionary()
    for i, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise CorruptDictionary(f"clique line {i}: expected 3 columns")
        try:
            term = parse_term(cols[0])
            cid, lid = int(cols[1]), int(cols[2])
        except (ValueError, MalformedLine) as exc:
            raise CorruptDictionary(f"clique line {i}: {exc}") from None
        members = d.clique_members.setdefault(cid, [])
        if lid != len(members) + 1 or term in d.member_to_id:
            raise CorruptDictionary(f"clique line {i}: local ids must be contiguous and unique")
        members.append(term)
        d.member_to_id[term] = (cid, lid)
    if any(len(m) < 2 for m in d.clique_members.values()):
        raise CorruptDictionary("clique with fewer than two members")
    return d


def load_cliques(path) -> CliqueDictionary:
    return parse_cliques(Path(path).read_text(encoding="utf-8"))
