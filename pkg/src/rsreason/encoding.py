"""Dictionary set and partial encoding of triple batches.

Known terms become 64-bit integers whose top two bits say which dictionary
they came from::

    00  plain individual (ids start at 1)
    01  concept (normalized hierarchy id)
    10  property (normalized hierarchy id)
    11  sameAs clique: cliqueId << 20 in LM mode, (cliqueId << 20) | localId in SAM mode

Terms missing from every dictionary are passed through as the term itself.
``isinstance(x, int)`` is therefore the known/unknown test.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .rdf_model import (
    OWL_SAMEAS, RDF_TYPE, RDFS_DOMAIN, RDFS_RANGE, RDFS_SUBCLASSOF, RDFS_SUBPROPERTYOF,
    MalformedLine, Term, Triple, parse_ntriples, parse_term, serialize_triple,
)
from .sameas import CliqueDictionary, build_cliques, load_cliques, persist_cliques
from .tbox import (
    CONCEPT, PROPERTY, CorruptDictionary, Forest, HierarchyDictionary,
    build_dictionaries, classify, extract_tbox, load_dictionary, persist_dictionary,
)

TAG_SHIFT = 62
INDIVIDUAL_TAG = 0
CONCEPT_TAG = 1 << TAG_SHIFT
PROPERTY_TAG = 2 << TAG_SHIFT
CLIQUE_TAG = 3 << TAG_SHIFT
TAG_MASK = 3 << TAG_SHIFT
LOCAL_BITS = 20
LOCAL_MASK = (1 << LOCAL_BITS) - 1

LM = "LM"
SAM = "SAM"
NONE = "NONE"

EncodedTerm = Union[int, Term]
EncodedTriple = tuple  # (s, p, o) of EncodedTerm


class DanglingId(KeyError):
    pass


def tag_of(value: int) -> int:
    return value & TAG_MASK


def is_clique_id(value) -> bool:
    return isinstance(value, int) and value & TAG_MASK == CLIQUE_TAG


def lm_clique_id(clique_id: int) -> int:
    return CLIQUE_TAG | (clique_id << LOCAL_BITS)


def sam_member_id(clique_id: int, local_id: int) -> int:
    if not 1 <= local_id <= LOCAL_MASK:
        raise ValueError(f"local id {local_id} does not fit in {LOCAL_BITS} bits")
    return CLIQUE_TAG | (clique_id << LOCAL_BITS) | local_id


def _encoding_mode(mode: str) -> str:
    # NONE evaluates without reasoning, so members keep distinct ids
    return LM if mode == LM else SAM


_TBOX_PREDICATES = {RDFS_SUBCLASSOF, RDFS_SUBPROPERTYOF, RDFS_DOMAIN, RDFS_RANGE}


@dataclass
class DictionarySet:
    concepts: HierarchyDictionary
    properties: HierarchyDictionary
    individuals: dict[Term, int]
    cliques: CliqueDictionary
    class_forest: Forest
    property_forest: Forest
    reverse_individuals: dict[int, Term] = field(init=False)

    def __post_init__(self):
        self.reverse_individuals = {i: t for t, i in self.individuals.items()}
        self._so_maps: dict[str, dict] = {}
        self._p_map = {t: PROPERTY_TAG | e.normalized_id for t, e in self.properties.entries.items()}
        self.type_id = self._p_map[RDF_TYPE]
        self.sameas_id = self._p_map[OWL_SAMEAS]
        self.concept_ancestors = _ancestor_ids(self.class_forest, self.concepts, CONCEPT_TAG)
        self.property_ancestors = _ancestor_ids(self.property_forest, self.properties, PROPERTY_TAG)
        self._decode_cache: dict[int, Term] = {}

    # -- encoding ---------------------------------------------------------
    def term_map(self, mode: str) -> dict:
        """Subject/object lookup table for one encoding mode."""
        mode = _encoding_mode(mode)
        m = self._so_maps.get(mode)
        if m is None:
            m = dict(self.individuals)
            for t, (cid, lid) in self.cliques.member_to_id.items():
                m[t] = lm_clique_id(cid) if mode == LM else sam_member_id(cid, lid)
            for t, e in self.properties.entries.items():
                m[t] = PROPERTY_TAG | e.normalized_id
            for t, e in self.concepts.entries.items():
                m[t] = CONCEPT_TAG | e.normalized_id
            self._so_maps[mode] = m
        return m

    @property
    def predicate_map(self) -> dict:
        return self._p_map

    def encode_term(self, term: Term, mode: str, predicate: bool = False) -> EncodedTerm:
        table = self._p_map if predicate else self.term_map(mode)
        return table.get(term, term)

    def concept_id(self, term: Term) -> int:
        return CONCEPT_TAG | self.concepts.id_of(term)

    def property_id(self, term: Term) -> int:
        return PROPERTY_TAG | self.properties.id_of(term)

    def clique_member_ids(self, clique_id: int) -> list[int]:
        return [sam_member_id(clique_id, lid) for lid in range(1, self.cliques.size(clique_id) + 1)]

    # -- decoding ---------------------------------------------------------
    def decode(self, value: EncodedTerm) -> Term:
        if not isinstance(value, int):
            return value
        term = self._decode_cache.get(value)
        if term is not None:
            return term
        tag = value & TAG_MASK
        body = value & ~TAG_MASK
        try:
            if tag == CONCEPT_TAG:
                term = self.concepts.reverse[body]
            elif tag == PROPERTY_TAG:
                term = self.properties.reverse[body]
            elif tag == CLIQUE_TAG:
                members = self.cliques.clique_members[body >> LOCAL_BITS]
                local = body & LOCAL_MASK
                term = members[0] if local == 0 else members[local - 1]
            else:
                term = self.reverse_individuals[body]
        except (KeyError, IndexError):
            raise DanglingId(value) from None
        self._decode_cache[value] = term
        return term

    def expand(self, value: EncodedTerm) -> list[Term]:
        """All terms an id stands for: every member for an LM clique id, else the single term."""
        if is_clique_id(value) and value & LOCAL_MASK == 0:
            try:
                return self.cliques.clique_members[(value & ~TAG_MASK) >> LOCAL_BITS]
            except KeyError:
                raise DanglingId(value) from None
        return [self.decode(value)]

    # -- persistence ------------------------------------------------------
    def save(self, directory) -> None:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        persist_dictionary(self.concepts, out / "concepts.dict")
        persist_dictionary(self.properties, out / "properties.dict")
        persist_cliques(self.cliques, out / "cliques.tsv")
        with open(out / "individuals.tsv", "w", encoding="utf-8", newline="\n") as fh:
            for t, i in self.individuals.items():
                fh.write(f"{t}\t{i}\n")
        with open(out / "tbox.nt", "w", encoding="utf-8", newline="\n") as fh:
            for t in _forest_triples(self.class_forest, RDFS_SUBCLASSOF):
                fh.write(serialize_triple(t) + "\n")
            for t in _forest_triples(self.property_forest, RDFS_SUBPROPERTYOF):
                fh.write(serialize_triple(t) + "\n")


def _forest_triples(forest: Forest, predicate) -> list[Triple]:
    out = []
    for n in forest.nodes:
        for p in forest.parents.get(n, ()):
            out.append(Triple(n, predicate, p))
    return out


def _ancestor_ids(forest: Forest, d: HierarchyDictionary, tag: int) -> dict[int, tuple[int, ...]]:
    """Encoded id -> encoded ids of all strict ancestors, read from the declared closure."""
    return {
        tag | d.id_of(n): tuple(sorted(tag | d.id_of(a) for a in forest.ancestors[n]))
        for n in forest.nodes
    }


def _collect_individuals(static: Iterable[Triple], exclude) -> dict[Term, int]:
    found: dict[Term, int] = {}
    for t in static:
        if t.p in _TBOX_PREDICATES:
            continue
        if t.p == OWL_SAMEAS and t.s != t.o:
            continue
        positions = (t.s,) if t.p == RDF_TYPE else (t.s, t.o)
        for term in positions:
            if term not in exclude and term not in found:
                found[term] = len(found) + 1
    return found


def build_dictionary_set(ontology: Sequence[Triple], static: Sequence[Triple] = (),
                         max_bits: Optional[int] = 62) -> DictionarySet:
    """Encode the TBox, detect sameAs cliques and number the remaining static individuals."""
    g = extract_tbox(itertools.chain(ontology, static))
    concepts, properties, cf, pf = build_dictionaries(g, max_bits)
    cliques = build_cliques(g.sameas_assertions)
    exclude = set(concepts.entries) | set(properties.entries) | set(cliques.member_to_id)
    individuals = _collect_individuals(static, exclude)
    return DictionarySet(concepts, properties, individuals, cliques, cf, pf)


def load_dictionary_set(directory) -> DictionarySet:
    src = Path(directory)
    concepts = load_dictionary(src / "concepts.dict")
    properties = load_dictionary(src / "properties.dict")
    if concepts.kind != CONCEPT or properties.kind != PROPERTY:
        raise CorruptDictionary("dictionary kinds do not match their file names")
    cliques = load_cliques(src / "cliques.tsv")
    individuals: dict[Term, int] = {}
    for i, line in enumerate((src / "individuals.tsv").read_text(encoding="utf-8").splitlines(), 1):
        cols = line.split("\t")
        try:
            individuals[parse_term(cols[0])] = int(cols[1])
        except (ValueError, IndexError, MalformedLine) as exc:
            raise CorruptDictionary(f"individuals line {i}: {exc}") from None
    g = extract_tbox(parse_ntriples((src / "tbox.nt").read_text(encoding="utf-8")))
    cf, pf = classify(g, CONCEPT), classify(g, PROPERTY)
    for forest, d in ((cf, concepts), (pf, properties)):
        if set(forest.nodes) != set(d.entries):
            raise CorruptDictionary(f"{d.kind} dictionary and tbox.nt disagree on terms")
    return DictionarySet(concepts, properties, individuals, cliques, cf, pf)


def encode_batch(triples: Sequence[Triple], d: DictionarySet, mode: str,
                 workers: int = 1) -> list[EncodedTriple]:
    """Partially encode triples; unknown terms stay as themselves. Order is preserved."""
    so = d.term_map(mode)
    pm = d.predicate_map

    def run(chunk):
        get_so, get_p = so.get, pm.get
        return [(get_so(s, s), get_p(p, p), get_so(o, o)) for s, p, o in chunk]

    if workers <= 1 or len(triples) < 2 * workers:
        return run(triples)
    size = -(-len(triples) // workers)
    chunks = [triples[i:i + size] for i in range(0, len(triples), size)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return [t for part in pool.map(run, chunks) for t in part]


def encoded_materialization(d: DictionarySet) -> list[EncodedTriple]:
    """Encoded SAM sameAs triples: every ordered member pair per clique, reflexive included."""
    same = d.sameas_id
    out = []
    for cid in d.cliques.clique_members:
        ids = d.clique_member_ids(cid)
        out.extend((a, same, b) for a in ids for b in ids)
    return out


def decode_bindings(table, d: DictionarySet, expand: bool = False) -> list[tuple]:
    """Turn a binding table back into lexical rows over its projection.

    With ``expand`` every LM clique id fans out to all clique members before
    projection, so hidden clique-bound columns multiply the row count.
    Otherwise clique ids decode to their representative.
    """
    columns = list(table.columns)
    keep = [columns.index(v) for v in table.projection]
    hidden = [i for i in range(len(columns)) if i not in keep]
    out = []
    for row in table.rows:
        if expand:
            factor = 1
            for i in hidden:
                v = row[i]
                if v is not None and is_clique_id(v) and v & LOCAL_MASK == 0:
                    factor *= len(d.expand(v))
            options = [[None] if row[i] is None else d.expand(row[i]) for i in keep]
            for combo in itertools.product(*options):
                out.extend([combo] * factor)
        else:
            out.append(tuple(None if row[i] is None else d.decode(row[i]) for i in keep))
    return out


def format_encoded_term(value: EncodedTerm) -> str:
    return str(value) if isinstance(value, int) else f"?{value}"


def dump_encoded(triples: Iterable[EncodedTriple]) -> str:
    return "".join("\t".join(format_encoded_term(x) for x in t) + "\n" for t in triples)
