import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import TABLE_I, bfs_descendants, random_dag, ssn_iri, ssn_triples
from rsreason.rdf_model import OWL_THING, RDFS_SUBCLASSOF, RDFS_SUBPROPERTYOF, TOP_PROPERTY, Iri, Triple
from rsreason.tbox import (
    CONCEPT, PROPERTY, CapacityExceeded, CorruptDictionary, CyclicHierarchy, UnknownTerm, VersionMismatch,
    bounds, classify, encode_hierarchy, extract_tbox, format_dictionary, is_subsumed, load_dictionary,
    parse_dictionary, persist_dictionary,
)


def ssn_dict():
    return encode_hierarchy(classify(extract_tbox(ssn_triples()), CONCEPT))


def test_table_i_bit_exact():
    d = ssn_dict()
    assert d.total_bits == 10
    for name, (raw, normalized) in TABLE_I.items():
        e = d.entry(ssn_iri(name))
        assert format(e.raw_id, "b") == raw, name
        assert format(e.normalized_id, "b") == normalized, name


def test_ssn_bounds_and_subsumption():
    d = ssn_dict()
    assert bounds(d, ssn_iri("Event")) == (992, 1008, ())
    assert bounds(d, OWL_THING) == (512, 1024, ())
    assert d.id_of(ssn_iri("Action")) == 994
    assert is_subsumed(d, ssn_iri("Action"), ssn_iri("Event"))
    assert is_subsumed(d, ssn_iri("Event"), OWL_THING)
    assert not is_subsumed(d, ssn_iri("Input"), ssn_iri("Entity"))
    assert is_subsumed(d, ssn_iri("Event"), ssn_iri("Event"))
    with pytest.raises(UnknownTerm):
        bounds(d, Iri("urn:UnknownConcept"))


def test_extract_examples():
    e = [("Input", "Thing"), ("Event", "Entity"), ("Entity", "Thing")]
    g = extract_tbox([Triple(ssn_iri(a), RDFS_SUBCLASSOF, ssn_iri(b)) for a, b in e])
    assert len(g.class_edges) == 3
    assert len(g.declared_classes) == 4
    empty = extract_tbox([])
    assert empty.declared_classes == [OWL_THING]
    assert empty.declared_properties == [TOP_PROPERTY]


def test_cycle_rejected():
    a, b = Iri("urn:A"), Iri("urn:B")
    with pytest.raises(CyclicHierarchy) as e:
        extract_tbox([Triple(a, RDFS_SUBCLASSOF, b), Triple(b, RDFS_SUBCLASSOF, a)])
    assert set(e.value.cycle) == {a, b}


def test_self_loop_dropped():
    a = Iri("urn:A")
    g = extract_tbox([Triple(a, RDFS_SUBCLASSOF, a)])
    assert g.class_edges == []
    assert a in g.declared_classes


def test_classify_entity_children():
    f = classify(extract_tbox(ssn_triples()), CONCEPT)
    names = ["Abstract", "FeatureOfInterest", "InformationEntity", "Object", "Quality", "Event"]
    assert f.children[ssn_iri("Entity")] == [ssn_iri(n) for n in names]
    single = classify(extract_tbox([]), CONCEPT)
    assert single.nodes == [OWL_THING]


def test_single_node_hierarchy():
    d = encode_hierarchy(classify(extract_tbox([]), CONCEPT))
    assert d.total_bits == 1
    assert bounds(d, OWL_THING) == (1, 2, ())


def test_properties_reserve_type_and_sameas():
    from rsreason.rdf_model import OWL_SAMEAS, RDF_TYPE
    f = classify(extract_tbox([]), PROPERTY)
    assert f.children[TOP_PROPERTY] == [RDF_TYPE, OWL_SAMEAS]


def test_diamond():
    a, b, c, dd = (Iri(f"urn:{x}") for x in "ABCD")
    g = extract_tbox([Triple(b, RDFS_SUBCLASSOF, a), Triple(c, RDFS_SUBCLASSOF, a),
                      Triple(dd, RDFS_SUBCLASSOF, b), Triple(dd, RDFS_SUBCLASSOF, c)])
    f = classify(g, CONCEPT)
    assert f.primary[dd] == b  # equal depth, lexicographic tie-break
    assert f.secondary_parents(dd) == [c]
    d = encode_hierarchy(f)
    assert is_subsumed(d, dd, b) and is_subsumed(d, dd, c) and is_subsumed(d, dd, a)
    assert d.entry(c).extra_intervals == ((d.entry(dd).lower_bound, d.entry(dd).upper_bound),)
    assert not is_subsumed(d, b, c)


def test_deeper_parent_is_primary():
    a, b, c, x = (Iri(f"urn:{n}") for n in "ABCX")
    g = extract_tbox([Triple(b, RDFS_SUBCLASSOF, a), Triple(x, RDFS_SUBCLASSOF, c),
                      Triple(x, RDFS_SUBCLASSOF, b)])
    f = classify(g, CONCEPT)
    assert f.primary[x] == b


def test_capacity_exceeded():
    chain = [Iri(f"urn:c{i}") for i in range(40)]
    triples = [Triple(chain[i + 1], RDFS_SUBCLASSOF, chain[i]) for i in range(39)]
    # each level has three children so every step costs two bits
    for i in range(39):
        triples += [Triple(Iri(f"urn:s{i}_{j}"), RDFS_SUBCLASSOF, chain[i]) for j in range(2)]
    f = classify(extract_tbox(triples), CONCEPT)
    with pytest.raises(CapacityExceeded):
        encode_hierarchy(f)
    assert encode_hierarchy(f, max_bits=None).total_bits > 62


# -- invariants over random hierarchies -------------------------------------

def _build(seed, n, max_parents):
    rng = random.Random(seed)
    nodes, parents, triples = random_dag(rng, n, max_parents)
    f = classify(extract_tbox(triples), CONCEPT)
    return nodes, parents, f, encode_hierarchy(f, max_bits=None)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 150), st.integers(1, 3))
def test_interval_soundness_and_completeness(seed, n, k):
    nodes, parents, _, d = _build(seed, n, k)
    for c in range(n):
        desc = bfs_descendants(parents, n, c)
        for x in range(n):
            assert is_subsumed(d, nodes[x], nodes[c]) == (x in desc)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 200), st.integers(1, 3))
def test_two_shift_prefix_and_disjointness(seed, n, k):
    _, _, f, d = _build(seed, n, k)
    T = d.total_bits
    assert len({e.normalized_id for e in d.entries.values()}) == len(d.entries)
    for term, e in d.entries.items():
        assert e.lower_bound == e.normalized_id == e.raw_id << (T - e.bit_length)
        assert e.upper_bound == (e.raw_id + 1) << (T - e.bit_length)
        assert e.lower_bound < e.upper_bound
        assert d.reverse[e.normalized_id] == term
        parent = f.primary.get(term)
        if parent is not None:
            pe = d.entry(parent)
            assert e.bit_length > pe.bit_length
            assert e.raw_id >> (e.bit_length - pe.bit_length) == pe.raw_id
            assert pe.lower_bound <= e.normalized_id < pe.upper_bound
    for parent, kids in f.children.items():
        spans = sorted((d.entry(k).lower_bound, d.entry(k).upper_bound) for k in kids)
        for (_, ub), (lb, _) in zip(spans, spans[1:]):
            assert ub <= lb


def test_encoding_is_deterministic():
    a = format_dictionary(_build(5, 300, 3)[3])
    b = format_dictionary(_build(5, 300, 3)[3])
    assert a == b


# -- persistence -------------------------------------------------------------

def test_persist_round_trip(tmp_path):
    d = ssn_dict()
    persist_dictionary(d, tmp_path / "c.dict")
    text = (tmp_path / "c.dict").read_text()
    assert text.startswith("litemat-dict v1 concept T=10\n")
    assert load_dictionary(tmp_path / "c.dict") == d


def test_persist_random_hierarchy(tmp_path):
    gen_rng = random.Random(3)
    nodes, _, triples = random_dag(gen_rng, 10_000, 1)
    d = encode_hierarchy(classify(extract_tbox(triples), CONCEPT), max_bits=None)
    persist_dictionary(d, tmp_path / "big.dict")
    back = load_dictionary(tmp_path / "big.dict")
    for t in nodes:
        assert bounds(back, t) == bounds(d, t)


def test_truncated_file_is_corrupt(tmp_path):
    text = format_dictionary(ssn_dict())
    lines = text.splitlines(keepends=True)
    for cut in (len(lines) - 1, len(lines) // 2, 1):
        with pytest.raises(CorruptDictionary):
            parse_dictionary("".join(lines[:cut]))
    with pytest.raises(CorruptDictionary):
        parse_dictionary(text[: len(text) // 2])


def test_version_and_consistency_checks():
    text = format_dictionary(ssn_dict())
    with pytest.raises(VersionMismatch):
        parse_dictionary(text.replace("litemat-dict v1", "litemat-dict v9", 1))
    lines = text.splitlines()
    cols = lines[2].split("\t")
    cols[3] = str(int(cols[3]) + 1)
    lines[2] = "\t".join(cols)
    with pytest.raises(CorruptDictionary):
        parse_dictionary("\n".join(lines) + "\n")


def test_property_hierarchy_uses_subpropertyof():
    p, q = Iri("urn:p"), Iri("urn:q")
    g = extract_tbox([Triple(q, RDFS_SUBPROPERTYOF, p)])
    f = classify(g, PROPERTY)
    d = encode_hierarchy(f)
    assert is_subsumed(d, q, p) and is_subsumed(d, p, TOP_PROPERTY)
