import json
from collections import Counter

import pytest

from rsreason.bench import (
    BenchmarkSpec, GeneratorConfig, InvalidConfig, generate, generate_dataset, ground_truth, lexical_closure,
    load_dataset, mini_ontology, naive_match, run_benchmark,
)
from rsreason.encoding import build_dictionary_set
from rsreason.rdf_model import LUBM, OWL_SAMEAS, RDF_TYPE, Iri, Literal
from rsreason.sameas import build_cliques
from rsreason.sparql import CountTumbling, TriplePattern, Var, builtin_queries
from rsreason.tbox import CONCEPT, classify, extract_tbox


def test_cliques_recovered_exactly(small_dataset):
    cd = build_cliques((t.s, t.o) for t in small_dataset.static if t.p == OWL_SAMEAS)
    assert len(cd) == 20
    assert {frozenset(m) for m in cd.clique_members.values()} == {frozenset(c) for c in small_dataset.cliques}


def test_stream_length_and_clique_entities(small_dataset):
    assert len(small_dataset.stream) == 6000
    aliases = {a for c in small_dataset.cliques for a in c}
    clique_facts = [t for t in small_dataset.stream if t.s in aliases]
    assert len(clique_facts) == 3 * 20
    assert not any(t.o in aliases for t in small_dataset.stream)


def test_every_entity_has_one_type(small_dataset):
    aliases = {a for c in small_dataset.cliques for a in c}
    types = Counter(t.s for t in small_dataset.stream if t.p == RDF_TYPE and t.s not in aliases)
    assert set(types.values()) == {1}


def test_mini_ontology_shape():
    f = classify(extract_tbox(mini_ontology()), CONCEPT)
    prof = Iri(LUBM + "Professor")
    assert f.children[prof] == [Iri(LUBM + "FullProfessor"), Iri(LUBM + "AssistantProfessor")]


@pytest.mark.parametrize("kwargs", [
    {"universities": 0}, {"num_cliques": -1}, {"individuals_per_clique": 1}, {"stream_triples": -5},
    {"seed": -1},
])
def test_invalid_config(kwargs):
    with pytest.raises(InvalidConfig):
        generate(GeneratorConfig(**kwargs))


def test_no_cliques():
    ds = generate(GeneratorConfig(num_cliques=0, stream_triples=500))
    assert not any(t.p == OWL_SAMEAS for t in ds.static) and ds.cliques == []
    assert len(ds.stream) == 500


def test_same_seed_same_bytes(tmp_path):
    cfg = GeneratorConfig(num_cliques=5, individuals_per_clique=3, seed=4, stream_triples=3000)
    a = generate_dataset(cfg, tmp_path / "a")
    b = generate_dataset(cfg, tmp_path / "b")
    for name in ("static.nt", "stream.nt", "truth.json", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a.stream.read_bytes() != generate_dataset(GeneratorConfig(num_cliques=5, individuals_per_clique=3,
                                                                     seed=5, stream_triples=3000),
                                                     tmp_path / "c").stream.read_bytes()


def test_load_dataset_round_trip(tmp_path):
    cfg = GeneratorConfig(num_cliques=4, individuals_per_clique=3, seed=9, stream_triples=1000)
    generate_dataset(cfg, tmp_path)
    back = load_dataset(tmp_path)
    ds = generate(cfg)
    assert back.static == ds.static and back.stream == ds.stream and back.config == cfg
    assert {frozenset(c) for c in back.cliques} == {frozenset(c) for c in ds.cliques}


def test_naive_match_is_a_bag():
    a, p = Iri("urn:a"), Iri("urn:p")
    triples = {(a, p, Literal("1")), (a, p, Literal("2"))}
    rows = naive_match([TriplePattern(Var("x"), p, Var("y"))], [Var("x")], triples)
    assert rows == [(a,), (a,)]


def test_lexical_closure_replicates_over_cliques():
    a, b, name = Iri("urn:a"), Iri("urn:b"), Iri(LUBM + "name")
    from rsreason.rdf_model import Triple
    closed = lexical_closure([Triple(a, name, Literal("n"))], [[a, b]])
    assert (b, name, Literal("n")) in closed


def test_truth_agrees_with_engine(small_dataset, small_dicts):
    truth = ground_truth(small_dataset, 2000)
    assert set(truth) == set(builtin_queries())
    assert all(truth[q] for q in ("Q1", "Q3", "Q6"))


def test_benchmark_report(tmp_path, small_dataset):
    spec = BenchmarkSpec(queries=("Q1", "Q6"), modes=("LM", "SAM"), window=CountTumbling(2000))
    report = run_benchmark(small_dataset.config, spec, tmp_path, dataset=small_dataset)
    on_disk = json.loads((tmp_path / "report.json").read_text())
    assert on_disk == json.loads(json.dumps(report))
    assert len(report["cells"]) == 4
    for cell in report["cells"]:
        assert cell["status"] == "ok"
        assert cell["oracleVerdict"] == cell["truthVerdict"] == "pass"
        assert len(cell["perWindowCounts"]) == 3
        assert (tmp_path / "results" / f"{cell['query']}_{cell['mode']}.tsv").exists()


def test_benchmark_unknown_query(tmp_path, small_dataset):
    with pytest.raises(InvalidConfig):
        run_benchmark(small_dataset.config, BenchmarkSpec(queries=("Q9",)), tmp_path, dataset=small_dataset)


def test_dictionary_knows_departments_not_people(small_dataset, small_dicts):
    assert any("Department0" in str(t) for t in small_dicts.individuals)
    assert not any("FullProfessor" in str(t) for t in small_dicts.individuals)
    assert build_dictionary_set(small_dataset.static, small_dataset.static).individuals == small_dicts.individuals
