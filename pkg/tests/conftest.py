import random

import pytest

from rsreason.bench import GeneratorConfig, generate
from rsreason.encoding import build_dictionary_set
from rsreason.rdf_model import OWL_CLASS, OWL_THING, RDF_TYPE, RDFS_SUBCLASSOF, Iri, Triple

SSN = "http://purl.oclc.org/NET/ssnx/ssn#"


def ssn_iri(name):
    return OWL_THING if name == "Thing" else Iri(SSN + name)


# Table I extract. Event's other children are not listed there. Action's
# 4-bit suffix 0010 means Event has 8 children with Action second, so the
# fixture fills in Process first and six placeholders after Action.
SSN_EDGES = [
    ("Input", "Thing"), ("Output", "Thing"), ("Entity", "Thing"),
    ("Abstract", "Entity"), ("FeatureOfInterest", "Entity"), ("InformationEntity", "Entity"),
    ("Object", "Entity"), ("Quality", "Entity"), ("Event", "Entity"),
    ("Process", "Event"), ("Action", "Event"),
] + [(f"Event{i}", "Event") for i in range(3, 9)]

TABLE_I = {
    "Thing": ("1", "1000000000"),
    "Input": ("101", "1010000000"),
    "Output": ("110", "1100000000"),
    "Entity": ("111", "1110000000"),
    "Abstract": ("111001", "1110010000"),
    "FeatureOfInterest": ("111010", "1110100000"),
    "InformationEntity": ("111011", "1110110000"),
    "Object": ("111100", "1111000000"),
    "Quality": ("111101", "1111010000"),
    "Event": ("111110", "1111100000"),
    "Action": ("1111100010", "1111100010"),
}


def ssn_triples():
    return [Triple(ssn_iri(a), RDFS_SUBCLASSOF, ssn_iri(b)) for a, b in SSN_EDGES]


def random_dag(rng: random.Random, n: int, max_parents: int = 3, prefix="urn:n"):
    """Nodes 0..n-1 where each node after the first picks 1..max_parents earlier parents."""
    nodes = [Iri(f"{prefix}{i}") for i in range(n)]
    parents = {0: []}
    for i in range(1, n):
        parents[i] = rng.sample(range(i), min(i, rng.randint(1, max_parents)))
    triples = [Triple(x, RDF_TYPE, OWL_CLASS) for x in nodes]
    triples += [Triple(nodes[i], RDFS_SUBCLASSOF, nodes[p]) for i in range(n) for p in parents[i]]
    return nodes, parents, triples


def bfs_descendants(parents, n, root):
    children = {i: [] for i in range(n)}
    for i, ps in parents.items():
        for p in ps:
            children[p].append(i)
    seen = {root}
    todo = [root]
    while todo:
        x = todo.pop()
        for c in children[x]:
            if c not in seen:
                seen.add(c)
                todo.append(c)
    return seen


@pytest.fixture(scope="session")
def small_dataset():
    cfg = GeneratorConfig(universities=1, num_cliques=20, individuals_per_clique=4, seed=11,
                          stream_triples=6000, truth_window=2000)
    return generate(cfg)


@pytest.fixture(scope="session")
def small_dicts(small_dataset):
    return build_dictionary_set(small_dataset.static, small_dataset.static)
