"""LUBM-shaped data generator and the Q1-Q8 benchmark driver.

The generator writes three files into a dataset directory:

``static.nt``
    MiniOntology TBox, departments and universities, and owl:sameAs chains
    linking ``individuals_per_clique`` aliases of each PostDoc clique.
``stream.nt``
    Instance triples cut from department blocks, exactly ``stream_triples`` long.
``truth.json``
    Expected answers of Q1-Q8 on the first window, computed from the
    generator's own hierarchy and clique tables (no dictionaries involved).

Data rules that keep bag semantics well defined across LM, SAM and a
set-based forward-chaining closure:

* every entity has exactly one leaf type;
* a (subject, object) pair carries at most one memberOf-family fact;
* clique entities only carry type, name and email, each asserted once on a
  random alias, and never appear in object position.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .encoding import LM, SAM, build_dictionary_set, decode_bindings, encode_batch
from .engine import (
    Emission, RegisteredQuery, Window, evaluate_window, oracle_forward_chain, run_continuous,
    write_results,
)
from .rdf_model import (
    LUBM, OWL_CLASS, OWL_OBJECT_PROPERTY, OWL_SAMEAS, OWL_THING, RDF_TYPE, RDFS_SUBCLASSOF,
    RDFS_SUBPROPERTYOF, TOP_PROPERTY, Iri, Literal, Triple, read_ntriples, write_ntriples,
)
from .rewriter import plan_stats, rewrite, rewrite_none
from .sparql import BUILTIN_BODIES, CountTumbling, builtin_queries

MODES = (LM, SAM)


class InvalidConfig(ValueError):
    pass


def _c(name: str) -> Iri:
    return Iri(LUBM + name)


# MiniOntology: child -> parent, in declaration order
CLASS_PARENTS = {
    "Person": None,
    "Faculty": "Person",
    "Professor": "Faculty",
    "FullProfessor": "Professor",
    "AssistantProfessor": "Professor",
    "PostDoc": "Faculty",
    "Student": "Person",
    "GraduateStudent": "Student",
    "Organization": None,
    "Department": "Organization",
    "University": "Organization",
}
PROPERTY_PARENTS = {
    "memberOf": None,
    "worksFor": "memberOf",
    "headOf": "worksFor",
    "advisor": None,
    "name": None,
    "emailAddress": None,
    "subOrganizationOf": None,
}

TYPE = RDF_TYPE
NAME, EMAIL, ADVISOR = _c("name"), _c("emailAddress"), _c("advisor")
MEMBER_OF, WORKS_FOR, HEAD_OF = _c("memberOf"), _c("worksFor"), _c("headOf")
SUB_ORG = _c("subOrganizationOf")


def mini_ontology() -> list[Triple]:
    out = []
    for name, parent in CLASS_PARENTS.items():
        out.append(Triple(_c(name), TYPE, OWL_CLASS))
        out.append(Triple(_c(name), RDFS_SUBCLASSOF, _c(parent) if parent else OWL_THING))
    for name, parent in PROPERTY_PARENTS.items():
        out.append(Triple(_c(name), TYPE, OWL_OBJECT_PROPERTY))
        out.append(Triple(_c(name), RDFS_SUBPROPERTYOF, _c(parent) if parent else TOP_PROPERTY))
    return out


@dataclass
class GeneratorConfig:
    universities: int = 1
    num_cliques: int = 0
    individuals_per_clique: int = 2
    seed: int = 0
    stream_triples: int = 100_000
    departments_per_university: int = 15
    full_professors: int = 4
    assistant_professors: int = 4
    postdocs: int = 2
    graduate_students: int = 12
    truth_window: int = 10_000

    def validate(self):
        checks = [
            (self.universities >= 1, "universities must be >= 1"),
            (self.num_cliques >= 0, "numCliques must be >= 0"),
            (self.individuals_per_clique >= 2, "individualsPerClique must be >= 2"),
            (self.stream_triples >= 0, "streamTriples must be >= 0"),
            (self.departments_per_university >= 1, "departments per university must be >= 1"),
            (self.full_professors >= 1, "at least one full professor per department is needed"),
            (min(self.assistant_professors, self.postdocs, self.graduate_students) >= 0,
             "per-department counts must be >= 0"),
            (self.truth_window >= 1, "truth window must be >= 1"),
            (0 <= self.seed < 2 ** 64, "seed must be a 64-bit unsigned integer"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidConfig(msg)
        return self


@dataclass
class Dataset:
    static: list
    stream: list
    cliques: list  # list of alias lists, one per clique
    config: GeneratorConfig


def _univ(u: int) -> Iri:
    return Iri(f"http://www.University{u}.edu")


def _dept(u: int, d: int) -> Iri:
    return Iri(f"http://www.Department{d}.University{u}.edu")


def _alias(c: int, j: int) -> Iri:
    return Iri(f"http://www.sameas.example.org/Entity{c}/alias{j}")


def _person(kind: str, info: tuple, idx: str):
    u, d = info
    local = f"{kind}{idx}"
    iri = Iri(f"http://www.Department{d}.University{u}.edu/{local}")
    return iri, Literal(local), Literal(f"{local}@Department{d}.University{u}.edu")


def _block_size(cfg: GeneratorConfig) -> int:
    return 4 * (cfg.full_professors + cfg.assistant_professors + cfg.postdocs) + 5 * cfg.graduate_students


def generate(cfg: GeneratorConfig) -> Dataset:
    """Build the dataset in memory; the same config always yields the same triples."""
    cfg.validate()
    rng = random.Random(cfg.seed)
    departments = [(u, d) for u in range(cfg.universities) for d in range(cfg.departments_per_university)]

    static = mini_ontology()
    for u in range(cfg.universities):
        static.append(Triple(_univ(u), TYPE, _c("University")))
    for u, d in departments:
        static.append(Triple(_dept(u, d), TYPE, _c("Department")))
        static.append(Triple(_dept(u, d), SUB_ORG, _univ(u)))
    cliques = [[_alias(c, j) for j in range(cfg.individuals_per_clique)] for c in range(cfg.num_cliques)]
    chains = []
    for members in cliques:
        order = members[:]
        rng.shuffle(order)
        chains.extend(Triple(a, OWL_SAMEAS, b) for a, b in zip(order, order[1:]))
    rng.shuffle(chains)
    static.extend(chains)

    # stream: department blocks round-robin, clique entities spread over the first 90%
    per_block = _block_size(cfg)
    budget = max(cfg.stream_triples - 3 * cfg.num_cliques, per_block)
    n_blocks = max(1, -(-budget // per_block))
    spread = max(1, int(n_blocks * 0.9))
    by_block: dict[int, list[int]] = {}
    for c in range(cfg.num_cliques):
        by_block.setdefault(c * spread // max(cfg.num_cliques, 1), []).append(c)

    stream: list[Triple] = []
    b = 0
    while len(stream) < cfg.stream_triples:
        info = departments[b % len(departments)]
        rnd = b // len(departments)
        stream.extend(_department_block(cfg, rng, info, rnd))
        for c in by_block.get(b, ()):
            stream.extend(_clique_entity(rng, cliques[c], c))
        b += 1
    del stream[cfg.stream_triples:]
    return Dataset(static, stream, cliques, cfg)


def _department_block(cfg, rng: random.Random, info, rnd: int) -> list[Triple]:
    dept = _dept(*info)
    out: list[Triple] = []
    professors = []
    for kind, count in (("FullProfessor", cfg.full_professors), ("AssistantProfessor", cfg.assistant_professors)):
        for i in range(count):
            iri, name, mail = _person(kind, info, f"{rnd}_{i}")
            professors.append(iri)
            affiliation = HEAD_OF if (kind == "FullProfessor" and i == 0) else WORKS_FOR
            out += [Triple(iri, TYPE, _c(kind)), Triple(iri, NAME, name), Triple(iri, EMAIL, mail),
                    Triple(iri, affiliation, dept)]
    for i in range(cfg.postdocs):
        iri, name, mail = _person("PostDoc", info, f"{rnd}_{i}")
        out += [Triple(iri, TYPE, _c("PostDoc")), Triple(iri, NAME, name), Triple(iri, EMAIL, mail),
                Triple(iri, WORKS_FOR, dept)]
    for i in range(cfg.graduate_students):
        iri, name, mail = _person("GraduateStudent", info, f"{rnd}_{i}")
        out += [Triple(iri, TYPE, _c("GraduateStudent")), Triple(iri, NAME, name),
                Triple(iri, EMAIL, mail), Triple(iri, MEMBER_OF, dept)]
        if professors:
            out.append(Triple(iri, ADVISOR, rng.choice(professors)))
    return out


def _clique_entity(rng: random.Random, members: list[Iri], c: int) -> list[Triple]:
    local = f"CliquePostDoc{c}"
    return [
        Triple(rng.choice(members), TYPE, _c("PostDoc")),
        Triple(rng.choice(members), NAME, Literal(local)),
        Triple(rng.choice(members), EMAIL, Literal(f"{local}@sameas.example.org")),
    ]


# -- independent ground truth ----------------------------------------------

def _ancestor_table(parents: dict[str, Optional[str]], root: Iri) -> dict[Iri, list[Iri]]:
    out = {}
    for name in parents:
        chain, cur = [], parents[name]
        while cur is not None:
            chain.append(_c(cur))
            cur = parents[cur]
        out[_c(name)] = chain + [root]
    return out


def lexical_closure(triples: Sequence[Triple], cliques: Sequence[Sequence[Iri]]) -> set[tuple]:
    """Forward chaining over plain terms with the generator's own tables."""
    c_anc = _ancestor_table(CLASS_PARENTS, OWL_THING)
    p_anc = _ancestor_table(PROPERTY_PARENTS, TOP_PROPERTY)
    p_anc[RDF_TYPE] = [TOP_PROPERTY]
    p_anc[OWL_SAMEAS] = [TOP_PROPERTY]
    peers = {m: list(ms) for ms in cliques for m in ms}
    out: set[tuple] = set()
    for t in triples:
        preds = [t.p] + p_anc.get(t.p, [])
        objs = [t.o] + c_anc.get(t.o, []) if t.p == RDF_TYPE else peers.get(t.o, [t.o])
        for s in peers.get(t.s, [t.s]):
            for p in preds:
                for o in objs:
                    out.add((s, p, o))
    return out


def naive_match(patterns, select_vars, triples: set[tuple]) -> list[tuple]:
    """Backtracking BGP matcher over a triple set; returns projected rows as a bag.

    Candidates come from a (predicate, subject) or (predicate, object) index
    whenever the environment already fixes one end.
    """
    from .sparql import Var

    by_p: dict = {}
    by_ps: dict = {}
    by_po: dict = {}
    for t in triples:
        by_p.setdefault(t[1], []).append(t)
        by_ps.setdefault((t[1], t[0]), []).append(t)
        by_po.setdefault((t[1], t[2]), []).append(t)
    everything = list(triples)
    rows: list[tuple] = []

    def resolve(x, env):
        return env.get(x) if isinstance(x, Var) else x

    def walk(i: int, env: dict):
        if i == len(patterns):
            rows.append(tuple(env[v] for v in select_vars))
            return
        tp = patterns[i]
        p, s, o = resolve(tp.p, env), resolve(tp.s, env), resolve(tp.o, env)
        if p is None:
            cands = everything
        elif s is not None:
            cands = by_ps.get((p, s), ())
        elif o is not None:
            cands = by_po.get((p, o), ())
        else:
            cands = by_p.get(p, ())
        for t in cands:
            new = dict(env)
            ok = True
            for slot, val in zip((tp.s, tp.p, tp.o), t):
                if isinstance(slot, Var):
                    if new.setdefault(slot, val) != val:
                        ok = False
                        break
                elif slot != val:
                    ok = False
                    break
            if ok:
                walk(i + 1, new)

    walk(0, {})
    return rows


def ground_truth(ds: Dataset, window: Optional[int] = None) -> dict[str, list[list[str]]]:
    n = ds.config.truth_window if window is None else window
    closed = lexical_closure(ds.stream[:n], ds.cliques)
    out = {}
    for name, ast in builtin_queries().items():
        rows = naive_match(_connected_order(ast.patterns()), ast.select_vars, closed)
        out[name] = sorted([str(x) for x in r] for r in rows)
    return out


def _connected_order(patterns):
    """Reorder patterns so each one after the first shares a variable with an earlier one."""
    left = list(patterns)
    order = [left.pop(0)]
    bound = set(order[0].variables())
    while left:
        pick = next((tp for tp in left if bound & set(tp.variables())), left[0])
        left.remove(pick)
        order.append(pick)
        bound |= set(pick.variables())
    return order


# -- files -----------------------------------------------------------------

@dataclass
class DatasetPaths:
    root: Path
    static: Path
    stream: Path
    truth: Path


def generate_dataset(cfg: GeneratorConfig, out_dir) -> DatasetPaths:
    """Write static.nt, stream.nt, truth.json and config.json into ``out_dir``."""
    ds = generate(cfg)
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    paths = DatasetPaths(root, root / "static.nt", root / "stream.nt", root / "truth.json")
    write_ntriples(ds.static, paths.static)
    write_ntriples(ds.stream, paths.stream)
    paths.truth.write_text(json.dumps(ground_truth(ds), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    (root / "config.json").write_text(json.dumps(asdict(cfg), indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    return paths


# -- benchmark -------------------------------------------------------------

@dataclass
class BenchmarkSpec:
    queries: Sequence[str] = tuple(BUILTIN_BODIES)
    modes: Sequence[str] = MODES
    window: object = field(default_factory=lambda: CountTumbling(10_000))
    budget_seconds: Optional[float] = None
    sam_window_multiplier: int = 1
    workers: int = 1


def _oracle_rows(ast, window_triples, d) -> list[list[str]]:
    w = oracle_forward_chain(Window(0, encode_batch(window_triples, d, SAM)), d)
    rows = decode_bindings(evaluate_window(rewrite_none(ast, d), w), d, True)
    return sorted([str(x) for x in r] for r in rows)


def run_benchmark(cfg: GeneratorConfig, spec: BenchmarkSpec, out_dir, dataset: Optional[Dataset] = None,
                  report_name: str = "report.json") -> dict:
    """Generate (or reuse) a dataset, run every (query, mode) cell and write report.json.

    Each cell records plan statistics, per-window row counts, throughput,
    latency percentiles, an oracle verdict on the first window and a verdict
    against the generator's ground truth. Result rows go to
    ``results/<query>_<mode>.tsv``.
    """
    ds = dataset or generate(cfg)
    root = Path(out_dir)
    (root / "results").mkdir(parents=True, exist_ok=True)
    d = build_dictionary_set(ds.static, ds.static)
    asts = builtin_queries()
    truth = ground_truth(ds, _window_size(spec.window, cfg))
    first = ds.stream[:_window_size(spec.window, cfg)]
    cells = []
    for qname in spec.queries:
        if qname not in asts:
            raise InvalidConfig(f"unknown query {qname}")
        ast = asts[qname]
        oracle_rows = _oracle_rows(ast, first, d)
        for mode in spec.modes:
            plan = rewrite(ast, d, mode)
            rq = RegisteredQuery(plan, qname, spec.sam_window_multiplier if mode == SAM else 1,
                                 expand=True, budget_seconds=spec.budget_seconds)
            t0 = time.perf_counter()
            emissions, metrics = run_continuous([rq], ds.stream, spec.window, d, workers=spec.workers)
            wall = time.perf_counter() - t0
            m = metrics[qname].to_dict()
            write_results(emissions, root / "results" / f"{qname}_{mode}.tsv")
            cell = {
                "query": qname,
                "mode": mode,
                "status": m["status"],
                "planStats": plan_stats(plan),
                "perWindowCounts": [e.get("resultRows") for e in m["perWindow"]],
                "throughputTriplesPerSec": m["throughputTriplesPerSec"],
                "latencyMillis": m["latencyMillis"],
                "wallSeconds": wall,
                "errors": m["errors"],
            }
            if m["status"] == "ok" and emissions:
                got = [list(map(str, r)) for r in _first_rows(emissions)]
                cell["oracleVerdict"] = "pass" if sorted(got) == oracle_rows else "fail"
                cell["truthVerdict"] = "pass" if sorted(got) == truth[qname] else "fail"
            else:
                cell["oracleVerdict"] = cell["truthVerdict"] = "not-run"
            cells.append(cell)
    report = {"config": asdict(cfg), "window": _window_text(spec.window), "cells": cells}
    (root / report_name).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return report


def _first_rows(emissions: list[Emission]) -> list:
    return emissions[0].rows if emissions and emissions[0].seq_no == 0 else []


def _window_size(spec, cfg) -> int:
    return spec.size if isinstance(spec, CountTumbling) else cfg.truth_window


def _window_text(spec) -> str:
    return f"count:{spec.size}" if isinstance(spec, CountTumbling) else f"time:{spec.seconds}"


def load_dataset(root, cfg: Optional[GeneratorConfig] = None) -> Dataset:
    """Read a generated dataset back; cliques are recovered from the static file."""
    from .sameas import build_cliques

    root = Path(root)
    if cfg is None:
        cfg = GeneratorConfig(**json.loads((root / "config.json").read_text(encoding="utf-8")))
    static = read_ntriples(root / "static.nt")
    stream = read_ntriples(root / "stream.nt")
    cd = build_cliques((t.s, t.o) for t in static if t.p == OWL_SAMEAS)
    return Dataset(static, stream, [cd.members(c) for c in sorted(cd.clique_members)], cfg)
