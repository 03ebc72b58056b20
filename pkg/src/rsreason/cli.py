"""Command line entry point.

Exit codes: 0 success, 1 runtime data error, 2 configuration or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Optional

from .bench import BenchmarkSpec, GeneratorConfig, InvalidConfig, generate_dataset, load_dataset, run_benchmark
from .encoding import DanglingId, build_dictionary_set, encoded_materialization, load_dictionary_set
from .engine import RegisteredQuery, compare_window, cut_windows, run_continuous
from .rdf_model import MalformedLine, read_ntriples
from .rewriter import format_plan, plan_stats, rewrite, rewrite_lm, rewrite_none, rewrite_sam
from .sparql import (
    BUILTIN_BODIES, CountTumbling, QueryAst, SparqlSyntaxError, TimeTumbling, UnboundFilterVariable,
    UnboundSelectVariable, builtin_query_text, parse_query,
)
from .tbox import CapacityExceeded, CorruptDictionary, CyclicHierarchy, UnknownTerm, VersionMismatch

log = logging.getLogger("rsreason")

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def parse_window(text: str):
    kind, _, value = text.partition(":")
    try:
        if kind == "count":
            return CountTumbling(int(value))
        if kind == "time":
            return TimeTumbling(float(value.rstrip("s")))
    except ValueError:
        pass
    raise ConfigError(f"window must look like count:N or time:S, got {text!r}")


def parse_seconds(text: str) -> float:
    try:
        return float(text[:-1]) if text.endswith("s") else float(text)
    except ValueError:
        raise ConfigError(f"bad duration {text!r}") from None


def load_query(ref: str) -> QueryAst:
    """A query file path, or a builtin name such as Q4."""
    path = Path(ref)
    if path.exists():
        return parse_query(path.read_text(encoding="utf-8"), name=path.stem)
    if ref.upper() in BUILTIN_BODIES:
        name = ref.upper()
        return parse_query(builtin_query_text(name), name=name)
    raise ConfigError(f"query {ref!r} is neither a file nor a builtin (Q1..Q8)")


def _need(path: Optional[str], flag: str) -> Path:
    if not path:
        raise ConfigError(f"{flag} is required")
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"{flag}: {path} does not exist")
    return p


# -- subcommands ---------------------------------------------------------

def cmd_encode(args) -> int:
    ontology = read_ntriples(_need(args.ontology, "--ontology"))
    static = read_ntriples(_need(args.static, "--static")) if args.static else []
    d = build_dictionary_set(ontology, static, max_bits=args.max_bits)
    d.save(args.out)
    print(f"concepts: {len(d.concepts)} entries, T={d.concepts.total_bits}")
    print(f"properties: {len(d.properties)} entries, T={d.properties.total_bits}")
    print(f"individuals: {len(d.individuals)}")
    print(f"cliques: {len(d.cliques)} covering {len(d.cliques.member_to_id)} members")
    return EXIT_OK


def _query_mode(ast: QueryAst, override: Optional[str]) -> str:
    return (override or ast.reasoning).upper()


def cmd_rewrite(args) -> int:
    d = load_dictionary_set(_need(args.dict, "--dict"))
    ast = load_query(args.query)
    pq = rewrite(ast, d, _query_mode(ast, args.mode))
    sys.stdout.write(format_plan(pq))
    print(json.dumps(plan_stats(pq), sort_keys=True))
    return EXIT_OK


def _window_for(ast: QueryAst, flag: Optional[str]):
    if flag:
        return parse_window(flag)
    if ast.window is None:
        raise ConfigError(f"query {ast.name} has no window pragma; pass --window")
    return ast.window


def cmd_run(args) -> int:
    d = load_dictionary_set(_need(args.dict, "--dict"))
    stream = read_ntriples(_need(args.stream, "--stream"))
    asts = [load_query(q) for q in args.query]
    windows = {_window_for(a, args.window) for a in asts}
    if len(windows) != 1:
        raise ConfigError("all queries of one run must share a window; pass --window")
    registered = []
    for ast in asts:
        mode = _query_mode(ast, args.mode)
        pq = rewrite(ast, d, mode)
        registered.append(RegisteredQuery(pq, ast.name, args.sam_multiplier if mode == "SAM" else 1,
                                          expand=args.expand))
    out = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout

    def sink(e):
        for line in e.lines():
            out.write(line + "\n")

    try:
        _, metrics = run_continuous(registered, stream, windows.pop(), d, workers=args.workers, sink=sink)
    finally:
        if args.out:
            out.close()
    doc = [m.to_dict() for m in metrics.values()]
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.metrics:
        Path(args.metrics).write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=sys.stderr)
    return EXIT_OK


def _witness(a: Counter, b: Counter):
    diff = (a - b) or (b - a)
    return min(diff) if diff else None


def cmd_oracle_check(args) -> int:
    d = load_dictionary_set(_need(args.dict, "--dict"))
    stream = read_ntriples(_need(args.stream, "--stream"))
    r_mat = encoded_materialization(d)
    all_ok = True
    for ref in args.query:
        ast = load_query(ref)
        spec = _window_for(ast, args.window)
        plans = {"LM": rewrite_lm(ast, d), "SAM": rewrite_sam(ast, d)}
        oracle_plan = rewrite_none(ast, d)
        verdict = None
        n = 0
        for w in cut_windows(stream, spec):
            n += 1
            expected, results = compare_window(plans, oracle_plan, w.triples, d, r_mat)
            for mode, got in results.items():
                if got != expected:
                    wit = _witness(got, expected)
                    side = "extra" if got[wit] > expected[wit] else "missing"
                    verdict = (f"FAIL {ast.name}: {mode} diverges from the oracle at window {w.seq_no} "
                               f"({sum(got.values())} vs {sum(expected.values())} rows); "
                               f"{side} row: {' '.join(wit)}")
                    break
            if verdict:
                break
        if verdict:
            all_ok = False
            print(verdict)
        else:
            print(f"pass {ast.name}: LM = SAM = oracle on {n} windows")
    print("all queries agree" if all_ok else "divergence found")
    return EXIT_OK


def _cfg(args) -> GeneratorConfig:
    return GeneratorConfig(universities=args.universities, num_cliques=args.cliques,
                           individuals_per_clique=args.ipc, seed=args.seed,
                           stream_triples=args.stream_triples).validate()


def cmd_generate(args) -> int:
    paths = generate_dataset(_cfg(args), args.out)
    print(f"wrote {paths.static}, {paths.stream}, {paths.truth}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _cfg(args)
    queries = [q.strip().upper() for q in args.queries.split(",") if q.strip()]
    modes = [m.strip().upper() for m in args.modes.split(",") if m.strip()]
    for m in modes:
        if m not in ("LM", "SAM"):
            raise ConfigError(f"unknown mode {m!r}; use LM and/or SAM")
    spec = BenchmarkSpec(queries, modes, parse_window(args.window),
                         parse_seconds(args.budget) if args.budget else None,
                         args.sam_multiplier, args.workers)
    out = Path(args.out)
    out_dir = out.parent if out.suffix == ".json" else out
    dataset = load_dataset(args.dataset, cfg) if args.dataset else None
    report = run_benchmark(cfg, spec, out_dir, dataset=dataset,
                           report_name=out.name if out.suffix == ".json" else "report.json")
    for cell in report["cells"]:
        print(f"{cell['query']} {cell['mode']}: {cell['status']} "
              f"throughput={cell['throughputTriplesPerSec']:.0f}/s p50={cell['latencyMillis']['p50']:.1f}ms "
              f"oracle={cell['oracleVerdict']} truth={cell['truthVerdict']}")
    return EXIT_OK


# -- wiring --------------------------------------------------------------

def _gen_flags(p):
    p.add_argument("--universities", type=int, default=1)
    p.add_argument("--cliques", type=int, default=0)
    p.add_argument("--ipc", type=int, default=2, help="individuals per clique")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream-triples", type=int, default=100_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rsreason", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="build dictionaries from an ontology and static KB")
    p.add_argument("--ontology", required=True)
    p.add_argument("--static")
    p.add_argument("--out", required=True)
    p.add_argument("--max-bits", type=int, default=62)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("rewrite", help="print the physical plan of a query")
    p.add_argument("--query", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--mode", choices=["LM", "SAM", "CLASSIC", "NONE"], type=str.upper)
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("run", help="run queries over a stream file")
    p.add_argument("--query", action="append", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--window")
    p.add_argument("--mode", choices=["LM", "SAM", "CLASSIC", "NONE"], type=str.upper)
    p.add_argument("--expand", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--sam-multiplier", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--metrics")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("oracle-check", help="compare LM, SAM and forward chaining per window")
    p.add_argument("--query", action="append", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--window")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    _gen_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="run the Q1-Q8 benchmark")
    _gen_flags(p)
    p.add_argument("--queries", default=",".join(BUILTIN_BODIES))
    p.add_argument("--modes", default="LM,SAM")
    p.add_argument("--window", default="count:10000")
    p.add_argument("--budget")
    p.add_argument("--sam-multiplier", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dataset", help="reuse a generated dataset directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


_CONFIG_ERRORS = (ConfigError, InvalidConfig, SparqlSyntaxError, UnboundSelectVariable,
                  UnboundFilterVariable, CyclicHierarchy, MalformedLine, FileNotFoundError)
_DATA_ERRORS = (UnknownTerm, CorruptDictionary, VersionMismatch, CapacityExceeded, DanglingId, OSError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
