"""Stream reasoning over windowed RDF triples with interval-encoded hierarchies.

Typical use::

    from rsreason import build_dictionary_set, builtin_queries, rewrite_lm, evaluate_window

Submodules: ``rdf_model`` (terms, N-Triples), ``tbox`` (hierarchy encoding),
``sameas`` (cliques), ``encoding`` (dictionary set, partial encoding),
``sparql`` (query subset), ``rewriter`` (plans), ``engine`` (windows,
evaluation, oracle), ``bench`` (generator, benchmark), ``cli``.
"""

from .encoding import (
    LM, NONE, SAM, DictionarySet, build_dictionary_set, decode_bindings, encode_batch,
    encoded_materialization, load_dictionary_set,
)
from .engine import (
    BindingTable, compare_window, Metrics, RegisteredQuery, Window, evaluate_window, materialize_window_sam,
    oracle_forward_chain, run_continuous,
)
from .rdf_model import BlankNode, Iri, Literal, Triple, parse_ntriples, serialize_triple
from .rewriter import PhysicalQuery, plan_stats, rewrite, rewrite_classic, rewrite_lm, rewrite_none, rewrite_sam
from .sameas import build_cliques, materialize_sameas
from .sparql import builtin_queries, parse_query
from .tbox import bounds, encode_hierarchy, extract_tbox, is_subsumed

__version__ = "0.1.0"

__all__ = [
    "BindingTable",
    "BlankNode",
    "bounds",
    "build_cliques",
    "build_dictionary_set",
    "builtin_queries",
    "compare_window",
    "decode_bindings",
    "DictionarySet",
    "encode_batch",
    "encode_hierarchy",
    "encoded_materialization",
    "evaluate_window",
    "extract_tbox",
    "Iri",
    "is_subsumed",
    "Literal",
    "LM",
    "load_dictionary_set",
    "materialize_sameas",
    "materialize_window_sam",
    "Metrics",
    "NONE",
    "oracle_forward_chain",
    "parse_ntriples",
    "parse_query",
    "PhysicalQuery",
    "plan_stats",
    "RegisteredQuery",
    "rewrite",
    "rewrite_classic",
    "rewrite_lm",
    "rewrite_none",
    "rewrite_sam",
    "run_continuous",
    "SAM",
    "serialize_triple",
    "Triple",
    "Window",
]
