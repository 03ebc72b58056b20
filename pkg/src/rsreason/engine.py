"""Windowed evaluation of physical plans.

Windows hold encoded triples. Each disjunct of a plan is evaluated by scanning
its patterns in join order and hash-joining on shared variables; range
filters run inside the scan of the first pattern that binds their variable.
Disjunct results are concatenated (bag union).
"""

from __future__ import annotations

import json
import logging
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .encoding import (
    LOCAL_BITS, SAM, TAG_MASK, DictionarySet, decode_bindings, encode_batch,
    encoded_materialization, is_clique_id,
)
from .rdf_model import Triple
from .rewriter import PhysicalQuery, PlanPattern, RangeFilter
from .sparql import CountTumbling, TimeTumbling, Var

log = logging.getLogger(__name__)


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class Window:
    seq_no: int
    triples: list
    opened_at: float = 0.0
    closed_at: float = 0.0

    def __post_init__(self):
        self._by_predicate: Optional[dict] = None
        self._adjacency: dict = {}

    def __len__(self) -> int:
        return len(self.triples)

    def by_predicate(self) -> dict:
        if self._by_predicate is None:
            index = defaultdict(list)
            for t in self.triples:
                index[t[1]].append(t)
            self._by_predicate = dict(index)
        return self._by_predicate

    def adjacency(self, predicate) -> dict:
        """Subject -> objects for one predicate (used for sameAs links)."""
        adj = self._adjacency.get(predicate)
        if adj is None:
            adj = defaultdict(list)
            for s, _, o in self.by_predicate().get(predicate, ()):
                adj[s].append(o)
            adj = self._adjacency[predicate] = dict(adj)
        return adj


@dataclass
class BindingTable:
    columns: list
    rows: list
    projection: list = field(default_factory=list)

    def __post_init__(self):
        if not self.projection:
            self.projection = list(self.columns)

    def __len__(self) -> int:
        return len(self.rows)

    def project(self) -> list[tuple]:
        idx = [self.columns.index(v) for v in self.projection]
        return [tuple(r[i] for i in idx) for r in self.rows]


# -- evaluation ----------------------------------------------------------

class _Deadline:
    def __init__(self, deadline: Optional[float]):
        self.deadline = deadline
        self.ticks = 0

    def check(self, n: int = 1):
        if self.deadline is None:
            return
        self.ticks += n
        if self.ticks >= 4096:
            self.ticks = 0
            if time.perf_counter() > self.deadline:
                raise BudgetExceeded("time budget exhausted")


def _scan(pattern: PlanPattern, w: Window, filters: dict, dl: _Deadline):
    """Bindings of one pattern's variables, filters for those variables applied."""
    s, p, o = pattern
    pvars: list[Var] = []
    positions: list[int] = []
    checks: list[tuple[int, object]] = []  # (position, constant)
    same: list[tuple[int, int]] = []  # repeated variable inside the pattern
    for pos, x in enumerate((s, p, o)):
        if isinstance(x, Var):
            if x in pvars:
                same.append((pos, positions[pvars.index(x)]))
            else:
                pvars.append(x)
                positions.append(pos)
        else:
            checks.append((pos, x))
    index = w.by_predicate()
    if not isinstance(p, Var):
        source = index.get(p, ())
    elif p in filters:
        # a filtered predicate variable only visits the index buckets in range
        source = [t for key, bucket in index.items()
                  if all(f.accepts(key) for f in filters[p]) for t in bucket]
    else:
        source = w.triples
    row_filters = [(i, filters[v]) for i, v in enumerate(pvars) if v in filters]
    out = []
    for t in source:
        if any(t[pos] != c for pos, c in checks):
            continue
        if any(t[a] != t[b] for a, b in same):
            continue
        row = tuple(t[pos] for pos in positions)
        if row_filters and not all(f.accepts(row[i]) for i, fs in row_filters for f in fs):
            continue
        out.append(row)
    dl.check(len(source))
    return pvars, out


def _hash_join(left_vars, left_rows, right_vars, right_rows, dl: _Deadline):
    shared = [v for v in right_vars if v in left_vars]
    extra = [i for i, v in enumerate(right_vars) if v not in left_vars]
    out_vars = list(left_vars) + [right_vars[i] for i in extra]
    li = [left_vars.index(v) for v in shared]
    ri = [right_vars.index(v) for v in shared]
    out = []
    if not shared:
        for lr in left_rows:
            for rr in right_rows:
                out.append(lr + tuple(rr[i] for i in extra))
            dl.check(len(right_rows) + 1)
        return out_vars, out
    # build on the smaller side, probe with the larger
    if len(right_rows) <= len(left_rows):
        table = defaultdict(list)
        for rr in right_rows:
            table[tuple(rr[i] for i in ri)].append(tuple(rr[i] for i in extra))
        for lr in left_rows:
            for tail in table.get(tuple(lr[i] for i in li), ()):
                out.append(lr + tail)
        dl.check(len(left_rows) + len(right_rows))
    else:
        table = defaultdict(list)
        for lr in left_rows:
            table[tuple(lr[i] for i in li)].append(lr)
        for rr in right_rows:
            tail = tuple(rr[i] for i in extra)
            for lr in table.get(tuple(rr[i] for i in ri), ()):
                out.append(lr + tail)
        dl.check(len(left_rows) + len(right_rows))
    return out_vars, out


def _link(pattern: PlanPattern, w: Window, cur_vars, rows, dl: _Deadline):
    """sameAs-or-self link: s ranges over S(o), where S(x) is x's sameAs peers or {x} itself."""
    adj = w.adjacency(pattern.p)

    def peers(x):
        return adj.get(x) or (x,)

    s, o = pattern.s, pattern.o
    s_var, o_var = isinstance(s, Var), isinstance(o, Var)
    s_bound = not s_var or s in cur_vars
    o_bound = not o_var or o in cur_vars
    if not (s_bound or o_bound):
        raise ValueError("a sameAs link needs one bound end")

    def value(row, x):
        return row[cur_vars.index(x)] if isinstance(x, Var) else x

    out = []
    if s_bound and o_bound:
        for row in rows:
            if value(row, s) in peers(value(row, o)):
                out.append(row)
        dl.check(len(rows) + 1)
        return cur_vars, out
    anchor, free = (o, s) if o_bound else (s, o)
    for row in rows:
        for x in peers(value(row, anchor)):
            out.append(row + (x,))
    dl.check(len(out) + 1)
    return list(cur_vars) + [free], out


def _evaluate_disjunct(plan, w: Window, dl: _Deadline):
    filters: dict[Var, list[RangeFilter]] = defaultdict(list)
    for f in plan.range_filters:
        filters[f.var].append(f)
    cur_vars: Optional[list] = None
    rows: list = []
    applied: set = set()
    for idx in plan.join_order:
        pat = plan.patterns[idx]
        if pat.hub:
            if cur_vars is None:
                raise ValueError("a plan cannot start with a sameAs link")
            cur_vars, rows = _link(pat, w, cur_vars, rows, dl)
            fresh = [v for v in cur_vars if v in filters and v not in applied]
            for v in fresh:
                i = cur_vars.index(v)
                rows = [r for r in rows if all(f.accepts(r[i]) for f in filters[v])]
                applied.add(v)
        else:
            pending = {v: fs for v, fs in filters.items() if v not in applied}
            pvars, prow = _scan(pat, w, pending, dl)
            applied.update(v for v in pvars if v in filters)
            if cur_vars is None:
                cur_vars, rows = pvars, prow
            else:
                cur_vars, rows = _hash_join(cur_vars, rows, pvars, prow, dl)
        if not rows:
            return cur_vars, []
    return cur_vars or [], rows


def evaluate_window(pq: PhysicalQuery, w: Window, deadline: Optional[float] = None) -> BindingTable:
    """Evaluate every disjunct and bag-union the results over the query's answer variables.

    ``deadline`` is a ``time.perf_counter()`` value after which BudgetExceeded is raised.
    """
    dl = _Deadline(deadline)
    columns = list(pq.answer_vars)
    out: list[tuple] = []
    for plan in pq.disjuncts:
        cur_vars, rows = _evaluate_disjunct(plan, w, dl)
        if not rows:
            continue
        idx = [cur_vars.index(v) if v in cur_vars else None for v in columns]
        out.extend(tuple(None if i is None else r[i] for i in idx) for r in rows)
    return BindingTable(columns, out, list(pq.select_vars))


def materialize_window_sam(w: Window, r_mat: Sequence) -> Window:
    """The window plus the materialized sameAs set; seqNo and timestamps are kept."""
    if not r_mat:
        return w
    return Window(w.seq_no, list(w.triples) + list(r_mat), w.opened_at, w.closed_at)


def _members(value, d: DictionarySet):
    if is_clique_id(value):
        cid = (value & ~TAG_MASK) >> LOCAL_BITS
        if cid in d.cliques.clique_members:
            return d.clique_member_ids(cid)
    return (value,)


def oracle_forward_chain(w: Window, d: DictionarySet) -> Window:
    """Closure of a SAM-encoded window under subclass, subproperty and sameAs-clique rules.

    Ancestors come from the declared closure rather than id intervals, so the
    oracle stays independent of the encoding under test. Output is a set in
    first-derivation order.
    """
    type_id = d.type_id
    c_anc, p_anc = d.concept_ancestors, d.property_ancestors
    seen: dict[tuple, None] = {}
    for s, p, o in w.triples:
        preds = (p,) + p_anc.get(p, ()) if isinstance(p, int) else (p,)
        if p == type_id and isinstance(o, int) and o in c_anc:
            objs: Sequence = (o,) + c_anc[o]
        else:
            objs = _members(o, d) if isinstance(o, int) else (o,)
        subs = _members(s, d) if isinstance(s, int) else (s,)
        for s2 in subs:
            for p2 in preds:
                for o2 in objs:
                    seen.setdefault((s2, p2, o2))
    return Window(w.seq_no, list(seen), w.opened_at, w.closed_at)


def decoded_bag(pq: PhysicalQuery, w: Window, d: DictionarySet) -> Counter:
    """Decoded rows (clique ids expanded) of an already encoded window, as a string multiset."""
    rows = decode_bindings(evaluate_window(pq, w), d, expand=True)
    return Counter(tuple(str(x) for x in r) for r in rows)


def compare_window(plans: dict, oracle_plan: PhysicalQuery, triples: Sequence[Triple],
                   d: DictionarySet, r_mat: Sequence = ()) -> tuple[Counter, dict]:
    """Evaluate one raw window under each plan and under the forward-chaining oracle.

    Returns ``(expected, {name: got})``. SAM plans see the window with the
    materialized sameAs set appended; the oracle sees the closed window.
    """
    base = Window(0, encode_batch(triples, d, SAM))
    expected = decoded_bag(oracle_plan, oracle_forward_chain(base, d), d)
    got = {}
    for name, pq in plans.items():
        enc = base if pq.encoding == SAM else Window(0, encode_batch(triples, d, pq.encoding))
        if pq.strategy == SAM:
            enc = materialize_window_sam(enc, r_mat)
        got[name] = decoded_bag(pq, enc, d)
    return expected, got


# -- continuous runs -----------------------------------------------------

def cut_windows(source: Iterable[Triple], spec, clock: Callable[[], float] = time.monotonic
                ) -> Iterator[Window]:
    """Tumbling windows by triple count or by elapsed clock time."""
    seq = 0
    buf: list = []
    opened = clock()
    if isinstance(spec, CountTumbling):
        if spec.size < 1:
            raise ValueError("count window size must be positive")
        for t in source:
            buf.append(t)
            if len(buf) == spec.size:
                yield Window(seq, buf, opened, clock())
                seq += 1
                buf = []
                opened = clock()
    elif isinstance(spec, TimeTumbling):
        if spec.seconds <= 0:
            raise ValueError("time window length must be positive")
        for t in source:
            now = clock()
            while now - opened >= spec.seconds:
                yield Window(seq, buf, opened, opened + spec.seconds)
                seq += 1
                buf = []
                opened += spec.seconds
            buf.append(t)
    else:
        raise TypeError(f"unsupported window spec {spec!r}")
    if buf:
        yield Window(seq, buf, opened, clock())


@dataclass
class RegisteredQuery:
    plan: PhysicalQuery
    name: str = ""
    window_multiplier: int = 1  # evaluate over this many base windows at once
    expand: bool = True
    budget_seconds: Optional[float] = None

    def __post_init__(self):
        if not self.name:
            self.name = self.plan.name
        if self.window_multiplier < 1:
            raise ValueError("window multiplier must be >= 1")


@dataclass
class Emission:
    seq_no: int
    query: str
    rows: list

    def lines(self) -> list[str]:
        prefix = f"win={self.seq_no} query={self.query}"
        return [prefix + "\t" + "\t".join("" if x is None else str(x) for x in row) for row in self.rows]


@dataclass
class Metrics:
    query: str
    per_window: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    timed_out: bool = False

    @property
    def total_triples(self) -> int:
        return sum(w["inputTriples"] for w in self.per_window)

    @property
    def throughput(self) -> float:
        seconds = sum(w["evalMillis"] for w in self.per_window) / 1000.0
        return self.total_triples / seconds if seconds > 0 else 0.0

    def latency(self) -> dict[str, float]:
        return percentile_summary([w["latencyMillis"] for w in self.per_window])

    def to_dict(self) -> dict:
        status = "timeout" if self.timed_out else ("error" if self.errors and not self.per_window else "ok")
        return {
            "query": self.query,
            "status": status,
            "windows": len(self.per_window),
            "totalTriples": self.total_triples,
            "throughputTriplesPerSec": self.throughput,
            "latencyMillis": self.latency(),
            "perWindow": self.per_window,
            "errors": self.errors,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _sort_key(row):
    return tuple("" if x is None else str(x) for x in row)


def process_window(rq: RegisteredQuery, w: Window, d: DictionarySet, r_mat=None,
                   workers: int = 1, deadline: Optional[float] = None) -> list[tuple]:
    """Encode, optionally materialize, evaluate and decode one window for one query."""
    encoded = Window(w.seq_no, encode_batch(w.triples, d, rq.plan.encoding, workers), w.opened_at, w.closed_at)
    if rq.plan.strategy == SAM and r_mat:
        encoded = materialize_window_sam(encoded, r_mat)
    table = evaluate_window(rq.plan, encoded, deadline)
    return sorted(decode_bindings(table, d, expand=rq.expand), key=_sort_key)


def run_continuous(queries: Sequence[RegisteredQuery], source: Iterable[Triple], window_spec,
                   d: DictionarySet, clock: Callable[[], float] = time.monotonic, workers: int = 1,
                   sink: Optional[Callable[[Emission], None]] = None):
    """Run registered queries over tumbling windows of ``source``.

    Latency is emit time minus window close time. Queries are timed as if each
    had its own worker, so one query's latency does not include the time other
    queries spent on the same window: it is the close-to-dispatch delay plus
    the query's own pick-up-to-emit time.
    Per-window failures are recorded and the stream continues. A query whose
    accumulated processing time passes its budget is marked as timed out and
    skipped for the rest of the stream.

    Returns ``(emissions, metrics)`` with emissions in window order.
    """
    r_mat = encoded_materialization(d) if any(q.plan.strategy == SAM for q in queries) else []
    metrics = {q.name: Metrics(q.name) for q in queries}
    spent = {q.name: 0.0 for q in queries}
    pending: dict[str, list[Window]] = {q.name: [] for q in queries}
    emissions: list[Emission] = []

    def run_one(rq: RegisteredQuery, w: Window, dispatch_delay: float):
        m = metrics[rq.name]
        if m.timed_out:
            return
        picked_up = clock()
        t0 = time.perf_counter()
        deadline = None
        if rq.budget_seconds is not None:
            deadline = t0 + max(rq.budget_seconds - spent[rq.name], 0.0)
        try:
            rows = process_window(rq, w, d, r_mat, workers, deadline)
        except BudgetExceeded:
            spent[rq.name] += time.perf_counter() - t0
            m.timed_out = True
            m.errors.append({"seqNo": w.seq_no, "error": "timeout"})
            log.warning("query %s exceeded its time budget at window %d", rq.name, w.seq_no)
            return
        except Exception as exc:  # a bad window must not stop the stream
            spent[rq.name] += time.perf_counter() - t0
            m.errors.append({"seqNo": w.seq_no, "error": f"{type(exc).__name__}: {exc}"})
            log.error("query %s failed on window %d: %s", rq.name, w.seq_no, exc)
            return
        elapsed = time.perf_counter() - t0
        spent[rq.name] += elapsed
        emission = Emission(w.seq_no, rq.name, rows)
        emissions.append(emission)
        if sink is not None:
            sink(emission)
        emitted = clock()
        latency = max(dispatch_delay + emitted - picked_up, 0.0)
        m.per_window.append({
            "seqNo": w.seq_no,
            "inputTriples": len(w.triples),
            "resultRows": len(rows),
            "evalMillis": elapsed * 1000.0,
            "latencyMillis": latency * 1000.0,
        })

    def merged(ws: list[Window]) -> Window:
        if len(ws) == 1:
            return ws[0]
        triples = [t for w in ws for t in w.triples]
        return Window(ws[0].seq_no, triples, ws[0].opened_at, ws[-1].closed_at)

    for w in cut_windows(source, window_spec, clock):
        delay = max(clock() - w.closed_at, 0.0)
        for rq in queries:
            buf = pending[rq.name]
            buf.append(w)
            if len(buf) == rq.window_multiplier:
                run_one(rq, merged(buf), delay)
                buf.clear()
    for rq in queries:
        if pending[rq.name]:
            run_one(rq, merged(pending[rq.name]), 0.0)
    return emissions, metrics


def write_results(emissions: Iterable[Emission], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in emissions:
            for line in e.lines():
                fh.write(line + "\n")


def percentile_summary(values: Sequence[float]) -> dict[str, float]:
    if not values:
        return {"p50": 0.0, "p95": 0.0, "max": 0.0}
    arr = np.asarray(values, dtype=float)
    return {"p50": float(np.percentile(arr, 50)), "p95": float(np.percentile(arr, 95)),
            "max": float(arr.max())}
