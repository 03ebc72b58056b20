# sameAs cliques: one id per clique instead of k*k materialized triples.
from rsreason.rdf_model import Iri
from rsreason.sameas import build_cliques, materialized_count

e = lambda x: Iri(f"http://example.org/{x}")  # noqa: E731
d = build_cliques([(e("a"), e("b")), (e("b"), e("c")), (e("d"), e("e")), (e("f"), e("g")), (e("g"), e("h"))])
for cid, members in d.clique_members.items():
    print(cid, "representative", d.representative_of(cid), "members", [str(m) for m in members])
print("lookup c ->", d.lookup(e("c")))

# how the materialized set grows with clique size
for n, k in [(1000, 10), (1000, 25), (1000, 50), (1000, 100)]:
    pairs = []
    for c in range(n):
        ms = [e(f"c{c}_{j}") for j in range(k)]
        pairs += list(zip(ms, ms[1:]))
    print(f"{n // 1000}k-{k}: {materialized_count(build_cliques(pairs)):>10,} sameAs triples to materialize")
