# The Q1-Q8 benchmark on a small dataset; writes a report under ./bench_out.
import json

from rsreason.bench import BenchmarkSpec, GeneratorConfig, run_benchmark
from rsreason.sparql import CountTumbling

cfg = GeneratorConfig(num_cliques=100, individuals_per_clique=10, seed=7, stream_triples=30_000)
report = run_benchmark(cfg, BenchmarkSpec(window=CountTumbling(10_000)), "bench_out")

print(f"{'query':6s}{'mode':5s}{'joins':>6s}{'unions':>7s}{'rows/window':>22s}{'triples/s':>12s}  verdicts")
for c in report["cells"]:
    s = c["planStats"]
    print(f"{c['query']:6s}{c['mode']:5s}{s['joins']:>6d}{s['unions']:>7d}{str(c['perWindowCounts']):>22s}"
          f"{c['throughputTriplesPerSec']:>12,.0f}  oracle={c['oracleVerdict']} truth={c['truthVerdict']}")
print(json.dumps(report["config"]))
