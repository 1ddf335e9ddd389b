"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat N] [--json]

Times each hot-path kernel on both backends plus a full reactive run, and
checks that the two backends produce identical event logs.
"""
import argparse
import json
import timeit

import numpy as np

from catnet import kernels
from catnet.chem_core import Alphabet, generate_valid_chemistry
from catnet.engine import ReactorConfig, run
from catnet.kinetics import KineticParams


def bench_tree(kern, n=4096, ops=20_000):
    rng = np.random.default_rng(0)
    idx = rng.integers(0, n, ops)
    vals = rng.random(ops)
    us = rng.random(ops)
    t = kern.SumTree(n)

    def go():
        for i, v, u in zip(idx.tolist(), vals.tolist(), us.tolist()):
            t.set1(i, v)
            t.select(u * t.total)
    return go


def bench_refresh(kern, n=20_000):
    rng = np.random.default_rng(1)
    x = rng.integers(0, 50, 1000).astype(np.int64)
    rate = rng.random(n)
    mode = rng.integers(0, 6, n).astype(np.int8)
    ia, ib, id_, ie = (rng.integers(0, 1000, n).astype(np.int64) for _ in range(4))
    t = kern.SumTree(n)
    idx = np.arange(n, dtype=np.int64)
    return lambda: kern.refresh(t, idx, rate, mode, ia, ib, id_, ie, x)


def bench_draws(kern, templates=20_000, catalysts=200):
    rng = np.random.default_rng(2)
    th = rng.integers(0, 2**63, templates, dtype=np.uint64)
    hc = rng.integers(0, 2**63, catalysts, dtype=np.uint64)
    return lambda: kern.draw_pairs(th, hc, 7, 2**43)


def reactive_case():
    al = Alphabet()
    cfg = ReactorConfig(t_end=300, influx_max_length=3)
    influx = cfg.influx_sequences(al)
    species = list(dict.fromkeys(cfg.initial_sequences(al) + influx))
    chem = generate_valid_chemistry(species, influx, 1e-2, 0)
    return chem, cfg, KineticParams(volume=1e-18)


def bench_run(name, case):
    chem, cfg, params = case
    return lambda: run(chem, cfg, params, 1, backend=name)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print machine-readable results")
    args = ap.parse_args(argv)

    names = kernels.available()
    case = reactive_case()
    benches = {
        "sumtree set+select (20k)": lambda name: bench_tree(kernels.get_backend(name)),
        "refresh (20k channels)": lambda name: bench_refresh(kernels.get_backend(name)),
        "draw_pairs (20k x 200)": lambda name: bench_draws(kernels.get_backend(name)),
        "full run (300 s)": lambda name: bench_run(name, case),
    }
    results = {}
    for label, make in benches.items():
        results[label] = {}
        for name in names:
            fn = make(name)
            results[label][name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))

    if len(names) > 1:
        a = run(*case, 1, backend="python").events
        b = run(*case, 1, backend="cython").events
        identical = a == b
    else:
        identical = None

    if args.json:
        print(json.dumps({"backends": names, "seconds": results, "identical_events": identical}, indent=2))
        return 0
    header = f"{'benchmark':28s}" + "".join(f"{n:>12s}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10s}"
    print(header)
    for label, row in results.items():
        line = f"{label:28s}" + "".join(f"{row[n]:11.4f}s" for n in names)
        if len(names) > 1:
            line += f"{row['python'] / row['cython']:9.1f}x"
        print(line)
    if identical is not None:
        print(f"event logs identical across backends: {identical}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
