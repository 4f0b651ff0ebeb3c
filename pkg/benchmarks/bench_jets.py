"""Benchmark the compiled jet kernels against the pure-numpy fallback.

Times the hot paths behind every geometry computation: raw series products,
full third-order jets of a composite map, and a complete per-point extrinsic
report.  Run from the repository root:

    python3 benchmarks/bench_jets.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from nullgeom import taylor as tm
from nullgeom.extrinsic import ExtrinsicPoint
from nullgeom.scenes import psi_f_minkowski


def composite(xs):
    a = tm.sin(xs[0]) * tm.cosh(0.5 * xs[1]) + xs[2] ** 3
    b = tm.exp(0.3 * xs[1]) / (2.0 + tm.tanh(xs[0] * xs[2]))
    return tm.sqrt(1.5 + tm.tanh(a * b)) * tm.arctan(a - b)


def bench_series_products(n=3, order=3, loops=400):
    ctx = tm.get_context(n, order)
    rng = np.random.default_rng(7)
    xs = [
        tm.Series(ctx, rng.uniform(-0.5, 0.5, size=ctx.n_terms))
        for _ in range(4)
    ]
    start = time.perf_counter()
    for _ in range(loops):
        acc = xs[0]
        for s in xs[1:]:
            acc = acc * s + s
        acc = acc * acc
    return time.perf_counter() - start


def bench_composite_jets(loops=150):
    rng = np.random.default_rng(11)
    pts = rng.uniform(-0.8, 0.8, size=(loops, 3))
    start = time.perf_counter()
    for row in pts:
        tm.jet_eval(composite, row, 3)
    return time.perf_counter() - start


def bench_extrinsic_reports(loops=60):
    im = psi_f_minkowski(2, lambda ys: 1.0 + 0.3 * ys[0] ** 2)
    rng = np.random.default_rng(13)
    pts = rng.uniform(-1.2, 1.2, size=(loops, 2))
    start = time.perf_counter()
    for row in pts:
        ExtrinsicPoint(im, row).report()
    return time.perf_counter() - start


BENCHES = [
    ("series products (n=3, order 3)", bench_series_products),
    ("order-3 jets of a composite map", bench_composite_jets),
    ("full extrinsic point reports", bench_extrinsic_reports),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats")
    args = parser.parse_args()

    backends = ["pure"]
    try:
        tm.use_backend("compiled")
        backends.insert(0, "compiled")
    except RuntimeError:
        print("compiled kernels unavailable; timing the pure backend only\n")

    results = {}
    for backend in backends:
        tm.use_backend(backend)
        for label, fn in BENCHES:
            results[backend, label] = min(fn() for _ in range(args.repeats))

    width = max(len(label) for label, _ in BENCHES)
    header = f"{'benchmark':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, _ in BENCHES:
        cells = "".join(f"{results[b, label]:>11.4f}s" for b in backends)
        line = f"{label:<{width}}  {cells}"
        if len(backends) == 2:
            ratio = results["pure", label] / results["compiled", label]
            line += f"{ratio:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
