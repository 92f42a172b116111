"""Benchmark the numba kernels against the pure-numpy fallback.

Times the two hot paths: composing a 512-segment drive-stroke map (the
optimizer's inner loop) and a 2000-cycle noisy ensemble (the Monte Carlo
workload).  Run:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from spinotto import _kernels_numpy as knp
from spinotto.dynamics import segment_ladder

try:
    from spinotto import _kernels_numba as knb

    BACKENDS = [("numpy", knp), ("numba", knb)]
except ImportError:
    print("numba not available; timing numpy only")
    BACKENDS = [("numpy", knp)]

OM_B, OM_A, J = 12.6355, 5.08364, 2.0


def bench(label, fn, repeat, warmup=2):
    for _ in range(warmup):
        fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    dt = (time.perf_counter() - t0) / repeat
    print(f"  {label:45s} {dt * 1e3:10.3f} ms/call")
    return dt


def main():
    n_seg = 512
    om = segment_ladder(OM_B, OM_A, n_seg, "midpoint")
    dts = np.full(n_seg, 0.01478 / n_seg)

    n_cyc, n = 2000, 200
    rng = np.random.default_rng(0)
    om_ba = np.tile(segment_ladder(OM_B, OM_A, n, "endpoint"), (n_cyc, 1))
    om_ab = np.tile(segment_ladder(OM_A, OM_B, n, "endpoint"), (n_cyc, 1))
    dt_ba = 0.01478 / n + 0.0137 * rng.uniform(-1.7, 1.7, (n_cyc, n))
    dt_ab = 0.0069 / n + 0.0066 * rng.uniform(-1.7, 1.7, (n_cyc, n))
    Mh = np.eye(5) * 0.8
    ch = np.full(5, 0.01)
    b0 = np.array([-0.5, -0.2, 0.0, 0.0, 0.3])

    results = {}
    for name, mod in BACKENDS:
        print(f"{name} backend:")
        results[name, "map"] = bench(
            f"compose_adiabat_map (n_seg={n_seg})",
            lambda m=mod: m.compose_adiabat_map(om, dts, J, 1.28), 20)
        results[name, "mc"] = bench(
            f"mc_cycles ({n_cyc} cycles x 2x{n} segments)",
            lambda m=mod: m.mc_cycles(b0, Mh, ch, Mh, ch, om_ba, dt_ba,
                                      om_ab, dt_ab, OM_B, OM_A, J, True), 5)

    if len(BACKENDS) == 2:
        print("speedup numba vs numpy:")
        for key, label in [("map", "stroke-map composition"),
                           ("mc", "noisy ensemble")]:
            s = results["numpy", key] / results["numba", key]
            print(f"  {label:45s} {s:10.1f}x")


if __name__ == "__main__":
    main()
