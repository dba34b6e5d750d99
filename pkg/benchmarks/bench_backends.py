"""Compare the compiled event kernel against the pure-Python fallback.

Runs the same workloads on every available backend, reports events per
second, and cross-checks that both backends produce identical firing
counts from the same seed.

    python3 benchmarks/bench_backends.py
    python3 benchmarks/bench_backends.py --scale 4 --repeat 5
"""

import argparse
import time

from hourglass.connections import block_connections, torus_connections
from hourglass.distributions import exponential
from hourglass.engine import available, init_state, run
from hourglass.topology import build_block_network, build_torus


def workloads(scale):
    yield (
        "blocks p=2 k=2 (8 sites, dense inhibition)",
        block_connections(build_block_network(2, 2), 1.0, 0.5, 0.5),
        20_000.0 * scale,
    )
    yield (
        "ring 2N=10, w_I=0.3 w_E=0.05",
        torus_connections(build_torus(1, 5, 2), 0.3, 0.05),
        20_000.0 * scale,
    )
    yield (
        "torus nu=2 16x16 (256 sites), w_I=0.3 w_E=0.05",
        torus_connections(build_torus(2, 8, 2), 0.3, 0.05),
        500.0 * scale,
    )


def bench(conn, horizon, backend, repeat):
    best = float("inf")
    counts = None
    for _ in range(repeat):
        state = init_state(conn, exponential(1.0), seed=0)
        t0 = time.perf_counter()
        stats = run(state, horizon, record=True, backend=backend)
        best = min(best, time.perf_counter() - t0)
        counts = stats.total
    return int(counts.sum()), best, counts


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiply every workload horizon (default 1)")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions, best-of (default 3)")
    args = parser.parse_args()

    names = available()
    print(f"backends: {', '.join(names)}")
    for label, conn, horizon in workloads(args.scale):
        print(f"\n{label}, horizon {horizon:g}")
        reference = None
        for name in names:
            events, seconds, counts = bench(conn, horizon, name, args.repeat)
            rate = events / seconds
            print(f"  {name:>8}: {events:>9} events  {seconds:8.3f}s  {rate:12.0f} ev/s")
            if reference is None:
                reference = counts
            elif (counts != reference).any():
                raise SystemExit(f"backend {name} diverged from {names[0]}")
        if len(names) > 1:
            print("  per-site counts identical across backends")


if __name__ == "__main__":
    main()
