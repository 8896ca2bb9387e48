"""Events per second of the compiled and pure-Python simulation kernels.

Usage: python3 benchmarks/bench_kernel.py [--particles N] [--horizon T] [--repeat K]
"""

import argparse
import time

from zrpfluid import JumpRateFunction, simulate_zrp, validate_rates
from zrpfluid._backend import BACKEND, KERNELS


def bench(backend, r, g, eta0, t_max, repeat):
    best = float("inf")
    events = 0
    for k in range(repeat):
        start = time.perf_counter()
        ev = simulate_zrp(r, g, eta0, t_max, seed=k, backend=backend)
        best = min(best, time.perf_counter() - start)
        events = len(ev)
    return events, best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--particles", type=int, default=1000)
    parser.add_argument("--horizon", type=float, default=2e4)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    r = validate_rates([[0, 2, 0], [1, 0, 1], [0, 2, 0]])
    eta0 = [args.particles, 0, 0]
    print(f"default backend: {BACKEND}")
    results = {}
    for g in (JumpRateFunction.constant(), JumpRateFunction.evans(2)):
        for name in sorted(KERNELS):
            events, secs = bench(name, r, g, eta0, args.horizon, args.repeat)
            results[g.kind, name] = events / secs
            print(f"{g.kind:9s} {name:7s} {events:9d} events  {secs:8.4f} s  {events / secs:12.0f} events/s")
        if len(KERNELS) == 2:
            print(f"{g.kind:9s} speedup  {results[g.kind, 'cython'] / results[g.kind, 'python']:.1f}x")


if __name__ == "__main__":
    main()
