"""Compare the compiled and numpy kernels on per-client local-step loops.

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from fedbalance.kernels import HINGE, LOGISTIC, MSE, get_backend


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--steps", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    backends = {}
    for name in ("cython", "numpy"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"{name}: unavailable")
    print(f"{'kind':<9} {'samples':>7} {'dim':>4} " + " ".join(f"{n:>12}" for n in backends)
          + "  speedup")
    for kind_name, kind in (("mse", MSE), ("logistic", LOGISTIC), ("hinge", HINGE)):
        for n, d in ((50, 11), (200, 11), (2000, 51)):
            X = rng.standard_normal((n, d))
            y = np.sign(rng.standard_normal(n))
            w0 = np.zeros(d)
            times = {}
            for name, mod in backends.items():
                t = timeit.repeat(lambda: mod.local_steps(X, y, w0, 0.01, args.steps, kind, 0.0),
                                  number=1, repeat=args.repeats)
                times[name] = min(t)
            cells = " ".join(f"{times[b] * 1e3:10.3f}ms" for b in backends)
            ratio = times["numpy"] / times["cython"] if len(times) == 2 else float("nan")
            print(f"{kind_name:<9} {n:>7} {d:>4} {cells}  {ratio:6.1f}x")


if __name__ == "__main__":
    main()
