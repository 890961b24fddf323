"""Compare the compiled circuit kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 4,8,10,13]

Times one forward pass and one forward+adjoint gradient per backend for each
qubit count (depth 5 by default) and prints the median and the speedup.
"""

import argparse
import statistics
import time

import numpy as np

from qtrl import _kernels_py

try:
    from qtrl import _kernels as _compiled
except ImportError:
    _compiled = None


def _median_ms(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t) * 1e3)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="4,8,10,13")
    ap.add_argument("--depth", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if _compiled is None:
        print("compiled extension not built; only the fallback can run")
    rng = np.random.default_rng(0)
    print(f"{'n':>3} {'op':>9} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        angles = rng.uniform(0, 2 * np.pi, (args.depth, n, 6))
        upstream = rng.normal(size=2 ** n)
        ops = {
            "forward": lambda m: m.run_ansatz(angles, n),
            "gradient": lambda m: m.ansatz_gradient(angles, n, upstream),
        }
        for name, op in ops.items():
            py = _median_ms(lambda: op(_kernels_py), args.repeat)
            if _compiled is None:
                print(f"{n:>3} {name:>9} {py:>10.3f} {'-':>10} {'-':>8}")
                continue
            cy = _median_ms(lambda: op(_compiled), args.repeat)
            print(f"{n:>3} {name:>9} {py:>10.3f} {cy:>10.3f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
