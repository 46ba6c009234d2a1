"""Compare the compiled census kernel with the pure-Python one.

    python benchmarks/bench_kernel.py [--N 200000] [--repeat 3]

Both kernels classify the same range; their outputs are checked for equality
before timings are reported.
"""

import argparse
import sys
import timeit

import numpy as np

from syrlab.kernel import c_census_shard, py_census_shard

MAPS = [(3, 1), (3, -1), (3, 5), (5, 3)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--max-steps", type=int, default=10**5)
    p.add_argument("--max-value", type=int, default=2**128)
    args = p.parse_args(argv)
    if c_census_shard is None:
        print("compiled kernel not built; run `pip install -e .` first", file=sys.stderr)
        return 1

    print(f"{'map':>8} {'N':>9} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for a, b in MAPS:
        call = (a, b, 1, args.N + 1, args.max_steps, args.max_value)
        py_out, c_out = py_census_shard(*call), c_census_shard(*call)
        for x, y in zip(py_out[:3], c_out[:3]):
            if not np.array_equal(x, y):
                print(f"kernels disagree on ({a},{b})", file=sys.stderr)
                return 1
        t_py = min(timeit.repeat(lambda: py_census_shard(*call), number=1, repeat=args.repeat))
        t_c = min(timeit.repeat(lambda: c_census_shard(*call), number=1, repeat=args.repeat))
        print(f"{f'({a},{b})':>8} {args.N:>9} {t_py:>10.3f} {t_c:>10.4f} {t_py / t_c:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
