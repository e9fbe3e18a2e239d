"""Compare the compiled and numpy kernels.

    python3 benchmarks/bench_kernels.py [--size 128] [--repeat 5]

Reports the best-of-``repeat`` wall time per operation and backend.
"""

import argparse
import contextlib
import timeit

import numpy as np

from wconvex import _backend
from wconvex.penalty import PenaltySpec
from wconvex.prox import prox_welsch
from wconvex.regop import FilterBank, build_regularizer, conv_adjoint, conv_forward, default_kernels
from wconvex.solver import DenoiseProblem, SolverConfig, solve


@contextlib.contextmanager
def backend(name):
    saved = _backend.kernels
    _backend.kernels = _backend.get(name)
    try:
        yield
    finally:
        _backend.kernels = saved


def cases(size):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (size, size))
    k = rng.standard_normal((3, 3))
    y = rng.standard_normal(size * size)
    spec = PenaltySpec.welsch(0.2)
    reg = build_regularizer(FilterBank.create(default_kernels(), x.shape), spec, 0.9)
    p = DenoiseProblem(x, reg)
    cfg = SolverConfig(unfold_k=50)
    return {
        "conv_forward 3x3": lambda: conv_forward(x, k),
        "conv_adjoint 3x3": lambda: conv_adjoint(x, k),
        "prox_welsch": lambda: prox_welsch(y, spec),
        "solve 50 iters": lambda: solve(p, cfg),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    names = _backend.available()
    table = {}
    for name in names:
        with backend(name):
            for label, fn in cases(args.size).items():
                fn()  # warm up
                table.setdefault(label, {})[name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))

    print(f"image {args.size}x{args.size}, best of {args.repeat}")
    print(f"{'operation':<20}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, row in table.items():
        line = f"{label:<20}" + "".join(f"{row[n] * 1e3:>10.2f}ms" for n in names)
        if len(names) > 1:
            line += f"{row['python'] / row['cython']:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
