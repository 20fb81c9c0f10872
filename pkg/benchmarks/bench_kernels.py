"""Time the numpy and numba field kernels and one nonlinear right-hand side.

    python3 benchmarks/bench_kernels.py [--N 64] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from landau_mhd import _kernels as K
from landau_mhd.specfield import Grid


def cases(g, rng):
    w, B, U = (rng.standard_normal(g.phys_shape(3)) for _ in range(3))
    s6 = g.fft(rng.standard_normal(g.phys_shape(6)))
    s3 = s6[:3].copy()
    p6, p3 = np.empty(g.phys_shape(6)), np.empty(g.phys_shape(3))
    o3 = np.empty((3,) + g.spec_shape(), complex)
    args = (g.kx, g.ky, g.kz, g.inv_k2, g.dealias)
    return {
        "stress": lambda k: k["stress"](w, B, U, 1.0, 1.0, 1.0, p6),
        "induction": lambda k: k["induction"](w, B, U, 1.0, 1.0, p3),
        "leray": lambda k: k["leray"](s3, *args, o3),
        "div_sym": lambda k: k["div_sym"](s6, *args, o3),
        "div_anti": lambda k: k["div_anti"](s3, *args, o3),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    g = Grid(args.N, 2 * np.pi)
    fns = cases(g, np.random.default_rng(0))
    backends = [("numpy", K.NUMPY_KERNELS)]
    if K.NUMBA_KERNELS is not None:
        backends.append(("numba", K.NUMBA_KERNELS))
        for f in fns.values():       # compile outside the timing
            f(K.NUMBA_KERNELS)
    print(f"N = {args.N}, best of {args.repeat} (ms)")
    print(f"{'kernel':>10}" + "".join(f"{b:>10}" for b, _ in backends) + f"{'speedup':>10}")
    for name, f in fns.items():
        t = [min(timeit.repeat(lambda: f(k), number=1, repeat=args.repeat)) * 1e3 for _, k in backends]
        sp = f"{t[0] / t[1]:10.2f}" if len(t) > 1 else ""
        print(f"{name:>10}" + "".join(f"{x:10.2f}" for x in t) + sp)
    fft = min(timeit.repeat(lambda: g.fft(np.empty(g.phys_shape(6))), number=1, repeat=args.repeat))
    print(f"{'fft x6':>10}{fft * 1e3:10.2f}  (reference)")


if __name__ == "__main__":
    main()
