"""Times the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from roughdelay import _kernels_py, kernels
from roughdelay import constant_segment, from_registry, lift_ito, sample_brownian, semiflow


def cases(rng):
    left, right = rng.standard_normal((2, 512, 32, 2))
    cl, cr = rng.standard_normal((2, 64, 3))
    ca = rng.standard_normal((64, 3, 3))
    mats = 0.3 * rng.standard_normal((256, 6, 6))
    shifts = rng.standard_normal((256, 6, 40))
    z0 = rng.standard_normal((6, 40))
    return {
        "interval_areas 512x32x2": lambda m: m.interval_areas(left, right),
        "chen_table 64x3": lambda m: m.chen_table(cl, cr, ca),
        "affine_recursion 256x6x40": lambda m: m.affine_recursion(mats, shifts, z0),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':28s} {'python ms':>10s} {'active ms':>10s} {'speedup':>8s}")
    for name, fn in cases(np.random.default_rng(0)).items():
        py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        act = min(timeit.repeat(lambda: fn(kernels), number=1, repeat=args.repeat))
        print(f"{name:28s} {py * 1e3:10.3f} {act * 1e3:10.3f} {py / act:8.1f}")
    path = sample_brownian(1, -1.0, 20.0, 1 / 32 / 32, 0)
    t = timeit.default_timer()
    rp = lift_ito(path, 1 / 32, 1.0, t0=0.0, t_end=20.0)
    semiflow(constant_segment(rp, -1.0, 1.0), rp, from_registry("sine_product"), 20)
    print(f"lift + 20 segments (N=32, R=32): {(timeit.default_timer() - t) * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
