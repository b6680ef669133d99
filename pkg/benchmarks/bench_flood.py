"""Compare the compiled flood kernel against the pure-Python fallback.

Usage: python3 benchmarks/bench_flood.py [--sizes 128,256,512] [--repeats 3]
"""

import argparse
import time

import numpy as np

from fieldseg.geo import GeoTransform, ProbabilityRaster
from fieldseg.segment import extract_seeds
from fieldseg.segment.flood_py import flood as flood_python
from fieldseg.segment.kernel import IMPLEMENTATION, flood as flood_default


def make_case(size: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    gt = GeoTransform(0.0, 0.0, 1.0, 1.0, "local")
    p_ext = rng.random((size, size)).astype(np.float32)
    p_bnd = rng.random((size, size)).astype(np.float32)
    raster = ProbabilityRaster(transform=gt, p_ext=p_ext, p_bnd=p_bnd)
    mask = np.ascontiguousarray(p_ext >= 0.4)
    seeds = extract_seeds(raster, mask, 0.3)
    return raster.p_bnd, mask, seeds


def time_kernel(kernel, p_bnd, mask, seeds, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernel(p_bnd, mask, seeds.copy())
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="128,256,512")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"default kernel implementation: {IMPLEMENTATION}")
    print(f"{'size':>6} {'pixels':>10} {'compiled (s)':>13} {'python (s)':>11} {'speedup':>8}")
    for size in sizes:
        p_bnd, mask, seeds = make_case(size)
        out_c = flood_default(p_bnd, mask, seeds.copy())
        out_py = flood_python(p_bnd, mask, seeds.copy())
        if not np.array_equal(out_c, out_py):
            raise SystemExit(f"kernel outputs differ at size {size}")
        t_c = time_kernel(flood_default, p_bnd, mask, seeds, args.repeats)
        t_py = time_kernel(flood_python, p_bnd, mask, seeds, args.repeats)
        print(f"{size:>6} {size * size:>10} {t_c:>13.4f} {t_py:>11.4f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
