"""Time the compiled and pure-Python kernels on representative problem sizes.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from colorcenter import _kernels, polaron, rates


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    occ = polaron.phonon_configurations(10)
    hw = np.array([0.07, 0.07, 0.06, 0.06, 0.06])
    F = np.array([0.1, 0.1, 0.08, 0.08, 0.08])
    a_i, a_f = rates._alpha(0.072), rates._alpha(0.05)
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(64 ** 3, 3))
    vals = rng.random(64 ** 3)
    return {
        "vibronic_coo O=10 (dim 9009)": lambda k: k.vibronic_coo(occ, hw, F, 0.085),
        "fc_overlap_table 200x200": lambda k: k.fc_overlap_table(a_i, a_f, 1.0647, 200, 200),
        "dipolar_sum 64^3 points": lambda k: k.dipolar_sum(pts, vals, np.zeros(3), 0.1),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _kernels.python}
    if _kernels.compiled is not None:
        backends["cython"] = _kernels.compiled
    print(f"{'kernel':<32}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases().items():
        t = {b: best_of(lambda: fn(k), args.repeat) for b, k in backends.items()}
        speed = f"{t['python'] / t['cython']:9.1f}x" if "cython" in t else "       n/a"
        print(f"{name:<32}" + "".join(f"{t[b] * 1e3:10.2f}ms" for b in backends) + speed)


if __name__ == "__main__":
    main()
