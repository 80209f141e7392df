"""Compare the compiled and numpy kernels on synthetic receiver logs.

    python benchmarks/bench_kernels.py [--epochs 2000000] [--window 300] [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from rmode_toa import _kernels_py

try:
    from rmode_toa import _ckernels
except ImportError:
    _ckernels = None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--epochs", type=int, default=2_000_000)
    ap.add_argument("--window", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    raw = np.mod(np.cumsum(rng.normal(0, 0.5, args.epochs)), 2 * math.pi)
    snr = rng.uniform(0, 20, args.epochs)
    seg = np.array([0], dtype=np.int64)
    starts = np.arange(0, args.epochs - args.window + 1, args.window, dtype=np.int64)
    cont = _kernels_py.unwrap(raw, seg)

    backends = [("python", _kernels_py)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled extension not available; timing numpy fallback only")

    print(f"{args.epochs} epochs, window {args.window}, best of {args.repeat}")
    timings = {}
    for name, mod in backends:
        t_un = min(timeit.repeat(lambda: mod.unwrap(raw, seg), number=1, repeat=args.repeat))
        t_win = min(
            timeit.repeat(lambda: mod.window_stats(cont, snr, starts, args.window), number=1, repeat=args.repeat)
        )
        timings[name] = (t_un, t_win)
        print(f"  {name:7s} unwrap {t_un * 1e3:8.2f} ms   window_stats {t_win * 1e3:8.2f} ms")
    if len(timings) == 2:
        (pu, pw), (cu, cw) = timings["python"], timings["cython"]
        print(f"  speedup unwrap x{pu / cu:.1f}, window_stats x{pw / cw:.1f}")


if __name__ == "__main__":
    main()
