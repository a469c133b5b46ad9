"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N] [--scale S]

Both backends run on identical inputs; the script also checks that their
outputs are bitwise equal before reporting speedups.
"""

import argparse
import time

import numpy as np

from diol import kernels


def _cases(scale):
    rng = np.random.default_rng(0)
    n_samples = 100_000 * scale
    x = rng.normal(size=n_samples)
    rms = np.abs(rng.normal(size=1_000 * scale))
    Z = rng.normal(size=(2_000 * scale, 5))
    C = Z[:3].copy()
    mask = (np.arange(n_samples) // 500 % 2).astype(np.uint8)
    return {
        "rms_windows": (x, 100, 100),
        "rolling_mean_std": (rms, 10),
        "column_mean_std": (Z,),
        "assign_points": (Z, C),
        "lloyd(3 iters)": (Z, C, 3),
        "normal_fill": (0x9E3779B97F4A7C15, n_samples),
        "render_current": (mask, x, 1.2, 60.0, 1000.0, 0.05),
    }


def _fn(mod, label):
    return getattr(mod, label.split("(")[0])


def _best(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _equal(a, b):
    if isinstance(a, tuple):
        return all(_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.shape == b.shape and a.tobytes() == b.tobytes()
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=int, default=1)
    args = ap.parse_args(argv)

    names = kernels.available_backends()
    if "cython" not in names:
        print("compiled kernels are not built; only the Python backend is available")
    mods = {name: kernels.load_backend(name) for name in names}
    print(f"{'kernel':<18}" + "".join(f"{n + ' (ms)':>14}" for n in names) + f"{'speedup':>10}  equal")
    for label, case in _cases(args.scale).items():
        times, outs = {}, {}
        for name, mod in mods.items():
            times[name], outs[name] = _best(_fn(mod, label), case, args.repeat)
        row = f"{label:<18}" + "".join(f"{times[n] * 1e3:>14.2f}" for n in names)
        if len(names) == 2:
            row += f"{times['python'] / times['cython']:>9.1f}x  {_equal(outs['cython'], outs['python'])}"
        print(row)


if __name__ == "__main__":
    main()
