"""Benchmark the ECF kernels: numpy fallback vs the Cython extension.

Times the forward/backward pair across batch/frequency sizes, then a short
end-to-end training burst under each backend. Run from the repo root:

    python3 benchmarks/bench_ecf.py [--train-iters 200]
"""

import argparse
import time

import numpy as np

from rcfgan.kernels import available_backends, get_backend


def time_call(fn, *args, repeats=7):
    """Best-of wall time in seconds; best-of suppresses scheduler noise."""
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(sizes, repeats):
    rng = np.random.default_rng(0)
    rows = []
    for n, m, k in sizes:
        samples = rng.standard_normal((n, m))
        freqs = rng.standard_normal((k, m))
        g_re = rng.standard_normal(k)
        g_im = rng.standard_normal(k)
        per_backend = {}
        for name in available_backends():
            backend = get_backend(name)
            fwd = time_call(backend["ecf_forward"], samples, freqs,
                            repeats=repeats)
            _, _, cache = backend["ecf_forward"](samples, freqs)

            def run_backward():
                backend["ecf_backward"](samples, freqs, cache, g_re, g_im,
                                        True, True)

            bwd = time_call(run_backward, repeats=repeats)
            per_backend[name] = (fwd, bwd)
        rows.append(((n, m, k), per_backend))
    return rows


_TRAIN_SNIPPET = """
import time
from rcfgan.datasets import MixtureStream, preset
from rcfgan.kernels import BACKEND
from rcfgan.train import TrainConfig, train

cfg = TrainConfig(iterations={iters}, seed=0)
stream = MixtureStream(preset("ring8"))
t0 = time.perf_counter()
train(cfg, stream)
print(f"{{BACKEND}} {{time.perf_counter() - t0:.3f}}")
"""


def bench_training(iters, backend_name):
    """A short default-config burst on ring8 in a fresh process, so the
    backend choice goes through the documented RCFGAN_BACKEND switch."""
    import os
    import subprocess
    import sys

    env = dict(os.environ, RCFGAN_BACKEND=backend_name)
    out = subprocess.run([sys.executable, "-c",
                          _TRAIN_SNIPPET.format(iters=iters)],
                         env=env, capture_output=True, text=True, check=True)
    reported_backend, wall = out.stdout.split()
    if reported_backend != backend_name:
        raise RuntimeError(f"asked for {backend_name}, subprocess ran "
                           f"{reported_backend}")
    return float(wall)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--train-iters", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    names = available_backends()
    print(f"backends available: {', '.join(names)}")
    if "compiled" not in names:
        print("compiled extension not built; numbers below cover the "
              "numpy fallback only")

    sizes = [(64, 2, 64), (256, 2, 64), (1024, 2, 64),
             (64, 32, 64), (256, 32, 256), (1024, 64, 256)]
    print(f"\nkernel timings, best of {args.repeats} (microseconds)")
    header = f"{'n':>6} {'m':>4} {'k':>5}"
    for name in names:
        header += f"  {name + ' fwd':>14} {name + ' bwd':>14}"
    if len(names) == 2:
        header += f"  {'speedup fwd':>12} {'speedup bwd':>12}"
    print(header)
    for (n, m, k), per_backend in bench_kernels(sizes, args.repeats):
        line = f"{n:>6} {m:>4} {k:>5}"
        for name in names:
            fwd, bwd = per_backend[name]
            line += f"  {fwd * 1e6:>14.1f} {bwd * 1e6:>14.1f}"
        if len(names) == 2:
            nf, nb = per_backend["numpy"]
            cf, cb = per_backend["compiled"]
            line += f"  {nf / cf:>12.2f} {nb / cb:>12.2f}"
        print(line)

    print(f"\ntraining burst: ring8, default config, "
          f"{args.train_iters} iterations")
    for name in names:
        wall = bench_training(args.train_iters, name)
        rate = args.train_iters / wall
        print(f"  {name:>8}: {wall:.2f}s  ({rate:.1f} it/s)")


if __name__ == "__main__":
    main()
