"""Compare the numba kernels against the pure-numpy fallback.

Part 1 times each kernel in-process for both backends. Part 2 times a full
ES-MDA run in subprocesses with and without ``ESMDA_DISABLE_NUMBA``.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from esmda import _kernels

FULL_RUN = """
import time, numpy as np
from esmda import *
times = np.linspace(0.5, 5.0, 10)
model = DeclineCurveModel(times)
clean = model(np.array([np.log(100.0), np.log(0.4)]))
cfg = RunConfig(seed=1, n_e=2000, schedule=equal_weights(8),
                prior=GaussianPrior.from_std([np.log(70.0), np.log(0.2)], [0.5, 0.7]),
                model=model, d_hist=clean, noise=NoiseModel(0.05 * clean))
run_esmda(cfg)  # warm-up / jit compile
t = time.perf_counter(); rec = run_esmda(cfg); dt = time.perf_counter() - t
print(f"{BACKEND} {dt:.3f} {rec.final_mismatch.mean:.6f}")
"""


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5000, 50))
    sims = rng.standard_normal((5000, 200))
    d = rng.standard_normal(200)
    std = rng.uniform(0.5, 1.5, 200)
    mask = std > 0
    times = np.linspace(0, 10, 1000)
    cases = {
        "row_mean": lambda k: k["row_mean"](X),
        "anomalies": lambda k: k["anomalies"](X),
        "misfit": lambda k: k["misfit"](sims, d, std, mask),
        "decline": lambda k: k["decline"](4.6, -1.0, times),
    }
    impls = _kernels.implementations()
    print(f"{'kernel':<12}" + "".join(f"{name:>14}" for name in impls))
    for case, fn in cases.items():
        row = f"{case:<12}"
        for kernels in impls.values():
            fn(kernels)  # compile
            best = min(timeit.repeat(lambda: fn(kernels), number=10, repeat=repeat)) / 10
            row += f"{best * 1e3:>11.3f} ms"
        print(row)


def bench_full_run():
    print("\nfull run (decline model, N_e=2000, N_a=8):")
    for flag in ("0", "1"):
        env = dict(os.environ, ESMDA_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", FULL_RUN], env=env, capture_output=True, text=True, check=True)
        backend, seconds, phi = out.stdout.split()
        print(f"  {backend:<6} {float(seconds):8.3f} s   final mean mismatch {phi}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    bench_kernels(args.repeat)
    bench_full_run()


if __name__ == "__main__":
    main()
