"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 20]

Times the scalar resolvent solves, the per-mode 2x2 solve, and a short
simulation under each backend, and prints the speedup.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from chsmc import kernels


def bench_kernels(repeat: int) -> None:
    if kernels.compiled is None:
        print("compiled extension not built; only the NumPy backend is available")
        return
    rng = np.random.default_rng(0)
    r = rng.uniform(-3, 3, 4096)
    rl = rng.uniform(-6, 6, 4096)
    lam = (np.pi * np.arange(4096)) ** 2
    r1, r2 = rng.standard_normal(4096), rng.standard_normal(4096)
    cases = {
        "resolvent polynomial (4096)": lambda m: m.resolvent(kernels.POLYNOMIAL, 1e-2, r),
        "resolvent logarithmic (4096)": lambda m: m.resolvent(kernels.LOGARITHMIC, 1e-2, rl),
        "solve_modes (4096)": lambda m: m.solve_modes(lam, 1e-4, 1.0, 1e-3, 0.5, 0.0, r1, r2),
    }
    print(f"{'kernel':<30} {'numpy us':>10} {'cython us':>10} {'speedup':>8}")
    for name, fn in cases.items():
        t = {}
        for label, mod in (("numpy", kernels.pure), ("cython", kernels.compiled)):
            t[label] = min(timeit.repeat(lambda: fn(mod), number=20, repeat=repeat)) / 20 * 1e6
        print(f"{name:<30} {t['numpy']:>10.1f} {t['cython']:>10.1f} {t['numpy'] / t['cython']:>7.1f}x")


SIM = """
import time
from chsmc.config import load_config, preset_path
from chsmc.stepper import prepare_initial_state, run
cfg = load_config(preset_path("doublewell_1d")).with_(T=0.5)
p = cfg.model_params()
th, ph = cfg.initial_data()
s = prepare_initial_state(th, ph, p)
t0 = time.perf_counter()
run(s, p)
print(time.perf_counter() - t0)
"""


def bench_simulation() -> None:
    print("\ndoublewell_1d, 5000 steps (separate processes):")
    times = {}
    for label, pure in (("numpy", "1"), ("cython", "0")):
        env = dict(os.environ, CHSMC_PURE=pure)
        out = subprocess.run([sys.executable, "-c", SIM], env=env, capture_output=True, text=True, check=True)
        times[label] = float(out.stdout.strip())
        print(f"  {label:<7} {times[label]:.2f} s")
    print(f"  speedup {times['numpy'] / times['cython']:.1f}x")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=10)
    args = ap.parse_args()
    bench_kernels(args.repeat)
    bench_simulation()
