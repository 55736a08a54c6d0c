"""Compare the compiled kernel backend against the pure-Python fallback.

Per-kernel micro timings run both implementations in-process on shared
inputs and verify they agree before timing.  The end-to-end section
times a small phase-retrieval solve in a child interpreter per backend,
because the backend is fixed at import time.

Usage: python benchmarks/bench_kernels.py [--sizes 64,512,4096]
       [--repeats 200]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from manifold_ris._kernels import _pure

try:
    from manifold_ris._kernels import _speedups
except ImportError:
    _speedups = None

KERNELS = ("ccm_project", "ccm_retract", "ccm_normalize", "ccm_max_dev",
           "ccm_tangent_dev", "real_inner")

END_TO_END = """
import time
import numpy as np
from manifold_ris import solvers
from manifold_ris.manifolds import ComplexCircle, random_point
from manifold_ris.random_access import mask_fit_objective
from manifold_ris._kernels import BACKEND

rng = np.random.default_rng(0)
grid = np.linspace(-0.9, 0.9, 256)
cost, egrad = mask_fit_objective(64, grid, rng.random(256),
                                 0.5 + rng.random(256))
problem = solvers.Problem(ComplexCircle(64), cost, egrad)
start = time.perf_counter()
for seed in range(5):
    solvers.solve_rcg(problem, random_point(ComplexCircle(64), seed),
                      solvers.SolverOptions(max_iters=300))
print(f"{BACKEND} {time.perf_counter() - start:.3f}")
"""


def make_inputs(rng, size):
    x = np.exp(2j * np.pi * rng.random(size))
    v = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return {
        "ccm_project": (x, v),
        "ccm_retract": (x, 0.1 * v),
        "ccm_normalize": (x + 0.01 * v,),
        "ccm_max_dev": (x,),
        "ccm_tangent_dev": (x, v),
        "real_inner": (v, v[::-1].copy()),
    }


def best_of(fn, args, repeats):
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        timings.append(time.perf_counter() - start)
    return min(timings)


def run_micro(sizes, repeats):
    rng = np.random.default_rng(42)
    print(f"{'kernel':<16} {'n':>6} {'pure us':>10} {'compiled us':>12} "
          f"{'speedup':>8}")
    for size in sizes:
        inputs = make_inputs(rng, size)
        for name in KERNELS:
            args = inputs[name]
            pure_fn = getattr(_pure, name)
            t_pure = best_of(pure_fn, args, repeats)
            if _speedups is None:
                print(f"{name:<16} {size:>6} {t_pure * 1e6:>10.2f} "
                      f"{'missing':>12} {'-':>8}")
                continue
            fast_fn = getattr(_speedups, name)
            ref = pure_fn(*args)
            got = fast_fn(*args)
            if not isinstance(ref, tuple):
                ref, got = (ref,), (got,)
            for r, g in zip(ref, got):
                assert np.allclose(r, g, atol=1e-12), name
            t_fast = best_of(fast_fn, args, repeats)
            print(f"{name:<16} {size:>6} {t_pure * 1e6:>10.2f} "
                  f"{t_fast * 1e6:>12.2f} {t_pure / t_fast:>8.2f}")


def run_end_to_end():
    print("\nend-to-end: 5 beam-mask solves, 300 iterations each")
    for force_pure in (False, True):
        env = dict(os.environ)
        env.pop("MANIFOLD_RIS_PURE", None)
        if force_pure:
            env["MANIFOLD_RIS_PURE"] = "1"
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                             capture_output=True, text=True, check=True)
        backend, seconds = out.stdout.split()
        print(f"  {backend:<9} {float(seconds):.3f} s")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="64,512,4096",
                        help="comma-separated vector lengths")
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--skip-end-to-end", action="store_true")
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    run_micro(sizes, args.repeats)
    if not args.skip_end_to_end:
        run_end_to_end()


if __name__ == "__main__":
    main()
