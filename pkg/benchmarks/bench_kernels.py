"""Benchmark the superposition kernels: compiled extension vs NumPy fallback.

Times superpose_eval and superpose_eval_grad on identical inputs for both
backends and reports throughput in wave-point products per second, the
quantity both kernels scale with. Also cross-checks that the backends agree
to rounding so a speedup never comes from computing something different.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --points 200000 --waves 125 --threads 4
"""
import argparse
import time

import numpy as np

from diracbohm._kernels import numpy_backend

try:
    from diracbohm._kernels import _corekernels
except ImportError:
    _corekernels = None


def make_case(rng, waves, points):
    phases = rng.normal(size=(waves, 4))
    coeffs = rng.normal(size=(waves, 4)) + 1j * rng.normal(size=(waves, 4))
    pts = rng.uniform(-3.0, 3.0, size=(points, 4))
    return (
        np.ascontiguousarray(phases),
        np.ascontiguousarray(coeffs),
        np.ascontiguousarray(pts),
    )


def best_seconds(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run(args):
    backends = [("numpy", numpy_backend)]
    if _corekernels is not None:
        _corekernels.set_num_threads(args.threads)
        backends.append(("cython", _corekernels))
    else:
        print("compiled extension not available, timing the fallback only\n")

    rng = np.random.default_rng(args.seed)
    header = (
        f"{'kernel':<10} {'backend':<8} {'waves':>6} {'points':>8} "
        f"{'best ms':>9} {'Mwp/s':>9} {'speedup':>8}"
    )
    print(header)
    print("-" * len(header))
    for waves in args.waves:
        for points in args.points:
            case = make_case(rng, waves, points)
            for kernel in ("eval", "eval_grad"):
                reference = None
                base_time = None
                for name, impl in backends:
                    fn = (impl.superpose_eval if kernel == "eval"
                          else impl.superpose_eval_grad)
                    out = fn(*case)
                    vals = out[0] if kernel == "eval_grad" else out
                    if reference is None:
                        reference = vals
                        agreement = 0.0
                    else:
                        scale = np.abs(reference).max() or 1.0
                        agreement = np.abs(vals - reference).max() / scale
                        if agreement > 1e-12:
                            raise SystemExit(
                                f"backends disagree by {agreement:.2e} on "
                                f"{kernel} waves={waves} points={points}"
                            )
                    sec = best_seconds(fn, case, args.repeats)
                    if base_time is None:
                        base_time = sec
                    throughput = waves * points / sec / 1e6
                    print(
                        f"{kernel:<10} {name:<8} {waves:>6} {points:>8} "
                        f"{sec * 1e3:>9.2f} {throughput:>9.1f} "
                        f"{base_time / sec:>7.2f}x"
                    )
    print("\nbackends agree to rounding on every case")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--waves", type=int, nargs="+", default=[8, 64, 125])
    parser.add_argument("--points", type=int, nargs="+", default=[4096, 65536])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    run(parser.parse_args())


if __name__ == "__main__":
    main()
