"""Benchmark the compiled GRPO kernels against the pure-numpy fallback.

Run with:  python3 benchmarks/bench_grpo.py [--tokens N] [--repeats R]
"""

import argparse
import time

import numpy as np

from thinkanywhere import _kernels_numpy
from thinkanywhere.kernels import load_backend


def bench(fn, args, repeats):
    fn(*args)  # warm-up (triggers jit compilation on the compiled path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--tokens", type=int, default=2_000_000)
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    compiled = load_backend(force_numpy=False)
    if compiled.BACKEND == "numpy":
        print("compiled backend unavailable; nothing to compare")
        return

    rng = np.random.default_rng(0)
    lp = -rng.random(args.tokens) - 0.1
    lp_old = lp + rng.normal(0, 0.05, args.tokens)
    lp_ref = lp + rng.normal(0, 0.05, args.tokens)
    ratios = np.exp(lp - lp_old)
    kl = np.exp(lp_ref - lp) - (lp_ref - lp) - 1.0

    cases = [
        ("token_ratios", (lp, lp_old)),
        ("kl_terms", (lp, lp_ref)),
        ("clipped_terms", (ratios, kl, 0.7, 0.2, 0.001)),
    ]
    print(f"tokens={args.tokens}  repeats={args.repeats}  (best-of times)")
    print(f"{'kernel':<16}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, call_args in cases:
        t_np = bench(getattr(_kernels_numpy, name), call_args, args.repeats)
        t_nb = bench(getattr(compiled, name), call_args, args.repeats)
        print(f"{name:<16}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms"
              f"{t_np / t_nb:>9.2f}x")


if __name__ == "__main__":
    main()
