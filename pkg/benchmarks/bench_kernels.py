"""Time the compiled and numpy kernel backends on identical inputs.

    python benchmarks/bench_kernels.py [--samples N] [--repeat R]

Prints one line per (kernel, backend) with the best wall time and the
throughput, and checks that both backends return the same result.
"""

import argparse
import time

import numpy as np

from qubitsim import _core


def cases(samples: int):
    g = np.random.default_rng(0)
    u4 = g.random((samples, 4))
    u2 = np.ascontiguousarray(u4[:, :2])
    axes = [a / np.linalg.norm(a) for a in g.normal(size=(3, 3))]
    s0 = np.where(g.random(samples) < 0.5, 1, -1).astype(np.int8)
    fb = _core.get_backend("python")
    r, _ = fb.bob_reduced_batch(u4, axes[0])
    s, rf = fb.bob_full_batch(u4, s0, axes[0], axes[2])
    return {
        "model1_stay_count": (u2, axes[0], axes[1]),
        "model2_counts": (u4, axes[0], axes[1]),
        "bob_reduced_batch": (u4, axes[0]),
        "alice_reduced_batch": (u4, r, axes[1]),
        "bob_full_batch": (u4, s0, axes[0], axes[2]),
        "alice_full_batch": (u4, s, rf, axes[1], axes[2]),
    }


def best_time(fn, args, repeat: int):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t)
    return best, out


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return bool(np.array_equal(a, b))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    backends = _core.available_backends()
    print(f"backends: {', '.join(backends)}; samples per call: {args.samples}")
    print(f"{'kernel':<22}{'backend':<9}{'best s':>10}{'Msamples/s':>12}{'speedup':>9}")
    for name, kargs in cases(args.samples).items():
        results = {}
        for b in backends:
            results[b] = best_time(getattr(_core.get_backend(b), name), kargs, args.repeat)
        ref = results["python"][0]
        for b, (t, _) in results.items():
            print(f"{name:<22}{b:<9}{t:>10.4f}{args.samples / t / 1e6:>12.1f}{ref / t:>8.2f}x")
        outs = [o for _, o in results.values()]
        if not all(same(outs[0], o) for o in outs[1:]):
            raise SystemExit(f"{name}: backends disagree")


if __name__ == "__main__":
    main()
