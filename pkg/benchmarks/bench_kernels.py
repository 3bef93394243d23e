"""Benchmark the compiled kernel core against the NumPy fallback.

Runs each hot kernel on representative workloads in a subprocess per
backend (the backend is chosen at import time via ENHBENCH_NO_EXT) and
prints a comparison table.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = [
    ("convolve 512x512 k7", "conv", 512, 7),
    ("convolve 512x512 k15", "conv", 512, 15),
    ("bilateral 256x256 r4", "bilateral", 256, 4),
    ("bilateral 256x256 r8", "bilateral", 256, 8),
    ("blind_deconvolve 128x128 it10", "blind", 128, 10),
]


def run_workloads(repeats: int) -> dict:
    import numpy as np

    from enhbench import KERNEL_BACKEND
    from enhbench._kernels import bilateral_filter, convolve2d_mirror
    from enhbench.enhance import blind_deconvolve

    rng = np.random.default_rng(0)
    results = {"backend": KERNEL_BACKEND, "timings": {}}
    for name, kind, size, param in WORKLOADS:
        img = rng.random((size, size))
        if kind == "conv":
            k = rng.random((param, param))
            k /= k.sum()
            fn = lambda: convolve2d_mirror(img, k)
        elif kind == "bilateral":
            stack = img[None, :, :]
            fn = lambda: bilateral_filter(stack, img, param, param / 2.0, 0.1)
        else:
            fn = lambda: blind_deconvolve(img, param, 3)
        fn()  # warm up
        best = min(_timed(fn) for _ in range(repeats))
        results["timings"][name] = best
    return results


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(run_workloads(args.repeats)))
        return 0

    rows = {}
    for backend_env in ("", "1"):
        env = dict(os.environ, ENHBENCH_NO_EXT=backend_env)
        if not backend_env:
            env.pop("ENHBENCH_NO_EXT")
        out = subprocess.run(
            [sys.executable, __file__, "--worker", "--repeats", str(args.repeats)],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        data = json.loads(out.stdout)
        rows[data["backend"]] = data["timings"]

    backends = list(rows)
    print(f"{'workload':34s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, *_ in WORKLOADS:
        times = [rows[b][name] for b in backends]
        speedup = times[-1] / times[0] if times[0] > 0 else float("inf")
        print(
            f"{name:34s}"
            + "".join(f"{t * 1e3:10.1f}ms" for t in times)
            + f"{speedup:9.2f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
