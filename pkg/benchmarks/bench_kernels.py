"""Time the compiled and pure-Python kernels on the workloads that dominate runtime.

    python3 benchmarks/bench_kernels.py [--repeat N]

Reports phi on a grid of thresholds, one psi_weighted evaluation and one full
weight optimization for each backend, and checks both give the same numbers.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from artifact import _backend, optweights, sdim
from artifact.geometry import SubspacePrior

PRIOR = SubspacePrior(10, 3, 3, [0.0196, 0.0156, 0.005], [0.0258, 0.0146, 0.0098])
TAUS = np.linspace(0.0, 2.5, 200)


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads(repeat: int) -> dict[str, tuple[float, object]]:
    return {
        "phi x200": best_of(lambda: _backend.kernels.phi_many(TAUS, 0.5, 1e-9), repeat),
        "psi_weighted": best_of(lambda: sdim.psi_weighted((0.2, 0.9, 1.1), PRIOR), repeat),
        "optimize_weights": best_of(lambda: optweights.optimize_weights(PRIOR).m_hat, max(1, repeat // 5)),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    results = {}
    for name in ("python", "compiled"):
        try:
            _backend.use(name)
        except ImportError:
            print(f"{name}: not available (build the extension with pip install -e .)")
            continue
        results[name] = workloads(args.repeat)
    _backend.use("auto")
    print(f"{'workload':<18}" + "".join(f"{b:>14}" for b in results) + f"{'speedup':>10}")
    for key in next(iter(results.values())):
        times = [results[b][key][0] for b in results]
        row = f"{key:<18}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
            a, b = (np.asarray(results[x][key][1], dtype=float) for x in results)
            assert np.allclose(a, b, rtol=1e-10), key
        print(row)


if __name__ == "__main__":
    main()
