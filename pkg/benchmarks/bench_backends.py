"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from predscore import _pure, losses, models, scoring
from predscore.data import lagged_features
from predscore.models import researcher_model_specs
from predscore.simulation import SimConfig, simulate_setting

try:
    from predscore import _core
except ImportError:  # extension not built
    _core = None


def kernel_cases(rng):
    s = np.round(rng.normal(size=500), 2)
    y = rng.integers(0, 2, 500).astype(np.int8)
    order = np.argsort(s, kind="stable")
    a, b = np.sort(rng.normal(size=2000)), np.sort(rng.normal(size=2000))
    x, z = rng.normal(size=25), rng.normal(size=25)
    X = np.column_stack([np.ones(30), rng.normal(size=(30, 1))])
    yy = rng.integers(0, 2, 30).astype(np.float64)
    w = rng.uniform(1, 5, 30)
    return {
        "auc_from_order (n=500)": lambda k: k.auc_from_order(s, y, order),
        "pr_auc_from_order (n=500)": lambda k: k.pr_auc_from_order(s, y, order),
        "ks_sorted (2 x 2000)": lambda k: k.ks_sorted(a, b),
        "dcov_sq (n=25)": lambda k: k.dcov_sq(x, z),
        "irls (30 patterns, p=2)": lambda k: k.irls(X, yy, w, np.zeros(2), 50, 1e-8, 30.0),
    }


def end_to_end(kernels):
    losses.kernels = models.kernels = kernels
    tau = lagged_features(simulate_setting(SimConfig(), 0.0, 1))
    tau_prime = lagged_features(simulate_setting(SimConfig(), 0.5, 2))
    spec = researcher_model_specs()[0]
    return lambda: scoring.prediction_score(tau, tau_prime, spec, K=10, scheme="subsample", subset_size=500)


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = [("python", _pure)] + ([("cython", _core)] if _core is not None else [])
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s}" + "".join(f"{n:>14s}" for n, _ in backends) + "     speedup")
    for name, case in kernel_cases(rng).items():
        times = [best(lambda: case(k), args.repeat, 200) for _, k in backends]
        ratio = f"{times[0] / times[-1]:10.1f}x" if len(times) > 1 else ""
        print(f"{name:32s}" + "".join(f"{t * 1e6:12.1f}us" for t in times) + ratio)
    original = losses.kernels
    times = []
    for _, k in backends:
        run = end_to_end(k)
        times.append(best(run, max(1, args.repeat // 2), 1))
    losses.kernels = models.kernels = original
    ratio = f"{times[0] / times[-1]:10.1f}x" if len(times) > 1 else ""
    print(f"{'prediction_score (K=10, S=200)':32s}" + "".join(f"{t:13.2f}s" for t in times) + ratio)


if __name__ == "__main__":
    main()
