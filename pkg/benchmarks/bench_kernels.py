"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 64 4096 65536] [--repeat 7]

``dispatch`` is what the package uses: compiled loops below the crossover
sizes in ``groupfisher._kernels``, numpy above.  Kernel inputs are real quadrature arrays (2D Gauss-Hermite nodes over the
correlated model).  Reports the best-of-``repeat`` time per call for each
kernel and size, and an end-to-end proportionality check with each backend
swapped in.
"""

import argparse
import timeit

import numpy as np

import groupfisher.geometry as geometry
import groupfisher.group_core as group_core
from groupfisher import Tsallis, correlated2d, verify_theorem
from groupfisher import _kernels, _pykernels
from groupfisher.numerics import gauss_hermite_rule

try:
    from groupfisher import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_time(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def kernel_cases(n):
    """Inputs as the quadrature sees them: a 2D tensor rule of order sqrt(n) over the correlated model."""
    order = int(round(np.sqrt(n)))
    p, q = correlated2d(r=0.6), correlated2d(mu_x=0.05, sigma=1.05, r=0.6)
    x, logw = gauss_hermite_rule(*p.frame(), order)
    logp = p.log_density(x)
    t = logp - q.log_density(x)
    scores = p.score(x)
    return {
        "group_eval": lambda k: k.group_eval(1, 0.5, 0.0, t),
        "weighted_group_sum": lambda k: k.weighted_group_sum(3, 0.2, 0.3, logw, logp, t),
        "weighted_outer_sum": lambda k: k.weighted_outer_sum(logw, scores),
    }


def swap_backend(module):
    group_core._kernels = module
    geometry._kernels = module


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[64, 4096, 65536], help="node counts (perfect squares)")
    parser.add_argument("--repeat", type=int, default=7)
    parser.add_argument("--skip-end-to-end", action="store_true")
    args = parser.parse_args(argv)

    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
        backends["dispatch"] = _kernels

    print(f"{'kernel':<20}{'n':>8}" + "".join(f"{name + ' [us]':>16}" for name in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        for name, case in kernel_cases(n).items():
            times = {b: best_time(lambda: case(mod), args.repeat) for b, mod in backends.items()}
            speedup = times["python"] / times["dispatch"] if "dispatch" in times else float("nan")
            print(f"{name:<20}{n:>8}" + "".join(f"{1e6 * times[b]:>16.2f}" for b in backends) + f"{speedup:>9.1f}x")

    if args.skip_end_to_end:
        return
    original = group_core._kernels
    fam = correlated2d(r=0.6)
    print("\nverify_theorem(Tsallis(0.5), correlated2d r=0.6), Hessian estimator")
    try:
        for b, mod in backends.items():
            swap_backend(mod)
            print(f"  {b:<8} {best_time(lambda: verify_theorem(Tsallis(0.5), fam), 3):.3f} s")
    finally:
        swap_backend(original)


if __name__ == "__main__":
    main()
