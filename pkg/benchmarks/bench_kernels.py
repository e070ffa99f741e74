"""Time the numba and numpy paths of the hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--threads N]

Prints one line per kernel with the best-of-``repeat`` wall time of each
path and the speedup. The first numba call (compilation or cache load) is
excluded.
"""

import argparse
import time

import numpy as np

from safebounds import _accel
from safebounds.value_iteration import _visit_order


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def fill_case(n_states, rng):
    lo = rng.random((n_states, n_states))
    lo /= lo.sum(axis=1, keepdims=True) * 1.5
    hi = np.minimum(1.0, lo * 2.0)
    values = rng.random(n_states)
    return _visit_order(values, True), values, lo, hi


def quad_case(mesh_size, rng):
    nodes = np.linspace(-1.0, 1.0, mesh_size)
    w = np.full(mesh_size, nodes[1] - nodes[0])
    w[[0, -1]] *= 0.5
    return nodes, w, rng.random(mesh_size), nodes.copy(), 0.1


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not available; nothing to compare")
    _accel.set_threads(args.threads)
    rng = np.random.default_rng(0)

    cases = []
    for n in (101, 401, 1001):
        a = fill_case(n, rng)
        cases.append((f"fill_values  n_states={n}", _accel._fill_values_numba, _accel._fill_values_numpy, a))
        w = (a[0], a[2], a[3])
        cases.append((f"fill_witness n_states={n}", _accel._fill_witness_numba, _accel._fill_witness_numpy, w))
    for m in (1001, 4001):
        q = quad_case(m, rng)
        cases.append((f"quadrature   mesh={m}", _accel._gauss_quadrature_numba, _accel._gauss_quadrature_numpy, q))

    print(f"{'kernel':<28}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, f_nb, f_np, a in cases:
        np.testing.assert_allclose(f_nb(*a), f_np(*a), rtol=1e-10, atol=1e-13)
        t_nb = best_of(lambda: f_nb(*a), args.repeat)
        t_np = best_of(lambda: f_np(*a), args.repeat)
        print(f"{name:<28}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
