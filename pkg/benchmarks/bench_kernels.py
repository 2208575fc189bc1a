"""Time the compiled kernels against the NumPy fallback, plus one full solver step.

    python benchmarks/bench_kernels.py [--N 401 801] [--repeat 20]

Both backends are imported directly, so one process compares them; the
solver step is timed with whichever backend ``cgl_vortex.kernels`` selected
(set CGL_VORTEX_PURE=1 to force the fallback).
"""

import argparse
import json
import timeit

import numpy as np

from cgl_vortex import _kernels_py as py_k

try:
    from cgl_vortex import _kernels as cy_k
except ImportError:
    cy_k = None


def _field(N, seed=0):
    rng = np.random.default_rng(seed)
    return np.ascontiguousarray(rng.uniform(0.2, 1.0, (N, N)) * np.exp(1j * rng.uniform(0, 2 * np.pi, (N, N))))


def _cases(mod, N):
    u = _field(N)
    v = _field(N, 1)
    h = 2.0 / (N - 1)
    f = np.empty(2001)
    fp = np.empty(2001)
    return {
        "laplacian5": lambda: mod.laplacian5(u, h),
        "nonlinear_flow": lambda: mod.nonlinear_flow(u.copy(), 0.1, 0.3, -0.9),
        "lattice_energy": lambda: mod.lattice_energy(u, h, 0.05),
        "sq_diff_norm": lambda: mod.sq_diff_norm(u, v),
        "shoot_radial": lambda: mod.shoot_radial(0.5831894949, 0.01, 2000, f, fp),
    }


def _best(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_step(N, repeat):
    from cgl_vortex.fields import CGLParams, VortexConfiguration, reference_map
    from cgl_vortex.grid import GridSpec
    from cgl_vortex.kernels import BACKEND
    from cgl_vortex.profile import solve_profile
    from cgl_vortex.solver import CGLSolver, SolverConfig

    spec = GridSpec(2.0, N)
    h = spec.h
    cfg = VortexConfiguration([(-0.4 + 0.3 * h, 0.2 * h), (0.4 + 0.3 * h, 0.2 * h)], [1, -1])
    eps = 4 * h
    u = reference_map(cfg, eps, solve_profile(), spec).values.copy()
    sol = CGLSolver(spec, CGLParams(0.5, eps), SolverConfig(dt=h * h), u)
    return BACKEND, _best(lambda: sol.step_inplace(u), repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[201, 401, 801])
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--json", action="store_true", help="print machine-readable rows")
    args = ap.parse_args(argv)
    rows = []
    for N in args.N:
        py = _cases(py_k, N)
        cy = _cases(cy_k, N) if cy_k is not None else {}
        for name, fn in py.items():
            t_py = _best(fn, args.repeat)
            t_cy = _best(cy[name], args.repeat) if name in cy else float("nan")
            rows.append({"N": N, "kernel": name, "python_s": t_py, "cython_s": t_cy, "speedup": t_py / t_cy})
        backend, t_step = bench_step(N, max(3, args.repeat // 2))
        rows.append({"N": N, "kernel": f"solver_step[{backend}]", "python_s": float("nan"), "cython_s": t_step, "speedup": float("nan")})
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'N':>5} {'kernel':<22} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for r in rows:
        print(f"{r['N']:>5} {r['kernel']:<22} {1e3 * r['python_s']:>12.3f} {1e3 * r['cython_s']:>12.3f} {r['speedup']:>8.1f}")


if __name__ == "__main__":
    main()
