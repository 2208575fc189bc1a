"""Experiment orchestration: prepared initial data, PDE/ODE comparison runs and
the identity-verification ledger."""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import jacobian_mass, localization_residual
from .fields import CGLParams, ConfigurationError, VortexConfiguration, reference_map
from .grid import GridSpec
from .point_vortex import OdeState, integrate_ode
from .profile import RadialProfile, solve_profile
from .solver import CGLSolver, SolverConfig, evolve
from .tracker import Trajectory, associate, detect

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)


class HarnessError(RuntimeError):
    pass


# --- configuration ------------------------------------------------------------


@dataclass
class ExperimentConfig:
    vortices: VortexConfiguration
    delta: float = 0.0
    eps_list: tuple = (0.08, 0.04, 0.02)
    L: float = 2.0
    N: int | None = None  # fixed resolution; None scales N with eps
    cells_per_eps: float = 4.0
    t_final: float = 0.0625
    samples: int = 25  # common sample times for PDE and ODE output
    dt_factor: float = 0.25  # dt = min(dt_factor * eps^2, dt_h2 * h^2)
    dt_h2: float = 1.0
    linear_step: str = "crank_nicolson"
    ode_rtol: float = 1e-10
    seed: int = 0
    jitter: bool = True
    output: str = "runs/default"
    threads: int = 1
    excess_bound: float = 1.0
    prep_tol: float = 2.0  # WP1 surrogate scales like (eps/r_a)^2; pi means a lost vortex
    verify: dict | None = None

    def __post_init__(self):
        self.eps_list = tuple(float(e) for e in self.eps_list)
        if not self.eps_list:
            raise ConfigurationError("eps list is empty")
        if self.t_final <= 0:
            raise ConfigurationError("t_final must be positive")
        if len(self.vortices) and self.L < 8 * self.vortices.R_a - 1e-12:
            raise ConfigurationError(f"L={self.L} is below 8 R_a = {8 * self.vortices.R_a:g}")
        if len(self.vortices) and self.vortices.R_a >= self.L / 4:
            raise ConfigurationError(f"vortices must lie in B(L/4) = B({self.L / 4:g})")
        for e in self.eps_list:
            h = self.grid_for(e).h
            if e < 2 * h - 1e-12:
                raise ConfigurationError(f"eps={e:g} is below 2h = {2 * h:g}")

    def grid_for(self, eps: float) -> GridSpec:
        if self.N is not None:
            return GridSpec(self.L, int(self.N))
        n = int(math.ceil(2 * self.L * self.cells_per_eps / eps - 1e-9)) + 1
        return GridSpec(self.L, n)

    def finest_h(self) -> float:
        return min(self.grid_for(e).h for e in self.eps_list)

    def initial_configuration(self) -> VortexConfiguration:
        """Vortex points shifted by a seeded offset in [0.1, 0.4] h_min per coordinate,
        redrawn until no point sits near a node of any grid in the eps list."""
        cfg = self.vortices
        if not self.jitter or len(cfg) == 0:
            return cfg
        rng = np.random.default_rng(self.seed)
        hmin = self.finest_h()
        for _ in range(100):
            shift = rng.uniform(0.1, 0.4, size=2) * hmin
            cand = cfg.translated(shift)
            if all(_off_nodes(cand, self.grid_for(e)) for e in self.eps_list):
                return cand
        raise ConfigurationError("could not place vortices away from grid nodes")

    def solver_config(self, eps: float, stride: int) -> SolverConfig:
        spec = self.grid_for(eps)
        dt = min(self.dt_factor * eps**2, self.dt_h2 * spec.h**2, eps**2)
        return SolverConfig(dt=dt, linear_step=self.linear_step, snapshot_stride=stride)


def _off_nodes(cfg, spec, frac=0.05) -> bool:
    for x, y in cfg.points:
        fx, fy = spec.index_of(x, y)
        if min(abs(fx - round(fx)), abs(fy - round(fy))) < frac:
            return False
    return True


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read an experiment TOML file; ``overrides`` (CLI flags) win over file keys."""
    raw = {}
    base = Path(".")
    if path is not None:
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        base = path.parent
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_dict(raw, base)


def config_from_dict(raw: dict, base=Path(".")) -> ExperimentConfig:
    raw = dict(raw)
    grid = raw.pop("grid", {}) or {}
    solver = raw.pop("solver", {}) or {}
    vort = raw.pop("vortices", None)
    vlist = raw.pop("vortex", None)
    if isinstance(vort, str):
        vpath = Path(vort)
        cfg = VortexConfiguration.load(vpath if vpath.is_absolute() else Path(base) / vpath)
    elif vlist is not None or isinstance(vort, list):
        items = vlist if vlist is not None else vort
        cfg = VortexConfiguration([(v["x"], v["y"]) for v in items], [v["degree"] for v in items])
    else:
        cfg = VortexConfiguration(np.zeros((0, 2)), [])
    kw = {}
    keymap = {
        "delta": "delta",
        "eps": "eps_list",
        "t_final": "t_final",
        "samples": "samples",
        "seed": "seed",
        "jitter": "jitter",
        "output": "output",
        "threads": "threads",
        "excess_bound": "excess_bound",
        "prep_tol": "prep_tol",
        "verify": "verify",
        "ode_rtol": "ode_rtol",
    }
    for k, v in raw.items():
        if k not in keymap:
            raise ConfigurationError(f"unknown config key {k!r}")
        kw[keymap[k]] = v
    if "eps_list" in kw and not isinstance(kw["eps_list"], (list, tuple)):
        kw["eps_list"] = [kw["eps_list"]]
    for k in ("L", "N", "cells_per_eps"):
        if k in grid:
            kw[k] = grid[k]
    for k in ("dt_factor", "dt_h2", "linear_step"):
        if k in solver:
            kw[k] = solver[k]
    try:
        return ExperimentConfig(cfg, **kw)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


# --- initial data -------------------------------------------------------------------


@dataclass
class PrepReport:
    eps: float
    N: int
    localization_residual: float
    jacobian_masses: list
    excess_energy: float = 0.0


def prepare_initial_data(cfg: VortexConfiguration, eps: float, spec: GridSpec, profile=None, tol=2.0):
    """u0 = u*_eps(a_i, d_i) and checks of the localization surrogate and Jacobian masses."""
    profile = profile or solve_profile()
    u0 = reference_map(cfg, eps, profile, spec)
    if len(cfg) == 0:
        return u0, PrepReport(eps, spec.N, 0.0, [])
    res = localization_residual(u0, cfg)
    r = cfg.r_a if math.isfinite(cfg.r_a) else 0.5 * (spec.L - cfg.R_a)
    masses = [jacobian_mass(u0, p, r) for p in cfg.points]
    if res > tol:
        raise HarnessError(
            f"localization residual {res:.3g} > {tol:g} at eps={eps:g}, N={spec.N}: refine the grid or lower eps"
        )
    return u0, PrepReport(eps, spec.N, res, masses)


# --- comparison runs ----------------------------------------------------------------------


@dataclass
class EpsRun:
    eps: float
    N: int
    dt: float
    trajectory: Trajectory
    energy: np.ndarray
    dissipation: np.ndarray
    step_times: np.ndarray
    excess: list
    error: float
    elapsed: float
    collision_time: float | None = None


@dataclass
class RunReport:
    config: ExperimentConfig
    ode: Trajectory
    runs: list = field(default_factory=list)
    files: dict = field(default_factory=dict)

    @property
    def errors(self) -> list:
        return [r.error for r in self.runs]

    def errors_decreasing(self) -> bool:
        order = sorted(self.runs, key=lambda r: -r.eps)
        e = [r.error for r in order]
        return all(b < a for a, b in zip(e, e[1:]))

    def convergence_rows(self):
        return [
            {
                "eps": r.eps,
                "N": r.N,
                "h": 2 * self.config.L / (r.N - 1),
                "dt": r.dt,
                "err": r.error,
                "energy_nonincreasing": bool(np.all(np.diff(r.energy) <= 1e-8 * abs(r.energy[0]))),
                "max_excess": float(np.max(np.abs(r.excess))) if r.excess else 0.0,
                "collision_time": r.collision_time,
            }
            for r in self.runs
        ]


def trajectory_error(pde: Trajectory, ode: Trajectory) -> float:
    """sup_t sum_i |b_i(t) - a_i(t)| over the common sample times.

    PDE ids are matched to ODE ids once, at the first sample, by nearest
    position with equal degree.
    """
    P = pde.position_array()
    A = ode.position_array()
    n = min(len(P), len(A))
    if n == 0 or pde.width != ode.width:
        return math.inf
    if not np.allclose(pde.times[:n], ode.times[:n], rtol=0, atol=1e-9):
        raise HarnessError("PDE and ODE trajectories are not sampled at common times")
    order = []
    for i in range(pde.width):
        d = np.hypot(*(A[0] - P[0, i]).T)
        d[[j for j in range(ode.width) if ode.degrees[j] != pde.degrees[i] or j in order]] = np.inf
        order.append(int(np.argmin(d)))
    A = A[:n, order]
    return float(np.max(np.sum(np.hypot(*(P[:n] - A).transpose(2, 0, 1)), axis=1)))


def excess_energy(solver: CGLSolver, u, traj_positions, degrees, eps, profile) -> float:
    """Sigma(t): E(u(t)) - E(u*_eps(b(t))) in the solver's discrete energy."""
    ref = reference_map(VortexConfiguration(traj_positions, degrees), eps, profile, u.spec)
    return solver.lattice_energy(u.values) - solver.lattice_energy(ref.values)


def run_single(config: ExperimentConfig, eps: float, cfg0: VortexConfiguration, profile, sample_times, ode):
    spec = config.grid_for(eps)
    params = CGLParams(config.delta, eps)
    u0, _ = prepare_initial_data(cfg0, eps, spec, profile, config.prep_tol)
    interval = sample_times[1] - sample_times[0] if len(sample_times) > 1 else config.t_final
    base = config.solver_config(eps, 1)
    steps_per_sample = max(1, int(math.ceil(interval / base.dt - 1e-9)))
    sc = SolverConfig(
        dt=interval / steps_per_sample,
        linear_step=base.linear_step,
        snapshot_stride=steps_per_sample,
        residual_every=base.residual_every,
    )
    solver = CGLSolver(spec, params, sc, u0.values)
    threshold = max(2 * cfg0.r_a, 4 * spec.h) if math.isfinite(cfg0.r_a) else 0.5
    state = {"traj": None, "excess": [], "stop": None}

    def on_snapshot(t, f):
        if state["traj"] is not None and state["traj"].terminated:
            return
        dets = detect(f, eps)
        if state["traj"] is None:
            state["traj"] = Trajectory.start(dets, t, threshold)
        else:
            state["traj"] = associate(state["traj"], dets, t)
        tr = state["traj"]
        if tr.terminated:
            state["stop"] = t
            return
        state["excess"].append(excess_energy(solver, f, tr.positions[-1], tr.degrees, eps, profile))

    t0 = time.perf_counter()
    res = evolve(u0, params, sc, config.t_final, on_snapshot=on_snapshot, keep_snapshots=False, solver=solver)
    elapsed = time.perf_counter() - t0
    traj = state["traj"]
    err = trajectory_error(traj, ode) if traj.width == ode.width else math.inf
    return EpsRun(
        eps,
        spec.N,
        res.dt,
        traj,
        res.energy,
        res.dissipation,
        res.step_times,
        state["excess"],
        err,
        elapsed,
        state["stop"],
    )


def run_comparison(config: ExperimentConfig, profile: RadialProfile | None = None, write: bool = True) -> RunReport:
    """PDE runs for every eps, one ODE run, errors err(eps) and the convergence table."""
    profile = profile or solve_profile()
    cfg0 = config.initial_configuration()
    times = np.linspace(0.0, config.t_final, config.samples + 1)
    ode = integrate_ode(OdeState(0.0, cfg0, config.delta), config.t_final, config.ode_rtol, sample_times=times)
    report = RunReport(config, ode.trajectory)

    def one(e):
        return run_single(config, e, cfg0, profile, times, ode.trajectory)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            report.runs = list(pool.map(one, config.eps_list))
    else:
        report.runs = [one(e) for e in config.eps_list]
    if write:
        write_report(report, Path(config.output))
    return report


def write_report(report: RunReport, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    report.ode.to_csv(out / "ode.csv")
    files["ode"] = "ode.csv"
    for r in report.runs:
        tag = f"{r.eps:g}"
        name = f"trajectory_eps{tag}.csv"
        r.trajectory.to_csv(out / name)
        ename = f"energy_eps{tag}.csv"
        with open(out / ename, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "energy", "dissipation"])
            for t, e, d in zip(r.step_times, r.energy, r.dissipation):
                w.writerow([repr(float(t)), repr(float(e)), repr(float(d))])
        files[tag] = {"trajectory": name, "energy": ename}
    rows = report.convergence_rows()
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["eps"])
        w.writeheader()
        w.writerows(rows)
    files["convergence"] = "convergence.csv"
    report.files = files
    cfg = report.config
    manifest = {
        "delta": cfg.delta,
        "eps": list(cfg.eps_list),
        "L": cfg.L,
        "t_final": cfg.t_final,
        "seed": cfg.seed,
        "initial_points": cfg.initial_configuration().points.tolist(),
        "degrees": list(cfg.vortices.degrees),
        "errors_decreasing": report.errors_decreasing(),
        "convergence": rows,
        "excess": {f"{r.eps:g}": [float(x) for x in r.excess] for r in report.runs},
        "files": files,
    }
    with open(out / "report.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
