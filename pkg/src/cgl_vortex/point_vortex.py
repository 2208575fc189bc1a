"""The limiting point-vortex system

    pi da_i/dt = C_i (delta d_i I - J) grad_{a_i} W,   C_i = -d_i / (1 + delta^2),

with J v = v^perp = (-v_2, v_1) and W the Kirchhoff-Onsager functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .diagnostics import kirchhoff_gradient, kirchhoff_onsager
from .fields import VortexConfiguration
from .tracker import Trajectory

COLLISION = "collision"
COMPLETED = "completed"


class OdeError(RuntimeError):
    def __init__(self, message, t=None, points=None):
        super().__init__(message)
        self.t = t
        self.points = points


@dataclass(frozen=True)
class OdeState:
    t: float
    cfg: VortexConfiguration
    delta: float

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")


def perp(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _velocity(points, degrees, delta):
    cfg = VortexConfiguration(points, degrees)
    g = kirchhoff_gradient(cfg)
    d = cfg.degree_array[:, None]
    C = -d / (1.0 + delta * delta)
    return C / math.pi * (delta * d * g - perp(g))


def velocity(state: OdeState) -> np.ndarray:
    """Velocities da_i/dt, shape (l, 2)."""
    return _velocity(state.cfg.points, state.cfg.degrees, state.delta)


def lyapunov_rate(state: OdeState) -> tuple[float, float]:
    """(sum_i da_i/dt . grad_{a_i} W, -delta pi sum_i |da_i/dt|^2); equal along the flow."""
    if len(state.cfg) < 2:
        return 0.0, 0.0
    v = velocity(state)
    g = kirchhoff_gradient(state.cfg)
    return float(np.sum(v * g)), float(-state.delta * math.pi * np.sum(v * v))


@dataclass
class OdeResult:
    trajectory: Trajectory
    reason: str
    t_end: float
    W: np.ndarray  # W at the sample times


def integrate_ode(
    state0: OdeState,
    T: float,
    rtol: float = 1e-8,
    sample_times=None,
    atol: float | None = None,
) -> OdeResult:
    """Adaptive RK45 (Dormand-Prince) with dense output at ``sample_times``.

    Integration stops with reason "collision" once the minimal distance
    drops below 1e-6 times the initial r_a. T may be negative (backward
    integration).
    """
    if T == 0:
        raise ValueError("T must be nonzero")
    if not rtol > 0:
        raise ValueError("rtol must be positive")
    cfg = state0.cfg
    degs = cfg.degrees
    l = len(cfg)
    t0 = state0.t
    if sample_times is None:
        sample_times = np.linspace(t0, t0 + T, 101)
    sample_times = np.asarray(sample_times, dtype=float)
    traj = Trajectory(degs)
    if l < 2:
        for t in sample_times:
            traj.append(t, cfg.points)
        return OdeResult(traj, COMPLETED, t0 + T, np.zeros(len(sample_times)))

    # absolute accuracy is set by the smallest length of the configuration
    atol = rtol * cfg.r_a if atol is None else atol
    coll_tol = 1e-6 * cfg.r_a

    def rhs(_t, y):
        return _velocity(y.reshape(l, 2), degs, state0.delta).ravel()

    def near_collision(_t, y):
        p = y.reshape(l, 2)
        dist = np.hypot(p[:, None, 0] - p[None, :, 0], p[:, None, 1] - p[None, :, 1])
        dist[np.diag_indices(l)] = np.inf
        return float(dist.min()) - coll_tol

    near_collision.terminal = True
    near_collision.direction = -1

    sol = solve_ivp(
        rhs,
        (t0, t0 + T),
        cfg.points.ravel().copy(),
        method="RK45",
        rtol=rtol,
        atol=atol,
        dense_output=True,
        events=near_collision,
    )
    if sol.status == -1:
        y = sol.y[:, -1].reshape(l, 2)
        raise OdeError(f"ODE integration failed at t={sol.t[-1]:g}: {sol.message}", sol.t[-1], y)
    reason = COLLISION if sol.status == 1 else COMPLETED
    t_end = float(sol.t[-1])
    lo, hi = sorted((t0, t_end))
    keep = sample_times[(sample_times >= lo - 1e-12) & (sample_times <= hi + 1e-12)]
    W = []
    for t in keep:
        p = sol.sol(t).reshape(l, 2)
        traj.append(t, p)
        W.append(kirchhoff_onsager(VortexConfiguration(p, degs)))
    if reason == COLLISION:
        traj.terminated = COLLISION
        traj.t_end = t_end
    return OdeResult(traj, reason, t_end, np.array(W))
