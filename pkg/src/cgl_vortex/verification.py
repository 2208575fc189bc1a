"""Identity-verification ledger: each check measures one identity against a tolerance."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import diagnostics as dg
from .fields import VortexConfiguration, reference_map
from .grid import GridSpec, integrate
from .point_vortex import OdeState, lyapunov_rate, perp, velocity
from .profile import solve_profile
from .solver import HeatKernelParams, heat_kernel


@dataclass
class LedgerEntry:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class Ledger:
    entries: list

    @property
    def status(self) -> str:
        if not self.entries:
            return "nothing verified"
        return "pass" if all(e.passed for e in self.entries) else "fail"

    @property
    def ok(self) -> bool:
        return all(e.passed for e in self.entries)

    def to_json(self) -> str:
        return json.dumps({"status": self.status, "entries": [asdict(e) for e in self.entries]}, indent=2)


def _dipole_field(N=257, L=2.0, eps=0.05):
    spec = GridSpec(L, N)
    h = spec.h
    cfg = VortexConfiguration([(-0.5 + 0.31 * h, 0.17 * h), (0.5 + 0.31 * h, 0.17 * h)], [1, -1])
    return spec, cfg, reference_map(cfg, eps, solve_profile(), spec)


def check_modules(tol):
    """Max nodal residual of |grad u|^2 decomposition over 10 h^2 times the local scale."""
    spec, _, u = _dipole_field()
    r = dg.identity_residuals(u)
    bound = 10 * spec.h**2 * r.scale[r.mask]
    return float(np.max(np.abs(r.modules[r.mask]) / bound)), "ratio to 10 h^2 scale"


def check_modules3(tol):
    spec, _, u = _dipole_field()
    r = dg.identity_residuals(u)
    bound = 10 * spec.h**2 * r.scale[r.mask]
    worst = max(float(np.max(np.abs(r.modules3[..., k, l][r.mask]) / bound)) for k in range(2) for l in range(2))
    return worst, "ratio to 10 h^2 scale"


def check_omega(tol):
    spec, _, u = _dipole_field()
    r = dg.identity_residuals(u)
    bound = 10 * spec.h**2 * r.scale[r.mask]
    return float(np.max(np.abs(r.omega[r.mask]) / bound)), "ratio to 10 h^2 scale"


def check_energy_split(tol):
    _, _, u = _dipole_field()
    b = dg.energy_breakdown(u, 0.05)
    return abs(b.total - b.modulus_part - b.momentum_part) / b.total, "relative"


def check_core_constant(tol):
    c = dg.measure_core_constant(solve_profile(), radii=(0.3, 0.5), eps_list=(0.05, 0.025), cells_per_eps=6)
    return c.spread, f"gamma(1) = {c.value:.4f}"


def check_jacobian_mass(tol):
    spec = GridSpec(1.0, 401)
    cfg = VortexConfiguration([(0.3 * spec.h, 0.2 * spec.h)], [1])
    u = reference_map(cfg, 0.02, solve_profile(), spec)
    return abs(dg.jacobian_mass(u, cfg.points[0], 0.7) - math.pi), "int_B J - pi"


def check_annulus_energy(tol):
    """Energy of a unit vortex on B(R) \\ B(R/2) against pi log 2 (exact for z/|z|)."""
    spec = GridSpec(2.0, 401)
    cfg = VortexConfiguration([(0.3 * spec.h, 0.2 * spec.h)], [1])
    u = reference_map(cfg, 0.02, solve_profile(), spec)
    e = dg.region_energy(u, 0.02, dg.Annulus((0.0, 0.0), 0.8, 1.6))
    return abs(e - math.pi * math.log(2.0)), "E(annulus) - pi log 2"


def check_interaction(tol):
    """Quadrature of 2 int Im(omega d^2chi/dzbar^2) against -2 times the printed closed form."""
    spec = GridSpec(2.0, 1025)
    h = spec.h
    cfg = VortexConfiguration([(0.3 + 0.3 * h, 0.1), (-0.45, 0.35 + 0.2 * h), (0.05, -0.6 + 0.1 * h)], [1, -1, 1])
    lhs, rhs = dg.interaction_vectors(cfg, spec)
    return float(np.max(np.abs(lhs + 2 * rhs))), "max |lhs + 2 rhs|"


def check_heat_l1(tol):
    spec = GridSpec(8.0, 801)
    worst = 0.0
    for t in (0.1, 1.0):
        p = HeatKernelParams(1.0, 0.7, t)
        S = heat_kernel(p, spec)
        val = integrate(S.modulus())
        worst = max(worst, abs(val - math.hypot(p.a, p.b) / p.a))
    return worst, "|| S ||_1 - |a+ib|/a"


def check_heat_semigroup(tol):
    from scipy.signal import fftconvolve

    spec = GridSpec(4.0, 401)
    p1, p2 = HeatKernelParams(1.0, 0.5, 0.05), HeatKernelParams(1.0, 0.5, 0.07)
    S1, S2 = heat_kernel(p1, spec).values, heat_kernel(p2, spec).values
    conv = fftconvolve(S1, S2, mode="same") * spec.h**2
    S12 = heat_kernel(HeatKernelParams(1.0, 0.5, 0.12), spec).values
    return float(np.max(np.abs(conv - S12)) / np.max(np.abs(S12))), "relative max"


def _random_states(n=100, seed=7):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        pts = rng.uniform(-1, 1, size=(3, 2))
        yield OdeState(0.0, VortexConfiguration(pts, rng.choice([-1, 1], size=3)), float(rng.uniform(0.1, 2)))


def check_lyapunov(tol):
    worst = 0.0
    for s in _random_states():
        a, b = lyapunov_rate(s)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return worst, "relative"


def check_structure(tol):
    worst = 0.0
    for s in _random_states():
        v = velocity(s)
        d = s.cfg.degree_array[:, None]
        lhs = math.pi * (v - s.delta * d * perp(v))
        rhs = d * perp(dg.kirchhoff_gradient(s.cfg))
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))))
    return worst, "relative"


def check_gradient_fd(tol):
    worst = 0.0
    step = 1e-6
    for s in list(_random_states(20)):
        g = dg.kirchhoff_gradient(s.cfg)
        for i in range(len(s.cfg)):
            for k in range(2):
                e = np.zeros_like(s.cfg.points)
                e[i, k] = step
                wp = dg.kirchhoff_onsager(s.cfg.with_points(s.cfg.points + e))
                wm = dg.kirchhoff_onsager(s.cfg.with_points(s.cfg.points - e))
                fd = (wp - wm) / (2 * step)
                worst = max(worst, abs(fd - g[i, k]) / max(np.max(np.abs(g)), 1e-12))
    return worst, "relative"


CHECKS: dict[str, tuple[Callable, float]] = {
    "modules": (check_modules, 1.0),
    "modules3": (check_modules3, 1.0),
    "omega": (check_omega, 1.0),
    "energy_split": (check_energy_split, 1e-10),
    "core_constant": (check_core_constant, 2e-2),
    "jacobian_mass": (check_jacobian_mass, 1e-2),
    "annulus_energy": (check_annulus_energy, 1e-2),
    "interaction": (check_interaction, 1e-2),
    "heat_kernel_l1": (check_heat_l1, 1e-3),
    "heat_kernel_semigroup": (check_heat_semigroup, 1e-4),
    "ode_lyapunov": (check_lyapunov, 1e-12),
    "ode_structure": (check_structure, 1e-12),
    "ode_gradient_fd": (check_gradient_fd, 1e-6),
}


def verify_identities(config: dict | None = None) -> Ledger:
    """Run the checks named in ``config['checks']`` (all when config is None).

    ``config['tolerance_scale']`` multiplies every tolerance; an empty mapping
    runs nothing and yields the "nothing verified" status.
    """
    if config is None:
        config = {"checks": list(CHECKS)}
    names = config.get("checks", [])
    scale = float(config.get("tolerance_scale", 1.0))
    overrides = config.get("tolerances", {})
    entries = []
    for name in names:
        if name not in CHECKS:
            raise KeyError(f"unknown check {name!r}; available: {', '.join(CHECKS)}")
        fn, tol = CHECKS[name]
        tol = float(overrides.get(name, tol)) * scale
        value, detail = fn(tol)
        entries.append(LedgerEntry(name, float(value), tol, bool(value <= tol), detail))
    return Ledger(entries)
