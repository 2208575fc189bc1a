"""Vortex configurations, CGL parameters and the reference vortex fields."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import ComplexField, GridSpec
from .profile import RadialProfile, evaluate


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class VortexConfiguration:
    """Point vortices a_i with degrees d_i = +-1."""

    points: np.ndarray
    degrees: tuple[int, ...]

    def __init__(self, points, degrees):
        pts = np.array(points, dtype=float).reshape(-1, 2)
        degs = tuple(int(d) for d in degrees)
        if len(degs) != len(pts):
            raise ConfigurationError("need one degree per point")
        if any(d not in (-1, 1) for d in degs):
            raise ConfigurationError(f"degrees must be +-1, got {degs}")
        if len(pts) >= 2 and _min_distance(pts) == 0.0:
            raise ConfigurationError("vortex points must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "degrees", degs)

    def __len__(self):
        return len(self.degrees)

    @property
    def degree_array(self) -> np.ndarray:
        return np.array(self.degrees, dtype=float)

    @property
    def total_degree(self) -> int:
        return int(sum(self.degrees))

    @property
    def r_a(self) -> float:
        """One eighth of the minimal separation (inf for a single vortex)."""
        if len(self) < 2:
            return math.inf
        return _min_distance(self.points) / 8.0

    @property
    def R_a(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.max(np.hypot(self.points[:, 0], self.points[:, 1])))

    def with_points(self, points) -> "VortexConfiguration":
        return VortexConfiguration(points, self.degrees)

    def translated(self, v) -> "VortexConfiguration":
        return VortexConfiguration(self.points + np.asarray(v, dtype=float), self.degrees)

    def flipped(self) -> "VortexConfiguration":
        return VortexConfiguration(self.points, [-d for d in self.degrees])

    def to_json(self) -> str:
        return json.dumps(
            [{"x": float(x), "y": float(y), "degree": d} for (x, y), d in zip(self.points, self.degrees)],
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "VortexConfiguration":
        items = json.loads(text)
        if not isinstance(items, list):
            raise ConfigurationError("vortex file must hold a JSON array of {x, y, degree}")
        try:
            return cls([(it["x"], it["y"]) for it in items], [it["degree"] for it in items])
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"bad vortex entry: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "VortexConfiguration":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _min_distance(pts) -> float:
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    d[np.diag_indices(len(pts))] = np.inf
    return float(d.min())


@dataclass(frozen=True)
class CGLParams:
    """Dissipation delta and core size eps; k_eps = delta/|log eps|, beta = 1/(k_eps + i)."""

    delta: float
    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ConfigurationError(f"eps must lie in (0, 1), got {self.eps}")
        if self.delta < 0:
            raise ConfigurationError(f"delta must be >= 0, got {self.delta}")

    @property
    def k_eps(self) -> float:
        return self.delta / abs(math.log(self.eps))

    @property
    def beta(self) -> complex:
        return 1.0 / (self.k_eps + 1j)


def _unit_factors(cfg: VortexConfiguration, spec: GridSpec, z=None):
    if z is None:
        z = spec.complex_mesh()
    h = spec.h
    for (ax, ay), d in zip(cfg.points, cfg.degrees):
        w = z - complex(ax, ay)
        r = np.abs(w)
        if np.any(r < 1e-9 * h):
            raise ConfigurationError(
                f"vortex at ({ax}, {ay}) sits on a grid node; jitter it by about h/2 = {h / 2:g}"
            )
        unit = w / r
        yield (unit if d > 0 else np.conj(unit)), r


def canonical_harmonic_map(cfg: VortexConfiguration, spec: GridSpec) -> ComplexField:
    """u* = prod ((z - a_i)/|z - a_i|)^{d_i}; unit modulus at every node."""
    out = np.ones((spec.N, spec.N), dtype=np.complex128)
    for unit, _ in _unit_factors(cfg, spec):
        out *= unit
    return ComplexField(spec, out)


def reference_map(
    cfg: VortexConfiguration, params: CGLParams, profile: RadialProfile, spec: GridSpec
) -> ComplexField:
    """u*_eps = prod f(|z - a_i|/eps) ((z - a_i)/|z - a_i|)^{d_i}."""
    eps = params.eps if isinstance(params, CGLParams) else float(params)
    out = np.ones((spec.N, spec.N), dtype=np.complex128)
    for unit, r in _unit_factors(cfg, spec):
        out *= evaluate(profile, r / eps) * unit
    notes = ()
    if eps < spec.h:
        notes = (f"under-resolved core: eps={eps:g} < h={spec.h:g}",)
    return ComplexField(spec, out, warnings=notes)


def degree_reference_map(d: int, spec: GridSpec) -> ComplexField:
    """U_d = (z/|z|)^d outside B(0,1), filled smoothly by |z|^|d| (z/|z|)^d inside."""
    d = int(d)
    if abs(d) > 8:
        raise ConfigurationError("|d| must be <= 8")
    z = spec.complex_mesh()
    if d == 0:
        return ComplexField(spec, np.ones_like(z))
    r = np.abs(z)
    safe = np.where(r > 0, r, 1.0)
    unit = np.where(r > 0, z / safe, 1.0)
    phase = unit**d if d > 0 else np.conj(unit) ** (-d)
    mod = np.where(r >= 1.0, 1.0, r ** abs(d))
    return ComplexField(spec, mod * phase)
