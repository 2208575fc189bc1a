"""Densities and functionals: energy, Jacobian, momentum, Hopf differential,
winding degree, renormalized energy, Kirchhoff-Onsager interaction."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .fields import VortexConfiguration, degree_reference_map
from .grid import (
    Annulus,
    ComplexField,
    Disk,
    FullSquare,
    GridSpec,
    ScalarField,
    VectorField,
    integrate,
    region_weights,
)


class DegreeUndefinedError(ValueError):
    """The sampling circle passes through (or too near) a vortex core."""


class ExpansionError(ValueError):
    pass


def _margin(spec: GridSpec) -> float:
    return 2.0 * spec.h


# --- pointwise densities ------------------------------------------------------


def energy_density(u: ComplexField, eps: float) -> ScalarField:
    """e_eps(u) = |grad u|^2/2 + (1 - |u|^2)^2/(4 eps^2)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    ux, uy = np.gradient(u.values, u.spec.h, edge_order=2)
    g = 0.5 * (np.abs(ux) ** 2 + np.abs(uy) ** 2)
    v = (1.0 - np.abs(u.values) ** 2) ** 2 / (4.0 * eps * eps)
    return ScalarField(u.spec, g + v)


def jacobian(u: ComplexField) -> ScalarField:
    """det(grad u) = d1u x d2u."""
    ux, uy = np.gradient(u.values, u.spec.h, edge_order=2)
    return ScalarField(u.spec, np.imag(np.conj(ux) * uy))


def momentum(u: ComplexField) -> VectorField:
    """j(u) = u x grad u = Im(conj(u) grad u); equals grad(phase) when |u| = 1."""
    ux, uy = np.gradient(u.values, u.spec.h, edge_order=2)
    cu = np.conj(u.values)
    return VectorField(u.spec, np.stack([np.imag(cu * ux), np.imag(cu * uy)], axis=-1))


def hopf_differential(u: ComplexField) -> ComplexField:
    """omega(u) = |d1u|^2 - |d2u|^2 - 2i d1u.d2u."""
    ux, uy = np.gradient(u.values, u.spec.h, edge_order=2)
    dot = np.real(ux * np.conj(uy))
    return ComplexField(u.spec, np.abs(ux) ** 2 - np.abs(uy) ** 2 - 2j * dot)


def _modulus_and_current(u: ComplexField):
    h = u.spec.h
    mod = np.abs(u.values)
    mx, my = np.gradient(mod, h, edge_order=2)
    j = momentum(u).values
    return mod, mx, my, j[..., 0], j[..., 1]


def hopf_from_components(u: ComplexField) -> ComplexField:
    """omega rewritten through grad|u| (differenced) and j(u)/|u|; needs |u| > 0."""
    mod, mx, my, j1, j2 = _modulus_and_current(u)
    m2 = np.where(mod > 0, mod * mod, np.inf)
    w = mx**2 - my**2 - 2j * mx * my + (j1**2 - j2**2 - 2j * j1 * j2) / m2
    return ComplexField(u.spec, w)


@dataclass
class IdentityResiduals:
    """Nodal residuals of the modulus/current decompositions on a mask."""

    modules: np.ndarray  # |grad u|^2 - |grad|u||^2 - |j|^2/|u|^2
    modules3: np.ndarray  # (N, N, 2, 2): d_k u.d_l u - d_k|u| d_l|u| - j_k j_l/|u|^2
    omega: np.ndarray  # omega(u) - omega from components
    scale: np.ndarray  # local derivative scale used to normalise
    mask: np.ndarray


def local_derivative_scale(u: ComplexField) -> np.ndarray:
    """|D^2 u|^2 + |grad u| |D^3 u|, maximised over the 3x3 node neighbourhood.

    This bounds the O(h^2) truncation of the decompositions (second differences
    of |u| against projected first differences of u).
    """
    from scipy.ndimage import maximum_filter

    h = u.spec.h
    d1 = np.gradient(u.values, h, edge_order=2)
    d2 = [np.gradient(g, h, edge_order=2) for g in d1]
    d3 = [np.gradient(g, h, edge_order=2) for row in d2 for g in row]
    g1 = np.sqrt(sum(np.abs(g) ** 2 for g in d1))
    g2 = np.sqrt(sum(np.abs(g) ** 2 for row in d2 for g in row))
    g3 = np.sqrt(sum(np.abs(g) ** 2 for row in d3 for g in row))
    return maximum_filter(g2**2 + g1 * g3, size=3, mode="nearest")


def identity_residuals(u: ComplexField, min_modulus: float = 0.1, edge: int = 3) -> IdentityResiduals:
    ux, uy = np.gradient(u.values, u.spec.h, edge_order=2)
    mod, mx, my, j1, j2 = _modulus_and_current(u)
    mask = mod > min_modulus
    if edge:
        mask[:edge, :] = mask[-edge:, :] = False
        mask[:, :edge] = mask[:, -edge:] = False
    m2 = np.where(mask, mod * mod, 1.0)
    du = (ux, uy)
    dm = (mx, my)
    jj = (j1, j2)
    res3 = np.empty(mod.shape + (2, 2))
    for k in range(2):
        for l in range(2):
            lhs = np.real(du[k] * np.conj(du[l]))
            res3[..., k, l] = lhs - dm[k] * dm[l] - jj[k] * jj[l] / m2
    res = res3[..., 0, 0] + res3[..., 1, 1]
    om = hopf_differential(u).values
    om_c = (mx**2 - my**2 - 2j * mx * my) + (j1**2 - j2**2 - 2j * j1 * j2) / m2
    return IdentityResiduals(res, res3, om - om_c, local_derivative_scale(u), mask)


# --- energies -------------------------------------------------------------------


@dataclass
class EnergyBreakdown:
    region: str
    total: float
    gradient_part: float
    potential_part: float
    modulus_part: float
    momentum_part: float
    quadrature_margin: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _describe(region) -> str:
    if isinstance(region, Disk):
        return f"disk(center=({region.center[0]:g},{region.center[1]:g}), r={region.radius:g})"
    if isinstance(region, Annulus):
        return (
            f"annulus(center=({region.center[0]:g},{region.center[1]:g}), "
            f"r_in={region.inner:g}, r_out={region.outer:g})"
        )
    if region is None or isinstance(region, FullSquare):
        return "square"
    return "mask"


def energy_breakdown(u: ComplexField, eps: float, region=None) -> EnergyBreakdown:
    """Split the energy on a region into gradient/potential and modulus/momentum parts.

    The modulus part uses the projection Re(conj(u) grad u)/|u| for grad|u|, so
    total = modulus_part + momentum_part holds up to rounding.
    """
    spec = u.spec
    ux, uy = np.gradient(u.values, spec.h, edge_order=2)
    mod = np.abs(u.values)
    pot = (1.0 - mod**2) ** 2 / (4.0 * eps * eps)
    grad = 0.5 * (np.abs(ux) ** 2 + np.abs(uy) ** 2)
    safe = np.where(mod > 0, mod, 1.0)
    cu = np.conj(u.values)
    mx = np.where(mod > 0, np.real(cu * ux) / safe, 0.0)
    my = np.where(mod > 0, np.real(cu * uy) / safe, 0.0)
    j2 = np.imag(cu * ux) ** 2 + np.imag(cu * uy) ** 2
    mom = np.where(mod > 0, 0.5 * j2 / safe**2, 0.0)
    margin = _margin(spec)
    w = region_weights(spec, FullSquare() if region is None else region, margin)
    gp, pp = float(np.sum(w * grad)), float(np.sum(w * pot))
    modp = float(np.sum(w * (0.5 * (mx**2 + my**2) + pot)))
    momp = float(np.sum(w * mom))
    return EnergyBreakdown(_describe(region), gp + pp, gp, pp, modp, momp, margin)


def region_energy(u: ComplexField, eps: float, region) -> float:
    return integrate(energy_density(u, eps), region, margin=_margin(u.spec))


@lru_cache(maxsize=16)
def unit_disk_dirichlet(d: int, resolution: int = 1201) -> float:
    """Numerical value of the integral of |grad U_d|^2/2 over B(0,1) (exactly pi |d|)."""
    spec = GridSpec(1.2, resolution)
    U = degree_reference_map(d, spec)
    ux, uy = np.gradient(U.values, spec.h, edge_order=2)
    dens = ScalarField(spec, 0.5 * (np.abs(ux) ** 2 + np.abs(uy) ** 2))
    return integrate(dens, Disk((0.0, 0.0), 1.0))


@dataclass
class RenormalizedEnergy:
    value: float
    truncation_estimate: float
    radius: float
    degree: int


def renormalized_energy(
    u: ComplexField, d: int, eps: float, R: float, cfg: VortexConfiguration | None = None
) -> RenormalizedEnergy:
    """Energy on B(R) minus the divergent part of |grad U_d|^2/2.

    Returns E(B(R)) - pi d^2 log R - int_{B(1)} |grad U_d|^2/2. The truncation
    estimate is the annulus excess on B(R) \\ B(R/2), which decays as the
    neglected tail does.
    """
    spec = u.spec
    if R > spec.L - spec.h:
        raise ExpansionError(f"radius R={R} exceeds the grid (L - h = {spec.L - spec.h:g})")
    if cfg is not None and len(cfg):
        rho = np.hypot(cfg.points[:, 0], cfg.points[:, 1])
        if np.any(rho > R / 2):
            raise ExpansionError("all vortices must lie inside B(R/2)")
        if len(cfg) > 1 and np.any(R - rho < 2 * cfg.r_a):
            raise ExpansionError("a vortex lies within 2 r_a of the sphere |z| = R")
    dens = energy_density(u, eps)
    inner = integrate(dens, Disk((0.0, 0.0), R), margin=_margin(spec))
    value = inner - math.pi * d * d * math.log(R) - unit_disk_dirichlet(abs(int(d)))
    ann = integrate(dens, Annulus((0.0, 0.0), R / 2, R), margin=_margin(spec))
    tail = abs(ann - math.pi * d * d * math.log(2.0))
    return RenormalizedEnergy(value, tail, R, int(d))


# --- topology -------------------------------------------------------------------


def bilinear(u: ComplexField, xs, ys) -> np.ndarray:
    spec = u.spec
    fx, fy = spec.index_of(np.asarray(xs), np.asarray(ys))
    if np.any(fx < 0) or np.any(fy < 0) or np.any(fx > spec.N - 1) or np.any(fy > spec.N - 1):
        raise ValueError("sample points leave the grid")
    i = np.minimum(np.floor(fx).astype(int), spec.N - 2)
    j = np.minimum(np.floor(fy).astype(int), spec.N - 2)
    tx, ty = fx - i, fy - j
    v = u.values
    return (
        v[i, j] * (1 - tx) * (1 - ty)
        + v[i + 1, j] * tx * (1 - ty)
        + v[i, j + 1] * (1 - tx) * ty
        + v[i + 1, j + 1] * tx * ty
    )


def winding_degree(u: ComplexField, center, radius: float, min_modulus: float = 0.1) -> int:
    """Winding number of u on the circle |z - center| = radius."""
    n = max(64, int(math.ceil(8 * radius / u.spec.h)))
    t = 2 * math.pi * np.arange(n) / n
    vals = bilinear(u, center[0] + radius * np.cos(t), center[1] + radius * np.sin(t))
    if np.min(np.abs(vals)) <= min_modulus:
        raise DegreeUndefinedError(
            f"degree undefined here: |u| <= {min_modulus} on the circle "
            f"(center=({center[0]:g},{center[1]:g}), r={radius:g})"
        )
    inc = np.angle(np.roll(vals, -1) / vals)
    return int(round(float(np.sum(inc)) / (2 * math.pi)))


def boundary_degree(values: np.ndarray) -> int:
    """Winding number of the boundary loop of a sampled field."""
    loop = np.concatenate([values[:, 0], values[-1, 1:], values[-2::-1, -1], values[0, -2:0:-1]])
    if np.min(np.abs(loop)) == 0:
        raise DegreeUndefinedError("field vanishes on the grid boundary")
    inc = np.angle(np.roll(loop, -1) / loop)
    return int(round(float(np.sum(inc)) / (2 * math.pi)))


# --- point-vortex interaction ---------------------------------------------------------


def _pair_terms(cfg: VortexConfiguration):
    pts = cfg.points
    diff = pts[:, None, :] - pts[None, :, :]
    dist2 = np.sum(diff**2, axis=-1)
    off = ~np.eye(len(pts), dtype=bool)
    if np.any(dist2[off] == 0):
        raise ValueError("coincident vortex points")
    return diff, dist2, off


def kirchhoff_onsager(cfg: VortexConfiguration) -> float:
    """W = -pi sum_{i != j} d_i d_j log|a_i - a_j| (ordered pairs)."""
    if len(cfg) < 2:
        return 0.0
    _, dist2, off = _pair_terms(cfg)
    d = cfg.degree_array
    dd = d[:, None] * d[None, :]
    return float(-math.pi * np.sum(dd[off] * 0.5 * np.log(dist2[off])))


def kirchhoff_gradient(cfg: VortexConfiguration, i: int | None = None) -> np.ndarray:
    """grad_{a_i} W = -2 pi d_i sum_{j != i} d_j (a_i - a_j)/|a_i - a_j|^2.

    Returns shape (2,) for a given i, else (l, 2) for all vortices.
    """
    n = len(cfg)
    if n < 2:
        g = np.zeros((n, 2))
    else:
        diff, dist2, off = _pair_terms(cfg)
        d = cfg.degree_array
        inv = np.where(off, 1.0 / np.where(off, dist2, 1.0), 0.0)
        g = -2 * math.pi * d[:, None] * np.einsum("j,ij,ijk->ik", d, inv, diff)
    return g if i is None else g[i]


# --- test functions -------------------------------------------------------------------


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t * t - 20 * t**3)


def _smoothstep_d(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 140 * t**3 * (1 - t) ** 3, 0.0)


def _smoothstep_dd(t):
    inside = (t > 0) & (t < 1)
    return np.where(inside, 420 * t * t * (1 - t) ** 2 * (1 - 2 * t), 0.0)


def cutoff(s):
    """1 on [0, 1], 0 beyond 3/2, C^3 septic transition; returns (eta, eta', eta'').

    The third derivative is continuous too, so quadratures of eta'' times a
    smooth field converge at the rate of the underlying differences.
    """
    t = (np.asarray(s, dtype=float) - 1.0) / 0.5
    return 1.0 - _smoothstep(t), -_smoothstep_d(t) / 0.5, -_smoothstep_dd(t) / 0.25


@dataclass
class TestFunctionPair:
    """chi_i = eta(|z-a_i|/r_a) g_i.(z-a_i) and phi_i with g_i rotated by +90 degrees.

    Both are affine on B(a_i, r_a), supported in B(a_i, 3 r_a/2), and
    grad phi = grad^perp chi on B(a_i, r_a).
    """

    centers: np.ndarray
    radius: float
    gradients: np.ndarray  # (l, 2), |g_i| <= 1

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=float).reshape(-1, 2)
        self.gradients = np.asarray(self.gradients, dtype=float).reshape(-1, 2)
        if np.any(np.hypot(self.gradients[:, 0], self.gradients[:, 1]) > 1 + 1e-12):
            raise ValueError("test-function gradients must satisfy |g_i| <= 1")

    @classmethod
    def for_configuration(cls, cfg: VortexConfiguration, gradients) -> "TestFunctionPair":
        if len(cfg) < 2:
            raise ValueError("test functions need r_a, i.e. at least two vortices")
        return cls(cfg.points, cfg.r_a, gradients)

    def _local(self, i, z, rotate=False):
        g = self.gradients[i]
        if rotate:
            g = np.array([-g[1], g[0]])
        a = complex(*self.centers[i])
        w = z - a
        wx, wy = w.real, w.imag
        rho = np.abs(w)
        safe = np.where(rho > 0, rho, 1.0)
        eta, e1, e2 = cutoff(rho / self.radius)
        lin = g[0] * wx + g[1] * wy
        return wx, wy, safe, eta, e1, e2, lin, g

    def values(self, z, rotate=False):
        out = np.zeros(np.shape(z))
        for i in range(len(self.centers)):
            _, _, _, eta, _, _, lin, _ = self._local(i, z, rotate)
            out += eta * lin
        return out

    def hessian(self, i, z, rotate=False):
        """(chi_xx, chi_xy, chi_yy) of the i-th local test function."""
        wx, wy, rho, eta, e1, e2, lin, g = self._local(i, z, rotate)
        r = self.radius
        nx, ny = wx / rho, wy / rho
        px, py = e1 * nx / r, e1 * ny / r
        a = e2 / r**2
        b = e1 / (r * rho)
        pxx = a * nx * nx + b * (1 - nx * nx)
        pxy = a * nx * ny - b * nx * ny
        pyy = a * ny * ny + b * (1 - ny * ny)
        cxx = pxx * lin + 2 * px * g[0]
        cxy = pxy * lin + px * g[1] + py * g[0]
        cyy = pyy * lin + 2 * py * g[1]
        return cxx, cxy, cyy

    def dzbar2(self, i, z, rotate=False):
        """d^2 chi / d zbar^2 = (chi_xx - chi_yy + 2i chi_xy)/4."""
        cxx, cxy, cyy = self.hessian(i, z, rotate)
        return (cxx - cyy + 2j * cxy) / 4.0


def interaction_rhs(cfg: VortexConfiguration) -> np.ndarray:
    """-pi sum_{j != i} d_i d_j (a_i - a_j)^perp / |a_i - a_j|^2, shape (l, 2)."""
    n = len(cfg)
    if n < 2:
        return np.zeros((n, 2))
    diff, dist2, off = _pair_terms(cfg)
    d = cfg.degree_array
    inv = np.where(off, 1.0 / np.where(off, dist2, 1.0), 0.0)
    perp = np.stack([-diff[..., 1], diff[..., 0]], axis=-1)
    return -math.pi * d[:, None] * np.einsum("j,ij,ijk->ik", d, inv, perp)


def _gradient4(v: np.ndarray, h: float):
    """Fourth-order central differences (second order on the two outer rings)."""
    gx, gy = np.gradient(v, h, edge_order=2)
    gx[2:-2, :] = (v[:-4, :] - 8 * v[1:-3, :] + 8 * v[3:-1, :] - v[4:, :]) / (12 * h)
    gy[:, 2:-2] = (v[:, :-4] - 8 * v[:, 1:-3] + 8 * v[:, 3:-1] - v[:, 4:]) / (12 * h)
    return gx, gy


def interaction_quadrature(cfg: VortexConfiguration, tf: TestFunctionPair, spec: GridSpec):
    """Both sides of the Hopf-differential interaction identity, per vortex.

    Left: 2 int Im(omega(u*) d^2chi_i/dzbar^2) by nodal quadrature, with
    omega from fourth-order differences of the canonical harmonic map. The
    integrand vanishes to second order on both edges of the annulus
    r_a < |z - a_i| < 3 r_a/2, so the plain nodal sum keeps its accuracy.
    Right: the closed form dotted with grad chi_i(a_i) = g_i. Returns
    (lhs, rhs), each (l,).
    """
    from .fields import canonical_harmonic_map

    h = spec.h
    reach = 1.5 * tf.radius
    for c in tf.centers:
        if np.any(np.abs(c) + reach > spec.L - 3 * h):
            raise ValueError("test-function support clipped by the grid boundary")
    ustar = canonical_harmonic_map(cfg, spec).values
    ux, uy = _gradient4(ustar, h)
    omega = np.abs(ux) ** 2 - np.abs(uy) ** 2 - 2j * np.real(ux * np.conj(uy))
    z = spec.complex_mesh()
    lhs = np.empty(len(cfg))
    for i in range(len(cfg)):
        sel = np.abs(z - complex(*tf.centers[i])) < reach
        dz2 = tf.dzbar2(i, z[sel])
        lhs[i] = 2.0 * float(np.sum(np.imag(omega[sel] * dz2))) * h * h
    rhs = np.einsum("ik,ik->i", interaction_rhs(cfg), tf.gradients)
    return lhs, rhs


def interaction_vectors(cfg: VortexConfiguration, spec: GridSpec):
    """Quadrature and closed-form interaction vectors (l, 2), via g = e1 and g = e2."""
    n = len(cfg)
    lhs = np.empty((n, 2))
    rhs = np.empty((n, 2))
    for k in range(2):
        g = np.zeros((n, 2))
        g[:, k] = 1.0
        lhs[:, k], rhs[:, k] = interaction_quadrature(cfg, TestFunctionPair.for_configuration(cfg, g), spec)
    return lhs, rhs


# --- localization --------------------------------------------------------------------


def localization_residual(u: ComplexField, cfg: VortexConfiguration, radius: float | None = None) -> float:
    """Computable surrogate for ||Ju - pi sum d_i delta_{a_i}|| in the dual Lipschitz norm.

    Max over the dictionary {cutoff-times-affine with g in {e1, e2}, radial
    cutoff bump} per vortex of |int J chi - pi d_i chi(a_i)|.
    """
    spec = u.spec
    r = cfg.r_a if radius is None else radius
    if not math.isfinite(r):
        r = 0.25 * (spec.L - np.max(np.abs(cfg.points)))
    J = jacobian(u).values
    z = spec.complex_mesh()
    w = region_weights(spec, FullSquare(), _margin(spec))
    worst = 0.0
    for i, (p, d) in enumerate(zip(cfg.points, cfg.degrees)):
        dist = np.abs(z - complex(*p))
        sel = dist < 1.5 * r
        eta = cutoff(dist[sel] / r)[0]
        Jw = J[sel] * w[sel]
        worst = max(worst, abs(float(np.sum(Jw * eta)) - math.pi * d))
        for g in ((1.0, 0.0), (0.0, 1.0)):
            lin = g[0] * (z[sel].real - p[0]) + g[1] * (z[sel].imag - p[1])
            worst = max(worst, abs(float(np.sum(Jw * eta * lin))) / r)
    return worst


def jacobian_mass(u: ComplexField, center, radius: float, J: np.ndarray | None = None) -> float:
    J = jacobian(u).values if J is None else J
    w = region_weights(u.spec, Disk(tuple(center), radius), _margin(u.spec))
    return float(np.sum(w * J))


# --- core energy constant ------------------------------------------------------------


@dataclass
class CoreConstant:
    """Measured gamma(1): E(B(0,r)) - pi log(r/eps) for the single unit vortex."""

    value: float
    spread: float  # max deviation of any sample from value
    samples: dict = field(default_factory=dict)  # (r, eps) -> measured


def measure_core_constant(
    profile, radii=(0.3, 0.5, 0.8), eps_list=(0.05, 0.025), cells_per_eps: float = 12.0
) -> CoreConstant:
    """Plateau of the core energy over (r, eps) pairs; value = mean of the samples."""
    from .fields import reference_map

    samples = {}
    for eps in eps_list:
        L = 1.1 * max(radii)
        h_target = eps / cells_per_eps
        N = int(math.ceil(2 * L / h_target)) + 1
        N += (N + 1) % 2  # odd N: origin on a node
        spec = GridSpec(L, N)
        # keep the vortex off the origin node
        cfg = VortexConfiguration([(0.5 * spec.h, 0.5 * spec.h)], [1])
        u = reference_map(cfg, eps, profile, spec)
        dens = energy_density(u, eps)
        for r in radii:
            e = integrate(dens, Disk(tuple(cfg.points[0]), r), margin=_margin(spec))
            samples[(r, eps)] = e - math.pi * math.log(r / eps)
    vals = np.array(list(samples.values()))
    mean = float(vals.mean())
    return CoreConstant(mean, float(np.max(np.abs(vals - mean))), samples)


def ball_energy(
    cfg: VortexConfiguration, eps: float, profile, R: float, cells_per_eps: float = 12.0, h_far: float = 0.01
) -> float:
    """int_{B(R)} e_eps(u*_eps) by composite quadrature.

    A grid with h = eps / cells_per_eps covers B(R_a + 0.9), where the cores
    are; the annulus out to R, where |u*| = 1 + O(eps^2), uses spacing h_far.
    """
    from .fields import reference_map

    r_in = cfg.R_a + 0.9
    if R <= r_in:
        raise ExpansionError(f"R={R} must exceed R_a + 0.9 = {r_in:g}")
    L_in = r_in + 0.1
    fine = GridSpec(L_in, int(math.ceil(2 * L_in * cells_per_eps / eps)) + 1)
    u = reference_map(cfg, eps, profile, fine)
    inner = integrate(energy_density(u, eps), Disk((0.0, 0.0), r_in), margin=_margin(fine))
    L_out = R + 0.2
    coarse = GridSpec(L_out, int(math.ceil(2 * L_out / h_far)) + 1)
    v = reference_map(cfg, eps, profile, coarse)
    outer = integrate(energy_density(v, eps), Annulus((0.0, 0.0), r_in, R), margin=_margin(coarse))
    return inner + outer


def expansion_residual(cfg: VortexConfiguration, eps: float, profile, R: float, gamma: float, **kw) -> float:
    """E(B(R)) - [pi sum d_i^2 |log eps| + W + l gamma + pi d^2 log R] for u*_eps."""
    d = cfg.total_degree
    model = (
        math.pi * float(np.sum(cfg.degree_array**2)) * abs(math.log(eps))
        + kirchhoff_onsager(cfg)
        + len(cfg) * gamma
        + math.pi * d * d * math.log(R)
    )
    return ball_energy(cfg, eps, profile, R, **kw) - model
