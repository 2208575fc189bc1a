"""Radial modulus profile of the unit-degree Ginzburg-Landau vortex.

The profile solves f'' + f'/r - f/r^2 + f(1 - f^2) = 0 with f(0) = 0 and
f(inf) = 1. It is found by shooting on the slope f'(0+): too small a slope
makes f turn down before reaching 1, too large a slope makes f cross 1. The
shot is only trustworthy up to the radius where the two bracketing
trajectories separate; beyond it the table follows the far-field expansion.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels

log = logging.getLogger(__name__)

# f ~ 1 + sum_k c_{2k} r^{-2k} for r -> inf
FAR_FIELD_COEFFS = (-1.0 / 2.0, -9.0 / 8.0, -161.0 / 16.0, -24661.0 / 128.0)
MIN_MATCH_RADIUS = 12.0


class ProfileError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialProfile:
    r_max: float
    r: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    slope0: float = float("nan")
    residual: float = float("nan")

    @property
    def samples(self) -> int:
        return len(self.r)

    @property
    def dr(self) -> float:
        return self.r_max / (len(self.r) - 1)


def far_field(r):
    """Far-field expansion of f and f' (valid for r >~ 10)."""
    r = np.asarray(r, dtype=float)
    inv2 = 1.0 / (r * r)
    f = np.ones_like(r)
    fp = np.zeros_like(r)
    p = np.ones_like(r)
    for k, c in enumerate(FAR_FIELD_COEFFS, start=1):
        p = p * inv2
        f = f + c * p
        fp = fp - 2 * k * c * p / r
    return f, fp


def _shoot(slope, dr, nsteps):
    f = np.full(nsteps + 1, np.nan)
    fp = np.full(nsteps + 1, np.nan)
    status, last = kernels.shoot_radial(float(slope), float(dr), int(nsteps), f, fp)
    return int(status), int(last), f, fp


def ode_residual(profile: RadialProfile, r_lo: float, r_hi: float) -> float:
    """Max |f'' + f'/r - f/r^2 + f(1-f^2)| on [r_lo, r_hi], f'' by second differences."""
    r, f, fp = profile.r, profile.f, profile.fp
    d = profile.dr
    j = np.arange(1, len(r) - 1)
    j = j[(r[j] >= r_lo) & (r[j] <= r_hi)]
    if j.size == 0:
        return 0.0
    fpp = (f[j + 1] - 2 * f[j] + f[j - 1]) / (d * d)
    rr = r[j]
    res = fpp + fp[j] / rr - f[j] / rr**2 + f[j] * (1 - f[j] ** 2)
    return float(np.max(np.abs(res)))


def solve_profile(
    r_max: float = 20.0,
    samples: int = 2001,
    tol: float = 1e-4,
    bracket: tuple[float, float] = (0.5, 0.9),
    max_iter: int = 200,
    cache: bool = True,
) -> RadialProfile:
    """Tabulate the vortex profile on r_j = j*r_max/(samples-1).

    Integration uses classical RK4 with ten substeps per table interval.
    Raises ProfileError if ``bracket`` does not bracket the slope or if the
    table residual misses ``tol``.
    """
    if r_max < 10:
        raise ValueError("r_max must be >= 10")
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    if not tol > 0:
        raise ValueError("tol must be positive")

    if cache:
        cached = _load_cached(r_max, samples, tol)
        if cached is not None:
            return cached

    sub = 10
    nsteps = sub * (samples - 1)
    dr = r_max / nsteps
    lo, hi = bracket
    s_lo, _, f_lo, _ = _shoot(lo, dr, nsteps)
    s_hi, _, f_hi, _ = _shoot(hi, dr, nsteps)
    if s_lo != -1 or s_hi != 1:
        raise ProfileError(
            f"shooting interval [{lo}, {hi}] does not bracket f'(0): "
            f"statuses {s_lo:+d}, {s_hi:+d} (need -1, +1)"
        )

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        status, _, _, _ = _shoot(mid, dr, nsteps)
        if status == 0:
            lo = hi = mid
            break
        if status > 0:
            hi = mid
        else:
            lo = mid

    slope = 0.5 * (lo + hi)
    _, last_lo, f_lo, fp_lo = _shoot(lo, dr, nsteps)
    _, last_hi, f_hi, fp_hi = _shoot(hi, dr, nsteps)
    n_ok = min(last_lo, last_hi)
    diff = np.abs(f_lo[: n_ok + 1] - f_hi[: n_ok + 1])
    bad = np.nonzero(diff > 1e-9)[0]
    k_div = int(bad[0]) if bad.size else n_ok
    r_div = k_div * dr

    f_fine = 0.5 * (f_lo + f_hi)
    fp_fine = 0.5 * (fp_lo + fp_hi)
    r_fine = dr * np.arange(nsteps + 1)

    r_tab = r_fine[::sub]
    f_tab = f_fine[::sub].copy()
    fp_tab = fp_fine[::sub].copy()

    if k_div < nsteps:
        r_match = r_div - 3.0
        if r_match < MIN_MATCH_RADIUS:
            raise ProfileError(
                f"shooting diverged at r={r_div:.3f}; cannot match the far field "
                f"(need r >= {MIN_MATCH_RADIUS + 3})"
            )
        tail = r_tab >= r_match
        f_tab[tail], fp_tab[tail] = far_field(r_tab[tail])
        log.debug("profile: shots separate at r=%.2f, far field from r=%.2f", r_div, r_match)

    f_tab[0] = 0.0
    prof = RadialProfile(r_max, r_tab, f_tab, fp_tab, slope0=slope)
    res = ode_residual(prof, prof.dr, r_max - 1.0)
    if not np.all(np.diff(f_tab) > 0) or not np.all(np.isfinite(f_tab)):
        raise ProfileError(f"profile table is not monotone/finite (residual {res:.3e})")
    if res > tol:
        raise ProfileError(f"profile residual {res:.3e} exceeds tol {tol:.3e}")
    prof = RadialProfile(r_max, r_tab, f_tab, fp_tab, slope0=slope, residual=res)
    if cache:
        _store_cached(prof, tol)
    return prof


def evaluate(profile: RadialProfile, r):
    """Cubic Hermite interpolation of f; 1 - 1/(2 r^2) beyond r_max."""
    v, _ = evaluate_with_derivative(profile, r)
    return v


def evaluate_with_derivative(profile: RadialProfile, r):
    r_in = np.asarray(r, dtype=float)
    if np.any(r_in < 0):
        raise ValueError("profile evaluated at negative radius")
    scalar = r_in.ndim == 0
    r = np.atleast_1d(r_in)
    out = np.empty_like(r)
    dout = np.empty_like(r)
    far = r > profile.r_max
    out[far] = 1.0 - 0.5 / r[far] ** 2
    dout[far] = 1.0 / r[far] ** 3
    near = ~far
    if np.any(near):
        d = profile.dr
        x = r[near] / d
        j = np.minimum(np.floor(x).astype(np.int64), len(profile.r) - 2)
        t = x - j
        f0, f1 = profile.f[j], profile.f[j + 1]
        m0, m1 = profile.fp[j] * d, profile.fp[j + 1] * d
        t2 = t * t
        t3 = t2 * t
        out[near] = (
            (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * m1
        )
        dout[near] = (
            (6 * t2 - 6 * t) * f0 + (3 * t2 - 4 * t + 1) * m0 + (-6 * t2 + 6 * t) * f1 + (3 * t2 - 2 * t) * m1
        ) / d
    if scalar:
        return float(out[0]), float(dout[0])
    return out.reshape(r_in.shape), dout.reshape(r_in.shape)


# --- cache -----------------------------------------------------------------


def cache_dir() -> Path:
    env = os.environ.get("CGL_VORTEX_CACHE")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "cgl_vortex"


def _cache_path(r_max, samples, tol) -> Path:
    key = hashlib.sha1(f"{r_max!r}|{samples}|{tol!r}".encode()).hexdigest()[:16]
    return cache_dir() / f"profile_{key}.csv"


def write_profile_csv(path, profile: RadialProfile) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "f", "fp"])
        for r, f, fp in zip(profile.r, profile.f, profile.fp):
            w.writerow([repr(float(r)), repr(float(f)), repr(float(fp))])


def read_profile_csv(path) -> RadialProfile:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    with open(path) as fh:
        header = fh.readline().strip()
    if header != "r,f,fp":
        raise ProfileError(f"{path}: unexpected header {header!r}")
    r, f, fp = data[:, 0], data[:, 1], data[:, 2]
    prof = RadialProfile(float(r[-1]), r, f, fp, slope0=float(fp[0]))
    return RadialProfile(prof.r_max, r, f, fp, prof.slope0, ode_residual(prof, prof.dr, prof.r_max - 1))


def _load_cached(r_max, samples, tol):
    path = _cache_path(r_max, samples, tol)
    if not path.exists():
        return None
    try:
        prof = read_profile_csv(path)
    except (OSError, ValueError, ProfileError):
        return None
    if prof.samples != samples or abs(prof.r_max - r_max) > 1e-12:
        return None
    return prof


def _store_cached(profile, tol):
    path = _cache_path(profile.r_max, profile.samples, tol)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        write_profile_csv(tmp, profile)
        tmp.replace(path)
    except OSError as exc:  # read-only home etc.
        log.warning("could not cache profile at %s: %s", path, exc)
