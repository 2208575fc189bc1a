"""Uniform node-centred grids on [-L, L]^2, finite differences and quadrature."""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels

SNAPSHOT_MAGIC = b"CGLF"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIId")

# cell subsampling offsets used for partially covered cells (4x4 per cell)
_SUB = (np.arange(4) - 1.5) / 4.0


class GridError(ValueError):
    pass


class EmptyRegionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Square [-L, L]^2 sampled by N x N nodes, x_p = -L + p*h."""

    half_extent: float
    resolution: int

    def __post_init__(self):
        if self.resolution < 3:
            raise GridError(f"resolution must be >= 3, got {self.resolution}")
        if not self.half_extent > 0:
            raise GridError(f"half_extent must be positive, got {self.half_extent}")

    @property
    def L(self) -> float:
        return self.half_extent

    @property
    def N(self) -> int:
        return self.resolution

    @property
    def h(self) -> float:
        return 2.0 * self.half_extent / (self.resolution - 1)

    @property
    def axis(self) -> np.ndarray:
        return -self.half_extent + self.h * np.arange(self.resolution)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates (X, Y), indexed [p, q] with X varying along axis 0."""
        x = self.axis
        return np.meshgrid(x, x, indexing="ij")

    def complex_mesh(self) -> np.ndarray:
        X, Y = self.mesh()
        return X + 1j * Y

    def index_of(self, x: float, y: float) -> tuple[float, float]:
        """Fractional node indices of a point."""
        return (x + self.half_extent) / self.h, (y + self.half_extent) / self.h

    def translated_mesh(self, shift) -> np.ndarray:
        return self.complex_mesh() + complex(shift[0], shift[1])


def _check_values(values, spec, dtype):
    values = np.ascontiguousarray(values, dtype=dtype)
    if values.shape[:2] != (spec.N, spec.N):
        raise GridError(f"values of shape {values.shape} do not match grid N={spec.N}")
    if not np.all(np.isfinite(values)):
        raise GridError("field contains non-finite values")
    return values


@dataclass
class ComplexField:
    spec: GridSpec
    values: np.ndarray
    valid: np.ndarray | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.values = _check_values(self.values, self.spec, np.complex128)

    def modulus(self) -> "ScalarField":
        return ScalarField(self.spec, np.abs(self.values))


@dataclass
class ScalarField:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = _check_values(self.values, self.spec, np.float64)


@dataclass
class VectorField:
    spec: GridSpec
    values: np.ndarray  # shape (N, N, 2)

    def __post_init__(self):
        self.values = _check_values(self.values, self.spec, np.float64)
        if self.values.shape != (self.spec.N, self.spec.N, 2):
            raise GridError("vector field must have shape (N, N, 2)")


def gradient(f: ComplexField) -> tuple[ComplexField, ComplexField]:
    """(d/dx, d/dy): centred differences inside, one-sided 2nd order on the edge."""
    if f.spec.N < 3:
        raise GridError("gradient needs N >= 3")
    dx, dy = np.gradient(f.values, f.spec.h, edge_order=2)
    return ComplexField(f.spec, dx), ComplexField(f.spec, dy)


def laplacian(f: ComplexField) -> ComplexField:
    """5-point Laplacian; boundary nodes are invalid (zero) and marked in ``valid``."""
    if f.spec.N < 3:
        raise GridError("laplacian needs N >= 3")
    out = kernels.laplacian5(f.values, f.spec.h)
    valid = np.zeros(out.shape, dtype=bool)
    valid[1:-1, 1:-1] = True
    return ComplexField(f.spec, out, valid=valid)


# --- regions ---------------------------------------------------------------


@dataclass(frozen=True)
class FullSquare:
    def cell_fraction(self, spec: GridSpec) -> np.ndarray:
        w = np.ones((spec.N, spec.N))
        w[0, :] *= 0.5
        w[-1, :] *= 0.5
        w[:, 0] *= 0.5
        w[:, -1] *= 0.5
        return w


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float

    def cell_fraction(self, spec: GridSpec) -> np.ndarray:
        return _disk_fraction(spec, self.center, self.radius)


@dataclass(frozen=True)
class Annulus:
    center: tuple[float, float]
    inner: float
    outer: float

    def cell_fraction(self, spec: GridSpec) -> np.ndarray:
        return _disk_fraction(spec, self.center, self.outer) - _disk_fraction(
            spec, self.center, self.inner
        )


def _disk_fraction(spec: GridSpec, center, radius) -> np.ndarray:
    frac = np.zeros((spec.N, spec.N))
    if radius <= 0:
        return frac
    h = spec.h
    cx, cy = float(center[0]), float(center[1])
    x = spec.axis
    lo = np.searchsorted(x, cx - radius - h)
    hi = np.searchsorted(x, cx + radius + h, side="right")
    jlo = np.searchsorted(x, cy - radius - h)
    jhi = np.searchsorted(x, cy + radius + h, side="right")
    if lo >= hi or jlo >= jhi:
        return frac
    X, Y = np.meshgrid(x[lo:hi] - cx, x[jlo:jhi] - cy, indexing="ij")
    d = np.hypot(X, Y)
    half_diag = h / np.sqrt(2.0)
    local = (d + half_diag <= radius).astype(float)
    edge = np.abs(d - radius) < half_diag
    if np.any(edge):
        ex, ey = X[edge], Y[edge]
        sx = ex[:, None, None] + h * _SUB[None, :, None]
        sy = ey[:, None, None] + h * _SUB[None, None, :]
        inside = (sx * sx + sy * sy) <= radius * radius
        local[edge] = inside.reshape(len(ex), -1).mean(axis=1)
    frac[lo:hi, jlo:jhi] = local
    return frac


def region_weights(spec: GridSpec, region, margin: float = 0.0) -> np.ndarray:
    """Quadrature weights (cell areas times coverage) of a region.

    ``region`` is a FullSquare/Disk/Annulus descriptor or an array of per-node
    coverage fractions (a boolean mask works). Nodes closer than ``margin``
    to the grid boundary get zero weight.
    """
    if hasattr(region, "cell_fraction"):
        frac = region.cell_fraction(spec)
    else:
        frac = np.asarray(region, dtype=float)
        if frac.shape != (spec.N, spec.N):
            raise GridError("region mask does not match the grid")
    w = frac * spec.h**2
    if margin > 0:
        k = int(np.ceil(margin / spec.h - 1e-12))
        if k > 0:
            w = w.copy()
            w[:k, :] = 0.0
            w[-k:, :] = 0.0
            w[:, :k] = 0.0
            w[:, -k:] = 0.0
    return w


def integrate(f, region=None, margin: float = 0.0) -> float:
    """Quadrature of a scalar field (or raw array on ``f.spec``) over a region."""
    spec = f.spec
    region = FullSquare() if region is None else region
    w = region_weights(spec, region, margin)
    if not np.any(w > 0):
        warnings.warn("integration region is empty", EmptyRegionWarning, stacklevel=2)
        return 0.0
    return float(np.sum(w * f.values))


# --- I/O -------------------------------------------------------------------


def write_snapshot(path, f: ComplexField) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, f.spec.N, f.spec.L))
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def read_snapshot(path) -> ComplexField:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, version, n, L = _HEADER.unpack(head)
        if magic != SNAPSHOT_MAGIC:
            raise GridError(f"{path}: not a field snapshot (magic {magic!r})")
        if version != SNAPSHOT_VERSION:
            raise GridError(f"{path}: unsupported snapshot version {version}")
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != n * n:
        raise GridError(f"{path}: truncated snapshot ({data.size} of {n * n} values)")
    return ComplexField(GridSpec(L, n), data.reshape(n, n).astype(np.complex128))


def write_csv(path, f: ComplexField) -> None:
    X, Y = f.spec.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "re", "im"])
        for x, y, z in zip(X.ravel(), Y.ravel(), f.values.ravel()):
            w.writerow([repr(float(x)), repr(float(y)), repr(z.real), repr(z.imag)])
