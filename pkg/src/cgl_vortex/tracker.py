"""Vortex detection by Jacobian concentration and association into trajectories."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .diagnostics import DegreeUndefinedError, cutoff, jacobian, winding_degree
from .grid import ComplexField, Disk, region_weights

CORE_THRESHOLD = 0.5
COLLISION_REASON = "collision/annihilation"


class TrackingError(RuntimeError):
    pass


@dataclass(frozen=True)
class VortexDetection:
    position: tuple[float, float]
    degree: int
    core_modulus: float
    jacobian_mass: float
    collision_suspected: bool = False

    @property
    def quantization_error(self) -> float:
        return abs(self.jacobian_mass - math.pi * self.degree)


def _centroid(J, w, X, Y):
    m = np.sum(J * w)
    if m == 0:
        return None, 0.0
    return (float(np.sum(X * J * w) / m), float(np.sum(Y * J * w) / m)), float(m)


def detect(u: ComplexField, eps: float, refine: int = 3) -> list[VortexDetection]:
    """Vortices of u: clusters of |u| < 1/2, located by their Jacobian centroid.

    The first centroid is taken over the cluster dilated by three cells. It
    is then refined ``refine`` times with a smooth radial window of radius
    min(1.5 eps, 0.3 * distance to the nearest other cluster), which removes
    the bias of the pixelated cluster outline. Degrees come from the winding
    number on the circle of radius 3 eps.
    """
    spec = u.spec
    h = spec.h
    mod = np.abs(u.values)
    labels, count = ndimage.label(mod < CORE_THRESHOLD, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return []
    J = jacobian(u).values
    X, Y = spec.mesh()
    w_all = region_weights(spec, np.ones((spec.N, spec.N)), margin=2 * h)
    slices = ndimage.find_objects(labels)

    first = []
    for k, sl in enumerate(slices, start=1):
        pad = 4
        box = tuple(slice(max(s.start - pad, 0), min(s.stop + pad, spec.N)) for s in sl)
        mask = ndimage.binary_dilation(labels[box] == k, iterations=3)
        w = w_all[box] * mask
        Jb = J[box]
        c, m = _centroid(Jb, w, X[box], Y[box])
        pos_mass = float(np.sum(np.clip(Jb, 0, None) * w))
        neg_mass = float(np.sum(np.clip(-Jb, 0, None) * w))
        mixed = min(pos_mass, neg_mass) > 0.25 * math.pi
        if c is None:
            continue
        first.append((c, float(mod[box][labels[box] == k].min()), mixed))

    centers = np.array([c for c, _, _ in first]).reshape(-1, 2)
    out = []
    for idx, (c, cmin, mixed) in enumerate(first):
        others = np.delete(centers, idx, axis=0)
        nn = float(np.min(np.hypot(*(others - np.array(c)).T))) if len(others) else math.inf
        rho = min(1.5 * eps, 0.3 * nn)
        pos = c
        if rho > 2 * h:
            for _ in range(refine):
                sel = _window(spec, pos, 1.5 * rho)
                dist = np.hypot(X[sel] - pos[0], Y[sel] - pos[1])
                eta = cutoff(dist / rho)[0]
                new, m = _centroid(J[sel], eta * w_all[sel], X[sel], Y[sel])
                if new is None or m <= 0:
                    break
                pos = new
        collision = mixed or nn < 4 * eps
        degree = 0
        for radius in (3 * eps, 2 * eps, 1.5 * eps):
            if radius > 0.5 * nn:
                continue
            try:
                degree = winding_degree(u, pos, radius)
                break
            except (DegreeUndefinedError, ValueError):
                continue
        else:
            collision = True
        if degree == 0:
            continue
        # a multiply wound cluster is two or more merged unit cores
        collision = collision or abs(degree) > 1
        mass_r = min(6 * eps, 0.5 * nn)
        wm = region_weights(spec, Disk(pos, mass_r), margin=2 * h)
        out.append(VortexDetection(pos, int(degree), cmin, float(np.sum(wm * J)), collision))
    return out


def _window(spec, center, radius):
    i0, j0 = spec.index_of(center[0] - radius, center[1] - radius)
    i1, j1 = spec.index_of(center[0] + radius, center[1] + radius)
    lo_i, lo_j = max(int(math.floor(i0)), 0), max(int(math.floor(j0)), 0)
    hi_i, hi_j = min(int(math.ceil(i1)) + 1, spec.N), min(int(math.ceil(j1)) + 1, spec.N)
    return (slice(lo_i, hi_i), slice(lo_j, hi_j))


# --- trajectories -----------------------------------------------------------------------


@dataclass
class Trajectory:
    """Positions of l labelled vortices at a sequence of times."""

    degrees: tuple[int, ...]
    threshold: float = math.inf
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)  # one (l, 2) array per time
    terminated: str | None = None
    t_end: float | None = None

    @property
    def width(self) -> int:
        return len(self.degrees)

    @classmethod
    def start(cls, detections, t: float, threshold: float) -> "Trajectory":
        degs = tuple(int(d.degree) for d in detections)
        pos = np.array([d.position for d in detections], dtype=float).reshape(-1, 2)
        return cls(degs, threshold, [float(t)], [pos])

    def position_array(self) -> np.ndarray:
        return np.array(self.positions).reshape(len(self.times), self.width, 2)

    def append(self, t: float, positions) -> None:
        self.times.append(float(t))
        self.positions.append(np.asarray(positions, dtype=float).reshape(self.width, 2))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "id", "x", "y", "degree"])
            for t, pos in zip(self.times, self.positions):
                for i, (p, d) in enumerate(zip(pos, self.degrees)):
                    w.writerow([repr(float(t)), i, repr(float(p[0])), repr(float(p[1])), d])

    @classmethod
    def from_csv(cls, path, threshold: float = math.inf) -> "Trajectory":
        rows = {}
        degs = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["t", "id", "x", "y", "degree"]:
                raise TrackingError(f"{path}: expected header t,id,x,y,degree")
            for row in reader:
                t, i = float(row["t"]), int(row["id"])
                rows.setdefault(t, {})[i] = (float(row["x"]), float(row["y"]))
                d = int(row["degree"])
                if degs.setdefault(i, d) != d:
                    raise TrackingError(f"{path}: id {i} changes degree")
        ids = sorted(degs)
        traj = cls(tuple(degs[i] for i in ids), threshold)
        for t in sorted(rows):
            if sorted(rows[t]) != ids:
                raise TrackingError(f"{path}: incomplete row set at t={t}")
            traj.append(t, [rows[t][i] for i in ids])
        return traj


def associate(prev: Trajectory, detections, t: float) -> Trajectory:
    """Extend ``prev`` by one time level using greedy nearest-neighbour matching.

    A changed vortex count closes the trajectory with reason
    "collision/annihilation"; a match longer than the threshold raises
    TrackingError instead of silently swapping identities.
    """
    if prev.terminated:
        return prev
    out = replace(prev, times=list(prev.times), positions=list(prev.positions))
    if len(detections) != prev.width or sorted(d.degree for d in detections) != sorted(prev.degrees):
        out.terminated = COLLISION_REASON
        out.t_end = float(t)
        return out
    last = prev.positions[-1]
    cand = []
    for i, (p, d_i) in enumerate(zip(last, prev.degrees)):
        for k, det in enumerate(detections):
            if det.degree == d_i:
                cand.append((math.hypot(det.position[0] - p[0], det.position[1] - p[1]), i, k))
    cand.sort()
    taken_i, taken_k = set(), set()
    new = np.empty((prev.width, 2))
    for dist, i, k in cand:
        if i in taken_i or k in taken_k:
            continue
        if dist > prev.threshold:
            raise TrackingError(
                f"vortex {i} would move {dist:.4g} > threshold {prev.threshold:.4g} at t={t:g}"
            )
        taken_i.add(i)
        taken_k.add(k)
        new[i] = detections[k].position
    out.append(t, new)
    return out
