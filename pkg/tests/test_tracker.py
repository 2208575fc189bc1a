import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgl_vortex.fields import VortexConfiguration, reference_map
from cgl_vortex.grid import ComplexField, GridSpec
from cgl_vortex.profile import evaluate
from cgl_vortex.tracker import (
    COLLISION_REASON,
    Trajectory,
    TrackingError,
    VortexDetection,
    associate,
    detect,
)

SPEC = GridSpec(1.0, 201)
EPS = 0.04


def _det(x, y, d=1):
    return VortexDetection((x, y), d, 0.0, math.pi * d)


@settings(max_examples=15, deadline=None)
@given(
    x=st.floats(-0.3, 0.3),
    y=st.floats(-0.3, 0.3),
    d=st.sampled_from([-1, 1]),
)
def test_single_vortex_located_to_a_fraction_of_a_cell(profile, x, y, d):
    x, y = x + 0.31 * SPEC.h, y + 0.17 * SPEC.h  # keep the core off the nodes
    u = reference_map(VortexConfiguration([(x, y)], [d]), EPS, profile, SPEC)
    (det,) = detect(u, EPS)
    assert det.degree == d
    assert math.hypot(det.position[0] - x, det.position[1] - y) < 0.25 * SPEC.h
    # int_{B(R)} J(f(r/eps) e^{i d theta}) = pi d f(R/eps)^2
    assert det.jacobian_mass == pytest.approx(math.pi * d * float(evaluate(profile, 6.0)) ** 2, abs=2e-2)
    assert det.core_modulus < 0.1
    assert not det.collision_suspected


def test_pair_of_mixed_degrees(profile):
    pts = [(-0.3 + 0.0031, 0.1 + 0.0013), (0.25 + 0.0023, -0.2 + 0.0017), (0.1 + 0.0041, 0.35 + 0.0029)]
    u = reference_map(VortexConfiguration(pts, [1, -1, 1]), EPS, profile, SPEC)
    dets = sorted(detect(u, EPS), key=lambda d: d.position[0])
    assert [d.degree for d in dets] == [1, 1, -1]
    got = np.array([d.position for d in dets])
    want = np.array(sorted(pts))
    # the neighbours' phase factors bias each Jacobian centroid by O(eps^2 / distance)
    assert np.max(np.abs(got - want)) < max(SPEC.h, EPS / 4)


def test_vortex_free_field_has_no_detections():
    assert detect(ComplexField(SPEC, np.ones((201, 201), complex)), EPS) == []


def test_close_cores_flag_a_collision(profile):
    u = reference_map(VortexConfiguration([(-0.06 + 0.0013, 0.0013), (0.06 + 0.0013, 0.0013)], [1, 1]), EPS, profile, SPEC)
    dets = detect(u, EPS)
    assert dets and all(d.collision_suspected for d in dets)
    assert sum(d.degree for d in dets) == 2


def test_merged_dipole_core_is_discarded(profile):
    u = reference_map(VortexConfiguration([(-0.03 + 0.0013, 0.0013), (0.03 + 0.0013, 0.0013)], [1, -1]), EPS, profile, SPEC)
    assert detect(u, EPS) == []


def test_example_vortex_and_dipole(profile):
    spec = GridSpec(1.0, 201)
    u = reference_map(VortexConfiguration([(0.3 + 0.0013, -0.2 + 0.0021)], [1]), 0.05, profile, spec)
    (det,) = detect(u, 0.05)
    assert det.degree == 1 and math.hypot(det.position[0] - 0.3, det.position[1] + 0.2) < spec.h
    dip = reference_map(VortexConfiguration([(-0.3 + 0.0013, 0.0021), (0.3 + 0.0013, 0.0021)], [1, -1]), 0.05, profile, spec)
    dets = sorted(detect(dip, 0.05), key=lambda d: d.position[0])
    assert [d.degree for d in dets] == [1, -1]
    assert all(abs(d.jacobian_mass - math.pi * d.degree) < 0.15 for d in dets)


def test_detection_is_translation_equivariant(profile):
    spec = GridSpec(1.0, 201)
    h = spec.h
    base = [(-0.2 + 0.31 * h, 0.1 + 0.17 * h), (0.25 + 0.23 * h, -0.15 + 0.41 * h)]
    shift = np.array([7 * h, -4 * h])
    d0 = detect(reference_map(VortexConfiguration(base, [1, -1]), EPS, profile, spec), EPS)
    d1 = detect(reference_map(VortexConfiguration(np.array(base) + shift, [1, -1]), EPS, profile, spec), EPS)
    p0 = np.array(sorted(d.position for d in d0))
    p1 = np.array(sorted(d.position for d in d1))
    np.testing.assert_allclose(p1 - p0, np.tile(shift, (2, 1)), atol=1e-3 * h)


def test_total_degree_matches_large_circle(profile):
    from cgl_vortex.diagnostics import winding_degree

    pts = [(-0.3 + 0.0031, 0.1 + 0.0013), (0.25 + 0.0023, -0.2 + 0.0017), (0.1 + 0.0041, 0.35 + 0.0029)]
    u = reference_map(VortexConfiguration(pts, [1, 1, -1]), EPS, profile, SPEC)
    assert sum(d.degree for d in detect(u, EPS)) == winding_degree(u, (0.0, 0.0), 0.7) == 1


def test_association_keeps_identities_under_shuffling():
    tr = Trajectory.start([_det(0.0, 0.0), _det(0.5, 0.0, -1)], 0.0, threshold=0.1)
    tr = associate(tr, [_det(0.52, 0.01, -1), _det(0.01, 0.02)], 0.1)
    np.testing.assert_allclose(tr.positions[-1], [[0.01, 0.02], [0.52, 0.01]])
    assert tr.times == [0.0, 0.1] and tr.terminated is None


def test_association_respects_degrees():
    # nearest neighbour by distance alone would swap these two
    tr = Trajectory.start([_det(0.0, 0.0, 1), _det(0.05, 0.0, -1)], 0.0, threshold=0.2)
    tr = associate(tr, [_det(0.051, 0.0, 1), _det(0.001, 0.0, -1)], 0.1)
    np.testing.assert_allclose(tr.positions[-1], [[0.051, 0.0], [0.001, 0.0]])


def test_vanished_vortices_terminate_the_trajectory():
    tr = Trajectory.start([_det(0.0, 0.0), _det(0.1, 0.0, -1)], 0.0, threshold=0.1)
    out = associate(tr, [], 0.3)
    assert out.terminated == COLLISION_REASON and out.t_end == 0.3
    assert len(out.times) == 1
    assert associate(out, [_det(0, 0), _det(0.1, 0, -1)], 0.4) is out


def test_jump_over_threshold_raises():
    tr = Trajectory.start([_det(0.0, 0.0)], 0.0, threshold=0.05)
    with pytest.raises(TrackingError):
        associate(tr, [_det(0.2, 0.0)], 0.1)


def test_csv_round_trip(tmp_path):
    tr = Trajectory.start([_det(0.1, 0.2), _det(-0.3, 0.4, -1)], 0.0, threshold=1.0)
    tr = associate(tr, [_det(0.11, 0.21), _det(-0.31, 0.41, -1)], 0.5)
    tr.to_csv(tmp_path / "t.csv")
    back = Trajectory.from_csv(tmp_path / "t.csv")
    assert back.degrees == tr.degrees and back.times == tr.times
    np.testing.assert_array_equal(back.position_array(), tr.position_array())
    (tmp_path / "bad.csv").write_text("time,x,y\n0,1,2\n")
    with pytest.raises(TrackingError):
        Trajectory.from_csv(tmp_path / "bad.csv")
