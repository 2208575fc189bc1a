import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgl_vortex.grid import (
    Annulus,
    ComplexField,
    Disk,
    EmptyRegionWarning,
    FullSquare,
    GridError,
    GridSpec,
    ScalarField,
    gradient,
    integrate,
    laplacian,
    read_snapshot,
    write_csv,
    write_snapshot,
)


def test_spacing_and_axis():
    g = GridSpec(2.0, 5)
    assert g.h == 1.0
    np.testing.assert_array_equal(g.axis, [-2, -1, 0, 1, 2])
    X, Y = g.mesh()
    assert X[4, 0] == 2.0 and Y[0, 4] == 2.0


@pytest.mark.parametrize("L,N", [(1.0, 2), (0.0, 10), (-1.0, 10)])
def test_bad_grids_rejected(L, N):
    with pytest.raises(GridError):
        GridSpec(L, N)


def test_field_shape_and_finiteness_enforced():
    g = GridSpec(1.0, 5)
    with pytest.raises(GridError):
        ComplexField(g, np.zeros((4, 5)))
    bad = np.zeros((5, 5), dtype=complex)
    bad[2, 2] = np.nan
    with pytest.raises(GridError):
        ComplexField(g, bad)


def test_gradient_exact_for_quadratics():
    g = GridSpec(1.0, 21)
    X, Y = g.mesh()
    f = ComplexField(g, X**2 + 1j * X * Y)
    dx, dy = gradient(f)
    np.testing.assert_allclose(dx.values, 2 * X + 1j * Y, atol=1e-12)
    np.testing.assert_allclose(dy.values, 1j * X, atol=1e-12)


def test_laplacian_marks_boundary_invalid():
    g = GridSpec(1.0, 11)
    X, Y = g.mesh()
    lap = laplacian(ComplexField(g, X**2 + Y**2))
    assert not lap.valid[0].any() and lap.valid[5, 5]
    np.testing.assert_allclose(lap.values[lap.valid], 4.0, atol=1e-9)


def test_full_square_integrates_area():
    g = GridSpec(1.5, 31)
    assert integrate(ScalarField(g, np.ones((31, 31)))) == pytest.approx(9.0, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(r=st.floats(0.2, 0.9), cx=st.floats(-0.05, 0.05), cy=st.floats(-0.05, 0.05))
def test_disk_area(r, cx, cy):
    g = GridSpec(1.0, 201)
    one = ScalarField(g, np.ones((201, 201)))
    assert integrate(one, Disk((cx, cy), r)) == pytest.approx(math.pi * r * r, rel=3e-3)


def test_annulus_area():
    g = GridSpec(1.0, 401)
    one = ScalarField(g, np.ones((401, 401)))
    assert integrate(one, Annulus((0.0, 0.0), 0.3, 0.8)) == pytest.approx(math.pi * (0.64 - 0.09), rel=1e-3)


def test_empty_region_warns_and_returns_zero():
    g = GridSpec(1.0, 21)
    one = ScalarField(g, np.ones((21, 21)))
    with pytest.warns(EmptyRegionWarning):
        assert integrate(one, Disk((5.0, 5.0), 0.1)) == 0.0


def test_margin_removes_edge_weight():
    g = GridSpec(1.0, 21)
    one = ScalarField(g, np.ones((21, 21)))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        inner = integrate(one, FullSquare(), margin=0.25)
    assert inner < 4.0


def test_snapshot_roundtrip(tmp_path):
    g = GridSpec(1.25, 9)
    rng = np.random.default_rng(0)
    f = ComplexField(g, rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9)))
    write_snapshot(tmp_path / "f.cglf", f)
    back = read_snapshot(tmp_path / "f.cglf")
    assert back.spec == g
    np.testing.assert_array_equal(back.values, f.values)


def test_snapshot_rejects_foreign_and_truncated_files(tmp_path):
    (tmp_path / "junk.cglf").write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(GridError, match="magic"):
        read_snapshot(tmp_path / "junk.cglf")
    g = GridSpec(1.0, 5)
    write_snapshot(tmp_path / "f.cglf", ComplexField(g, np.ones((5, 5))))
    data = (tmp_path / "f.cglf").read_bytes()
    (tmp_path / "t.cglf").write_bytes(data[:-16])
    with pytest.raises(GridError, match="truncated"):
        read_snapshot(tmp_path / "t.cglf")


def test_csv_export(tmp_path):
    g = GridSpec(1.0, 3)
    write_csv(tmp_path / "f.csv", ComplexField(g, np.full((3, 3), 1 + 2j)))
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "x,y,re,im" and len(lines) == 10
