import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgl_vortex import diagnostics as dg
from cgl_vortex.fields import VortexConfiguration, canonical_harmonic_map, reference_map
from cgl_vortex.grid import ComplexField, Disk, GridSpec


def _lin(spec, f):
    X, Y = spec.mesh()
    return ComplexField(spec, f(X, Y))


SPEC = GridSpec(1.0, 41)


@pytest.mark.parametrize(
    "f,J",
    [(lambda x, y: x + 1j * y, 1.0), (lambda x, y: x - 1j * y, -1.0), (lambda x, y: 2 * x + 3j * y, 6.0)],
)
def test_jacobian_of_linear_maps(f, J):
    np.testing.assert_allclose(dg.jacobian(_lin(SPEC, f)).values, J, atol=1e-12)


def test_momentum_of_plane_wave():
    u = _lin(SPEC, lambda x, y: np.exp(1j * (0.7 * x - 1.3 * y)))
    j = dg.momentum(u).values
    np.testing.assert_allclose(j[5:-5, 5:-5, 0], 0.7, atol=2e-3)
    np.testing.assert_allclose(j[5:-5, 5:-5, 1], -1.3, atol=2e-3)


@pytest.mark.parametrize(
    "f,w",
    [
        (lambda x, y: x + 1j * y, 0.0),
        (lambda x, y: x + 0j, 1.0),
        (lambda x, y: y + 0j, -1.0),
        (lambda x, y: x + y + 0j, -2j),
    ],
)
def test_hopf_differential_of_linear_maps(f, w):
    np.testing.assert_allclose(dg.hopf_differential(_lin(SPEC, f)).values, w, atol=1e-12)


def test_hopf_of_harmonic_map_is_minus_square_of_log_derivative():
    spec = GridSpec(2.0, 801)
    cfg = VortexConfiguration([(0.3, 0.1 + 0.003), (-0.4, -0.2 + 0.002)], [1, -1])
    u = canonical_harmonic_map(cfg, spec)
    z = spec.complex_mesh()
    c = sum(d / (z - complex(*p)) for p, d in zip(cfg.points, cfg.degrees))
    far = (np.abs(z - complex(*cfg.points[0])) > 0.3) & (np.abs(z - complex(*cfg.points[1])) > 0.3)
    far &= np.abs(z.real) < 1.8
    far &= np.abs(z.imag) < 1.8
    # omega = (d1 phi - i d2 phi)^2 = (2 d_z phi)^2 = (-i c)^2
    got = dg.hopf_differential(u).values[far]
    expect = -c[far] ** 2
    assert np.max(np.abs(got - expect)) < 1e-3 * np.max(np.abs(expect))


@settings(max_examples=25, deadline=None)
@given(
    a=st.floats(0.5, 2.0),
    b=st.floats(-2.0, 2.0),
    c=st.floats(-2.0, 2.0),
    amp=st.floats(0.0, 0.5),
)
def test_modulus_current_identities_on_smooth_fields(a, b, c, amp):
    """|grad u|^2 = |grad|u||^2 + |j|^2/|u|^2 and the omega rewriting, to O(h^2)."""
    spec = GridSpec(1.0, 129)
    X, Y = spec.mesh()
    u = ComplexField(spec, (1 + amp * np.sin(a * X + b * Y)) * np.exp(1j * (c * X + a * Y * Y)))
    r = dg.identity_residuals(u)
    bound = 10 * spec.h**2 * r.scale[r.mask] + 1e-12
    assert np.all(np.abs(r.modules[r.mask]) <= bound)
    assert np.all(np.abs(r.omega[r.mask]) <= bound)
    for k in range(2):
        for l in range(2):
            assert np.all(np.abs(r.modules3[..., k, l][r.mask]) <= bound)


def test_energy_split_is_exact(profile):
    spec = GridSpec(1.0, 201)
    u = reference_map(VortexConfiguration([(0.0031, -0.0017)], [1]), 0.05, profile, spec)
    b = dg.energy_breakdown(u, 0.05, Disk((0.0, 0.0), 0.6))
    assert b.total == pytest.approx(b.modulus_part + b.momentum_part, rel=1e-12)
    assert b.total == pytest.approx(b.gradient_part + b.potential_part, rel=1e-14)
    assert "disk" in b.region and '"total"' in b.to_json()


def test_unit_disk_dirichlet_energy_is_pi_d():
    for d in (1, 2):
        assert dg.unit_disk_dirichlet(d) == pytest.approx(math.pi * d, rel=2e-3)


def test_winding_degrees():
    spec = GridSpec(1.0, 201)
    cfg = VortexConfiguration([(0.3, 0.0031), (-0.3, 0.0017)], [1, 1])
    u = canonical_harmonic_map(cfg, spec)
    assert dg.winding_degree(u, (0.3, 0.0), 0.1) == 1
    assert dg.winding_degree(u, (0.0, 0.0), 0.8) == 2
    assert dg.winding_degree(u, (0.0, 0.5), 0.1) == 0
    assert dg.boundary_degree(u.values) == 2


def test_degree_undefined_on_a_core(profile):
    spec = GridSpec(1.0, 201)
    u = reference_map(VortexConfiguration([(0.0031, 0.0017)], [1]), 0.05, profile, spec)
    with pytest.raises(dg.DegreeUndefinedError):
        dg.winding_degree(u, (0.01, 0.0), 0.01)


def test_kirchhoff_onsager_values():
    dip = VortexConfiguration([(0, 0), (1, 0)], [1, -1])
    assert dg.kirchhoff_onsager(dip) == pytest.approx(0.0, abs=1e-15)
    far = VortexConfiguration([(0, 0), (math.e, 0)], [1, -1])
    assert dg.kirchhoff_onsager(far) == pytest.approx(2 * math.pi)
    np.testing.assert_allclose(dg.kirchhoff_gradient(dip, 0), [-2 * math.pi, 0.0])
    np.testing.assert_allclose(dg.kirchhoff_gradient(dip, 1), [2 * math.pi, 0.0])
    assert dg.kirchhoff_gradient(VortexConfiguration([(0, 0)], [1])).shape == (1, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_kirchhoff_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    cfg = VortexConfiguration(rng.uniform(-1, 1, (4, 2)), rng.choice([-1, 1], 4))
    if cfg.r_a < 0.01:
        return
    g = dg.kirchhoff_gradient(cfg)
    step = 1e-6
    for i in range(4):
        for k in range(2):
            e = np.zeros((4, 2))
            e[i, k] = step
            fd = (dg.kirchhoff_onsager(cfg.with_points(cfg.points + e)) - dg.kirchhoff_onsager(cfg.with_points(cfg.points - e))) / (2 * step)
            assert fd == pytest.approx(g[i, k], rel=1e-6, abs=1e-6 * np.abs(g).max())


def test_cutoff_shape():
    s = np.linspace(0, 2, 2001)
    eta, d1, d2 = dg.cutoff(s)
    assert np.all(eta[s <= 1] == 1) and np.all(eta[s >= 1.5] == 0)
    np.testing.assert_allclose(np.gradient(eta, s)[5:-5], d1[5:-5], atol=2e-3)
    np.testing.assert_allclose(np.gradient(d1, s)[5:-5], d2[5:-5], atol=2e-2)


def test_test_function_hessian_matches_finite_differences():
    tf = dg.TestFunctionPair([(0.1, -0.2)], 0.2, [(0.6, -0.8)])
    h = 1e-4
    z = np.array([0.1 + 0.23 + 0.05j - 0.2j, 0.1 - 0.1 + 0.2j - 0.2j])
    cxx, cxy, cyy = tf.hessian(0, z)
    f = lambda w: tf.values(w)
    fxx = (f(z + h) - 2 * f(z) + f(z - h)) / h**2
    fyy = (f(z + 1j * h) - 2 * f(z) + f(z - 1j * h)) / h**2
    fxy = (f(z + h + 1j * h) - f(z + h - 1j * h) - f(z - h + 1j * h) + f(z - h - 1j * h)) / (4 * h * h)
    np.testing.assert_allclose(cxx, fxx, rtol=1e-5, atol=1e-4)
    np.testing.assert_allclose(cyy, fyy, rtol=1e-5, atol=1e-4)
    np.testing.assert_allclose(cxy, fxy, rtol=1e-5, atol=1e-4)
    with pytest.raises(ValueError):
        dg.TestFunctionPair([(0, 0)], 0.2, [(1.0, 1.0)])


def test_interaction_quadrature_is_minus_twice_the_closed_form():
    """Residue calculus: 2 int Im(omega d^2chi/dzbar^2) = 2 pi d_i sum_j d_j g.(a_i-a_j)^perp/|a_i-a_j|^2."""
    spec = GridSpec(2.0, 1025)
    h = spec.h
    cfg = VortexConfiguration([(0.3 + 0.3 * h, 0.1), (-0.45, 0.35 + 0.2 * h), (0.05, -0.6 + 0.1 * h)], [1, -1, 1])
    lhs, rhs = dg.interaction_vectors(cfg, spec)
    np.testing.assert_allclose(lhs, -2 * rhs, atol=1e-2)


def test_interaction_rhs_closed_form():
    cfg = VortexConfiguration([(0, 0), (1, 0)], [1, -1])
    np.testing.assert_allclose(dg.interaction_rhs(cfg), [[0.0, -math.pi], [0.0, math.pi]], atol=1e-15)


def test_jacobian_mass_quantized(profile):
    spec = GridSpec(1.0, 401)
    u = reference_map(VortexConfiguration([(0.0013, 0.0011)], [-1]), 0.02, profile, spec)
    assert dg.jacobian_mass(u, (0.0, 0.0), 0.7) == pytest.approx(-math.pi, abs=1e-2)


def test_localization_residual_shrinks_with_eps(profile):
    spec = GridSpec(2.0, 801)
    cfg = VortexConfiguration([(-0.5 + 0.0017, 0.0013), (0.5 + 0.0017, 0.0013)], [1, -1])
    res = [dg.localization_residual(reference_map(cfg, e, profile, spec), cfg) for e in (0.08, 0.04, 0.02)]
    assert res[0] > res[1] > res[2]


def test_renormalized_energy_of_single_vortex(profile):
    """E(B(R)) - pi log R - pi = gamma(1) + pi log(1/eps) - pi up to the far-field tail."""
    spec = GridSpec(1.2, 961)
    eps = 0.025
    u = reference_map(VortexConfiguration([(0.3 * spec.h, 0.2 * spec.h)], [1]), eps, profile, spec)
    ren = dg.renormalized_energy(u, 1, eps, 1.0)
    gamma = dg.measure_core_constant(profile, radii=(1.0,), eps_list=(eps,), cells_per_eps=24 * spec.h / eps * eps / spec.h / 2).value
    assert ren.value == pytest.approx(gamma + math.pi * math.log(1 / eps) - math.pi, abs=2e-2)
    assert ren.truncation_estimate < 1e-2
    with pytest.raises(dg.ExpansionError):
        dg.renormalized_energy(u, 1, eps, 1.5)


def test_dipole_ball_expansion_with_exact_tail(profile):
    """For a +-1 dipole at distance 2 the harmonic far field outside B(R) carries
    pi log((R^2+1)/(R^2-1)); adding it back leaves only the gamma and grid error."""
    gamma = dg.measure_core_constant(profile).value
    cfg = VortexConfiguration([(1 + 1e-4, 1e-4), (-1 + 1e-4, 1e-4)], [1, -1])
    R = 4.0
    res = dg.expansion_residual(cfg, 0.02, profile, R, gamma)
    tail = math.pi * math.log((R * R + 1) / (R * R - 1))
    assert res + tail == pytest.approx(0.0, abs=2.5e-2)
    with pytest.raises(dg.ExpansionError):
        dg.ball_energy(cfg, 0.02, profile, 1.5)
