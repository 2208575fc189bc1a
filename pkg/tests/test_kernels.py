import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from cgl_vortex import _kernels_py as py
from cgl_vortex import kernels

try:
    from cgl_vortex import _kernels as cy
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def _field(n, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def test_backend_is_reported():
    assert kernels.BACKEND in ("cython", "python")


@needs_ext
@pytest.mark.parametrize("n", [3, 8, 33])
def test_laplacian_backends_agree(n):
    u = _field(n, n)
    np.testing.assert_allclose(cy.laplacian5(u, 0.1), py.laplacian5(u, 0.1), rtol=1e-13, atol=1e-12)


@needs_ext
def test_energy_and_norm_backends_agree():
    u, v = _field(17, 1), _field(17, 2)
    np.testing.assert_allclose(cy.lattice_energy(u, 0.05, 0.1), py.lattice_energy(u, 0.05, 0.1), rtol=1e-12)
    assert cy.sq_diff_norm(u, v) == pytest.approx(py.sq_diff_norm(u, v), rel=1e-13)


@needs_ext
@pytest.mark.parametrize("a,b", [(0.3, -0.9), (0.0, -1.0)])
def test_nonlinear_flow_backends_agree(a, b):
    u1 = 0.7 * _field(12, 3)
    u2 = u1.copy()
    cy.nonlinear_flow(u1, 0.4, a, b)
    py.nonlinear_flow(u2, 0.4, a, b)
    np.testing.assert_allclose(u1, u2, rtol=1e-13, atol=1e-14)


@needs_ext
def test_shoot_backends_agree():
    out = [np.zeros(2001) for _ in range(4)]
    s1 = cy.shoot_radial(0.58, 0.01, 2000, out[0], out[1])
    s2 = py.shoot_radial(0.58, 0.01, 2000, out[2], out[3])
    assert tuple(s1) == tuple(s2)
    k = s1[1]
    np.testing.assert_allclose(out[0][:k], out[2][:k], rtol=1e-12, atol=1e-14)


def test_laplacian_exact_on_quadratics():
    h = 0.1
    x = h * np.arange(9)
    X, Y = np.meshgrid(x, x, indexing="ij")
    u = (X**2 + 3 * X * Y - 2 * Y**2).astype(complex)
    lap = kernels.laplacian5(u, h)
    np.testing.assert_allclose(lap[1:-1, 1:-1], -2.0, atol=1e-10)
    assert np.all(lap[0] == 0) and np.all(lap[:, -1] == 0)


@settings(max_examples=30, deadline=None)
@given(
    rho=st.floats(0.01, 1.5),
    theta=st.floats(-3.0, 3.0),
    tau=st.floats(1e-3, 2.0),
    k=st.floats(0.0, 2.0),
)
def test_nonlinear_flow_matches_ode_oracle(rho, theta, tau, k):
    """Closed-form flow of du/dt = beta u (1 - |u|^2) against an RK45 integration."""
    beta = 1.0 / (k + 1j)
    u = np.full((3, 3), rho * np.exp(1j * theta), dtype=complex)
    kernels.nonlinear_flow(u, tau, beta.real, beta.imag)

    def rhs(_t, y):
        z = y[0] + 1j * y[1]
        dz = beta * z * (1 - abs(z) ** 2)
        return [dz.real, dz.imag]

    z0 = rho * np.exp(1j * theta)
    sol = solve_ivp(rhs, (0, tau), [z0.real, z0.imag], rtol=1e-11, atol=1e-13)
    expect = sol.y[0, -1] + 1j * sol.y[1, -1]
    assert abs(u[1, 1] - expect) < 1e-8
    # boundary ring untouched
    assert u[0, 0] == z0


def test_gp_limit_phase_rotates_clockwise_for_small_modulus():
    """delta = 0: beta = -i, so du/dt = -i u (1-|u|^2): modulus frozen, phase decreases."""
    u = np.full((3, 3), 0.5 + 0j)
    kernels.nonlinear_flow(u, 0.1, 0.0, -1.0)
    assert abs(u[1, 1]) == pytest.approx(0.5, abs=1e-15)
    assert np.angle(u[1, 1]) == pytest.approx(-0.1 * 0.75, abs=1e-14)


def test_lattice_energy_of_constant_unit_field_vanishes():
    u = np.ones((10, 10), dtype=complex)
    g, p = kernels.lattice_energy(u, 0.1, 0.05)
    assert g == 0.0 and p == 0.0
