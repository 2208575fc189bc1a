"""NumPy implementations of the compiled kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built or when
``CGL_VORTEX_PURE=1`` is set.
"""

import numpy as np


def laplacian5(u, h):
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = (
        u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]
    ) / (h * h)
    return out


def nonlinear_flow(u, tau, a, b):
    z = u[1:-1, 1:-1]
    s0 = z.real**2 + z.imag**2
    if a > 0.0:
        em = np.expm1(-2.0 * a * tau)
        g = -np.log1p((1.0 - s0) * em) / (2.0 * a)
    else:
        g = tau * (1.0 - s0)
    z *= np.exp((a + 1j * b) * g)


def lattice_energy(u, h, eps):
    grad = np.sum(np.abs(np.diff(u, axis=0)) ** 2) + np.sum(np.abs(np.diff(u, axis=1)) ** 2)
    w = np.ones(u.shape)
    w[0, :] *= 0.5
    w[-1, :] *= 0.5
    w[:, 0] *= 0.5
    w[:, -1] *= 0.5
    s = 1.0 - (u.real**2 + u.imag**2)
    pot = np.sum(w * s * s) * h * h / (4.0 * eps * eps)
    return 0.5 * grad, pot


def sq_diff_norm(u1, u0):
    d = u1 - u0
    return float(np.sum(d.real**2 + d.imag**2))


def _rhs(r, f, g):
    return g, -g / r + f / (r * r) - f * (1.0 - f * f)


def shoot_radial(slope, dr, nsteps, f_out, fp_out):
    c3 = -slope / 8.0
    c5 = (slope**3 + slope / 8.0) / 24.0
    f_out[0] = 0.0
    fp_out[0] = slope
    r = dr
    f = slope * r + c3 * r**3 + c5 * r**5
    g = slope + 3.0 * c3 * r * r + 5.0 * c5 * r**4
    f_out[1] = f
    fp_out[1] = g
    half = 0.5 * dr
    for k in range(1, nsteps):
        r = k * dr
        k1f, k1g = _rhs(r, f, g)
        k2f, k2g = _rhs(r + half, f + half * k1f, g + half * k1g)
        k3f, k3g = _rhs(r + half, f + half * k2f, g + half * k2g)
        k4f, k4g = _rhs(r + dr, f + dr * k3f, g + dr * k3g)
        f = f + dr * (k1f + 2.0 * k2f + 2.0 * k3f + k4f) / 6.0
        g = g + dr * (k1g + 2.0 * k2g + 2.0 * k3g + k4g) / 6.0
        f_out[k + 1] = f
        fp_out[k + 1] = g
        if f > 1.0:
            return 1, k + 1
        if g < 0.0 or f < 0.0:
            return -1, k + 1
    return 0, nsteps
