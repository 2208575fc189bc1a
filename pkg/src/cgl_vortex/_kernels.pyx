# cython: language_level=3
"""Compiled inner loops for the CGL time stepper and the radial profile shooter.

Every function here has a NumPy twin in ``_kernels_py`` with the same
signature and semantics; ``cgl_vortex.kernels`` picks one at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, expm1, cos, sin

cnp.import_array()


def laplacian5(const double complex[:, ::1] u, double h):
    """5-point Laplacian on interior nodes; boundary entries are left at zero."""
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], p, q
    cdef double inv = 1.0 / (h * h)
    out = np.zeros((n0, n1), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for p in range(1, n0 - 1):
            for q in range(1, n1 - 1):
                o[p, q] = (u[p + 1, q] + u[p - 1, q] + u[p, q + 1] + u[p, q - 1]
                           - 4.0 * u[p, q]) * inv
    return out


def nonlinear_flow(double complex[:, ::1] u, double tau, double a, double b):
    """Exact flow of du/dt = (a+ib) u (1-|u|^2) over scaled time tau, in place.

    Only interior nodes are touched (boundary data are frozen).
    """
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], p, q
    cdef double s0, g, lg, em, re, im, mod, ph
    cdef double complex z
    em = expm1(-2.0 * a * tau)
    with nogil:
        for p in range(1, n0 - 1):
            for q in range(1, n1 - 1):
                z = u[p, q]
                s0 = z.real * z.real + z.imag * z.imag
                if s0 == 0.0:
                    continue
                if a > 0.0:
                    lg = -log1p((1.0 - s0) * em)
                    g = lg / (2.0 * a)
                else:
                    g = tau * (1.0 - s0)
                mod = exp(a * g)
                ph = b * g
                re = mod * cos(ph)
                im = mod * sin(ph)
                u[p, q] = z * (re + 1j * im)


def lattice_energy(const double complex[:, ::1] u, double h, double eps):
    """Return (dirichlet, potential) parts of the lattice Ginzburg-Landau energy.

    The Dirichlet part sums |u_p - u_q|^2 / 2 over nearest-neighbour edges, the
    potential part uses trapezoidal node weights on the whole square.
    """
    cdef Py_ssize_t n0 = u.shape[0], n1 = u.shape[1], p, q
    cdef double grad = 0.0, pot = 0.0, w, s, dr, di
    cdef double c = h * h / (4.0 * eps * eps)
    with nogil:
        for p in range(n0):
            for q in range(n1):
                if p + 1 < n0:
                    dr = u[p + 1, q].real - u[p, q].real
                    di = u[p + 1, q].imag - u[p, q].imag
                    grad += dr * dr + di * di
                if q + 1 < n1:
                    dr = u[p, q + 1].real - u[p, q].real
                    di = u[p, q + 1].imag - u[p, q].imag
                    grad += dr * dr + di * di
                w = 1.0
                if p == 0 or p == n0 - 1:
                    w *= 0.5
                if q == 0 or q == n1 - 1:
                    w *= 0.5
                s = 1.0 - (u[p, q].real * u[p, q].real + u[p, q].imag * u[p, q].imag)
                pot += w * s * s
    return 0.5 * grad, c * pot


def sq_diff_norm(const double complex[:, ::1] u1, const double complex[:, ::1] u0):
    """Sum of |u1 - u0|^2 over all nodes."""
    cdef Py_ssize_t n0 = u1.shape[0], n1 = u1.shape[1], p, q
    cdef double acc = 0.0, dr, di
    with nogil:
        for p in range(n0):
            for q in range(n1):
                dr = u1[p, q].real - u0[p, q].real
                di = u1[p, q].imag - u0[p, q].imag
                acc += dr * dr + di * di
    return acc


cdef inline void _rhs(double r, double f, double g, double* df, double* dg) noexcept nogil:
    df[0] = g
    dg[0] = -g / r + f / (r * r) - f * (1.0 - f * f)


def shoot_radial(double slope, double dr, Py_ssize_t nsteps,
                 double[::1] f_out, double[::1] fp_out):
    """RK4 shot of f'' + f'/r - f/r^2 + f(1-f^2) = 0 from f ~ slope*r.

    Fills f_out/fp_out at r_k = k*dr for k = 0..nsteps and returns
    (status, k_last): status +1 if f exceeded 1 (slope too large), -1 if f
    turned down or went negative (slope too small), 0 if the end was reached.
    """
    cdef Py_ssize_t k, last = nsteps
    cdef int status = 0
    cdef double r, f, g, k1f, k1g, k2f, k2g, k3f, k3g, k4f, k4g
    cdef double c3 = -slope / 8.0
    cdef double c5 = (slope * slope * slope + slope / 8.0) / 24.0
    f_out[0] = 0.0
    fp_out[0] = slope
    r = dr
    f = slope * r + c3 * r ** 3 + c5 * r ** 5
    g = slope + 3.0 * c3 * r * r + 5.0 * c5 * r ** 4
    f_out[1] = f
    fp_out[1] = g
    with nogil:
        for k in range(1, nsteps):
            r = k * dr
            _rhs(r, f, g, &k1f, &k1g)
            _rhs(r + 0.5 * dr, f + 0.5 * dr * k1f, g + 0.5 * dr * k1g, &k2f, &k2g)
            _rhs(r + 0.5 * dr, f + 0.5 * dr * k2f, g + 0.5 * dr * k2g, &k3f, &k3g)
            _rhs(r + dr, f + dr * k3f, g + dr * k3g, &k4f, &k4g)
            f = f + dr * (k1f + 2.0 * k2f + 2.0 * k3f + k4f) / 6.0
            g = g + dr * (k1g + 2.0 * k2g + 2.0 * k3g + k4g) / 6.0
            f_out[k + 1] = f
            fp_out[k + 1] = g
            if f > 1.0:
                status = 1
                last = k + 1
                break
            if g < 0.0 or f < 0.0:
                status = -1
                last = k + 1
                break
    return status, last
