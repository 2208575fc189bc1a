"""Backend selection for the hot loops.

The Cython extension ``cgl_vortex._kernels`` is used when importable; the
NumPy module ``cgl_vortex._kernels_py`` is the fallback. Setting the
environment variable ``CGL_VORTEX_PURE=1`` forces the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("CGL_VORTEX_PURE", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

laplacian5 = _impl.laplacian5
nonlinear_flow = _impl.nonlinear_flow
lattice_energy = _impl.lattice_energy
sq_diff_norm = _impl.sq_diff_norm
shoot_radial = _impl.shoot_radial

__all__ = [
    "BACKEND",
    "laplacian5",
    "nonlinear_flow",
    "lattice_energy",
    "sq_diff_norm",
    "shoot_radial",
]
