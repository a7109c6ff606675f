"""Closed-form spectral data of the half-line lead (hopping 1/2, Dirichlet).

``w(eps) = (2/pi) sqrt(1 - eps^2)`` is the spectral weight of the contact site
and ``g(z) = (delta_0, (H_lead - z)^{-1} delta_0)`` its resolvent; on the band
the ``+i0`` boundary value is used in closed form.
"""
import math

import numpy as np
from scipy.special import expit

from .errors import BranchError, OutOfBand


def spectral_weight(eps):
    eps = np.asarray(eps, dtype=float)
    if np.any(np.abs(eps) > 1.0):
        raise OutOfBand("spectral weight is defined on [-1, 1] only")
    out = (2.0 / np.pi) * np.sqrt(np.clip(1.0 - eps * eps, 0.0, None))
    return float(out) if out.ndim == 0 else out


def band_boundary_green(eps):
    """``g(eps + i0) = -2 eps + 2i sqrt(1 - eps^2)`` for ``|eps| <= 1``."""
    eps = np.asarray(eps, dtype=float)
    if np.any(np.abs(eps) > 1.0):
        raise OutOfBand("boundary value requested outside the band")
    out = -2.0 * eps + 2j * np.sqrt(np.clip(1.0 - eps * eps, 0.0, None))
    return complex(out) if out.ndim == 0 else out


def surface_green(z, boundary=False):
    """Surface Green's function of the lead.

    Parameters
    ----------
    z : complex
        Spectral parameter with ``Im z >= 0``.  Real ``z`` inside ``[-1, 1]``
        requires ``boundary=True`` and returns the ``+i0`` limit.
    boundary : bool
        Allow real arguments on the band.

    Notes
    -----
    Off the real axis, ``g(z) = 2 (sqrt(z^2 - 1) - z)`` with the branch of
    the square root chosen so that ``g(z) ~ -1/z`` at infinity; this covers
    the real branch outside the band as well.
    """
    z = complex(z)
    if z.imag == 0.0 and abs(z.real) <= 1.0:
        if not boundary:
            raise BranchError(f"z={z.real} lies on the band; pass boundary=True for g(z + i0)")
        return band_boundary_green(z.real)
    if z.imag < 0:
        return surface_green(z.conjugate(), boundary).conjugate()
    # sqrt(z-1) sqrt(z+1) has cut [-1, 1] and behaves like z at infinity
    root = np.sqrt(z - 1.0) * np.sqrt(z + 1.0)
    return complex(2.0 * (root - z))


def fermi(res, eps):
    """Fermi-Dirac occupation of reservoir ``res`` (scalar or array ``eps``).

    At zero temperature the step takes the value 1/2 exactly at ``eps = mu``.
    """
    eps = np.asarray(eps, dtype=float)
    beta, mu = res.beta, res.mu
    if math.isinf(beta):
        out = np.where(eps < mu, 1.0, np.where(eps > mu, 0.0, 0.5))
    else:
        out = expit(-beta * (eps - mu))
    return float(out) if out.ndim == 0 else out


def fermi_matrix(reservoirs, eps):
    """Stacked occupations: shape ``(len(eps), M)``."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    return np.stack([fermi(r, eps) for r in reservoirs], axis=-1).reshape(eps.size, len(reservoirs))
