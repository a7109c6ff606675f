"""Levitov cumulant generating function and what follows from it.

For counting fields ``(alpha, nu)`` the long-time generating function is

    e_+(alpha, nu) = int log det(1 + t (e^q s^dag e^-q s - 1)) d eps / 2 pi,

with ``t = diag(f_k(eps))`` and ``q = diag(alpha_k eps + nu_k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from scipy.optimize import brentq

from .errors import DeterminantNotPositive, WrongShape
from .lead import fermi_matrix
from .model import EquilibriumRef, SystemSpec
from .numerics import integrate
from .scattering import s_matrices, transmittances
from .transport import _kind_index, zero_temperature_breakpoints

FCS_TOL = 1e-9
FIRST_STEP = 1e-4
HESSIAN_STEP = 1e-3
IMAG_LIMIT = 1e-10


@dataclass(frozen=True, eq=False)
class CountingField:
    """Energy (``alpha``) and particle (``nu``) counting fields, one per lead."""

    alpha: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        n = np.atleast_1d(np.asarray(self.nu, dtype=float))
        if a.shape != n.shape or a.ndim != 1:
            raise ValueError("alpha and nu must be vectors of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(n))):
            raise ValueError("counting fields must be finite")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "nu", n)

    @classmethod
    def zero(cls, M):
        return cls(np.zeros(M), np.zeros(M))

    @classmethod
    def particle(cls, nu):
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        return cls(np.zeros_like(nu), nu)

    @classmethod
    def energy(cls, alpha):
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        return cls(alpha, np.zeros_like(alpha))

    @classmethod
    def from_vector(cls, v):
        """Inverse of :meth:`vector`: ``(alpha_1..alpha_M, nu_1..nu_M)``."""
        v = np.asarray(v, dtype=float)
        M = v.size // 2
        return cls(v[:M], v[M:])

    @property
    def M(self):
        return self.alpha.size

    def vector(self):
        return np.concatenate([self.alpha, self.nu])

    def q(self, eps):
        """Diagonal of ``q(alpha, nu; eps)``, shape ``(len(eps), M)``."""
        eps = np.atleast_1d(eps)
        return eps[:, None] * self.alpha[None, :] + self.nu[None, :]

    def __add__(self, other):
        return CountingField(self.alpha + other.alpha, self.nu + other.nu)

    def __sub__(self, other):
        return CountingField(self.alpha - other.alpha, self.nu - other.nu)

    def __mul__(self, c):
        return CountingField(c * self.alpha, c * self.nu)

    __rmul__ = __mul__


@dataclass(frozen=True)
class GeneratingFunctionValue:
    value: float
    quadrature_error: float
    positivity_margin: float


def _levitov_dets(spec, eps, cfs, s=None, F=None):
    """Determinants for a list of counting fields: shape ``(len(eps), len(cfs))``."""
    eps = np.atleast_1d(eps)
    if s is None:
        s = s_matrices(spec, eps)
    if F is None:
        F = fermi_matrix(spec.reservoirs, eps)
    sd = np.conj(np.swapaxes(s, 1, 2))
    M = spec.M
    eye = np.eye(M)
    out = np.empty((eps.size, len(cfs)), dtype=np.complex128)
    scale = np.empty((eps.size, len(cfs)))
    for c, cf in enumerate(cfs):
        q = cf.q(eps)
        if not np.any(q):  # the matrix is exactly the identity
            out[:, c], scale[:, c] = 1.0, 1.0
            continue
        # e^q s^dag e^-q, then times s
        A = (np.exp(q)[:, :, None] * sd * np.exp(-q)[:, None, :]) @ s
        D = eye + F[:, :, None] * (A - eye)
        out[:, c] = np.linalg.det(D)
        # Hadamard bound, the natural size of rounding errors in det(D)
        scale[:, c] = np.prod(np.linalg.norm(D, axis=2), axis=1)
    return out, scale


def _check_dets(d, scale):
    bad = (np.abs(d.imag) > IMAG_LIMIT * np.maximum(np.abs(d), scale)) | (d.real <= 0)
    if np.any(bad):
        raise DeterminantNotPositive(
            f"Levitov determinant {d.ravel()[np.argmax(bad)]!r} is not real-positive"
        )


def _log_levitov(spec, eps, cfs):
    d, scale = _levitov_dets(spec, eps, cfs)
    _check_dets(d, scale)
    return np.log(d.real)


def levitov_integrand(spec: SystemSpec, eps, cf: CountingField):
    """``log det(1 + t (e^q s^dag e^-q s - 1))`` at one energy or an array of energies."""
    scalar = np.ndim(eps) == 0
    out = _log_levitov(spec, np.atleast_1d(np.asarray(eps, dtype=float)), [cf])[:, 0]
    return float(out[0]) if scalar else out


def _integrate_combination(spec, cfs, coeffs, abs_tol=FCS_TOL, a=-1.0, b=1.0):
    """Integrate ``coeffs @ log det(...)`` over ``(a, b)``, divided by ``2 pi``.

    ``coeffs`` has one row per output and one column per counting field.
    Finite-difference stencils are applied pointwise, so the adaptive
    tolerance bounds the error of the combination itself rather than that of
    each (possibly tiny) term.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    margin = [np.inf]

    def f(x):
        d, scale = _levitov_dets(spec, x, cfs)
        _check_dets(d, scale)
        margin[0] = min(margin[0], float(d.real.min()))
        return np.log(d.real) @ coeffs.T

    res = integrate(
        f, a, b, abs_tol=abs_tol * 2 * np.pi, breakpoints=zero_temperature_breakpoints(spec)
    )
    return np.atleast_1d(res.value) / (2 * np.pi), res.error_estimate / (2 * np.pi), margin[0]


def cumulant_generating(spec: SystemSpec, cf: CountingField, abs_tol=FCS_TOL) -> GeneratingFunctionValue:
    """Long-time cumulant generating function ``e_+`` at one counting field."""
    if cf.M != spec.M:
        raise ValueError(f"counting field has {cf.M} leads, system has {spec.M}")
    val, err, margin = _integrate_combination(spec, [cf], [[1.0]], abs_tol)
    return GeneratingFunctionValue(float(val[0]), err, margin)


def generating_values(spec: SystemSpec, cfs, abs_tol=FCS_TOL):
    """``e_+`` at several counting fields on one shared adaptive panel set."""
    cfs = list(cfs)
    return _integrate_combination(spec, cfs, np.eye(len(cfs)), abs_tol)[0]


def generating_difference(spec: SystemSpec, cf1: CountingField, cf2: CountingField, abs_tol=FCS_TOL) -> float:
    """``e_+(cf1) - e_+(cf2)`` from the pointwise difference of the integrands."""
    return float(_integrate_combination(spec, [cf1, cf2], [[1.0, -1.0]], abs_tol)[0][0])


def _unit(M, k, kind):
    v = np.zeros(2 * M)
    v[(0 if kind == "energy" else M) + k] = 1.0
    return v


def generating_gradient(spec: SystemSpec, cf: CountingField | None = None, step=FIRST_STEP, abs_tol=FCS_TOL) -> np.ndarray:
    """Gradient of ``e_+`` in ``(alpha_1..alpha_M, nu_1..nu_M)``, central differences."""
    x0 = np.zeros(2 * spec.M) if cf is None else cf.vector()
    n = x0.size
    pts, C = [], np.zeros((n, 2 * n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        pts += [CountingField.from_vector(x0 + e), CountingField.from_vector(x0 - e)]
        C[i, 2 * i], C[i, 2 * i + 1] = 1 / (2 * step), -1 / (2 * step)
    return _integrate_combination(spec, pts, C, abs_tol)[0]


def current_from_fcs(spec: SystemSpec, k: int, kind: str = "particle", step=FIRST_STEP, abs_tol=FCS_TOL) -> float:
    """``d e_+ / d(field k)`` at zero, by central differences."""
    _kind_index(kind)
    e = _unit(spec.M, k, kind) * step
    pts = [CountingField.from_vector(e), CountingField.from_vector(-e)]
    val = _integrate_combination(spec, pts, [[1 / (2 * step), -1 / (2 * step)]], abs_tol)[0]
    return float(val[0])


def generating_hessian(spec: SystemSpec, cf: CountingField | None = None, step=HESSIAN_STEP, abs_tol=FCS_TOL) -> np.ndarray:
    """Hessian of ``e_+`` in ``(alpha_1..alpha_M, nu_1..nu_M)`` by central differences."""
    x0 = np.zeros(2 * spec.M) if cf is None else cf.vector()
    n = x0.size
    # stencil offsets in units of step, deduplicated
    offsets = {(): 0}
    for i in range(n):
        for si in (1, -1):
            offsets.setdefault(((i, si),), len(offsets))
            for j in range(i + 1, n):
                for sj in (1, -1):
                    offsets.setdefault(((i, si), (j, sj)), len(offsets))
    pts = []
    for key in offsets:
        p = x0.copy()
        for i, s in key:
            p[i] += s * step
        pts.append(CountingField.from_vector(p))

    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    C = np.zeros((len(pairs), len(pts)))
    for r, (i, j) in enumerate(pairs):
        if i == j:
            C[r, offsets[((i, 1),)]] += 1
            C[r, offsets[()]] -= 2
            C[r, offsets[((i, -1),)]] += 1
            C[r] /= step**2
        else:
            for si in (1, -1):
                for sj in (1, -1):
                    C[r, offsets[((i, si), (j, sj))]] += si * sj / (4 * step**2)
    vals = _integrate_combination(spec, pts, C, abs_tol)[0]
    H = np.empty((n, n))
    for (i, j), v in zip(pairs, vals):
        H[i, j] = H[j, i] = v
    return H


def evans_searles_partner(cf: CountingField, spec: SystemSpec, eq: EquilibriumRef) -> CountingField:
    """Image of ``cf`` under the fluctuation symmetry ``e_+(c) = e_+(-X - c)``."""
    x_e, x_p = eq.forces(spec)
    return CountingField(-x_e - cf.alpha, -x_p - cf.nu)


# ---------------------------------------------------------------- large deviations


def _two_lead_section(spec, lead=0):
    def fields(nus):
        out = []
        for nu in nus:
            v = np.zeros(spec.M)
            v[lead] = nu
            out.append(CountingField.particle(v))
        return out

    return fields


def scalar_generating(spec: SystemSpec, nu: float, lead=0) -> float:
    """``e_+`` along the particle field of one lead, ``nu -> e_+((nu, 0, ..))``."""
    return float(generating_values(spec, _two_lead_section(spec, lead)([nu]))[0])


def rate_function(spec: SystemSpec, qhat: float, lead=0, step=FIRST_STEP, nu_max=40.0, xtol=1e-12):
    """Legendre transform ``I(q) = sup_nu (nu q - e_+(nu))`` of the scalar
    particle generating function of ``lead``.

    The stationarity condition ``e_+'(nu) = q`` is solved with Brent's method
    on the finite-difference derivative, after growing a bracket
    geometrically from ``nu = 0``.  ``inf`` is returned when ``q`` lies
    outside the range of ``e_+'`` on ``[-nu_max, nu_max]``.
    """
    fields = _two_lead_section(spec, lead)
    weights = [[1 / (2 * step), -1 / (2 * step)]]

    def excess(nu):
        d = _integrate_combination(spec, fields([nu + step, nu - step]), weights)[0][0]
        return d - qhat

    g0 = excess(0.0)
    if g0 == 0.0:
        return 0.0
    direction = -1.0 if g0 > 0 else 1.0  # e_+' is increasing
    lo, hi = 0.0, direction
    while excess(hi) * direction < 0:
        lo = hi
        hi *= 2.0
        if abs(hi) > nu_max:
            return math.inf
    nu = brentq(excess, min(lo, hi), max(lo, hi), xtol=xtol)
    e = scalar_generating(spec, nu, lead)
    # nu = 0 gives 0 * q - e_+(0) = 0, a lower bound for the supremum
    return max(nu * qhat - e, 0.0)


def binomial_rate(q, transmittance, delta_mu):
    """Closed-form Legendre transform of ``(dmu/2pi) log(1 - T + T e^nu)``."""
    c = delta_mu / (2 * np.pi)
    x = q / c
    if x <= 0.0 or x >= 1.0:
        if x == 0.0:
            return -c * math.log1p(-transmittance)
        if x == 1.0:
            return -c * math.log(transmittance)
        return math.inf
    T = transmittance
    return c * (x * math.log(x / T) + (1 - x) * math.log((1 - x) / (1 - T)))


@dataclass(frozen=True)
class ZeroTemperatureFCS:
    nu: float
    exact: float
    flat: float
    transmittance: float
    delta_mu: float

    @property
    def difference(self):
        return self.exact - self.flat


def zero_temperature_two_lead(spec: SystemSpec, nu: float, abs_tol=FCS_TOL) -> ZeroTemperatureFCS:
    """Exact scalar ``e_+(nu)`` at zero temperature and its flat-transmittance
    (binomial) approximation ``(dmu/2pi) log(1 - T + T e^nu)``, ``T`` taken at
    the centre of the bias window."""
    if spec.M != 2 or not all(r.zero_temperature for r in spec.reservoirs):
        raise WrongShape("needs two leads, both at zero temperature")
    mu_l, mu_r = spec.mus
    if not mu_l > mu_r:
        raise WrongShape("needs mu_L > mu_R")
    cf = _two_lead_section(spec, 0)([nu])
    # outside [mu_R, mu_L] the occupations are 0 or 1 in both leads and the integrand vanishes
    val, _, _ = _integrate_combination(spec, cf, [[1.0]], abs_tol, a=mu_r, b=mu_l)
    T = float(transmittances(s_matrices(spec, [0.5 * (mu_l + mu_r)]))[0, 0, 1])
    dmu = mu_l - mu_r
    flat = dmu / (2 * np.pi) * math.log(1 - T + T * math.exp(nu))
    return ZeroTemperatureFCS(float(nu), float(val[0]), flat, T, dmu)
