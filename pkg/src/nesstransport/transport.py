"""Landauer-Buttiker currents, entropy production and the Onsager matrix.

Currents are counted positive when leaving a reservoir:

    Phi_k = sum_j int T_kj(eps) u(eps) (f_k(eps) - f_j(eps)) d eps / 2 pi

with ``u = 1`` (particles) or ``u = eps`` (energy).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EpUndefined, NotTRI
from .lead import fermi, fermi_matrix
from .model import EquilibriumRef, SystemSpec, is_time_reversal_invariant
from .numerics import integrate_band
from .scattering import s_matrices, transmittances

KINDS = ("particle", "energy")
CURRENT_TOL = 1e-10
HEAT_ZERO = 1e-12


def zero_temperature_breakpoints(spec: SystemSpec):
    return tuple(r.mu for r in spec.reservoirs if r.zero_temperature)


def _kind_index(kind):
    try:
        return KINDS.index(kind)
    except ValueError:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}") from None


def current_integrand(spec: SystemSpec, eps):
    """Integrand of all currents: shape ``(len(eps), 2, M)``, kinds ordered
    (particle, energy); the ``1/2 pi`` is not included."""
    eps = np.atleast_1d(eps)
    T = transmittances(s_matrices(spec, eps))
    F = fermi_matrix(spec.reservoirs, eps)
    part = F * T.sum(axis=2) - np.einsum("ekj,ej->ek", T, F)
    return np.stack([part, eps[:, None] * part], axis=1)


def all_currents(spec: SystemSpec, abs_tol=CURRENT_TOL):
    """All steady currents as a ``(2, M)`` array (rows: particle, energy),
    together with the quadrature error estimate."""
    res = integrate_band(
        lambda x: current_integrand(spec, x),
        abs_tol=abs_tol * 2 * np.pi,
        breakpoints=zero_temperature_breakpoints(spec),
    )
    return res.value / (2 * np.pi), res.error_estimate / (2 * np.pi)


def steady_current(spec: SystemSpec, k: int, kind: str = "particle", abs_tol=CURRENT_TOL):
    """Steady current of one kind leaving reservoir ``k``.

    Returns
    -------
    (value, error_estimate)
    """
    a = _kind_index(kind)
    if not 0 <= k < spec.M:
        raise IndexError(f"lead index {k} out of range for M={spec.M}")

    def f(x):
        return current_integrand(spec, x)[:, a, k]

    res = integrate_band(
        f, abs_tol=abs_tol * 2 * np.pi, breakpoints=zero_temperature_breakpoints(spec)
    )
    return res.value / (2 * np.pi), res.error_estimate / (2 * np.pi)


@dataclass(frozen=True, eq=False)
class CurrentReport:
    particle_current: np.ndarray
    energy_current: np.ndarray
    heat_current: np.ndarray
    entropy_production: float
    conservation_residual_energy: float
    conservation_residual_particle: float
    quadrature_error_estimate: float


def current_report(spec: SystemSpec, abs_tol=CURRENT_TOL) -> CurrentReport:
    """Currents, heat currents, conservation residuals and entropy production.

    ``Ep = -sum_j beta_j Phi_j^h``.  A zero-temperature reservoir contributes
    nothing when its heat current vanishes (below 1e-12) and makes ``Ep``
    undefined otherwise.
    """
    cur, err = all_currents(spec, abs_tol)
    part, energy = cur[0], cur[1]
    heat = energy - spec.mus * part
    ep = 0.0
    for j, res in enumerate(spec.reservoirs):
        if res.zero_temperature:
            if abs(heat[j]) > HEAT_ZERO:
                raise EpUndefined(
                    f"reservoir {j} is at zero temperature with heat current {heat[j]:.3e}"
                )
            continue
        ep -= res.beta * heat[j]
    return CurrentReport(
        particle_current=part,
        energy_current=energy,
        heat_current=heat,
        entropy_production=float(ep),
        conservation_residual_energy=float(energy.sum()),
        conservation_residual_particle=float(part.sum()),
        quadrature_error_estimate=float(err),
    )


@dataclass(frozen=True, eq=False)
class OnsagerMatrix:
    """``L[a*M + k, b*M + j] = L_kj^{ab}`` with kinds ordered (energy, particle)."""

    L: np.ndarray
    eq: EquilibriumRef
    method: str

    @property
    def M(self):
        return self.L.shape[0] // 2

    def block(self, a: str, b: str) -> np.ndarray:
        ia, ib = "ep".index(a), "ep".index(b)
        M = self.M
        return self.L[ia * M:(ia + 1) * M, ib * M:(ib + 1) * M]

    def reciprocity_residual(self) -> float:
        """``max |L_kj^{ab} - L_jk^{ba}|``, i.e. the asymmetry of the full matrix."""
        return float(np.max(np.abs(self.L - self.L.T)))


def equilibrium_spec(spec: SystemSpec, eq: EquilibriumRef) -> SystemSpec:
    from .model import ReservoirParams

    return spec.with_reservoirs([ReservoirParams(eq.beta_bar, eq.mu_bar)] * spec.M)


def _onsager_direct(spec, eq, abs_tol):
    M = spec.M
    res_eq = equilibrium_spec(spec, eq).reservoirs[0]

    def integrand(x):
        T = transmittances(s_matrices(spec, x))
        f = fermi(res_eq, x)
        w = f * (1.0 - f)
        # [ee, ep, pp] moments
        return np.stack([T * (x * x * w)[:, None, None], T * (x * w)[:, None, None], T * w[:, None, None]], axis=1)

    val = integrate_band(integrand, abs_tol=abs_tol * 2 * np.pi).value / (2 * np.pi)
    ee, ep, pp = -val[0], -val[1], -val[2]
    L = np.zeros((2 * M, 2 * M))
    for blk, (ia, ib) in ((ee, (0, 0)), (ep, (0, 1)), (ep, (1, 0)), (pp, (1, 1))):
        b = blk.copy()
        np.fill_diagonal(b, 0.0)
        np.fill_diagonal(b, -b.sum(axis=0))
        L[ia * M:(ia + 1) * M, ib * M:(ib + 1) * M] = b
    return L


def onsager_matrix(spec: SystemSpec, eq: EquilibriumRef, method="direct", abs_tol=CURRENT_TOL, step=1e-3):
    """Onsager matrix ``L_kj^{ab} = d Phi_k^a / d X_j^b`` at ``X = 0``.

    ``method="direct"`` integrates the linearised Landauer-Buttiker formulas
    for ``j != k`` and fills the diagonal from ``sum_k L_kj = 0``;
    ``method="fcs"`` takes ``+1/2`` the Hessian of the equilibrium cumulant
    generating function (requires time-reversal invariance).  Only the
    couplings and ``eq`` are used; the reservoirs of ``spec`` are ignored.
    """
    if method == "direct":
        L = _onsager_direct(spec, eq, abs_tol)
    elif method == "fcs":
        if not is_time_reversal_invariant(spec):
            raise NotTRI("the FCS route to the Onsager matrix needs a time-reversal invariant system")
        from .fcs import generating_hessian

        H = generating_hessian(equilibrium_spec(spec, eq), step=step)
        L = 0.5 * H
    else:
        raise ValueError(f"unknown method {method!r}")
    return OnsagerMatrix(L, eq, method)
