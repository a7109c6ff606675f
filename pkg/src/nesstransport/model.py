"""Open-system description: a finite sample coupled to M semi-infinite leads.

The sample Hamiltonian ``h_s`` acts on ``C^{n_s}``.  Lead ``k`` is the
half-line Dirichlet Laplacian with hopping 1/2, coupled to the sample through
``V = sum_k chi_k (delta_0k, .) + delta_0k (chi_k, .)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import (
    BadBeta,
    DimensionMismatch,
    EmptyLeads,
    NonHermitianSample,
    RootFindFailure,
)

HERMITIAN_TOL = 1e-12
TRI_TOL = 1e-12


def _frozen(a, dtype=np.complex128):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampleSpec:
    h_s: np.ndarray

    def __post_init__(self):
        h = np.atleast_2d(np.asarray(self.h_s, dtype=np.complex128))
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
            raise DimensionMismatch(f"h_s must be a non-empty square matrix, got shape {h.shape}")
        if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL:
            raise NonHermitianSample("h_s is not Hermitian")
        object.__setattr__(self, "h_s", _frozen(h))

    @property
    def n_s(self) -> int:
        return self.h_s.shape[0]

    def __eq__(self, other):
        return isinstance(other, SampleSpec) and np.array_equal(self.h_s, other.h_s)


@dataclass(frozen=True, eq=False)
class LeadCoupling:
    chi: np.ndarray

    def __post_init__(self):
        chi = np.atleast_1d(np.asarray(self.chi, dtype=np.complex128))
        if chi.ndim != 1:
            raise DimensionMismatch("chi must be a vector")
        object.__setattr__(self, "chi", _frozen(chi))

    def __eq__(self, other):
        return isinstance(other, LeadCoupling) and np.array_equal(self.chi, other.chi)


@dataclass(frozen=True)
class ReservoirParams:
    """Inverse temperature ``beta`` (``math.inf`` for zero temperature) and
    chemical potential ``mu``."""

    beta: float
    mu: float = 0.0

    def __post_init__(self):
        beta = float(self.beta)
        if math.isnan(beta) or not beta > 0:
            raise BadBeta(f"beta must be > 0 or +inf, got {self.beta!r}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True)
class EquilibriumRef:
    """Reference equilibrium (beta_bar, mu_bar) used to define thermodynamic forces."""

    beta_bar: float
    mu_bar: float = 0.0

    def __post_init__(self):
        b = float(self.beta_bar)
        if not (math.isfinite(b) and b > 0):
            raise BadBeta(f"beta_bar must be finite and > 0, got {self.beta_bar!r}")
        object.__setattr__(self, "beta_bar", b)
        object.__setattr__(self, "mu_bar", float(self.mu_bar))

    def forces(self, spec: SystemSpec):
        """Thermodynamic forces ``(X_e, X_p)``: ``beta_bar - beta_j`` and
        ``beta_j mu_j - beta_bar mu_bar``."""
        betas = spec.betas
        if not np.all(np.isfinite(betas)):
            raise BadBeta("thermodynamic forces need finite reservoir temperatures")
        x_e = self.beta_bar - betas
        x_p = betas * spec.mus - self.beta_bar * self.mu_bar
        return x_e, x_p

    def reservoirs_at(self, x_e, x_p):
        """Reservoir parameters realising the given forces (inverse of ``forces``)."""
        out = []
        for xe, xp in zip(np.atleast_1d(x_e), np.atleast_1d(x_p)):
            beta = self.beta_bar - xe
            out.append(ReservoirParams(beta, (xp + self.beta_bar * self.mu_bar) / beta))
        return out


@dataclass(frozen=True)
class SystemSpec:
    sample: SampleSpec
    leads: tuple
    reservoirs: tuple
    _chis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        leads = tuple(self.leads)
        reservoirs = tuple(self.reservoirs)
        if len(leads) == 0:
            raise EmptyLeads("at least one lead is required")
        if len(leads) != len(reservoirs):
            raise DimensionMismatch(
                f"{len(leads)} leads but {len(reservoirs)} reservoirs"
            )
        for k, lead in enumerate(leads):
            if lead.chi.shape[0] != self.sample.n_s:
                raise DimensionMismatch(
                    f"lead {k}: chi has length {lead.chi.shape[0]}, sample has {self.sample.n_s} sites"
                )
        object.__setattr__(self, "leads", leads)
        object.__setattr__(self, "reservoirs", reservoirs)
        object.__setattr__(self, "_chis", _frozen([lead.chi for lead in leads]))

    @property
    def n_s(self) -> int:
        return self.sample.n_s

    @property
    def M(self) -> int:
        return len(self.leads)

    @property
    def h_s(self) -> np.ndarray:
        return self.sample.h_s

    @property
    def chis(self) -> np.ndarray:
        """Couplings stacked as an (M, n_s) array."""
        return self._chis

    @property
    def betas(self) -> np.ndarray:
        return np.array([r.beta for r in self.reservoirs])

    @property
    def mus(self) -> np.ndarray:
        return np.array([r.mu for r in self.reservoirs])

    def coupling_matrix(self) -> np.ndarray:
        """``K = sum_k chi_k chi_k^dag``."""
        return self.chis.T @ self.chis.conj()

    def with_reservoirs(self, reservoirs) -> SystemSpec:
        return SystemSpec(self.sample, self.leads, tuple(reservoirs))


def build_system(sample, leads, reservoirs) -> SystemSpec:
    """Validate and assemble a :class:`SystemSpec`.

    ``sample`` may be a :class:`SampleSpec` or a matrix, ``leads`` a list of
    :class:`LeadCoupling` or vectors, ``reservoirs`` a list of
    :class:`ReservoirParams` or ``(beta, mu)`` pairs.
    """
    if not isinstance(sample, SampleSpec):
        sample = SampleSpec(sample)
    leads = [l if isinstance(l, LeadCoupling) else LeadCoupling(l) for l in leads]
    reservoirs = [
        r if isinstance(r, ReservoirParams) else ReservoirParams(*r) for r in reservoirs
    ]
    return SystemSpec(sample, tuple(leads), tuple(reservoirs))


def is_time_reversal_invariant(spec: SystemSpec) -> bool:
    """Sufficient TRI test: real ``h_s`` and real couplings (conjugation symmetry)."""
    return bool(
        np.max(np.abs(spec.h_s.imag)) <= TRI_TOL and np.max(np.abs(spec.chis.imag)) <= TRI_TOL
    )


def _outside_green(E):
    # real branch of the surface Green's function, |E| > 1
    from .lead import surface_green

    return surface_green(E).real


def bound_states(spec: SystemSpec, *, xtol=1e-13, maxiter=500):
    """Eigenvalues of the full Hamiltonian outside the band ``[-1, 1]``.

    Each eigenvalue branch ``lam_i(E)`` of ``h_s - g(E) K`` crosses the line
    ``lam = E`` at most once on each side of the band, because ``g`` is
    increasing there and ``K >= 0``; the crossing is located with Brent's method.
    """
    h = spec.h_s
    K = spec.coupling_matrix()
    span = 2.0 + np.linalg.norm(h, 2) + 2.0 * np.linalg.norm(K, 2)

    def branch(i, E):
        lam = np.linalg.eigvalsh(h - _outside_green(E) * K)
        return lam[i] - E

    roots = []
    n = spec.n_s
    for side in (-1.0, 1.0):
        edge = side * (1.0 + 1e-14)
        far = side * span
        for i in range(n):
            f_edge = branch(i, edge)
            f_far = branch(i, far)
            if side > 0 and not f_edge > 0:
                continue
            if side < 0 and not f_edge < 0:
                continue
            if np.sign(f_edge) == np.sign(f_far):
                raise RootFindFailure(f"branch {i}: no sign change on side {side:+.0f}")
            lo, hi = sorted((edge, far))
            try:
                E = brentq(lambda x: branch(i, x), lo, hi, xtol=xtol, maxiter=maxiter)
            except (RuntimeError, ValueError) as exc:
                raise RootFindFailure(str(exc)) from exc
            roots.append(E)
    return sorted(roots)
