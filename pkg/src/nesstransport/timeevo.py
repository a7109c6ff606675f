"""Finite-lead simulator: exact one-particle dynamics on a truncated lattice.

Each lead is cut to ``R`` sites.  Site ``x`` (``0 <= x < R``) of lead ``k``
has global index ``n_s + k R + x``; site 0 touches the sample.  The initial
two-point operator is ``t0 = T_S (+) f_1(H_1) (+) ... (+) f_M(H_M)`` and the
state at time ``t`` has two-point operator ``T_t = e^{-itH} t0 e^{itH}``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DeterminantNotPositive, PacketNotResolved
from .lead import fermi
from .model import ReservoirParams, SystemSpec

RECURRENCE_FRACTION = 0.8
PACKET_SPREAD = 0.02
PACKET_WIDTHS = 6.0
FCS_IMAG_LIMIT = 1e-10


def fermi_at(beta, mu=0.0) -> ReservoirParams:
    """Sample initialisation ``T_S = (1 + e^{beta (h_s - mu)})^{-1}``."""
    return ReservoirParams(beta, mu)


def lead_spectrum(R):
    """Eigenpairs of the ``R``-site Dirichlet chain with hopping 1/2.

    Returns
    -------
    energies : (R,) array, ``cos(pi m / (R + 1))`` for ``m = 1..R``
    modes : (R, R) array, orthonormal sine modes as columns
    """
    m = np.arange(1, R + 1)
    x = np.arange(R)
    modes = np.sqrt(2.0 / (R + 1)) * np.sin(np.pi * np.outer(x + 1, m) / (R + 1))
    return np.cos(np.pi * m / (R + 1)), modes


def _fermi_function(res, energies):
    return np.atleast_1d(fermi(res, energies))


def lead_occupations(res: ReservoirParams, R: int, zero_temperature="cell"):
    """Occupations of the ``R`` lead levels in the initial state.

    At finite ``beta`` these are ``f(cos(pi m / (R + 1)))``.  At zero
    temperature ``"step"`` fills the levels below ``mu`` (ties get 1/2), which
    quantises the bias window in units of the level spacing; ``"cell"``
    instead fills each level by the fraction of its momentum cell
    ``|k - k_m| < pi / (2 (R + 1))`` lying below the Fermi momentum, so that
    the occupied density of states converges at second order in ``1/R``.
    """
    E, _ = lead_spectrum(R)
    if not res.zero_temperature or zero_temperature == "step":
        return _fermi_function(res, E)
    if zero_temperature != "cell":
        raise ValueError(f"unknown zero-temperature filling {zero_temperature!r}")
    delta = np.pi / (R + 1)
    k = delta * np.arange(1, R + 1)
    kf = math.acos(min(max(res.mu, -1.0), 1.0))
    # cos is decreasing on (0, pi): states with k > kf lie below mu
    return np.clip((k + delta / 2 - kf) / delta, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class FiniteSystem:
    """Truncated system with its cached spectral data.

    Attributes
    ----------
    spec : SystemSpec
    R : int
    h : (N, N) complex array
    t0 : (N, N) complex array
    energies, modes : eigendecomposition of ``h``
    lead_energies, lead_modes : eigendecomposition of one lead block
    """

    spec: SystemSpec
    R: int
    h: np.ndarray
    t0: np.ndarray
    energies: np.ndarray
    modes: np.ndarray
    lead_energies: np.ndarray
    lead_modes: np.ndarray

    @property
    def n_s(self):
        return self.spec.n_s

    @property
    def M(self):
        return self.spec.M

    @property
    def N(self):
        return self.h.shape[0]

    def lead_slice(self, k):
        start = self.n_s + k * self.R
        return slice(start, start + self.R)

    def site(self, k, x):
        return self.n_s + k * self.R + x

    def charge(self, k, kind="particle"):
        """Dense charge operator of lead ``k``: site projection or lead block."""
        Q = np.zeros((self.N, self.N), dtype=np.complex128)
        sl = self.lead_slice(k)
        if kind == "particle":
            Q[sl, sl] = np.eye(self.R)
        elif kind == "energy":
            Q[sl, sl] = self.h[sl, sl]
        else:
            raise ValueError(f"unknown charge kind {kind!r}")
        return Q

    def charge_exponential(self, cf, sign=1.0):
        """``exp(sign * sum_k (alpha_k H_k + nu_k Q_k))``, block diagonal."""
        out = np.zeros((self.N, self.N), dtype=np.complex128)
        out[: self.n_s, : self.n_s] = np.eye(self.n_s)
        E, V = self.lead_energies, self.lead_modes
        for k in range(self.M):
            sl = self.lead_slice(k)
            out[sl, sl] = (V * np.exp(sign * (cf.alpha[k] * E + cf.nu[k]))) @ V.T
        return out

    @cached_property
    def t0_eigenbasis(self):
        """``U^dag t0 U`` in the eigenbasis of ``h``."""
        U = self.modes
        return U.conj().T @ self.t0 @ U

    @cached_property
    def sqrt_t0(self):
        w, V = np.linalg.eigh(self.t0)
        return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T

    def propagate(self, psi, t):
        """``e^{-ith} psi`` for a vector or a stack of column vectors."""
        U = self.modes
        phase = np.exp(-1j * t * self.energies)
        if psi.ndim == 1:
            return U @ (phase * (U.conj().T @ psi))
        return U @ (phase[:, None] * (U.conj().T @ psi))

    def conjugate(self, A, t):
        """``e^{-ith} A e^{ith}``."""
        U = self.modes
        ph = np.exp(-1j * t * self.energies)
        B = U.conj().T @ A @ U
        return U @ (ph[:, None] * B * ph.conj()[None, :]) @ U.conj().T


def lattice_hamiltonian(spec: SystemSpec, R: int) -> np.ndarray:
    """One-particle Hamiltonian ``H^(R)`` with every lead cut to ``R`` sites.

    Sites are ordered sample first, then lead ``k`` site ``x`` at ``n_s + k R + x``.
    """
    R = int(R)
    if R < 2:
        raise ValueError("R must be at least 2")
    n = spec.n_s
    N = n + spec.M * R
    h = np.zeros((N, N), dtype=np.complex128)
    h[:n, :n] = spec.h_s
    chain = 0.5 * (np.eye(R, k=1) + np.eye(R, k=-1))
    for k in range(spec.M):
        sl = slice(n + k * R, n + (k + 1) * R)
        h[sl, sl] = chain
        h[:n, sl.start] = spec.chis[k]
        h[sl.start, :n] = spec.chis[k].conj()
    return h


def build_finite(spec: SystemSpec, R: int, sample_init="half", zero_temperature="cell") -> FiniteSystem:
    """Truncate every lead to ``R`` sites and assemble ``H^(R)`` and ``t0``.

    ``sample_init`` is ``"half"`` (``T_S = I/2``) or a :class:`ReservoirParams`
    (see :func:`fermi_at`) giving a Fermi-Dirac ``T_S`` of ``h_s``.
    ``zero_temperature`` selects how zero-temperature leads are filled, see
    :func:`lead_occupations`.
    """
    h = lattice_hamiltonian(spec, R)
    R = int(R)
    n = spec.n_s
    E, V = lead_spectrum(R)
    t0 = np.zeros_like(h)
    if isinstance(sample_init, str):
        if sample_init != "half":
            raise ValueError(f"unknown sample initialisation {sample_init!r}")
        t0[:n, :n] = 0.5 * np.eye(n)
    elif isinstance(sample_init, ReservoirParams):
        w, W = np.linalg.eigh(spec.h_s)
        t0[:n, :n] = (W * _fermi_function(sample_init, w)) @ W.conj().T
    else:
        raise TypeError("sample_init must be 'half' or ReservoirParams")
    for k in range(spec.M):
        sl = slice(n + k * R, n + (k + 1) * R)
        occ = lead_occupations(spec.reservoirs[k], R, zero_temperature)
        t0[sl, sl] = (V * occ) @ V.T
    energies, modes = np.linalg.eigh(h)
    return FiniteSystem(spec, R, h, t0, energies, modes, E, V)


def evolve_two_point(fin: FiniteSystem, t: float) -> np.ndarray:
    """``T_t = e^{-itH} t0 e^{itH}``."""
    if t == 0:
        return fin.t0.copy()
    if t == 0:
        return fin.t0.copy()
    U = fin.modes
    ph = np.exp(-1j * t * fin.energies)
    return U @ (ph[:, None] * fin.t0_eigenbasis * ph.conj()[None, :]) @ U.conj().T


@dataclass(frozen=True, eq=False)
class FluxOperator:
    """Rank-two flux observable ``phi = sum_i u_i w_i^dag``."""

    left: tuple
    right: tuple

    @classmethod
    def for_lead(cls, fin: FiniteSystem, k: int, kind: str = "particle"):
        """``phi_k = i v chi_k^dag - i chi_k v^dag`` with ``v = delta_0`` or ``delta_1 / 2``."""
        chi = np.zeros(fin.N, dtype=np.complex128)
        chi[: fin.n_s] = fin.spec.chis[k]
        v = np.zeros(fin.N, dtype=np.complex128)
        if kind == "particle":
            v[fin.site(k, 0)] = 1.0
        elif kind == "energy":
            v[fin.site(k, 1)] = 0.5
        else:
            raise ValueError(f"unknown current kind {kind!r}")
        return cls((1j * v, -1j * chi), (chi, v))

    def dense(self):
        return sum(np.outer(u, w.conj()) for u, w in zip(self.left, self.right))

    def expectation(self, T):
        """``tr(T phi)``."""
        return float(sum((w.conj() @ T @ u).real for u, w in zip(self.left, self.right)))


def current_vs_time(fin: FiniteSystem, k: int, kind: str = "particle", times=()) -> np.ndarray:
    """``tr(T_t phi_k)`` at each time, at ``O(N^2)`` cost per time.

    Warns when a time exceeds ``0.8 * 2R``, where waves reflected from the
    truncated lead ends reach the sample.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(np.abs(times) > RECURRENCE_FRACTION * 2 * fin.R):
        warnings.warn("times beyond the recurrence window 0.8 * 2R", RuntimeWarning, stacklevel=2)
    phi = FluxOperator.for_lead(fin, k, kind)
    U = fin.modes
    B = fin.t0_eigenbasis
    Uh = U.conj().T
    a = [Uh @ u for u in phi.left]
    b = [Uh @ w for w in phi.right]
    out = np.empty(times.size)
    for i, t in enumerate(times):
        ph = np.exp(1j * t * fin.energies)
        # (w, e^{-itH} t0 e^{itH} u) in the eigenbasis
        out[i] = sum(((bi * ph).conj() @ (B @ (ph * ai))).real for ai, bi in zip(a, b))
    return out


def plateau_current(fin: FiniteSystem, k: int, kind="particle", window=(0.3, 0.6), samples=301):
    """Time average of :func:`current_vs_time` over ``[0.3 R, 0.6 R]``."""
    times = np.linspace(window[0] * fin.R, window[1] * fin.R, samples)
    return float(np.mean(current_vs_time(fin, k, kind, times)))


def finite_fcs(fin: FiniteSystem, cf, t: float) -> float:
    """``log chi_t = log det(I + X_t)`` for the two-time measurement of the
    lead charges ``sum_k (alpha_k H_k + nu_k Q_k)``.

    ``X_t = T^{1/2} e^{G/2} (e^{-G_t} - e^{-G}) e^{G/2} T^{1/2}`` with
    ``G_t = e^{itH} G e^{-itH}``.
    """
    if t == 0:
        return 0.0
    em = fin.charge_exponential(cf, -1.0)
    # e^{-G_t} = e^{itH} e^{-G} e^{-itH} is a conjugation with -t
    D = fin.conjugate(em, -t) - em
    S = fin.sqrt_t0 @ fin.charge_exponential(cf, 0.5)
    X = S @ D @ S.conj().T
    sign, logdet = np.linalg.slogdet(np.eye(fin.N) + X)
    if abs(sign.imag) > FCS_IMAG_LIMIT or sign.real <= 0:
        raise DeterminantNotPositive(f"det(I + X_t) has phase {sign!r}")
    return float(logdet)


def wavepacket_transmission(spec: SystemSpec, eps0: float, R: int = 1000, spread=PACKET_SPREAD, fin=None):
    """Scattering fractions of Gaussian wavepackets launched from each lead.

    The packet in lead ``j`` has mean momentum ``k0 = arccos(eps0)`` (moving
    toward the sample) and starts at the middle of the lead.  Its width is
    the largest for which both the incoming packet and the dispersed outgoing
    one stay within ``PACKET_WIDTHS`` standard deviations of the lead, so the
    energy resolution is as fine as ``R`` allows; ``spread`` bounds it.
    After scattering, ``out[k, j]`` is the probability found in lead ``k``;
    off the diagonal this approaches ``T_kj(eps0)`` and on it ``|s_jj(eps0)|^2``.
    A prebuilt ``fin`` (from ``build_finite(spec, R)``) can be passed to share
    one diagonalisation across energies.

    Raises
    ------
    PacketNotResolved
        No width fits in ``R`` sites with energy spread at most ``spread``.
    """
    if not abs(eps0) < 0.9:
        raise ValueError("eps0 must satisfy |eps0| < 0.9")
    R = int(R)
    k0 = math.acos(eps0)
    v = math.sin(k0)
    x0 = R / 2
    t_final = 2 * x0 / v
    # |psi|^2 has variance sigma^2 initially and sigma^2 + (c / sigma)^2 after t_final
    c = abs(math.cos(k0)) * t_final / 2
    room = (x0 / PACKET_WIDTHS) ** 2
    disc = room**2 - 4 * c**2
    if disc < 0:
        raise PacketNotResolved(f"R={R} too short for a packet at eps0={eps0}")
    sigma = math.sqrt((room + math.sqrt(disc)) / 2)
    if v / (2 * sigma) > spread:
        raise PacketNotResolved(
            f"R={R} cannot hold a packet with energy spread {spread} at eps0={eps0}"
        )
    if fin is None:
        fin = build_finite(spec, R)
    elif fin.R != R or fin.spec != spec:
        raise ValueError("fin was built for a different spec or R")
    x = np.arange(R)
    packet = np.exp(-((x - x0) ** 2) / (4 * sigma**2) + 1j * k0 * x)
    packet /= np.linalg.norm(packet)
    psi0 = np.zeros((fin.N, spec.M), dtype=np.complex128)
    for j in range(spec.M):
        psi0[fin.lead_slice(j), j] = packet
    psi = fin.propagate(psi0, t_final)
    out = np.empty((spec.M, spec.M))
    for k in range(spec.M):
        out[k] = np.sum(np.abs(psi[fin.lead_slice(k)]) ** 2, axis=0)
    return out
