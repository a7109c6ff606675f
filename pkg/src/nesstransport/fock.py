"""Exact fermionic Fock space at small dimension.

Occupation basis: mode ``i`` is bit ``i`` of the state index, and
``a_i^dag |s> = (-1)^{#(occupied modes below i)} |s + e_i>``.  Inner products
are antilinear in the first slot; ``a*(g) = sum_i g_i a_i^dag`` and
``a(f) = sum_i conj(f_i) a_i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import OracleMismatch, SingularGenerator, TooLarge
from .timeevo import FiniteSystem, finite_fcs

MAX_MODES = 12
MAX_TWO_TIME_MODES = 10
SINGULAR_GAP = 1e-10
WICK_TOL = 1e-10
TWO_TIME_TOL = 1e-9
GROUP_DECIMALS = 9


class FockOracle:
    """Creation and annihilation operators on ``n`` modes as sparse matrices."""

    def __init__(self, n: int):
        n = int(n)
        if not 1 <= n <= MAX_MODES:
            raise TooLarge(f"Fock oracle supports 1..{MAX_MODES} modes, got {n}")
        self.n = n
        self.dim = 1 << n
        states = np.arange(self.dim, dtype=np.int64)
        creation = []
        for i in range(n):
            free = states[((states >> i) & 1) == 0]
            below = free & ((1 << i) - 1)
            parity = np.zeros_like(below)
            for b in range(i):
                parity ^= (below >> b) & 1
            signs = (1 - 2 * parity).astype(np.complex128)
            creation.append(
                sp.csr_matrix((signs, (free | (1 << i), free)), shape=(self.dim, self.dim))
            )
        self.creation = tuple(creation)
        self.annihilation = tuple(c.conj().T.tocsr() for c in creation)

    def create(self, g):
        """``a*(g)``, linear in ``g``."""
        g = np.asarray(g, dtype=np.complex128)
        return sum((g[i] * self.creation[i] for i in range(self.n) if g[i] != 0),
                   sp.csr_matrix((self.dim, self.dim), dtype=np.complex128))

    def annihilate(self, f):
        """``a(f)``, antilinear in ``f``."""
        f = np.asarray(f, dtype=np.complex128)
        return sum((np.conj(f[i]) * self.annihilation[i] for i in range(self.n) if f[i] != 0),
                   sp.csr_matrix((self.dim, self.dim), dtype=np.complex128))

    def number(self):
        return sum(self.creation[i] @ self.annihilation[i] for i in range(self.n))

    def car_residual(self) -> float:
        """Largest deviation from ``{a_i, a_j} = 0``, ``{a_i, a_j^dag} = delta_ij``."""
        eye = sp.identity(self.dim, dtype=np.complex128, format="csr")
        worst = 0.0
        for i in range(self.n):
            for j in range(self.n):
                ai, aj = self.annihilation[i], self.annihilation[j]
                anti = ai @ aj + aj @ ai
                mixed = ai @ self.creation[j] + self.creation[j] @ ai
                if i == j:
                    mixed = mixed - eye
                for m in (anti, mixed):
                    if m.nnz:
                        worst = max(worst, float(np.abs(m.data).max()))
        return worst


def second_quantize_gamma(orc: FockOracle, S) -> np.ndarray:
    """``Gamma(S)``: ``S^{(x) k}`` on each ``k``-particle sector."""
    S = np.asarray(S, dtype=np.complex128)
    if S.shape != (orc.n, orc.n):
        raise ValueError(f"expected a {orc.n}x{orc.n} matrix")
    return _kernels.gamma(S)


def second_quantize_dgamma(orc: FockOracle, A) -> np.ndarray:
    """``dGamma(A) = sum_ij A_ij a_i^dag a_j``."""
    A = np.asarray(A, dtype=np.complex128)
    if A.shape != (orc.n, orc.n):
        raise ValueError(f"expected a {orc.n}x{orc.n} matrix")
    if np.max(np.abs(A - A.conj().T)) > 1e-12:
        raise ValueError("dGamma is only provided for Hermitian A")
    return _kernels.dgamma(A)


def gibbs_state(orc: FockOracle, T) -> np.ndarray:
    """Normalised ``Gamma(T (I - T)^{-1})`` for ``0 < T < I``."""
    T = np.asarray(T, dtype=np.complex128)
    w = np.linalg.eigvalsh(T)
    if w.min() < SINGULAR_GAP or w.max() > 1.0 - SINGULAR_GAP:
        raise SingularGenerator("T must satisfy 0 < T < I strictly")
    rho = second_quantize_gamma(orc, T @ np.linalg.inv(np.eye(orc.n) - T))
    return rho / np.trace(rho).real


def quasi_free_expectation(orc: FockOracle, T, gs, fs) -> complex:
    """``omega(a*(g_m) ... a*(g_1) a(f_1) ... a(f_n))`` for the state generated by ``T``.

    Computes the Wick determinant ``delta_nm det[(f_j, T g_k)]`` and the trace
    against the Gibbs density matrix, and returns the former after checking
    that they agree.

    Raises
    ------
    SingularGenerator
        ``T`` has an eigenvalue within 1e-10 of 0 or 1.
    OracleMismatch
        The two evaluations differ by more than 1e-10.
    """
    T = np.asarray(T, dtype=np.complex128)
    rho = gibbs_state(orc, T)
    gs = [np.asarray(g, dtype=np.complex128) for g in gs]
    fs = [np.asarray(f, dtype=np.complex128) for f in fs]
    if len(gs) != len(fs):
        wick = 0.0 + 0.0j
    elif not gs:
        wick = 1.0 + 0.0j
    else:
        G = np.array([[f.conj() @ T @ g for g in gs] for f in fs])
        wick = complex(np.linalg.det(G))
    op = sp.identity(orc.dim, dtype=np.complex128, format="csr")
    for g in reversed(gs):
        op = op @ orc.create(g)
    for f in fs:
        op = op @ orc.annihilate(f)
    trace = complex(np.sum(rho.T * op.toarray()))
    if abs(trace - wick) > WICK_TOL:
        raise OracleMismatch(f"Wick determinant {wick} != Gibbs trace {trace}")
    return wick


# ---------------------------------------------------------------- two-time measurement


@dataclass(frozen=True, eq=False)
class ChargeBasis:
    """One-particle basis diagonalising ``t0`` and every lead charge.

    ``W`` has the basis vectors as columns; ``occupation[i]`` is the
    diagonal of ``t0`` and ``charges[i]`` the values ``(H_1..H_M, Q_1..Q_M)``
    of mode ``i``, in counting-field order.
    """

    W: np.ndarray
    occupation: np.ndarray
    charges: np.ndarray


def charge_basis(fin: FiniteSystem) -> ChargeBasis:
    n, M, R = fin.n_s, fin.M, fin.R
    W = np.zeros((fin.N, fin.N), dtype=np.complex128)
    occ = np.empty(fin.N)
    charges = np.zeros((fin.N, 2 * M))
    w, V = np.linalg.eigh(fin.t0[:n, :n])
    W[:n, :n] = V
    occ[:n] = w
    for k in range(M):
        sl = fin.lead_slice(k)
        W[sl, sl] = fin.lead_modes
        occ[sl] = np.real(np.diag(fin.lead_modes.T @ fin.t0[sl, sl] @ fin.lead_modes))
        charges[sl, k] = fin.lead_energies
        charges[sl, M + k] = 1.0
    return ChargeBasis(W, np.clip(occ, 0.0, 1.0), charges)


def _product_state(occupation):
    """Diagonal of the quasi-free density matrix when ``T`` is diagonal."""
    n = occupation.size
    states = np.arange(1 << n, dtype=np.int64)
    bits = (states[:, None] >> np.arange(n)[None, :]) & 1
    return np.prod(np.where(bits == 1, occupation[None, :], 1.0 - occupation[None, :]), axis=1)


def two_time_distribution(fin: FiniteSystem, t: float):
    """Joint law of the lead charges measured at times 0 and ``t``.

    Returns
    -------
    values : (G, 2M) array
        Joint eigenvalues ``(H_1..H_M, Q_1..Q_M)`` labelling the spectral
        projections of the commuting family ``dGamma(Q)``.
    P : (G, G) array
        ``P[a, b] = omega(P_a tau^t(P_b))``.
    """
    if fin.N > MAX_TWO_TIME_MODES:
        raise TooLarge(f"two-time oracle needs N <= {MAX_TWO_TIME_MODES}, got {fin.N}")
    basis = charge_basis(fin)
    orc = FockOracle(fin.N)
    h = basis.W.conj().T @ fin.h @ basis.W
    E, V = np.linalg.eigh(second_quantize_dgamma(orc, (h + h.conj().T) / 2))
    U = (V * np.exp(1j * t * E)) @ V.conj().T  # e^{it dGamma(H)}
    rho = _product_state(basis.occupation)
    q = _kernels.occupation_sums(basis.charges)
    values, labels = np.unique(np.round(q, GROUP_DECIMALS), axis=0, return_inverse=True)
    labels = labels.ravel()
    # sum over a in P_a, b in P_b of rho_a |U_ab|^2
    weights = rho[:, None] * np.abs(U) ** 2
    ind = np.zeros((orc.dim, values.shape[0]))
    ind[np.arange(orc.dim), labels] = 1.0
    return values, ind.T @ weights @ ind


def two_time_fcs(fin: FiniteSystem, cf, t: float, check=True) -> float:
    """``log sum_{q,q'} omega(P_q tau^t(P_q')) e^{c.(q - q')}`` computed in Fock space.

    With ``check`` the value is compared against :func:`finite_fcs`.

    Raises
    ------
    TooLarge
        ``N > 10``.
    OracleMismatch
        Disagreement with the determinant formula beyond 1e-9.
    """
    values, P = two_time_distribution(fin, t)
    c = cf.vector()
    x = values @ c
    out = float(np.log(np.sum(P * np.exp(x[:, None] - x[None, :]))))
    if check:
        det = finite_fcs(fin, cf, t)
        if abs(det - out) > TWO_TIME_TOL:
            raise OracleMismatch(f"two-time FCS {out!r} != det formula {det!r}")
    return out
