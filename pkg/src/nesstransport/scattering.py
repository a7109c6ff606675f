"""Self-energy, effective sample Green's function and on-shell S-matrix.

Convention: ``G_S(eps) = (h_s - eps - g(eps + i0) K)^{-1}`` is the sample
block of ``(H - eps - i0)^{-1}`` and the S-matrix at energy ``eps`` is

    s_jk = delta_jk + 2 pi i w(eps) (chi_j, G_S chi_k),

i.e. ``s = 1 - 2 pi i T`` with ``T`` built from the retarded resolvent
``(eps + i0 - H)^{-1} = -G_S``.  ``s_jk`` is the amplitude for a particle
arriving from lead ``k`` to leave through lead ``j``, so the transmittance
``T_kj = |delta_kj - s_kj|^2`` is the probability of transfer from lead ``j``
into lead ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NodeError, SingularEffectiveHamiltonian, UnitarityViolation
from .lead import band_boundary_green, spectral_weight, surface_green
from .model import SystemSpec

COND_LIMIT = 1e14
UNITARITY_LIMIT = 1e-8


@dataclass(frozen=True, eq=False)
class OnShellData:
    eps: float
    s: np.ndarray
    transmittance: np.ndarray

    def unitarity_residual(self) -> float:
        M = self.s.shape[0]
        return float(np.max(np.abs(self.s @ self.s.conj().T - np.eye(M))))


def self_energy(spec: SystemSpec, z, boundary=False) -> np.ndarray:
    """``Sigma(z) = g(z) sum_k chi_k chi_k^dag``."""
    return surface_green(z, boundary=boundary) * spec.coupling_matrix()


def effective_green(spec: SystemSpec, eps: float) -> np.ndarray:
    eps = float(eps)
    if not -1.0 < eps < 1.0:
        raise ValueError("eps must lie in the open band (-1, 1)")
    return _effective_green_batch(spec, np.array([eps]))[0]


def _effective_green_batch(spec, eps):
    n = spec.n_s
    A = (
        spec.h_s[None, :, :]
        - eps[:, None, None] * np.eye(n)[None, :, :]
        - band_boundary_green(eps)[:, None, None] * spec.coupling_matrix()[None, :, :]
    )
    cond = np.linalg.cond(A)
    if np.any(~np.isfinite(cond) | (cond > COND_LIMIT)):
        bad = int(np.argmax(~np.isfinite(cond) | (cond > COND_LIMIT)))
        raise SingularEffectiveHamiltonian(
            f"h_s - eps - Sigma is singular at eps={eps[bad]!r} (cond={cond[bad]:.3e})"
        )
    return np.linalg.inv(A)


def s_matrices(spec: SystemSpec, eps, check=True) -> np.ndarray:
    """Batched on-shell S-matrices, shape ``(len(eps), M, M)``."""
    eps = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(np.abs(eps) >= 1.0):
        raise ValueError("S-matrix energies must lie in the open band (-1, 1)")
    M = spec.M
    eye = np.eye(M, dtype=np.complex128)
    C = spec.chis
    if not np.any(C):
        return np.broadcast_to(eye, (eps.size, M, M)).copy()
    G = _effective_green_batch(spec, eps)
    # amp[e, j, k] = chi_j^dag G chi_k
    amp = np.einsum("ja,eab,kb->ejk", C.conj(), G, C)
    s = eye[None, :, :] + (2j * np.pi * spectral_weight(eps))[:, None, None] * amp
    if check:
        resid = np.abs(s @ np.conj(np.swapaxes(s, 1, 2)) - eye).max(axis=(1, 2))
        if np.any(resid > UNITARITY_LIMIT):
            bad = int(np.argmax(resid))
            raise UnitarityViolation(
                f"|s s^dag - 1| = {resid[bad]:.3e} at eps={eps[bad]!r}"
            )
    return s


def transmittances(s: np.ndarray) -> np.ndarray:
    """``T_kj = |delta_kj - s_kj|^2`` for a single or batched S-matrix."""
    M = s.shape[-1]
    return np.abs(np.eye(M) - s) ** 2


def on_shell_s_matrix(spec: SystemSpec, eps: float) -> OnShellData:
    eps = float(eps)
    s = s_matrices(spec, np.array([eps]))[0]
    return OnShellData(eps, s, transmittances(s))


def transmittance_sweep(spec: SystemSpec, grid) -> list:
    """Map :func:`on_shell_s_matrix` over the nodes of an energy grid, in order."""
    nodes = getattr(grid, "nodes", grid)
    out = []
    for i, eps in enumerate(np.asarray(nodes, dtype=float)):
        try:
            out.append(on_shell_s_matrix(spec, eps))
        except (SingularEffectiveHamiltonian, UnitarityViolation, ValueError) as exc:
            raise NodeError(i, float(eps), exc) from exc
    return out
