import numpy as np
import pytest
from hypothesis import given, settings

from conftest import dot, random_spec, seeds
from nesstransport.errors import NodeError, SingularEffectiveHamiltonian
from nesstransport.model import build_system, is_time_reversal_invariant
from nesstransport.numerics import EnergyGrid
from nesstransport.scattering import (
    effective_green,
    on_shell_s_matrix,
    s_matrices,
    self_energy,
    transmittance_sweep,
    transmittances,
)


def _gaussian_spec(rng, tri=False):
    n_s, M = int(rng.integers(1, 6)), int(rng.integers(1, 5))
    A = rng.normal(size=(n_s, n_s))
    chis = rng.normal(size=(M, n_s))
    if not tri:
        A = A + 1j * rng.normal(size=(n_s, n_s))
        chis = chis + 1j * rng.normal(size=(M, n_s))
    return build_system((A + A.conj().T) / 2, list(chis), [(1.0, 0.0)] * M)


@settings(max_examples=30)
@given(seed=seeds)
def test_unitarity_random(seed):
    rng = np.random.default_rng(seed)
    spec = _gaussian_spec(rng)
    eps = rng.uniform(-0.999, 0.999, 200)
    s = s_matrices(spec, eps, check=False)
    resid = np.abs(s @ np.conj(np.swapaxes(s, 1, 2)) - np.eye(spec.M)).max()
    assert resid <= 1e-10


@settings(max_examples=30)
@given(seed=seeds)
def test_symmetric_when_time_reversal_invariant(seed):
    rng = np.random.default_rng(seed)
    spec = _gaussian_spec(rng, tri=True)
    assert is_time_reversal_invariant(spec)
    s = s_matrices(spec, rng.uniform(-0.99, 0.99, 50))
    assert np.abs(s - np.swapaxes(s, 1, 2)).max() <= 1e-10


def test_non_reciprocal_without_time_reversal():
    ring = build_system([[0, 0.5j, 0], [-0.5j, 0, 0.5], [0, 0.5, 0]], [[0.5, 0, 0], [0, 0, 0.5]], [(1.0, 0.0)] * 2)
    T = transmittances(s_matrices(ring, [0.2]))[0]
    s = s_matrices(ring, [0.2])[0]
    assert np.abs(s - s.T).max() > 1e-3
    # two leads: unitarity alone forces T_12 = T_21
    assert T[0, 1] == pytest.approx(T[1, 0], abs=1e-12)


def test_decoupled_identity():
    spec = build_system([[0.3]], [[0.0], [0.0]], [(1.0, 0.0)] * 2)
    s = s_matrices(spec, [-0.5, 0.0, 0.5])
    np.testing.assert_allclose(s, np.broadcast_to(np.eye(2), (3, 2, 2)), atol=0)
    data = transmittance_sweep(spec, EnergyGrid.uniform(-0.5, 0.5, 3))
    assert [d.eps for d in data] == [-0.5, 0.0, 0.5]


def test_resonant_dot_full_transmission():
    spec = dot(0.3, 0.3)
    d = on_shell_s_matrix(spec, 0.0)
    assert d.transmittance[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert d.unitarity_residual() <= 1e-14


def test_sweep_peaks_at_resonance():
    spec = dot(0.3, 0.3)
    data = transmittance_sweep(spec, EnergyGrid.uniform(-0.9, 0.9, 181))
    T = np.array([d.transmittance[0, 1] for d in data])
    assert data[int(np.argmax(T))].eps == pytest.approx(0.0, abs=1e-12)
    for d in data:
        # row sums of |s|^2 are one, so sum_{k != j} T_kj = 1 - |s_jj|^2
        off = d.transmittance.sum(axis=0) - d.transmittance.diagonal()
        np.testing.assert_allclose(off, 1 - np.abs(d.s.diagonal()) ** 2, atol=1e-12)


def test_effective_green_closed_form():
    spec = build_system([[0.0]], [[1.0]], [(1.0, 0.0)])
    assert effective_green(spec, 0.0)[0, 0] == pytest.approx(0.5j, abs=1e-15)
    assert self_energy(spec, 0.0, boundary=True)[0, 0] == pytest.approx(2j)


def test_singular_when_level_decouples():
    # the odd combination of two degenerate levels does not see the lead
    spec = build_system([[0.2, 0.0], [0.0, 0.2]], [[0.3, 0.3]], [(1.0, 0.0)])
    with pytest.raises(SingularEffectiveHamiltonian):
        effective_green(spec, 0.2)
    with pytest.raises(NodeError) as info:
        transmittance_sweep(spec, [0.0, 0.2])
    assert info.value.index == 1 and isinstance(info.value.cause, SingularEffectiveHamiltonian)


def test_band_edge_decay():
    spec = dot(0.3, 0.2, eps_d=0.1)
    for sign in (1, -1):
        eps = sign * (1 - 10.0 ** -np.arange(3, 7))
        T = transmittances(s_matrices(spec, eps))[:, 0, 1]
        ratio = T / (1 - eps**2)
        assert np.all(np.abs(np.diff(ratio)) <= 0.05 * ratio[:-1])


@settings(max_examples=10)
@given(seed=seeds)
def test_transmittance_bounds(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng)
    T = transmittances(s_matrices(spec, rng.uniform(-0.99, 0.99, 40)))
    assert T.min() >= 0
    off = T - np.einsum("ejj->ej", T)[:, None, :] * np.eye(spec.M)
    assert off.sum(axis=1).max() <= 1 + 1e-12
