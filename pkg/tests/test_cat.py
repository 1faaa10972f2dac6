import numpy as np
import pytest

from fockfield.cat import (
    PointerMeasurement,
    TransitionModel,
    class_block,
    final_state_density,
    measure_pointer,
)
from fockfield.density import DensityMatrix
from fockfield.errors import DomainError
from fockfield.oracle import final_state_by_loops
from fockfield.waves import Grid1D, WaveMode

SPLIT = TransitionModel.polarization_split(channel_amplitudes=((1.0, 1.0), (1.0, -1.0)))


def test_diagonal_inputs_give_exact_block_diagonal():
    rho = final_state_density(SPLIT, DensityMatrix.mixture([0.3, 0.7]), DensityMatrix.mixture([0.5, 0.5]))
    assert np.all(class_block(rho, 0, 1) == 0)
    assert np.all(class_block(rho, 1, 0) == 0)


def test_coherent_polarization_gives_class_coherence():
    sigma = DensityMatrix.pure([1, 1j])
    rho = final_state_density(SPLIT, sigma, DensityMatrix.mixture([1, 1]))
    assert np.max(np.abs(class_block(rho, 0, 1))) > 0.1
    np.testing.assert_allclose(rho.rho, final_state_by_loops(SPLIT.T, sigma.rho, np.eye(2) / 2), atol=1e-14)


def test_pure_inputs_stay_pure():
    t = np.zeros((2, 2, 2, 2), dtype=complex)
    q = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 4)))[0]
    t[:] = q.reshape(2, 2, 2, 2)
    rho = final_state_density(TransitionModel(t), DensityMatrix.pure([1, 0.3j]), DensityMatrix.pure([0.6, 0.8]))
    assert rho.purity() == pytest.approx(1, abs=1e-10)


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        final_state_density(SPLIT, DensityMatrix.mixture([1, 1, 1]), DensityMatrix.mixture([1, 1]))
    with pytest.raises(DomainError):
        TransitionModel(np.zeros((2, 2, 2)))


def directions(n=41):
    g = Grid1D(0, np.pi, n)
    th = g.x
    phi0 = WaveMode.normalized(g, np.ones(n) + 0j)
    phi1 = WaveMode.normalized(g, np.cos(th) + 0j)
    return g, np.array([phi0.values, phi1.values])


def test_tau_delta_removes_class_coherence():
    g, ch = directions()
    rho = final_state_density(SPLIT, DensityMatrix.pure([1, 1]), DensityMatrix.mixture([1, 1]))
    assert np.max(np.abs(class_block(rho, 0, 1))) > 0
    r = measure_pointer(rho, PointerMeasurement(ch))
    assert np.all(class_block(r.reduced, 0, 1) == 0)
    stripped = DensityMatrix(_strip(rho), rho.basis, rho.dims)
    np.testing.assert_allclose(r.distribution, measure_pointer(stripped, PointerMeasurement(ch)).distribution,
                               atol=1e-15)
    assert np.all(r.distribution >= 0)
    assert np.sum(r.distribution) * g.dx == pytest.approx(1, abs=1e-12)


def _strip(rho):
    r = rho.rho.reshape(2, 2, 2, 2).copy()
    r[0, :, 1, :] = 0
    r[1, :, 0, :] = 0
    return r.reshape(4, 4)


def test_single_channel_distribution():
    g, ch = directions()
    t = np.zeros((2, 1, 2, 1), dtype=complex)
    t[0, 0, 0, 0] = t[1, 0, 1, 0] = 1
    rho = final_state_density(TransitionModel(t), DensityMatrix.mixture([0.25, 0.75]), DensityMatrix.mixture([1]))
    r = measure_pointer(rho, PointerMeasurement(ch[1:]))
    np.testing.assert_allclose(r.distribution, np.abs(ch[1]) ** 2, atol=1e-15)


def test_channel_cross_term_tracks_sigma_coherence():
    g, ch = directions()
    # one class, polarizations feed the two emission channels
    t = np.zeros((1, 2, 2, 1), dtype=complex)
    t[0, 0, 0, 0] = t[0, 1, 1, 0] = 1
    model = TransitionModel(t)
    m = PointerMeasurement(ch, tau=np.eye(1))
    coherent = measure_pointer(final_state_density(model, DensityMatrix.pure([1, 1]), DensityMatrix.mixture([1])), m)
    mixed = measure_pointer(final_state_density(model, DensityMatrix.mixture([1, 1]), DensityMatrix.mixture([1])), m)
    cross = np.real(ch[0].conj() * ch[1])
    np.testing.assert_allclose(coherent.distribution - mixed.distribution, cross, atol=1e-14)
    assert np.max(np.abs(cross)) > 0.01


def test_measurement_validation():
    g, ch = directions()
    rho = final_state_density(SPLIT, DensityMatrix.mixture([1, 1]), DensityMatrix.mixture([1, 1]))
    with pytest.raises(DomainError):
        measure_pointer(rho, PointerMeasurement(ch[:1]))
    with pytest.raises(DomainError):
        PointerMeasurement(ch, tau=np.array([[1, 1j], [1j, 1]]))
    with pytest.raises(DomainError):
        measure_pointer(DensityMatrix.mixture([1, 1, 1, 1]), PointerMeasurement(ch))
    with pytest.raises(DomainError):
        PointerMeasurement(ch, tau=np.eye(2), kappa=np.eye(1))
