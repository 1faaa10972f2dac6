import numpy as np
import pytest

from fockfield.density import (
    DensityMatrix,
    DensityStateVector,
    ThermalConfig,
    argon_at,
    argon_localization,
    boltzmann_entropy,
    expectation,
    partial_trace,
    probability_density,
    thermal_density,
    von_neumann_entropy,
)
from fockfield.detectors import epr_density, singlet_state
from fockfield.errors import DomainError, InvariantViolation
from fockfield.fock import ModeSet, annihilate, create, identity, number
from fockfield.oracle import thermal_length_si


def test_invariants_enforced():
    with pytest.raises(InvariantViolation, match="hermiticity"):
        DensityMatrix([[0.5, 0.1], [0.2, 0.5]])
    with pytest.raises(InvariantViolation, match="trace"):
        DensityMatrix(np.eye(2))
    with pytest.raises(InvariantViolation, match="positivity"):
        DensityMatrix([[1.5, 0], [0, -0.5]])
    with pytest.raises(DomainError):
        DensityMatrix(np.ones((2, 3)))


def test_thermal_examples():
    np.testing.assert_allclose(thermal_density(ThermalConfig(1.0, [0, 0])).diagonal(), [0.5, 0.5])
    t = 0.3
    np.testing.assert_allclose(thermal_density(ThermalConfig(t, [0, t * np.log(2)])).diagonal(), [2 / 3, 1 / 3],
                               atol=1e-15)
    hot = thermal_density(ThermalConfig(1e8, [0, 1, 2, 5])).diagonal()
    np.testing.assert_allclose(hot, 0.25, atol=1e-6)
    with pytest.raises(DomainError):
        thermal_density(ThermalConfig(0.0, [0, 1]))


def test_entropy_examples():
    assert boltzmann_entropy(DensityMatrix.mixture([1, 0, 0])) == 0
    assert boltzmann_entropy(DensityMatrix.mixture([1] * 5)) == pytest.approx(np.log(5))
    expected = 2 / 3 * np.log(1.5) + np.log(3) / 3
    assert boltzmann_entropy(DensityMatrix.mixture([2, 1])) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(0.6365, abs=1e-4)


def test_boltzmann_vs_von_neumann_on_coherent_state():
    rho = DensityMatrix.pure([1, 1])
    assert boltzmann_entropy(rho) == pytest.approx(np.log(2))
    assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-12)


def test_fluctuation_pure_vs_mixed():
    e1, e2, c = 1.0, 1.7, 0.8
    t = np.linspace(0, 20, 2001)
    pure = probability_density(np.array([1, 1]) / np.sqrt(2), [c, c], [e1, e2], t)
    np.testing.assert_allclose(pure, 2 * c ** 2 * 0.5 * (1 + np.cos((e2 - e1) * t)), atol=1e-14)
    mixed = probability_density(DensityMatrix.mixture([1, 1]), [c, c], [e1, e2], t)
    assert np.var(mixed) < 1e-12
    single = probability_density(np.array([1.0]), [[0.3, 0.5j]], [e1], t)
    np.testing.assert_allclose(single, np.broadcast_to([0.09, 0.25], single.shape), atol=1e-15)
    with pytest.raises(DomainError):
        probability_density([1, 0], [c, c], None, t)


def test_expectation_examples():
    ms = ModeSet.build(2)
    dsv = DensityStateVector.from_modes(ms, [0, 1], np.diag([0.7, 0.3]))
    assert expectation(dsv, identity()) == pytest.approx(1)
    pure = DensityStateVector.from_modes(ms, [0, 1], np.diag([1.0, 0.0]))
    assert expectation(pure, number(0)) == pytest.approx(1)
    th = thermal_density(ThermalConfig(0.5, [0.0, 0.2]))
    d = DensityStateVector.from_modes(ms, [0, 1], th.rho)
    assert expectation(d, number(1)).real == pytest.approx(th.diagonal()[1])
    assert expectation(d, np.diag([0, 1])).real == pytest.approx(th.diagonal()[1])
    with pytest.raises(DomainError):
        expectation(d, np.eye(3))


def test_expectation_matches_matrix_trace():
    ms = ModeSet.build(3)
    rng = np.random.default_rng(5)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    dsv = DensityStateVector.from_modes(ms, [0, 1, 2], rho)
    op = create(0) * annihilate(2) + 0.5j * create(1) * annihilate(0) + number(2)
    op = op + op.dagger()
    o = np.zeros((3, 3), dtype=complex)
    o[0, 2] += 1
    o[1, 0] += 0.5j
    o[2, 2] += 1
    o = o + o.conj().T
    assert expectation(dsv, op) == pytest.approx(np.trace(rho @ o), abs=1e-10)
    np.testing.assert_allclose(dsv.to_density_matrix().rho, rho)


def test_partial_trace_examples():
    ra = DensityMatrix([[0.7, 0.2], [0.2, 0.3]])
    rb = DensityMatrix.mixture([1, 2, 3])
    prod = DensityMatrix(np.kron(ra.rho, rb.rho), dims=(2, 3))
    np.testing.assert_allclose(partial_trace(prod, 0).rho, ra.rho, atol=1e-15)
    np.testing.assert_allclose(partial_trace(prod, 1).rho, rb.rho, atol=1e-15)
    bell = DensityMatrix.pure([1, 0, 0, 1], dims=(2, 2))
    np.testing.assert_allclose(partial_trace(bell, 0).rho, np.eye(2) / 2, atol=1e-15)
    arm1 = partial_trace(epr_density(singlet_state()), 0)
    np.testing.assert_allclose(arm1.rho, np.eye(2) / 2, atol=1e-15)
    with pytest.raises(DomainError):
        partial_trace(DensityMatrix.mixture([1, 1, 1]), 0)
    with pytest.raises(DomainError):
        partial_trace(prod, 2)


def test_argon():
    loc = argon_at(300)
    assert loc.length_nm == pytest.approx(0.016, abs=5e-4)
    assert loc.below_atomic_scale
    assert loc.length_nm == pytest.approx(thermal_length_si(300, 39.948), rel=1e-8)
    base = argon_localization(0.02, 3.0e10)
    assert argon_localization(0.02, 1.2e11).length == pytest.approx(base.length / 2)
    assert argon_localization(0.08, 3.0e10).length == pytest.approx(base.length / 2)
    with pytest.raises(DomainError):
        argon_localization(-1, 1)
