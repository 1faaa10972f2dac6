"""Density matrices, density state vectors, thermal states and entropies."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, InvariantViolation
from .fock import OpString, OpSum, apply, inner

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_TOL = 1e-10

# natural-unit conversions (hbar = c = k_B = 1, energies in eV)
HBAR_C_EV_NM = 197.3269804
K_B_EV_PER_K = 8.617333262e-5
AMU_EV = 931.49410242e6
ARGON_MASS_U = 39.948
ATOMIC_SCALE_NM = 0.1


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix over labelled basis states.

    ``dims`` records a tensor-product factorization of the basis when there is one.
    """

    rho: np.ndarray
    basis: tuple = ()
    dims: tuple | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        r = np.array(self.rho, dtype=complex)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise DomainError(f"density matrix must be square, got shape {r.shape}")
        n = r.shape[0]
        basis = tuple(str(b) for b in self.basis) or tuple(str(i) for i in range(n))
        if len(basis) != n:
            raise DomainError("basis labels do not match the matrix size")
        if self.dims is not None and int(np.prod(self.dims)) != n:
            raise DomainError(f"dims {self.dims} do not multiply to {n}")
        r.setflags(write=False)
        object.__setattr__(self, "rho", r)
        object.__setattr__(self, "basis", basis)
        if self.validate:
            self.check()

    def check(self):
        r = self.rho
        herm = float(np.max(np.abs(r - r.conj().T))) if r.size else 0.0
        if herm > HERMITIAN_TOL:
            raise InvariantViolation("density matrix hermiticity", f"max |rho - rho^dagger| = {herm:.3g}")
        tr = np.trace(r)
        if abs(tr - 1) > TRACE_TOL:
            raise InvariantViolation("density matrix unit trace", f"trace = {tr!r}")
        low = float(np.min(np.linalg.eigvalsh(0.5 * (r + r.conj().T))))
        if low < -EIGEN_TOL:
            raise InvariantViolation("density matrix positivity", f"min eigenvalue = {low:.3g}")

    @classmethod
    def pure(cls, amplitudes, basis=(), dims=None) -> "DensityMatrix":
        c = np.asarray(amplitudes, dtype=complex)
        c = c / np.linalg.norm(c)
        return cls(np.outer(c, c.conj()), basis, dims)

    @classmethod
    def mixture(cls, probabilities, basis=()) -> "DensityMatrix":
        p = np.asarray(probabilities, dtype=float)
        return cls(np.diag(p / p.sum()).astype(complex), basis)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.rho)).copy()

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def max_offdiagonal(self) -> float:
        off = self.rho - np.diag(np.diag(self.rho))
        return float(np.max(np.abs(off))) if off.size else 0.0

    def is_diagonal(self, tol: float = 0.0) -> bool:
        return self.max_offdiagonal() <= tol

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.rho)


@dataclass(frozen=True)
class ThermalConfig:
    temperature: float
    energies: Sequence[float]
    labels: Sequence[str] = ()


def thermal_density(cfg: ThermalConfig) -> DensityMatrix:
    """Diagonal Boltzmann weights ``Z exp(-E_i / T)``."""
    if not cfg.temperature > 0:
        raise DomainError("temperature must be positive")
    e = np.asarray(cfg.energies, dtype=float)
    w = np.exp(-(e - e.min()) / cfg.temperature)
    return DensityMatrix(np.diag(w / w.sum()).astype(complex), tuple(cfg.labels))


def _diag_weights(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        w = rho.diagonal()
    else:
        a = np.asarray(rho)
        w = np.real(np.diag(a)) if a.ndim == 2 else np.real(a).astype(float)
    if np.any(w < -EIGEN_TOL):
        raise DomainError("diagonal weights must be non-negative")
    return np.clip(w, 0.0, None)


def boltzmann_entropy(rho) -> float:
    """``-sum_j w_jj log w_jj`` over the diagonal only (nats, 0 log 0 = 0)."""
    w = _diag_weights(rho)
    nz = w[w > 0]
    return float(-np.sum(nz * np.log(nz)) + 0.0)


def von_neumann_entropy(rho) -> float:
    """``-Tr rho log rho``; basis independent, unlike ``boltzmann_entropy``."""
    r = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho)
    w = np.clip(np.linalg.eigvalsh(r), 0.0, None)
    nz = w[w > 0]
    # eigenvalues of a pure state can round to 1 + eps
    return max(float(-np.sum(nz * np.log(nz))), 0.0)


def probability_density(state, psi, energies, t):
    """Position probability density from stationary components.

    ``state`` is an amplitude vector (pure) or a DensityMatrix (mixed);
    ``psi[j]`` holds ``psi_j(x)`` (scalar or array over x) and ``energies[j]``
    its energy.  Returns an array over ``t`` (and ``x``), squeezed.
    """
    if energies is None:
        raise DomainError("energies are required for time evolution")
    e = np.asarray(energies, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 1:
        psi = psi[:, None]
    if psi.shape[0] != e.size:
        raise DomainError(f"{psi.shape[0]} mode functions but {e.size} energies")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    phases = np.exp(-1j * np.multiply.outer(t, e))  # (nt, n)
    phi = phases[:, :, None] * psi[None, :, :]  # (nt, n, nx)
    if isinstance(state, DensityMatrix):
        if state.dim != e.size:
            raise DomainError("density matrix size does not match the number of components")
        p = np.real(np.einsum("jk,tjx,tkx->tx", state.rho, phi, phi.conj()))
    else:
        c = np.asarray(state, dtype=complex)
        if c.size != e.size:
            raise DomainError("amplitude count does not match the number of components")
        p = np.abs(np.einsum("j,tjx->tx", c, phi)) ** 2
    return np.squeeze(p)[()]


@dataclass(frozen=True, eq=False)
class DensityStateVector:
    """``sum_jk |s_j> rho_jk <s_k|`` with Fock dressing kets ``|s_j>`` (e.g. ``b_j^dagger |V>``)."""

    states: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex)
        if w.shape != (len(self.states), len(self.states)):
            raise DomainError("weight matrix does not match the number of dressing states")
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_modes(cls, modeset, modes, weights) -> "DensityStateVector":
        from .fock import create_ket

        return cls(tuple(create_ket(modeset, m) for m in modes), weights)

    def gram(self) -> np.ndarray:
        s = self.states
        return np.array([[inner(a, b) for b in s] for a in s])

    def to_density_matrix(self) -> DensityMatrix:
        g = self.gram()
        if np.max(np.abs(g - np.eye(len(self.states)))) > 1e-12:
            raise DomainError("dressing states are not orthonormal")
        return DensityMatrix(self.weights)


def expectation(dsv: DensityStateVector, op) -> complex:
    """Trace of the density state vector against an operator.

    ``op`` is an OpString/OpSum acting in Fock space, or an explicit kernel
    matrix over the dressing index.  Cyclic reordering carries no sign:
    ``Tr(Omega O) = sum_jk rho_jk <s_k| O |s_j>``.
    """
    rho = dsv.weights
    n = rho.shape[0]
    if isinstance(op, (OpString, OpSum)):
        images = [apply(op, s) for s in dsv.states]
        kernel = np.array([[inner(dsv.states[k], images[j]) for j in range(n)] for k in range(n)])
    else:
        kernel = np.asarray(op, dtype=complex)
        if kernel.shape != (n, n):
            raise DomainError(f"kernel shape {kernel.shape} does not match {n} dressing states")
    return complex(np.sum(rho * kernel.T))


def partial_trace(rho: DensityMatrix, keep=0, dims=None) -> DensityMatrix:
    """Trace out every tensor factor not listed in ``keep``."""
    dims = tuple(dims or rho.dims or ())
    if not dims or int(np.prod(dims)) != rho.dim:
        raise DomainError("basis does not factorize: give dims multiplying to the matrix size")
    keep = (keep,) if np.isscalar(keep) else tuple(keep)
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DomainError(f"keep indices {keep} out of range for {len(dims)} factors")
    n = len(dims)
    t = rho.rho.reshape(dims + dims)
    for ax in sorted(set(range(n)) - set(keep), reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=ax, axis2=ax + m)
    kd = tuple(dims[k] for k in sorted(keep))
    size = int(np.prod(kd))
    r = t.reshape(size, size)
    return DensityMatrix(r, dims=kd if len(kd) > 1 else None)


@dataclass(frozen=True)
class Localization:
    length: float  # 1/eV
    length_nm: float
    below_atomic_scale: bool


def argon_localization(temperature: float, mass: float) -> Localization:
    """Thermal de Broglie length ``sqrt(2 pi / (m T))``; ``T`` and ``m`` in eV."""
    if temperature <= 0 or mass <= 0:
        raise DomainError("temperature and mass must be positive")
    lam = np.sqrt(2 * np.pi / (mass * temperature))
    nm = lam * HBAR_C_EV_NM
    return Localization(float(lam), float(nm), bool(nm < ATOMIC_SCALE_NM))


def argon_at(kelvin: float = 300.0) -> Localization:
    return argon_localization(kelvin * K_B_EV_PER_K, ARGON_MASS_U * AMU_EV)
