"""
Cat-as-pointer: final-state density matrix over (recoil class n, emission
channel l), measurement of the emitted particle, and the live/dead verdict.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decoherence import MeasurementOutcome
from .density import DensityMatrix
from .errors import DomainError

CLASS_LABELS = ("u", "d")
CAT_LABELS = ("live", "dead")


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """Transition tensor ``T[n, l, p, k] = <n l| T |p k>``."""

    T: np.ndarray
    class_labels: tuple = CLASS_LABELS

    def __post_init__(self):
        t = np.asarray(self.T, dtype=complex)
        if t.ndim != 4:
            raise DomainError("transition tensor must have indices (n, l, p, k)")
        object.__setattr__(self, "T", t)
        if len(self.class_labels) != t.shape[0]:
            object.__setattr__(self, "class_labels", tuple(f"n{i}" for i in range(t.shape[0])))

    @property
    def shape(self):
        return self.T.shape

    @classmethod
    def polarization_split(cls, channel_amplitudes=((1.0, 0.0), (0.0, 1.0)), n_recoil: int = 2) -> "TransitionModel":
        """Polarization ``+`` feeds class ``u`` only, ``-`` feeds ``d`` only.

        ``channel_amplitudes[p]`` spreads polarization ``p`` over the emission
        channels; recoil index ``k`` passes through unchanged onto every channel.
        """
        amps = np.asarray(channel_amplitudes, dtype=complex)
        n_l = amps.shape[1]
        t = np.zeros((2, n_l, 2, n_recoil), dtype=complex)
        for p in range(2):
            for k in range(n_recoil):
                t[p, :, p, k] = amps[p] / np.sqrt(n_recoil)
        return cls(t)

    def basis_labels(self):
        return tuple(f"{n},l{l}" for n in self.class_labels for l in range(self.T.shape[1]))


def final_state_density(model: TransitionModel, sigma: DensityMatrix, beta: DensityMatrix) -> DensityMatrix:
    """``rho[n'l', n''l''] = sum T[n'l', p'k'] sigma[p'p''] beta[k'k''] conj(T[n''l'', p''k''])``, normalized."""
    nn, nl, np_, nk = model.shape
    if sigma.dim != np_ or beta.dim != nk:
        raise DomainError(f"sigma is {sigma.dim}x{sigma.dim} and beta {beta.dim}x{beta.dim}, "
                          f"transition expects {np_} and {nk}")
    t = model.T.reshape(nn * nl, np_, nk)
    rho = np.einsum("apk,pq,kr,bqr->ab", t, sigma.rho, beta.rho, t.conj())
    tr = np.trace(rho).real
    if tr <= 0:
        raise DomainError("transition annihilates the initial state")
    return DensityMatrix(rho / tr, model.basis_labels(), dims=(nn, nl))


def class_block(rho: DensityMatrix, a: int, b: int) -> np.ndarray:
    """The ``(n=a, n=b)`` block of a final-state density matrix."""
    nn, nl = rho.dims
    return rho.rho.reshape(nn, nl, nn, nl)[a, :, b, :]


@dataclass(frozen=True, eq=False)
class PointerMeasurement:
    """Detection of the emitted particle along sampled directions.

    ``channels[l, i]`` is ``phi_l`` at direction ``i``; ``tau`` is the
    polarization kernel and ``kappa`` a kernel on the recoil-class sector.
    """

    channels: np.ndarray
    tau: np.ndarray = None
    kappa: np.ndarray = None

    def __post_init__(self):
        ch = np.atleast_2d(np.asarray(self.channels, dtype=complex))
        object.__setattr__(self, "channels", ch)
        tau = np.eye(2) if self.tau is None else np.asarray(self.tau, dtype=complex)
        if np.max(np.abs(tau - tau.conj().T)) > 1e-12:
            raise DomainError("tau must be Hermitian")
        object.__setattr__(self, "tau", tau)
        kappa = np.eye(tau.shape[0]) if self.kappa is None else np.asarray(self.kappa, dtype=complex)
        if kappa.shape != tau.shape:
            # tau acts on the class sector through the polarization-to-class map
            raise DomainError(f"kappa {kappa.shape} and tau {tau.shape} must share the class-sector shape")
        object.__setattr__(self, "kappa", kappa)

    def class_kernel(self) -> np.ndarray:
        """Effective recoil-class kernel: ``kappa`` masked by the polarization kernel."""
        return self.kappa * self.tau


@dataclass(frozen=True, eq=False)
class PointerReading:
    distribution: np.ndarray
    reduced: DensityMatrix


def measure_pointer(rho: DensityMatrix, M: PointerMeasurement) -> PointerReading:
    """``P(dir) = sum K[n', n''] conj(phi_l'(dir)) phi_l''(dir) rho[n'l', n''l'']``.

    With ``tau = delta`` the kernel is diagonal in the class index, so
    class-changing coherences drop out of both ``P`` and the reduced state.
    """
    if rho.dims is None or len(rho.dims) != 2:
        raise DomainError("rho must carry (n, l) dims")
    nn, nl = rho.dims
    K = M.class_kernel()
    if K.shape != (nn, nn) or M.channels.shape[0] != nl:
        raise DomainError(f"measurement kernels sized {K.shape} / {M.channels.shape[0]} channels "
                          f"for rho with dims {rho.dims}")
    r = rho.rho.reshape(nn, nl, nn, nl)
    phi = M.channels
    p = np.real(np.einsum("ab,li,mi,albm->i", K, phi.conj(), phi, r))
    masked = (r * K[:, None, :, None]).reshape(nn * nl, nn * nl)
    reduced = DensityMatrix(masked / np.trace(masked).real, rho.basis, rho.dims)
    return PointerReading(p, reduced)


@dataclass(frozen=True, eq=False)
class CatState:
    rho: DensityMatrix
    p_live: float
    p_dead: float
    offdiagonal: float
    bound: float
    classical: bool

    @property
    def verdict(self) -> str:
        return "classical mixture" if self.classical else "not yet classical"


def cat_verdict(outcome: MeasurementOutcome, tol: float = 1e-9) -> CatState:
    """Read the pointer of a chain measurement as live (branch 1) / dead (branch 2)."""
    r = outcome.reduced_rho
    rho = DensityMatrix(r.rho, CAT_LABELS)
    off = float(abs(r.rho[0, 1]))
    d = r.diagonal()
    return CatState(rho, float(d[0]), float(d[1]), off, outcome.overlap.bound, off <= tol)


