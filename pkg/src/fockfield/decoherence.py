"""
Amplification-chain evolution and environment-induced decoherence.

A measured two-state system is copied into pointer states while each branch
excites its own configuration of ``N`` unobserved environment factors.  The
pointer off-diagonal is suppressed by the product of the per-factor overlaps
between the two branch configurations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .density import DensityMatrix, boltzmann_entropy, von_neumann_entropy
from .errors import DomainError, InvariantViolation
from .fock import Ket, ModeSet, OpString, OpSum, apply, create, create_ket

UNITARY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ChainStep:
    """One link of the chain: unitary ``U`` plus the channels that decouple after it."""

    U: np.ndarray
    observed: tuple = ()
    decoupled: tuple = ()

    def __post_init__(self):
        u = np.asarray(self.U, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise DomainError("chain step matrix must be square")
        object.__setattr__(self, "U", u)
        object.__setattr__(self, "decoupled", tuple(int(j) for j in np.atleast_1d(self.decoupled)))

    def unitarity_error(self) -> float:
        return float(np.max(np.abs(self.U.conj().T @ self.U - np.eye(self.U.shape[0]))))


def evolve_chain(rho0: DensityMatrix, steps: Sequence[ChainStep], history: bool = False):
    """``rho_{k+1} = U_k rho_k U_k^dagger`` through every step.

    With ``history=True`` returns the list of all intermediate matrices
    (``rho0`` first) instead of only the final one.
    """
    rho = rho0
    trail = [rho0]
    for k, step in enumerate(steps):
        if step.U.shape[0] != rho.dim:
            raise DomainError(f"step {k}: dimension {step.U.shape[0]} does not match state {rho.dim}")
        err = step.unitarity_error()
        if err > UNITARY_TOL:
            raise DomainError(f"step {k} is not unitary (max |U^dagger U - 1| = {err:.3g})")
        rho = DensityMatrix(step.U @ rho.rho @ step.U.conj().T, rho.basis, rho.dims)
        trail.append(rho)
    return trail if history else rho


def chain_unitary(steps: Sequence[ChainStep]) -> np.ndarray:
    """Product ``U_{n-1} ... U_1 U_0`` of the chain."""
    u = np.eye(steps[0].U.shape[0], dtype=complex)
    for s in steps:
        u = s.U @ u
    return u


def branch_truncate(rho: DensityMatrix, step: ChainStep | Sequence[int] | int) -> DensityMatrix:
    """Zero the coherences of every decoupled channel, keeping its population."""
    channels = step.decoupled if isinstance(step, ChainStep) else [int(j) for j in np.atleast_1d(step)]
    r = np.array(rho.rho)
    for j in channels:
        if not 0 <= j < rho.dim:
            raise DomainError(f"decoupled channel {j} not in a basis of size {rho.dim}")
        keep = r[j, j]
        r[j, :] = 0
        r[:, j] = 0
        r[j, j] = keep
    return DensityMatrix(r, rho.basis, rho.dims)


# -- environment overlaps -----------------------------------------------------


@dataclass(frozen=True)
class EnvironmentModel:
    """``N`` unobserved factors with branch overlaps ``<e2_m|e1_m>``.

    Either a common magnitude ``c`` or an explicit list ``overlaps`` (complex
    allowed); an explicit list fixes ``N`` to its length.
    """

    N: int
    c: float | None = None
    overlaps: tuple | None = None

    def __post_init__(self):
        if self.overlaps is not None:
            ov = tuple(complex(x) for x in self.overlaps)
            object.__setattr__(self, "overlaps", ov)
            if len(ov) != self.N:
                raise DomainError(f"N = {self.N} but {len(ov)} overlaps given")
        elif self.c is None:
            raise DomainError("give either c or overlaps")
        if self.N < 0:
            raise DomainError("N must be non-negative")

    def factors(self) -> np.ndarray:
        if self.overlaps is not None:
            return np.array(self.overlaps, dtype=complex)
        return np.full(self.N, complex(self.c))

    def check_strict(self):
        mags = np.abs(self.factors())
        if np.any(mags >= 1):
            raise InvariantViolation("environment overlap < 1 for distinct branches",
                                     f"max |c_m| = {float(mags.max())!r}")


@dataclass(frozen=True)
class OverlapProduct:
    realized: complex
    magnitude: float
    bound: float


def environment_overlap_product(env: EnvironmentModel, same_branch: bool = False) -> OverlapProduct:
    """Product of per-factor overlaps and the bound ``c_max ** N``.

    For a branch with itself every factor is 1 and so is the product.
    """
    if same_branch:
        return OverlapProduct(1.0 + 0j, 1.0, 1.0)
    env.check_strict()
    f = env.factors()
    prod = complex(np.prod(f)) if f.size else 1.0 + 0j
    cmax = float(np.max(np.abs(f))) if f.size else 1.0
    return OverlapProduct(prod, abs(prod), cmax ** env.N)


def decay_curve(c: float, n_max: int):
    """Rows ``(N, magnitude, bound)`` for the scalar model, N = 1..n_max."""
    rows = []
    prev = None
    for n in range(1, n_max + 1):
        op = environment_overlap_product(EnvironmentModel(n, c))
        if prev is not None and c > 0 and not op.bound < prev:
            raise InvariantViolation("overlap bound strictly decreasing in N", f"N = {n}")
        prev = op.bound
        rows.append((n, op.magnitude, op.bound))
    return rows


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    """Pointer state after the chain.

    ``pointer`` is the unnormalized matrix ``[[E1 P1, coh], [coh*, E2 P2]]``;
    ``reduced_rho`` its unit-trace version.
    """

    pointer: np.ndarray
    reduced_rho: DensityMatrix
    efficiencies: tuple
    probabilities: tuple
    overlap: OverlapProduct

    @property
    def offdiagonal(self) -> float:
        return float(abs(self.pointer[0, 1]))


POINTER_LABELS = ("B1", "B2")


def _outcome(system_rho: DensityMatrix, pointer: np.ndarray, eff, overlap) -> MeasurementOutcome:
    if np.sum(np.asarray(eff) * system_rho.diagonal()) > 1 + 1e-12:
        raise InvariantViolation("sum E_i P_i <= 1")
    tr = np.trace(pointer).real
    if tr <= 0:
        raise DomainError("no branch is detected (zero efficiencies or probabilities)")
    return MeasurementOutcome(
        pointer,
        DensityMatrix(pointer / tr, POINTER_LABELS),
        tuple(float(e) for e in eff),
        tuple(float(p) for p in system_rho.diagonal()),
        overlap,
    )


def _check_system(system_rho: DensityMatrix, efficiencies):
    if system_rho.dim != 2:
        raise DomainError("the measured system must be two-dimensional")
    e = np.asarray(efficiencies, dtype=float)
    if e.shape != (2,) or np.any(e < 0) or np.any(e > 1):
        raise DomainError("efficiencies must be two numbers in [0, 1]")
    return e


def measure_with_chain(system_rho: DensityMatrix, env: EnvironmentModel, efficiencies=(1.0, 1.0)) -> MeasurementOutcome:
    """Scalar model: pointer coherence ``rho_12 sqrt(E1 E2) prod_m c_m``."""
    e = _check_system(system_rho, efficiencies)
    ov = environment_overlap_product(env) if env.N else OverlapProduct(1.0 + 0j, 1.0, 1.0)
    p = system_rho.diagonal()
    coh = system_rho.rho[0, 1] * np.sqrt(e[0] * e[1]) * ov.realized
    pointer = np.array([[e[0] * p[0], coh], [np.conj(coh), e[1] * p[1]]], dtype=complex)
    return _outcome(system_rho, pointer, e, ov)


def environment_modeset(n: int) -> ModeSet:
    """Pointer modes B1, B2, then two orthonormal modes per environment factor, then system modes b1, b2."""
    labels = ["B1", "B2"]
    for m in range(n):
        labels += [f"e{m}_0", f"e{m}_1"]
    labels += ["b1", "b2"]
    return ModeSet.build(labels)


def branch_creator(env: EnvironmentModel, branch: int) -> OpSum:
    """``eta_i = prod_m d_m^(i)dagger``.

    ``d^(1)_m = e_m0``; ``d^(2)_m^dagger = conj(c_m) e_m0^dagger + sqrt(1 - |c_m|^2) e_m1^dagger``,
    so ``<V| d^(2)_m d^(1)dagger_m |V> = c_m``.
    """
    op: OpString | OpSum = OpString()
    for m, c in enumerate(env.factors()):
        if branch == 1:
            d = OpSum((create(f"e{m}_0"),))
        else:
            d = complex(np.conj(c)) * create(f"e{m}_0") + float(np.sqrt(max(0.0, 1 - abs(c) ** 2))) * create(f"e{m}_1")
        op = op * d
    return op if isinstance(op, OpSum) else OpSum((op,))


def effective_detector(env: EnvironmentModel, efficiencies=(1.0, 1.0)) -> OpSum:
    """``D = sqrt(E1) eta_1 B1^dagger b1 + sqrt(E2) eta_2 B2^dagger b2``."""
    e = np.sqrt(np.asarray(efficiencies, dtype=float))
    d1 = complex(e[0]) * branch_creator(env, 1) * create("B1") * OpString((("b1", "annihilate"),))
    d2 = complex(e[1]) * branch_creator(env, 2) * create("B2") * OpString((("b2", "annihilate"),))
    return d1 + d2


def exact_pointer_density(system_rho: DensityMatrix, env: EnvironmentModel, efficiencies=(1.0, 1.0)) -> MeasurementOutcome:
    """Pointer matrix from the full Fock construction, tracing the environment exactly.

    Applies the effective detector to each system basis state and traces out
    every environment mode; cost grows as ``2**N``.
    """
    e = _check_system(system_rho, efficiencies)
    ms = environment_modeset(env.N)
    d = effective_detector(env, e)
    images = [apply(d, create_ket(ms, b)) for b in ("b1", "b2")]
    pointer = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            if system_rho.rho[i, j] == 0:
                continue
            pointer += system_rho.rho[i, j] * _cross_reduced(images[i], images[j])
    ov = environment_overlap_product(env) if env.N else OverlapProduct(1.0 + 0j, 1.0, 1.0)
    return _outcome(system_rho, pointer, e, ov)


def _cross_reduced(ket_i: Ket, ket_j: Ket) -> np.ndarray:
    """``Tr_env |ket_i><ket_j|`` restricted to the single-pointer sector (B1, B2)."""
    ms = ket_i.modeset
    b = [ms.index_of("B1"), ms.index_of("B2")]
    cols_i, cols_j = {}, {}
    for ket, cols in ((ket_i, cols_i), (ket_j, cols_j)):
        for s, a in ket.terms.items():
            ptr = [i for i, _ in s.occupation if i in b]
            if len(ptr) != 1:
                continue
            rest = tuple(x for x in s.occupation if x[0] not in b)
            cols.setdefault(rest, np.zeros(2, dtype=complex))[b.index(ptr[0])] += a
    out = np.zeros((2, 2), dtype=complex)
    for k, v in cols_i.items():
        w = cols_j.get(k)
        if w is not None:
            out += np.outer(v, w.conj())
    return out


@dataclass(frozen=True)
class EntropyChange:
    initial: float
    final: float
    increased: bool

    @property
    def delta(self) -> float:
        return self.final - self.initial


def entropy_increase_check(initial: DensityMatrix, outcome: MeasurementOutcome) -> EntropyChange:
    """Entropy of the system before (eigenbasis) and of the pointer populations ``E_i P_i`` after."""
    s0 = von_neumann_entropy(initial)
    s1 = boltzmann_entropy(np.real(np.diag(outcome.pointer)))
    return EntropyChange(s0, s1, bool(s1 - s0 >= -1e-12))


def chain_trace(rho0: DensityMatrix, steps: Sequence[ChainStep]):
    """Rows ``(step, purity, boltzmann entropy)`` along the chain."""
    return [(k, r.purity(), boltzmann_entropy(r)) for k, r in enumerate(evolve_chain(rho0, steps, history=True))]


__all__ = [
    "ChainStep",
    "EnvironmentModel",
    "EntropyChange",
    "MeasurementOutcome",
    "OverlapProduct",
    "branch_truncate",
    "chain_trace",
    "chain_unitary",
    "decay_curve",
    "effective_detector",
    "entropy_increase_check",
    "environment_overlap_product",
    "evolve_chain",
    "exact_pointer_density",
    "measure_with_chain",
]
