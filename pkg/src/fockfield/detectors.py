"""
Detector functions and the experiment assemblies built on them: two-slit
screens with a which-path Compton channel, and the two-arm spin-singlet
setup with filters and rotated analyzers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .density import DensityMatrix
from .errors import DomainError, InvariantViolation
from .fock import (
    Ket,
    ModeRef,
    ModeSet,
    OpSum,
    annihilate,
    apply,
    create,
    create_ket,
    field_operator,
    inner,
)
from .waves import Grid1D, WaveMode

SPIN_LABELS = ("+", "-")


@dataclass(frozen=True)
class DetectorSpec:
    """A point detector at ``position`` absorbing from ``accepted_modes``.

    ``efficiency`` is one complex scalar or a per-mode mapping.
    """

    position: float
    accepted_modes: tuple
    efficiency: object = 1.0

    def __post_init__(self):
        object.__setattr__(self, "accepted_modes", tuple(self.accepted_modes))
        if not self.accepted_modes:
            raise DomainError("a detector must accept at least one mode")
        effs = self.efficiency.values() if isinstance(self.efficiency, Mapping) else [self.efficiency]
        if any(abs(complex(e)) > 1 + 1e-12 for e in effs):
            raise DomainError("detector efficiency magnitude must not exceed 1")

    def eta(self, mode: ModeRef) -> complex:
        if isinstance(self.efficiency, Mapping):
            return complex(self.efficiency.get(mode, 0.0))
        return complex(self.efficiency)


def _mode_value(f, x):
    if isinstance(f, WaveMode):
        return f.value_at(x)
    if callable(f):
        return complex(f(x))
    return complex(f)


def detector_operator(det: DetectorSpec, modes: Mapping[ModeRef, object] | None = None) -> OpSum:
    """``D = sum_n eta_n f_n(x_m) b_n`` over the accepted modes.

    ``modes`` maps a mode to its WaveMode, a callable of position, or a plain
    value; modes missing from the map contribute nothing.  ``None`` takes
    unit mode values for every accepted mode.
    """
    values = {}
    for m in det.accepted_modes:
        if modes is None:
            values[m] = det.eta(m)
        elif m in modes:
            values[m] = det.eta(m) * _mode_value(modes[m], det.position)
    return field_operator(values)


def detector_amplitude(det: DetectorSpec, modes, state: Ket) -> complex:
    """``<V| D_m |state>``; for ``b_n^dagger |V>`` this is ``eta f_n(x_m)``."""
    return inner(Ket.vacuum(state.modeset), apply(detector_operator(det, modes), state))


def coincidence_amplitude(det_a: DetectorSpec, det_b: DetectorSpec, state: Ket, modes=None) -> complex:
    """``<V| D_B D_A |state>``: both detectors absorbing from the same state."""
    d_a = detector_operator(det_a, modes)
    d_b = detector_operator(det_b, modes)
    return inner(Ket.vacuum(state.modeset), apply(d_b, apply(d_a, state)))


# -- screens and the which-path channel ---------------------------------------


def _shared_grid(modes: Mapping) -> Grid1D:
    grids = {id(m.grid): m.grid for m in modes.values()}
    grid = next(iter(grids.values()))
    if any(g != grid for g in grids.values()):
        raise DomainError("screen modes live on different grids")
    return grid


def screen_intensity(state: Ket, modes: Mapping[ModeRef, WaveMode]) -> np.ndarray:
    """Single-count screen intensity ``sum_rest |<rest| Psi(x) |state>|^2``.

    Unobserved modes (anything not in ``modes``, e.g. a recoil) are summed over.
    """
    grid = _shared_grid(modes)
    refs = list(modes)
    images = [apply(annihilate(m), state) for m in refs]
    rest = sorted({s for k in images for s in k.terms}, key=lambda s: s.occupation)
    if not rest:
        return np.zeros(grid.points)
    row = {s: i for i, s in enumerate(rest)}
    amp = np.zeros((len(rest), len(refs)), dtype=complex)
    for j, k in enumerate(images):
        for s, a in k.terms.items():
            amp[row[s], j] = a
    f = np.array([modes[m].values for m in refs])
    field_vals = amp @ f
    return np.sum(np.abs(field_vals) ** 2, axis=0)


def compton_operator(x_s: float, incoming: Mapping[ModeRef, WaveMode], outgoing: Mapping[ModeRef, WaveMode],
                     recoil: ModeRef, efficiency: complex = 1.0) -> OpSum:
    """Absorb at ``x_s``, re-emit into ``outgoing`` (weighted by their conjugate values at ``x_s``), excite ``recoil``."""
    absorb = field_operator({m: f.value_at(x_s) for m, f in incoming.items()})
    emit = OpSum(tuple(f.value_at(x_s).conjugate() * create(m) for m, f in outgoing.items()))
    return complex(efficiency) * emit * create(recoil) * absorb


def compton_channel(state: Ket, x_s: float, incoming: Mapping[ModeRef, WaveMode],
                    outgoing: Mapping[ModeRef, WaveMode], recoil: ModeRef,
                    efficiency: complex = 1.0, normalize: bool = True) -> Ket:
    """Which-path scattering at ``x_s``.

    The vacuum passes through unchanged.  Otherwise the scattered ket is
    returned, renormalized unless ``normalize=False``; a state with no
    amplitude at ``x_s`` yields the zero ket (no scattering event).
    """
    for f in list(incoming.values()) + list(outgoing.values()):
        f.grid.index_of(x_s)
    if all(s.is_vacuum() for s in state.terms):
        return state
    out = apply(compton_operator(x_s, incoming, outgoing, recoil, efficiency), state)
    if normalize and not out.is_zero():
        out = out.normalized()
    return out


def fringe_visibility(intensity: np.ndarray, grid: Grid1D, x_max: float, x_min: float) -> float:
    """``(I(x_max) - I(x_min)) / (I(x_max) + I(x_min))`` sampled at grid points."""
    i_hi = float(intensity[grid.index_of(x_max)])
    i_lo = float(intensity[grid.index_of(x_min)])
    total = i_hi + i_lo
    return 0.0 if total == 0 else (i_hi - i_lo) / total


# -- two-arm spin experiments --------------------------------------------------


def spinor(theta: float, phi: float = 0.0):
    """Up/down spinors along the axis at polar angle ``theta``, azimuth ``phi``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    up = np.array([c, np.exp(1j * phi) * s])
    down = np.array([-np.exp(-1j * phi) * s, c])
    return up, down


def rotated_annihilator(modes: Sequence[ModeRef], theta: float, outcome: str, phi: float = 0.0) -> OpSum:
    """Annihilator for spin ``outcome`` ('+' or '-') along the analyzer axis."""
    if outcome not in SPIN_LABELS:
        raise DomainError(f"outcome must be '+' or '-', got {outcome!r}")
    up, down = spinor(theta, phi)
    u = up if outcome == "+" else down
    return OpSum(tuple(complex(np.conj(u[i])) * annihilate(m) for i, m in enumerate(modes)))


@dataclass(frozen=True)
class FilterSpec:
    """Projection ``F = a'_+^dagger a'_+`` or spin flip ``T = a'_+^dagger a'_- + a'_-^dagger a'_+``.

    Primed operators are quantized along ``(theta, phi)`` on the mode pair ``modes``.
    """

    kind: str = "projection"
    theta: float = 0.0
    phi: float = 0.0
    modes: tuple = ("a+", "a-")

    def __post_init__(self):
        if self.kind not in ("projection", "spin_flip"):
            raise DomainError(f"unknown filter kind {self.kind!r}")

    def operator(self) -> OpSum:
        up = rotated_annihilator(self.modes, self.theta, "+", self.phi)
        down = rotated_annihilator(self.modes, self.theta, "-", self.phi)
        if self.kind == "projection":
            return up.dagger() * up
        return up.dagger() * down + down.dagger() * up


def apply_filter(f: FilterSpec, state: Ket) -> Ket:
    return apply(f.operator(), state)


EPR_MODES = ("a+", "a-", "b+", "b-")


def epr_modeset() -> ModeSet:
    return ModeSet.build(list(EPR_MODES))


@dataclass(frozen=True, eq=False)
class EprState:
    ket: Ket
    normalization: float
    arm1: tuple = ("a+", "a-")
    arm2: tuple = ("b+", "b-")

    def __post_init__(self):
        ms = self.ket.modeset
        up = {ms.index_of(self.arm1[0]), ms.index_of(self.arm2[0])}
        down = {ms.index_of(self.arm1[1]), ms.index_of(self.arm2[1])}
        for s in self.ket.terms:
            occ = {i for i, _ in s.occupation}
            if len(occ & up) != len(occ & down):
                raise InvariantViolation("singlet total spin-z", f"term {s!r} has non-zero S_z")


def singlet_state(modeset: ModeSet | None = None) -> EprState:
    """``(a_+^dagger b_-^dagger - a_-^dagger b_+^dagger) |V> / sqrt(2)``."""
    ms = modeset or epr_modeset()
    n = 1 / np.sqrt(2)
    ket = create_ket(ms, "a+", "b-", amplitude=n) - create_ket(ms, "a-", "b+", amplitude=n)
    return EprState(ket, n)


def _wrap(angle: float) -> float:
    return float(np.mod(angle, 2 * np.pi))


@dataclass(frozen=True)
class BellConfig:
    """Analyzer angles; ``chsh`` holds ``(alpha1, alpha2, beta1, beta2)``."""

    alpha: float = 0.0
    beta: float = 0.0
    chsh: tuple = (0.0, np.pi / 2, np.pi / 4, 3 * np.pi / 4)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _wrap(self.alpha))
        object.__setattr__(self, "beta", _wrap(self.beta))
        if len(self.chsh) != 4:
            raise DomainError("chsh needs four angles (alpha1, alpha2, beta1, beta2)")
        object.__setattr__(self, "chsh", tuple(_wrap(a) for a in self.chsh))


@dataclass(frozen=True)
class CoincidenceTable:
    """Normalized coincidence probabilities ``P[(s1, s2)]``; ``raw_total`` is the unnormalized sum."""

    probabilities: Mapping
    raw_total: float

    def __getitem__(self, key):
        return self.probabilities[key]

    def as_array(self) -> np.ndarray:
        return np.array([[self.probabilities[(a, b)] for b in SPIN_LABELS] for a in SPIN_LABELS])


def coincidence_amplitudes(state: EprState, config: BellConfig, filter: FilterSpec | None = None,
                           efficiencies=(1.0, 1.0), mode_values=(1.0, 1.0)) -> dict:
    """``<V| D_1 D_2 [F] |S_2>`` for each pair of analyzer outcomes."""
    ket = state.ket if filter is None else apply_filter(filter, state.ket)
    vac = Ket.vacuum(ket.modeset)
    out = {}
    for s1 in SPIN_LABELS:
        d1 = complex(efficiencies[0] * mode_values[0]) * rotated_annihilator(state.arm1, config.alpha, s1)
        for s2 in SPIN_LABELS:
            d2 = complex(efficiencies[1] * mode_values[1]) * rotated_annihilator(state.arm2, config.beta, s2)
            out[(s1, s2)] = inner(vac, apply(d1, apply(d2, ket)))
    return out


def epr_coincidence_table(state: EprState, filter: FilterSpec | None = None,
                          config: BellConfig = BellConfig()) -> CoincidenceTable:
    amps = coincidence_amplitudes(state, config, filter)
    weights = {k: abs(a) ** 2 for k, a in amps.items()}
    total = sum(weights.values())
    probs = {k: (w / total if total > 0 else 0.0) for k, w in weights.items()}
    return CoincidenceTable(probs, float(total))


def bell_correlation(state: EprState, alpha: float, beta: float) -> float:
    """``E = P(++) + P(--) - P(+-) - P(-+)`` for analyzers at ``alpha`` and ``beta``."""
    t = epr_coincidence_table(state, None, BellConfig(alpha, beta))
    p = t.probabilities
    return float(p[("+", "+")] + p[("-", "-")] - p[("+", "-")] - p[("-", "+")])


def chsh_terms(state: EprState, config: BellConfig = BellConfig()) -> dict:
    a1, a2, b1, b2 = config.chsh
    return {
        "E11": bell_correlation(state, a1, b1),
        "E12": bell_correlation(state, a1, b2),
        "E21": bell_correlation(state, a2, b1),
        "E22": bell_correlation(state, a2, b2),
    }


def chsh(state: EprState, config: BellConfig = BellConfig()) -> float:
    """``|E11 - E12 + E21 + E22|``."""
    e = chsh_terms(state, config)
    return float(abs(e["E11"] - e["E12"] + e["E21"] + e["E22"]))


def epr_density(state: EprState) -> DensityMatrix:
    """The two-arm state as a density matrix over (arm1 spin) x (arm2 spin).

    Requires both arm-1 modes to precede both arm-2 modes in the ordering, so
    ``a^dagger b^dagger |V>`` maps to the product basis vector without a sign.
    """
    ms = state.ket.modeset
    a = [ms.index_of(m) for m in state.arm1]
    b = [ms.index_of(m) for m in state.arm2]
    if max(a) > min(b):
        raise DomainError("arm-1 modes must precede arm-2 modes")
    amp = np.zeros((2, 2), dtype=complex)
    for s, c in state.ket.terms.items():
        occ = [i for i, _ in s.occupation]
        if len(occ) != 2 or occ[0] not in a or occ[1] not in b:
            raise DomainError(f"term {s!r} is not one particle per arm")
        amp[a.index(occ[0]), b.index(occ[1])] += c
    v = amp.reshape(-1)
    labels = [f"{x}{y}" for x in SPIN_LABELS for y in SPIN_LABELS]
    return DensityMatrix(np.outer(v, v.conj()) / np.vdot(v, v).real, labels, dims=(2, 2))


@dataclass(frozen=True)
class Preparation:
    transmitted: list
    rejected: int
    survival: list = field(default_factory=list)


def prepare_by_filter(beam: Sequence[Ket], f: FilterSpec) -> Preparation:
    """Keep the filtered part of each one-particle ket; wholly blocked kets count as rejected."""
    kept, probs, rejected = [], [], 0
    op = f.operator()
    for ket in beam:
        n0 = ket.norm2()
        out = apply(op, ket)
        p = out.norm2() / n0 if n0 > 0 else 0.0
        if out.is_zero() or p < 1e-14:
            rejected += 1
            continue
        kept.append(out.normalized())
        probs.append(float(p))
    return Preparation(kept, rejected, probs)
