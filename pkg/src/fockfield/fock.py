"""
Sparse second-quantized Fock-space algebra.

States are occupation patterns over an ordered, finite set of modes.  Kets
are sparse superpositions of such patterns and operators are products of
creation/annihilation operators (``OpString``) or sums of them (``OpSum``).

Fermionic sign convention: acting with ``b_n`` or ``b_n^dagger`` on a basis
state contributes ``(-1)**k`` where ``k`` counts the occupied modes whose index
is strictly smaller than ``n``.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import DomainError, ResourceError

PRUNE_THRESHOLD = 1e-14
MAX_CHECK_MODES = 12


class Statistics(str, Enum):
    FERMIONIC = "fermionic"
    BOSONIC = "bosonic"


class Kind(str, Enum):
    CREATE = "create"
    ANNIHILATE = "annihilate"


@dataclass(frozen=True, order=True)
class ModeId:
    """A mode: integer position in the ordering plus a free-form tag."""

    index: int
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.index < 0:
            raise DomainError(f"mode index must be non-negative, got {self.index}")

    def __str__(self):
        return self.label or str(self.index)


ModeRef = Union[ModeId, int, str]


class ModeSet:
    """Ordered collection of modes sharing one statistics.

    Modes can be referred to by ``ModeId``, by integer index or by label.
    Bosonic modes carry an occupation ``cutoff``; exceeding it raises.
    """

    __slots__ = ("modes", "statistics", "cutoff", "_by_index", "_by_label", "_pos", "_hash")

    def __init__(self, modes: Iterable[ModeId], statistics=Statistics.FERMIONIC, cutoff: int = 8):
        modes = tuple(sorted(modes))
        indices = [m.index for m in modes]
        if len(set(indices)) != len(indices):
            raise DomainError("mode indices within a ModeSet must be unique")
        if cutoff < 1:
            raise DomainError("bosonic cutoff must be at least 1")
        self.modes = modes
        self.statistics = Statistics(statistics)
        self.cutoff = int(cutoff)
        self._by_index = {m.index: m for m in modes}
        self._by_label = {m.label: m for m in modes if m.label}
        self._pos = {m.index: i for i, m in enumerate(modes)}
        self._hash = hash((tuple(indices), self.statistics, self.cutoff))

    @classmethod
    def build(cls, spec: Union[int, Sequence[str]], statistics=Statistics.FERMIONIC, cutoff=8):
        """``ModeSet.build(3)`` or ``ModeSet.build(["a+", "a-"])``."""
        if isinstance(spec, int):
            modes = [ModeId(i) for i in range(spec)]
        else:
            modes = [ModeId(i, str(lab)) for i, lab in enumerate(spec)]
        return cls(modes, statistics, cutoff)

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, ModeSet):
            return NotImplemented
        return (
            self.statistics == other.statistics
            and self.cutoff == other.cutoff
            and [m.index for m in self.modes] == [m.index for m in other.modes]
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        names = ", ".join(str(m) for m in self.modes)
        return f"ModeSet([{names}], {self.statistics.value})"

    @property
    def fermionic(self) -> bool:
        return self.statistics is Statistics.FERMIONIC

    def resolve(self, ref: ModeRef) -> ModeId:
        if isinstance(ref, ModeId):
            mode = self._by_index.get(ref.index)
        elif isinstance(ref, str):
            mode = self._by_label.get(ref)
        elif isinstance(ref, int):
            mode = self._by_index.get(ref)
        else:
            raise DomainError(f"cannot interpret {ref!r} as a mode")
        if mode is None:
            raise DomainError(f"unknown mode {ref!r} for {self!r}")
        return mode

    def index_of(self, ref: ModeRef) -> int:
        return self.resolve(ref).index

    def position(self, ref: ModeRef) -> int:
        """Position of a mode in the ordering (0-based)."""
        return self._pos[self.resolve(ref).index]

    def vacuum(self) -> "FockState":
        return FockState(self, ())

    def local_dimension(self) -> int:
        return 2 if self.fermionic else self.cutoff + 1

    def dimension(self) -> int:
        return self.local_dimension() ** len(self.modes)

    def basis(self) -> list["FockState"]:
        """Every occupation pattern, first mode varying slowest."""
        idx = [m.index for m in self.modes]
        out = []
        for counts in itertools.product(range(self.local_dimension()), repeat=len(idx)):
            occ = tuple((i, c) for i, c in zip(idx, counts) if c)
            out.append(FockState(self, occ))
        return out


class FockState:
    """Canonical occupation pattern: sorted ``(mode_index, count)`` pairs, zeros omitted."""

    __slots__ = ("modeset", "occupation", "_hash")

    def __init__(self, modeset: ModeSet, occupation: tuple):
        self.modeset = modeset
        self.occupation = occupation
        self._hash = hash(occupation)

    @classmethod
    def from_counts(cls, modeset: ModeSet, counts: Mapping[ModeRef, int]) -> "FockState":
        occ = {}
        for ref, c in counts.items():
            c = int(c)
            if c < 0:
                raise DomainError("occupation counts must be non-negative")
            if modeset.fermionic and c > 1:
                raise DomainError("fermionic occupation is 0 or 1")
            if not modeset.fermionic and c > modeset.cutoff:
                raise ResourceError(f"occupation {c} exceeds bosonic cutoff {modeset.cutoff}")
            if c:
                occ[modeset.index_of(ref)] = c
        return cls(modeset, tuple(sorted(occ.items())))

    @property
    def statistics(self) -> Statistics:
        return self.modeset.statistics

    def count(self, ref: ModeRef) -> int:
        i = self.modeset.index_of(ref)
        for j, c in self.occupation:
            if j == i:
                return c
        return 0

    def counts(self) -> dict[int, int]:
        return dict(self.occupation)

    def particle_number(self) -> int:
        return sum(c for _, c in self.occupation)

    def is_vacuum(self) -> bool:
        return not self.occupation

    def __eq__(self, other):
        if not isinstance(other, FockState):
            return NotImplemented
        return self.occupation == other.occupation and self.modeset == other.modeset

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self.occupation:
            return "|V>"
        ms = self.modeset
        parts = []
        for i, c in self.occupation:
            name = str(ms._by_index[i])
            parts.append(name if (ms.fermionic or c == 1) else f"{name}^{c}")
        return "|" + ",".join(parts) + ">"


# -- single-operator action on basis states ---------------------------------


def _locate(state: FockState, index: int):
    occ = state.occupation
    keys = [i for i, _ in occ]
    pos = bisect.bisect_left(keys, index)
    present = pos < len(occ) and occ[pos][0] == index
    return pos, present


def apply_create(mode: ModeRef, state: FockState):
    """``b^dagger`` on a basis state; returns ``(factor, new_state)`` or ``None``."""
    ms = state.modeset
    index = ms.index_of(mode)
    occ = state.occupation
    pos, present = _locate(state, index)
    if ms.fermionic:
        if present:
            return None
        sign = -1 if pos % 2 else 1
        return sign, FockState(ms, occ[:pos] + ((index, 1),) + occ[pos:])
    n = occ[pos][1] if present else 0
    if n + 1 > ms.cutoff:
        raise ResourceError(f"bosonic occupation of mode {mode!r} would exceed cutoff {ms.cutoff}")
    rest = occ[pos + 1:] if present else occ[pos:]
    return math.sqrt(n + 1), FockState(ms, occ[:pos] + ((index, n + 1),) + rest)


def apply_annihilate(mode: ModeRef, state: FockState):
    """``b`` on a basis state; returns ``(factor, new_state)`` or ``None``."""
    ms = state.modeset
    index = ms.index_of(mode)
    occ = state.occupation
    pos, present = _locate(state, index)
    if not present:
        return None
    if ms.fermionic:
        sign = -1 if pos % 2 else 1
        return sign, FockState(ms, occ[:pos] + occ[pos + 1:])
    n = occ[pos][1]
    mid = ((index, n - 1),) if n > 1 else ()
    return math.sqrt(n), FockState(ms, occ[:pos] + mid + occ[pos + 1:])


_ACTIONS = {Kind.CREATE: apply_create, Kind.ANNIHILATE: apply_annihilate}


# -- kets --------------------------------------------------------------------


class Ket:
    """Sparse superposition of basis states of one ModeSet."""

    __slots__ = ("modeset", "terms")

    def __init__(self, modeset: ModeSet, terms: Mapping[FockState, complex] = None, prune: bool = True):
        clean = {}
        for s, a in (terms or {}).items():
            if s.modeset != modeset:
                raise DomainError("basis state belongs to a different ModeSet")
            a = complex(a)
            if prune and abs(a) < PRUNE_THRESHOLD:
                continue
            clean[s] = a
        self.modeset = modeset
        self.terms = MappingProxyType(clean)

    @classmethod
    def vacuum(cls, modeset: ModeSet) -> "Ket":
        return cls(modeset, {modeset.vacuum(): 1.0})

    @classmethod
    def zero(cls, modeset: ModeSet) -> "Ket":
        return cls(modeset)

    @classmethod
    def from_state(cls, state: FockState, amplitude: complex = 1.0) -> "Ket":
        return cls(state.modeset, {state: amplitude})

    def amplitude(self, state: FockState) -> complex:
        return self.terms.get(state, 0j)

    def states(self):
        return list(self.terms)

    def norm2(self) -> float:
        return sum(abs(a) ** 2 for a in self.terms.values())

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def normalized(self) -> "Ket":
        n = self.norm()
        if n == 0:
            raise DomainError("cannot normalize the zero ket")
        return self / n

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other):
        if not isinstance(other, Ket):
            return NotImplemented
        if other.modeset != self.modeset:
            raise DomainError("kets over different ModeSets")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        acc = dict(self.terms)
        for s, a in other.terms.items():
            acc[s] = acc.get(s, 0j) + a
        return Ket(self.modeset, acc)

    def __sub__(self, other):
        if not isinstance(other, Ket):
            return NotImplemented
        return self + (-1) * other

    def __neg__(self):
        return (-1) * self

    def __mul__(self, scalar):
        if isinstance(scalar, (Ket, OpString, OpSum)):
            return NotImplemented
        scalar = complex(scalar)
        return Ket(self.modeset, {s: scalar * a for s, a in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = [f"({a.real:+.6g}{a.imag:+.6g}j){s!r}" for s, a in self.terms.items()]
        return " + ".join(parts)


def create_ket(modeset: ModeSet, *refs: ModeRef, amplitude: complex = 1.0) -> Ket:
    """``amplitude * b_{r1}^dagger b_{r2}^dagger ... |V>`` (rightmost applied first)."""
    op = OpString(tuple((r, Kind.CREATE) for r in refs), amplitude)
    return apply_opstring(op, Ket.vacuum(modeset))


def inner(bra: Ket, ket: Ket) -> complex:
    """``<bra|ket>``, conjugate-linear in ``bra``."""
    if bra.modeset != ket.modeset:
        raise DomainError("inner product of kets over different ModeSets")
    small, large = (bra, ket) if len(bra) <= len(ket) else (ket, bra)
    total = 0j
    for s in small.terms:
        if s in large.terms:
            total += bra.terms[s].conjugate() * ket.terms[s]
    return total


# -- operators ---------------------------------------------------------------


@dataclass(frozen=True)
class OpString:
    """``scalar * o_1 o_2 ... o_k``; applied to a ket right to left."""

    factors: tuple = ()
    scalar: complex = 1.0

    def __post_init__(self):
        facs = tuple((m, Kind(k)) for m, k in self.factors)
        object.__setattr__(self, "factors", facs)
        object.__setattr__(self, "scalar", complex(self.scalar))

    def dagger(self) -> "OpString":
        flip = {Kind.CREATE: Kind.ANNIHILATE, Kind.ANNIHILATE: Kind.CREATE}
        return OpString(tuple((m, flip[k]) for m, k in reversed(self.factors)), self.scalar.conjugate())

    def __mul__(self, other):
        if isinstance(other, OpString):
            return OpString(self.factors + other.factors, self.scalar * other.scalar)
        if isinstance(other, OpSum):
            return OpSum(tuple(self * t for t in other.terms))
        if isinstance(other, Ket):
            return apply_opstring(self, other)
        return OpString(self.factors, self.scalar * complex(other))

    def __rmul__(self, other):
        return OpString(self.factors, self.scalar * complex(other))

    def __add__(self, other):
        return OpSum((self,)) + other

    def __sub__(self, other):
        return OpSum((self,)) + (-1) * other

    def __neg__(self):
        return (-1) * self

    def __matmul__(self, ket):
        return apply_opstring(self, ket)


@dataclass(frozen=True)
class OpSum:
    """Linear combination of OpStrings."""

    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def dagger(self) -> "OpSum":
        return OpSum(tuple(t.dagger() for t in self.terms))

    def __add__(self, other):
        if isinstance(other, OpString):
            return OpSum(self.terms + (other,))
        if isinstance(other, OpSum):
            return OpSum(self.terms + other.terms)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __neg__(self):
        return (-1) * self

    def __mul__(self, other):
        if isinstance(other, (OpString, OpSum)):
            rhs = other.terms if isinstance(other, OpSum) else (other,)
            return OpSum(tuple(a * b for a in self.terms for b in rhs))
        if isinstance(other, Ket):
            return apply(self, other)
        return OpSum(tuple(t * other for t in self.terms))

    def __rmul__(self, other):
        if isinstance(other, OpString):
            return OpSum(tuple(other * t for t in self.terms))
        return OpSum(tuple(complex(other) * t for t in self.terms))

    def __matmul__(self, ket):
        return apply(self, ket)


def create(mode: ModeRef) -> OpString:
    return OpString(((mode, Kind.CREATE),))


def annihilate(mode: ModeRef) -> OpString:
    return OpString(((mode, Kind.ANNIHILATE),))


def number(mode: ModeRef) -> OpString:
    return create(mode) * annihilate(mode)


def identity() -> OpString:
    return OpString()


def field_operator(mode_values: Mapping[ModeRef, complex]) -> OpSum:
    """``sum_n value_n * b_n``: a field operator evaluated at one point."""
    return OpSum(tuple(complex(v) * annihilate(m) for m, v in mode_values.items()))


def _apply_to_state(factors, scalar, state: FockState, acc: dict):
    amp = scalar
    for mode, kind in reversed(factors):
        res = _ACTIONS[kind](mode, state)
        if res is None:
            return
        f, state = res
        amp = amp * f
    acc[state] = acc.get(state, 0j) + amp


def apply_opstring(op: OpString, ket: Ket) -> Ket:
    ms = ket.modeset
    for m, _ in op.factors:
        ms.resolve(m)
    acc: dict = {}
    for state, a in ket.terms.items():
        _apply_to_state(op.factors, op.scalar * a, state, acc)
    return Ket(ms, acc)


def apply(op: Union[OpString, OpSum], ket: Ket) -> Ket:
    """Apply an OpString or OpSum to a ket."""
    if isinstance(op, OpString):
        return apply_opstring(op, ket)
    ms = ket.modeset
    acc: dict = {}
    for term in op.terms:
        for m, _ in term.factors:
            ms.resolve(m)
        for state, a in ket.terms.items():
            _apply_to_state(term.factors, term.scalar * a, state, acc)
    return Ket(ms, acc)


def interrogate(field: OpSum, state: Ket) -> complex:
    """``<V| field |state>`` for a field built purely from annihilators."""
    terms = field.terms if isinstance(field, OpSum) else (field,)
    for t in terms:
        if len(t.factors) != 1 or t.factors[0][1] is not Kind.ANNIHILATE:
            raise DomainError("interrogation field must be a sum of single annihilation operators")
    return inner(Ket.vacuum(state.modeset), apply(OpSum(terms), state))


def anticommutator_check(modeset: ModeSet, mode_a: ModeRef, mode_b: ModeRef, kind: str = "mixed") -> float:
    """Max deviation of an anticommutator from its canonical value over the full basis.

    ``kind``: ``"mixed"`` checks ``[b_a, b_b^dagger]_+ = delta_ab``; ``"create"``
    checks ``[b_a^dagger, b_b^dagger]_+ = 0``; ``"annihilate"`` checks
    ``[b_a, b_b]_+ = 0``.
    """
    if not modeset.fermionic:
        raise DomainError("anticommutator_check applies to fermionic mode sets")
    if len(modeset) > MAX_CHECK_MODES:
        raise ResourceError(f"basis too large: {len(modeset)} modes > {MAX_CHECK_MODES}")
    a = modeset.resolve(mode_a)
    b = modeset.resolve(mode_b)
    if kind == "mixed":
        x, y, delta = annihilate(a), create(b), (1 if a.index == b.index else 0)
    elif kind == "create":
        x, y, delta = create(a), create(b), 0
    elif kind == "annihilate":
        x, y, delta = annihilate(a), annihilate(b), 0
    else:
        raise DomainError(f"unknown anticommutator kind {kind!r}")
    xy, yx = x * y, y * x
    worst = 0.0
    for state in modeset.basis():
        acc: dict = {}
        _apply_to_state(xy.factors, 1, state, acc)
        _apply_to_state(yx.factors, 1, state, acc)
        if delta:
            acc[state] = acc.get(state, 0) - delta
        for v in acc.values():
            worst = max(worst, abs(v))
    return float(worst)


def reduced_density(ket: Ket, keep: Sequence[ModeRef]):
    """Reduced density matrix over the occupation patterns of ``keep``.

    The kept modes must precede every traced mode in the ordering, so the
    state factorizes without reordering signs.  Returns ``(labels, matrix)``
    where labels are the kept-sector FockStates (ordered as ``ModeSet.basis``
    restricted to the kept modes) and ``matrix`` is a nested list.
    """
    ms = ket.modeset
    kept = sorted({ms.index_of(r) for r in keep})
    order = [m.index for m in ms.modes]
    if kept != order[: len(kept)]:
        raise DomainError("kept modes must be the leading modes of the ordering")
    kept_set = set(kept)
    sub = ModeSet([ms.resolve(i) for i in kept], ms.statistics, ms.cutoff)
    labels = sub.basis()
    pos = {s.occupation: i for i, s in enumerate(labels)}
    columns: dict = {}
    for s, a in ket.terms.items():
        k = tuple(p for p in s.occupation if p[0] in kept_set)
        e = tuple(p for p in s.occupation if p[0] not in kept_set)
        columns.setdefault(e, np.zeros(len(labels), dtype=complex))[pos[k]] += a
    rho = np.zeros((len(labels), len(labels)), dtype=complex)
    for v in columns.values():
        rho += np.outer(v, v.conj())
    return labels, rho
