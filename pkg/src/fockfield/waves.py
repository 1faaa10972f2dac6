"""
c-number mode functions on a uniform 1-D grid.

Natural units (hbar = c = 1).  Slit patterns use Fraunhofer closed forms;
Weyl packets are energy-window superpositions evaluated by quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InvariantViolation

NORM_TOL = 1e-9


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    points: int

    def __post_init__(self):
        if self.points < 2:
            raise DomainError("a grid needs at least 2 points")
        if not self.x_max > self.x_min:
            raise DomainError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)

    @property
    def period(self) -> float:
        """Length of the grid viewed as one cell of a periodic lattice."""
        return self.points * self.dx

    def index_of(self, x: float) -> int:
        """Index of the grid point nearest ``x``; points off the grid are rejected."""
        half = 0.5 * self.dx
        if x < self.x_min - half or x > self.x_max + half:
            raise DomainError(f"position {x} lies outside the grid [{self.x_min}, {self.x_max}]")
        return int(np.clip(np.rint((x - self.x_min) / self.dx), 0, self.points - 1))


@dataclass(frozen=True, eq=False)
class WaveMode:
    """An L2-normalized complex mode function sampled on a grid."""

    grid: Grid1D
    values: np.ndarray
    quantum_numbers: Mapping = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.points,):
            raise DomainError(f"expected {self.grid.points} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        n2 = self.norm2()
        if abs(n2 - 1.0) > NORM_TOL:
            raise InvariantViolation("wave mode normalization", f"sum |v|^2 dx = {n2!r}")

    @classmethod
    def normalized(cls, grid: Grid1D, values, **quantum_numbers) -> "WaveMode":
        v = np.asarray(values, dtype=complex)
        n2 = np.sum(np.abs(v) ** 2) * grid.dx
        if n2 == 0:
            raise DomainError("cannot normalize an identically zero mode")
        return cls(grid, v / np.sqrt(n2), dict(quantum_numbers))

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def value_at(self, x: float) -> complex:
        return complex(self.values[self.grid.index_of(x)])


# -- slits -------------------------------------------------------------------


@dataclass(frozen=True)
class SlitGeometry:
    """Two identical slits of width ``slit_width`` a distance ``slit_separation`` apart."""

    slit_separation: float
    slit_width: float
    wavenumber: float
    screen_distance: float = 1.0e4

    def __post_init__(self):
        if not self.slit_separation > self.slit_width > 0:
            raise DomainError("slit geometry requires separation > width > 0")
        if self.wavenumber <= 0 or self.screen_distance <= 0:
            raise DomainError("wavenumber and screen distance must be positive")

    @property
    def far_field(self) -> bool:
        """Fraunhofer validity flag: screen far compared with the slit pair (p d^2 / L < 1)."""
        return self.wavenumber * self.slit_separation ** 2 / self.screen_distance < 1.0


def _sinc(u):
    return np.sinc(np.asarray(u) / np.pi)


def slit_amplitude(geom: SlitGeometry, k: int, sin_theta, slit: int = 0) -> np.ndarray:
    """Unnormalized far-field amplitude.

    ``k=2``: ``2 cos(p d s / 2) sinc(p a s / 2)``.  ``k=1``: ``sinc(p a s / 2)``,
    times the propagation phase ``exp(-i slit p d s / 2)`` of the open slit
    (``slit = +1`` or ``-1``; ``0`` centres the single slit).
    """
    s = np.asarray(sin_theta, dtype=float)
    env = _sinc(0.5 * geom.wavenumber * geom.slit_width * s)
    half = 0.5 * geom.wavenumber * geom.slit_separation * s
    if k == 2:
        return (2.0 * np.cos(half) * env).astype(complex)
    if k == 1:
        if slit not in (-1, 0, 1):
            raise DomainError("slit must be -1, 0 or +1")
        return env * np.exp(-1j * slit * half)
    raise DomainError(f"k must be 1 or 2, got {k}")


def _sin_theta(geom: SlitGeometry, grid: Grid1D, coordinate: str) -> np.ndarray:
    if coordinate == "angle":
        return np.sin(grid.x)
    if coordinate == "position":
        x = grid.x
        return x / np.hypot(x, geom.screen_distance)
    raise DomainError(f"coordinate must be 'angle' or 'position', got {coordinate!r}")


def slit_pattern(geom: SlitGeometry, k: int, grid: Grid1D, coordinate: str = "angle", slit: int = 0) -> WaveMode:
    """Normalized screen mode for ``k`` open slits on an angle or screen-position grid."""
    amp = slit_amplitude(geom, k, _sin_theta(geom, grid, coordinate), slit=slit)
    return WaveMode.normalized(grid, amp, k=k, slit=slit, coordinate=coordinate)


def fringe_zeros(geom: SlitGeometry, count: int = 1) -> np.ndarray:
    """Angles of the first ``count`` positive zeros of the two-slit cos factor."""
    s = (2 * np.arange(count) + 1) * np.pi / (geom.wavenumber * geom.slit_separation)
    if np.any(s > 1):
        raise DomainError("requested fringe zeros lie beyond 90 degrees")
    return np.arcsin(s)


def visibility(i_max: float, i_min: float) -> float:
    total = i_max + i_min
    if total == 0:
        return 0.0
    return float((i_max - i_min) / total)


# -- Weyl packets ------------------------------------------------------------


def group_velocity(energy: float, mass: float) -> float:
    """``dE/dp = p/E`` for the relativistic free dispersion."""
    return float(np.sqrt(energy ** 2 - mass ** 2) / energy)


@dataclass(frozen=True)
class WeylPacket:
    """Energy-window superposition of free plane waves.

    ``period`` selects the quadrature: ``None`` uses Gauss-Legendre nodes in
    energy; a float uses the momenta ``2 pi j / period`` that fall in the window
    (rectangle rule in momentum), which makes evolution on a periodic grid of
    that period exactly norm-preserving.
    """

    energy: float
    half_width: float
    mass: float = 0.0
    t0: float = 0.0
    direction: int = 1
    quadrature_points: int = 64
    period: float | None = None

    def __post_init__(self):
        if self.half_width <= 0:
            raise DomainError("energy half-width must be positive")
        if self.mass < 0:
            raise DomainError("mass must be non-negative")
        if not self.energy - self.half_width > self.mass:
            raise DomainError("energy window must lie above the mass (real momentum required)")
        if self.direction not in (1, -1):
            raise DomainError("direction must be +1 or -1")

    def nodes(self):
        """Quadrature nodes ``(E, p, weights)`` approximating the integral over dE'."""
        m2 = self.mass ** 2
        if self.period is None:
            if self.quadrature_points < 3:
                raise DomainError("Weyl quadrature needs at least 3 points")
            u, w = np.polynomial.legendre.leggauss(self.quadrature_points)
            e = self.energy + self.half_width * u
            weights = self.half_width * w
            p = np.sqrt(e ** 2 - m2)
        else:
            lo = np.sqrt((self.energy - self.half_width) ** 2 - m2)
            hi = np.sqrt((self.energy + self.half_width) ** 2 - m2)
            dp = 2 * np.pi / self.period
            j = np.arange(np.ceil(lo / dp), np.floor(hi / dp) + 1)
            if j.size < 3:
                raise DomainError("period too short: fewer than 3 momenta inside the window")
            p = j * dp
            e = np.sqrt(p ** 2 + m2)
            weights = (p / e) * dp
        return e, self.direction * p, weights


def _weyl_raw(packet: WeylPacket, x, t):
    e, p, w = packet.nodes()
    x = np.asarray(x, dtype=float)
    phase = np.multiply.outer(x, p) - e * (t - packet.t0)
    return np.exp(1j * phase) @ w


def weyl_normalization(packet: WeylPacket, grid: Grid1D) -> float:
    """Constant making the packet unit-norm on ``grid`` at ``t = t0``."""
    raw = _weyl_raw(packet, grid.x, packet.t0)
    return float(1.0 / np.sqrt(np.sum(np.abs(raw) ** 2) * grid.dx))


def weyl_evaluate(packet: WeylPacket, x, t: float, grid: Grid1D | None = None):
    """Packet value at ``x`` and time ``t``.

    ``x`` may be a Grid1D (evaluated on its points and normalized on it) or
    positions; with positions, ``grid`` fixes the normalization, and without
    it the bare integral is returned.
    """
    if isinstance(x, Grid1D):
        grid, x = x, x.x
    norm = weyl_normalization(packet, grid) if grid is not None else 1.0
    out = norm * _weyl_raw(packet, x, t)
    return complex(out) if np.ndim(out) == 0 else out


def weyl_snapshot(packet: WeylPacket, grid: Grid1D, t: float) -> np.ndarray:
    return weyl_evaluate(packet, grid, t)


def weyl_peak(packet: WeylPacket, grid: Grid1D, t: float) -> float:
    """Position of the modulus maximum, refined between neighbouring grid points."""
    amp = np.abs(_weyl_raw(packet, grid.x, t))
    i = int(np.argmax(amp))
    x = grid.x
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, grid.points - 1)]
    res = minimize_scalar(
        lambda s: -abs(_weyl_raw(packet, s, t)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


# -- bases, completeness and overlaps ----------------------------------------


def plane_wave_basis(grid: Grid1D, count: int | None = None) -> list[WaveMode]:
    """Discrete Fourier modes; the full set (``count = points``) is complete."""
    n = grid.points
    count = n if count is None else count
    j = np.arange(n)
    modes = []
    for k in range(count):
        vals = np.exp(2j * np.pi * k * j / n) / np.sqrt(n * grid.dx)
        modes.append(WaveMode(grid, vals, {"n": k}))
    return modes


def _shared_grid(modes: Sequence[WaveMode]) -> Grid1D:
    if not modes:
        raise DomainError("empty list of modes")
    grid = modes[0].grid
    for m in modes[1:]:
        if m.grid != grid:
            raise DomainError("modes live on different grids")
    return grid


def completeness_check(modes: Sequence[WaveMode]) -> float:
    """Max entry deviation of ``sum_n conj(psi_n(x)) psi_n(y)`` from ``delta_xy / dx``."""
    grid = _shared_grid(modes)
    if len(modes) > grid.points:
        raise DomainError("more modes than grid points")
    psi = np.array([m.values for m in modes])
    kernel = psi.conj().T @ psi
    target = np.eye(grid.points) / grid.dx
    return float(np.max(np.abs(kernel - target)))


def gram_matrix(modes: Sequence[WaveMode]) -> np.ndarray:
    grid = _shared_grid(modes)
    psi = np.array([m.values for m in modes])
    return psi.conj() @ psi.T * grid.dx


def _require_orthonormal(modes, name, tol):
    g = gram_matrix(modes)
    dev = np.abs(g - np.eye(len(modes)))
    if np.max(dev) > tol:
        i, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        raise DomainError(f"{name} is not orthonormal: pair ({i}, {j}) has <i|j> = {g[i, j]:.3g}")


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    """``C[alpha, beta] = <psi_alpha | phi_beta>`` between two orthonormal bases."""

    C: np.ndarray

    def row_norms(self) -> np.ndarray:
        return np.sum(np.abs(self.C) ** 2, axis=1)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.C)))


def overlap_matrix(basis_a: Sequence[WaveMode], basis_b: Sequence[WaveMode], tol: float = 1e-6) -> OverlapMatrix:
    grid = _shared_grid(list(basis_a) + list(basis_b))
    _require_orthonormal(basis_a, "basis A", tol)
    _require_orthonormal(basis_b, "basis B", tol)
    a = np.array([m.values for m in basis_a])
    b = np.array([m.values for m in basis_b])
    c = a.conj() @ b.T * grid.dx
    worst = float(np.max(np.abs(c)))
    if worst > 1 + 1e-9:
        raise InvariantViolation("overlap magnitude bound |C| <= 1", f"max |C| = {worst!r}")
    return OverlapMatrix(c)
