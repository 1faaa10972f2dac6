"""
Brute-force reference computations.

Everything here is built from explicit dense matrices, closed forms or plain
loops, independent of the sparse/primary code paths: fermionic operators come
from the Jordan-Wigner Kronecker construction, environments are traced as
explicit tensor products, and integrals use fine composite rules.  Only
domain types (ModeSet, FockState, Ket, DensityMatrix...) are shared.

``run_oracle_suite`` compares each registered primary result to its oracle.
"""

from __future__ import annotations

import fnmatch
import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .errors import DomainError, ResourceError
from .fock import FockState, Ket, Kind, ModeSet, OpSum

MAX_DENSE_DIM = 4096

# -- dense Fock matrices -------------------------------------------------------


def _local_ops(ms: ModeSet):
    d = ms.local_dimension()
    a = np.diag(np.sqrt(np.arange(1, d)), k=1).astype(complex)
    z = np.diag([(-1.0) ** n for n in range(d)]).astype(complex)
    return a, z, np.eye(d, dtype=complex)


def dense_mode_operator(ms: ModeSet, ref, kind) -> np.ndarray:
    """Annihilator (or creator) of one mode via Jordan-Wigner strings."""
    if ms.dimension() > MAX_DENSE_DIM:
        raise ResourceError(f"dense dimension {ms.dimension()} exceeds {MAX_DENSE_DIM}")
    a, z, eye = _local_ops(ms)
    pos = ms.position(ref)
    string = z if ms.fermionic else eye
    factors = [string] * pos + [a] + [eye] * (len(ms) - pos - 1)
    op = reduce(np.kron, factors)
    return op.conj().T if Kind(kind) is Kind.CREATE else op


def dense_oracle(ms: ModeSet, op) -> np.ndarray:
    """Explicit matrix of an OpString/OpSum over the enumerated Fock basis.

    Basis order: occupation tuples with the first mode varying slowest
    (``basis_index``).  Bosonic matrices are truncated at the cutoff.
    """
    dim = ms.dimension()
    if dim > MAX_DENSE_DIM:
        raise ResourceError(f"dense dimension {dim} exceeds {MAX_DENSE_DIM}")
    terms = op.terms if isinstance(op, OpSum) else (op,)
    total = np.zeros((dim, dim), dtype=complex)
    cache = {}
    for t in terms:
        m = np.eye(dim, dtype=complex)
        for ref, kind in t.factors:
            key = (ms.index_of(ref), kind)
            if key not in cache:
                cache[key] = dense_mode_operator(ms, ref, kind)
            m = m @ cache[key]
        total += t.scalar * m
    return total


def basis_index(state: FockState) -> int:
    ms = state.modeset
    d = ms.local_dimension()
    counts = dict(state.occupation)
    idx = 0
    for mode in ms.modes:
        idx = idx * d + counts.get(mode.index, 0)
    return idx


def to_vector(ket: Ket) -> np.ndarray:
    v = np.zeros(ket.modeset.dimension(), dtype=complex)
    for s, a in ket.terms.items():
        v[basis_index(s)] += a
    return v


def vector_basis_state(ms: ModeSet, index: int) -> FockState:
    d = ms.local_dimension()
    counts = []
    for _ in range(len(ms)):
        counts.append(index % d)
        index //= d
    counts.reverse()
    occ = tuple((m.index, c) for m, c in zip(ms.modes, counts) if c)
    return FockState(ms, occ)


# -- two-arm spin experiment ----------------------------------------------------


def _epr_dense():
    ms = ModeSet.build(["a+", "a-", "b+", "b-"])
    ops = {m: dense_mode_operator(ms, m, "annihilate") for m in ("a+", "a-", "b+", "b-")}
    vac = np.zeros(16, dtype=complex)
    vac[0] = 1
    psi = (ops["a+"].conj().T @ ops["b-"].conj().T - ops["a-"].conj().T @ ops["b+"].conj().T) @ vac / np.sqrt(2)
    return ops, psi


def dense_bell_correlation(alpha: float, beta: float) -> float:
    """``<N1(s) N2(s')>`` joint number-operator expectations with rotated modes."""
    ops, psi = _epr_dense()

    def rotated(arm, theta):
        up = math.cos(theta / 2) * ops[f"{arm}+"] + math.sin(theta / 2) * ops[f"{arm}-"]
        down = -math.sin(theta / 2) * ops[f"{arm}+"] + math.cos(theta / 2) * ops[f"{arm}-"]
        return {"+": up, "-": down}

    r1, r2 = rotated("a", alpha), rotated("b", beta)
    e = 0.0
    for s1 in "+-":
        n1 = r1[s1].conj().T @ r1[s1]
        for s2 in "+-":
            n2 = r2[s2].conj().T @ r2[s2]
            p = np.vdot(psi, n1 @ n2 @ psi).real
            e += p if s1 == s2 else -p
    return e


def dense_singlet_arm1() -> np.ndarray:
    """Arm-1 reduced density over (up, down) from the 16-dim singlet vector."""
    _, psi = _epr_dense()
    m = psi.reshape(4, 4)  # arm-1 occupation (a+, a-) x arm-2 occupation
    rho = m @ m.conj().T
    up, down = 2, 1  # occupations (1,0) and (0,1)
    return rho[np.ix_([up, down], [up, down])]


def dense_epr_table(alpha, beta, flt=None) -> dict:
    """Coincidence probabilities via number operators on the (filtered) dense state."""
    ops, psi = _epr_dense()
    if flt == "projection":
        psi = ops["a+"].conj().T @ ops["a+"] @ psi
    elif flt == "spin_flip":
        psi = (ops["a+"].conj().T @ ops["a-"] + ops["a-"].conj().T @ ops["a+"]) @ psi
    c1, s1 = math.cos(alpha / 2), math.sin(alpha / 2)
    c2, s2 = math.cos(beta / 2), math.sin(beta / 2)
    r1 = {"+": c1 * ops["a+"] + s1 * ops["a-"], "-": -s1 * ops["a+"] + c1 * ops["a-"]}
    r2 = {"+": c2 * ops["b+"] + s2 * ops["b-"], "-": -s2 * ops["b+"] + c2 * ops["b-"]}
    raw = {}
    for x in "+-":
        for y in "+-":
            n = r1[x].conj().T @ r1[x] @ r2[y].conj().T @ r2[y]
            raw[(x, y)] = np.vdot(psi, n @ psi).real
    tot = sum(raw.values())
    return {k: v / tot for k, v in raw.items()}


# -- decoherence ----------------------------------------------------------------


def dense_pointer_density(system_rho: np.ndarray, overlaps, efficiencies=(1.0, 1.0)) -> np.ndarray:
    """Pointer matrix from explicit ``pointer (x) N environment qubits`` vectors.

    Branch 1 leaves every qubit in ``(1, 0)``; branch 2 puts qubit ``m`` in
    ``(conj(c_m), sqrt(1-|c_m|^2))`` so ``<e2_m|e1_m> = c_m``.
    """
    overlaps = np.asarray(overlaps, dtype=complex)
    n = overlaps.size
    if 2 * 2 ** n > 2 * MAX_DENSE_DIM:
        raise ResourceError("environment too large for the dense oracle")
    e1 = reduce(np.kron, [np.array([1, 0], dtype=complex)] * n, np.ones(1, dtype=complex))
    e2 = reduce(np.kron, [np.array([np.conj(c), np.sqrt(1 - abs(c) ** 2)]) for c in overlaps],
                np.ones(1, dtype=complex))
    branch = [np.kron(np.array([1, 0]), e1) * np.sqrt(efficiencies[0]),
              np.kron(np.array([0, 1]), e2) * np.sqrt(efficiencies[1])]
    dim_env = 2 ** n
    full = np.zeros((2 * dim_env, 2 * dim_env), dtype=complex)
    for i in range(2):
        for j in range(2):
            full += system_rho[i, j] * np.outer(branch[i], branch[j].conj())
    t = full.reshape(2, dim_env, 2, dim_env)
    return np.einsum("iaja->ij", t)


def side_chain_environment(rho: np.ndarray, j0: int) -> np.ndarray:
    """Reference for branch truncation: channel ``j0`` flips a private environment qubit, then trace it out."""
    n = rho.shape[0]
    flag = [1 if j == j0 else 0 for j in range(n)]
    big = np.zeros((n, 2, n, 2), dtype=complex)
    for j in range(n):
        for k in range(n):
            big[j, flag[j], k, flag[k]] = rho[j, k]
    out = np.zeros((n, n), dtype=complex)
    for a in range(2):
        out += big[:, a, :, a]
    return out


# -- waves -----------------------------------------------------------------------


def slit_zero_bracketed(p: float, d: float, a: float) -> float:
    """First zero of ``cos(p d sin t / 2) sinc(p a sin t / 2)`` by bracketing root search."""

    def amp(t):
        s = math.sin(t)
        x = 0.5 * p * a * s
        env = 1.0 if x == 0 else math.sin(x) / x
        return math.cos(0.5 * p * d * s) * env

    # bracket the first sign change on a fine scan
    grid = np.linspace(1e-9, math.pi / 2, 200001)
    prev_t, prev_v = grid[0], amp(grid[0])
    for t in grid[1:]:
        v = amp(t)
        if prev_v * v < 0:
            return brentq(amp, prev_t, t, xtol=1e-15)
        prev_t, prev_v = t, v
    raise DomainError("no zero found")


def weyl_peak_fd(energy, half_width, mass, t, x_lo, x_hi, nx=1201, ne=4001) -> float:
    """Peak of ``|int exp(i(p x - E t)) dE|`` from a Simpson rule and finite-difference refinement."""
    e = np.linspace(energy - half_width, energy + half_width, ne)
    p = np.sqrt(e ** 2 - mass ** 2)
    x = np.linspace(x_lo, x_hi, nx)
    integrand = np.exp(1j * (np.outer(x, p) - e * t))
    w = simpson(integrand, x=e, axis=1)
    f = np.abs(w) ** 2
    i = int(np.argmax(f))
    if i == 0 or i == nx - 1:
        raise DomainError("peak at the edge of the search window")
    h = x[1] - x[0]
    d1 = (f[i + 1] - f[i - 1]) / (2 * h)
    d2 = (f[i + 1] - 2 * f[i] + f[i - 1]) / h ** 2
    return float(x[i] - d1 / d2)


def massless_weyl_closed_form(energy, half_width, x, t):
    """``int_{E-D}^{E+D} exp(i E'(x - t)) dE' = 2 D exp(i E s) sinc(D s)``, ``s = x - t``."""
    s = np.asarray(x, dtype=float) - t
    return 2 * half_width * np.exp(1j * energy * s) * np.sinc(half_width * s / np.pi)


# -- density matrices ------------------------------------------------------------


def boltzmann_two_level(delta_over_t: float) -> tuple:
    r = math.exp(-delta_over_t)
    return 1 / (1 + r), r / (1 + r)


def entropy_by_loop(weights) -> float:
    s = 0.0
    for w in weights:
        if w > 0:
            s -= w * math.log(w)
    return s


def thermal_length_si(kelvin: float, mass_u: float) -> float:
    """``h / sqrt(2 pi m k_B T)`` in nm, SI constants."""
    h = 6.62607015e-34
    kb = 1.380649e-23
    u = 1.66053906660e-27
    return h / math.sqrt(2 * math.pi * mass_u * u * kb * kelvin) * 1e9


def final_state_by_loops(T: np.ndarray, sigma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    nn, nl, npol, nk = T.shape
    dim = nn * nl
    rho = np.zeros((dim, dim), dtype=complex)
    for n1 in range(nn):
        for l1 in range(nl):
            for n2 in range(nn):
                for l2 in range(nl):
                    acc = 0j
                    for p1 in range(npol):
                        for k1 in range(nk):
                            for p2 in range(npol):
                                for k2 in range(nk):
                                    acc += (T[n1, l1, p1, k1] * sigma[p1, p2] * beta[k1, k2]
                                            * np.conj(T[n2, l2, p2, k2]))
                    rho[n1 * nl + l1, n2 * nl + l2] = acc
    return rho / np.trace(rho).real


# -- suite --------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleReport:
    case_id: str
    primary: float
    oracle: float
    abs_deviation: float
    rel_deviation: float
    tolerance: float
    passed: bool
    skipped: bool = False


@dataclass(frozen=True)
class OracleCase:
    case_id: str
    tolerance: float
    compute: Callable[[], tuple]
    exact: bool = False


def _worst(primary, oracle):
    p = np.atleast_1d(np.asarray(primary, dtype=complex))
    o = np.atleast_1d(np.asarray(oracle, dtype=complex))
    dev = np.abs(p - o)
    i = int(np.argmax(dev))
    pv, ov = p[i], o[i]
    pv = pv.real if pv.imag == 0 else abs(pv)
    ov = ov.real if ov.imag == 0 else abs(ov)
    return float(pv), float(ov), float(dev[i])


def _case_bell_grid():
    from .detectors import bell_correlation, singlet_state

    s = singlet_state()
    angles = np.linspace(0, np.pi, 7)
    prim = [bell_correlation(s, a, b) for a in angles for b in angles]
    orc = [dense_bell_correlation(a, b) for a in angles for b in angles]
    return prim, orc


def _case_bell_closed_form():
    from .detectors import bell_correlation, singlet_state

    s = singlet_state()
    angles = np.linspace(0, np.pi, 7)
    prim = [bell_correlation(s, a, b) for a in angles for b in angles]
    return prim, [-math.cos(a - b) for a in angles for b in angles]


def _case_chsh():
    from .detectors import chsh, singlet_state

    a1, a2, b1, b2 = 0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4
    e = dense_bell_correlation
    return chsh(singlet_state()), abs(e(a1, b1) - e(a1, b2) + e(a2, b1) + e(a2, b2))


def _case_epr_tables():
    from .detectors import BellConfig, FilterSpec, epr_coincidence_table, singlet_state

    s = singlet_state()
    prim, orc = [], []
    for flt in (None, "projection", "spin_flip"):
        t = epr_coincidence_table(s, FilterSpec(flt) if flt else None, BellConfig())
        d = dense_epr_table(0.0, 0.0, flt)
        for k in d:
            prim.append(t[k])
            orc.append(d[k])
    return prim, orc


def _case_singlet_trace():
    from .density import partial_trace
    from .detectors import epr_density, singlet_state

    r = partial_trace(epr_density(singlet_state()), keep=0).rho
    return r.ravel(), dense_singlet_arm1().ravel()


def _case_decoherence(n):
    def run():
        from .decoherence import EnvironmentModel, exact_pointer_density, measure_with_chain
        from .density import DensityMatrix

        rng = np.random.default_rng(1000 + n)
        ov = rng.uniform(0.3, 0.95, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        sys = DensityMatrix.pure([1, 1])
        env = EnvironmentModel(n, overlaps=tuple(ov))
        scalar = measure_with_chain(sys, env).pointer
        fock = exact_pointer_density(sys, env).pointer
        dense = dense_pointer_density(sys.rho, ov)
        return np.concatenate([scalar.ravel(), fock.ravel()]), np.concatenate([dense.ravel(), dense.ravel()])

    return run


def _case_truncate():
    from .decoherence import branch_truncate
    from .density import DensityMatrix

    rho = DensityMatrix.pure([1, 1j, -1])
    return branch_truncate(rho, 2).rho.ravel(), side_chain_environment(rho.rho, 2).ravel()


def _case_weyl_massive():
    from .waves import Grid1D, WeylPacket, weyl_peak

    pk = WeylPacket(1.25, 0.1, mass=1.0)
    grid = Grid1D(-30, 30, 601)
    prim = (weyl_peak(pk, grid, 10.0) - weyl_peak(pk, grid, 0.0)) / 10.0
    orc = (weyl_peak_fd(1.25, 0.1, 1.0, 10.0, 0, 12) - weyl_peak_fd(1.25, 0.1, 1.0, 0.0, -6, 6)) / 10.0
    return prim, orc


def _case_weyl_massless():
    from .waves import Grid1D, WeylPacket, weyl_evaluate

    pk = WeylPacket(2.0, 0.5, mass=0.0)
    grid = Grid1D(-20, 40, 241)
    prim = weyl_evaluate(pk, grid.x, 7.0)
    return prim, massless_weyl_closed_form(2.0, 0.5, grid.x, 7.0)


def _case_slit_zero():
    from .waves import SlitGeometry, fringe_zeros

    g = SlitGeometry(slit_separation=20.0, slit_width=4.0, wavenumber=3.0)
    return float(fringe_zeros(g)[0]), slit_zero_bracketed(3.0, 20.0, 4.0)


def _case_boltzmann():
    from .density import ThermalConfig, thermal_density

    t = 0.7
    r = thermal_density(ThermalConfig(t, [0.0, t * math.log(2)]))
    return r.diagonal(), boltzmann_two_level(math.log(2))


def _case_entropy():
    from .density import DensityMatrix, boltzmann_entropy

    return boltzmann_entropy(DensityMatrix.mixture([2, 1])), entropy_by_loop([2 / 3, 1 / 3])


def _case_argon():
    from .density import argon_at

    return argon_at(300.0).length_nm, thermal_length_si(300.0, 39.948)


def _case_cat():
    from .cat import TransitionModel, final_state_density
    from .density import DensityMatrix

    rng = np.random.default_rng(7)
    T = rng.normal(size=(2, 2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2, 2))
    sigma = DensityMatrix.pure([1, 1j])
    beta = DensityMatrix.mixture([0.3, 0.7])
    prim = final_state_density(TransitionModel(T), sigma, beta).rho
    return prim.ravel(), final_state_by_loops(T, sigma.rho, beta.rho).ravel()


def _case_fock_dense():
    from .fock import annihilate, apply, create

    ms = ModeSet.build(4)
    op = create(0) * annihilate(2) + 0.5j * create(3) * create(1) * annihilate(1) + annihilate(3)
    mat = dense_oracle(ms, op)
    prim, orc = [], []
    for s in ms.basis():
        prim.append(to_vector(apply(op, Ket.from_state(s))))
        orc.append(mat[:, basis_index(s)])
    return np.concatenate(prim), np.concatenate(orc)


def _case_annihilate_sign():
    from .fock import apply_annihilate

    ms = ModeSet.build(2)
    st = FockState.from_counts(ms, {0: 1, 1: 1})
    f, _ = apply_annihilate(1, st)
    mat = dense_mode_operator(ms, 1, "annihilate")
    return float(f), mat[basis_index(FockState.from_counts(ms, {0: 1})), basis_index(st)].real


def _case_decay():
    from .decoherence import environment_overlap_product, EnvironmentModel

    return environment_overlap_product(EnvironmentModel(100, 0.9)).magnitude, 0.9 ** 100


CASES: list[OracleCase] = [
    OracleCase("fock.annihilate_sign", 0.0, _case_annihilate_sign, exact=True),
    OracleCase("fock.dense_agreement", 1e-12, _case_fock_dense),
    OracleCase("epr.tables", 1e-9, _case_epr_tables),
    OracleCase("bell.E_grid", 1e-9, _case_bell_grid),
    OracleCase("bell.E_closed_form", 1e-9, _case_bell_closed_form),
    OracleCase("bell.chsh", 1e-9, _case_chsh),
    OracleCase("singlet.partial_trace", 1e-12, _case_singlet_trace),
    *[OracleCase(f"decohere.exact_trace_N{n:02d}", 1e-10, _case_decoherence(n)) for n in range(1, 11)],
    OracleCase("decohere.c0.9_N100", 1e-15, _case_decay),
    OracleCase("decohere.branch_truncate", 1e-14, _case_truncate),
    OracleCase("weyl.peak_velocity_m1", 0.006, _case_weyl_massive),
    OracleCase("weyl.massless_closed_form", 1e-9, _case_weyl_massless),
    OracleCase("slit.first_fringe_zero", 1e-12, _case_slit_zero),
    OracleCase("thermal.boltzmann_ratio", 1e-14, _case_boltzmann),
    OracleCase("thermal.entropy_two_thirds", 1e-14, _case_entropy),
    OracleCase("thermal.argon_length_nm", 1e-6, _case_argon),
    OracleCase("cat.final_state_contraction", 1e-12, _case_cat),
]


def case_ids() -> list[str]:
    return sorted(c.case_id for c in CASES)


def run_oracle_suite(pattern: str = "*", tolerance_override: float | None = None) -> list[OracleReport]:
    """Run every registered case whose id matches ``pattern`` (fnmatch syntax).

    A literal id that matches nothing is reported as skipped; a wildcard
    pattern that matches nothing yields an empty list.
    """
    chosen = sorted((c for c in CASES if fnmatch.fnmatchcase(c.case_id, pattern)), key=lambda c: c.case_id)
    if not chosen:
        if any(ch in pattern for ch in "*?["):
            return []
        return [OracleReport(pattern, math.nan, math.nan, math.nan, math.nan, math.nan, False, skipped=True)]
    reports = []
    for case in chosen:
        prim, orc = case.compute()
        pv, ov, dev = _worst(prim, orc)
        tol = case.tolerance if tolerance_override is None else tolerance_override
        rel = dev / abs(ov) if ov != 0 else (0.0 if dev == 0 else math.inf)
        reports.append(OracleReport(case.case_id, pv, ov, dev, rel, tol, dev <= tol))
    return reports


def format_reports(reports) -> str:
    lines = [f"{'case':34s} {'primary':>22s} {'oracle':>22s} {'abs dev':>10s} {'tol':>8s}  result"]
    for r in reports:
        status = "SKIP" if r.skipped else ("PASS" if r.passed else "FAIL")
        lines.append(f"{r.case_id:34s} {r.primary:22.15g} {r.oracle:22.15g} {r.abs_deviation:10.2e} "
                     f"{r.tolerance:8.1e}  {status}")
    return "\n".join(lines)
