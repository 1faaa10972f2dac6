"""Acceptance criteria, one check per criterion.

Run with ``pytest tests/test_acceptance.py`` (summary lines appear in the
terminal report) or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import itertools
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from fockfield.cat import TransitionModel, cat_verdict, class_block, final_state_density
from fockfield.cli import main as cli_main
from fockfield.cli import which_path_setup, SCHEMAS
from fockfield.decoherence import (
    EnvironmentModel,
    decay_curve,
    entropy_increase_check,
    environment_overlap_product,
    exact_pointer_density,
    measure_with_chain,
)
from fockfield.density import DensityMatrix, probability_density
from fockfield.detectors import (
    BellConfig,
    DetectorSpec,
    FilterSpec,
    bell_correlation,
    chsh,
    coincidence_amplitude,
    compton_channel,
    epr_coincidence_table,
    fringe_visibility,
    screen_intensity,
    singlet_state,
)
from fockfield.fock import ModeSet, anticommutator_check, create_ket, field_operator, interrogate
from fockfield.oracle import dense_epr_table, dense_pointer_density
from fockfield.waves import Grid1D, WaveMode, WeylPacket, fringe_zeros, plane_wave_basis, weyl_peak, weyl_snapshot

RESULTS: list[tuple[int, str, bool, str]] = []


def c1_algebra():
    t0 = time.perf_counter()
    worst, checks = 0.0, 0
    for n in range(1, 11):
        ms = ModeSet.build(n)
        for a, b in itertools.product(range(n), repeat=2):
            worst = max(worst, anticommutator_check(ms, a, b, "mixed"), anticommutator_check(ms, a, b, "create"))
            checks += 2
    dt = time.perf_counter() - t0
    return worst == 0 and dt < 10, f"{checks} anticommutators on 1..10 modes, max deviation {worst}, {dt:.2f} s"


def c2_zero_coincidence():
    rng = np.random.default_rng(2024)
    g = Grid1D(-1, 1, 31)
    cases, nonzero = 0, 0
    for n in range(2, 6):
        ms = ModeSet.build(n)
        modes = {m: WaveMode.normalized(g, rng.normal(size=31) + 1j * rng.normal(size=31)) for m in range(n)}
        eta = {m: complex(rng.uniform(0.2, 1)) for m in range(n)}
        for m in range(n):
            ket = create_ket(ms, m)
            for xa, xb in itertools.product(g.x, repeat=2):
                amp = coincidence_amplitude(DetectorSpec(xa, tuple(range(n)), eta),
                                            DetectorSpec(xb, tuple(range(n)), eta), ket, modes)
                cases += 1
                nonzero += amp != 0j
    return cases >= 10_000 and nonzero == 0, f"{cases} one-particle cases, {nonzero} nonzero amplitudes"


def c3_interrogation():
    g = Grid1D(0, 1, 64)
    basis = plane_wave_basis(g, 6)
    energies = np.linspace(0.5, 3.0, 6)
    ms = ModeSet.build(6)
    worst = 0.0
    for t in (0.0, 0.37, 2.5):
        psi = [b.values * np.exp(-1j * e * t) for b, e in zip(basis, energies)]
        for i, _ in enumerate(g.x):
            field = field_operator({n: psi[n][i] for n in range(6)})
            for n in range(6):
                worst = max(worst, abs(interrogate(field, create_ket(ms, n)) - psi[n][i]))
    return worst <= 1e-12, f"max |<V|Psi|b_n^dagger V> - psi_n| = {worst:.2e} over 64 points x 6 modes x 3 times"


def c4_which_path():
    geom, grid, modes, state = which_path_setup(dict(SCHEMAS["which_path"]))
    before = screen_intensity(state, modes)
    after = screen_intensity(compton_channel(state, 0.0, {"t": modes["t"]}, {"o": modes["o"]}, "r"), modes)
    one = modes["o"].intensity()
    zeros = fringe_zeros(geom, 4)
    # neighbouring two-slit maxima sit halfway between zeros (first one at the centre)
    maxima = np.r_[0.0, 0.5 * (zeros[:-1] + zeros[1:])]
    dev = max(abs(fringe_visibility(after, grid, mx, z) - fringe_visibility(one, grid, mx, z))
              for mx, z in zip(maxima, zeros))
    v0 = fringe_visibility(before, grid, 0.0, float(zeros[0]))
    return dev <= 1e-6 and v0 > 0.99, f"after-channel vs one-slit visibility dev {dev:.1e}; before V = {v0:.6f}"


def c5_epr_tables():
    s = singlet_state()
    worst = 0.0
    none = epr_coincidence_table(s)
    target = {("+", "-"): 0.5, ("-", "+"): 0.5, ("+", "+"): 0.0, ("-", "-"): 0.0}
    worst = max(abs(none[k] - v) for k, v in target.items())
    f = epr_coincidence_table(s, FilterSpec("projection"))
    worst = max(worst, abs(f[("+", "-")] - 1), *(abs(f[k]) for k in target if k != ("+", "-")))
    t = epr_coincidence_table(s, FilterSpec("spin_flip"))
    worst = max(worst, abs(t[("+", "-")]), abs(t[("-", "+")]))
    odev = 0.0
    for flt, table in ((None, none), ("projection", f), ("spin_flip", t)):
        d = dense_epr_table(0.0, 0.0, flt)
        odev = max(odev, *(abs(table[k] - d[k]) for k in d))
    return max(worst, odev) <= 1e-9, f"max table error {worst:.1e}, max dense-oracle deviation {odev:.1e}"


def c6_bell():
    t0 = time.perf_counter()
    s = singlet_state()
    ang = np.linspace(0, np.pi, 19)
    worst = max(abs(bell_correlation(s, a, b) + np.cos(a - b)) for a in ang for b in ang)
    S = chsh(s, BellConfig())
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and abs(S - 2 * np.sqrt(2)) <= 1e-9 and dt < 5
    return ok, f"19x19 max |E + cos| = {worst:.1e}, S = {S:.10f}, {dt:.2f} s"


def c7_weyl():
    n = 2048
    dx = 400 / n
    g = Grid1D(-200, 200 - dx, n)
    heavy = WeylPacket(1.25, 0.1, mass=1.0, period=g.period)
    light = WeylPacket(2.0, 0.1, mass=0.0, period=g.period)
    v1 = (weyl_peak(heavy, g, 10.0) - weyl_peak(heavy, g, 0.0)) / 10.0
    v0 = (weyl_peak(light, g, 10.0) - weyl_peak(light, g, 0.0)) / 10.0
    norms = [np.sum(np.abs(weyl_snapshot(heavy, g, t)) ** 2) * g.dx for t in np.linspace(0, 100, 11)]
    drift = float(np.max(np.abs(np.array(norms) - norms[0])))
    rel = abs(v1 - 0.6) / 0.6
    ok = rel <= 0.03 and abs(v0 - 1) <= 1e-3 and drift <= 1e-6
    return ok, f"v(m=1) = {v1:.5f} ({100 * rel:.2f}% from p/E), v(m=0) = {v0:.9f}, norm drift {drift:.1e}"


def c8_decoherence():
    rng = np.random.default_rng(8)
    worst = 0.0
    sys_rho = DensityMatrix.pure([1, 1])
    for n in range(1, 11):
        ov = tuple(rng.uniform(0.2, 0.95, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n)))
        env = EnvironmentModel(n, overlaps=ov)
        scalar = measure_with_chain(sys_rho, env).pointer[0, 1]
        exact = exact_pointer_density(sys_rho, env).pointer[0, 1]
        dense = dense_pointer_density(sys_rho.rho, ov)[0, 1]
        worst = max(worst, abs(scalar - exact), abs(scalar - dense))
    bounds = [b for _, _, b in decay_curve(0.9, 100)]
    mono = all(b2 < b1 for b1, b2 in zip(bounds, bounds[1:]))
    v = environment_overlap_product(EnvironmentModel(100, 0.9)).magnitude
    return worst <= 1e-10 and mono and v <= 2.66e-5, f"scalar vs exact max dev {worst:.1e}; monotone {mono}; c=0.9,N=100 -> {v:.4e}"


def c9_entropy():
    finals = []
    for p1 in np.linspace(0.01, 0.99, 99):
        pure = DensityMatrix.pure([np.sqrt(p1), np.sqrt(1 - p1)])
        finals.append(entropy_increase_check(pure, measure_with_chain(pure, EnvironmentModel(40, 0.5))).final)
    inside = all(0 < f <= np.log(2) + 1e-15 for f in finals)
    half = DensityMatrix.pure([1, 1])
    e = entropy_increase_check(half, measure_with_chain(half, EnvironmentModel(40, 0.5), (1.0, 1.0)))
    dev = abs(e.final - np.log(2))
    return inside and dev <= 1e-12 and abs(e.initial) <= 1e-12, f"99 pure inputs in (0, ln 2]: {inside}; |S - ln 2| = {dev:.1e}"


def c10_fluctuation():
    e1, e2 = 1.0, 1.7
    t = np.linspace(0, 200, 200001)
    psi = [0.6 + 0.2j, 0.6 + 0.2j]
    pure = probability_density(np.array([1, 1]) / np.sqrt(2), psi, [e1, e2], t)
    # period from successive upward mean crossings
    d = pure - pure.mean()
    up = np.nonzero((d[:-1] < 0) & (d[1:] >= 0))[0]
    tc = t[up] - d[up] * (t[up + 1] - t[up]) / (d[up + 1] - d[up])
    measured = float(np.mean(np.diff(tc)))
    expected = 2 * np.pi / (e2 - e1)
    rel = abs(measured - expected) / expected
    mixed = probability_density(DensityMatrix.mixture([1, 1]), psi, [e1, e2], t)
    var = float(np.var(mixed))
    return rel <= 0.01 and var < 1e-12, f"period {measured:.6f} vs {expected:.6f} ({100 * rel:.4f}%); mixture variance {var:.1e}"


def c11_cat():
    rng = np.random.default_rng(11)
    amps = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
    model = TransitionModel.polarization_split(amps, n_recoil=3)
    sigma = DensityMatrix.mixture([0.35, 0.65])
    beta = DensityMatrix.mixture([0.2, 0.3, 0.5])
    rho = final_state_density(model, sigma, beta)
    exact_zero = bool(np.all(class_block(rho, 0, 1) == 0) and np.all(class_block(rho, 1, 0) == 0))
    v = cat_verdict(measure_with_chain(DensityMatrix.pure([1, 1]), EnvironmentModel(30, 0.5)))
    return exact_zero and v.offdiagonal <= 4.7e-10, f"u-d block exactly zero: {exact_zero}; cat off-diagonal {v.offdiagonal:.3e}"


def c12_determinism():
    runs = [
        ("two_slit", []), ("which_path", []), ("epr", ["--set", "filter=spin_flip"]), ("chsh", []),
        ("weyl", []), ("thermal", []), ("decohere", ["--set", "random_overlaps=true", "--n-max", "40"]),
        ("cat", []), ("oracle", ["--set", "pattern=bell.*"]),
    ]
    mismatched, compared = [], 0
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "cfg.yaml"
        for exp, extra in runs:
            cfg.write_text(f"experiment: {exp}\nseed: 17\n")
            outs = []
            for k in range(2):
                out = Path(tmp) / f"{exp}_{k}"
                code = cli_main(["run", exp, "--config", str(cfg), "--out", str(out), *extra])
                if code != 0:
                    return False, f"{exp} exited {code}"
                outs.append(out)
            for f in sorted(outs[0].glob("*.csv")):
                compared += 1
                if f.read_bytes() != (outs[1] / f.name).read_bytes():
                    mismatched.append(f"{exp}/{f.name}")
    return not mismatched and compared > 0, f"{compared} CSV files compared, mismatched: {mismatched or 'none'}"


CRITERIA = [
    (1, "algebra suite", c1_algebra),
    (2, "zero-coincidence theorem", c2_zero_coincidence),
    (3, "interrogation identity", c3_interrogation),
    (4, "which-path destroys fringes", c4_which_path),
    (5, "EPR tables", c5_epr_tables),
    (6, "Bell curve and CHSH", c6_bell),
    (7, "Weyl kinematics", c7_weyl),
    (8, "environment decoherence", c8_decoherence),
    (9, "entropy increase", c9_entropy),
    (10, "pure-vs-mixed fluctuation", c10_fluctuation),
    (11, "cat diagonality", c11_cat),
    (12, "determinism", c12_determinism),
]


def _line(num, name, ok, detail):
    return f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"


@pytest.mark.parametrize("num,name,check", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(num, name, check):
    ok, detail = check()
    RESULTS.append((num, name, ok, detail))
    print(_line(num, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for num, name, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(_line(num, name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
