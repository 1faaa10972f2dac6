import itertools

import numpy as np
import pytest

from fockfield.cli import which_path_setup, SCHEMAS
from fockfield.detectors import (
    BellConfig,
    DetectorSpec,
    FilterSpec,
    apply_filter,
    bell_correlation,
    chsh,
    chsh_terms,
    coincidence_amplitude,
    coincidence_amplitudes,
    compton_channel,
    detector_amplitude,
    epr_coincidence_table,
    fringe_visibility,
    prepare_by_filter,
    screen_intensity,
    singlet_state,
)
from fockfield.errors import DomainError, InvariantViolation
from fockfield.fock import Ket, ModeSet, create_ket
from fockfield.oracle import dense_epr_table, dense_mode_operator, dense_oracle, to_vector
from fockfield.waves import Grid1D, WaveMode, WeylPacket, fringe_zeros, weyl_evaluate


@pytest.fixture
def screen():
    g = Grid1D(-1, 1, 21)
    rng = np.random.default_rng(3)
    modes = {i: WaveMode.normalized(g, rng.normal(size=21) + 1j * rng.normal(size=21)) for i in range(3)}
    return g, modes


def test_detector_amplitude_is_mode_value(screen):
    g, modes = screen
    ms = ModeSet.build(3)
    det = DetectorSpec(position=g.x[4], accepted_modes=(0, 1, 2), efficiency=0.5j)
    for n in range(3):
        assert detector_amplitude(det, modes, create_ket(ms, n)) == 0.5j * modes[n].values[4]
    assert detector_amplitude(det, modes, Ket.vacuum(ms)) == 0
    dead = DetectorSpec(g.x[4], (0, 1, 2), 0.0)
    assert detector_amplitude(dead, modes, create_ket(ms, 1)) == 0


def test_detector_validation():
    with pytest.raises(DomainError):
        DetectorSpec(0.0, ())
    with pytest.raises(DomainError):
        DetectorSpec(0.0, (0,), efficiency=1.5)


def test_coincidence_one_particle_zero(screen):
    g, modes = screen
    ms = ModeSet.build(3)
    for n, (i, j) in itertools.product(range(3), itertools.combinations(range(21), 2)):
        a = DetectorSpec(g.x[i], (0, 1, 2))
        b = DetectorSpec(g.x[j], (0, 1, 2))
        assert coincidence_amplitude(a, b, create_ket(ms, n), modes) == 0


def test_coincidence_two_particle_nonzero(screen):
    g, modes = screen
    ms = ModeSet.build(3)
    a, b = DetectorSpec(g.x[2], (0, 1, 2)), DetectorSpec(g.x[9], (0, 1, 2))
    amp = coincidence_amplitude(a, b, create_ket(ms, 0, 1), modes)
    f0, f1 = modes[0].values, modes[1].values
    expected = f0[2] * f1[9] - f1[2] * f0[9]
    assert amp == pytest.approx(expected, abs=1e-14)


def test_singlet_same_axis_amplitudes():
    amps = coincidence_amplitudes(singlet_state(), BellConfig(0.3, 0.3))
    assert abs(amps[("+", "-")]) ** 2 == pytest.approx(0.5)
    assert abs(amps[("-", "+")]) ** 2 == pytest.approx(0.5)
    assert abs(amps[("+", "+")]) < 1e-15 and abs(amps[("-", "-")]) < 1e-15


@pytest.mark.parametrize("flt", [None, "projection", "spin_flip"])
def test_tables_against_dense(flt):
    t = epr_coincidence_table(singlet_state(), FilterSpec(flt) if flt else None)
    d = dense_epr_table(0.0, 0.0, flt)
    for k in d:
        assert t[k] == pytest.approx(d[k], abs=1e-12)
    assert sum(t.probabilities.values()) == pytest.approx(1)


def test_filter_tables_reference_values():
    f = epr_coincidence_table(singlet_state(), FilterSpec("projection"))
    assert f[("+", "-")] == pytest.approx(1, abs=1e-12)
    t = epr_coincidence_table(singlet_state(), FilterSpec("spin_flip"))
    assert t[("+", "-")] < 1e-15 and t[("-", "+")] < 1e-15
    assert t[("+", "+")] == pytest.approx(0.5) and t[("-", "-")] == pytest.approx(0.5)


def test_filter_single_particle_examples():
    ms = ModeSet.build(["a+", "a-"])
    up, down = create_ket(ms, "a+"), create_ket(ms, "a-")
    F, T = FilterSpec("projection"), FilterSpec("spin_flip")
    assert apply_filter(F, up).terms == up.terms
    assert apply_filter(F, down).is_zero()
    assert apply_filter(T, down).terms == up.terms


@pytest.mark.parametrize("theta,phi", [(0.0, 0.0), (0.7, 0.0), (1.9, 2.3)])
def test_filter_algebra_on_one_particle_sector(theta, phi):
    ms = ModeSet.build(["a+", "a-"])
    F = dense_oracle(ms, FilterSpec("projection", theta, phi).operator())
    T = dense_oracle(ms, FilterSpec("spin_flip", theta, phi).operator())
    one = [to_vector(create_ket(ms, m)) for m in ("a+", "a-")]
    for v in one:
        np.testing.assert_allclose(F @ F @ v, F @ v, atol=1e-14)
        np.testing.assert_allclose(T @ T @ v, v, atol=1e-14)
    n = dense_mode_operator(ms, "a+", "annihilate")
    assert n.shape == (4, 4)


def test_bell_same_axis_anticorrelation():
    for a in np.linspace(0, 2 * np.pi, 9):
        assert bell_correlation(singlet_state(), a, a) == pytest.approx(-1, abs=1e-12)


def test_bell_depends_on_difference_only():
    s = singlet_state()
    for d in (0.2, 1.1, 2.5):
        vals = [bell_correlation(s, a, a + d) for a in np.linspace(0, 3, 6)]
        np.testing.assert_allclose(vals, -np.cos(d), atol=1e-9)


def test_chsh_terms_and_value():
    e = chsh_terms(singlet_state())
    assert e["E12"] == pytest.approx(-np.cos(3 * np.pi / 4))
    assert chsh(singlet_state()) == pytest.approx(2 * np.sqrt(2), abs=1e-9)


def test_bell_config_wraps_angles():
    c = BellConfig(-np.pi / 2, 5 * np.pi)
    assert 0 <= c.alpha < 2 * np.pi and c.beta == pytest.approx(np.pi)
    with pytest.raises(DomainError):
        BellConfig(chsh=(0.0, 1.0))


def test_singlet_spin_invariant():
    from fockfield.detectors import EprState, epr_modeset

    ms = epr_modeset()
    with pytest.raises(InvariantViolation):
        EprState(create_ket(ms, "a+", "b+"), 1.0)


def test_filter_timing_irrelevant():
    """Free evolution multiplies each arm by a packet value; tables are unchanged by when the filter acts."""
    pk = WeylPacket(1.25, 0.1, mass=1.0)
    g = Grid1D(-30, 30, 301)
    s = singlet_state()
    for flt in (FilterSpec("projection"), FilterSpec("spin_flip")):
        base = epr_coincidence_table(s, flt, BellConfig(0.4, 1.3))
        for t in (0.0, 3.0, 10.0):
            w = weyl_evaluate(pk, 0.6 * t, t, grid=g)
            amps = coincidence_amplitudes(s, BellConfig(0.4, 1.3), flt, mode_values=(w, w))
            tot = sum(abs(a) ** 2 for a in amps.values())
            for k, a in amps.items():
                assert abs(a) ** 2 / tot == pytest.approx(base[k], abs=1e-9)


def test_prepare_by_filter():
    ms = ModeSet.build(["a+", "a-"])
    up, down = create_ket(ms, "a+"), create_ket(ms, "a-")
    p = prepare_by_filter([up, down], FilterSpec("projection"))
    assert p.rejected == 1 and p.transmitted[0].terms == up.terms
    assert prepare_by_filter([], FilterSpec()).rejected == 0
    sup = (up + down) / np.sqrt(2)
    q = prepare_by_filter([sup], FilterSpec("projection"))
    assert q.survival[0] == pytest.approx(0.5)
    assert q.transmitted[0].amplitude(next(iter(up.terms))) == pytest.approx(1)


# -- which path -------------------------------------------------------------------


def test_compton_vacuum_passthrough_and_recoil():
    p = dict(SCHEMAS["which_path"])
    geom, grid, modes, state = which_path_setup(p)
    vac = Ket.vacuum(state.modeset)
    assert compton_channel(vac, 0.0, {"t": modes["t"]}, {"o": modes["o"]}, "r") is vac
    out = compton_channel(state, 0.0, {"t": modes["t"]}, {"o": modes["o"]}, "r")
    assert all(s.count("r") == 1 for s in out.terms)
    assert out.norm2() == pytest.approx(1)
    with pytest.raises(DomainError):
        compton_channel(state, 5.0, {"t": modes["t"]}, {"o": modes["o"]}, "r")


def test_which_path_gives_one_slit_pattern():
    p = dict(SCHEMAS["which_path"])
    geom, grid, modes, state = which_path_setup(p)
    before = screen_intensity(state, modes)
    np.testing.assert_allclose(before, modes["t"].intensity(), atol=1e-15)
    after = screen_intensity(compton_channel(state, 0.0, {"t": modes["t"]}, {"o": modes["o"]}, "r"), modes)
    np.testing.assert_allclose(after, modes["o"].intensity(), atol=1e-12)
    z = float(fringe_zeros(geom)[0])
    assert fringe_visibility(before, grid, 0.0, z) > 0.99
    assert fringe_visibility(after, grid, 0.0, z) == pytest.approx(
        fringe_visibility(modes["o"].intensity(), grid, 0.0, z), abs=1e-6)
