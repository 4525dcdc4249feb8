import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hmtsinr import hexmod, pulse
from hmtsinr.errors import CoverageError, ParameterError
from hmtsinr.hexmod import LatticeParams, ReceiverPulse, SymbolFrame
from hmtsinr.pulse import TimeGrid


@pytest.mark.parametrize("rho,alpha", [(0.5, 2.25), (1.0, 2.00), (2.0, 1.90), (4.0, 1.85)])
def test_alpha_table(rho, alpha):
    assert hexmod.alpha_for_rho(rho) == alpha


def test_alpha_interpolation_and_clamping():
    assert hexmod.alpha_for_rho(0.1) == 2.25
    assert hexmod.alpha_for_rho(16.0) == 1.85
    assert hexmod.alpha_for_rho(math.sqrt(2)) == pytest.approx(1.95)
    with pytest.raises(ParameterError):
        hexmod.alpha_for_rho(0.0)


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_alpha_monotone_nonincreasing(r1, r2):
    lo, hi = sorted((r1, r2))
    assert hexmod.alpha_for_rho(lo) >= hexmod.alpha_for_rho(hi)


def test_match_parameters_worked_example():
    lp = hexmod.match_parameters(5e-6, 100.0, 1.0, "eq8")
    assert lp.sigma == pytest.approx(1e-7, rel=1e-12)
    assert lp.T * lp.F == pytest.approx(2.0, rel=1e-12)
    assert lp.sigma * math.sqrt(3) * lp.F / lp.T == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=50)
@given(st.floats(1e-7, 1e-4), st.floats(1.0, 2000.0), st.floats(0.3, 6.0), st.sampled_from(["eq7", "eq8"]))
def test_match_parameters_constraints(tau, fd, rho, mode):
    lp = hexmod.match_parameters(tau, fd, rho, mode)
    assert lp.sigma == pytest.approx(hexmod.alpha_for_rho(rho) * tau / fd, rel=1e-12)
    assert lp.rho == pytest.approx(rho, rel=1e-12)
    if mode == "eq8":
        assert lp.sigma * math.sqrt(3) * lp.F / lp.T == pytest.approx(1.0, rel=1e-12)
    else:
        assert lp.sigma * lp.F / (math.sqrt(3) * lp.T) == pytest.approx(1.0, rel=1e-12)


def test_match_parameters_errors():
    with pytest.raises(ParameterError):
        hexmod.match_parameters(0.0, 100.0, 1.0)
    with pytest.raises(ParameterError):
        hexmod.match_parameters(1e-6, 100.0, 1.0, "eq9")


def test_lattice_params_defaults(system):
    assert system.sigma == pytest.approx(1e-4 / (math.sqrt(3) * 25e3))
    assert system.rho == pytest.approx(2 / (1e-4 * 25e3))
    with pytest.raises(ParameterError):
        LatticeParams(-1.0, 1.0, 1.0)


def test_lattice_point_offsets(system):
    p1 = system.point(2, -3, 1)
    p2 = system.point(2, -3, 2)
    assert p1.time_offset == 2 * system.T and p1.freq_offset == -3 * system.F
    assert p2.time_offset - p1.time_offset == pytest.approx(system.T / 2)
    assert p2.freq_offset - p1.freq_offset == pytest.approx(system.F / 2)
    with pytest.raises(ParameterError):
        system.point(0, 0, 3)


def test_hexagonal_neighbours_equidistant(system):
    # nearest neighbours in the ambiguity metric pi(tau^2/sigma + sigma nu^2)/2 all decay alike
    mags = [abs(pulse.ambiguity_gaussian(system.pulse, t, f)) for t, f in
            ((system.T / 2, system.F / 2), (system.T / 2, -system.F / 2), (0.0, system.F))]
    assert mags[0] == pytest.approx(mags[1], rel=1e-12)
    assert mags[0] == pytest.approx(mags[2], rel=1e-12)


def test_modulate_single_symbol_coset1(system):
    frame = SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0)
    x = hexmod.modulate(frame, system, sample_interval=1e-6)
    assert np.max(np.abs(x.samples - pulse.eval_pulse(system.pulse, x.times()))) < 1e-12


def test_modulate_single_symbol_coset2(system):
    frame = SymbolFrame.zeros(1, 1).with_symbol(0, 0, 2, 1.0)
    x = hexmod.modulate(frame, system, sample_interval=1e-6)
    t = x.times()
    want = pulse.eval_pulse(system.pulse, t - system.T / 2) * np.exp(1j * math.pi * system.F * t)
    assert np.max(np.abs(x.samples - want)) < 1e-12


def test_modulate_coverage_error_lists_points(system):
    frame = SymbolFrame.zeros(2, 1)
    grid = TimeGrid.spanning(-1e-4, 1e-4, 1e-6)
    with pytest.raises(CoverageError, match=r"\(1, 0, 1\)"):
        hexmod.modulate(frame, system, grid=grid)
    with pytest.raises(ParameterError):
        hexmod.modulate(frame, system)


def test_frame_energy_equals_gram_form(system):
    rng = np.random.default_rng(3)
    frame = SymbolFrame.random_qpsk(3, 3, rng, m_start=-1, n_start=-1)
    x = hexmod.modulate(frame, system, sample_interval=5e-7)
    pts = list(frame.points(system))
    c = np.array([v for _, v in pts])
    G = np.array([[pulse.gabor_inner(system.sigma, p.time_offset, p.freq_offset, q.time_offset, q.freq_offset)
                   for q, _ in pts] for p, _ in pts])
    assert x.energy() == pytest.approx(float(np.real(np.conj(c) @ G.T @ c)), rel=1e-9)


def test_demodulate_matched_and_shifted(system):
    frame = SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0)
    r = hexmod.modulate(frame, system, sample_interval=system.pulse.width / 100)
    pt = system.point(0, 0, 1)
    assert abs(hexmod.demodulate(r, pt, ReceiverPulse(system.pulse)) - 1.0) < 1e-9
    for dt in (5e-6, 1.2e-5, 3e-5):
        got = abs(hexmod.demodulate(r, pt, ReceiverPulse(system.pulse, dt)))
        assert got == pytest.approx(math.exp(-math.pi * dt ** 2 / (2 * system.sigma)), abs=1e-9)


def test_demodulate_matches_numeric_cross_ambiguity(system):
    ts = 1e-6
    p = system.pulse
    dt = 7e-6
    grid = TimeGrid.spanning(-1e-3, 1e-3, ts)
    g = pulse.shifted_pulse_samples(p, 0.0, grid)
    r = hexmod.modulate(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), system, grid=grid)
    a = hexmod.demodulate(r, system.point(0, 0, 1), ReceiverPulse(p, dt))
    b = pulse.cross_ambiguity_numeric(g, pulse.shifted_pulse_samples(p, dt, grid), 0.0, 0.0)
    assert abs(a - b) < 1e-12


def test_demodulate_3x3_gram(system):
    rng = np.random.default_rng(5)
    frame = SymbolFrame.random_qpsk(3, 3, rng, m_start=-1, n_start=-1)
    r = hexmod.modulate(frame, system, sample_interval=1e-6)
    proto = ReceiverPulse(system.pulse)
    pts = list(frame.points(system))
    assert len(pts) == 18
    for target, _ in pts:
        want = sum(c * pulse.gabor_inner(system.sigma, q.time_offset, q.freq_offset,
                                         target.time_offset, target.freq_offset) for q, c in pts)
        assert abs(hexmod.demodulate(r, target, proto) - want) < 1e-9


def test_demodulate_coverage(system):
    r = hexmod.modulate(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), system, sample_interval=1e-6)
    with pytest.raises(CoverageError):
        hexmod.demodulate(r, system.point(3, 0, 1), ReceiverPulse(system.pulse))


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10), st.integers(0, 2**32 - 1))
def test_demodulate_linearity(a, b, seed):
    lp = LatticeParams.hexagonal(1e-4, 25e3)
    rng = np.random.default_rng(seed)
    grid = TimeGrid.spanning(-6e-4, 6e-4, 2e-6)
    r1 = hexmod.modulate(SymbolFrame.random_qpsk(2, 2, rng), lp, grid=grid)
    r2 = hexmod.modulate(SymbolFrame.random_qpsk(2, 2, rng), lp, grid=grid)
    pt, proto = lp.point(0, 1, 2), ReceiverPulse(lp.pulse, 3e-6)
    lhs = hexmod.demodulate(r1.scaled(a) + r2.scaled(b), pt, proto)
    rhs = a * hexmod.demodulate(r1, pt, proto) + b * hexmod.demodulate(r2, pt, proto)
    assert abs(lhs - rhs) < 1e-12 * (1 + abs(a) + abs(b))


def test_coset2_is_half_shift_by_cross_ambiguity_peak(system):
    # scan receiver time shifts over coset-1 pulses at frequency F/2; the peak sits at T/2
    grid = TimeGrid.spanning(-1e-3, 1e-3, 1e-6)
    r = hexmod.modulate(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 2, 1.0), system, grid=grid)
    shifts = np.linspace(0, system.T, 101)
    # coset-1 point (0, 1) of a lattice with spacing F/2 sits at frequency F/2
    probe = LatticeParams(system.T, system.F / 2, system.sigma).point(0, 1, 1)
    vals = [abs(hexmod.demodulate(r, probe, ReceiverPulse(system.pulse, s)))
            for s in shifts]
    assert shifts[int(np.argmax(vals))] == pytest.approx(system.T / 2)
    assert abs(hexmod.demodulate(r, system.point(0, 0, 2), ReceiverPulse(system.pulse))) == pytest.approx(1, abs=1e-9)


def test_random_qpsk_power():
    rng = np.random.default_rng(9)
    f = SymbolFrame.random_qpsk(100, 100, rng, symbol_power=2.5)
    for arr in (f.coset1, f.coset2):
        assert np.mean(np.abs(arr) ** 2) == pytest.approx(2.5, rel=0.05)
        assert abs(np.mean(arr)) < 0.05


def test_symbol_frame_shape_check():
    with pytest.raises(ParameterError):
        SymbolFrame(np.zeros((2, 2)), np.zeros((2, 3)))
