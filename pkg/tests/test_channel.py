import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from hmtsinr import channel, hexmod
from hmtsinr.channel import ChannelPaths, CsfSplit, ExpUScattering
from hmtsinr.errors import CoverageError, ParameterError
from hmtsinr.hexmod import ReceiverPulse, SymbolFrame
from hmtsinr.pulse import TimeGrid


def test_density_values():
    s = ExpUScattering(5e-6, 100.0)
    assert channel.scattering_density(s, 0.0, 0.0) == pytest.approx(1 / (math.pi * 5e-6 * 100))
    assert channel.scattering_density(s, 5e-6, 0.0) == pytest.approx(math.exp(-1) / (math.pi * 5e-6 * 100))


def test_density_rejects_edges():
    s = ExpUScattering(5e-6, 100.0)
    for nu in (100.0, -100.0, 150.0):
        with pytest.raises(ParameterError):
            channel.scattering_density(s, 0.0, nu)
    with pytest.raises(ParameterError):
        channel.scattering_density(s, -1e-6, 0.0)


def test_density_normalisation():
    s = ExpUScattering(5e-6, 100.0)

    def f(theta, tau):
        nu = s.f_d * math.sin(theta)
        return channel.scattering_density(s, tau, nu) * s.f_d * math.cos(theta)

    val, _ = integrate.dblquad(f, 0, 40 * s.tau_rms, -math.pi / 2 + 1e-12, math.pi / 2 - 1e-12,
                               epsabs=0, epsrel=1e-12)
    assert abs(val - 1.0) < 1e-9


def test_scattering_validation():
    with pytest.raises(ParameterError):
        ExpUScattering(0.0, 1.0)
    with pytest.raises(ParameterError):
        ExpUScattering(1e-6, 1.0, 4e-6)
    assert ExpUScattering(1e-6, 1.0).tau_max == pytest.approx(1e-5)


def test_csf():
    spec = channel.csf(ExpUScattering(1e-4, 100.0, 1e-3))
    assert spec.vartheta == pytest.approx(0.1)
    assert spec.underspread and spec.regime == "underspread"
    assert channel.csf(ExpUScattering(3.5e-4, 100.0, 3.5e-3)).vartheta == pytest.approx(0.35)
    assert not channel.CsfSpec(1.5).underspread


@pytest.mark.parametrize("split", ["fixed_doppler", "fixed_delay", "matched"])
@given(theta=st.floats(0.01, 0.99))
def test_scattering_for_csf_hits_target(split, theta):
    s = channel.scattering_for_csf(theta, split, f_d=600.0, tau_rms=2e-5, sigma=2.3e-9, alpha=2.0)
    assert s.vartheta == pytest.approx(theta, rel=1e-12)
    assert s.tau_max == pytest.approx(10 * s.tau_rms, rel=1e-12)
    if split == "matched":
        assert 2.3e-9 == pytest.approx(2.0 * s.tau_rms / s.f_d, rel=1e-12)


def test_scattering_for_csf_errors():
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ParameterError):
            channel.scattering_for_csf(bad, f_d=600.0)
    with pytest.raises(ParameterError):
        channel.scattering_for_csf(0.1, "fixed_delay")
    with pytest.raises(ParameterError):
        channel.scattering_for_csf(0.1, "bogus", f_d=1.0)
    assert CsfSplit().scattering(0.1).tau_rms == pytest.approx(0.1 / 6000)


def test_draw_paths_shapes_and_bounds():
    s = ExpUScattering(1e-5, 300.0)
    p = channel.draw_paths(s, 64, np.random.default_rng(0))
    assert p.count == 64
    assert np.all(p.delays >= 0) and np.all(p.delays <= s.tau_max)
    assert np.all(np.abs(p.dopplers) <= s.f_d)
    with pytest.raises(ParameterError):
        channel.draw_paths(s, 0, np.random.default_rng(0))


def test_draw_paths_deterministic():
    s = ExpUScattering(1e-5, 300.0)
    a = channel.draw_paths(s, 32, np.random.default_rng(42))
    b = channel.draw_paths(s, 32, np.random.default_rng(42))
    assert a.delays.tobytes() == b.delays.tobytes()
    assert a.dopplers.tobytes() == b.dopplers.tobytes()
    assert a.gains.tobytes() == b.gains.tobytes()


def test_single_path_power():
    s = ExpUScattering(1e-5, 300.0)
    rng = np.random.default_rng(1)
    g = np.array([channel.draw_paths(s, 1, rng).gains[0] for _ in range(100_000)])
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, rel=0.01)


def test_total_power_many_paths():
    s = ExpUScattering(1e-5, 300.0)
    rng = np.random.default_rng(2)
    p = [np.sum(np.abs(channel.draw_paths(s, 64, rng).gains) ** 2) for _ in range(10_000)]
    assert np.mean(p) == pytest.approx(1.0, rel=0.02)


def test_wssus_disjoint_delay_bins_uncorrelated():
    s = ExpUScattering(1e-5, 300.0)
    rng = np.random.default_rng(4)
    a, b = np.empty(100_000, complex), np.empty(100_000, complex)
    for i in range(a.size):
        p = channel.draw_paths(s, 8, rng)
        early = p.delays < s.tau_rms
        a[i] = p.gains[early].sum()
        b[i] = p.gains[~early].sum()
    corr = np.vdot(a, b) / math.sqrt(np.vdot(a, a).real * np.vdot(b, b).real)
    assert abs(corr) < 0.02


def test_apply_channel_identity(system):
    train = hexmod.transmit_train(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), system)
    lo, hi = train.support()
    grid = TimeGrid.spanning(lo, hi, 1e-6)
    y = channel.apply_channel(ChannelPaths.single(), train, grid)
    assert np.array_equal(y.samples, train.evaluate(grid.times()))


def test_apply_channel_single_doppler(system):
    nu0 = 3000.0
    train = hexmod.transmit_train(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), system)
    lo, hi = train.support()
    y = channel.apply_channel(ChannelPaths.single(0.0, nu0), train, TimeGrid.spanning(lo, hi, 1e-6))
    got = abs(hexmod.demodulate(y, system.point(0, 0, 1), ReceiverPulse(system.pulse)))
    assert got == pytest.approx(math.exp(-math.pi * system.sigma * nu0 ** 2 / 2), abs=1e-9)


def test_apply_channel_single_delay(system):
    tau0 = 2.5e-5
    train = hexmod.transmit_train(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), system)
    lo, hi = train.support()
    y = channel.apply_channel(ChannelPaths.single(tau0), train, TimeGrid.spanning(lo, hi + tau0, 1e-6))
    got = abs(hexmod.demodulate(y, system.point(0, 0, 1), ReceiverPulse(system.pulse)))
    assert got == pytest.approx(math.exp(-math.pi * tau0 ** 2 / (2 * system.sigma)), abs=1e-9)
    # the pulse is an exact translate: peak sits at tau0
    t = y.times()
    assert t[np.argmax(np.abs(y.samples))] == pytest.approx(tau0, abs=1e-6)


def test_apply_channel_coverage(system):
    train = hexmod.transmit_train(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), system)
    lo, hi = train.support()
    with pytest.raises(CoverageError):
        channel.apply_channel(ChannelPaths.single(1e-4), train, TimeGrid.spanning(lo, hi, 1e-6))


def test_mean_output_energy(system, scat):
    s = scat(0.2)
    train = hexmod.transmit_train(SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), system)
    lo, hi = train.support()
    grid = TimeGrid.spanning(lo, hi + s.tau_max, 2e-6)
    rng = np.random.default_rng(8)
    e = [channel.apply_channel(channel.draw_paths(s, 16, rng), train, grid).energy() for _ in range(10_000)]
    assert np.mean(e) == pytest.approx(1.0, rel=0.02)


def test_paths_text_roundtrip():
    p = channel.draw_paths(ExpUScattering(1e-5, 300.0), 5, np.random.default_rng(3))
    text = p.to_text()
    assert text.splitlines()[0] == "# delay_s, doppler_hz, gain_re, gain_im"
    q = ChannelPaths.from_text(text)
    assert np.array_equal(p.delays, q.delays)
    assert np.array_equal(p.dopplers, q.dopplers)
    assert np.array_equal(p.gains, q.gains)
    with pytest.raises(ParameterError, match="line 2"):
        ChannelPaths.from_text("# header\n1, 2, 3\n")
    with pytest.raises(ParameterError):
        ChannelPaths.from_text("# nothing\n")


def test_channel_paths_validation():
    with pytest.raises(ParameterError):
        ChannelPaths([0.0, 1.0], [0.0], [1.0, 1.0])
    with pytest.raises(ParameterError):
        ChannelPaths([-1e-6], [0.0], [1.0])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**63))
def test_delay_and_doppler_statistics_any_seed(seed):
    s = ExpUScattering(1e-5, 300.0)
    rng = np.random.default_rng(seed)
    p = channel.draw_paths(s, 20_000, rng)
    assert stats.kstest(p.dopplers, lambda x: 0.5 + np.arcsin(np.clip(x / s.f_d, -1, 1)) / math.pi).pvalue > 1e-4
    c = s.tau_max / s.tau_rms
    mean = s.tau_rms * (1 - c * math.exp(-c) / (1 - math.exp(-c)))
    assert np.mean(p.delays) == pytest.approx(mean, rel=0.05)
