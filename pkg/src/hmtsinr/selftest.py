"""Oracle and invariant checks run by ``hmtsinr selftest``.

Each check calls library functions through their modules (``pulse.ambiguity_gaussian``
rather than an imported name) so a patched or broken implementation is what
gets measured. A check returns the measured value; it passes when the value is
within its tolerance.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy import integrate, stats

from . import analysis, channel, hexmod, montecarlo, pulse

T_SYS, F_SYS = 1e-4, 25e3


def _system():
    return hexmod.LatticeParams.hexagonal(T_SYS, F_SYS)


def _scattering(theta):
    return channel.scattering_for_csf(theta, "fixed_doppler", f_d=600.0)


@dataclass(frozen=True)
class Check:
    id: str
    description: str
    tolerance: float
    run: Callable[[], float]
    # "max": measured must not exceed tolerance; "min": must reach it
    kind: str = "max"

    def passed(self, measured: float) -> bool:
        if not math.isfinite(measured):
            return False
        return measured <= self.tolerance if self.kind == "max" else measured >= self.tolerance


@dataclass(frozen=True)
class CheckResult:
    check: Check
    measured: float
    passed: bool
    seconds: float
    error: str = ""

    def line(self) -> str:
        op = "<=" if self.check.kind == "max" else ">="
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.error})" if self.error else ""
        return (f"{status}  {self.check.id:<34} measured={self.measured:.3e} {op} {self.check.tolerance:.1e}"
                f"  [{self.seconds:.2f}s] {self.check.description}{extra}")


REGISTRY: list[Check] = []


def check(id: str, description: str, tolerance: float, kind: str = "max"):
    def deco(fn):
        REGISTRY.append(Check(id, description, tolerance, fn, kind))
        return fn
    return deco


# ---------------------------------------------------------------------------
# pulse
# ---------------------------------------------------------------------------

@check("pulse.unit_energy", "Riemann energy of g on +-8 sqrt(sigma)", 1e-9)
def _pulse_energy():
    p = pulse.GaussianPulse(2.3094e-9)
    t = pulse.TimeGrid.for_pulse(p, p.width / 200).times()
    return abs(float(np.sum(pulse.eval_pulse(p, t) ** 2)) * p.width / 200 - 1.0)


@check("pulse.ambiguity_oracle", "closed-form ambiguity vs Riemann sum, 11x11 grid", 1e-6)
def _ambiguity_oracle():
    p = pulse.GaussianPulse(1e-7)
    ts = p.width / 100
    g = pulse.shifted_pulse_samples(p, 0.0, pulse.TimeGrid.for_pulse(p, ts))
    worst = 0.0
    for k in np.linspace(-3, 3, 11):
        tau = round(k * 100) * ts
        for nu in np.linspace(-3, 3, 11) / p.width:
            num = pulse.cross_ambiguity_numeric(g, g, tau, nu)
            worst = max(worst, abs(num - pulse.ambiguity_gaussian(p, tau, nu)))
    return worst


@check("pulse.shifted_cross_ambiguity", "|A_{g,g(.-dt)}(tau,nu)| = |A_g(tau+dt,nu)|", 1e-6)
def _shifted_cross():
    p = pulse.GaussianPulse(1e-7)
    ts = p.width / 200
    grid = pulse.TimeGrid.spanning(-12 * p.width, 12 * p.width, ts)
    g = pulse.shifted_pulse_samples(p, 0.0, grid)
    worst = 0.0
    for dt in (0.13 * p.width, -0.41 * p.width, 1.07 * p.width):
        b = pulse.shifted_pulse_samples(p, dt, grid)
        for tau_k, nu in ((0, 0.0), (80, 2e3), (-150, -4e3)):
            tau = tau_k * ts
            num = abs(pulse.cross_ambiguity_numeric(g, b, tau, nu))
            worst = max(worst, abs(num - abs(pulse.ambiguity_gaussian(p, tau + dt, nu))))
    return worst


# ---------------------------------------------------------------------------
# hexmod
# ---------------------------------------------------------------------------

@check("hexmod.match_parameters", "matching constraints sigma*sqrt3*F/T = 1 and T*F = 2/rho", 1e-12)
def _matching():
    worst = 0.0
    for rho in (0.5, 1.0, 2.0, 4.0):
        lp = hexmod.match_parameters(5e-6, 100.0, rho, "eq8")
        worst = max(worst, abs(lp.sigma * hexmod.SQRT3 * lp.F / lp.T - 1), abs(lp.T * lp.F * rho / 2 - 1))
        lp = hexmod.match_parameters(5e-6, 100.0, rho, "eq7")
        worst = max(worst, abs(lp.sigma * lp.F / (hexmod.SQRT3 * lp.T) - 1))
    return worst


@check("hexmod.matched_filter", "single symbol demodulates to 1, shifted receiver to exp(-pi dt^2/2 sigma)", 1e-9)
def _matched_filter():
    lp = _system()
    frame = hexmod.SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0)
    r = hexmod.modulate(frame, lp, sample_interval=lp.pulse.width / 100)
    pt = lp.point(0, 0, 1)
    err = abs(hexmod.demodulate(r, pt, hexmod.ReceiverPulse(lp.pulse, 0.0)) - 1.0)
    dt = 0.7 * lp.pulse.width
    mag = abs(hexmod.demodulate(r, pt, hexmod.ReceiverPulse(lp.pulse, dt)))
    return max(err, abs(mag - math.exp(-math.pi * dt * dt / (2 * lp.sigma))))


@check("hexmod.gram_3x3", "demodulated 3x3 frame equals Gram matrix times symbols", 1e-9)
def _gram():
    lp = _system()
    rng = np.random.default_rng(7)
    frame = hexmod.SymbolFrame.random_qpsk(3, 3, rng, m_start=-1, n_start=-1)
    r = hexmod.modulate(frame, lp, sample_interval=1e-6)
    proto = hexmod.ReceiverPulse(lp.pulse, 0.0)
    pts = list(frame.points(lp))
    worst = 0.0
    for target, _ in pts:
        got = hexmod.demodulate(r, target, proto)
        want = sum(c * pulse.gabor_inner(lp.sigma, q.time_offset, q.freq_offset,
                                         target.time_offset, target.freq_offset) for q, c in pts)
        worst = max(worst, abs(got - want))
    return worst


# ---------------------------------------------------------------------------
# channel
# ---------------------------------------------------------------------------

@check("channel.density_normalization", "scattering density integrates to 1", 1e-9)
def _density_norm():
    s = channel.ExpUScattering(5e-6, 100.0)
    x, w = np.polynomial.legendre.leggauss(64)
    theta = x * math.pi / 2
    # nu = f_d sin(theta) removes the edge singularity; the Jacobian cancels it
    inner = float(np.sum(w * math.pi / 2 * s.f_d * np.cos(theta)
                         * channel.scattering_density(s, 0.0, s.f_d * np.sin(theta) * (1 - 1e-15))))
    outer, _ = integrate.quad(lambda tau: math.exp(-tau / s.tau_rms), 0, 40 * s.tau_rms,
                              epsabs=0, epsrel=1e-13)
    return abs(inner * outer - 1.0)


@check("channel.delay_moments", "truncated-exponential delay mean and rms, relative", 0.02)
def _delay_moments():
    s = channel.ExpUScattering(1e-5, 100.0, 1e-4)
    rng = np.random.default_rng(11)
    d = np.concatenate([channel.draw_paths(s, 64, rng).delays for _ in range(1600)])
    c = s.tau_max / s.tau_rms
    tail = c * math.exp(-c) / (1 - math.exp(-c))
    mean = s.tau_rms * (1 - tail)
    m2 = s.tau_rms ** 2 * (2 - (c * c + 2 * c) * math.exp(-c) / (1 - math.exp(-c)))
    std = math.sqrt(m2 - mean ** 2)
    return max(abs(d.mean() / mean - 1), abs(d.std() / std - 1))


@check("channel.doppler_ks", "Doppler KS distance to the arcsine law", 0.01)
def _doppler_ks():
    s = channel.ExpUScattering(1e-5, 100.0)
    rng = np.random.default_rng(12)
    v = np.concatenate([channel.draw_paths(s, 100, rng).dopplers for _ in range(1000)])
    return float(stats.kstest(v, lambda x: 0.5 + np.arcsin(np.clip(x / s.f_d, -1, 1)) / math.pi).statistic)


@check("channel.mean_power", "mean total path power, relative to 1", 0.02)
def _mean_power():
    s = channel.ExpUScattering(1e-5, 100.0)
    rng = np.random.default_rng(13)
    p = [np.sum(np.abs(channel.draw_paths(s, 16, rng).gains) ** 2) for _ in range(10_000)]
    return abs(float(np.mean(p)) - 1.0)


@check("channel.delayed_pulse", "single delayed path: matched-filter peak exp(-pi tau0^2/2 sigma)", 1e-9)
def _delayed_pulse():
    lp = _system()
    tau0 = 3.3e-6
    train = hexmod.transmit_train(hexmod.SymbolFrame.zeros(1, 1).with_symbol(0, 0, 1, 1.0), lp)
    grid = pulse.TimeGrid.spanning(-9 * lp.pulse.width, 9 * lp.pulse.width + tau0, 2e-7)
    y = channel.apply_channel(channel.ChannelPaths.single(tau0, 0.0, 1.0), train, grid)
    got = abs(hexmod.demodulate(y, lp.point(0, 0, 1), hexmod.ReceiverPulse(lp.pulse, 0.0)))
    return abs(got - math.exp(-math.pi * tau0 ** 2 / (2 * lp.sigma)))


# ---------------------------------------------------------------------------
# analysis
# ---------------------------------------------------------------------------

@check("analysis.delay_integral", "closed form and a*b vs adaptive quadrature, 10x10x10 grid, relative", 1e-9)
def _delay_integral():
    worst = 0.0
    for sigma in np.geomspace(1e-9, 1e-6, 10):
        w = math.sqrt(sigma)
        for K in np.geomspace(0.5, 20, 10):
            tau = w / K
            # centre measured from the completed-square peak, in pulse widths
            for u in np.linspace(-3, 3, 10):
                c = sigma / (2 * math.pi * tau) + u * w
                peak = max(0.0, c - sigma / (2 * math.pi * tau))

                def f(x):
                    return math.exp(-x / tau - math.pi * (x - c) ** 2 / sigma)

                ref = 0.0
                for lo, hi in ((0.0, peak), (peak, peak + 12 * w), (peak + 12 * w, peak + 12 * w + 80 * tau)):
                    if hi > lo:
                        ref += integrate.quad(f, lo, hi, epsabs=0, epsrel=1e-13, limit=200)[0]
                a, b = analysis.ab_decomposition(sigma, tau, c)
                worst = max(worst, abs(analysis.delay_integral(sigma, tau, c) / ref - 1), abs(a * b / ref - 1))
    return worst


@check("analysis.doppler_integral", "Gauss-Legendre in theta vs algebraic-weight quadrature, relative", 1e-8)
def _doppler_integral():
    worst = 0.0
    for sigma, fd in ((1e-7, 100.0), (2.3094e-9, 600.0), (1e-8, 3000.0)):
        for c in (0.0, 1e3, -2.5e3):
            ref, _ = integrate.quad(lambda v: math.exp(-math.pi * sigma * (c + v) ** 2), -fd, fd,
                                    weight="alg", wvar=(-0.5, -0.5), epsabs=0, epsrel=1e-13)
            ref *= fd
            worst = max(worst, abs(analysis.doppler_integral(sigma, fd, c) / ref - 1))
    return worst


@check("analysis.erfc_approx", "erfc(x/sqrt2) approximation, x in 0.1..5, relative", 0.02)
def _erfc_approx():
    xs = np.linspace(0.1, 5, 50)
    return max(abs(analysis.erfc_approx(x) / math.erfc(x / math.sqrt(2)) - 1) for x in xs)


@check("analysis.closed_form_dt", "closed-form delay vs numeric argmax of a*b, 20 points with K in 2.6..15, relative", 0.05)
def _closed_form():
    worst = 0.0
    for sigma in np.geomspace(1e-9, 1e-7, 4):
        for K in (2.6, 3.5, 5.0, 8.0, 15.0):
            tau = math.sqrt(sigma) / K
            sol = analysis.closed_form_dt(sigma, tau)
            ref = analysis.ab_argmax(sigma, tau).x
            worst = max(worst, abs(sol.dt / ref - 1))
    return worst


@check("analysis.signal_energy_2d", "signal energy vs 2-D quadrature of S |A|^2, relative", 1e-6)
def _signal_2d():
    lp = hexmod.LatticeParams(1e-4, 25e3, 1e-7)
    s = channel.ExpUScattering(5e-6, 100.0)
    op = analysis.SinrOperatingPoint(lp, s, 1.0, 0.0, 3e-6)
    p = lp.pulse

    def integrand(theta, tau):
        nu = s.f_d * math.sin(theta)
        dens = math.exp(-tau / s.tau_rms) / s.tau_rms
        return dens * abs(pulse.ambiguity_gaussian(p, tau - op.dt, nu)) ** 2 / math.pi

    ref, _ = integrate.dblquad(integrand, 0, 40 * s.tau_rms, -math.pi / 2, math.pi / 2,
                               epsabs=0, epsrel=1e-10)
    return abs(analysis.signal_energy(op) / ref - 1)


@check("analysis.window_doppler_axis", "interference window (4,4) vs (4,8), relative", 1e-10)
def _window_freq():
    op = analysis.SinrOperatingPoint(_system(), _scattering(0.35), 1.0, 0.01, 1e-5)
    a = analysis.interference_energy(op, window=(4, 4))
    return abs(a / analysis.interference_energy(op, window=(4, 8)) - 1)


@check("analysis.window_delay_axis", "SINR change from window (4,4) to (20,8) at vartheta 0.35 (dB)", 0.01)
def _window_delay():
    # the exponential delay profile makes the tail decay like exp(-m T / tau_rms), not Gaussian
    op = analysis.SinrOperatingPoint(_system(), _scattering(0.35), 1.0, 0.01, 1e-5)
    return abs(analysis.theoretical_sinr(op).sinr_db - analysis.theoretical_sinr(op, window=(20, 8)).sinr_db)


@check("analysis.ub_gap_0p07", "upper bound minus Max-SINR at vartheta 0.07, worst over SNR (dB)", 0.5)
def _ub_gap_007():
    return _ub_gap(0.07)


@check("analysis.ub_gap_0p20", "upper bound minus Max-SINR at vartheta 0.2, worst over SNR (dB)", 0.2)
def _ub_gap_02():
    return _ub_gap(0.2)


def _ub_gap(theta):
    lp, s = _system(), _scattering(theta)
    dt = analysis.closed_form_dt(lp.sigma, s.tau_rms).dt
    worst = -math.inf
    for snr in range(0, 31, 5):
        op = analysis.SinrOperatingPoint.from_snr(lp, s, snr)
        ub = analysis.sinr_upper_bound(op)
        worst = max(worst, ub.sinr_db - analysis.theoretical_sinr(op.with_dt(dt)).sinr_db)
    return worst


@check("analysis.dominance", "min over grid of UB - MaxSINR and MaxSINR - TPR (dB)", -1e-9, kind="min")
def _dominance():
    lp = _system()
    worst = math.inf
    for theta in (0.04, 0.1, 0.2, 0.35):
        s = _scattering(theta)
        dt = analysis.closed_form_dt(lp.sigma, s.tau_rms).dt
        for snr in (0, 10, 20, 30):
            op = analysis.SinrOperatingPoint.from_snr(lp, s, snr)
            t0 = analysis.theoretical_sinr(op).sinr_db
            tm = analysis.theoretical_sinr(op.with_dt(dt)).sinr_db
            ub = analysis.sinr_upper_bound(op).sinr_db
            worst = min(worst, ub - tm, tm - t0)
    return worst


# ---------------------------------------------------------------------------
# montecarlo
# ---------------------------------------------------------------------------

@check("montecarlo.identity_channel", "identity channel coefficients equal lattice ambiguities", 1e-9)
def _identity_coeffs():
    lp = _system()
    h = montecarlo.trial_coefficients(lp, channel.ChannelPaths.single(), 0.0, (2, 2))
    worst = abs(h[(0, 0, 1)] - 1.0)
    for (m, n, c), v in h.items():
        q = lp.point(m, n, c)
        worst = max(worst, abs(abs(v) - abs(pulse.ambiguity_gaussian(lp.pulse, q.time_offset, q.freq_offset))))
    return worst


@check("montecarlo.rematched_path", "single path delay tau0 with dt = tau0 gives |H_0| = 1", 1e-9)
def _rematched():
    lp = _system()
    tau0 = 7.5e-6
    h = montecarlo.trial_coefficients(lp, channel.ChannelPaths.single(tau0), tau0, (1, 1))
    return abs(abs(h[(0, 0, 1)]) - 1.0)


@check("montecarlo.batch_vs_reference", "batched coefficients vs per-path reference", 1e-12)
def _batch():
    lp = _system()
    s = _scattering(0.2)
    d, v, g = montecarlo.draw_batch(s, 16, 99, 0, 4)
    dt = 1.3e-5
    batch = montecarlo.coefficients_batch(lp, dt, (2, 2), d, v, g)
    worst = 0.0
    for k in range(4):
        ref = montecarlo.trial_coefficients(lp, channel.ChannelPaths(d[k], v[k], g[k]), dt, (2, 2))
        for (m, n, c), val in ref.items():
            worst = max(worst, abs(batch[k, c - 1, m + 2, n + 2] - val))
    return worst


@check("montecarlo.vs_theory", "empirical vs theoretical SINR, 2000 trials, worst over receivers (dB)", 0.5)
def _mc_theory():
    cfg = montecarlo.TrialConfig(_system(), _scattering(0.2), trials=2000).with_snr(10.0)
    worst = 0.0
    for mode in ("tpr", "maxsinr"):
        rep = montecarlo.estimate_sinr(replace(cfg, dt_mode=mode))
        worst = max(worst, abs(rep.empirical_sinr_db - rep.theoretical_sinr_db))
    return worst


@check("montecarlo.energy_sanity", "mean S+I over lattice energy bound (passive channel)", 1.0 + 0.02)
def _energy():
    lp = _system()
    cfg = montecarlo.TrialConfig(lp, _scattering(0.35), trials=1000)
    S, I = montecarlo.trial_energies(cfg, [0.0])
    return float(np.mean(S + I)) / montecarlo.lattice_energy_bound(lp, cfg.window)


@check("montecarlo.waveform_crosscheck", "waveform path vs coefficient domain, same realisations (dB)", 0.2)
def _waveform():
    lp = _system()
    cfg = montecarlo.TrialConfig(lp, _scattering(0.1), window=(1, 1), path_count=16).with_snr(15.0)
    dt = analysis.closed_form_dt(lp.sigma, cfg.scattering.tau_rms).dt
    wf = montecarlo.waveform_crosscheck(cfg, dt, trials=12, noise=False)
    S, I = montecarlo.trial_energies(replace(cfg, trials=12), [dt])
    noise = analysis.noise_energy(cfg.operating_point(dt), cfg.mode)
    coef = analysis.db(S[0].mean() / (I[0].mean() + noise))
    wave = analysis.db(wf["signal"].mean() / (wf["interference"].mean() + noise))
    return abs(float(coef - wave))


@check("montecarlo.determinism", "max |difference| between 1 and 2 worker runs", 0.0)
def _determinism():
    cfg = montecarlo.TrialConfig(_system(), _scattering(0.1), trials=600)
    a = montecarlo.trial_energies(cfg, [0.0, 1e-5])
    b = montecarlo.trial_energies(replace(cfg, workers=2), [0.0, 1e-5])
    return float(max(np.max(np.abs(a[0] - b[0])), np.max(np.abs(a[1] - b[1]))))


# ---------------------------------------------------------------------------

def run_selftest(ids=None, out=print) -> list[CheckResult]:
    results = []
    for c in REGISTRY:
        if ids and c.id not in ids:
            continue
        t0 = time.perf_counter()
        error = ""
        try:
            measured = float(c.run())
        except Exception as exc:  # noqa: BLE001 - a crashing check is a failing check
            measured, error = float("nan"), f"{type(exc).__name__}: {exc}"
        res = CheckResult(c, measured, c.passed(measured) and not error, time.perf_counter() - t0, error)
        results.append(res)
        if out:
            out(res.line())
    return results
