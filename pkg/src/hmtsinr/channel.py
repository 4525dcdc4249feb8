"""Exponential-delay / U-shaped-Doppler WSSUS channel.

The scattering function is

    S(tau, nu) = exp(-tau/tau_rms) / (pi * tau_rms * f_d * sqrt(1 - (nu/f_d)**2))

for tau > 0 and |nu| < f_d; it integrates to one. Random realisations are
finite path sets (delay, Doppler, gain) and the channel acts on a transmit
signal as y(t) = sum_p gain_p * x(t - delay_p) * exp(j 2 pi doppler_p t).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, ParameterError
from .hexmod import PulseTrain
from .pulse import SampledWaveform, TimeGrid

DEFAULT_TAU_MAX_RATIO = 10.0
DEFAULT_PATH_COUNT = 64


@dataclass(frozen=True)
class ExpUScattering:
    tau_rms: float
    f_d: float
    tau_max: float | None = None

    def __post_init__(self):
        if not (self.tau_rms > 0 and self.f_d > 0):
            raise ParameterError("tau_rms and f_d must be positive")
        if self.tau_max is None:
            object.__setattr__(self, "tau_max", DEFAULT_TAU_MAX_RATIO * self.tau_rms)
        if self.tau_max < 5 * self.tau_rms * (1 - 1e-12):
            raise ParameterError(f"tau_max must be at least 5*tau_rms, got {self.tau_max!r}")

    @property
    def vartheta(self) -> float:
        return self.tau_max * self.f_d


@dataclass(frozen=True)
class CsfSpec:
    vartheta: float

    @property
    def underspread(self) -> bool:
        return self.vartheta < 1.0

    @property
    def regime(self) -> str:
        return "underspread" if self.underspread else "overspread"


def csf(s: ExpUScattering) -> CsfSpec:
    return CsfSpec(s.tau_max * s.f_d)


def scattering_density(s: ExpUScattering, tau, nu):
    """S(tau, nu) in 1/(s*Hz). Rejects |nu| >= f_d where the density is singular."""
    tau = np.asarray(tau, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if np.any(np.abs(nu) >= s.f_d):
        raise ParameterError("Doppler must satisfy |nu| < f_d")
    if np.any(tau < 0):
        raise ParameterError("delay must be non-negative")
    out = np.exp(-tau / s.tau_rms) / (math.pi * s.tau_rms * s.f_d * np.sqrt(1.0 - (nu / s.f_d) ** 2))
    return float(out) if out.ndim == 0 else out


def scattering_for_csf(vartheta: float, split: str = "fixed_doppler", *, f_d: float | None = None,
                       tau_rms: float | None = None, tau_max_ratio: float = DEFAULT_TAU_MAX_RATIO,
                       sigma: float | None = None, alpha: float | None = None) -> ExpUScattering:
    """Decompose a channel spread factor into (tau_rms, f_d).

    ``fixed_doppler``: f_d given, tau_rms = vartheta / (ratio * f_d).
    ``fixed_delay``: tau_rms given, f_d = vartheta / (ratio * tau_rms).
    ``matched``: also enforce sigma = alpha * tau_rms / f_d.
    """
    if not 0 < vartheta < 1:
        raise ParameterError(f"channel spread factor must lie in (0, 1), got {vartheta!r}")
    r = tau_max_ratio
    if split == "fixed_doppler":
        if not f_d:
            raise ParameterError("fixed_doppler split needs f_d")
        tr = vartheta / (r * f_d)
        fd = f_d
    elif split == "fixed_delay":
        if not tau_rms:
            raise ParameterError("fixed_delay split needs tau_rms")
        tr = tau_rms
        fd = vartheta / (r * tau_rms)
    elif split == "matched":
        if not (sigma and alpha):
            raise ParameterError("matched split needs sigma and alpha")
        tr = math.sqrt(sigma * vartheta / (r * alpha))
        fd = vartheta / (r * tr)
    else:
        raise ParameterError(f"unknown split {split!r}")
    return ExpUScattering(tr, fd, r * tr)


@dataclass(frozen=True)
class CsfSplit:
    """How a channel spread factor is turned into (tau_rms, f_d); see ``scattering_for_csf``."""

    split: str = "fixed_doppler"
    f_d: float | None = 600.0
    tau_rms: float | None = None
    tau_max_ratio: float = DEFAULT_TAU_MAX_RATIO
    alpha: float | None = None

    def scattering(self, vartheta: float, sigma: float | None = None) -> ExpUScattering:
        return scattering_for_csf(vartheta, self.split, f_d=self.f_d, tau_rms=self.tau_rms,
                                  tau_max_ratio=self.tau_max_ratio, sigma=sigma, alpha=self.alpha)


@dataclass(frozen=True)
class ChannelPaths:
    delays: np.ndarray
    dopplers: np.ndarray
    gains: np.ndarray

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.delays, dtype=float))
        v = np.atleast_1d(np.asarray(self.dopplers, dtype=float))
        g = np.atleast_1d(np.asarray(self.gains, dtype=complex))
        if not d.shape == v.shape == g.shape or d.ndim != 1:
            raise ParameterError("delays, dopplers and gains must be equal-length 1-D arrays")
        if np.any(d < 0):
            raise ParameterError("path delays must be non-negative")
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "dopplers", v)
        object.__setattr__(self, "gains", g)

    @classmethod
    def single(cls, delay: float = 0.0, doppler: float = 0.0, gain: complex = 1.0) -> "ChannelPaths":
        return cls([delay], [doppler], [gain])

    @property
    def count(self) -> int:
        return self.delays.size

    def to_text(self) -> str:
        """One path per line: delay_s, doppler_hz, gain_re, gain_im."""
        buf = io.StringIO()
        buf.write("# delay_s, doppler_hz, gain_re, gain_im\n")
        for d, v, g in zip(self.delays.tolist(), self.dopplers.tolist(), self.gains.tolist()):
            buf.write(f"{d!r}, {v!r}, {g.real!r}, {g.imag!r}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ChannelPaths":
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise ParameterError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            rows.append([float(p) for p in parts])
        if not rows:
            raise ParameterError("no paths in record")
        a = np.array(rows)
        return cls(a[:, 0], a[:, 1], a[:, 2] + 1j * a[:, 3])


def draw_paths(s: ExpUScattering, P: int, rng: np.random.Generator) -> ChannelPaths:
    """One WSSUS realisation with P paths.

    Delays are exponential(tau_rms) redrawn above tau_max, Dopplers are
    f_d*cos(theta) with uniform theta, gains are CN(0, 1/P).
    """
    if P < 1:
        raise ParameterError(f"path count must be >= 1, got {P!r}")
    delays = rng.exponential(s.tau_rms, size=P)
    bad = delays > s.tau_max
    while np.any(bad):
        delays[bad] = rng.exponential(s.tau_rms, size=int(bad.sum()))
        bad = delays > s.tau_max
    theta = rng.uniform(0.0, 2.0 * math.pi, size=P)
    dopplers = s.f_d * np.cos(theta)
    g = rng.standard_normal((2, P)) * math.sqrt(0.5 / P)
    return ChannelPaths(delays, dopplers, g[0] + 1j * g[1])


def apply_channel(paths: ChannelPaths, x: PulseTrain, grid: TimeGrid) -> SampledWaveform:
    """y(t_k) = sum_p gain_p x(t_k - delay_p) exp(j 2 pi doppler_p t_k), sampled on ``grid``.

    ``x`` stays analytic so fractional path delays are exact.
    """
    lo, hi = x.support()
    need_lo, need_hi = lo + paths.delays.min(), hi + paths.delays.max()
    if not grid.covers(need_lo, need_hi):
        raise CoverageError(
            f"grid [{grid.start:g}, {grid.stop:g}] s does not cover delayed support "
            f"[{need_lo:g}, {need_hi:g}] s")
    t = grid.times()
    y = np.zeros(t.shape, dtype=complex)
    for d, v, g in zip(paths.delays, paths.dopplers, paths.gains):
        y += g * x.evaluate(t - d) * np.exp(2j * math.pi * v * t)
    return SampledWaveform(y, grid.step, grid.start)
