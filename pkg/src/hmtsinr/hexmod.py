"""Hexagonal lattice geometry, parameter matching, HMT modulator and projection demodulator.

The hexagonal lattice is the union of two rectangular cosets. Coset 1 holds
points (m*T, n*F); coset 2 is coset 1 shifted by (T/2, F/2). Symbol density is
therefore 2/(T*F), which is the signalling efficiency ``rho`` used when
picking the matching coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, ParameterError
from .pulse import GRID_HALF_WIDTH, GaussianPulse, SampledWaveform, TimeGrid, eval_pulse

# Matching coefficient alpha versus signalling efficiency rho.
ALPHA_TABLE = ((0.5, 2.25), (1.0, 2.00), (2.0, 1.90), (4.0, 1.85))

SQRT3 = math.sqrt(3.0)


def alpha_for_rho(rho: float) -> float:
    """Tabulated alpha, linearly interpolated in log2(rho) and clamped at the ends."""
    if not rho > 0:
        raise ParameterError(f"rho must be positive, got {rho!r}")
    xs = [math.log2(r) for r, _ in ALPHA_TABLE]
    ys = [a for _, a in ALPHA_TABLE]
    return float(np.interp(math.log2(rho), xs, ys))


@dataclass(frozen=True)
class LatticeParams:
    T: float
    F: float
    sigma: float
    rho: float = float("nan")

    def __post_init__(self):
        for name in ("T", "F", "sigma"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        if math.isnan(self.rho):
            object.__setattr__(self, "rho", 2.0 / (self.T * self.F))

    @classmethod
    def hexagonal(cls, T: float, F: float) -> "LatticeParams":
        """Lattice whose pulse width makes the six nearest neighbours equidistant."""
        return cls(T, F, T / (SQRT3 * F))

    @property
    def pulse(self) -> GaussianPulse:
        return GaussianPulse(self.sigma)

    def point(self, m: int, n: int, coset: int = 1) -> "LatticePoint":
        return LatticePoint(m, n, coset, self)


@dataclass(frozen=True)
class LatticePoint:
    m: int
    n: int
    coset: int
    params: LatticeParams = field(repr=False)

    def __post_init__(self):
        if self.coset not in (1, 2):
            raise ParameterError(f"coset must be 1 or 2, got {self.coset!r}")

    @property
    def time_offset(self) -> float:
        return self.m * self.params.T + (self.coset - 1) * self.params.T / 2

    @property
    def freq_offset(self) -> float:
        return self.n * self.params.F + (self.coset - 1) * self.params.F / 2


def match_parameters(tau_rms: float, f_d: float, rho: float, mode: str = "eq8") -> LatticeParams:
    """Pick (T, F, sigma) matched to an exponential-delay / U-Doppler channel.

    sigma = alpha(rho) * tau_rms / f_d. ``mode`` fixes the T/F ratio:
    ``eq7`` uses sqrt(3)*T/F = sigma, ``eq8`` uses T/(sqrt(3)*F) = sigma.
    The absolute scale comes from the density convention rho = 2/(T*F).
    """
    if not (tau_rms > 0 and f_d > 0 and rho > 0):
        raise ParameterError("tau_rms, f_d and rho must all be positive")
    sigma = alpha_for_rho(rho) * tau_rms / f_d
    tf = 2.0 / rho
    if mode == "eq8":
        t_over_f = SQRT3 * sigma
    elif mode == "eq7":
        t_over_f = sigma / SQRT3
    else:
        raise ParameterError(f"unknown matching mode {mode!r} (expected 'eq7' or 'eq8')")
    T = math.sqrt(tf * t_over_f)
    F = tf / T
    return LatticeParams(T, F, sigma, rho)


@dataclass(frozen=True)
class SymbolFrame:
    """Data symbols on both cosets.

    Element ``coset1[i, j]`` sits at lattice index (m_start + i, n_start + j).
    """

    coset1: np.ndarray
    coset2: np.ndarray
    symbol_power: float = 1.0
    m_start: int = 0
    n_start: int = 0

    def __post_init__(self):
        c1 = np.atleast_2d(np.asarray(self.coset1, dtype=complex))
        c2 = np.atleast_2d(np.asarray(self.coset2, dtype=complex))
        if c1.shape != c2.shape or c1.ndim != 2:
            raise ParameterError(f"coset shapes differ: {c1.shape} vs {c2.shape}")
        object.__setattr__(self, "coset1", c1)
        object.__setattr__(self, "coset2", c2)

    @property
    def shape(self):
        return self.coset1.shape

    @classmethod
    def zeros(cls, M: int, N: int, m_start: int = 0, n_start: int = 0) -> "SymbolFrame":
        z = np.zeros((M, N), dtype=complex)
        return cls(z, z.copy(), 1.0, m_start, n_start)

    @classmethod
    def random_qpsk(cls, M: int, N: int, rng: np.random.Generator, symbol_power: float = 1.0,
                    m_start: int = 0, n_start: int = 0) -> "SymbolFrame":
        amp = math.sqrt(symbol_power / 2.0)

        def draw():
            bits = rng.integers(0, 2, size=(2, M, N))
            return amp * ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1))

        return cls(draw(), draw(), symbol_power, m_start, n_start)

    def points(self, params: LatticeParams):
        """Yield (LatticePoint, symbol) for every entry, coset 1 first."""
        M, N = self.shape
        for coset, arr in ((1, self.coset1), (2, self.coset2)):
            for i in range(M):
                for j in range(N):
                    yield params.point(self.m_start + i, self.n_start + j, coset), arr[i, j]

    def with_symbol(self, m: int, n: int, coset: int, value: complex) -> "SymbolFrame":
        c1, c2 = self.coset1.copy(), self.coset2.copy()
        (c1 if coset == 1 else c2)[m - self.m_start, n - self.n_start] = value
        return SymbolFrame(c1, c2, self.symbol_power, self.m_start, self.n_start)


@dataclass(frozen=True)
class PulseTrain:
    """Weighted sum of time-frequency shifted Gaussians, kept in analytic form.

    ``x(t) = sum_k coeff[k] * g(t - t_off[k]) * exp(j 2 pi f_off[k] t)``
    """

    coeff: np.ndarray
    t_off: np.ndarray
    f_off: np.ndarray
    sigma: float

    def __call__(self, t):
        return self.evaluate(t)

    def evaluate(self, t, chunk: int = 64) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=complex)
        pulse = GaussianPulse(self.sigma)
        for s in range(0, self.coeff.size, chunk):
            c = self.coeff[s:s + chunk, None]
            to = self.t_off[s:s + chunk, None]
            fo = self.f_off[s:s + chunk, None]
            out += np.sum(c * eval_pulse(pulse, t[None, :] - to) * np.exp(2j * math.pi * fo * t[None, :]),
                          axis=0)
        return out

    def support(self):
        """(earliest, latest) instant carrying non-negligible energy."""
        half = GRID_HALF_WIDTH * math.sqrt(self.sigma)
        return float(self.t_off.min() - half), float(self.t_off.max() + half)


def transmit_train(frame: SymbolFrame, params: LatticeParams, pulse: GaussianPulse | None = None,
                   keep_zeros: bool = False) -> PulseTrain:
    """Analytic description of the HMT transmit signal for ``frame``."""
    pulse = pulse or params.pulse
    coeff, t_off, f_off = [], [], []
    for pt, c in frame.points(params):
        if c == 0 and not keep_zeros:
            continue
        coeff.append(c)
        t_off.append(pt.time_offset)
        f_off.append(pt.freq_offset)
    return PulseTrain(np.asarray(coeff, dtype=complex), np.asarray(t_off, dtype=float),
                      np.asarray(f_off, dtype=float), pulse.sigma)


def modulate(frame: SymbolFrame, params: LatticeParams, pulse: GaussianPulse | None = None,
             grid: TimeGrid | None = None, sample_interval: float | None = None) -> SampledWaveform:
    """Sample the HMT signal sum_i sum_{m,n} c g(t - t_off) exp(j 2 pi f_off t).

    Either ``grid`` or ``sample_interval`` must be given; in the latter case
    the grid is sized to cover every pulse.
    """
    pulse = pulse or params.pulse
    train = transmit_train(frame, params, pulse, keep_zeros=True)
    half = GRID_HALF_WIDTH * pulse.width
    if grid is None:
        if sample_interval is None:
            raise ParameterError("modulate needs a grid or a sample interval")
        lo, hi = train.support()
        grid = TimeGrid.spanning(lo, hi, sample_interval)
    else:
        missing = [(pt.m, pt.n, pt.coset) for pt, _ in frame.points(params)
                   if not grid.covers(pt.time_offset - half, pt.time_offset + half)]
        if missing:
            raise CoverageError(f"grid [{grid.start:g}, {grid.stop:g}] s truncates lattice points {missing}")
    keep = train.coeff != 0
    train = PulseTrain(train.coeff[keep], train.t_off[keep], train.f_off[keep], train.sigma)
    return SampledWaveform(train.evaluate(grid.times()), grid.step, grid.start)


@dataclass(frozen=True)
class ReceiverPulse:
    """Receiver prototype psi(t) = g(t - dt)."""

    pulse: GaussianPulse
    dt: float = 0.0


def demodulate(r: SampledWaveform, point: LatticePoint, proto: ReceiverPulse) -> complex:
    """Project ``r`` onto psi_{m,n}^i(t) = psi(t - t_off) exp(j 2 pi f_off t)."""
    center = point.time_offset + proto.dt
    half = GRID_HALF_WIDTH * proto.pulse.width
    if not r.grid.covers(center - half, center + half):
        raise CoverageError(
            f"waveform [{r.grid.start:g}, {r.grid.stop:g}] s does not cover the projection "
            f"support of point {(point.m, point.n, point.coset)}")
    t = r.times()
    psi = eval_pulse(proto.pulse, t - center) * np.exp(2j * math.pi * point.freq_offset * t)
    return complex(np.sum(r.samples * np.conj(psi)) * r.sample_interval)
