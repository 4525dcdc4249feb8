"""Closed-form and quadrature SINR machinery for a time-shifted Gaussian receiver pulse.

With receiver prototype psi(t) = g(t - dt) and the exponential-U scattering
function, every energy term factors into a delay integral

    D(c) = int_0^inf exp(-tau/tau_rms) exp(-pi/sigma (tau - c)**2) dtau

and a Doppler integral

    Phi(f0) = int_{-f_d}^{f_d} exp(-sigma pi (f0 + nu)**2) / sqrt(1 - (nu/f_d)**2) dnu.

The Max-SINR delay maximises D(dt) (noise-limited regime); ``closed_form_dt``
solves that stationarity condition through the rational erfc approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize_scalar
from scipy.special import erfc, erfcx

from .channel import ExpUScattering
from .errors import ParameterError
from .hexmod import LatticeParams

NOISE_MODES = ("physical", "paper")
EQ26_VARIANTS = ("derived", "printed")

# Rational erfc approximation erfc(x/sqrt 2) ~ 2 exp(-x^2/2) / (C1 x + sqrt(C2 x^2 + 4)).
ERFC_C1 = 1.64
ERFC_C2 = 0.76
# Leading coefficient of the stationarity quadratic in z.
QUAD_A = {"derived": ERFC_C1 ** 2 - ERFC_C2, "printed": 0.88}

DEFAULT_WINDOW = (4, 4)
DEFAULT_DOPPLER_ORDER = 64


def db(x):
    return 10.0 * np.log10(x)


def undb(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


# ---------------------------------------------------------------------------
# elementary integrals
# ---------------------------------------------------------------------------

def delay_integral(sigma, tau_rms, center):
    """D(center) via the completed square; vectorised over all arguments.

    D = exp(sigma/(4 pi tau^2) - c/tau) * sqrt(sigma)/2 * erfc(sqrt(pi/sigma)(sigma/(2 pi tau) - c)).
    For a non-negative erfc argument the scaled form exp(-pi c^2/sigma) erfcx(u)
    avoids overflow of the exponential factor.
    """
    sigma, tau_rms, center = np.broadcast_arrays(
        np.asarray(sigma, dtype=float), np.asarray(tau_rms, dtype=float), np.asarray(center, dtype=float))
    u = np.sqrt(math.pi / sigma) * (sigma / (2 * math.pi * tau_rms) - center)
    out = np.empty(u.shape)
    pos = u >= 0
    out[pos] = np.exp(-math.pi * center[pos] ** 2 / sigma[pos]) * erfcx(u[pos])
    neg = ~pos
    out[neg] = np.exp(sigma[neg] / (4 * math.pi * tau_rms[neg] ** 2) - center[neg] / tau_rms[neg]) * erfc(u[neg])
    out *= 0.5 * np.sqrt(sigma)
    return float(out) if out.ndim == 0 else out


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    return _GL_CACHE[order]


def doppler_integral(sigma, f_d, center_freq, order: int = DEFAULT_DOPPLER_ORDER):
    """Phi(center_freq) with nu = f_d sin(theta), Gauss-Legendre in theta."""
    x, w = _gauss_legendre(order)
    s = np.sin(0.5 * math.pi * x)
    c = np.asarray(center_freq, dtype=float)
    arg = c[..., None] + f_d * s
    out = 0.5 * math.pi * f_d * np.sum(w * np.exp(-sigma * math.pi * arg * arg), axis=-1)
    return float(out) if out.ndim == 0 else out


def ab_decomposition(sigma, tau_rms, dt):
    """Factors a(dt) = exp(sigma/(4 pi tau^2) - dt/tau) and b(dt) = sqrt(sigma)/2 erfc(...).

    Their product is ``delay_integral(sigma, tau_rms, dt)``. ``a`` overflows once
    sigma/tau_rms^2 exceeds roughly 8900; use ``delay_integral`` there.
    """
    a = np.exp(sigma / (4 * math.pi * tau_rms ** 2) - np.asarray(dt) / tau_rms)
    b = 0.5 * math.sqrt(sigma) * erfc(math.sqrt(math.pi / sigma) * (sigma / (2 * math.pi * tau_rms) - np.asarray(dt)))
    return a, b


def erfc_approx(x):
    """Rational approximation of erfc(x/sqrt(2)) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ParameterError("erfc approximation is only valid for x > 0")
    out = 2.0 * np.exp(-0.5 * x * x) / (ERFC_C1 * x + np.sqrt(ERFC_C2 * x * x + 4.0))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# scalar maximisation
# ---------------------------------------------------------------------------

class ScalarMax(NamedTuple):
    x: float
    value: float
    flags: tuple


def maximize_scalar(f, lo: float, hi: float, n_grid: int = 64, xtol: float | None = None,
                    validate: bool = False, n_dense: int = 512) -> ScalarMax:
    """Coarse grid followed by bounded Brent/golden refinement around the best node.

    ``f`` must accept arrays. More than one strict interior local maximum on the
    coarse grid makes the function fall back to a dense-grid argmax and flag it.
    """
    xs = np.linspace(lo, hi, n_grid)
    ys = np.asarray(f(xs), dtype=float)
    flags = []
    interior = (ys[1:-1] > ys[:-2]) & (ys[1:-1] > ys[2:])
    n_peaks = int(interior.sum()) + int(ys[0] > ys[1]) + int(ys[-1] > ys[-2])
    if n_peaks > 1:
        flags.append("non_unimodal")
        xd = np.linspace(lo, hi, n_dense)
        yd = np.asarray(f(xd), dtype=float)
        i = int(np.argmax(yd))
        return ScalarMax(float(xd[i]), float(yd[i]), tuple(flags))
    i = int(np.argmax(ys))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n_grid - 1)]
    if xtol is None:
        xtol = 1e-9 * (hi - lo)
    res = minimize_scalar(lambda x: -float(f(np.array([x]))[0]), bounds=(a, b), method="bounded",
                          options={"xatol": xtol})
    x, y = float(res.x), -float(res.fun)
    if ys[i] > y:
        x, y = float(xs[i]), float(ys[i])
    if validate:
        xd = np.linspace(lo, hi, n_dense)
        yd = np.asarray(f(xd), dtype=float)
        if yd.max() > y * (1 + 1e-9) + 1e-300:
            flags.append("dense_grid_disagrees")
    return ScalarMax(x, y, tuple(flags))


# ---------------------------------------------------------------------------
# Max-SINR delay
# ---------------------------------------------------------------------------

class DelaySolution(NamedTuple):
    dt: float
    method: str  # "closed_form" or "numeric_fallback"


def ab_argmax(sigma: float, tau_rms: float, validate: bool = False) -> ScalarMax:
    """Numeric argmax over dt >= 0 of a(dt) b(dt) = D(dt)."""
    hi = sigma / (2 * math.pi * tau_rms) + 4.0 * math.sqrt(sigma / math.pi)
    return maximize_scalar(lambda d: delay_integral(sigma, tau_rms, d), 0.0, hi,
                           xtol=1e-7 * math.sqrt(sigma), validate=validate)


def closed_form_root(sigma: float, tau_rms: float, constants: str = "derived") -> float | None:
    """Closed-form stationary delay, or None when no positive root exists.

    With K = sqrt(sigma)/tau_rms and z = sqrt(2 pi/sigma)(sigma/(2 pi tau_rms) - dt)
    the approximated stationarity condition K = C1 z + sqrt(C2 z^2 + 4)
    becomes A z^2 - 2 C1 K z + (K^2 - 4) = 0. The smaller root is the
    admissible one and is positive only for K > 2.
    """
    if constants not in QUAD_A:
        raise ParameterError(f"unknown constants variant {constants!r}")
    if not (sigma > 0 and tau_rms > 0):
        raise ParameterError("sigma and tau_rms must be positive")
    A = QUAD_A[constants]
    K = math.sqrt(sigma) / tau_rms
    disc = (2 * ERFC_C1 * K) ** 2 - 4 * A * (K * K - 4)
    if disc < 0:
        return None
    z = (2 * ERFC_C1 * K - math.sqrt(disc)) / (2 * A)
    if z <= 0:
        return None
    dt = sigma / (2 * math.pi * tau_rms) - math.sqrt(sigma / (2 * math.pi)) * z
    if dt <= 0:
        return None
    return dt


def closed_form_dt(sigma: float, tau_rms: float, constants: str = "derived",
                   fallback: bool = True) -> DelaySolution:
    """Max-SINR receiver delay; falls back to the numeric argmax of a*b when K <= 2."""
    dt = closed_form_root(sigma, tau_rms, constants)
    if dt is not None:
        return DelaySolution(dt, "closed_form")
    if not fallback:
        raise ParameterError(
            f"no positive closed-form root for sqrt(sigma)/tau_rms = {math.sqrt(sigma) / tau_rms:.3g}")
    return DelaySolution(ab_argmax(sigma, tau_rms).x, "numeric_fallback")


# ---------------------------------------------------------------------------
# SINR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SinrOperatingPoint:
    params: LatticeParams
    scattering: ExpUScattering
    sigma_c2: float = 1.0
    sigma_w2: float = 0.01
    dt: float = 0.0

    def __post_init__(self):
        if not self.sigma_c2 > 0:
            raise ParameterError("symbol power must be positive")
        if not self.sigma_w2 >= 0:
            raise ParameterError("noise power must be non-negative")
        if not math.isfinite(self.dt):
            raise ParameterError("receiver delay must be finite")

    @classmethod
    def from_snr(cls, params, scattering, snr_db: float, dt: float = 0.0, sigma_c2: float = 1.0):
        return cls(params, scattering, sigma_c2, sigma_c2 * 10 ** (-snr_db / 10), dt)

    def with_dt(self, dt: float) -> "SinrOperatingPoint":
        return replace(self, dt=float(dt))


@dataclass(frozen=True)
class EnergyBreakdown:
    signal: float
    interference: float
    noise: float
    sinr_linear: float = field(init=False)
    sinr_db: float = field(init=False)

    def __post_init__(self):
        if min(self.signal, self.interference, self.noise) < 0:
            raise ParameterError("energy components must be non-negative")
        lin = self.signal / (self.interference + self.noise)
        object.__setattr__(self, "sinr_linear", float(lin))
        object.__setattr__(self, "sinr_db", float(db(lin)))


def _prefactor(op: SinrOperatingPoint) -> float:
    s = op.scattering
    return op.sigma_c2 / (math.pi * s.tau_rms * s.f_d)


def signal_energy(op: SinrOperatingPoint, dt=None, doppler_order: int = DEFAULT_DOPPLER_ORDER):
    """Useful received energy sigma_c^2 * int int S |A_{g,psi}|^2; ``dt`` may be an array."""
    dt = op.dt if dt is None else dt
    s, sig = op.scattering, op.params.sigma
    return _prefactor(op) * delay_integral(sig, s.tau_rms, dt) * doppler_integral(sig, s.f_d, 0.0, doppler_order)


def noise_energy(op: SinrOperatingPoint, mode: str = "physical", dt=None):
    """Projected noise power.

    ``physical``: sigma_w^2 * ||psi||^2 = sigma_w^2.
    ``paper``: sigma_w^2 * |A_{g,psi}(0,0)| = sigma_w^2 exp(-pi dt^2 / (2 sigma)).
    """
    dt = op.dt if dt is None else np.asarray(dt, dtype=float)
    if mode == "physical":
        return op.sigma_w2 * np.ones_like(dt, dtype=float) if np.ndim(dt) else op.sigma_w2
    if mode == "paper":
        out = op.sigma_w2 * np.exp(-math.pi * np.asarray(dt) ** 2 / (2 * op.params.sigma))
        return float(out) if np.ndim(out) == 0 else out
    raise ParameterError(f"unknown noise mode {mode!r}")


def interference_energy(op: SinrOperatingPoint, dt=None, window=DEFAULT_WINDOW,
                        exclude_coset2_origin: bool = False,
                        doppler_order: int = DEFAULT_DOPPLER_ORDER):
    """ISI/ICI energy from lattice points with |m| <= M_w, |n| <= N_w, target excluded.

    Both cosets contribute; the coset-2 point of the origin cell is kept unless
    ``exclude_coset2_origin`` is set.
    """
    dt = op.dt if dt is None else dt
    dt = np.asarray(dt, dtype=float)
    p, s = op.params, op.scattering
    M_w, N_w = window
    m = np.arange(-M_w, M_w + 1)
    n = np.arange(-N_w, N_w + 1)
    phi1 = doppler_integral(p.sigma, s.f_d, n * p.F, doppler_order)
    phi2 = doppler_integral(p.sigma, s.f_d, n * p.F + p.F / 2, doppler_order)
    d = dt[..., None]
    D1 = delay_integral(p.sigma, s.tau_rms, d - m * p.T)
    D2 = delay_integral(p.sigma, s.tau_rms, d - m * p.T - p.T / 2)
    total = D1.sum(-1) * phi1.sum() + D2.sum(-1) * phi2.sum()
    total = total - D1[..., M_w] * phi1[N_w]
    if exclude_coset2_origin:
        total = total - D2[..., M_w] * phi2[N_w]
    out = _prefactor(op) * total
    return float(out) if out.ndim == 0 else out


def interference_noise_energy(op: SinrOperatingPoint, window=DEFAULT_WINDOW, mode: str = "physical",
                              exclude_coset2_origin: bool = False,
                              doppler_order: int = DEFAULT_DOPPLER_ORDER, dt=None):
    return (interference_energy(op, dt, window, exclude_coset2_origin, doppler_order)
            + noise_energy(op, mode, dt))


def theoretical_sinr(op: SinrOperatingPoint, mode: str = "physical", window=DEFAULT_WINDOW,
                     exclude_coset2_origin: bool = False,
                     doppler_order: int = DEFAULT_DOPPLER_ORDER) -> EnergyBreakdown:
    return EnergyBreakdown(
        float(signal_energy(op, None, doppler_order)),
        float(interference_energy(op, None, window, exclude_coset2_origin, doppler_order)),
        float(noise_energy(op, mode)),
    )


def sinr_curve(op: SinrOperatingPoint, dts, mode: str = "physical", window=DEFAULT_WINDOW,
               exclude_coset2_origin: bool = False, doppler_order: int = DEFAULT_DOPPLER_ORDER):
    """Linear SINR as a function of receiver delay (vectorised over ``dts``)."""
    dts = np.asarray(dts, dtype=float)
    sig = signal_energy(op, dts, doppler_order)
    den = interference_noise_energy(op, window, mode, exclude_coset2_origin, doppler_order, dt=dts)
    return sig / den


class UpperBound(NamedTuple):
    dt_star: float
    sinr_db: float
    flags: tuple


def sinr_upper_bound(op: SinrOperatingPoint, mode: str = "physical", bracket=None,
                     window=DEFAULT_WINDOW, exclude_coset2_origin: bool = False,
                     doppler_order: int = DEFAULT_DOPPLER_ORDER, validate: bool = False) -> UpperBound:
    """Maximise the theoretical SINR over the receiver delay.

    The default search interval is [0, T/2]; past half a symbol the receiver
    pulse sits closer to the neighbouring coset than to its own symbol.
    """
    lo, hi = bracket if bracket is not None else (0.0, op.params.T / 2)

    def f(d):
        return sinr_curve(op, d, mode, window, exclude_coset2_origin, doppler_order)

    res = maximize_scalar(f, lo, hi, xtol=1e-4 * math.sqrt(op.params.sigma), validate=validate)
    return UpperBound(res.x, float(db(res.value)), res.flags)
