"""Bath spectral densities, correlation functions and exponential decompositions.

The bath enters the dynamics only through its correlation function

    C(tau) = (1/2pi) int_0^inf dw J(w) [n(w) e^{i w tau} + (n(w)+1) e^{-i w tau}]

(``n`` the Bose-Einstein occupation) and through sum-of-exponentials
decompositions C(tau) ~= sum_l xi_l exp(-chi_l tau) that feed the hierarchy
builders.  Three decomposition schemes live here: the Pade expansion of the
Bose function (Drude-Lorentz baths at T > 0), and the analytic four- and
two-term forms for a Lorentzian bath at zero temperature.  The rational-fit
(AAA) scheme is in :mod:`heomchain.aaa`.

Zero-temperature convention: for the analytic Lorentzian model the correlation
is C(tau) = int_{-inf}^{inf} dw J(w) e^{-i w tau} with no 1/2pi prefactor (the
2pi is part of the Lorentzian's normalization), evaluated on the half line by
:func:`correlation_direct` unless ``full_range=True``.  The half-line value
differs from the analytic decompositions by a negative-frequency tail of
relative size ~ W/(pi*w0), which is the scheme's validity condition (w0 >> W).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "Channel",
    "DrudeLorentz",
    "Lorentzian",
    "BathSpec",
    "ExponentialTerm",
    "ExponentialDecomposition",
    "bose_einstein",
    "correlation_direct",
    "channel_correlation_direct",
    "pade_bose_poles",
    "pade_decompose",
    "lorentzian_zero_t_decompose",
    "lorentzian_zero_t_rwa_decompose",
]


class Channel(enum.Enum):
    """Which part of the correlation function an exponential term carries.

    ``REAL``/``IMAG`` tag terms of the full-interaction (FullRI) splitting
    C = C_R + i C_I; ``ABSORB``/``EMIT`` tag the rotating-wave channels
    C+ (proportional to n) and C- (proportional to n+1).
    """

    REAL = "R"
    IMAG = "I"
    ABSORB = "+"
    EMIT = "-"


_FULL_RI = frozenset((Channel.REAL, Channel.IMAG))
_RWA = frozenset((Channel.ABSORB, Channel.EMIT))


@dataclass(frozen=True)
class DrudeLorentz:
    """Drude-Lorentz spectral density J(w) = 4*G*W*w / (w^2 + W^2).

    Parameters
    ----------
    coupling : float
        Overall coupling strength (Gamma), same units as energy.
    cutoff : float
        Bath relaxation rate / cutoff frequency (W), > 0.
    """

    coupling: float
    cutoff: float

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if self.cutoff <= 0:
            raise ValueError(f"cutoff must be > 0, got {self.cutoff}")

    @property
    def width(self) -> float:
        return self.cutoff

    @property
    def center(self) -> float:
        return 0.0

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        g, w = self.coupling, self.cutoff
        val = 4.0 * g * w * omega / (omega**2 + w**2)
        return val if val.ndim else float(val)


@dataclass(frozen=True)
class Lorentzian:
    """Lorentzian spectral density J(w) = (1/2pi) * G*W^2 / ((w - w0)^2 + W^2).

    Parameters
    ----------
    coupling : float
        Coupling strength Gamma.
    width : float
        Half width W of the peak (the bath relaxation rate), > 0.
    center : float
        Peak position w0 (> 0 for the zero-temperature analytic schemes,
        which further assume w0 >> W).
    """

    coupling: float
    width: float
    center: float

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if self.width <= 0:
            raise ValueError(f"width must be > 0, got {self.width}")

    @property
    def cutoff(self) -> float:
        return self.width

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        g, w, w0 = self.coupling, self.width, self.center
        val = g * w**2 / ((omega - w0) ** 2 + w**2) / (2.0 * np.pi)
        return val if val.ndim else float(val)


@dataclass(frozen=True)
class BathSpec:
    """A spectral density together with a temperature.

    ``temperature`` is in energy units (k_B = 1).  T = 0 is only meaningful
    for the analytic Lorentzian schemes; every T > 0 scheme divides by it.
    """

    spectral_density: object
    temperature: float

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")


def bose_einstein(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation 1/(e^{w/T} - 1).

    Raises on w <= 0 (the distribution pole/negative branch is never needed
    directly); T = 0 returns 0 by convention.
    """
    if omega <= 0:
        raise ValueError(f"bose_einstein requires omega > 0, got {omega}")
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(omega / temperature)


@dataclass(frozen=True)
class ExponentialTerm:
    """One term xi * exp(-chi * tau) of a correlation-function expansion.

    The ``IMAG`` channel carries an extra factor i in the total correlation
    function, i.e. C(tau) = sum_R xi e^{-chi tau} + i sum_I xi e^{-chi tau};
    ``ABSORB``/``EMIT`` terms sum directly into C+ / C-.
    """

    amplitude: complex
    rate: complex
    channel: Channel

    def __post_init__(self):
        if not (self.rate.real > 0):
            raise ValueError(
                f"decay rate must have positive real part, got {self.rate}"
            )

    @property
    def weight(self) -> complex:
        return 1j if self.channel is Channel.IMAG else 1.0

    def evaluate(self, tau):
        return self.weight * self.amplitude * np.exp(-self.rate * np.asarray(tau))


@dataclass(frozen=True)
class ExponentialDecomposition:
    """A sum-of-exponentials representation of a bath correlation function."""

    terms: tuple
    method: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        channels = {t.channel for t in self.terms}
        if not (channels <= _FULL_RI or channels <= _RWA):
            raise ValueError(
                f"cannot mix FullRI and RWA channels in one decomposition: {channels}"
            )

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def kind(self) -> str:
        channels = {t.channel for t in self.terms}
        return "rwa" if channels <= _RWA and channels else "full-ri"

    def channel_terms(self, channel: Channel) -> tuple:
        return tuple(t for t in self.terms if t.channel is channel)

    def reconstruct(self, tau):
        """Evaluate the full C(tau) implied by the terms."""
        tau = np.asarray(tau)
        total = np.zeros(tau.shape, dtype=complex)
        for t in self.terms:
            total += t.evaluate(tau)
        return total if total.ndim else complex(total)

    def channel_sum(self, tau, channel: Channel):
        """Evaluate one channel's partial sum (without the IMAG i-weight)."""
        tau = np.asarray(tau)
        total = np.zeros(tau.shape, dtype=complex)
        for t in self.channel_terms(channel):
            total += t.amplitude * np.exp(-t.rate * tau)
        return total if total.ndim else complex(total)


# ---------------------------------------------------------------------------
# direct quadrature oracles


def _check_quad(val: float, err: float, scale: float, context) -> float:
    # QUADPACK can hand back DBL_MAX with a tiny error estimate when a
    # Fourier cycle misbehaves, so sanity-check the value itself too.
    if not math.isfinite(val) or abs(val) > 1e100 or err > 1e-6 * scale:
        raise RuntimeError(
            f"correlation quadrature did not converge "
            f"(value {val:.3e}, error estimate {err:.3e}): {context}"
        )
    return val


def _fourier_quad(f, weight: str, tau: float, reltol: float, scale: float) -> float:
    """QUADPACK Fourier integral int_0^inf f(w)*cos/sin(w*tau) dw.

    Suitable for integrands with slow (power-law) decay; exponentially
    cut integrands should use :func:`_fourier_quad_finite` instead.
    """
    kwargs = dict(weight=weight, wvar=tau, epsabs=1e-13 * max(scale, 1e-300),
                  epsrel=reltol, limit=400, limlst=400, maxp1=200)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 0.0, np.inf, **kwargs)
        except integrate.IntegrationWarning as exc:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, 0.0, np.inf, **kwargs)
            return _check_quad(val, err, scale, exc)
    return _check_quad(val, err, scale, "flagged by QUADPACK")


def _fourier_quad_finite(f, weight: str, tau: float, upper: float,
                         reltol: float, scale: float) -> float:
    """Oscillatory-weight quadrature int_0^upper f(w)*cos/sin(w*tau) dw."""
    kwargs = dict(weight=weight, wvar=tau, epsabs=1e-13 * max(scale, 1e-300),
                  epsrel=reltol, limit=800, maxp1=200)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 0.0, upper, **kwargs)
        except integrate.IntegrationWarning as exc:
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, 0.0, upper, **kwargs)
            return _check_quad(val, err, scale, exc)
    return _check_quad(val, err, scale, "flagged by QUADPACK")


def _occupation_scalar(omega: float, temperature: float) -> float:
    """Bose occupation, overflow-safe for quadrature nodes at any omega > 0."""
    x = omega / temperature
    if x > 700.0:
        return math.exp(-x) if x < 745.0 else 0.0
    return 1.0 / math.expm1(x)


def _zero_limit(f, scale: float) -> float:
    """Finite part of an integrand at omega -> 0+ (one-sided evaluation)."""
    return f(1e-9 * scale)


def correlation_direct(bath: BathSpec, tau: float, *, reltol: float = 1e-10,
                       omega_cut: float | None = None,
                       full_range: bool = False) -> complex:
    """Bath correlation function by adaptive quadrature.

    For T > 0 this is the half-line integral with its 1/2pi prefactor,
    evaluated as a semi-infinite Fourier integral so the slow 1/w tail of a
    Drude-Lorentz density is summed exactly rather than truncated.  For T = 0
    (analytic Lorentzian model) the convention is C(tau) = int J e^{-i w tau} dw
    with no prefactor; ``full_range=True`` extends the integral over the whole
    real line, which is the limit in which the analytic decompositions are
    exact.

    ``omega_cut`` (default max(50W, w0 + 50W)) is only used at tau = 0, where
    the Fourier algorithm does not apply; note that for a Drude-Lorentz bath
    Re C(0+) diverges logarithmically, so the tau = 0 value is
    cutoff-dependent by nature.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    j = bath.spectral_density
    temp = bath.temperature
    w_scale = j.cutoff
    if omega_cut is None:
        omega_cut = max(50.0 * w_scale, getattr(j, "center", 0.0) + 50.0 * w_scale)
    scale = j.coupling * w_scale + 1e-300

    if temp == 0.0:
        if full_range:
            cos_part = lambda w: j(w) + j(-w)
            sin_part = lambda w: j(w) - j(-w)
        else:
            cos_part = sin_part = j
        if tau == 0.0:
            lo = -omega_cut if full_range else 0.0
            re, _ = integrate.quad(j, lo, omega_cut, epsrel=reltol, limit=400)
            return complex(re, 0.0)
        re = _fourier_quad(cos_part, "cos", tau, reltol, scale)
        im = -_fourier_quad(sin_part, "sin", tau, reltol, scale)
        return complex(re, im)

    # 2 n(w) + 1 = coth(w/2T): evaluate in that form to avoid overflow
    def sym(w):
        if w <= 0.0:
            return _zero_limit(sym, w_scale)
        return j(w) / math.tanh(0.5 * w / temp)

    if tau == 0.0:
        re, _ = integrate.quad(sym, 0.0, omega_cut, epsrel=reltol, limit=400)
        return complex(re / (2.0 * np.pi), 0.0)
    re = _fourier_quad(sym, "cos", tau, reltol, scale)
    im = -_fourier_quad(j, "sin", tau, reltol, scale)
    return complex(re, im) / (2.0 * np.pi)


def channel_correlation_direct(bath: BathSpec, tau: float, channel: Channel, *,
                               reltol: float = 1e-10) -> complex:
    """Rotating-wave channel correlation C+ (ABSORB) or C- (EMIT) by quadrature.

    C+(tau) = (1/2pi) int J n e^{+i w tau} dw,
    C-(tau) = (1/2pi) int J (n+1) e^{-i w tau} dw.
    At T = 0 the absorb channel vanishes and the emit channel reduces to
    :func:`correlation_direct`'s zero-temperature convention.
    """
    if channel not in _RWA:
        raise ValueError(f"channel must be ABSORB or EMIT, got {channel}")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    j = bath.spectral_density
    temp = bath.temperature
    if temp == 0.0:
        if channel is Channel.ABSORB:
            return 0.0 + 0.0j
        return correlation_direct(bath, tau, reltol=reltol)
    scale = j.coupling * j.cutoff + 1e-300

    def jn(w):
        if w <= 0.0:
            return _zero_limit(jn, j.cutoff)
        return j(w) * _occupation_scalar(w, temp)

    if tau == 0.0:
        omega_cut = max(50.0 * j.cutoff, getattr(j, "center", 0.0) + 50.0 * j.cutoff)
        if channel is Channel.ABSORB:
            re, _ = integrate.quad(jn, 0.0, omega_cut, epsrel=reltol, limit=400)
        else:
            def jn1(w):
                return jn(w) + j(w)
            re, _ = integrate.quad(jn1, 0.0, omega_cut, epsrel=reltol, limit=400)
        return complex(re, 0.0) / (2.0 * np.pi)

    # J*n is exponentially cut by the occupation factor, which trips the
    # infinite-range Fourier integrator; integrate it on a finite window
    # instead, placed where the occupation has decayed below 1e-20.
    upper = max(getattr(j, "center", 0.0) + 50.0 * j.cutoff, 46.0 * temp)
    re_n = _fourier_quad_finite(jn, "cos", tau, upper, reltol, scale)
    im_n = _fourier_quad_finite(jn, "sin", tau, upper, reltol, scale)
    if channel is Channel.ABSORB:
        return complex(re_n, im_n) / (2.0 * np.pi)
    re_j = _fourier_quad(j, "cos", tau, reltol, scale)
    im_j = _fourier_quad(j, "sin", tau, reltol, scale)
    return complex(re_n + re_j, -(im_n + im_j)) / (2.0 * np.pi)


# ---------------------------------------------------------------------------
# Pade decomposition of the Bose function


def pade_bose_poles(n_poles: int):
    """Poles and weights of the [N-1/N] Pade expansion of the Bose function.

    Returns (zeta, kappa) such that, with x = w/T,

        n(x) ~= 1/x - 1/2 + sum_l 2*kappa_l*x / (x^2 + zeta_l^2).

    Both come from symmetric tridiagonal eigenproblems; the weights are
    accumulated as interlaced ratios to stay in floating-point range.
    """
    n = int(n_poles)
    if n < 0:
        raise ValueError("n_poles must be >= 0")
    if n == 0:
        return np.empty(0), np.empty(0)

    jj = np.arange(1, 2 * n)
    off = 1.0 / np.sqrt((2 * jj + 1.0) * (2 * jj + 3.0))
    ev = eigh_tridiagonal(np.zeros(2 * n), off, eigvals_only=True)
    pos = np.sort(ev[ev > 1e-14])
    if pos.size != n:
        raise RuntimeError(f"expected {n} positive eigenvalues, got {pos.size}")
    zeta = np.sort(2.0 / pos)

    if n == 1:
        zeta_p = np.empty(0)
    else:
        jp = np.arange(1, 2 * n - 1)
        offp = 1.0 / np.sqrt((2 * jp + 3.0) * (2 * jp + 5.0))
        evp = eigh_tridiagonal(np.zeros(2 * n - 1), offp, eigvals_only=True)
        posp = np.sort(evp[evp > 1e-10 * np.max(np.abs(evp))])
        if posp.size != n - 1:
            raise RuntimeError(
                f"expected {n - 1} positive secondary eigenvalues, got {posp.size}"
            )
        zeta_p = np.sort(2.0 / posp)

    z2 = zeta**2
    zp2 = zeta_p**2
    kappa = np.empty(n)
    prefactor = 0.5 * n * (2 * n + 3.0)
    for i in range(n):
        acc = prefactor
        # interlacing zeta_k < zeta'_k < zeta_{k+1} keeps each ratio O(1)
        for k in range(n - 1):
            den_idx = k if k < i else k + 1
            acc *= (zp2[k] - z2[i]) / (z2[den_idx] - z2[i])
        kappa[i] = acc
    return zeta, kappa


def pade_bose_function(x, zeta: np.ndarray, kappa: np.ndarray):
    """Evaluate the Pade approximant of the Bose function at x = w/T."""
    x = np.asarray(x, dtype=float)
    val = 1.0 / x - 0.5
    for z, k in zip(zeta, kappa):
        val = val + 2.0 * k * x / (x**2 + z**2)
    return val


def pade_decompose(coupling: float, cutoff: float, temperature: float,
                   n_terms: int) -> ExponentialDecomposition:
    """Pade sum-of-exponentials for a Drude-Lorentz bath at T > 0.

    The first term carries the spectral-density pole,
    xi_1 = Gamma*W*(cot(W/2T) - i) at rate W; the remaining n_terms - 1 carry
    the Pade poles of the Bose function, xi_l = -4*Gamma*W*kappa*zeta*T^2 /
    (W^2 - (zeta*T)^2) at rates zeta_l*T.  All terms are tagged REAL: the
    rates are real so no separate imaginary-channel splitting is needed, and
    the single complex amplitude of the first term carries Im C.
    """
    if temperature <= 0:
        raise ValueError(f"pade_decompose requires T > 0, got {temperature}")
    if n_terms < 1:
        raise ValueError(f"n_terms must be >= 1, got {n_terms}")
    if cutoff <= 0:
        raise ValueError(f"cutoff must be > 0, got {cutoff}")
    g, w, t = float(coupling), float(cutoff), float(temperature)

    half = w / (2.0 * t)
    s = math.sin(half)
    if abs(s) < 1e-12:
        raise ValueError(
            f"cutoff W = {w} sits on a Matsubara frequency of T = {t}; "
            "cot(W/2T) is singular"
        )
    terms = [ExponentialTerm(g * w * (math.cos(half) / s - 1j), w + 0j,
                             Channel.REAL)]

    zeta, kappa = pade_bose_poles(n_terms - 1)
    for z, k in zip(zeta, kappa):
        rate = z * t
        denom = w**2 - rate**2
        if abs(denom) < 1e-12 * max(w**2, rate**2):
            raise ValueError(
                f"cutoff W = {w} collides with Pade pole zeta*T = {rate}"
            )
        amp = -4.0 * g * w * k * z * t**2 / denom
        terms.append(ExponentialTerm(amp + 0j, rate + 0j, Channel.REAL))
    return ExponentialDecomposition(tuple(terms), method="pade")


# ---------------------------------------------------------------------------
# analytic Lorentzian decompositions at zero temperature


def lorentzian_zero_t_decompose(coupling: float, width: float,
                                center: float) -> ExponentialDecomposition:
    """Four-term real/imaginary splitting of the zero-T Lorentzian correlation.

    Exact for the full-line model integral; the sum collapses to
    (Gamma*W/2) e^{-W tau} e^{-i w0 tau}.  Validity against the physical
    half-line correlation requires w0 >> W.
    """
    if center <= 0:
        raise ValueError(f"center frequency must be > 0, got {center}")
    if width <= 0:
        raise ValueError(f"width must be > 0, got {width}")
    g, w, w0 = float(coupling), float(width), float(center)
    a = g * w / 4.0
    terms = (
        ExponentialTerm(a + 0j, complex(w, w0), Channel.REAL),
        ExponentialTerm(a + 0j, complex(w, -w0), Channel.REAL),
        ExponentialTerm(-1j * a, complex(w, w0), Channel.IMAG),
        ExponentialTerm(+1j * a, complex(w, -w0), Channel.IMAG),
    )
    return ExponentialDecomposition(terms, method="lorentzian-zero-t")


def lorentzian_zero_t_rwa_decompose(coupling: float, width: float,
                                    center: float) -> ExponentialDecomposition:
    """Rotating-wave channels of the zero-T Lorentzian correlation.

    The absorb channel is empty at zero temperature (kept as an explicit
    zero-amplitude term so both hierarchy channels exist); the emit channel
    carries the full correlation, xi = Gamma*W/2 at rate W + i w0.
    """
    if center <= 0:
        raise ValueError(f"center frequency must be > 0, got {center}")
    if width <= 0:
        raise ValueError(f"width must be > 0, got {width}")
    g, w, w0 = float(coupling), float(width), float(center)
    terms = (
        ExponentialTerm(0j, complex(w, -w0), Channel.ABSORB),
        ExponentialTerm(g * w / 2.0 + 0j, complex(w, w0), Channel.EMIT),
    )
    return ExponentialDecomposition(terms, method="lorentzian-zero-t-rwa")
