"""Barycentric rational fits and the channel decomposition they induce.

Fits the odd/even extensions of a spectral density and the even
extension of the thermal occupation on a mirrored frequency grid, then
assembles absorb/emit exponential terms for the two-time correlation
channels by closing the Fourier integrals over the fitted poles.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np
from scipy.interpolate import AAA

from .bath import (Channel, ExponentialDecomposition, ExponentialTerm,
                   bose_einstein, channel_correlation_direct)

__all__ = [
    "PoleSet",
    "aaa_fit",
    "channel_reconstruction_errors",
    "mirrored_grid",
    "rwa_correlation_decompose_aaa",
]

#: Residue floor (relative to max |f|) below which a pole is discarded
#: as a spurious Froissart doublet.
FROISSART_FLOOR = 1e-13

#: Relative asymmetry above which a fit of real data is rejected
#: instead of being conjugate-symmetrized.
CONJUGATION_TOL = 1e-8


@dataclasses.dataclass(frozen=True)
class PoleSet:
    """Pole/residue form of a barycentric rational fit of real data.

    Poles are closed under conjugation (enforced by symmetrizing the
    raw fit) and sorted by increasing imaginary part.  ``evaluate``
    uses the underlying barycentric form, which is numerically stable
    also near the sampled interval; ``partial_fractions`` evaluates
    ``sum_j r_j / (z - p_j)``.

    ``achieved_error`` is the maximum fit error on the sample grid
    relative to ``max |f|``.
    """

    poles: np.ndarray
    residues: np.ndarray
    achieved_error: float
    scale: float
    _eval: object = dataclasses.field(repr=False, compare=False)

    @property
    def n_poles(self):
        return int(self.poles.size)

    def upper(self):
        """Poles and residues in the upper half plane."""
        mask = self.poles.imag > 0
        return self.poles[mask], self.residues[mask]

    def evaluate(self, z):
        return self._eval(z)

    def partial_fractions(self, z):
        z = np.asarray(z, dtype=complex)
        return (self.residues / (z[..., None] - self.poles)).sum(axis=-1)


def _symmetrize(poles, residues, scale, *, warn_real=True):
    """Pair upper/lower poles of a real-data fit and average the pairs."""
    if poles.size == 0:
        return poles, residues
    pole_scale = np.abs(poles).max()
    near_real = np.abs(poles.imag) < 1e-12 * pole_scale
    if np.any(near_real) and warn_real:
        warnings.warn(
            f"{int(near_real.sum())} fitted pole(s) on the real axis "
            "(spurious for a smooth integrand); they are kept but will "
            "be rejected by decompositions needing decaying exponentials",
            stacklevel=3,
        )
    upper = np.flatnonzero(~near_real & (poles.imag > 0))
    lower = np.flatnonzero(~near_real & (poles.imag < 0))
    if upper.size != lower.size:
        raise ValueError(
            f"fit of real data has {upper.size} upper-half poles but "
            f"{lower.size} lower-half poles; cannot symmetrize"
        )
    new_p = [complex(poles[i].real, 0.0) for i in np.flatnonzero(near_real)]
    new_r = [complex(residues[i].real, 0.0) for i in np.flatnonzero(near_real)]
    taken = np.zeros(poles.size, dtype=bool)
    candidates = np.ones(poles.size, dtype=bool)
    candidates[lower] = False
    for i in upper:
        dist = np.abs(np.conj(poles) - poles[i])
        dist[taken] = np.inf
        dist[candidates] = np.inf
        j = int(np.argmin(dist))
        if dist[j] > CONJUGATION_TOL * pole_scale:
            raise ValueError(
                f"pole {poles[i]:.6g} has no conjugate partner within "
                f"{CONJUGATION_TOL:g} * {pole_scale:.3g} (nearest at "
                f"distance {dist[j]:.3e}); fit is not conjugate-symmetric"
            )
        taken[j] = True
        p = 0.5 * (poles[i] + np.conj(poles[j]))
        r = 0.5 * (residues[i] + np.conj(residues[j]))
        new_p.extend([p, np.conj(p)])
        new_r.extend([r, np.conj(r)])
    new_p = np.asarray(new_p, dtype=complex)
    new_r = np.asarray(new_r, dtype=complex)
    order = np.lexsort((new_p.real, new_p.imag))
    return new_p[order], new_r[order]


def aaa_fit(omega, values, *, tol=1e-9, max_degree=99):
    """Greedy barycentric rational fit with pole/residue extraction.

    Parameters
    ----------
    omega : array_like
        Real sample points (at least 4).
    values : array_like
        Real sample values.
    tol : float
        Target maximum error relative to ``max |values|``.
    max_degree : int
        Degree cap; if reached before ``tol``, the best-effort fit is
        returned and its ``achieved_error`` reports the miss.

    Returns
    -------
    PoleSet

    Notes
    -----
    Froissart doublets (residue magnitude below ``1e-13 * max |f|``)
    are pruned, conjugate symmetry is enforced exactly by averaging
    upper/lower pole pairs, and poles that land on the real axis are
    flagged with a warning.
    """
    omega = np.asarray(omega, dtype=float)
    values = np.asarray(values, dtype=float)
    if omega.ndim != 1 or omega.size < 4 or omega.shape != values.shape:
        raise ValueError("need >= 4 real samples with matching shapes")
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = float(np.abs(values).max())
    if scale == 0.0:
        fit = AAA(omega, values, rtol=0.1, max_terms=2)
        empty = np.empty(0, dtype=complex)
        return PoleSet(poles=empty, residues=empty, achieved_error=0.0,
                       scale=0.0, _eval=fit)
    with warnings.catch_warnings():
        # degree exhaustion is reported through achieved_error instead
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = AAA(omega, values, rtol=tol, max_terms=max_degree + 1)
    achieved = float(np.abs(fit(omega) - values).max() / scale)
    poles = fit.poles()
    residues = fit.residues()
    keep = np.abs(residues) > FROISSART_FLOOR * scale
    poles, residues = _symmetrize(poles[keep], residues[keep], scale)
    return PoleSet(poles=poles, residues=residues, achieved_error=achieved,
                   scale=scale, _eval=fit)


def _parity_fit(pos, values, *, tol, max_degree, odd=False):
    """Rational fit of a definite-parity function, exact in its parity.

    An even function f(w) = h(w**2) (odd: f(w) = w * h(w**2)) is fitted
    through ``h`` in the squared variable s = w**2, so the lifted pole
    set is closed under both conjugation and the reflection w -> -w *by
    construction*: every s-pole s_k with residue R_k lifts to the pair
    +-q, q = sqrt(s_k), with residues +-R_k/(2q) (even) or R_k/2 at
    both (odd).  Fitting the mirrored extension directly instead breaks
    the reflection symmetry at the fit-tolerance level, which roughly
    doubles the number of distinct decay rates downstream.

    ``pos`` must be strictly positive samples; ``values`` the function
    values there (the negative side is implied by parity).
    """
    pos = np.asarray(pos, dtype=float)
    values = np.asarray(values, dtype=float)
    if pos.ndim != 1 or pos.size < 4 or np.any(pos <= 0):
        raise ValueError("need >= 4 strictly positive sample points")
    hvals = values / pos if odd else values
    s_grid = pos * pos
    scale = float(np.abs(values).max())
    hscale = float(np.abs(hvals).max())
    if scale == 0.0:
        fit = AAA(s_grid, hvals, rtol=0.1, max_terms=2)
        empty = np.empty(0, dtype=complex)
        return PoleSet(poles=empty, residues=empty, achieved_error=0.0,
                       scale=0.0, _eval=fit)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        fit = AAA(s_grid, hvals, rtol=tol, max_terms=max_degree + 1)
    s_poles = fit.poles()
    s_res = fit.residues()
    keep = np.abs(s_res) > FROISSART_FLOOR * hscale
    s_poles, s_res = _symmetrize(s_poles[keep], s_res[keep], hscale,
                                 warn_real=False)
    poles = []
    residues = []
    for sp, sr in zip(s_poles, s_res):
        q = np.sqrt(complex(sp))
        if q.imag < 0:
            q = -q
        if odd:
            poles.extend([q, -q])
            residues.extend([0.5 * sr, 0.5 * sr])
        else:
            poles.extend([q, -q])
            residues.extend([0.5 * sr / q, -0.5 * sr / q])
    poles = np.asarray(poles, dtype=complex)
    residues = np.asarray(residues, dtype=complex)
    order = np.lexsort((poles.real, poles.imag))

    if odd:
        def evaluate(z, _f=fit):
            z = np.asarray(z, dtype=complex)
            return z * _f(z * z)
    else:
        def evaluate(z, _f=fit):
            z = np.asarray(z, dtype=complex)
            return _f(z * z)

    achieved = float(np.abs(evaluate(pos) - values).max() / scale)
    return PoleSet(poles=poles[order], residues=residues[order],
                   achieved_error=achieved, scale=scale, _eval=evaluate)


def mirrored_grid(omega_max, *, floor, n=2000):
    """Symmetric sample grid on [-omega_max, omega_max] avoiding zero.

    Half the points per side are log-spaced from ``floor`` (resolving a
    possible 1/|omega| divergence of the occupation), half linear up to
    ``omega_max`` (resolving peaks and tails).
    """
    if not 0 < floor < omega_max:
        raise ValueError("need 0 < floor < omega_max")
    half = max(n // 2, 8)
    n_log = half // 2
    pos = np.unique(np.concatenate([
        np.geomspace(floor, omega_max, n_log),
        np.linspace(floor, omega_max, half - n_log),
    ]))
    return np.concatenate([-pos[::-1], pos])


def _merge_equal_rates(raw, tol):
    """Sum amplitudes of terms whose rates agree within ``tol``."""
    raw.sort(key=lambda ar: (round(ar[1].real / tol), round(ar[1].imag / tol)))
    merged = []
    for amp, rate in raw:
        if merged and abs(rate - merged[-1][1]) < tol:
            prev_amp, prev_rate = merged[-1]
            merged[-1] = (prev_amp + amp, prev_rate)
        else:
            merged.append((amp, rate))
    return merged


def rwa_correlation_decompose_aaa(bath, tol=3e-4, *, n_samples=2000,
                                  omega_floor=None, omega_max=None,
                                  max_degree=60):
    """Exponential decomposition of both correlation channels by pole fits.

    Fits three real extensions of definite parity -- the odd and even
    extensions of the spectral density and the even extension of the
    occupation -- each with its parity enforced exactly (see
    ``_parity_fit``), then closes the channel Fourier integrals over
    the fitted poles.  Each upper/lower pole pair contributes one
    decaying exponential per closure direction to each channel; equal
    rates are merged (tolerance ``1e-10 * W``) and conjugate groups of
    rates whose amplitudes all vanish are dropped.

    Parameters
    ----------
    bath : BathSpec
        Must have ``temperature > 0`` (a spectral density that does not
        vanish at zero frequency makes the thermal channel integrals
        infrared-divergent, so only densities with J(0) = 0 are
        meaningful here).
    tol : float
        Relative fit tolerance per extension.  Channel reconstruction
        errors land within about ``10 * tol`` of direct quadrature,
        relative to each channel's own scale; see
        :func:`channel_reconstruction_errors`.
    n_samples : int
        Points on the mirrored grid.
    omega_floor : float, optional
        Smallest sampled |omega|, which also bounds from below where
        the fitted pole ladders may accumulate.  Default
        ``0.07 * min(W, T)``: deep enough that closure error stays
        around ``10 * tol`` for moderate temperatures, shallow enough
        that ladder length (and hence term count) stays small.
    omega_max : float, optional
        Largest sampled |omega| (default ``center + 50 W``).
    max_degree : int
        Degree cap per fit.

    Returns
    -------
    ExponentialDecomposition
        With ``kind == "rwa"`` and method ``"aaa"``.
    """
    if bath.temperature <= 0.0:
        raise ValueError(
            "pole-fit channel decomposition needs temperature > 0; the "
            "zero-temperature Lorentzian has an analytic decomposition"
        )
    j = bath.spectral_density
    temp = bath.temperature
    width = j.cutoff
    center = getattr(j, "center", 0.0)
    if omega_floor is None:
        omega_floor = 0.07 * min(width, temp)
    if omega_max is None:
        omega_max = center + 50.0 * width
    grid = mirrored_grid(omega_max, floor=omega_floor, n=n_samples)
    pos = grid[grid > 0]

    j_pos = np.array([j(w) for w in pos])
    n_pos = np.array([bose_einstein(w, temp) for w in pos])

    # The three extensions have definite parity (odd J, even J, even
    # n^eq), so each is fitted with that parity built in; the mirrored
    # half of the grid is implied.  See _parity_fit.
    fo = _parity_fit(pos, j_pos, tol=tol, max_degree=max_degree, odd=True)
    fe = _parity_fit(pos, j_pos, tol=tol, max_degree=max_degree)
    fn = _parity_fit(pos, n_pos, tol=tol, max_degree=max_degree)
    for name, fit in (("odd density", fo), ("even density", fe),
                      ("occupation", fn)):
        if fit.n_poles and np.abs(fit.poles.imag).min() < 1e-8 * width:
            raise ValueError(
                f"{name} fit produced a pole on the real axis; no decaying "
                "exponential representation exists (adjust tol or the grid)"
            )

    quarter = 0.25j
    plus_raw = []
    minus_raw = []

    def emit(sink, amp, rate):
        sink.append((complex(amp), complex(rate)))

    pe, re_ = fe.upper()
    for p, r in zip(pe, re_):
        q, rq = np.conj(p), np.conj(r)
        emit(plus_raw, quarter * r * fn.evaluate(p), -1j * p)
        emit(plus_raw, -quarter * rq * fn.evaluate(q), 1j * q)
        emit(minus_raw, quarter * r * (fn.evaluate(p) + 1.0), -1j * p)
        emit(minus_raw, -quarter * rq * (fn.evaluate(q) + 1.0), 1j * q)
    po, ro = fo.upper()
    for p, r in zip(po, ro):
        q, rq = np.conj(p), np.conj(r)
        emit(plus_raw, quarter * r * fn.evaluate(p), -1j * p)
        emit(plus_raw, quarter * rq * fn.evaluate(q), 1j * q)
        emit(minus_raw, -quarter * r * (fn.evaluate(p) + 1.0), -1j * p)
        emit(minus_raw, -quarter * rq * (fn.evaluate(q) + 1.0), 1j * q)
    pn, rn = fn.upper()
    for p, r in zip(pn, rn):
        q, rq = np.conj(p), np.conj(r)
        emit(plus_raw, quarter * (fo.evaluate(p) + fe.evaluate(p)) * r, -1j * p)
        emit(plus_raw, quarter * (fo.evaluate(q) - fe.evaluate(q)) * rq, 1j * q)
        # note the (even - odd) order: closing the even/odd split over the
        # upper half plane gives [Je~ - Jo~](p) here, and only this order
        # preserves the identity  C-(t) = conj(C+(t)) + FT[J](t)
        emit(minus_raw, quarter * (fe.evaluate(p) - fo.evaluate(p)) * r, -1j * p)
        emit(minus_raw, -quarter * (fo.evaluate(q) + fe.evaluate(q)) * rq, 1j * q)

    merge_tol = 1e-10 * width
    plus = _merge_equal_rates(plus_raw, merge_tol)
    minus = _merge_equal_rates(minus_raw, merge_tol)

    # Drop a rate only together with its conjugate in both channels, so
    # the absorb/emit partner structure stays closed.
    amax = max((abs(a) for a, _ in plus + minus), default=0.0)
    prune = 1e-14 * amax

    def group_key(rate):
        return (round(rate.real / merge_tol), round(abs(rate.imag) / merge_tol))

    strong = set()
    for amp, rate in plus + minus:
        if abs(amp) >= prune:
            strong.add(group_key(rate))

    terms = []
    for channel, pairs in ((Channel.ABSORB, plus), (Channel.EMIT, minus)):
        for amp, rate in pairs:
            if group_key(rate) in strong:
                terms.append(ExponentialTerm(amplitude=amp, rate=rate,
                                             channel=channel))
    return ExponentialDecomposition(terms=tuple(terms), method="aaa")


def channel_reconstruction_errors(decomposition, bath, taus, *, reltol=1e-8):
    """Per-channel max |reconstruction - quadrature| over a time grid.

    Returns a dict ``{Channel.ABSORB: err, Channel.EMIT: err}`` of
    absolute errors, the oracle being direct quadrature of the channel
    integrals.
    """
    errors = {}
    for channel in (Channel.ABSORB, Channel.EMIT):
        worst = 0.0
        for tau in taus:
            exact = channel_correlation_direct(bath, float(tau), channel,
                                               reltol=reltol)
            approx = decomposition.channel_sum(float(tau), channel)
            worst = max(worst, abs(approx - exact))
        errors[channel] = worst
    return errors
