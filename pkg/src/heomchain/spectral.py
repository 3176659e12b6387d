"""Non-Hermitian eigenanalysis of dynamical generators.

Left/right eigenpairs in a bi-orthonormal convention, steady-state
extraction, mode classification, expansion coefficients of an initial
state, the overlap-corrected relaxation time, and localization-length
fits of mode profiles.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .liouville import unvec, vec

__all__ = [
    "DENSE_DIMENSION_CAP",
    "EigenSystem",
    "LocalizationFit",
    "ModeReport",
    "classify_modes",
    "eigendecompose",
    "expansion_coefficients",
    "localization_length",
    "reconstruct_state",
    "relaxation_time",
    "steady_state",
]

#: Largest generator dimension accepted by the dense eigensolver.
DENSE_DIMENSION_CAP = 4000

#: Overlap threshold below which a mode is not considered dominant.
DEFAULT_OVERLAP_THRESHOLD = math.exp(-1.0)


@dataclasses.dataclass(frozen=True)
class EigenSystem:
    """Bi-orthonormal eigenpairs of a generator.

    Right modes are stored as unit 2-norm columns; left modes are scaled
    so that ``vdot(left[:, i], right[:, j]) = delta_ij``.  The inner
    product is the flat complex dot product over the full system + ADO
    vector, i.e. ``sum_k conj(a[k]) * b[k]``.

    Attributes
    ----------
    eigenvalues : ndarray
        Complex rates, sorted by decreasing real part (stationary mode
        first), ties broken by increasing imaginary part.
    right, left : ndarray
        ``(dim, n_modes)`` arrays of column eigenvectors.
    left_norms : ndarray
        2-norms of the bi-orthonormalized left columns.  Since the right
        columns have unit norm, ``left_norms[i]`` is the norm
        amplification factor of mode ``i`` (large for strongly
        non-normal generators).
    generator_norm : float
        Infinity norm of the generator matrix, used to scale the
        default tolerances.
    biorthogonality_residual : float
        Largest observed deviation ``|<L_j|R_i> - delta_ij|`` (possibly
        sampled for very large systems).
    method : str
        ``"dense"`` or ``"iterative"``.
    n_sites, ado_size : int
        Shape of the underlying system + ADO space.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    left_norms: np.ndarray
    generator_norm: float
    biorthogonality_residual: float
    method: str
    n_sites: int
    ado_size: int

    @property
    def n_modes(self):
        return int(self.eigenvalues.size)

    @property
    def dimension(self):
        return int(self.right.shape[0])

    def mode_matrix(self, i):
        """Reduced system block of right mode ``i`` as an N x N matrix."""
        n = self.n_sites
        return unvec(self.right[: n * n, i])


@dataclasses.dataclass(frozen=True)
class LocalizationFit:
    """Result of an exponential fit to a site-population profile.

    ``length`` is the 1/e decay length in units of sites; ``residual``
    is the rms misfit of ``log |rho_nn|``; ``decaying`` is False when
    the profile grows with the site index (the fitted length is then
    negative or infinite).
    """

    length: float
    residual: float
    decaying: bool


@dataclasses.dataclass(frozen=True)
class ModeReport:
    """Classification of an eigensystem against an initial state.

    ``tags`` holds one of ``"SteadyState"``, ``"Dominant"``,
    ``"CoherentPair"`` or ``"Monotonic"`` per mode, aligned with
    ``EigenSystem.eigenvalues``.  ``coherent_rates`` lists the
    positive-imaginary member of each complete conjugate pair, slowest
    first.
    """

    tags: tuple
    steady_index: int
    dominant_index: int
    dominant_rate: complex
    dominant_overlap: complex
    relaxation_time: float
    already_relaxed: bool
    coherent_rates: tuple
    localization: LocalizationFit | None


def _sorted_order(eigenvalues):
    return np.lexsort((eigenvalues.imag, -eigenvalues.real))


def _cluster_indices(eigenvalues, tol):
    """Connected components of the eigenvalues under ``|l_i - l_j| < tol``.

    The sort interleaves quasi-degenerate eigenvalues with others that
    merely share a real part, so grouping must use the full complex
    distance.  A sliding real-part window keeps the pair search linear
    in practice.
    """
    n = eigenvalues.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    by_real = np.argsort(eigenvalues.real, kind="stable")
    sorted_reals = eigenvalues.real[by_real]
    start = 0
    for pos in range(1, n):
        while sorted_reals[pos] - sorted_reals[start] > tol:
            start += 1
        i = int(by_real[pos])
        window = by_real[start:pos]
        close = window[np.abs(eigenvalues[window] - eigenvalues[i]) < tol]
        for j in close:
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[rj] = ri
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _biorthonormalize(eigenvalues, left, right, tol_match):
    """Scale left columns in place so that ``<L_i|R_j> = delta_ij``.

    Nearly degenerate eigenvalues are handled blockwise; a defective or
    severely ill-conditioned cluster raises ``LinAlgError`` with a
    condition estimate.
    """
    for idx in _cluster_indices(eigenvalues, tol_match):
        cols = np.asarray(idx)
        overlap = left[:, cols].conj().T @ right[:, cols]
        if cols.size == 1:
            d = overlap[0, 0]
            if abs(d) < 1e-12:
                raise np.linalg.LinAlgError(
                    "left and right eigenvectors of eigenvalue "
                    f"{eigenvalues[cols[0]]:.6g} are numerically orthogonal "
                    f"(overlap {abs(d):.2e}); generator is near-defective"
                )
            left[:, cols[0]] /= np.conj(d)
        else:
            cond = np.linalg.cond(overlap)
            if cond > 1e10:
                raise np.linalg.LinAlgError(
                    f"near-degenerate cluster of {cols.size} eigenvalues at "
                    f"{eigenvalues[cols[0]]:.6g} cannot be bi-orthonormalized "
                    f"(condition estimate {cond:.2e})"
                )
            left[:, cols] = left[:, cols] @ np.linalg.inv(overlap).conj().T


def _biorth_residual(left, right, rng_cap=2500):
    n = right.shape[1]
    if n <= rng_cap:
        gram = left.conj().T @ right
        gram[np.diag_indices(n)] -= 1.0
        return float(np.abs(gram).max())
    cols = np.linspace(0, n - 1, 256).astype(int)
    gram = left[:, cols].conj().T @ right
    for k, c in enumerate(cols):
        gram[k, c] -= 1.0
    return float(np.abs(gram).max())


def _finalize(gen, eigenvalues, left, right, gnorm, method):
    order = _sorted_order(eigenvalues)
    eigenvalues = eigenvalues[order]
    right = np.ascontiguousarray(right[:, order])
    left = np.ascontiguousarray(left[:, order])
    right /= np.linalg.norm(right, axis=0)
    left /= np.linalg.norm(left, axis=0)
    _biorthonormalize(eigenvalues, left, right, 1e-6 * max(gnorm, 1e-300))
    residual = _biorth_residual(left, right)
    return EigenSystem(
        eigenvalues=eigenvalues,
        right=right,
        left=left,
        left_norms=np.linalg.norm(left, axis=0),
        generator_norm=float(gnorm),
        biorthogonality_residual=residual,
        method=method,
        n_sites=gen.n_sites,
        ado_size=gen.ado.size,
    )


def eigendecompose(gen, *, method="dense", k=20, sigma=None,
                   dense_cap=DENSE_DIMENSION_CAP):
    """Diagonalize a generator into bi-orthonormal left/right pairs.

    Parameters
    ----------
    gen : Generator
        Output of one of the ``build_*_generator`` functions.
    method : {"dense", "iterative"}
        ``"dense"`` computes the full spectrum (dimension capped at
        ``dense_cap``).  ``"iterative"`` computes the ``k`` eigenvalues
        nearest ``sigma`` by shift-inverted Arnoldi iteration, solving
        the left problem on the conjugate transpose and pairing
        eigenvalues by conjugation.
    k : int
        Number of modes requested in iterative mode.
    sigma : complex, optional
        Shift target.  Defaults to a small positive real number
        (``1e-6 * ||G||``), which is never an eigenvalue of a
        dissipative generator yet sits next to the stationary mode.

    Returns
    -------
    EigenSystem

    Raises
    ------
    ValueError
        Dimension exceeds the dense cap, or an iterative eigenvalue
        cannot be paired with a left eigenvalue within
        ``1e-6 * ||G||``.
    numpy.linalg.LinAlgError
        A near-degenerate cluster is too ill-conditioned to
        bi-orthonormalize.
    """
    matrix = gen.matrix
    dim = matrix.shape[0]
    gnorm = scipy.sparse.linalg.norm(matrix, np.inf)
    if method == "dense":
        if dim > dense_cap:
            raise ValueError(
                f"dense eigendecomposition limited to dimension {dense_cap}; "
                f"generator has {dim} (use method='iterative')"
            )
        w, vl, vr = scipy.linalg.eig(matrix.toarray(), left=True, right=True)
        return _finalize(gen, w, vl, vr, gnorm, "dense")
    if method != "iterative":
        raise ValueError(f"unknown method {method!r}")
    if k >= dim - 1:
        raise ValueError(
            f"iterative mode needs k < dim - 1 (k={k}, dim={dim}); "
            "use method='dense' for small generators"
        )
    if sigma is None:
        sigma = 1e-6 * max(gnorm, 1.0)
    a = matrix.tocsc()
    w, vr = scipy.sparse.linalg.eigs(a, k=k, sigma=sigma)
    wl, vl_raw = scipy.sparse.linalg.eigs(a.conj().T.tocsc(), k=k,
                                          sigma=np.conj(sigma))
    tol_match = 1e-6 * max(gnorm, 1e-300)
    wl_conj = np.conj(wl)
    used = np.zeros(k, dtype=bool)
    vl = np.empty_like(vr)
    for i in range(k):
        dist = np.abs(wl_conj - w[i])
        dist[used] = np.inf
        j = int(np.argmin(dist))
        if dist[j] > tol_match:
            raise ValueError(
                f"unpaired eigenvalue {w[i]:.6g}: nearest left-problem match "
                f"at distance {dist[j]:.3e} exceeds tolerance {tol_match:.3e}"
            )
        used[j] = True
        vl[:, i] = vl_raw[:, j]
    return _finalize(gen, w, vl, vr, gnorm, "iterative")


def steady_state(es, *, tol_zero=None):
    """Extract the unique stationary mode, normalized to unit trace.

    Parameters
    ----------
    es : EigenSystem
    tol_zero : float, optional
        Magnitude below which an eigenvalue counts as zero.  Defaults
        to ``1e-9 * ||G||``.

    Returns
    -------
    (ndarray, int)
        The N x N stationary reduced state with ``tr rho = 1``, and the
        index of the stationary mode in ``es``.

    Raises
    ------
    ValueError
        Zero or several eigenvalues within ``tol_zero`` of the origin,
        a non-decaying mode elsewhere in the spectrum, or a stationary
        mode with vanishing system trace.
    """
    scale = max(es.generator_norm, 1e-300)
    if tol_zero is None:
        tol_zero = 1e-9 * scale
    mags = np.abs(es.eigenvalues)
    hits = np.flatnonzero(mags < tol_zero)
    if hits.size != 1:
        raise ValueError(
            f"expected exactly one stationary eigenvalue within {tol_zero:.3e} "
            f"of zero, found {hits.size}"
        )
    i0 = int(hits[0])
    others = np.delete(es.eigenvalues, i0)
    if others.size and np.any(others.real > tol_zero):
        worst = others[np.argmax(others.real)]
        raise ValueError(
            f"generator has a non-decaying mode besides the stationary one: "
            f"eigenvalue {worst:.6g}"
        )
    rho = es.mode_matrix(i0)
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise ValueError("stationary mode has (near-)zero system trace")
    return rho / tr, i0


def _embed_vector(es, state):
    state = np.asarray(state)
    if state.ndim == 2:
        n = es.n_sites
        if state.shape != (n, n):
            raise ValueError(f"expected a {n} x {n} state, got {state.shape}")
        v0 = np.zeros(es.dimension, dtype=complex)
        v0[: n * n] = vec(state)
        return v0
    if state.shape != (es.dimension,):
        raise ValueError(
            f"expected a vector of length {es.dimension}, got {state.shape}"
        )
    return state.astype(complex)


def expansion_coefficients(es, state, *, reconstruct_tol=None):
    """Coefficients of a state over the unit-norm right modes.

    ``c_i = vdot(L_i, v0)`` with the bi-orthonormal left modes, so that
    ``v0 = sum_i c_i R_i`` whenever the computed modes are complete.
    ``state`` may be an N x N system matrix (auxiliary components taken
    as zero) or a full-space vector.

    When ``reconstruct_tol`` is given (dense mode only), the
    completeness residual ``||sum_i c_i R_i - v0|| / ||v0||`` is checked
    and a ``ValueError`` reports an ill-conditioned eigenbasis.
    """
    v0 = _embed_vector(es, state)
    coeffs = es.left.conj().T @ v0
    if reconstruct_tol is not None:
        if es.method != "dense":
            raise ValueError("reconstruction check requires a dense eigensystem")
        scale = max(np.linalg.norm(v0), 1e-300)
        residual = np.linalg.norm(es.right @ coeffs - v0) / scale
        if residual > reconstruct_tol:
            raise ValueError(
                f"eigenbasis reconstruction residual {residual:.3e} exceeds "
                f"{reconstruct_tol:g}; eigenbasis is ill-conditioned"
            )
    return coeffs


def reconstruct_state(es, coeffs, t):
    """Reduced state ``sum_i c_i exp(lambda_i t) R_i`` at time ``t``."""
    v = es.right @ (coeffs * np.exp(es.eigenvalues * t))
    n = es.n_sites
    return unvec(v[: n * n])


def relaxation_time(rate, overlap):
    """Overlap-corrected relaxation time of the dominant mode.

    ``tau = (1 + ln|c_d|) / |Re lambda_d|``, clamped to ``tau >= 0``.
    An overlap already at or below ``1/e`` means the mode never rises
    above the relaxation criterion; the time is 0 and the flag is set.

    Returns
    -------
    (float, bool)
        The relaxation time and an ``already_relaxed`` flag.
    """
    rate = complex(rate)
    if rate.real >= 0:
        raise ValueError(
            f"dominant eigenvalue must have a negative real part, got {rate:.6g}"
        )
    mag = abs(complex(overlap))
    if mag == 0.0:
        raise ValueError("dominant mode has zero overlap with the initial state")
    if mag <= np.exp(-1.0):
        return 0.0, True
    return max((1.0 + np.log(mag)) / abs(rate.real), 0.0), False


def localization_length(profile, *, floor=1e-12):
    """Fit ``|rho_nn| ~ a * exp(-n / xi)`` over the site index.

    The fit is a least-squares fit of ``ln |rho_nn|`` against the site
    index over the qualifying sites, with each site weighted by its
    magnitude.  The weighting matters for oscillatory eigenmodes: a
    decaying mode with an interior node has one near-zero diagonal
    entry whose logarithm would otherwise swamp the envelope slope.
    Magnitude weights make the log-space fit agree with a direct
    exponential fit of the profile itself, and pure exponentials are
    still recovered exactly (the residual is zero, so the weights do
    not move the solution).

    Parameters
    ----------
    profile : ndarray
        Either an N x N mode matrix (the magnitude of its diagonal is
        fitted) or a 1-D array of site amplitudes.
    floor : float
        Sites with magnitude at or below this floor are excluded.

    Returns
    -------
    LocalizationFit

    Raises
    ------
    ValueError
        Fewer than 3 sites qualify.
    """
    arr = np.asarray(profile)
    if arr.ndim == 2:
        arr = np.abs(np.diag(arr))
    else:
        arr = np.abs(arr)
    sites = np.arange(arr.size, dtype=float)
    mask = arr > floor
    if int(mask.sum()) < 3:
        raise ValueError(
            f"localization fit needs at least 3 sites above {floor:g}, "
            f"got {int(mask.sum())}"
        )
    x = sites[mask]
    y = np.log(arr[mask])
    w = arr[mask] / arr[mask].max()
    slope, intercept = np.polyfit(x, y, 1, w=w)
    residual = float(np.sqrt(np.mean((w * (y - (slope * x + intercept))) ** 2)))
    if slope == 0.0:
        return LocalizationFit(length=np.inf, residual=residual, decaying=False)
    return LocalizationFit(length=float(-1.0 / slope), residual=residual,
                           decaying=bool(slope < 0.0))


def classify_modes(es, initial, *, eps_overlap=DEFAULT_OVERLAP_THRESHOLD,
                   tol_imag=None, tol_zero=None, fit_localization=True):
    """Tag every mode and summarize the relaxation of an initial state.

    Tags: the unique stationary mode is ``SteadyState``; the slowest
    decaying mode whose initial-state overlap exceeds ``eps_overlap`` is
    ``Dominant``; modes with an imaginary part above ``tol_imag``
    (default ``1e-9 * ||G||``) are ``CoherentPair``; everything else is
    ``Monotonic``.

    The ``Dominant`` tag is drawn from the real-eigenvalue modes only:
    oscillatory pairs keep their ``CoherentPair`` tag (and are listed in
    ``coherent_rates``) even when they decay more slowly than the
    dominant monotonic mode, mirroring the split between relaxational
    and coherence-carrying modes in the report.  ``eps_overlap``
    defaults to ``1/e``: a mode whose initial weight already sits below
    the relaxation threshold can never set the relaxation time, so
    weakly excited slow modes do not displace the mode that actually
    governs the decay.  Pass a smaller value to surface them.

    Raises
    ------
    ValueError
        No mode passes the overlap threshold (the threshold value is
        named in the message), or the stationary mode is not unique.
    """
    coeffs = expansion_coefficients(es, initial)
    _, i0 = steady_state(es, tol_zero=tol_zero)
    scale = max(es.generator_norm, 1e-300)
    if tol_imag is None:
        tol_imag = 1e-9 * scale
    tol_pair = 1e-6 * scale
    lam = es.eigenvalues
    n = es.n_modes

    tags = np.array(["Monotonic"] * n, dtype=object)
    tags[i0] = "SteadyState"
    coherent = []
    for i in range(n):
        if i == i0 or abs(lam[i].imag) <= tol_imag:
            continue
        tags[i] = "CoherentPair"
        if lam[i].imag > tol_imag:
            dist = np.abs(lam - np.conj(lam[i]))
            dist[i] = np.inf
            dist[i0] = np.inf
            j = int(np.argmin(dist))
            if dist[j] < tol_pair:
                coherent.append(complex(lam[i]))
    coherent.sort(key=lambda z: -z.real)

    candidates = [i for i in range(n)
                  if i != i0 and tags[i] != "CoherentPair"
                  and abs(coeffs[i]) > eps_overlap]
    if not candidates:
        raise ValueError(
            f"no monotonic mode has an initial-state overlap above the "
            f"threshold {eps_overlap:g}"
        )
    i_d = max(candidates, key=lambda i: lam[i].real)
    tags[i_d] = "Dominant"
    tau, relaxed = relaxation_time(lam[i_d], coeffs[i_d])

    localization = None
    if fit_localization and es.n_sites >= 3:
        try:
            localization = localization_length(es.mode_matrix(i_d))
        except ValueError:
            localization = None

    return ModeReport(
        tags=tuple(tags),
        steady_index=i0,
        dominant_index=int(i_d),
        dominant_rate=complex(lam[i_d]),
        dominant_overlap=complex(coeffs[i_d]),
        relaxation_time=float(tau),
        already_relaxed=bool(relaxed),
        coherent_rates=tuple(coherent),
        localization=localization,
    )
