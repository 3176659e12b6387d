"""Parameter sweeps over (method, chain length, coupling) cells.

Each cell builds a generator, classifies its modes against an
excitation at the last site, and reports relaxation time, dominant
rate, localization length, steady-state profile, and optionally the
time-averaged transport rate.  Cells run in parallel; per-cell failures
are recorded without aborting the sweep.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .aaa import rwa_correlation_decompose_aaa
from .bath import BathSpec, DrudeLorentz, pade_decompose
from .bmme import build_bmme_generator, markov_rates
from .dynamics import observables, propagate
from .heom import build_heom_generator, build_rwa_heom_generator
from .lattice import LatticeSpec
from .spectral import classify_modes, eigendecompose, steady_state

__all__ = [
    "CellResult",
    "ConvergenceDeltas",
    "ScanPlan",
    "ScanResult",
    "convergence_check",
    "run_scan",
]

METHODS = ("heom", "rwa-heom", "bmme")

#: Relative refinement delta below which a cell counts as converged.
CONVERGED_DELTA = 0.02

OBSERVABLES = ("tau", "lambda_d", "xi", "profile", "gamma_bar")


@dataclasses.dataclass(frozen=True)
class ScanPlan:
    """Grid of sweep cells plus the shared physics parameters.

    ``m_max``/``l_max`` may be plain ints or dicts keyed by coupling,
    so strong-coupling columns can run deeper hierarchies.  Cells whose
    estimated generator dimension exceeds ``size_cap`` are rejected at
    construction (the sweep must be resolvable end to end).

    Parameters
    ----------
    methods : tuple of str
        Subset of ``{"heom", "rwa-heom", "bmme"}``.
    n_values : tuple of int
        Chain lengths, each >= 2.
    couplings : tuple of float
        Bath coupling strengths.
    temperature, width : float
        Shared Drude-Lorentz bath parameters (T > 0).
    splitting : float
        Adjacent-site detuning; also the energy unit of the grid.
    m_max, l_max : int or dict
        Hierarchy depth and exponential-term count (per coupling when
        given as a dict).
    observables : tuple of str
        Requested per-cell outputs; ``"gamma_bar"`` adds a trajectory
        integration up to the cell's own relaxation time.
    convergence : bool
        Also solve the (m_max+1, l_max) and (m_max, l_max+2)
        refinements of every hierarchy cell and record deltas.
    aaa_tol : float
        Fit tolerance for the rwa-heom channel decomposition (coarse by
        default; slot count grows quickly with accuracy).
    size_cap : int
        Upper bound on the full generator dimension of any cell,
        refinements included.
    dense_cap : int
        Passed to the eigensolver (full spectra only below this).
    rtol : float
        Trajectory tolerance for ``gamma_bar``.
    n_times : int
        Trajectory grid size for ``gamma_bar``.
    """

    methods: tuple
    n_values: tuple
    couplings: tuple
    temperature: float
    width: float
    splitting: float = 1.0
    coupling_mode: str = "collective"
    convention: str = "scaled"
    m_max: object = 2
    l_max: object = 3
    observables: tuple = ("tau", "lambda_d", "xi", "profile")
    convergence: bool = True
    aaa_tol: float = 3e-3
    size_cap: int = 200_000
    dense_cap: int = 4000
    rtol: float = 1e-8
    n_times: int = 200

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "couplings",
                           tuple(float(g) for g in self.couplings))
        object.__setattr__(self, "observables", tuple(self.observables))
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}, "
                             f"got {self.methods}")
        bad = set(self.observables) - set(OBSERVABLES)
        if bad:
            raise ValueError(f"unknown observables {sorted(bad)}; "
                             f"choose from {OBSERVABLES}")
        if not self.n_values or min(self.n_values) < 2:
            raise ValueError("n_values must be nonempty with every N >= 2")
        if not self.couplings or min(self.couplings) <= 0:
            raise ValueError("couplings must be nonempty and positive")
        if self.temperature <= 0:
            raise ValueError("sweeps use thermal baths; temperature must be > 0")
        if self.width <= 0 or self.splitting <= 0:
            raise ValueError("width and splitting must be > 0")
        for method, n, gamma in self.cells():
            dim = self.estimated_dimension(method, n, gamma,
                                           refined=self.convergence)
            if dim > self.size_cap:
                raise ValueError(
                    f"cell ({method}, N={n}, coupling={gamma}) needs generator "
                    f"dimension {dim} > size_cap {self.size_cap}"
                )

    def cells(self):
        """Cell keys in deterministic (method, N, coupling) order."""
        return [(m, n, g) for m in sorted(self.methods)
                for n in self.n_values for g in self.couplings]

    def tier_for(self, gamma):
        return _per_coupling(self.m_max, gamma, "m_max")

    def terms_for(self, gamma):
        return _per_coupling(self.l_max, gamma, "l_max")

    def estimated_dimension(self, method, n, gamma, *, refined=False):
        """Generator dimension of a cell (worst refinement if asked).

        The rwa-heom slot count is not known before fitting; it is
        estimated at 32 per bond group, the typical thermal budget.
        """
        if method == "bmme":
            return n * n
        m = self.tier_for(gamma) + (1 if refined else 0)
        terms = self.terms_for(gamma) + (2 if refined else 0)
        if method == "rwa-heom":
            terms = max(terms, 32)
        slots = terms if self.coupling_mode == "collective" else terms * (n - 1)
        return math.comb(slots + m, m) * n * n


def _per_coupling(value, gamma, name):
    if isinstance(value, dict):
        try:
            return int(value[gamma])
        except KeyError:
            raise KeyError(f"{name} has no entry for coupling {gamma}")
    return int(value)


@dataclasses.dataclass
class ConvergenceDeltas:
    """Relative change of (tau, lambda_d) under hierarchy refinement."""

    tau_tier: float = None
    lambda_tier: float = None
    tau_terms: float = None
    lambda_terms: float = None
    note: str = ""

    @property
    def converged(self):
        values = (self.tau_tier, self.lambda_tier,
                  self.tau_terms, self.lambda_terms)
        if any(v is None for v in values):
            return False
        return max(values) < CONVERGED_DELTA


@dataclasses.dataclass
class CellResult:
    """Everything one sweep cell produced (or the error that stopped it)."""

    method: str
    n_sites: int
    coupling: float
    m_max: int
    l_max: int
    dimension: int = 0
    wall_time: float = 0.0
    error: str = None
    tau: float = None
    already_relaxed: bool = None
    lambda_d: complex = None
    xi: float = None
    steady_profile: tuple = None
    gamma_bar: float = None
    deltas: ConvergenceDeltas = None

    @property
    def ok(self):
        return self.error is None

    @property
    def converged(self):
        """BMME cells are exact; hierarchy cells defer to their deltas."""
        if not self.ok:
            return False
        if self.method == "bmme" or self.deltas is None:
            return self.method == "bmme"
        return self.deltas.converged


def _relative_delta(new, old):
    scale = abs(old)
    if scale == 0.0:
        return abs(new - old)
    return abs(new - old) / scale


def convergence_check(base, refined_tier, refined_terms):
    """Deltas of a cell against its two hierarchy refinements.

    Parameters
    ----------
    base : CellResult
        Solved at (m_max, l_max).
    refined_tier : CellResult or None
        Solved at (m_max + 1, l_max); ``None`` when the refinement was
        not resolvable (reported as unconverged).
    refined_terms : CellResult or None
        Solved at (m_max, l_max + 2).

    Returns
    -------
    ConvergenceDeltas
    """
    deltas = ConvergenceDeltas()
    notes = []
    for refined, tau_field, lam_field, label in (
            (refined_tier, "tau_tier", "lambda_tier", "tier"),
            (refined_terms, "tau_terms", "lambda_terms", "terms")):
        if refined is None or not refined.ok:
            reason = "unresolvable" if refined is None else refined.error
            notes.append(f"{label} refinement unavailable: {reason}")
            continue
        setattr(deltas, tau_field, _relative_delta(refined.tau, base.tau))
        setattr(deltas, lam_field,
                _relative_delta(refined.lambda_d, base.lambda_d))
    deltas.note = "; ".join(notes)
    return deltas


def _build_generator(plan, method, n, gamma, m_max, l_max):
    lattice = LatticeSpec(n_sites=n, spacing=plan.splitting,
                          coupling_mode=plan.coupling_mode)
    bath = BathSpec(
        spectral_density=DrudeLorentz(coupling=gamma, cutoff=plan.width),
        temperature=plan.temperature)
    if method == "bmme":
        return build_bmme_generator(
            lattice, markov_rates(bath, plan.splitting))
    if method == "heom":
        dec = pade_decompose(gamma, plan.width, plan.temperature, l_max)
        return build_heom_generator(lattice, dec, m_max,
                                    convention=plan.convention)
    dec = rwa_correlation_decompose_aaa(bath, tol=plan.aaa_tol)
    return build_rwa_heom_generator(lattice, dec, m_max,
                                    convention=plan.convention)


def _solve(plan, method, n, gamma, m_max, l_max, *, with_trajectory):
    result = CellResult(method=method, n_sites=n, coupling=gamma,
                        m_max=m_max, l_max=l_max)
    gen = _build_generator(plan, method, n, gamma, m_max, l_max)
    result.dimension = gen.matrix.shape[0]
    if result.dimension > plan.size_cap:
        raise ValueError(f"generator dimension {result.dimension} exceeds "
                         f"size_cap {plan.size_cap}")
    es = eigendecompose(gen, dense_cap=plan.dense_cap)
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[-1, -1] = 1.0
    report = classify_modes(es, rho0,
                            fit_localization="xi" in plan.observables)
    result.tau = report.relaxation_time
    result.already_relaxed = report.already_relaxed
    result.lambda_d = report.dominant_rate
    if report.localization is not None and report.localization.decaying:
        result.xi = report.localization.length
    if "profile" in plan.observables:
        rho_ss, _ = steady_state(es)
        result.steady_profile = tuple(float(p) for p in rho_ss.diagonal().real)
    if with_trajectory and "gamma_bar" in plan.observables:
        horizon = result.tau if result.tau > 0 else 1.0 / plan.splitting
        times = np.linspace(0.0, horizon, plan.n_times)
        traj = propagate(gen, rho0, times, rtol=plan.rtol,
                         atol=plan.rtol * 1e-2)
        result.gamma_bar = float(observables(traj).average_rate[-1])
    return result


def _refinement(plan, method, n, gamma, m_max, l_max):
    """Solve a refinement cell, or None when it cannot be resolved."""
    slots = l_max if plan.coupling_mode == "collective" else l_max * (n - 1)
    if math.comb(slots + m_max, m_max) * n * n > plan.size_cap:
        return None
    try:
        return _solve(plan, method, n, gamma, m_max, l_max,
                      with_trajectory=False)
    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
        failed = CellResult(method=method, n_sites=n, coupling=gamma,
                            m_max=m_max, l_max=l_max, error=str(exc))
        return failed


def _cell_worker(args):
    plan, method, n, gamma = args
    m_max = plan.tier_for(gamma)
    l_max = plan.terms_for(gamma)
    start = time.perf_counter()
    try:
        result = _solve(plan, method, n, gamma, m_max, l_max,
                        with_trajectory=True)
        if plan.convergence and method != "bmme":
            refined_tier = _refinement(plan, method, n, gamma,
                                       m_max + 1, l_max)
            refined_terms = _refinement(plan, method, n, gamma,
                                        m_max, l_max + 2)
            result.deltas = convergence_check(result, refined_tier,
                                              refined_terms)
    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
        result = CellResult(method=method, n_sites=n, coupling=gamma,
                            m_max=m_max, l_max=l_max, error=str(exc))
    result.wall_time = time.perf_counter() - start
    return result


@dataclasses.dataclass(frozen=True)
class ScanResult:
    """All cell results of a sweep, ordered by (method, N, coupling)."""

    plan: ScanPlan
    cells: tuple

    def cell(self, method, n, gamma):
        for c in self.cells:
            if (c.method, c.n_sites, c.coupling) == (method, n, float(gamma)):
                return c
        raise KeyError(f"no cell ({method}, {n}, {gamma}) in this sweep")

    def failures(self):
        return [c for c in self.cells if not c.ok]

    def series(self, method, field, coupling=None):
        """(N values, field values) over the successful cells of a method."""
        if coupling is None:
            if len(self.plan.couplings) != 1:
                raise ValueError("coupling must be given for multi-coupling "
                                 "sweeps")
            coupling = self.plan.couplings[0]
        pairs = [(c.n_sites, getattr(c, field)) for c in self.cells
                 if c.method == method and c.coupling == float(coupling)
                 and c.ok and getattr(c, field) is not None]
        ns = np.array([p[0] for p in pairs])
        values = np.array([p[1] for p in pairs])
        return ns, values


def run_scan(plan, *, max_workers=None):
    """Execute every cell of a plan, in parallel unless ``max_workers=1``.

    Failures are captured per cell (``CellResult.error``); the sweep
    always returns a full grid in deterministic (method, N, coupling)
    order.
    """
    jobs = [(plan, method, n, gamma) for method, n, gamma in plan.cells()]
    if max_workers == 1:
        results = [_cell_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_cell_worker, jobs))
    return ScanResult(plan=plan, cells=tuple(results))
