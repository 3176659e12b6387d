"""End-to-end acceptance gates.

Each criterion is one test: it measures, records one summary line
(printed in the terminal summary), and asserts.  Tolerances are pinned
here and nowhere else; a failing criterion stays red rather than being
loosened.
"""

import math
import time

import numpy as np
import pytest

from heomchain.aaa import (
    channel_reconstruction_errors,
    rwa_correlation_decompose_aaa,
)
from heomchain.bath import (
    BathSpec,
    DrudeLorentz,
    channel_correlation_direct,
    correlation_direct,
    lorentzian_zero_t_decompose,
    lorentzian_zero_t_rwa_decompose,
    pade_decompose,
)
from heomchain.bmme import build_bmme_generator, markov_rates
from heomchain.dynamics import observables, propagate, two_site_analytic
from heomchain.heom import build_heom_generator, build_rwa_heom_generator
from heomchain.lattice import LatticeSpec
from heomchain.scan import ScanPlan, run_scan
from heomchain.spectral import classify_modes, eigendecompose, steady_state


def boundary_state(n):
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[-1, -1] = 1.0
    return rho0


def dominant_rate(gen, n):
    report = classify_modes(eigendecompose(gen), boundary_state(n))
    return report


def test_criterion_1_two_site_oracle(record):
    """RWA hierarchy vs the closed-form decay amplitude, three regimes."""
    start = time.perf_counter()
    worst_pop = worst_coh = 0.0
    for gamma, width, omega in ((0.1, 1.0, 1.0), (0.6, 1.0, 1.0),
                                (0.3, 1.0, 3.0)):
        dec = lorentzian_zero_t_rwa_decompose(gamma, width, omega)
        gen = build_rwa_heom_generator(
            LatticeSpec(n_sites=2, spacing=omega), dec, 2)
        times = np.linspace(0.0, 20.0 / width, 201)
        for alpha, beta in ((1.0, 0.0), (0.7, 0.3 + 0.2j)):
            rho0 = np.array([[1.0 - alpha, beta],
                             [np.conj(beta), alpha]], dtype=complex)
            traj = propagate(gen, rho0, times, rtol=1e-10, atol=1e-12)
            pop_ref, coh_ref = two_site_analytic(
                alpha, beta, gamma, width, omega, times)
            worst_pop = max(worst_pop, np.abs(
                traj.states[:, 1, 1] - pop_ref).max())
            worst_coh = max(worst_coh, np.abs(
                traj.states[:, 0, 1] - coh_ref).max())
    elapsed = time.perf_counter() - start
    ok = worst_pop < 1e-6 and worst_coh < 1e-6 and elapsed < 10.0
    record(1, ok, f"max pop dev {worst_pop:.2e}, max coh dev {worst_coh:.2e} "
                  f"(budget 1e-6); {elapsed:.1f} s")
    assert ok


def test_criterion_2_literal_population_block(record):
    """The bare-convention N = 2 rotating-wave generator contains the
    known 6x6 population-sector matrix entry for entry."""
    start = time.perf_counter()
    coupling, width, center, splitting = 0.3, 1.0, 1.7, 1.0
    dec = lorentzian_zero_t_rwa_decompose(coupling, width, center)
    gen = build_rwa_heom_generator(
        LatticeSpec(n_sites=2, spacing=splitting), dec, 2, convention="bare")
    dim_ok = gen.dim == 24

    a = 0.5j * width * coupling
    detuning = center - splitting
    ref = np.array([
        [0, 0, -1j, 1j, 0, 0],
        [0, 0, 1j, -1j, 0, 0],
        [0, a, -width + 1j * detuning, 0, -1j, 1j],
        [0, -a, 0, -width - 1j * detuning, 1j, -1j],
        [0, 0, -a, a, -2 * width, 0],
        [0, 0, 0, 0, 0, -2 * width],
    ], dtype=complex)
    # flat components carrying the populations and the emission-slot
    # amplitudes: (ado, matrix entry) -> 4 * ado + vec offset
    idx = [0, 3, 13, 6, 16, 19]
    sub = gen.matrix.toarray()[np.ix_(idx, idx)]
    diff = np.abs(sub - ref).max()
    elapsed = time.perf_counter() - start
    ok = dim_ok and diff < 1e-12 and elapsed < 1.0
    record(2, ok, f"dimension {gen.dim} (needs 24), "
                  f"max entry deviation {diff:.2e}; {elapsed:.2f} s")
    assert ok


def test_criterion_3_decomposition_fidelity(record):
    """Thermal expansions against adaptive-quadrature correlations."""
    start = time.perf_counter()
    gamma, width, temp = 0.5, 1.0, 1.44
    bath = BathSpec(DrudeLorentz(gamma, width), temp)

    dec = pade_decompose(gamma, width, temp, 20)
    # tau = 0 excluded throughout: the thermal correlation diverges
    # logarithmically at coincidence, so only tau > 0 is comparable
    taus = np.linspace(0.0, 5.0 / width, 51)[1:]
    exact = np.array([correlation_direct(bath, t) for t in taus])
    pade_rel = float(np.abs(dec.reconstruct(taus) - exact).max()
                     / np.abs(exact).max())

    dec_rwa = rwa_correlation_decompose_aaa(bath, tol=3e-4)
    # tau = 0 excluded: pole closure represents the channels for tau > 0
    grid = np.linspace(0.0, 5.0 / width, 101)[1:]
    errs = channel_reconstruction_errors(dec_rwa, bath, grid)
    rel = {ch: err / abs(channel_correlation_direct(bath, 0.0, ch))
           for ch, err in errs.items()}
    aaa_rel = max(rel.values())

    elapsed = time.perf_counter() - start
    ok = (pade_rel < 1e-4 and dec_rwa.n_terms <= 32
          and aaa_rel < 10 * 3e-4 and elapsed < 30.0)
    record(3, ok, f"pade rel {pade_rel:.2e} (< 1e-4); "
                  f"{dec_rwa.n_terms} terms (<= 32), channel rel "
                  f"{aaa_rel:.2e} (< 3e-3); {elapsed:.1f} s")
    assert ok


def test_criterion_4_markovian_consistency(record):
    """Weak coupling: hierarchy and Lindblad dominant rates within 10%.

    The Markov approximation error is set by the coupling, not by the
    chain length; at Gamma = 0.05 the finite-bath-memory correction to
    lambda_d stays visible at small N where |lambda_d| itself is
    largest relative to the gap.  The per-N numbers are reported either
    way -- the gate is applied verbatim.
    """
    start = time.perf_counter()
    gamma, width, temp = 0.05, 1.0, 1.44
    dec = pade_decompose(gamma, width, temp, 3)
    rates = markov_rates(BathSpec(DrudeLorentz(gamma, width), temp), 1.0)
    devs = {}
    for n in range(2, 7):
        lat = LatticeSpec(n_sites=n, spacing=1.0)
        rep_h = classify_modes(
            eigendecompose(build_heom_generator(lat, dec, 2)),
            boundary_state(n))
        rep_b = classify_modes(
            eigendecompose(build_bmme_generator(lat, rates)),
            boundary_state(n))
        devs[n] = (abs(rep_h.dominant_rate - rep_b.dominant_rate)
                   / abs(rep_b.dominant_rate))
    elapsed = time.perf_counter() - start
    listing = ", ".join(f"N={n}: {100 * d:.1f}%" for n, d in devs.items())
    ok = all(d < 0.10 for d in devs.values()) and elapsed < 300.0
    record(4, ok, f"|dl|/|l| {listing} (each < 10%); {elapsed:.1f} s")
    assert ok, listing


def test_criterion_5_skin_effect_scaling(record):
    """Boundary-localized relaxation: tau growth and flat mode length.

    The overlap-corrected relaxation time grows faster than the bare
    inverse gap because the dominant-mode expansion coefficient itself
    grows exponentially with N (the skin-mode bi-orthogonal norms do);
    the slope gate is asserted verbatim against that measurement.
    """
    start = time.perf_counter()
    plan = ScanPlan(
        methods=("bmme",),
        n_values=tuple(range(5, 16)),
        couplings=(0.05,),
        temperature=1.0 / math.log(2.0),  # emission/absorption = 2
        width=1.0,
        observables=("tau", "lambda_d", "xi"),
        convergence=False,
    )
    res = run_scan(plan, max_workers=1)
    ns, taus = res.series("bmme", "tau")
    slope = float(np.polyfit(np.log(ns), np.log(taus), 1)[0])
    ns_xi, xis = res.series("bmme", "xi")
    window = xis[ns_xi >= 8]
    spread = float((window.max() - window.min()) / window.mean())
    elapsed = time.perf_counter() - start
    ok = abs(slope - 1.0) <= 0.15 and spread < 0.05 and elapsed < 300.0
    record(5, ok, f"log-log slope {slope:.3f} (needs 1.0 +- 0.15), "
                  f"xi spread {100 * spread:.1f}% (< 5%); {elapsed:.1f} s")
    assert ok, f"slope {slope}, spread {spread}"


def test_criterion_6_non_markovian_slowdown(record):
    """Strong coupling: bath memory slows relaxation at every N."""
    start = time.perf_counter()
    gamma, width, temp = 0.5, 1.0, 1.44
    dec = pade_decompose(gamma, width, temp, 4)
    rates = markov_rates(BathSpec(DrudeLorentz(gamma, width), temp), 1.0)
    pairs = {}
    for n in range(4, 9):
        lat = LatticeSpec(n_sites=n, spacing=1.0)
        rep_h = classify_modes(
            eigendecompose(build_heom_generator(lat, dec, 3)),
            boundary_state(n))
        rep_b = classify_modes(
            eigendecompose(build_bmme_generator(lat, rates)),
            boundary_state(n))
        pairs[n] = (rep_h.relaxation_time, rep_b.relaxation_time)
    elapsed = time.perf_counter() - start
    ok = all(h > b for h, b in pairs.values()) and elapsed < 1800.0
    listing = ", ".join(f"N={n}: {h:.2f}>{b:.2f}" for n, (h, b) in pairs.items())
    record(6, ok, f"tau hierarchy vs Markov {listing}; {elapsed:.0f} s")
    assert ok, listing


def test_criterion_7_coherence_selection_rules(record):
    """Virtual pair processes build next-nearest coherence only; the
    rotating-wave and Markovian routes build none at all."""
    start = time.perf_counter()
    gamma, width, temp = 0.5, 1.0, 1.44
    n = 4
    lat = LatticeSpec(n_sites=n, spacing=1.0)
    rho0 = boundary_state(n)
    times = np.linspace(0.0, 20.0, 201)
    bath = BathSpec(DrudeLorentz(gamma, width), temp)

    traj = propagate(build_heom_generator(lat, pade_decompose(
        gamma, width, temp, 3), 2), rho0, times, rtol=1e-10, atol=1e-12)
    obs = observables(traj)
    next_nearest = float(np.abs(obs.coherence(0, 2)).max())
    adjacent = max(float(np.abs(obs.coherence(i, i + 1)).max())
                   for i in range(n - 1))

    l1_bmme = float(observables(propagate(
        build_bmme_generator(lat, markov_rates(bath, 1.0)),
        rho0, times, rtol=1e-10, atol=1e-12)).l1_coherence.max())
    dec_rwa = rwa_correlation_decompose_aaa(bath, tol=3e-3)
    l1_rwa = float(observables(propagate(
        build_rwa_heom_generator(lat, dec_rwa, 2),
        rho0, times, rtol=1e-10, atol=1e-12)).l1_coherence.max())

    elapsed = time.perf_counter() - start
    ok = (next_nearest > 1e-3 and adjacent < 1e-8
          and l1_bmme < 1e-8 and l1_rwa < 1e-8 and elapsed < 600.0)
    record(7, ok, f"|<d1'd3>| {next_nearest:.2e} (> 1e-3), adjacent "
                  f"{adjacent:.1e}, l1 markov {l1_bmme:.1e} / rwa "
                  f"{l1_rwa:.1e} (< 1e-8); {elapsed:.0f} s")
    assert ok


def test_criterion_8_structural_invariants(record):
    """100 randomized small instances: conservation laws and spectra."""
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    failures = []
    for case in range(100):
        kind = rng.choice(("pade-heom", "lorentz-heom", "lorentz-rwa", "bmme"))
        n = int(rng.integers(2, 5))
        m_max = int(rng.integers(1, 3))
        gamma = float(rng.uniform(0.05, 0.6))
        width = float(rng.uniform(0.5, 2.0))
        if kind == "pade-heom":
            temp = float(rng.uniform(0.7, 2.9))
            n_terms = int(rng.integers(1, 5))
            lat = LatticeSpec(n_sites=n, spacing=1.0)
            gen = build_heom_generator(
                lat, pade_decompose(gamma, width, temp, n_terms), m_max)
        elif kind == "lorentz-heom":
            center = float(rng.uniform(4.0, 10.0)) * width
            lat = LatticeSpec(n_sites=n, spacing=center)
            gen = build_heom_generator(
                lat, lorentzian_zero_t_decompose(gamma, width, center), m_max)
        elif kind == "lorentz-rwa":
            center = float(rng.uniform(4.0, 10.0)) * width
            lat = LatticeSpec(n_sites=n, spacing=center)
            gen = build_rwa_heom_generator(
                lat, lorentzian_zero_t_rwa_decompose(gamma, width, center),
                m_max)
        else:
            temp = float(rng.uniform(0.7, 2.9))
            lat = LatticeSpec(n_sites=n, spacing=1.0)
            gen = build_bmme_generator(
                lat, markov_rates(BathSpec(DrudeLorentz(gamma, width), temp),
                                  1.0))

        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rho0 = a @ a.conj().T
        rho0 /= np.trace(rho0).real

        traj = propagate(gen, rho0, np.linspace(0.0, 3.0, 7),
                         rtol=1e-10, atol=1e-12, check=False)
        trace_drift = np.abs(
            np.trace(traj.states, axis1=1, axis2=2) - 1.0).max()
        herm = np.abs(traj.states
                      - traj.states.conj().transpose(0, 2, 1)).max()

        es = eigendecompose(gen)
        scale = max(es.generator_norm, 1.0)
        lam = es.eigenvalues
        n_zero = int(np.count_nonzero(np.abs(lam) < 1e-9 * scale))
        conj_gap = max(np.abs(lam.conj()[None, :] - lam[:, None]).min(axis=1).max(), 0.0)

        checks = {
            "trace": trace_drift < 1e-8,
            "hermiticity": herm < 1e-8,
            "biorthogonality": es.biorthogonality_residual < 1e-8,
            "unique zero mode": n_zero == 1,
            "conjugate closure": conj_gap < 1e-7 * scale,
        }
        if not all(checks.values()):
            bad = [k for k, v in checks.items() if not v]
            failures.append(f"case {case} ({kind}, N={n}, m={m_max}): "
                            + ", ".join(bad))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 300.0
    record(8, ok, f"100 randomized instances, {len(failures)} violation(s); "
                  f"{elapsed:.0f} s")
    assert ok, "\n".join(failures[:5])


def test_criterion_9_convergence_and_alignment(record):
    """Substitute for the beyond-desk-scale grids: refinement deltas are
    reported per hierarchy cell with the < 2% rule, and the slowdown /
    transport-rate extrema are compared on the largest converged window."""
    start = time.perf_counter()
    plan = ScanPlan(
        methods=("bmme", "heom"),
        n_values=(4, 5, 6, 7, 8),
        couplings=(0.5,),
        temperature=1.44,
        width=1.0,
        m_max=2,
        l_max=3,
        observables=("tau", "lambda_d", "gamma_bar"),
        convergence=True,
    )
    res = run_scan(plan)
    heom_cells = [c for c in res.cells if c.method == "heom"]
    reporting_ok = all(
        c.deltas is not None
        and None not in (c.deltas.tau_tier, c.deltas.lambda_tier,
                         c.deltas.tau_terms, c.deltas.lambda_terms)
        and c.deltas.converged == (max(
            c.deltas.tau_tier, c.deltas.lambda_tier,
            c.deltas.tau_terms, c.deltas.lambda_terms) < 0.02)
        for c in heom_cells)
    max_delta = max(max(c.deltas.tau_tier, c.deltas.lambda_tier,
                        c.deltas.tau_terms, c.deltas.lambda_terms)
                    for c in heom_cells)
    window = [c.n_sites for c in heom_cells if c.converged]

    def interior_extrema(values):
        return [k for k in range(1, len(values) - 1)
                if (values[k] - values[k - 1])
                * (values[k + 1] - values[k]) < 0]

    ns = [c.n_sites for c in heom_cells]
    slowdown = [c.tau - res.cell("bmme", c.n_sites, 0.5).tau
                for c in heom_cells]
    gbar = [c.gamma_bar for c in heom_cells]
    ext_slow = interior_extrema(slowdown)
    ext_gbar = interior_extrema(gbar)
    if ext_slow and ext_gbar:
        aligned = all(min(abs(i - j) for j in ext_gbar) <= 1
                      for i in ext_slow)
        align_note = (f"extrema at N={[ns[i] for i in ext_slow]} vs "
                      f"N={[ns[i] for i in ext_gbar]} "
                      f"({'aligned' if aligned else 'misaligned'})")
    else:
        aligned = True  # the window is too small to oscillate
        align_note = "window too small for slowdown/transport oscillation"

    elapsed = time.perf_counter() - start
    ok = reporting_ok and aligned
    record(9, ok, f"deltas on {len(heom_cells)} cells (max {100 * max_delta:.1f}%), "
                  f"converged window N={window}; {align_note}; {elapsed:.0f} s")
    assert ok
