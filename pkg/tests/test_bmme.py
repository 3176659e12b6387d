"""Markovian rates and the Lindblad generator.

The population sector of the nonreciprocal-hopping Lindbladian is a
classical birth-death chain whose spectrum is known in closed form,

    lambda_k = -(g_em + g_ab) + 2 sqrt(g_em g_ab) cos(k pi / N),

with a geometric steady profile of ratio g_ab / g_em.  Both serve as
independent oracles here.
"""

import math

import numpy as np
import pytest

from heomchain.bath import BathSpec, DrudeLorentz, bose_einstein
from heomchain.bmme import MarkovRates, build_bmme_generator, markov_rates
from heomchain.dynamics import propagate
from heomchain.lattice import LatticeSpec
from heomchain.spectral import eigendecompose, steady_state


class TestMarkovRates:
    def test_golden_rule_values(self):
        bath = BathSpec(DrudeLorentz(coupling=0.05, cutoff=1.0), 1.44)
        rates = markov_rates(bath, 1.0)
        j = bath.spectral_density(1.0)
        n = bose_einstein(1.0, 1.44)
        assert rates.emission == pytest.approx(j * (n + 1.0), rel=1e-12)
        assert rates.absorption == pytest.approx(j * n, rel=1e-12)

    def test_detailed_balance_ratio(self):
        bath = BathSpec(DrudeLorentz(0.05, 1.0), 1.44)
        rates = markov_rates(bath, 1.0)
        assert rates.ratio == pytest.approx(math.exp(1.0 / 1.44), rel=1e-12)

    def test_zero_temperature_absorption_vanishes(self):
        bath = BathSpec(DrudeLorentz(0.05, 1.0), 0.0)
        rates = markov_rates(bath, 1.0)
        assert rates.absorption == 0.0
        assert rates.emission > 0.0

    def test_rate_scale(self):
        bath = BathSpec(DrudeLorentz(0.05, 1.0), 1.44)
        r1 = markov_rates(bath, 1.0)
        r2 = markov_rates(bath, 1.0, rate_scale=2.0)
        assert r2.emission == pytest.approx(2 * r1.emission)

    def test_invariant_enforced(self):
        with pytest.raises(ValueError):
            MarkovRates(emission=0.1, absorption=0.2)
        with pytest.raises(ValueError):
            MarkovRates(emission=-0.1, absorption=-0.2)


@pytest.fixture(scope="module")
def rates():
    return MarkovRates(emission=0.2, absorption=0.1)


class TestLindbladGenerator:
    def test_kind_and_dimension(self, rates):
        gen = build_bmme_generator(LatticeSpec(n_sites=4, spacing=1.0), rates)
        assert gen.kind == "bmme"
        assert gen.dim == 16
        assert gen.ado.size == 1

    @pytest.mark.parametrize("n", [4, 5])
    def test_birth_death_spectrum(self, rates, n):
        gen = build_bmme_generator(LatticeSpec(n_sites=n, spacing=1.0), rates)
        ev = np.linalg.eigvals(gen.matrix.toarray())
        real = np.sort(ev[np.abs(ev.imag) < 1e-10].real)
        total = rates.emission + rates.absorption
        cross = 2.0 * math.sqrt(rates.emission * rates.absorption)
        predicted = np.sort(np.concatenate(
            [[0.0], -total + cross * np.cos(np.arange(1, n) * np.pi / n)]))
        np.testing.assert_allclose(real, predicted, atol=1e-10)

    def test_geometric_steady_profile(self, rates):
        gen = build_bmme_generator(LatticeSpec(n_sites=6, spacing=1.0), rates)
        rho_ss, _ = steady_state(eigendecompose(gen))
        p = rho_ss.diagonal().real
        ratios = p[1:] / p[:-1]
        np.testing.assert_allclose(
            ratios, rates.absorption / rates.emission, atol=1e-10)

    def test_dephasing_shifts_coherence_sector_only(self, rates):
        spec = LatticeSpec(n_sites=3, spacing=1.0)
        plain = build_bmme_generator(spec, rates)
        dephased = build_bmme_generator(
            spec, MarkovRates(emission=0.2, absorption=0.1, dephasing=0.5))
        for gen in (plain, dephased):
            ev = np.linalg.eigvals(gen.matrix.toarray())
            real = np.sort(ev[np.abs(ev.imag) < 1e-10].real)[-3:]
            total = rates.emission + rates.absorption
            cross = 2.0 * math.sqrt(rates.emission * rates.absorption)
            predicted = np.sort(np.concatenate(
                [[0.0], -total + cross * np.cos(np.array([1, 2]) * np.pi / 3)]))
            np.testing.assert_allclose(real, predicted, atol=1e-10)

    def test_complete_positivity_along_trajectory(self, rates):
        gen = build_bmme_generator(LatticeSpec(n_sites=4, spacing=1.0), rates)
        rho0 = np.zeros((4, 4), dtype=complex)
        rho0[3, 3] = 1.0
        times = np.linspace(0.0, 30.0, 61)
        traj = propagate(gen, rho0, times, rtol=1e-10, atol=1e-12)
        for state in traj.states:
            evals = np.linalg.eigvalsh(state)
            assert evals.min() > -1e-9
        traces = np.trace(traj.states, axis1=1, axis2=2)
        assert np.abs(traces - 1.0).max() < 1e-8

    def test_diagonal_initial_state_stays_diagonal(self, rates):
        # collective hopping from a population state never builds
        # coherence in the Markovian limit
        gen = build_bmme_generator(LatticeSpec(n_sites=4, spacing=1.0), rates)
        rho0 = np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex)
        traj = propagate(gen, rho0, np.linspace(0.0, 20.0, 41),
                         rtol=1e-10, atol=1e-12)
        off = traj.states - np.apply_along_axis(np.diag, 1, traj.populations())
        assert np.abs(off).max() < 1e-10
