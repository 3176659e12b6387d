"""Born-Markov (Lindblad) generator: the memoryless reference dynamics.

Rates follow the golden-rule convention gamma_emission = J(Omega)(n+1),
gamma_absorption = J(Omega) n evaluated at the chain detuning; ``rate_scale``
exposes the overall prefactor (the weak-coupling derivation leaves a factor
ambiguity that only rescales time, never the emission/absorption ratio).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .bath import BathSpec, bose_einstein
from .heom import AdoSpace, Generator
from .lattice import LatticeSpec, build_hamiltonian, dephasing_ops, lindblad_hopping_ops
from .liouville import dissipator_super, hamiltonian_liouvillian

__all__ = ["MarkovRates", "markov_rates", "build_bmme_generator"]


@dataclass(frozen=True)
class MarkovRates:
    """Nonreciprocal hopping rates plus optional dephasing.

    emission >= absorption >= 0 always holds for a thermal bath (n+1 >= n).
    """

    emission: float
    absorption: float
    dephasing: float = 0.0

    def __post_init__(self):
        if not (self.emission >= self.absorption >= 0.0):
            raise ValueError(
                f"need emission >= absorption >= 0, got "
                f"{self.emission}, {self.absorption}"
            )
        if self.dephasing < 0:
            raise ValueError(f"dephasing must be >= 0, got {self.dephasing}")

    @property
    def ratio(self) -> float:
        """emission/absorption; inf at zero temperature."""
        if self.absorption == 0:
            return np.inf
        return self.emission / self.absorption


def markov_rates(bath: BathSpec, level_spacing: float, *,
                 rate_scale: float = 1.0, dephasing: float = 0.0) -> MarkovRates:
    """Golden-rule rates at the chain detuning Omega.

    gamma_L = scale * J(Omega) * (n(Omega) + 1),
    gamma_R = scale * J(Omega) * n(Omega).
    """
    if level_spacing <= 0:
        raise ValueError(f"level spacing must be > 0, got {level_spacing}")
    if rate_scale <= 0:
        raise ValueError(f"rate_scale must be > 0, got {rate_scale}")
    j_val = float(bath.spectral_density(level_spacing))
    if bath.temperature == 0:
        occ = 0.0
    else:
        occ = bose_einstein(level_spacing, bath.temperature)
    return MarkovRates(
        emission=rate_scale * j_val * (occ + 1.0),
        absorption=rate_scale * j_val * occ,
        dephasing=dephasing,
    )


def build_bmme_generator(lattice: LatticeSpec, rates: MarkovRates) -> Generator:
    """Lindblad generator -i[H, .] + sum_L (L . L+ - {L+L, .}/2).

    The jump operators are the nonreciprocal hops (collective or per-bond,
    following the lattice coupling mode) plus per-site dephasing when
    requested.  Returned with a trivial single-element ADO space so the
    spectral and dynamics layers treat all generators uniformly.
    """
    gen = hamiltonian_liouvillian(build_hamiltonian(lattice))
    for op in lindblad_hopping_ops(lattice, rates.emission, rates.absorption):
        if np.any(op):
            gen = gen + dissipator_super(op)
    if rates.dephasing > 0:
        for op in dephasing_ops(lattice, rates.dephasing):
            gen = gen + dissipator_super(op)
    ado = AdoSpace(1, 0)
    return Generator(gen.tocsr(), lattice, ado, "bmme", "")
