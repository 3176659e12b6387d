"""Single-excitation chain operators.

The system is one excitation on an N-site ladder, H = diag(0, Omega, ...,
(N-1)*Omega), with bath-mediated nearest-neighbor hopping.  All operators are
plain dense N x N arrays in the site basis (the single-excitation sector; the
particle number is conserved by everything built here, so the exponential
many-body space is never materialized).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CouplingMode",
    "LatticeSpec",
    "build_hamiltonian",
    "build_coupling",
    "split_raising_lowering",
    "lowering_operator",
    "lindblad_hopping_ops",
    "dephasing_ops",
]


class CouplingMode(enum.Enum):
    COLLECTIVE = "collective"
    SEPARATE = "separate"


@dataclass(frozen=True)
class LatticeSpec:
    """Chain geometry: site count, level spacing and bath-coupling topology.

    ``spacing`` is the detuning Omega between neighboring site energies
    (energy gauge: site 1 sits at zero).  ``coupling_mode`` selects one
    collective bath for the whole chain or an independent bath per bond.
    """

    n_sites: int
    spacing: float
    coupling_mode: CouplingMode = CouplingMode.COLLECTIVE

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError(f"need at least 2 sites, got {self.n_sites}")
        if self.spacing <= 0:
            raise ValueError(f"level spacing must be > 0, got {self.spacing}")
        if not isinstance(self.coupling_mode, CouplingMode):
            object.__setattr__(
                self, "coupling_mode", CouplingMode(self.coupling_mode)
            )

    @property
    def energies(self) -> np.ndarray:
        return self.spacing * np.arange(self.n_sites, dtype=float)

    @property
    def n_bonds(self) -> int:
        return self.n_sites - 1


def build_hamiltonian(spec: LatticeSpec) -> np.ndarray:
    """Diagonal system Hamiltonian diag((n-1)*Omega)."""
    return np.diag(spec.energies)


def _bond_operator(n_sites: int, bond: int) -> np.ndarray:
    v = np.zeros((n_sites, n_sites))
    v[bond, bond + 1] = 1.0
    v[bond + 1, bond] = 1.0
    return v


def build_coupling(spec: LatticeSpec) -> list[np.ndarray]:
    """Bath-coupling operators V (Hermitian hop terms).

    Collective mode returns the single chain-wide sum; separate mode returns
    one operator per bond (the order matches the bond index).
    """
    bonds = [_bond_operator(spec.n_sites, b) for b in range(spec.n_bonds)]
    if spec.coupling_mode is CouplingMode.COLLECTIVE:
        return [sum(bonds)]
    return bonds


def lowering_operator(spec: LatticeSpec) -> np.ndarray:
    """Collective energy-lowering hop sum_n |n><n+1|."""
    return np.diag(np.ones(spec.n_sites - 1), k=1)


def split_raising_lowering(v: np.ndarray, h: np.ndarray):
    """Split a coupling operator into raising/lowering parts against H.

    V- collects elements <m|V|k> with E_m < E_k (energy-lowering), V+ the
    rest; V = V+ + V-.  Requires H diagonal and a nondegenerate gap under
    every nonzero element of V (a degenerate or diagonal element cannot be
    assigned to either part).
    """
    v = np.asarray(v)
    h = np.asarray(h)
    energies = np.diag(h).real
    if not np.allclose(h, np.diag(np.diag(h))):
        raise ValueError("split_raising_lowering requires a diagonal H")
    scale = max(np.max(np.abs(energies)), 1.0)
    gap_tol = 1e-12 * scale
    v_plus = np.zeros_like(v, dtype=complex)
    v_minus = np.zeros_like(v, dtype=complex)
    rows, cols = np.nonzero(np.abs(v) > 0)
    for i, j in zip(rows, cols):
        gap = energies[i] - energies[j]
        if abs(gap) <= gap_tol:
            raise ValueError(
                f"degenerate gap under coupling element ({i},{j}): "
                f"E_{i} = {energies[i]}, E_{j} = {energies[j]}"
            )
        if gap < 0:
            v_minus[i, j] = v[i, j]
        else:
            v_plus[i, j] = v[i, j]
    return v_plus, v_minus


def lindblad_hopping_ops(spec: LatticeSpec, gamma_l: float,
                         gamma_r: float) -> list[np.ndarray]:
    """Nonreciprocal hopping jump operators.

    gamma_l is the emission (down-ladder, leftward) rate and gamma_r the
    absorption (up-ladder) rate.  Collective mode yields the two chain-wide
    operators sqrt(gamma_l)*sum|n><n+1| and sqrt(gamma_r)*sum|n+1><n|;
    separate mode yields the 2*(N-1) per-bond versions.
    """
    if gamma_l < 0 or gamma_r < 0:
        raise ValueError("rates must be >= 0")
    n = spec.n_sites
    if spec.coupling_mode is CouplingMode.COLLECTIVE:
        down = np.diag(np.ones(n - 1), k=1)
        return [np.sqrt(gamma_l) * down, np.sqrt(gamma_r) * down.T]
    ops = []
    for b in range(spec.n_bonds):
        down = np.zeros((n, n))
        down[b, b + 1] = 1.0
        ops.append(np.sqrt(gamma_l) * down)
        ops.append(np.sqrt(gamma_r) * down.T)
    return ops


def dephasing_ops(spec: LatticeSpec, gamma_dep: float) -> list[np.ndarray]:
    """Per-site dephasing jump operators sqrt(gamma)*|n><n|."""
    if gamma_dep < 0:
        raise ValueError("dephasing rate must be >= 0")
    root = np.sqrt(gamma_dep)
    out = []
    for n in range(spec.n_sites):
        proj = np.zeros((spec.n_sites, spec.n_sites))
        proj[n, n] = root
        out.append(proj)
    return out
