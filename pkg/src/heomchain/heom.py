"""Auxiliary-density-operator space and hierarchy generator assembly.

The hierarchy state is a stack of N x N operators rho_n indexed by occupation
vectors n = (n_1, ..., n_K) over the K exponential terms of a bath
decomposition, truncated at total tier sum(n) <= max_tier.  The flattened
state vector concatenates column-stacked ADOs in lexicographic label order,
the physical system block first.  The equation of motion assembled here is

    d rho_n / dt = (L0 - sum_k n_k chi_k) rho_n
                   - i sum_k u_k(n) [U_k, rho_{n+e_k}]
                   - i sum_k d_k(n) (a_k V_k rho_{n-e_k} - b_k rho_{n-e_k} V_k)

with (u, d) = (1, n_k) in the bare convention and the symmetrized square-root
factors in the scaled convention (same physical block, better conditioning).
For the full interaction U_k = V_k = V and (a_k, b_k) encode the real/imag
channel split; under the rotating-wave approximation the slot's channel picks
V_k in {V+, V-}, U_k the opposite, and b_k comes from the conjugate-rate
partner term of the opposite channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .bath import Channel, ExponentialDecomposition
from .lattice import (
    CouplingMode,
    LatticeSpec,
    build_coupling,
    build_hamiltonian,
    split_raising_lowering,
)
from .liouville import commutator_super, hamiltonian_liouvillian, spre, spost, unvec, vec

__all__ = [
    "DEFAULT_ADO_CAP",
    "AdoSpace",
    "Generator",
    "enumerate_ados",
    "build_heom_generator",
    "build_rwa_heom_generator",
    "embed_initial_state",
    "reduced_system_state",
]

DEFAULT_ADO_CAP = 10**6

# relative tolerance for matching a term to its conjugate-rate partner
_PARTNER_RTOL = 1e-8


def _count_ados(n_slots: int, max_tier: int) -> int:
    return math.comb(n_slots + max_tier, max_tier)


class AdoSpace:
    """Occupation vectors over K slots with total tier <= max_tier.

    Labels are lexicographically ordered tuples; the zero vector (the
    physical density matrix) is index 0.  Neighbor tables give the index of
    label +/- e_k, or -1 where the neighbor leaves the truncated space.
    """

    def __init__(self, n_slots: int, max_tier: int, *, cap: int = DEFAULT_ADO_CAP):
        if n_slots < 1:
            raise ValueError(f"need at least one slot, got {n_slots}")
        if max_tier < 0:
            raise ValueError(f"max_tier must be >= 0, got {max_tier}")
        total = _count_ados(n_slots, max_tier)
        if total > cap:
            raise ValueError(
                f"ADO space of size {total} exceeds cap {cap} "
                f"(K = {n_slots}, max_tier = {max_tier})"
            )
        self.n_slots = n_slots
        self.max_tier = max_tier

        labels: list[tuple[int, ...]] = []

        def extend(prefix: tuple[int, ...], budget: int):
            if len(prefix) == n_slots:
                labels.append(prefix)
                return
            for v in range(budget + 1):
                extend(prefix + (v,), budget - v)

        extend((), max_tier)
        labels.sort()
        self.labels = labels
        self._index = {lab: i for i, lab in enumerate(labels)}

        occ = np.array(labels, dtype=np.int64).reshape(len(labels), n_slots)
        self.occupations = occ
        self._up = np.full((len(labels), n_slots), -1, dtype=np.int64)
        self._down = np.full((len(labels), n_slots), -1, dtype=np.int64)
        for i, lab in enumerate(labels):
            tier = sum(lab)
            for k in range(n_slots):
                if tier < max_tier:
                    up = lab[:k] + (lab[k] + 1,) + lab[k + 1:]
                    self._up[i, k] = self._index[up]
                if lab[k] > 0:
                    down = lab[:k] + (lab[k] - 1,) + lab[k + 1:]
                    self._down[i, k] = self._index[down]

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label) -> int:
        try:
            return self._index[tuple(label)]
        except KeyError:
            raise ValueError(f"label {label} not in ADO space") from None

    def tier(self, label) -> int:
        return int(sum(label))

    def up(self, idx: int, slot: int) -> int:
        """Index of the ADO one unit higher in ``slot`` (-1 if truncated)."""
        return int(self._up[idx, slot])

    def down(self, idx: int, slot: int) -> int:
        return int(self._down[idx, slot])


def enumerate_ados(n_slots: int, max_tier: int, *,
                   cap: int = DEFAULT_ADO_CAP) -> AdoSpace:
    """Build the truncated occupation-vector space (C(K+m, m) labels)."""
    return AdoSpace(n_slots, max_tier, cap=cap)


@dataclass
class Generator:
    """A vectorized evolution generator over the system (x) ADO space."""

    matrix: sparse.csr_matrix
    lattice: LatticeSpec
    ado: AdoSpace
    kind: str                 # "heom" | "rwa-heom" | "bmme"
    convention: str = ""      # "scaled" | "bare" for hierarchies

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def system_block(self) -> np.ndarray:
        """Dense m = 0 diagonal block (the physical sector's self-coupling)."""
        n2 = self.n_sites**2
        return self.matrix[:n2, :n2].toarray()

    def export_triplets(self, path) -> None:
        """Write the sparse matrix as 'row col re im' text lines."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# dim {self.dim} kind {self.kind}\n")
            for r, c, z in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {z.real!r} {z.imag!r}\n")


def embed_initial_state(rho_s: np.ndarray, ado: AdoSpace) -> np.ndarray:
    """Place a system density matrix in the tier-0 slot, zeros elsewhere."""
    v0 = vec(np.asarray(rho_s, dtype=complex))
    full = np.zeros(ado.size * v0.size, dtype=complex)
    full[: v0.size] = v0
    return full


def reduced_system_state(vec_state: np.ndarray, ado: AdoSpace) -> np.ndarray:
    """Extract and devectorize the physical (m = 0) block."""
    vec_state = np.asarray(vec_state)
    if vec_state.ndim != 1 or vec_state.size % ado.size:
        raise ValueError(
            f"state of length {vec_state.size} does not tile {ado.size} ADOs"
        )
    n2 = vec_state.size // ado.size
    return unvec(vec_state[:n2])


@dataclass
class _Slot:
    """One hierarchy slot: an exponential term bound to coupling operators."""

    rate: complex
    v_op: np.ndarray      # operator inside the down-coupling B
    u_op: np.ndarray      # operator inside the up-coupling commutator A
    a_amp: complex        # B = a * V rho - b * rho V
    b_amp: complex

    @property
    def scale(self) -> float:
        s = max(abs(self.a_amp), abs(self.b_amp))
        return s if s > 0 else 1.0


def _find_partner(terms, i: int) -> int:
    """Index of the term whose rate is the conjugate of term i's rate."""
    target = terms[i].rate.conjugate()
    tol = _PARTNER_RTOL * max(1.0, abs(target))
    if abs(terms[i].rate - target) <= tol:
        return i
    best, best_d = -1, tol
    for j, t in enumerate(terms):
        d = abs(t.rate - target)
        if d <= best_d:
            best, best_d = j, d
    if best < 0:
        raise ValueError(
            f"no conjugate-rate partner for term with rate {terms[i].rate}; "
            "the decomposition is not closed under conjugation"
        )
    return best


def _full_ri_slots(decomposition: ExponentialDecomposition,
                   v_op: np.ndarray) -> list[_Slot]:
    slots = []
    for channel in (Channel.REAL, Channel.IMAG):
        terms = decomposition.channel_terms(channel)
        for i, t in enumerate(terms):
            p = terms[_find_partner(terms, i)]
            if channel is Channel.REAL:
                a = t.amplitude
                b = p.amplitude.conjugate()
            else:
                a = 1j * t.amplitude
                b = -1j * p.amplitude.conjugate()
            slots.append(_Slot(t.rate, v_op, v_op, a, b))
    return slots


def _rwa_slots(decomposition: ExponentialDecomposition, v_plus: np.ndarray,
               v_minus: np.ndarray) -> list[_Slot]:
    by_channel = {
        Channel.ABSORB: decomposition.channel_terms(Channel.ABSORB),
        Channel.EMIT: decomposition.channel_terms(Channel.EMIT),
    }
    ops = {Channel.ABSORB: v_plus, Channel.EMIT: v_minus}
    slots = []
    for channel, terms in by_channel.items():
        other = (Channel.EMIT if channel is Channel.ABSORB else Channel.ABSORB)
        partners = by_channel[other]
        if terms and not partners:
            raise ValueError(
                f"{channel.name} terms present but no {other.name} terms to "
                "partner with; hierarchy needs both channels"
            )
        for i, t in enumerate(terms):
            # partner: opposite-channel term at the conjugate rate
            shim = list(partners)
            target = t.rate.conjugate()
            tol = _PARTNER_RTOL * max(1.0, abs(target))
            best, best_d = -1, tol
            for j, q in enumerate(shim):
                d = abs(q.rate - target)
                if d <= best_d:
                    best, best_d = j, d
            if best < 0:
                raise ValueError(
                    f"no opposite-channel partner at rate {target} for "
                    f"{channel.name} term at rate {t.rate}"
                )
            p = shim[best]
            slots.append(_Slot(
                t.rate, ops[channel], ops[other],
                t.amplitude, p.amplitude.conjugate(),
            ))
    return slots


def _coupling_factors(occ_k: np.ndarray, scale: float, convention: str):
    """Per-ADO up/down weights for one slot, given its occupation column."""
    if convention == "bare":
        up = np.ones(occ_k.shape, dtype=float)
        down = occ_k.astype(float)
    elif convention == "scaled":
        up = np.sqrt((occ_k + 1.0) * scale)
        down = np.sqrt(occ_k / scale)
    else:
        raise ValueError(f"unknown hierarchy convention {convention!r}")
    return up, down


def _assemble(lattice: LatticeSpec, slots: list[_Slot], max_tier: int,
              kind: str, convention: str, ado_cap: int) -> Generator:
    ado = enumerate_ados(len(slots), max_tier, cap=ado_cap)
    n2 = lattice.n_sites**2
    eye_sys = sparse.identity(n2, format="csr", dtype=complex)

    l0 = hamiltonian_liouvillian(build_hamiltonian(lattice))
    rates = np.array([s.rate for s in slots])
    damping = -(ado.occupations @ rates)

    gen = sparse.kron(sparse.identity(ado.size, format="csr"), l0, format="csr")
    gen = gen + sparse.kron(
        sparse.diags(damping, format="csr"), eye_sys, format="csr"
    )

    size = ado.size
    for k, slot in enumerate(slots):
        up_super = -1j * commutator_super(slot.u_op)
        down_super = -1j * (
            slot.a_amp * spre(slot.v_op) - slot.b_amp * spost(slot.v_op)
        )
        up_w, down_w = _coupling_factors(
            ado.occupations[:, k].astype(float), slot.scale, convention
        )
        up_idx = ado._up[:, k]
        down_idx = ado._down[:, k]

        has_up = up_idx >= 0
        if np.any(has_up) and up_super.nnz:
            adj = sparse.coo_matrix(
                (up_w[has_up], (np.nonzero(has_up)[0], up_idx[has_up])),
                shape=(size, size),
            )
            gen = gen + sparse.kron(adj.tocsr(), up_super, format="csr")
        has_down = down_idx >= 0
        if np.any(has_down) and down_super.nnz:
            adj = sparse.coo_matrix(
                (down_w[has_down], (np.nonzero(has_down)[0], down_idx[has_down])),
                shape=(size, size),
            )
            gen = gen + sparse.kron(adj.tocsr(), down_super, format="csr")

    return Generator(gen.tocsr(), lattice, ado, kind, convention)


def build_heom_generator(lattice: LatticeSpec,
                         decomposition: ExponentialDecomposition,
                         max_tier: int, *, convention: str = "scaled",
                         ado_cap: int = DEFAULT_ADO_CAP) -> Generator:
    """Full-interaction hierarchy generator.

    ``decomposition`` must use the real/imaginary channel split.  In separate
    coupling mode the decomposition is replicated per bond, so the slot count
    is (N-1) * n_terms.
    """
    if decomposition.kind != "full-ri":
        raise ValueError(
            "build_heom_generator needs a REAL/IMAG-channel decomposition; "
            f"got {decomposition.kind!r}"
        )
    slots = []
    for v_op in build_coupling(lattice):
        slots.extend(_full_ri_slots(decomposition, v_op))
    return _assemble(lattice, slots, max_tier, "heom", convention, ado_cap)


def build_rwa_heom_generator(lattice: LatticeSpec,
                             decomposition: ExponentialDecomposition,
                             max_tier: int, *, convention: str = "scaled",
                             ado_cap: int = DEFAULT_ADO_CAP) -> Generator:
    """Rotating-wave hierarchy generator (absorb/emit channel decomposition)."""
    if decomposition.kind != "rwa":
        raise ValueError(
            "build_rwa_heom_generator needs an ABSORB/EMIT-channel "
            f"decomposition; got {decomposition.kind!r}"
        )
    h = build_hamiltonian(lattice)
    slots = []
    for v_op in build_coupling(lattice):
        v_plus, v_minus = split_raising_lowering(v_op, h)
        slots.extend(_rwa_slots(decomposition, v_plus, v_minus))
    return _assemble(lattice, slots, max_tier, "rwa-heom", convention, ado_cap)
