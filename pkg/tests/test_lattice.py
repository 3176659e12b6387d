"""Single-particle lattice operators and their decompositions."""

import numpy as np
import pytest

from heomchain.lattice import (
    CouplingMode,
    LatticeSpec,
    build_coupling,
    build_hamiltonian,
    dephasing_ops,
    lindblad_hopping_ops,
    lowering_operator,
    split_raising_lowering,
)


def test_hamiltonian_is_energy_ladder():
    spec = LatticeSpec(n_sites=4, spacing=0.7)
    h = build_hamiltonian(spec)
    np.testing.assert_allclose(h, np.diag([0.0, 0.7, 1.4, 2.1]))


def test_coupling_mode_string_coercion():
    spec = LatticeSpec(n_sites=3, spacing=1.0, coupling_mode="separate")
    assert spec.coupling_mode is CouplingMode.SEPARATE
    with pytest.raises(ValueError):
        LatticeSpec(n_sites=3, spacing=1.0, coupling_mode="diagonal")


def test_collective_coupling_is_bond_sum():
    spec = LatticeSpec(n_sites=4, spacing=1.0, coupling_mode="collective")
    ops = build_coupling(spec)
    assert len(ops) == 1
    expected = np.zeros((4, 4))
    for b in range(3):
        expected[b, b + 1] = expected[b + 1, b] = 1.0
    np.testing.assert_allclose(ops[0], expected)


def test_separate_coupling_is_one_op_per_bond():
    spec = LatticeSpec(n_sites=4, spacing=1.0, coupling_mode="separate")
    ops = build_coupling(spec)
    assert len(ops) == 3
    np.testing.assert_allclose(sum(ops), build_coupling(
        LatticeSpec(n_sites=4, spacing=1.0, coupling_mode="collective"))[0])


def test_lowering_operator_structure():
    spec = LatticeSpec(n_sites=3, spacing=1.0)
    low = lowering_operator(spec)
    # sum_n |n><n+1|: moves population down the energy ladder
    np.testing.assert_allclose(low, np.diag([1.0, 1.0], k=1))
    h = build_hamiltonian(spec)
    comm = h @ low - low @ h
    np.testing.assert_allclose(comm, -spec.spacing * low)


def test_split_raising_lowering_reassembles():
    spec = LatticeSpec(n_sites=5, spacing=1.0)
    h = build_hamiltonian(spec)
    (v,) = build_coupling(spec)
    v_plus, v_minus = split_raising_lowering(v, h)
    np.testing.assert_allclose(v_plus + v_minus, v, atol=1e-12)
    np.testing.assert_allclose(v_plus, v_minus.conj().T, atol=1e-12)


def test_split_rejects_degenerate_hamiltonian():
    h = np.zeros((3, 3))
    v = np.eye(3)
    with pytest.raises(ValueError):
        split_raising_lowering(v, h)


def test_lindblad_hopping_rates_collective():
    spec = LatticeSpec(n_sites=3, spacing=1.0)
    ops = lindblad_hopping_ops(spec, 0.36, 0.09)
    # one chain-wide loss and one chain-wide gain operator
    assert len(ops) == 2
    np.testing.assert_allclose(ops[0], 0.6 * np.diag([1.0, 1.0], k=1))
    np.testing.assert_allclose(ops[1], 0.3 * np.diag([1.0, 1.0], k=-1))


def test_lindblad_hopping_rates_separate():
    spec = LatticeSpec(n_sites=3, spacing=1.0, coupling_mode="separate")
    ops = lindblad_hopping_ops(spec, 0.36, 0.09)
    # one loss and one gain operator per bond, sqrt-rate weighted
    assert len(ops) == 4
    mags = sorted(float(np.abs(o).max()) for o in ops)
    assert mags == pytest.approx([0.3, 0.3, 0.6, 0.6])


def test_dephasing_ops_are_projectors():
    spec = LatticeSpec(n_sites=3, spacing=1.0)
    ops = dephasing_ops(spec, 0.25)
    assert len(ops) == 3
    for i, op in enumerate(ops):
        expected = np.zeros((3, 3))
        expected[i, i] = 0.5
        np.testing.assert_allclose(op, expected)


def test_invalid_sizes_rejected():
    with pytest.raises(ValueError):
        LatticeSpec(n_sites=1, spacing=1.0)
    with pytest.raises(ValueError):
        LatticeSpec(n_sites=3, spacing=-1.0)
