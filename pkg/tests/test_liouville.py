"""Vectorization and superoperator algebra identities."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heomchain.liouville import (
    anticommutator_super,
    commutator_super,
    dissipator_super,
    hamiltonian_liouvillian,
    sandwich,
    spost,
    spre,
    unvec,
    vec,
)

complex_entries = st.complex_numbers(
    max_magnitude=5.0, allow_nan=False, allow_infinity=False)


def square(n):
    return arrays(np.complex128, (n, n), elements=complex_entries)


@given(square(3))
def test_vec_unvec_roundtrip(a):
    np.testing.assert_allclose(unvec(vec(a)), a)


@settings(max_examples=25, deadline=None)
@given(square(3), square(3))
def test_spre_spost_actions(a, rho):
    np.testing.assert_allclose(unvec(spre(a) @ vec(rho)), a @ rho, atol=1e-10)
    np.testing.assert_allclose(unvec(spost(a) @ vec(rho)), rho @ a, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(square(3), square(3), square(3))
def test_sandwich_action(a, b, rho):
    np.testing.assert_allclose(
        unvec(sandwich(a, b) @ vec(rho)), a @ rho @ b, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(square(3), square(3))
def test_commutators(a, rho):
    np.testing.assert_allclose(
        unvec(commutator_super(a) @ vec(rho)), a @ rho - rho @ a, atol=1e-9)
    np.testing.assert_allclose(
        unvec(anticommutator_super(a) @ vec(rho)), a @ rho + rho @ a,
        atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(square(3))
def test_hamiltonian_liouvillian_traceless_action(h):
    h = h + h.conj().T
    rho = np.eye(3, dtype=complex) / 3.0
    drho = unvec(hamiltonian_liouvillian(h) @ vec(rho))
    # -i[H, rho] preserves the trace and Hermiticity of the derivative
    assert abs(np.trace(drho)) < 1e-9
    np.testing.assert_allclose(drho, drho.conj().T, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(square(3), square(3))
def test_dissipator_action(l_op, rho):
    rho = rho + rho.conj().T
    ld = l_op.conj().T
    expected = (l_op @ rho @ ld - 0.5 * (ld @ l_op @ rho + rho @ ld @ l_op))
    np.testing.assert_allclose(
        unvec(dissipator_super(l_op) @ vec(rho)), expected, atol=1e-8)
    assert abs(np.trace(unvec(dissipator_super(l_op) @ vec(rho)))) < 1e-8
