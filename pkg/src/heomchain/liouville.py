"""Column-stacking superoperator algebra on flattened density matrices.

Vectorization convention is column stacking: ``vec(rho) = rho.flatten(order="F")``,
so for a 2x2 matrix the order is (rho11, rho21, rho12, rho22).  Under this
convention ``vec(A @ rho @ B) = kron(B.T, A) @ vec(rho)``.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

__all__ = [
    "vec",
    "unvec",
    "spre",
    "spost",
    "sandwich",
    "commutator_super",
    "anticommutator_super",
    "hamiltonian_liouvillian",
    "dissipator_super",
]


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a square matrix into a vector."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.flatten(order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`; the length must be a perfect square."""
    v = np.asarray(v)
    n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise ValueError(f"vector of length {v.size} is not a stacked square matrix")
    return v.reshape((n, n), order="F")


def _as_sparse(a) -> sparse.csr_matrix:
    if sparse.issparse(a):
        return a.tocsr().astype(complex)
    return sparse.csr_matrix(np.asarray(a, dtype=complex))


def spre(a) -> sparse.csr_matrix:
    """Superoperator for left multiplication: vec(A rho)."""
    a = _as_sparse(a)
    n = a.shape[0]
    return sparse.kron(sparse.identity(n, format="csr"), a, format="csr")


def spost(b) -> sparse.csr_matrix:
    """Superoperator for right multiplication: vec(rho B)."""
    b = _as_sparse(b)
    n = b.shape[0]
    return sparse.kron(b.T, sparse.identity(n, format="csr"), format="csr")


def sandwich(a, b) -> sparse.csr_matrix:
    """Superoperator for vec(A rho B)."""
    a = _as_sparse(a)
    b = _as_sparse(b)
    return sparse.kron(b.T, a, format="csr")


def commutator_super(a) -> sparse.csr_matrix:
    """Superoperator for vec([A, rho])."""
    return spre(a) - spost(a)


def anticommutator_super(a) -> sparse.csr_matrix:
    """Superoperator for vec({A, rho})."""
    return spre(a) + spost(a)


def hamiltonian_liouvillian(h) -> sparse.csr_matrix:
    """Coherent part -i[H, rho] as a superoperator."""
    return -1j * commutator_super(h)


def dissipator_super(l_op) -> sparse.csr_matrix:
    """Lindblad dissipator L rho L+ - {L+ L, rho}/2 as a superoperator."""
    l_op = _as_sparse(l_op)
    ldl = (l_op.conj().T @ l_op).tocsr()
    return sandwich(l_op, l_op.conj().T) - 0.5 * anticommutator_super(ldl)
