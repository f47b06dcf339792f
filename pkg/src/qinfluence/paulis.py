"""Multi-qubit Pauli operators and their base-4 index bookkeeping.

Every module in this package shares one ordering convention: an n-qubit
Pauli string is labelled by a base-4 integer whose most significant digit
belongs to qubit 1, with digit values 0=I, 1=X, 2=Y, 3=Z. ``sigma(0, n)``
is the identity, and index ``k`` of ``pauli_basis(n)`` is the Kronecker
product of the single-qubit operators named by the digits of ``k``.
"""

from __future__ import annotations

from functools import reduce

import numpy as np

# Default refusal threshold for dense 4^n x 4^n objects. Memory grows as
# 16^n, so well below this cap the practical limit is machine RAM.
DENSE_QUBIT_CAP = 12

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

SINGLE_QUBIT_PAULIS = (I2, X, Y, Z)


class DenseSizeError(ValueError):
    """Raised when a dense representation is requested above the qubit cap."""


def check_dense_size(n: int, cap: int = DENSE_QUBIT_CAP) -> None:
    if n < 1:
        raise ValueError(f"qubit count must be >= 1, got {n}")
    if n > cap:
        raise DenseSizeError(
            f"dense path refused for n={n} qubits (cap {cap}); "
            "use the junta-structured sampler path for large systems"
        )


def kron_all(mats) -> np.ndarray:
    """Kronecker product of a sequence of matrices, first factor most significant."""
    return reduce(np.kron, mats)


def index_to_digits(index: int, n: int) -> tuple[int, ...]:
    """Base-4 digits of a Pauli index, qubit 1 first (most significant)."""
    if not 0 <= index < 4**n:
        raise ValueError(f"Pauli index {index} out of range for n={n}")
    digits = []
    for i in range(n - 1, -1, -1):
        digits.append((index >> (2 * i)) & 3)
    return tuple(digits)


def digits_to_index(digits) -> int:
    """Inverse of :func:`index_to_digits`."""
    index = 0
    for d in digits:
        if not 0 <= d <= 3:
            raise ValueError(f"Pauli digit {d} not in {{0,1,2,3}}")
        index = (index << 2) | d
    return index


def all_digits(n: int) -> np.ndarray:
    """(4^n, n) array of base-4 digits for every Pauli index, qubit 1 in column 0."""
    idx = np.arange(4**n, dtype=np.int64)
    cols = [(idx >> (2 * (n - 1 - j))) & 3 for j in range(n)]
    return np.stack(cols, axis=1)


def sigma(index: int, n: int) -> np.ndarray:
    """The n-qubit Pauli operator with the given base-4 index."""
    check_dense_size(n)
    return kron_all([SINGLE_QUBIT_PAULIS[d] for d in index_to_digits(index, n)])


def pauli_basis(n: int) -> np.ndarray:
    """All 4^n Pauli operators in index order, shape (4^n, 2^n, 2^n).

    Each operator is unitary and Hermitian; index 0 is the identity.
    """
    check_dense_size(n)
    ops = np.array(SINGLE_QUBIT_PAULIS)
    for _ in range(n - 1):
        # ops[a] ⊗ SINGLE[b] for all (a, b), new index = 4*a + b
        ops = np.einsum("aij,bkl->abikjl", ops, np.array(SINGLE_QUBIT_PAULIS)).reshape(
            4 * len(ops), 2 * ops.shape[1], 2 * ops.shape[2]
        )
    return ops


def pauli_vec_matrix(n: int) -> np.ndarray:
    """(4^n, 4^n) matrix whose row x is the row-stacking vec of sigma_x."""
    check_dense_size(n)
    d = 2**n
    return pauli_basis(n).reshape(4**n, d * d)
