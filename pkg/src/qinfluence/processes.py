"""Representations of n-qubit quantum processes and conversions between them.

Three interchangeable forms are supported:

* ``KrausSet`` -- operators {K_i} with sum_i K_i^dag K_i = I.
* ``ChoiMatrix`` -- the unnormalized Choi operator J with Tr J = 2^n. The
  row-stacking convention ``vec(|a><b|) = |a>|b>`` is used throughout, which
  places the *output* factor first: ``J[(c,a),(d,b)] = <c| Phi(|a><b|) |d>``.
  Equivalently ``J = sum_i vec(K_i) vec(K_i)^dag``.
* ``ChiMatrix`` -- the process matrix chi with ``Phi(rho) = sum_{x,y}
  chi_{xy} sigma_x rho sigma_y`` over the base-4-ordered Pauli strings.
  chi and J are related by ``chi = U^dag J U / d`` where the columns of U
  are ``vec(sigma_x)/sqrt(d)``.

All types are immutable after construction and validated on construction;
inputs that fail the CPTP invariants are rejected, never repaired.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .paulis import check_dense_size, pauli_vec_matrix

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-9
TRACE_TOL = 1e-9


class ValidationError(ValueError):
    """An object failed its representation invariants."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _check_hermitian(m: np.ndarray, what: str, tol: float = HERMITICITY_TOL) -> None:
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise ValidationError(f"{what} is not Hermitian (max deviation {dev:.3e} > {tol:g})")


def _check_psd(m: np.ndarray, what: str, tol: float = PSD_TOL) -> None:
    w = np.linalg.eigvalsh(m)
    if w.size and w[0] < -tol:
        raise ValidationError(f"{what} is not PSD (min eigenvalue {w[0]:.3e} < -{tol:g})")


@dataclass(frozen=True)
class ChiMatrix:
    """Process matrix chi of a CPTP map: Hermitian, PSD, unit trace."""

    n: int
    mat: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        check_dense_size(self.n)
        object.__setattr__(self, "mat", _freeze(self.mat))
        dim = 4**self.n
        if self.mat.shape != (dim, dim):
            raise ValidationError(f"chi matrix for n={self.n} must be {dim}x{dim}, got {self.mat.shape}")
        _check_hermitian(self.mat, "chi matrix")
        _check_psd(self.mat, "chi matrix")
        tr = self.mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"chi matrix trace {tr:.12f} != 1 (tol {TRACE_TOL:g})")

    @property
    def dim(self) -> int:
        return 2**self.n

    def diagonal(self) -> np.ndarray:
        return self.mat.diagonal().real


@dataclass(frozen=True)
class ChoiMatrix:
    """Unnormalized Choi operator: Hermitian, PSD, trace d, TP partial trace."""

    n: int
    mat: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        check_dense_size(self.n)
        object.__setattr__(self, "mat", _freeze(self.mat))
        d = 2**self.n
        if self.mat.shape != (d * d, d * d):
            raise ValidationError(f"Choi matrix for n={self.n} must be {d*d}x{d*d}, got {self.mat.shape}")
        _check_hermitian(self.mat, "Choi matrix")
        _check_psd(self.mat, "Choi matrix")
        tr = self.mat.trace()
        if abs(tr - d) > TRACE_TOL:
            raise ValidationError(f"Choi matrix trace {tr:.12f} != {d}")
        dev = tp_deviation(self.mat, self.n)
        if dev > TRACE_TOL:
            raise ValidationError(f"Choi matrix violates trace preservation (deviation {dev:.3e})")

    @property
    def dim(self) -> int:
        return 2**self.n


@dataclass(frozen=True)
class KrausSet:
    """Kraus operators of a CPTP map: sum_i K_i^dag K_i = I."""

    n: int
    ops: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"qubit count must be >= 1, got {self.n}")
        if not self.ops:
            raise ValidationError("Kraus set must contain at least one operator")
        d = 2**self.n
        frozen = []
        acc = np.zeros((d, d), dtype=np.complex128)
        for k in self.ops:
            k = _freeze(k)
            if k.shape != (d, d):
                raise ValidationError(f"Kraus operator shape {k.shape} != ({d}, {d})")
            frozen.append(k)
            acc += k.conj().T @ k
        dev = np.max(np.abs(acc - np.eye(d)))
        if dev > TRACE_TOL:
            raise ValidationError(f"Kraus set is not trace preserving (deviation {dev:.3e})")
        object.__setattr__(self, "ops", tuple(frozen))

    @property
    def dim(self) -> int:
        return 2**self.n

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=np.complex128)
        for k in self.ops:
            out += k @ rho @ k.conj().T
        return out


def tp_deviation(choi_mat: np.ndarray, n: int) -> float:
    """Max-abs deviation of the output partial trace of J from the identity."""
    d = 2**n
    t = choi_mat.reshape(d, d, d, d)  # axes (out_row, in_row, out_col, in_col)
    reduced = np.einsum("cacb->ab", t)
    return float(np.max(np.abs(reduced - np.eye(d))))


def kraus_to_choi(k: KrausSet) -> ChoiMatrix:
    """Choi operator from Kraus operators, J = sum vec(K) vec(K)^dag."""
    d = k.dim
    j = np.zeros((d * d, d * d), dtype=np.complex128)
    for op in k.ops:
        v = op.reshape(d * d)  # row-stacking vectorization
        j += np.outer(v, v.conj())
    return ChoiMatrix(k.n, j)


def choi_to_kraus(j: ChoiMatrix, atol: float = 1e-13) -> KrausSet:
    """A Kraus representation from the eigendecomposition of the Choi operator.

    Eigenvalues below ``atol`` (including the small negatives a valid Choi may
    carry numerically) are dropped; the discarded trace stays well inside the
    CPTP validation tolerance.
    """
    d = j.dim
    w, v = np.linalg.eigh(j.mat)
    ops = [np.sqrt(wi) * v[:, i].reshape(d, d) for i, wi in enumerate(w) if wi > atol]
    if not ops:
        raise ValidationError("Choi operator has no positive eigenvalues")
    return KrausSet(j.n, tuple(ops))


def choi_to_chi(j: ChoiMatrix) -> ChiMatrix:
    """Process matrix from the Choi operator, chi = U^dag J U / d."""
    p = pauli_vec_matrix(j.n)  # row x = vec(sigma_x)
    d = j.dim
    chi = p.conj() @ j.mat @ p.T / (d * d)
    return ChiMatrix(j.n, chi)


def chi_to_choi(c: ChiMatrix) -> ChoiMatrix:
    """Inverse of :func:`choi_to_chi`: J = sum_{xy} chi_xy vec(sigma_x) vec(sigma_y)^dag."""
    p = pauli_vec_matrix(c.n)
    j = p.T @ c.mat @ p.conj()
    return ChoiMatrix(c.n, j)


def kraus_to_chi(k: KrausSet) -> ChiMatrix:
    return choi_to_chi(kraus_to_choi(k))


def chi_to_kraus(c: ChiMatrix) -> KrausSet:
    return choi_to_kraus(chi_to_choi(c))


def unitary_to_chi(u: np.ndarray, n: int) -> ChiMatrix:
    """chi of a unitary channel: rank one, chi_xy = c_x conj(c_y) with c_x = Tr(sigma_x U)/d."""
    check_dense_size(n)
    d = 2**n
    if u.shape != (d, d):
        raise ValidationError(f"unitary for n={n} must be {d}x{d}, got {u.shape}")
    c = pauli_vec_matrix(n).conj() @ u.reshape(d * d) / d
    return ChiMatrix(n, np.outer(c, c.conj()))


def apply_process(process: ChiMatrix | KrausSet, rho: np.ndarray) -> np.ndarray:
    """Apply a process to a density matrix.

    The Kraus and chi paths agree; the chi path routes through the Choi
    operator, ``Phi(rho)_{cd} = sum_{ab} J[(c,a),(d,b)] rho_{ab}``.
    """
    d = process.dim
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (d, d):
        raise ValidationError(f"state shape {rho.shape} does not match process dimension {d}")
    if isinstance(process, KrausSet):
        return process.apply(rho)
    j = chi_to_choi(process).mat.reshape(d, d, d, d)
    return np.einsum("cadb,ab->cd", j, rho)


def identity_chi(n: int) -> ChiMatrix:
    chi = np.zeros((4**n, 4**n), dtype=np.complex128)
    chi[0, 0] = 1.0
    return ChiMatrix(n, chi)


def random_channel(n: int, rank: int | None = None, rng: np.random.Generator | None = None) -> KrausSet:
    """A Haar-ish random CPTP channel from a random Stinespring isometry.

    A (d*rank, d) complex Ginibre matrix is orthonormalized by QR; its d x d
    blocks are the Kraus operators. ``rank`` defaults to d (full Kraus rank
    would be d^2; d keeps test channels generic but quick).
    """
    if rng is None:
        rng = np.random.default_rng()
    d = 2**n
    r = d if rank is None else rank
    if not 1 <= r <= d * d:
        raise ValueError(f"rank must be in 1..{d*d}, got {r}")
    g = rng.standard_normal((d * r, d)) + 1j * rng.standard_normal((d * r, d))
    q, _ = np.linalg.qr(g)  # columns orthonormal: V^dag V = I
    return KrausSet(n, tuple(q[i * d : (i + 1) * d, :] for i in range(r)))


def random_unitary(dim: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase fixing."""
    if rng is None:
        rng = np.random.default_rng()
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r))).conj()


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a PSD matrix, flooring eigenvalue noise at zero.

    Eigenvalues below 1e-13 of the spectral radius are treated as exact
    zeros: sqrt has infinite slope at 0, so letting +1e-16-scale noise
    through would turn into 1e-8-scale errors downstream.
    """
    w, v = np.linalg.eigh(m)
    floor = 1e-13 * max(float(w[-1]), 0.0) if w.size else 0.0
    w = np.where(w > floor, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def process_fidelity(a: ChiMatrix, b: ChiMatrix) -> float:
    """Fidelity F = (Tr sqrt(sqrt(chi_a) chi_b sqrt(chi_a)))^2 in [0, 1].

    Evaluated as the squared nuclear norm of sqrt(chi_b) sqrt(chi_a): the
    eigenvalues of sqrt(a) b sqrt(a) are the squared singular values of that
    product, and summing singular values avoids taking square roots of
    eigenvalue-level numerical noise.
    """
    if a.n != b.n:
        raise ValidationError(f"fidelity requires equal system sizes, got n={a.n} and n={b.n}")
    sv = np.linalg.svd(_psd_sqrt(b.mat) @ _psd_sqrt(a.mat), compute_uv=False)
    f = float(sv.sum() ** 2)
    return min(f, 1.0)


def process_distance(a: ChiMatrix, b: ChiMatrix) -> float:
    """Average-case distance D = ||chi_a - chi_b||_F / sqrt(2) in [0, 1]."""
    if a.n != b.n:
        raise ValidationError(f"distance requires equal system sizes, got n={a.n} and n={b.n}")
    return float(np.linalg.norm(a.mat - b.mat) / np.sqrt(2))
