"""Exact influence quantities computed from process-matrix diagonals.

The influence of a process on a qubit set S is the total weight of the
chi-diagonal entries whose Pauli string is non-identity somewhere on S;
equivalently one minus the fidelity of the induced sub-process on S to the
identity. The three test gates I, H, R_x(pi/2) each leave one single-qubit
Pauli error type invisible, which is what the per-gate sampler expectations
computed here encode: gate l fails to flip exactly the strings whose digits
on S stay inside {I,Z}, {I,X}, {I,Y} respectively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paulis import all_digits
from .processes import ChiMatrix, process_fidelity
from .subsets import QubitSubset

# Pauli digit values gate l cannot see on the target set: {I,Z}, {I,X}, {I,Y}.
BLIND_DIGITS = ((0, 3), (0, 1), (0, 2))


def _subset_columns(s: QubitSubset) -> list[int]:
    return [q - 1 for q in s.qubits]


def _unit_interval(v: float, tol: float = 1e-9) -> float:
    """Clamp float-noise excursions outside [0, 1]; anything larger is a bug."""
    if v < -tol or v > 1.0 + tol:
        raise ValueError(f"value {v!r} is not a probability within tolerance {tol:g}")
    return min(max(v, 0.0), 1.0)


def _diag_weight(c: ChiMatrix, s: QubitSubset, allowed: tuple[int, ...]) -> float:
    """Sum of chi diagonal over indices whose digits on S all lie in ``allowed``."""
    cols = _subset_columns(s)
    if not cols:
        return 1.0
    digits = all_digits(c.n)[:, cols]
    keep = np.isin(digits, allowed).all(axis=1)
    return float(c.diagonal()[keep].sum())


def influence_exact(c: ChiMatrix, s: QubitSubset) -> float:
    """Influence of the process on S: 1 minus the identity-digit diagonal weight."""
    _check_subset(c, s)
    return _unit_interval(1.0 - _diag_weight(c, s, (0,)))


def sampler_expectations(c: ChiMatrix, s: QubitSubset) -> tuple[float, float, float]:
    """Exact expectations (E1, E2, E3) of the three per-gate influence samplers."""
    _check_subset(c, s)
    return tuple(_unit_interval(1.0 - _diag_weight(c, s, blind)) for blind in BLIND_DIGITS)


def influence_bounds(expectations, mode: str = "two") -> tuple[float, float]:
    """Lower/upper influence bounds from sampler expectations, clamped to [0, 1].

    ``mode="two"`` uses the first two expectations (IL = max, IU = sum);
    ``mode="three"`` uses all three (IL = max, IU = half the sum).
    """
    e = [_unit_interval(float(v)) for v in expectations]
    if mode == "two":
        if len(e) < 2:
            raise ValueError("two-gate bounds need two sampler expectations")
        lo, hi = max(e[:2]), e[0] + e[1]
    elif mode == "three":
        if len(e) < 3:
            raise ValueError("three-gate bounds need three sampler expectations")
        lo, hi = max(e[:3]), 0.5 * (e[0] + e[1] + e[2])
    else:
        raise ValueError(f"unknown bound mode {mode!r}")
    clamp = lambda v: min(max(v, 0.0), 1.0)
    return clamp(lo), clamp(hi)


@dataclass(frozen=True)
class InfluenceDiagnostics:
    """The eight chi-diagonal aggregates behind the bound proofs.

    ``o`` is the all-identity weight on S; ``a``, ``b``, ``c`` the weights with
    digits confined to {I,Z}, {I,X}, {I,Y}; the ``*_only`` values subtract
    ``o``; ``d`` is the remainder, so o + a_only + b_only + c_only + d = 1.
    """

    o: float
    a: float
    b: float
    c: float
    a_only: float
    b_only: float
    c_only: float
    d: float


def influence_diagnostics(chi: ChiMatrix, s: QubitSubset) -> InfluenceDiagnostics:
    _check_subset(chi, s)
    if s.is_empty():
        raise ValueError("diagnostics require a non-empty qubit set")
    o = _diag_weight(chi, s, (0,))
    a = _diag_weight(chi, s, (0, 3))
    b = _diag_weight(chi, s, (0, 1))
    c = _diag_weight(chi, s, (0, 2))
    diag = InfluenceDiagnostics(
        o=o, a=a, b=b, c=c, a_only=a - o, b_only=b - o, c_only=c - o, d=1.0 - (a + b + c - 2 * o)
    )
    tol = 1e-9
    if min(diag.a_only, diag.b_only, diag.c_only, diag.d, o) < -tol:
        raise ValueError(f"diagnostics produced negative weights: {diag}")
    if not (min(a, b) >= o - tol and o >= a + b - 1 - tol):
        raise ValueError("two-gate diagnostic inequality violated")
    if not (min(a, b, c) >= o - tol and o >= (a + b + c - 1) / 2 - tol):
        raise ValueError("three-gate diagnostic inequality violated")
    return diag


def reduce_subprocess(c: ChiMatrix, s: QubitSubset) -> ChiMatrix:
    """Process matrix of the induced sub-process on S.

    Sums chi over equal Pauli digits on the complement:
    chi'_{x_S y_S} = sum_z chi_{(x_S.z),(y_S.z)}. Equals the chi of
    rho_S -> Tr_{S^c}[Phi(rho_S x I/2^|S^c|)].
    """
    _check_subset(c, s)
    if s.is_empty():
        raise ValueError("cannot reduce onto an empty qubit set")
    n = c.n
    t = c.mat.reshape([4] * (2 * n))
    # einsum labels: row digit of qubit i and column digit of qubit i share a
    # summed label when i is traced out (complement), distinct output labels
    # otherwise. Output order keeps ascending qubit position.
    letters = "abcdefghijklmnopqrstuvwxyz"
    row_lbl, col_lbl, out_row, out_col = [], [], [], []
    next_free = 0
    for q in range(1, n + 1):
        if q in s:
            r, cl = letters[next_free], letters[next_free + 1]
            next_free += 2
            out_row.append(r)
            out_col.append(cl)
        else:
            r = cl = letters[next_free]
            next_free += 1
        row_lbl.append(r)
        col_lbl.append(cl)
    spec = "".join(row_lbl) + "".join(col_lbl) + "->" + "".join(out_row) + "".join(out_col)
    k = s.size
    reduced = np.einsum(spec, t).reshape(4**k, 4**k)
    return ChiMatrix(k, reduced)


def influence_via_infidelity(c: ChiMatrix, s: QubitSubset) -> float:
    """Influence as 1 - F(Phi_S, identity); cross-check for influence_exact."""
    from .processes import identity_chi

    sub = reduce_subprocess(c, s)
    return 1.0 - process_fidelity(sub, identity_chi(sub.n))


def _check_subset(c: ChiMatrix, s: QubitSubset) -> None:
    if s.n != c.n:
        raise ValueError(f"subset is over n={s.n} qubits but process has n={c.n}")
