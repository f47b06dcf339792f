"""Qubit subsets as bitmasks over positions 1..n.

Bit ``i-1`` of the mask marks qubit ``i``. Masks are plain Python ints, so
subsets work unchanged up to the 64-qubit sampler limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True, order=True)
class QubitSubset:
    """An immutable subset of the qubits 1..n."""

    mask: int
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"system size must be >= 1, got {self.n}")
        if not 0 <= self.mask < (1 << self.n):
            raise ValueError(f"mask {self.mask:#x} out of range for n={self.n}")

    @classmethod
    def from_qubits(cls, qubits: Iterable[int], n: int) -> "QubitSubset":
        mask = 0
        for q in qubits:
            if not 1 <= q <= n:
                raise ValueError(f"qubit {q} out of range 1..{n}")
            mask |= 1 << (q - 1)
        return cls(mask, n)

    @classmethod
    def full(cls, n: int) -> "QubitSubset":
        return cls((1 << n) - 1, n)

    @classmethod
    def empty(cls, n: int) -> "QubitSubset":
        return cls(0, n)

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.n) if self.mask >> i & 1)

    @property
    def size(self) -> int:
        return bin(self.mask).count("1")

    def is_empty(self) -> bool:
        return self.mask == 0

    def complement(self) -> "QubitSubset":
        return QubitSubset(~self.mask & ((1 << self.n) - 1), self.n)

    def union(self, other: "QubitSubset") -> "QubitSubset":
        self._check_same_system(other)
        return QubitSubset(self.mask | other.mask, self.n)

    def intersection(self, other: "QubitSubset") -> "QubitSubset":
        self._check_same_system(other)
        return QubitSubset(self.mask & other.mask, self.n)

    def issubset(self, other: "QubitSubset") -> bool:
        self._check_same_system(other)
        return self.mask & ~other.mask == 0

    def _check_same_system(self, other: "QubitSubset") -> None:
        if self.n != other.n:
            raise ValueError(f"subsets live on different systems: n={self.n} vs n={other.n}")

    def __contains__(self, qubit: int) -> bool:
        return 1 <= qubit <= self.n and bool(self.mask >> (qubit - 1) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.qubits)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"QubitSubset({{{', '.join(map(str, self.qubits))}}}, n={self.n})"


def all_subsets(n: int, include_empty: bool = False):
    """All subsets of [n] in mask order. Exponential in n; intended for n <= ~5."""
    start = 0 if include_empty else 1
    return [QubitSubset(m, n) for m in range(start, 1 << n)]
