"""Gate and noise-channel constructors, layered process specs, junta embedding.

A ``ProcessSpec`` lists gates applied left-to-right (first listed acts first
on the state); unlisted qubits carry the identity. Two build paths exist:

* ``embed_dense`` -- the full n-qubit process matrix, for exact computations
  at small n.
* ``junta_view`` -- the composed sub-channel on the union support of all
  non-identity gates, valid for any n up to the 64-qubit sampler limit.
  This is what makes sampling large systems tractable: the dynamics of a
  k-junta live entirely in a 2^k-dimensional corner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .paulis import DENSE_QUBIT_CAP, I2, X, Y, Z, check_dense_size
from .processes import ChiMatrix, ChoiMatrix, KrausSet, choi_to_kraus, identity_chi
from .subsets import QubitSubset

H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
US = np.array([[1, 1 - 1j], [1 + 1j, -1]], dtype=np.complex128) / np.sqrt(3)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)
CUS = np.block([[np.eye(2), np.zeros((2, 2))], [np.zeros((2, 2)), US]]).astype(np.complex128)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]])


def phase_damp_kraus(lam: float, phi: float = 0.0) -> tuple[np.ndarray, ...]:
    """Single-qubit phase damping with rate lam and relative phase phi."""
    k1 = np.array([[1, 0], [0, np.exp(1j * phi) * np.sqrt(1 - lam)]])
    k2 = np.array([[0, 0], [0, np.sqrt(lam)]], dtype=np.complex128)
    return (k1,) if lam == 0.0 else (k1, k2)


def ctrl_phase_damp_kraus(lam: float, phi: float = 0.0) -> tuple[np.ndarray, ...]:
    """Two-qubit controlled phase damping (control = first qubit)."""
    k1 = np.diag([1, 1, 0, 0]).astype(np.complex128)
    k2 = np.diag([0, 0, 1, np.exp(1j * phi) * np.sqrt(1 - lam)])
    k3 = np.diag([0, 0, 0, np.sqrt(lam)]).astype(np.complex128)
    return (k1, k2) if lam == 0.0 else (k1, k2, k3)


_FIXED_UNITARIES = {
    "identity": I2,
    "x": X,
    "y": Y,
    "z": Z,
    "h": H,
    "us": US,
    "cnot": CNOT,
    "cz": CZ,
    "cus": CUS,
}
_ROTATIONS = {"rx": rx, "ry": ry, "rz": rz}
_DAMPING = {"phase_damp": phase_damp_kraus, "ctrl_phase_damp": ctrl_phase_damp_kraus}

GATE_ARITY = {
    **{k: 1 for k in ("identity", "x", "y", "z", "h", "us", "rx", "ry", "rz", "phase_damp")},
    **{k: 2 for k in ("cnot", "cz", "cus", "ctrl_phase_damp")},
}


@dataclass(frozen=True)
class GateSpec:
    """One gate or noise channel on explicitly listed qubit positions.

    Two-qubit kinds read ``qubits`` as (control, target). Rotations take
    ``theta`` (radians); damping channels take ``lam`` in [0, 1] and an
    optional phase ``phi``.
    """

    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None
    lam: float | None = None
    phi: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", self.kind.lower())
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}; known: {sorted(GATE_ARITY)}")
        arity = GATE_ARITY[self.kind]
        if len(self.qubits) != arity:
            raise ValueError(f"gate {self.kind!r} needs {arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"gate qubits must be distinct, got {self.qubits}")
        if any(q < 1 for q in self.qubits):
            raise ValueError(f"qubit positions are 1-based, got {self.qubits}")
        if self.kind in _ROTATIONS and self.theta is None:
            raise ValueError(f"gate {self.kind!r} requires an angle theta")
        if self.kind in _DAMPING:
            if self.lam is None:
                raise ValueError(f"gate {self.kind!r} requires a damping rate lam")
            if not 0.0 <= self.lam <= 1.0:
                raise ValueError(f"damping rate must be in [0, 1], got {self.lam}")

    @property
    def arity(self) -> int:
        return GATE_ARITY[self.kind]


def build_gate(spec: GateSpec) -> KrausSet:
    """Kraus operators of a single gate over its own qubits (listed order)."""
    if spec.kind in _FIXED_UNITARIES:
        return KrausSet(spec.arity, (_FIXED_UNITARIES[spec.kind],))
    if spec.kind in _ROTATIONS:
        return KrausSet(spec.arity, (_ROTATIONS[spec.kind](spec.theta),))
    return KrausSet(spec.arity, _DAMPING[spec.kind](spec.lam, spec.phi))


@dataclass(frozen=True)
class ProcessSpec:
    """An n-qubit process as an ordered sequence of gate layers."""

    n: int
    layers: tuple[GateSpec, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"system size must be >= 1, got {self.n}")
        object.__setattr__(self, "layers", tuple(self.layers))
        for g in self.layers:
            if any(q > self.n for q in g.qubits):
                raise ValueError(f"gate {g.kind!r} on qubits {g.qubits} exceeds n={self.n}")

    @property
    def support(self) -> QubitSubset:
        """Union of qubits touched by non-identity gates: the planted junta support."""
        qubits: set[int] = set()
        for g in self.layers:
            if g.kind != "identity":
                qubits.update(g.qubits)
        return QubitSubset.from_qubits(sorted(qubits), self.n)


@dataclass(frozen=True)
class JuntaView:
    """A process known to act only on ``support``: Phi = Phi_K (x) identity.

    ``kraus`` is the composed sub-channel over the support qubits in
    ascending position order; ``None`` means the support is empty and the
    whole process is the identity.
    """

    n: int
    support: QubitSubset
    kraus: KrausSet | None = field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.support.n != self.n:
            raise ValueError("support subset must be defined over the full system")
        if self.support.is_empty() != (self.kraus is None):
            raise ValueError("kraus must be present exactly when the support is non-empty")
        if self.kraus is not None and self.kraus.n != self.support.size:
            raise ValueError(
                f"sub-channel acts on {self.kraus.n} qubits but support has {self.support.size}"
            )

    def sub_chi(self) -> ChiMatrix:
        if self.kraus is None:
            raise ValueError("identity junta view has no sub-process")
        from .processes import kraus_to_chi

        return kraus_to_chi(self.kraus)

    def restrict(self, s: QubitSubset) -> QubitSubset:
        """Map a global qubit set to local indices within the support."""
        local = [i + 1 for i, q in enumerate(self.support.qubits) if q in s]
        return QubitSubset.from_qubits(local, max(self.support.size, 1))

    def influence(self, s: QubitSubset) -> float:
        """Exact influence at any n: qubits off the support contribute nothing."""
        from .influence import influence_exact

        inner = self.restrict(s)
        if self.kraus is None or inner.is_empty():
            return 0.0
        return influence_exact(self.sub_chi(), inner)

    def chi_on(self, s: QubitSubset) -> ChiMatrix:
        """Exact chi of the induced sub-process on an arbitrary qubit set."""
        if s.is_empty():
            raise ValueError("cannot take the sub-process on an empty set")
        from .influence import reduce_subprocess

        inner = self.restrict(s)
        if self.kraus is None or inner.is_empty():
            return identity_chi(s.size)
        reduced = reduce_subprocess(self.sub_chi(), inner)
        covered = [q for q in s.qubits if q in self.support]
        ranks = tuple(i + 1 for i, q in enumerate(s.qubits) if q in covered)
        return embed_chi(reduced, ranks, s.size)

    def sampler_expectations(self, s: QubitSubset) -> tuple[float, float, float]:
        from .influence import sampler_expectations

        inner = self.restrict(s)
        if self.kraus is None or inner.is_empty():
            return (0.0, 0.0, 0.0)
        return sampler_expectations(self.sub_chi(), inner)


def kraus_superop(ops) -> np.ndarray:
    """Row-stacking superoperator S = sum_i K_i (x) conj(K_i)."""
    d = ops[0].shape[0]
    s = np.zeros((d * d, d * d), dtype=np.complex128)
    for k in ops:
        s += np.kron(k, k.conj())
    return s


def superop_to_choi(s: np.ndarray) -> np.ndarray:
    """Reshuffle S[(c,d),(a,b)] -> J[(c,a),(d,b)]."""
    d = int(np.round(np.sqrt(s.shape[0])))
    return s.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def embed_operator(op: np.ndarray, targets: tuple[int, ...], k: int) -> np.ndarray:
    """Embed an operator on the listed local qubits (0-based) into k qubits."""
    m = len(targets)
    rest = [i for i in range(k) if i not in targets]
    full = np.kron(op, np.eye(2 ** (k - m), dtype=np.complex128))
    perm = list(targets) + rest  # axis i of `full` is qubit perm[i]
    inv = np.argsort(perm)
    t = full.reshape([2] * (2 * k))
    t = t.transpose(list(inv) + [k + int(j) for j in inv])
    return t.reshape(2**k, 2**k)


def _compose_on_support(spec: ProcessSpec, support: QubitSubset) -> KrausSet:
    """Compose all layers into one Kraus set over the support qubits."""
    k = support.size
    check_dense_size(k)
    local_of = {q: i for i, q in enumerate(support.qubits)}
    d = 2**k
    total = np.eye(d * d, dtype=np.complex128)
    for g in spec.layers:
        if g.kind == "identity":
            continue
        ops = [embed_operator(op, tuple(local_of[q] for q in g.qubits), k) for op in build_gate(g).ops]
        total = kraus_superop(ops) @ total
    choi = ChoiMatrix(k, superop_to_choi(total))
    return choi_to_kraus(choi)


def junta_view(spec: ProcessSpec) -> JuntaView:
    """Sub-channel on the junta support; works for any n the sampler accepts."""
    support = spec.support
    if support.is_empty():
        return JuntaView(spec.n, support, None)
    return JuntaView(spec.n, support, _compose_on_support(spec, support))


def embed_chi(sub: ChiMatrix, positions: tuple[int, ...], n: int) -> ChiMatrix:
    """chi of sub-process (x) identity, with the sub-process on ``positions``.

    Scatters the sub-process chi into the indices whose Pauli digits vanish
    everywhere else, which is exactly the junta tensor structure.
    """
    check_dense_size(n)
    k = sub.n
    if len(positions) != k:
        raise ValueError(f"need {k} positions for a {k}-qubit sub-process, got {positions}")
    if sorted(positions) != list(positions) or len(set(positions)) != k:
        raise ValueError(f"positions must be strictly ascending, got {positions}")
    if positions and not (1 <= positions[0] and positions[-1] <= n):
        raise ValueError(f"positions {positions} out of range 1..{n}")
    sub_idx = np.arange(4**k, dtype=np.int64)
    full_idx = np.zeros(4**k, dtype=np.int64)
    for j, q in enumerate(positions):
        digit = (sub_idx >> (2 * (k - 1 - j))) & 3
        full_idx += digit << (2 * (n - q))
    chi = np.zeros((4**n, 4**n), dtype=np.complex128)
    chi[np.ix_(full_idx, full_idx)] = sub.mat
    return ChiMatrix(n, chi)


def embed_dense(spec: ProcessSpec, cap: int = DENSE_QUBIT_CAP) -> ChiMatrix:
    """Full n-qubit process matrix of a layered spec; memory grows as 16^n."""
    check_dense_size(spec.n, cap)
    view = junta_view(spec)
    if view.kraus is None:
        return identity_chi(spec.n)
    return embed_chi(view.sub_chi(), view.support.qubits, spec.n)


@dataclass(frozen=True)
class NoiseModel:
    """Classical SPAM noise applied after ideal dynamics.

    ``flip_probs`` gives the per-test-gate probability of flipping each
    measured bit (gate order I, H, R_x(pi/2)); ``flip_qubits`` restricts
    flips to those positions (``None`` = every qubit). ``overrotation`` is
    an optional stddev (radians) of independent angle jitter on every test
    gate application; it forces the shot sampler onto a slower per-shot
    path.
    """

    flip_probs: tuple[float, float, float] = (0.0, 0.0, 0.0)
    flip_qubits: tuple[int, ...] | None = None
    overrotation: float | None = None

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.flip_probs)
        if len(probs) != 3:
            raise ValueError("flip_probs must list one probability per test gate")
        if any(not 0.0 <= p <= 0.5 for p in probs):
            raise ValueError(f"flip probabilities must lie in [0, 0.5], got {probs}")
        object.__setattr__(self, "flip_probs", probs)
        if self.flip_qubits is not None:
            object.__setattr__(self, "flip_qubits", tuple(sorted(int(q) for q in self.flip_qubits)))
            if any(q < 1 for q in self.flip_qubits):
                raise ValueError("flip_qubits positions are 1-based")
        if self.overrotation is not None and self.overrotation < 0:
            raise ValueError("overrotation stddev must be non-negative")

    def is_trivial(self) -> bool:
        return all(p == 0.0 for p in self.flip_probs) and not self.overrotation

    def flip_vector(self, gate_index: int, n: int) -> np.ndarray:
        """Per-qubit flip probabilities (length n) under test gate 1, 2 or 3."""
        if gate_index not in (1, 2, 3):
            raise ValueError(f"gate index must be 1, 2 or 3, got {gate_index}")
        p = np.zeros(n)
        base = self.flip_probs[gate_index - 1]
        if self.flip_qubits is None:
            p[:] = base
        else:
            for q in self.flip_qubits:
                if q <= n:
                    p[q - 1] = base
        return p

    @classmethod
    def default_spam(cls, n: int) -> "NoiseModel":
        """Measurement-flip model of the dual-rail photonic rig.

        Bits read out through the interferometric (path-encoded) qubits sit
        at even positions and suffer p_e = 5e-4 under the identity test gate
        and 5e-3 under the two interference-sensitive test gates; the
        polarization qubits at odd positions read out cleanly.
        """
        return cls(flip_probs=(0.0005, 0.005, 0.005), flip_qubits=tuple(range(2, n + 1, 2)))
