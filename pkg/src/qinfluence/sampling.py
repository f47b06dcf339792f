"""Shot-level simulation of influence sampling.

One shot prepares a uniformly random computational-basis state |a>, applies
the transversal test gate, the process, the inverse test gate, and measures
every qubit; the record is the set of flipped bits. Because the process is
junta-structured, only the support sub-state (at most 2^k amplitudes) needs
dynamics: outcome probabilities are precomputed into a 2^k x 2^k table per
test gate, after which shots are plain vectorized table sampling. Classical
measurement flip noise is overlaid on all n bits afterwards.

Reproducibility contract: every stream of randomness comes from a Philox
counter-based generator keyed by ``(seed, gate_index * 2^32 + worker_index)``;
shots are partitioned contiguously across workers and results merged by
count addition, so a given (seed, workers, config) triple yields identical
distributions regardless of scheduling.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import JuntaView, NoiseModel, junta_view as build_junta_view, ProcessSpec
from .paulis import I2, X, Z, kron_all
from .processes import ChiMatrix, chi_to_kraus
from .subsets import QubitSubset

MAX_SAMPLER_QUBITS = 64
_BATCH_SHOTS = 1 << 15
_MASK64 = (1 << 64) - 1

# Test gates as generator-angle pairs: U = cos(t/2) I - i sin(t/2) A (global
# phase dropped). Gate 1 = identity, gate 2 = Hadamard, gate 3 = R_x(pi/2).
_GATE_AXES = (X, (X + Z) / np.sqrt(2), X)
_GATE_ANGLES = (0.0, np.pi, np.pi / 2)

GATE_SETS = {"two": (1, 2), "three": (1, 2, 3), "rand1": (1, 2), "rand2": (1, 2, 3)}


def gate_unitary(gate_index: int, angle_offset: float = 0.0) -> np.ndarray:
    """Single-qubit test gate, optionally over-rotated by ``angle_offset``."""
    if gate_index not in (1, 2, 3):
        raise ValueError(f"gate index must be 1, 2 or 3, got {gate_index}")
    t = _GATE_ANGLES[gate_index - 1] + angle_offset
    a = _GATE_AXES[gate_index - 1]
    return np.cos(t / 2) * I2 - 1j * np.sin(t / 2) * a


class CapacityError(RuntimeError):
    """A full-mode accumulator outgrew its cap; marginal mode is the way out."""


class CapabilityError(RuntimeError):
    """The recorded data cannot answer the question (e.g. marginal-only storage)."""


@dataclass(frozen=True)
class ShotRecord:
    """Initial bits, measured bits and the resulting flip set of one shot."""

    a: int
    b: int
    gate_index: int
    n: int

    @property
    def flipset(self) -> QubitSubset:
        return QubitSubset(self.a ^ self.b, self.n)


@dataclass
class SubsetDistribution:
    """Empirical distribution of sampled flip sets for one test-gate stream.

    ``mode="full"`` keeps a count per observed subset mask; ``mode="marginal"``
    keeps only per-qubit flip counts, which is enough for single-qubit
    influence bounds at any system size.
    """

    n: int
    gate_index: int
    mode: str = "full"
    total: int = 0
    counts: dict[int, int] = field(default_factory=dict)
    flips: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.mode not in ("full", "marginal"):
            raise ValueError(f"mode must be 'full' or 'marginal', got {self.mode!r}")
        if self.mode == "marginal" and self.flips is None:
            self.flips = np.zeros(self.n, dtype=np.int64)

    def add_masks(self, masks: np.ndarray, cap: int | None = None) -> None:
        if self.mode == "full":
            values, cnt = np.unique(masks, return_counts=True)
            for v, c in zip(values.tolist(), cnt.tolist()):
                self.counts[int(v)] = self.counts.get(int(v), 0) + int(c)
            if cap is not None and len(self.counts) > cap:
                raise CapacityError(
                    f"full-mode distribution exceeded {cap} distinct subsets; "
                    "rerun in marginal mode for per-qubit statistics"
                )
        else:
            for i in range(self.n):
                self.flips[i] += int(((masks >> np.uint64(i)) & np.uint64(1)).sum())
        self.total += int(masks.size)

    def merge(self, other: "SubsetDistribution") -> None:
        if (self.n, self.gate_index, self.mode) != (other.n, other.gate_index, other.mode):
            raise ValueError("cannot merge distributions with different shapes")
        if self.mode == "full":
            for m, c in other.counts.items():
                self.counts[m] = self.counts.get(m, 0) + c
        else:
            self.flips += other.flips
        self.total += other.total

    def overlap_count(self, s: QubitSubset) -> int:
        """Number of shots whose flip set intersects S."""
        if s.n != self.n:
            raise ValueError(f"subset over n={s.n} but distribution over n={self.n}")
        if s.is_empty():
            return 0
        if self.mode == "full":
            return sum(c for m, c in self.counts.items() if m & s.mask)
        if s.size == 1:
            return int(self.flips[s.qubits[0] - 1])
        raise CapabilityError(
            "marginal distributions cannot resolve multi-qubit sets; "
            "only per-qubit flip rates were recorded"
        )

    def overlap_fraction(self, s: QubitSubset) -> float:
        if self.total == 0:
            raise ValueError("empty distribution")
        return self.overlap_count(s) / self.total

    def marginal_projection(self) -> "SubsetDistribution":
        """Collapse a full distribution to per-qubit flip counts."""
        if self.mode == "marginal":
            return self
        flips = np.zeros(self.n, dtype=np.int64)
        for m, c in self.counts.items():
            for i in range(self.n):
                if m >> i & 1:
                    flips[i] += c
        return SubsetDistribution(self.n, self.gate_index, "marginal", self.total, flips=flips)

    def to_record(self) -> dict:
        rec = {"n": self.n, "gate": self.gate_index, "mode": self.mode, "total": self.total}
        if self.mode == "full":
            rec["counts"] = sorted([int(m), int(c)] for m, c in self.counts.items())
        else:
            rec["flips"] = [int(v) for v in self.flips]
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "SubsetDistribution":
        d = cls(rec["n"], rec["gate"], rec["mode"], rec["total"])
        if rec["mode"] == "full":
            d.counts = {int(m): int(c) for m, c in rec["counts"]}
        else:
            d.flips = np.array(rec["flips"], dtype=np.int64)
        return d


@dataclass(frozen=True)
class SamplerConfig:
    """Shot budget and execution parameters for a sampling run.

    ``shots`` is the total budget M, divided as evenly as possible across
    the fixed test gates (earlier gates receive any remainder). ``rand1`` /
    ``rand2`` draw the gate uniformly per shot from the two- or three-gate
    set instead.
    """

    shots: int
    seed: int
    gate_set: str = "two"
    noise: NoiseModel | None = None
    workers: int = 1
    mode: str = "full"
    max_distinct_subsets: int = 1 << 20

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.gate_set not in GATE_SETS:
            raise ValueError(f"gate_set must be one of {sorted(GATE_SETS)}, got {self.gate_set!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.mode not in ("full", "marginal"):
            raise ValueError(f"mode must be 'full' or 'marginal', got {self.mode!r}")

    def shots_per_gate(self) -> dict[int, int]:
        gates = GATE_SETS[self.gate_set]
        base, rem = divmod(self.shots, len(gates))
        return {l: base + (1 if i < rem else 0) for i, l in enumerate(gates)}


def as_junta_view(process: JuntaView | ChiMatrix | ProcessSpec) -> JuntaView:
    """Normalize any supported process description to a JuntaView."""
    if isinstance(process, JuntaView):
        return process
    if isinstance(process, ProcessSpec):
        return build_junta_view(process)
    if isinstance(process, ChiMatrix):
        return JuntaView(process.n, QubitSubset.full(process.n), chi_to_kraus(process))
    raise TypeError(f"cannot sample from {type(process).__name__}")


def _substream(seed: int, gate_index: int, worker: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, (gate_index << 32) | worker], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _partition(total: int, parts: int) -> list[int]:
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _batch_size(k: int) -> int:
    """Shots per vectorized batch; the CDF gather costs batch * 2^k floats.

    Depends only on the support size, so it never breaks seed reproducibility.
    """
    return max(1024, min(_BATCH_SHOTS, (1 << 24) >> k))


class _ShotEngine:
    """Precomputed outcome tables and bit plumbing for one process."""

    def __init__(self, view: JuntaView, noise: NoiseModel | None):
        if view.n > MAX_SAMPLER_QUBITS:
            raise ValueError(f"sampler supports up to {MAX_SAMPLER_QUBITS} qubits, got n={view.n}")
        self.view = view
        self.n = view.n
        self.noise = noise if noise is not None else NoiseModel()
        self.positions = tuple(q - 1 for q in view.support.qubits)
        self.k = len(self.positions)
        self._cum: dict[int, np.ndarray] = {}
        self._scatter = self._build_scatter()
        self._flip_vecs = {l: self.noise.flip_vector(l, self.n) for l in (1, 2, 3)}

    def _build_scatter(self) -> np.ndarray:
        """Map local flip patterns (first support qubit = MSB) to global masks."""
        size = 1 << self.k
        scatter = np.zeros(size, dtype=np.uint64)
        for f in range(size):
            mask = 0
            for j, pos in enumerate(self.positions):
                if f >> (self.k - 1 - j) & 1:
                    mask |= 1 << pos
            scatter[f] = mask
        return scatter

    def cum_table(self, gate_index: int) -> np.ndarray:
        """Row-wise inclusive CDF of Pr[measure b | prepared a] for one gate."""
        if gate_index not in self._cum:
            v = kron_all([gate_unitary(gate_index)] * self.k)
            table = np.zeros((1 << self.k, 1 << self.k))
            for op in self.view.kraus.ops:
                m = v.conj().T @ op @ v
                table += np.abs(m.T) ** 2  # [a, b] = |<b| V^dag K V |a>|^2
            cum = np.cumsum(table, axis=1)
            cum[:, -1] = 1.0  # guard inverse-CDF sampling against rounding
            self._cum[gate_index] = cum
        return self._cum[gate_index]

    def _draw_bits(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Uniform n-bit strings as uint64, drawn in fixed 32-bit words."""
        a = np.zeros(m, dtype=np.uint64)
        shift = 0
        remaining = self.n
        while remaining > 0:
            bits = min(32, remaining)
            a |= rng.integers(0, 1 << bits, size=m, dtype=np.uint64) << np.uint64(shift)
            shift += bits
            remaining -= bits
        return a

    def sample_flips(self, gate_indices: int | np.ndarray, rng: np.random.Generator, m: int) -> np.ndarray:
        """Flip masks for a batch of m shots; ``gate_indices`` scalar or per-shot."""
        a = self._draw_bits(rng, m)
        flips = np.zeros(m, dtype=np.uint64)
        per_shot_gates = isinstance(gate_indices, np.ndarray)
        if self.k > 0:
            a_loc = np.zeros(m, dtype=np.int64)
            for j, pos in enumerate(self.positions):
                a_loc |= (((a >> np.uint64(pos)) & np.uint64(1)) << (self.k - 1 - j)).astype(np.int64)
            u = rng.random(m)
            b_loc = np.zeros(m, dtype=np.int64)
            gates = np.unique(gate_indices) if per_shot_gates else [gate_indices]
            for l in gates:
                sel = slice(None) if not per_shot_gates else gate_indices == l
                cum = self.cum_table(int(l))
                b_loc[sel] = (cum[a_loc[sel]] < u[sel, None]).sum(axis=1)
            flips = self._scatter[a_loc ^ b_loc]
        for pos in range(self.n):
            if per_shot_gates:
                p = np.array([self._flip_vecs[l][pos] for l in (1, 2, 3)])[gate_indices - 1]
                if not p.any():
                    continue
            else:
                p = self._flip_vecs[gate_indices][pos]
                if p == 0.0:
                    continue
            hit = rng.random(m) < p
            flips ^= hit.astype(np.uint64) << np.uint64(pos)
        return flips

    # ------------------------------------------------------------------
    # Slow per-shot path: exact dynamics under jittered test gates.
    # ------------------------------------------------------------------

    def sample_shot_jittered(self, gate_index: int, rng: np.random.Generator) -> ShotRecord:
        sigma = self.noise.overrotation or 0.0
        a = int(self._draw_bits(rng, 1)[0])
        prep_eps = rng.normal(0.0, sigma, self.n) if sigma else np.zeros(self.n)
        meas_eps = rng.normal(0.0, sigma, self.n) if sigma else np.zeros(self.n)
        flips = 0
        if self.k > 0:
            psi = np.ones(1, dtype=np.complex128)
            for j, pos in enumerate(self.positions):
                g = gate_unitary(gate_index, prep_eps[pos])
                psi = np.kron(psi, g[:, (a >> pos) & 1])
            rho = self.view.kraus.apply(np.outer(psi, psi.conj()))
            minv = kron_all([gate_unitary(gate_index, meas_eps[pos]).conj().T for pos in self.positions])
            probs = np.clip(np.diag(minv @ rho @ minv.conj().T).real, 0.0, None)
            probs /= probs.sum()
            b_loc = int(rng.choice(probs.size, p=probs))
            a_loc = 0
            for j, pos in enumerate(self.positions):
                a_loc |= ((a >> pos) & 1) << (self.k - 1 - j)
            flips = int(self._scatter[a_loc ^ b_loc])
        for pos in range(self.n):
            if pos in self.positions:
                continue
            g = gate_unitary(gate_index, meas_eps[pos]).conj().T @ gate_unitary(gate_index, prep_eps[pos])
            bit = (a >> pos) & 1
            p_flip = float(np.abs(g[1 - bit, bit]) ** 2)
            if p_flip > 0.0 and rng.random() < p_flip:
                flips ^= 1 << pos
        pvec = self._flip_vecs[gate_index]
        for pos in range(self.n):
            if pvec[pos] > 0.0 and rng.random() < pvec[pos]:
                flips ^= 1 << pos
        return ShotRecord(a=a, b=a ^ flips, gate_index=gate_index, n=self.n)


def influence_sample_shot(
    process: JuntaView | ChiMatrix | ProcessSpec,
    gate_index: int,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
) -> ShotRecord:
    """Run one shot of the sampling circuit and return its record.

    Convenience single-shot form; batch runs should use :func:`run_sampling`,
    which amortizes the outcome tables and vectorizes.
    """
    if gate_index not in (1, 2, 3):
        raise ValueError(f"gate index must be 1, 2 or 3, got {gate_index}")
    engine = _ShotEngine(as_junta_view(process), noise)
    return engine.sample_shot_jittered(gate_index, rng)


def _worker_run(
    engine: _ShotEngine,
    gate_index: int,
    stream_gate: int,
    worker: int,
    shots: int,
    config: SamplerConfig,
    randomized: bool,
) -> SubsetDistribution:
    rng = _substream(config.seed, stream_gate, worker)
    dist = SubsetDistribution(engine.n, gate_index, config.mode)
    cap = config.max_distinct_subsets if config.mode == "full" else None
    gates = GATE_SETS[config.gate_set]
    jitter = engine.noise.overrotation
    batch = _batch_size(engine.k)
    done = 0
    while done < shots:
        m = min(batch, shots - done)
        if randomized:
            g = rng.integers(0, len(gates), size=m) + 1  # gate sets are prefixes of (1,2,3)
        if jitter:
            masks = np.empty(m, dtype=np.uint64)
            for i in range(m):
                l = int(g[i]) if randomized else gate_index
                rec = engine.sample_shot_jittered(l, rng)
                masks[i] = rec.a ^ rec.b
            dist.add_masks(masks, cap)
        else:
            masks = engine.sample_flips(g if randomized else gate_index, rng, m)
            dist.add_masks(masks, cap)
        done += m
    return dist


def _run_streams(engine: _ShotEngine, jobs: list[tuple], workers: int) -> list[SubsetDistribution]:
    if workers == 1 or len(jobs) == 1:
        return [_worker_run(engine, *job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: _worker_run(engine, *j), jobs))


def run_sampling(
    process: JuntaView | ChiMatrix | ProcessSpec, config: SamplerConfig
) -> dict[int, SubsetDistribution]:
    """Sample the fixed-gate streams and return one distribution per gate."""
    if config.gate_set not in ("two", "three"):
        raise ValueError("run_sampling handles fixed gate sets; use run_sampling_random for rand1/rand2")
    engine = _ShotEngine(as_junta_view(process), config.noise)
    result: dict[int, SubsetDistribution] = {}
    for l, m_l in config.shots_per_gate().items():
        jobs = [
            (l, l, w, cnt, config, False)
            for w, cnt in enumerate(_partition(m_l, config.workers))
            if cnt > 0
        ]
        parts = _run_streams(engine, jobs, config.workers)
        dist = parts[0]
        for p in parts[1:]:
            dist.merge(p)
        result[l] = dist
    return result


def run_sampling_random(
    process: JuntaView | ChiMatrix | ProcessSpec, config: SamplerConfig
) -> SubsetDistribution:
    """Sample with a uniformly random test gate per shot (one merged stream)."""
    if config.gate_set not in ("rand1", "rand2"):
        raise ValueError("run_sampling_random requires gate_set 'rand1' or 'rand2'")
    engine = _ShotEngine(as_junta_view(process), config.noise)
    jobs = [
        (0, 0, w, cnt, config, True)
        for w, cnt in enumerate(_partition(config.shots, config.workers))
        if cnt > 0
    ]
    parts = _run_streams(engine, jobs, config.workers)
    dist = parts[0]
    for p in parts[1:]:
        dist.merge(p)
    return dist
