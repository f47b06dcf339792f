"""Statistical estimation from sampled flip-set distributions.

Turns empirical distributions into influence samplers with binomial standard
errors, combines them into lower/upper influence bounds, identifies
high-influence qubits by thresholding per-qubit upper bounds, and tests the
junta hypothesis. Upper bounds are clamped to [0, 1] before entering the
distance bound epsilon = sqrt(IU) + IU/sqrt(2); raw values are retained for
diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channels import JuntaView, ProcessSpec
from .processes import ChiMatrix
from .sampling import CapabilityError, SamplerConfig, SubsetDistribution, run_sampling
from .subsets import QubitSubset

SQRT2 = math.sqrt(2.0)


def estimate_sampler(dist: SubsetDistribution, s: QubitSubset) -> tuple[float, float]:
    """Empirical sampler estimate and binomial stderr for one gate stream.

    Full-mode distributions resolve any subset; marginal-mode ones only
    single qubits (a CapabilityError explains the rest).
    """
    p = dist.overlap_fraction(s)
    return p, math.sqrt(p * (1.0 - p) / dist.total)


@dataclass(frozen=True)
class InfluenceBounds:
    """Per-set influence bounds with their standard errors.

    ``il``/``iu`` always come from the first two test gates; the three-gate
    refinements are present when a third stream was sampled. ``iu`` values
    are clamped to [0, 1]; the raw sums are kept alongside. In surrogate
    mode (marginal data, multi-qubit set) the per-gate ``estimates`` are
    union bounds over member qubits rather than direct estimates, ``iu`` is
    valid by subadditivity and ``il`` by monotonicity.
    """

    subset: QubitSubset
    estimates: tuple[float, ...]
    stderrs: tuple[float, ...]
    il: float
    iu: float
    iu_raw: float
    iu_stderr: float
    il_three: float | None = None
    iu_three: float | None = None
    iu_three_raw: float | None = None
    iu_three_stderr: float | None = None
    surrogate: bool = False

    @property
    def has_three(self) -> bool:
        return self.iu_three is not None

    @property
    def best_il(self) -> float:
        return self.il_three if self.has_three else self.il

    @property
    def best_iu(self) -> float:
        return self.iu_three if self.has_three else self.iu

    @property
    def best_iu_stderr(self) -> float:
        return self.iu_three_stderr if self.has_three else self.iu_stderr

    def to_record(self) -> dict:
        rec = {
            "qubits": list(self.subset.qubits),
            "estimates": list(self.estimates),
            "stderrs": list(self.stderrs),
            "il": self.il,
            "iu": self.iu,
            "iu_raw": self.iu_raw,
            "iu_stderr": self.iu_stderr,
            "surrogate": self.surrogate,
        }
        if self.has_three:
            rec.update(
                il_three=self.il_three,
                iu_three=self.iu_three,
                iu_three_raw=self.iu_three_raw,
                iu_three_stderr=self.iu_three_stderr,
            )
        return rec


def bounds_from_estimates(
    subset: QubitSubset,
    estimates,
    stderrs=None,
    surrogate: bool = False,
) -> InfluenceBounds:
    """Lower and upper influence bounds from two or three sampler estimates.

    The IU variance adds the per-gate binomial variances (scaled by 1/4 for
    the three-gate half-sum), which reproduces the L-gate budget formula
    when each gate received M/L shots.
    """
    e = tuple(float(v) for v in estimates)
    if len(e) not in (2, 3):
        raise ValueError(f"need 2 or 3 sampler estimates, got {len(e)}")
    se = tuple(0.0 for _ in e) if stderrs is None else tuple(float(v) for v in stderrs)
    if len(se) != len(e):
        raise ValueError("estimates and stderrs must align")
    iu_raw = e[0] + e[1]
    kwargs = {}
    if len(e) == 3:
        iu3_raw = 0.5 * (e[0] + e[1] + e[2])
        kwargs = dict(
            il_three=min(max(e), 1.0),
            iu_three=min(iu3_raw, 1.0),
            iu_three_raw=iu3_raw,
            iu_three_stderr=0.5 * math.sqrt(se[0] ** 2 + se[1] ** 2 + se[2] ** 2),
        )
    return InfluenceBounds(
        subset=subset,
        estimates=e,
        stderrs=se,
        il=min(max(e[:2]), 1.0),
        iu=min(iu_raw, 1.0),
        iu_raw=iu_raw,
        iu_stderr=math.sqrt(se[0] ** 2 + se[1] ** 2),
        surrogate=surrogate,
        **kwargs,
    )


def theoretical_iu_variance(expectations, total_shots: int, mode: str = "two") -> float:
    """Variance of the IU estimator for a budget of ``total_shots`` split over L gates."""
    e = tuple(float(v) for v in expectations)
    if mode == "two":
        return 2.0 * sum(p * (1.0 - p) for p in e[:2]) / total_shots
    if mode == "three":
        return 3.0 * sum(p * (1.0 - p) for p in e[:3]) / (4.0 * total_shots)
    raise ValueError(f"unknown mode {mode!r}")


def junta_distance_bound(iu: float) -> float:
    """Distance bound to the nearest junta process given an influence upper bound."""
    iu = min(max(iu, 0.0), 1.0)
    return math.sqrt(iu) + iu / SQRT2


def junta_distance_bound_stderr(iu: float, iu_stderr: float) -> float | None:
    """Delta-method stderr of the epsilon bound; None at iu = 0 (one-sided regime)."""
    if iu <= 0.0:
        return None
    return iu_stderr * (0.5 / math.sqrt(iu) + 1.0 / SQRT2)


@dataclass(frozen=True)
class HiqiResult:
    """High-influence qubit identification output."""

    t: QubitSubset
    per_qubit: tuple[InfluenceBounds, ...]
    bounds_t: InfluenceBounds
    bounds_tc: InfluenceBounds
    delta: float
    total_shots: int
    mode: str  # 'two' | 'three'

    @property
    def iu_tc(self) -> float:
        """Operative upper bound on the complement influence (tightest available)."""
        return self.bounds_tc.best_iu

    @property
    def tc_is_surrogate(self) -> bool:
        return self.bounds_tc.surrogate

    def to_record(self) -> dict:
        return {
            "t": list(self.t.qubits),
            "per_qubit": [b.to_record() for b in self.per_qubit],
            "bounds_t": self.bounds_t.to_record(),
            "bounds_tc": self.bounds_tc.to_record(),
            "iu_tc": self.iu_tc,
            "delta": self.delta,
            "total_shots": self.total_shots,
            "mode": self.mode,
        }


def _set_bounds(dists: dict[int, SubsetDistribution], s: QubitSubset,
                per_qubit: tuple[InfluenceBounds, ...]) -> InfluenceBounds:
    """Bounds for an arbitrary set, falling back to union/max surrogates on marginals."""
    gates = sorted(dists)
    try:
        pairs = [estimate_sampler(dists[l], s) for l in gates]
        return bounds_from_estimates(s, [p for p, _ in pairs], [se for _, se in pairs])
    except CapabilityError:
        members = [per_qubit[q - 1] for q in s.qubits]
        est, err = [], []
        for gi in range(len(gates)):
            est.append(min(sum(b.estimates[gi] for b in members), 1.0))
            err.append(math.sqrt(sum(b.stderrs[gi] ** 2 for b in members)))
        iu_raw = est[0] + est[1]
        three = len(gates) == 3
        iu3_raw = 0.5 * sum(est) if three else None
        # Per-gate union bounds overestimate the expectations, so the lower
        # bounds come from member qubits instead (valid by monotonicity).
        return InfluenceBounds(
            subset=s,
            estimates=tuple(est),
            stderrs=tuple(err),
            il=max((b.il for b in members), default=0.0),
            iu=min(iu_raw, 1.0),
            iu_raw=iu_raw,
            iu_stderr=math.sqrt(err[0] ** 2 + err[1] ** 2),
            il_three=max((b.il_three for b in members), default=0.0) if three else None,
            iu_three=min(iu3_raw, 1.0) if three else None,
            iu_three_raw=iu3_raw,
            iu_three_stderr=0.5 * math.sqrt(sum(e**2 for e in err)) if three else None,
            surrogate=True,
        )


def hiqi(
    source,
    delta: float,
    config: SamplerConfig | None = None,
) -> HiqiResult:
    """Identify high-influence qubits and bound the complement influence.

    ``source`` is either the per-gate distributions of a previous sampling
    run or a process description (then ``config`` supplies the budget).
    A qubit joins T exactly when its upper influence bound strictly exceeds
    ``delta``; bounds for T and its complement come from the same
    distributions. With three gate streams the tighter three-gate upper
    bounds drive both the threshold and the complement bound.
    """
    if delta <= 0:
        raise ValueError(f"threshold delta must be positive, got {delta}")
    if isinstance(source, dict):
        dists = source
    else:
        if config is None:
            raise ValueError("sampling a process requires a SamplerConfig")
        if config.shots < 2 * len(config.shots_per_gate()):
            raise ValueError("budget too small: need at least two shots per gate")
        dists = run_sampling(source, config)
    gates = tuple(sorted(dists))
    if gates not in ((1, 2), (1, 2, 3)):
        raise ValueError(f"hiqi needs fixed-gate streams (1,2) or (1,2,3), got {gates}")
    n = dists[gates[0]].n
    per_qubit = []
    for i in range(1, n + 1):
        s = QubitSubset.from_qubits([i], n)
        pairs = [estimate_sampler(dists[l], s) for l in gates]
        per_qubit.append(bounds_from_estimates(s, [p for p, _ in pairs], [se for _, se in pairs]))
    per_qubit = tuple(per_qubit)
    t = QubitSubset.from_qubits(
        [i for i in range(1, n + 1) if per_qubit[i - 1].best_iu > delta], n
    )
    return HiqiResult(
        t=t,
        per_qubit=per_qubit,
        bounds_t=_set_bounds(dists, t, per_qubit),
        bounds_tc=_set_bounds(dists, t.complement(), per_qubit),
        delta=delta,
        total_shots=sum(d.total for d in dists.values()),
        mode="three" if len(gates) == 3 else "two",
    )


@dataclass(frozen=True)
class TesterVerdict:
    """Junta test outcome: yes iff at most k qubits carry high influence."""

    verdict: str  # 'yes' | 'no'
    k: int
    t_size: int
    epsilon: float | None
    epsilon_stderr: float | None
    hiqi: HiqiResult

    def to_record(self) -> dict:
        return {
            "verdict": self.verdict,
            "k": self.k,
            "t_size": self.t_size,
            "epsilon": self.epsilon,
            "epsilon_stderr": self.epsilon_stderr,
            "hiqi": self.hiqi.to_record(),
        }


def junta_tester(
    source: JuntaView | ChiMatrix | ProcessSpec | dict,
    k: int,
    delta: float,
    config: SamplerConfig | None = None,
) -> TesterVerdict:
    """Decide whether the process is (close to) a k-junta.

    Answers yes when the identified high-influence set has at most k qubits,
    together with the distance bound epsilon to the nearest T-junta process;
    answers no otherwise.
    """
    if k < 1:
        raise ValueError(f"junta size k must be >= 1, got {k}")
    result = hiqi(source, delta, config)
    if k >= result.t.n:
        raise ValueError(f"junta size k={k} must be smaller than the system n={result.t.n}")
    yes = result.t.size <= k
    eps = junta_distance_bound(result.iu_tc) if yes else None
    eps_se = junta_distance_bound_stderr(result.iu_tc, result.bounds_tc.best_iu_stderr) if yes else None
    return TesterVerdict(
        verdict="yes" if yes else "no",
        k=k,
        t_size=result.t.size,
        epsilon=eps,
        epsilon_stderr=eps_se,
        hiqi=result,
    )
