import math

import numpy as np
import pytest

from qinfluence.channels import GateSpec, NoiseModel, ProcessSpec, junta_view
from qinfluence.estimation import (
    bounds_from_estimates,
    estimate_sampler,
    junta_distance_bound,
    junta_distance_bound_stderr,
    hiqi,
    junta_tester,
    theoretical_iu_variance,
)
from qinfluence.sampling import CapabilityError, SamplerConfig, SubsetDistribution
from qinfluence.subsets import QubitSubset


def make_dist(n, gate, counts):
    d = SubsetDistribution(n, gate)
    d.counts = dict(counts)
    d.total = sum(counts.values())
    return d


class TestEstimateSampler:
    def test_empty_flipsets(self):
        d = make_dist(2, 1, {0: 500})
        assert estimate_sampler(d, QubitSubset.from_qubits([1], 2)) == (0.0, 0.0)

    def test_half_rate_with_binomial_stderr(self):
        d = make_dist(2, 1, {0: 5000, 0b10: 5000})
        p, se = estimate_sampler(d, QubitSubset.from_qubits([2], 2))
        assert p == 0.5
        assert abs(se - math.sqrt(0.25 / 10000)) < 1e-15

    def test_marginal_single_qubit_only(self):
        d = make_dist(3, 1, {0b001: 10, 0: 90}).marginal_projection()
        p, se = estimate_sampler(d, QubitSubset.from_qubits([1], 3))
        assert p == 0.1
        with pytest.raises(CapabilityError):
            estimate_sampler(d, QubitSubset.from_qubits([1, 2], 3))


class TestBounds:
    def test_exact_cnot_values(self):
        b = bounds_from_estimates(QubitSubset.full(2), (0.5, 0.5, 0.75))
        assert (b.il, b.iu) == (0.5, 1.0)
        assert (b.il_three, b.iu_three) == (0.75, 0.875)
        assert b.iu_raw == 1.0

    def test_zero_case(self):
        b = bounds_from_estimates(QubitSubset.full(2), (0.0, 0.0))
        assert (b.il, b.iu) == (0.0, 0.0)
        assert not b.has_three

    def test_budget_variance_formula(self):
        # E = 0.5 per gate, M = 1e4 split in two: Var(IU) = 2*(0.25+0.25)/M
        m_per_gate = 5000
        se = math.sqrt(0.25 / m_per_gate)
        b = bounds_from_estimates(QubitSubset.full(2), (0.5, 0.5), (se, se))
        assert abs(b.iu_stderr**2 - 1e-4) < 1e-12
        assert abs(theoretical_iu_variance((0.5, 0.5), 10000) - 1e-4) < 1e-15

    def test_three_gate_variance_formula(self):
        ps = (0.2, 0.4, 0.3)
        m = 30000
        ses = [math.sqrt(p * (1 - p) / (m / 3)) for p in ps]
        b = bounds_from_estimates(QubitSubset.full(2), ps, ses)
        assert abs(b.iu_three_stderr**2 - theoretical_iu_variance(ps, m, "three")) < 1e-12

    def test_raw_kept_next_to_clamped(self):
        b = bounds_from_estimates(QubitSubset.full(1), (0.8, 0.7))
        assert b.iu == 1.0 and abs(b.iu_raw - 1.5) < 1e-12


class TestEpsilon:
    def test_headline_value(self):
        # sqrt(0.0034) + 0.0034/sqrt(2)
        assert abs(junta_distance_bound(0.0034) - 0.0607) < 0.0005

    def test_zero(self):
        assert junta_distance_bound(0.0) == 0.0
        assert junta_distance_bound_stderr(0.0, 0.001) is None

    def test_delta_method(self):
        iu, se = 0.01, 0.002
        want = se * (0.5 / math.sqrt(iu) + 1 / math.sqrt(2))
        assert abs(junta_distance_bound_stderr(iu, se) - want) < 1e-15


class TestHiqi:
    def synthetic_dists(self):
        # qubit IUs: q1 = 0.4 (gate1) + 0.0, q2 = 0.0 + 0.01, q3 = 0
        d1 = make_dist(3, 1, {0: 600, 0b001: 400})
        d2 = make_dist(3, 2, {0: 990, 0b010: 10})
        return {1: d1, 2: d2}

    def test_threshold_is_strict(self):
        dists = self.synthetic_dists()
        res = hiqi(dists, 0.005)
        assert res.t.qubits == (1, 2)
        # crossing delta over q2's observed IU flips exactly that qubit
        res2 = hiqi(dists, 0.01)  # equal is low-influence
        assert res2.t.qubits == (1,)
        res3 = hiqi(dists, 0.0099)
        assert res3.t.qubits == (1, 2)

    def test_identity_process_empty_t(self):
        view = junta_view(ProcessSpec(3, ()))
        res = hiqi(view, 0.006, SamplerConfig(shots=10000, seed=1, gate_set="two"))
        assert res.t.is_empty()
        assert res.bounds_tc.subset == QubitSubset.full(3)
        assert res.iu_tc == 0.0

    def test_cnot_with_spam_noise(self):
        view = junta_view(ProcessSpec(4, (GateSpec("cnot", (2, 1)),)))
        cfg = SamplerConfig(shots=260000, seed=42, gate_set="two", noise=NoiseModel.default_spam(4))
        res = hiqi(view, 0.006, cfg)
        assert res.t.qubits == (1, 2)
        assert 1e-3 <= res.iu_tc <= 8e-3
        assert not res.tc_is_surrogate
        assert res.total_shots == 260000

    def test_marginal_mode_surrogate(self):
        view = junta_view(ProcessSpec(4, (GateSpec("cnot", (2, 1)),)))
        nm = NoiseModel.default_spam(4)
        full_cfg = SamplerConfig(shots=100000, seed=9, gate_set="two", noise=nm)
        marg_cfg = SamplerConfig(shots=100000, seed=9, gate_set="two", noise=nm, mode="marginal")
        res_f = hiqi(view, 0.006, full_cfg)
        res_m = hiqi(view, 0.006, marg_cfg)
        assert res_m.t == res_f.t
        assert res_m.tc_is_surrogate and not res_f.tc_is_surrogate
        # the union bound dominates the directly estimated fraction
        assert res_m.iu_tc >= res_f.iu_tc - 1e-12
        # and equals the sum of the member qubits' upper bounds
        want = sum(res_m.per_qubit[q - 1].iu for q in res_m.t.complement().qubits)
        assert abs(res_m.iu_tc - min(want, 1.0)) < 1e-12
        # lower bound falls back to the best member qubit
        want_il = max(res_m.per_qubit[q - 1].il for q in res_m.t.complement().qubits)
        assert res_m.bounds_tc.il == want_il

    def test_three_gate_mode_uses_tighter_bound(self):
        view = junta_view(ProcessSpec(4, (GateSpec("cus", (2, 1)),)))
        nm = NoiseModel.default_spam(4)
        cfg = SamplerConfig(shots=390000, seed=7, gate_set="three", noise=nm)
        res = hiqi(view, 0.006, cfg)
        assert res.mode == "three"
        assert res.t.qubits == (1, 2)
        assert res.bounds_tc.iu_three <= res.bounds_tc.iu + 1e-12
        assert res.iu_tc == res.bounds_tc.iu_three

    def test_input_validation(self):
        with pytest.raises(ValueError, match="delta"):
            hiqi(self.synthetic_dists(), 0.0)
        with pytest.raises(ValueError, match="SamplerConfig"):
            hiqi(junta_view(ProcessSpec(2, ())), 0.01)
        with pytest.raises(ValueError, match="fixed-gate"):
            hiqi({2: make_dist(2, 2, {0: 4})}, 0.01)


class TestJuntaTester:
    def test_two_junta_answers_yes(self):
        view = junta_view(ProcessSpec(4, (GateSpec("cnot", (2, 1)),)))
        cfg = SamplerConfig(shots=100000, seed=3, gate_set="two", noise=NoiseModel.default_spam(4))
        v = junta_tester(view, 2, 0.006, cfg)
        assert v.verdict == "yes"
        assert v.t_size == 2
        assert v.epsilon == junta_distance_bound(v.hiqi.iu_tc)
        assert v.epsilon_stderr is not None

    def test_three_junta_fails_k2(self):
        spec = ProcessSpec(4, (GateSpec("cnot", (2, 1)), GateSpec("h", (3,))))
        v = junta_tester(junta_view(spec), 2, 0.006, SamplerConfig(shots=60000, seed=3, gate_set="two"))
        assert v.verdict == "no"
        assert v.t_size == 3
        assert v.epsilon is None

    def test_zero_iu_gives_zero_epsilon(self):
        view = junta_view(ProcessSpec(3, (GateSpec("x", (1,)),)))
        v = junta_tester(view, 1, 0.006, SamplerConfig(shots=20000, seed=2, gate_set="two"))
        assert v.verdict == "yes"
        assert v.epsilon == 0.0

    def test_k_validation(self):
        view = junta_view(ProcessSpec(3, ()))
        cfg = SamplerConfig(shots=100, seed=1, gate_set="two")
        with pytest.raises(ValueError):
            junta_tester(view, 0, 0.01, cfg)
        with pytest.raises(ValueError):
            junta_tester(view, 3, 0.01, cfg)


def test_bounds_records_roundtrip_shape():
    b = bounds_from_estimates(QubitSubset.full(2), (0.1, 0.2, 0.3), (0.01, 0.01, 0.01))
    rec = b.to_record()
    assert rec["qubits"] == [1, 2]
    assert "iu_three" in rec and rec["surrogate"] is False


def test_empirical_bounds_converge_at_root_m():
    from qinfluence.sampling import run_sampling

    view = junta_view(ProcessSpec(2, (GateSpec("cnot", (1, 2)),)))
    s = QubitSubset.full(2)
    exact_iu = sum(view.sampler_expectations(s)[:2])
    mean_err = {}
    for shots in (4000, 256000):
        errs = []
        for i in range(30):
            dists = run_sampling(view, SamplerConfig(shots=shots, seed=9000 + i, gate_set="two"))
            pairs = [estimate_sampler(dists[l], s) for l in (1, 2)]
            b = bounds_from_estimates(s, [p for p, _ in pairs])
            errs.append(abs(b.iu_raw - exact_iu))
        mean_err[shots] = float(np.mean(errs))
    # a 64x budget should shrink the error by about sqrt(64) = 8
    ratio = mean_err[4000] / mean_err[256000]
    assert 4.0 < ratio < 16.0
