import numpy as np
import pytest

from qinfluence.channels import (
    CNOT,
    GateSpec,
    NoiseModel,
    ProcessSpec,
    embed_chi,
    junta_view,
)
from qinfluence.estimation import junta_distance_bound
from qinfluence.influence import influence_exact, reduce_subprocess
from qinfluence.processes import (
    choi_to_chi,
    identity_chi,
    process_distance,
    process_fidelity,
    unitary_to_chi,
)
from qinfluence.sampling import SamplerConfig
from qinfluence.subsets import QubitSubset, all_subsets
from qinfluence.tomography import (
    generate_tomography_data,
    junta_learner,
    project_cptp,
    reconstruct_cptp,
    setting_grid,
)

from conftest import rand_chi


class TestDataGeneration:
    def test_grid_sizes(self):
        assert len(setting_grid(1)) == 18
        assert len(setting_grid(2)) == 324

    def test_identity_z_input_stays_put(self):
        data = generate_tomography_data(ProcessSpec(2, ()), QubitSubset.from_qubits([1], 2), None)
        for setting, freq in zip(data.settings, data.frequencies):
            if setting.prep == ("z+",) and setting.basis == ("z",):
                np.testing.assert_allclose(freq, [1.0, 0.0], atol=1e-12)

    def test_us_ground_state_statistics(self):
        # |<1| U_s |0>|^2 = |1+i|^2/3 = 2/3
        data = generate_tomography_data(
            ProcessSpec(1, (GateSpec("us", (1,)),)), QubitSubset.full(1), None
        )
        for setting, freq in zip(data.settings, data.frequencies):
            if setting.prep == ("z+",) and setting.basis == ("z",):
                np.testing.assert_allclose(freq, [1 / 3, 2 / 3], atol=1e-12)

    def test_cnot_bell_correlations(self):
        # |+>|0> evolves to the Bell pair: X(x)X readouts agree, each sign 1/2
        data = generate_tomography_data(
            ProcessSpec(2, (GateSpec("cnot", (1, 2)),)), QubitSubset.full(2), None
        )
        for setting, freq in zip(data.settings, data.frequencies):
            if setting.prep == ("x+", "z+") and setting.basis == ("x", "x"):
                np.testing.assert_allclose(freq, [0.5, 0.0, 0.0, 0.5], atol=1e-12)

    def test_counts_are_seeded_and_normalized(self):
        spec = ProcessSpec(2, (GateSpec("cnot", (1, 2)),))
        a = generate_tomography_data(spec, QubitSubset.full(2), 500, seed=4)
        b = generate_tomography_data(spec, QubitSubset.full(2), 500, seed=4)
        np.testing.assert_array_equal(a.frequencies, b.frequencies)
        np.testing.assert_allclose(a.frequencies.sum(axis=1), 1.0, atol=1e-12)

    def test_flip_noise_mixes_outcomes(self):
        data = generate_tomography_data(
            ProcessSpec(1, ()), QubitSubset.full(1), None, flip_prob=0.1
        )
        for setting, freq in zip(data.settings, data.frequencies):
            if setting.prep == ("z+",) and setting.basis == ("z",):
                np.testing.assert_allclose(freq, [0.9, 0.1], atol=1e-12)

    def test_target_cap(self):
        spec = ProcessSpec(3, ())
        with pytest.raises(ValueError, match="cap"):
            generate_tomography_data(spec, QubitSubset.full(3), None)
        with pytest.raises(ValueError, match="non-empty"):
            generate_tomography_data(spec, QubitSubset.empty(3), None)

    def test_records_schema(self):
        data = generate_tomography_data(ProcessSpec(1, ()), QubitSubset.full(1), 100)
        recs = data.to_records()
        assert len(recs) == 18 * 2
        assert {"prep", "basis", "outcome", "frequency", "count"} <= set(recs[0])


class TestReconstruction:
    def test_identity_exact_closed_loop(self):
        data = generate_tomography_data(ProcessSpec(2, ()), QubitSubset.from_qubits([2], 2), None)
        res = reconstruct_cptp(data, reference=identity_chi(1))
        assert res.fidelity >= 1 - 1e-8
        assert res.distance < 1e-8

    def test_cnot_exact_closed_loop(self):
        spec = ProcessSpec(2, (GateSpec("cnot", (1, 2)),))
        data = generate_tomography_data(spec, QubitSubset.full(2), None)
        res = reconstruct_cptp(data, reference=unitary_to_chi(CNOT, 2))
        assert res.fidelity >= 1 - 1e-8
        assert res.min_eigenvalue >= -1e-9
        assert res.tp_dev <= 1e-9

    def test_finite_shots_fidelity(self):
        spec = ProcessSpec(2, (GateSpec("cnot", (1, 2)),))
        data = generate_tomography_data(spec, QubitSubset.full(2), 10000, seed=5)
        res = reconstruct_cptp(data, reference=unitary_to_chi(CNOT, 2))
        assert res.fidelity >= 0.99
        assert res.min_eigenvalue >= -1e-9
        assert res.tp_dev <= 1e-9

    def test_error_shrinks_with_shots(self):
        spec = ProcessSpec(1, (GateSpec("rx", (1,), theta=0.8),))
        ref = junta_view(spec).sub_chi()
        errs = []
        for shots in (200, 20000):
            data = generate_tomography_data(spec, QubitSubset.full(1), shots, seed=6)
            errs.append(reconstruct_cptp(data, reference=ref).distance)
        assert errs[1] < errs[0]

    def test_noisy_channel_closed_loop(self, rng):
        spec = ProcessSpec(1, (GateSpec("phase_damp", (1,), lam=0.55, phi=0.7),))
        ref = junta_view(spec).sub_chi()
        data = generate_tomography_data(spec, QubitSubset.full(1), None)
        res = reconstruct_cptp(data, reference=ref)
        assert res.distance < 1e-8

    def test_projection_is_fixed_point(self, rng):
        g = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
        j, _ = project_cptp(g + g.conj().T, 2)
        j2, iters = project_cptp(j, 2)
        assert np.linalg.norm(j2 - j) < 1e-8
        assert iters < 20
        assert np.linalg.eigvalsh(j)[0] >= -1e-9


class TestDistanceLaw:
    def test_distance_bound_on_random_channels(self, rng):
        # D(Phi, Phi_T (x) I) <= sqrt(Inf_{T^c}) + Inf_{T^c}/sqrt(2)
        for n in (1, 2, 3):
            for _ in range(3):
                chi = rand_chi(rng, n)
                for t in all_subsets(n, include_empty=True):
                    tc = t.complement()
                    if t.is_empty():
                        approx = identity_chi(n)
                    else:
                        approx = embed_chi(reduce_subprocess(chi, t), t.qubits, n)
                    d = process_distance(chi, approx)
                    inf_tc = influence_exact(chi, tc) if not tc.is_empty() else 0.0
                    assert d <= np.sqrt(inf_tc) + inf_tc / np.sqrt(2) + 1e-9

    def test_tensor_distance_identity(self, rng):
        a, b = rand_chi(rng, 1), rand_chi(rng, 1)
        big_a = embed_chi(a, (2,), 3)
        big_b = embed_chi(b, (2,), 3)
        assert abs(process_distance(big_a, big_b) - process_distance(a, b)) < 1e-10


class TestJuntaLearner:
    def test_cnot_with_spam_noise(self):
        spec = ProcessSpec(4, (GateSpec("cnot", (2, 1)),))
        cfg = SamplerConfig(shots=260000, seed=42, gate_set="two", noise=NoiseModel.default_spam(4))
        out = junta_learner(spec, 0.006, cfg, 10000)
        assert out.t.qubits == (1, 2)
        assert out.epsilon == junta_distance_bound(out.hiqi.iu_tc)
        assert out.reconstruction.fidelity > 0.99
        assert out.total_bound == out.epsilon + out.epsilon_r
        assert out.total_bound < 0.15

    def test_cus_three_gate_mode(self):
        spec = ProcessSpec(4, (GateSpec("cus", (2, 1)),))
        cfg = SamplerConfig(shots=390000, seed=9, gate_set="three", noise=NoiseModel.default_spam(4))
        out = junta_learner(spec, 0.006, cfg, 10000)
        assert out.t.qubits == (1, 2)
        # control sits on qubit 2: in ascending (1, 2) order the unitary is
        # I (x) |0><0| + U_s (x) |1><1|
        from qinfluence.channels import US

        p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        cus_21 = np.kron(np.eye(2), p0) + np.kron(US, p1)
        got = choi_to_chi(out.choi_t)
        assert process_fidelity(got, unitary_to_chi(cus_21, 2)) > 0.99
        assert out.reconstruction.fidelity > 0.99

    def test_phase_damp_reference_influence(self):
        # planted single-qubit damping: Inf = (1 - sqrt(1-lam))/2
        lam = 0.7
        spec = ProcessSpec(4, (GateSpec("phase_damp", (2,), lam=lam),))
        view = junta_view(spec)
        want = (1 - np.sqrt(1 - lam)) / 2
        assert abs(view.influence(QubitSubset.from_qubits([2], 4)) - want) < 1e-12
        cfg = SamplerConfig(shots=120000, seed=3, gate_set="two")
        out = junta_learner(spec, 0.006, cfg, 20000)
        assert out.t.qubits == (2,)
        assert out.reconstruction.fidelity > 0.99

    def test_identity_returns_empty_description(self):
        cfg = SamplerConfig(shots=30000, seed=2, gate_set="two")
        out = junta_learner(ProcessSpec(3, ()), 0.006, cfg, 100)
        assert out.t.is_empty()
        assert out.choi_t is None
        assert out.epsilon == 0.0
        assert out.reconstruction is None
