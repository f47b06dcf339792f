import numpy as np
import pytest

from qinfluence.channels import CNOT, US, phase_damp_kraus, rx, ry, rz
from qinfluence.influence import (
    influence_bounds,
    influence_diagnostics,
    influence_exact,
    influence_via_infidelity,
    reduce_subprocess,
    sampler_expectations,
)
from qinfluence.paulis import index_to_digits, pauli_basis
from qinfluence.processes import (
    KrausSet,
    apply_process,
    choi_to_chi,
    ChoiMatrix,
    identity_chi,
    kraus_to_chi,
    unitary_to_chi,
)
from qinfluence.subsets import QubitSubset, all_subsets

from conftest import rand_chi


def brute_influence(chi, s, allowed=(0,)):
    """Oracle: loop the chi diagonal with explicit digit checks."""
    total = 0.0
    for idx in range(4**chi.n):
        digits = index_to_digits(idx, chi.n)
        if all(digits[q - 1] in allowed for q in s.qubits):
            total += chi.mat[idx, idx].real
    return 1.0 - total


def brute_subprocess_chi(chi, s):
    """Oracle: chi of rho_S -> Tr_{S^c}[Phi(rho_S x I/2^|S^c|)] by direct simulation.

    Builds the sub-process Choi operator entry by entry from basis inputs,
    entirely through apply_process and explicit partial traces.
    """
    n, k = chi.n, s.size
    d, dk = 2**n, 2**k
    keep = list(s.qubits)
    drop = [q for q in range(1, n + 1) if q not in keep]

    def full_index(sub_bits, rest_bits):
        # qubit 1 is the most significant bit of a computational index
        idx = 0
        for pos, q in enumerate(keep):
            idx |= ((sub_bits >> (k - 1 - pos)) & 1) << (n - q)
        for pos, q in enumerate(drop):
            idx |= ((rest_bits >> pos) & 1) << (n - q)
        return idx

    n_rest = 2 ** len(drop)
    j_sub = np.zeros((dk * dk, dk * dk), dtype=np.complex128)
    for a in range(dk):
        for b in range(dk):
            rho = np.zeros((d, d), dtype=np.complex128)
            for rest in range(n_rest):
                rho[full_index(a, rest), full_index(b, rest)] = 1.0 / n_rest
            out = apply_process(chi, rho)
            for c in range(dk):
                for e in range(dk):
                    j_sub[c * dk + a, e * dk + b] = sum(
                        out[full_index(c, r), full_index(e, r)] for r in range(n_rest)
                    )
    return choi_to_chi(ChoiMatrix(k, j_sub))


class TestInfluenceExact:
    def test_identity_process(self):
        chi = identity_chi(3)
        for s in all_subsets(3):
            assert influence_exact(chi, s) == 0.0

    def test_cnot_values(self):
        chi = unitary_to_chi(CNOT, 2)
        assert abs(influence_exact(chi, QubitSubset.from_qubits([1], 2)) - 0.5) < 1e-12
        assert abs(influence_exact(chi, QubitSubset.from_qubits([2], 2)) - 0.5) < 1e-12
        assert abs(influence_exact(chi, QubitSubset.full(2)) - 0.75) < 1e-12

    @pytest.mark.parametrize("gate", [rx, ry, rz])
    def test_rotation_law(self, gate):
        for theta in np.linspace(0, 2 * np.pi, 9):
            chi = unitary_to_chi(gate(theta), 1)
            want = np.sin(theta / 2) ** 2
            assert abs(influence_exact(chi, QubitSubset.full(1)) - want) < 1e-12

    def test_us_has_unit_influence(self):
        chi = unitary_to_chi(US, 1)
        assert abs(chi.mat[0, 0]) < 1e-12  # traceless unitary
        assert abs(influence_exact(chi, QubitSubset.full(1)) - 1.0) < 1e-12

    def test_matches_brute_oracle(self, rng):
        for n in (1, 2, 3):
            chi = rand_chi(rng, n)
            for s in all_subsets(n):
                assert abs(influence_exact(chi, s) - brute_influence(chi, s)) < 1e-12

    def test_infidelity_identity(self, rng):
        for n in (1, 2, 3):
            chi = rand_chi(rng, n)
            for s in all_subsets(n):
                assert abs(influence_exact(chi, s) - influence_via_infidelity(chi, s)) < 1e-10
        chi = unitary_to_chi(CNOT, 2)
        for s in all_subsets(2):
            assert abs(influence_exact(chi, s) - influence_via_infidelity(chi, s)) < 1e-10

    def test_unitary_generator_law(self, rng):
        # H built from mutually anticommuting Pauli strings so that H^2 = I
        basis = pauli_basis(2)
        strings = [basis[0b0100], basis[0b1000], basis[0b1101], basis[0b1110], basis[0b1111]]
        for _ in range(5):
            alpha = rng.standard_normal(len(strings))
            alpha /= np.linalg.norm(alpha)
            h = sum(a * p for a, p in zip(alpha, strings))
            np.testing.assert_allclose(h @ h, np.eye(4), atol=1e-12)
            theta = rng.uniform(0, np.pi)
            u = np.cos(theta) * np.eye(4) - 1j * np.sin(theta) * h
            chi = unitary_to_chi(u, 2)
            assert abs(influence_exact(chi, QubitSubset.full(2)) - np.sin(theta) ** 2) < 1e-10

    def test_monotone_and_subadditive(self, rng):
        for n in (2, 3):
            chi = rand_chi(rng, n)
            subsets = all_subsets(n)
            inf = {s.mask: influence_exact(chi, s) for s in subsets}
            for a in subsets:
                for b in subsets:
                    if a.issubset(b):
                        assert inf[a.mask] <= inf[b.mask] + 1e-12
                    union = a.union(b)
                    assert inf[union.mask] <= inf[a.mask] + inf[b.mask] + 1e-12

    def test_junta_complement_is_exactly_zero(self, rng):
        from qinfluence.channels import GateSpec, ProcessSpec, embed_dense

        chi = embed_dense(ProcessSpec(4, (GateSpec("cnot", (2, 1)),)))
        for qubits in ([3], [4], [3, 4]):
            assert influence_exact(chi, QubitSubset.from_qubits(qubits, 4)) == 0.0


class TestSamplerExpectations:
    def test_cnot(self):
        chi = unitary_to_chi(CNOT, 2)
        np.testing.assert_allclose(
            sampler_expectations(chi, QubitSubset.from_qubits([1], 2)), (0.0, 0.5, 0.5), atol=1e-12
        )
        np.testing.assert_allclose(
            sampler_expectations(chi, QubitSubset.full(2)), (0.5, 0.5, 0.75), atol=1e-12
        )

    def test_full_phase_damping(self):
        # Kraus -> chi by hand: diag = (1/2, 0, 0, 1/2)
        chi = kraus_to_chi(KrausSet(1, phase_damp_kraus(1.0)))
        np.testing.assert_allclose(chi.diagonal(), (0.5, 0, 0, 0.5), atol=1e-12)
        np.testing.assert_allclose(
            sampler_expectations(chi, QubitSubset.full(1)), (0.0, 0.5, 0.5), atol=1e-12
        )

    def test_rotations(self):
        for theta in (0.3, 1.2, 2.9):
            s2 = np.sin(theta / 2) ** 2
            s = QubitSubset.full(1)
            np.testing.assert_allclose(
                sampler_expectations(unitary_to_chi(rx(theta), 1), s), (s2, 0.0, s2), atol=1e-12
            )
            np.testing.assert_allclose(
                sampler_expectations(unitary_to_chi(ry(theta), 1), s), (s2, s2, 0.0), atol=1e-12
            )
            np.testing.assert_allclose(
                sampler_expectations(unitary_to_chi(rz(theta), 1), s), (0.0, s2, s2), atol=1e-12
            )

    def test_us_samplers(self):
        # chi diagonal (0, 1/3, 1/3, 1/3) makes every sampler 2/3, so the
        # three-gate upper bound hits the exact unit influence.
        e = sampler_expectations(unitary_to_chi(US, 1), QubitSubset.full(1))
        np.testing.assert_allclose(e, (2 / 3, 2 / 3, 2 / 3), atol=1e-12)
        assert abs(sum(e) / 2 - 1.0) < 1e-12

    def test_matches_brute_oracle(self, rng):
        blind = ((0, 3), (0, 1), (0, 2))
        for n in (2, 3):
            chi = rand_chi(rng, n)
            for s in all_subsets(n):
                got = sampler_expectations(chi, s)
                for l in range(3):
                    assert abs(got[l] - brute_influence(chi, s, blind[l])) < 1e-12


class TestBounds:
    def test_cnot_bounds(self):
        assert influence_bounds((0.5, 0.5, 0.75), "two") == (0.5, 1.0)
        assert influence_bounds((0.5, 0.5, 0.75), "three") == (0.75, 0.875)

    def test_zero(self):
        assert influence_bounds((0.0, 0.0), "two") == (0.0, 0.0)

    def test_clamped(self):
        lo, hi = influence_bounds((0.9, 0.9), "two")
        assert hi == 1.0 and lo == 0.9

    def test_sandwich_on_random_channels(self, rng):
        for n in (1, 2, 3):
            for _ in range(5):
                chi = rand_chi(rng, n)
                for s in all_subsets(n):
                    e = sampler_expectations(chi, s)
                    inf = influence_exact(chi, s)
                    il, iu = influence_bounds(e, "two")
                    il2, iu2 = influence_bounds(e, "three")
                    assert il - 1e-10 <= il2 <= inf + 1e-10
                    assert inf - 1e-10 <= iu2 <= iu + 1e-10

    def test_single_qubit_three_gate_bound_is_exact(self, rng):
        for n in (1, 2, 3):
            chi = rand_chi(rng, n)
            for q in range(1, n + 1):
                s = QubitSubset.from_qubits([q], n)
                _, iu2 = influence_bounds(sampler_expectations(chi, s), "three")
                assert abs(iu2 - influence_exact(chi, s)) < 1e-10

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            influence_bounds((0.5, 1.7), "two")
        with pytest.raises(ValueError):
            influence_bounds((0.5,), "two")
        with pytest.raises(ValueError):
            influence_bounds((0.1, 0.1, 0.1), "four")


class TestDiagnostics:
    def test_identity(self):
        d = influence_diagnostics(identity_chi(2), QubitSubset.full(2))
        assert (d.o, d.a, d.b, d.c) == (1.0, 1.0, 1.0, 1.0)
        assert (d.a_only, d.b_only, d.c_only, d.d) == (0.0, 0.0, 0.0, 0.0)

    def test_cnot(self):
        d = influence_diagnostics(unitary_to_chi(CNOT, 2), QubitSubset.full(2))
        np.testing.assert_allclose(
            (d.o, d.a, d.b, d.c, d.d), (0.25, 0.5, 0.5, 0.25, 0.25), atol=1e-12
        )

    def test_us(self):
        d = influence_diagnostics(unitary_to_chi(US, 1), QubitSubset.full(1))
        np.testing.assert_allclose((d.o, d.a, d.b, d.c, d.d), (0, 1 / 3, 1 / 3, 1 / 3, 0), atol=1e-12)

    def test_partition_and_inequalities(self, rng):
        for n in (1, 2, 3):
            chi = rand_chi(rng, n)
            for s in all_subsets(n):
                d = influence_diagnostics(chi, s)
                assert abs(d.o + d.a_only + d.b_only + d.c_only + d.d - 1.0) < 1e-10
                assert min(d.a, d.b) >= d.o - 1e-10 >= d.a + d.b - 1 - 2e-10
                assert min(d.a, d.b, d.c) >= d.o - 1e-10
                assert d.o >= (d.a + d.b + d.c - 1) / 2 - 1e-10

    def test_rejects_empty_set(self):
        with pytest.raises(ValueError):
            influence_diagnostics(identity_chi(2), QubitSubset.empty(2))


class TestReduceSubprocess:
    def test_cnot_control_reduces_to_dephasing(self):
        chi = unitary_to_chi(CNOT, 2)
        sub = reduce_subprocess(chi, QubitSubset.from_qubits([1], 2))
        np.testing.assert_allclose(sub.diagonal(), (0.5, 0, 0, 0.5), atol=1e-12)

    def test_cnot_target(self):
        chi = unitary_to_chi(CNOT, 2)
        sub = reduce_subprocess(chi, QubitSubset.from_qubits([2], 2))
        np.testing.assert_allclose(sub.diagonal(), (0.5, 0.5, 0, 0), atol=1e-12)

    def test_junta_factor_recovers_subchannel(self, rng):
        from qinfluence.channels import embed_chi

        sub = rand_chi(rng, 1)
        chi = embed_chi(sub, (2,), 3)
        got = reduce_subprocess(chi, QubitSubset.from_qubits([2], 3))
        np.testing.assert_allclose(got.mat, sub.mat, atol=1e-12)

    def test_against_direct_simulation_oracle(self, rng):
        chi = rand_chi(rng, 2)
        for qubits in ([1], [2]):
            s = QubitSubset.from_qubits(qubits, 2)
            want = brute_subprocess_chi(chi, s)
            got = reduce_subprocess(chi, s)
            np.testing.assert_allclose(got.mat, want.mat, atol=1e-10)

    def test_result_is_valid_chi(self, rng):
        chi = rand_chi(rng, 3)
        for s in all_subsets(3):
            sub = reduce_subprocess(chi, s)  # constructor validates
            assert sub.n == s.size

    def test_rejects_empty(self, rng):
        with pytest.raises(ValueError):
            reduce_subprocess(rand_chi(rng, 2), QubitSubset.empty(2))
