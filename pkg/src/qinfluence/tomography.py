"""Finite-shot process tomography of identified sub-processes, and learning.

Data generation prepares each target qubit in one of the six Pauli
eigenstates, pushes the state through the induced sub-process (everything
off the target set sits in the maximally mixed state), and measures each
target qubit in one of the three Pauli bases. Reconstruction solves the
linear-inversion least squares for the Choi operator in a Hermitian Pauli
parametrization and projects the solution onto the CPTP set with Dykstra
alternating projections (PSD cone eigenvalue clipping, trace-preserving
affine correction).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import JuntaView
from .estimation import HiqiResult, SamplerConfig, junta_distance_bound, junta_distance_bound_stderr, hiqi
from .paulis import kron_all, pauli_basis
from .processes import (
    ChiMatrix,
    ChoiMatrix,
    chi_to_kraus,
    choi_to_chi,
    process_distance,
    process_fidelity,
    tp_deviation,
)
from .sampling import _substream, as_junta_view
from .subsets import QubitSubset

_SQ2 = 1.0 / math.sqrt(2.0)
EIGENSTATES = {
    "x+": np.array([_SQ2, _SQ2], dtype=np.complex128),
    "x-": np.array([_SQ2, -_SQ2], dtype=np.complex128),
    "y+": np.array([_SQ2, _SQ2 * 1j]),
    "y-": np.array([_SQ2, -_SQ2 * 1j]),
    "z+": np.array([1.0, 0.0], dtype=np.complex128),
    "z-": np.array([0.0, 1.0], dtype=np.complex128),
}
PREP_LABELS = ("x+", "x-", "y+", "y-", "z+", "z-")
BASIS_LABELS = ("x", "y", "z")
# Outcome bit 0 projects onto the +1 eigenstate of the measured Pauli.
BASIS_VECTORS = {b: (EIGENSTATES[b + "+"], EIGENSTATES[b + "-"]) for b in BASIS_LABELS}

_TOMO_STREAM = 4  # RNG stream id, disjoint from the sampler's gate streams
PROJECTION_TOL = 1e-10
PROJECTION_MAX_ITER = 1000
DEFAULT_TARGET_CAP = 2


@dataclass(frozen=True)
class TomographySetting:
    """One preparation/measurement configuration over the target qubits."""

    prep: tuple[str, ...]
    basis: tuple[str, ...]


@dataclass(frozen=True)
class TomographyData:
    """Outcome frequencies for the full 6^m x 3^m setting grid.

    ``shots_per_setting`` is ``None`` when the frequencies are exact outcome
    probabilities (the infinite-statistics limit used by closed-loop tests).
    """

    t: QubitSubset
    shots_per_setting: int | None
    settings: tuple[TomographySetting, ...]
    frequencies: np.ndarray  # (num settings, 2^m)

    @property
    def m(self) -> int:
        return self.t.size

    def to_records(self) -> list[dict]:
        recs = []
        shots = self.shots_per_setting
        for setting, freq in zip(self.settings, self.frequencies):
            for outcome, f in enumerate(freq):
                rec = {
                    "prep": list(setting.prep),
                    "basis": list(setting.basis),
                    "outcome": outcome,
                    "frequency": float(f),
                }
                if shots is not None:
                    rec["count"] = int(round(f * shots))
                recs.append(rec)
        return recs


def setting_grid(m: int) -> tuple[TomographySetting, ...]:
    return tuple(
        TomographySetting(prep, basis)
        for prep in itertools.product(PREP_LABELS, repeat=m)
        for basis in itertools.product(BASIS_LABELS, repeat=m)
    )


def _outcome_probs(kraus, setting: TomographySetting) -> np.ndarray:
    psi = kron_all([EIGENSTATES[p] for p in setting.prep])
    rho = kraus.apply(np.outer(psi, psi.conj()))
    meas = kron_all([np.stack(BASIS_VECTORS[b]).conj() for b in setting.basis])
    probs = np.clip(np.diag(meas @ rho @ meas.conj().T).real, 0.0, None)
    return probs / probs.sum()


def _apply_flip_noise(probs: np.ndarray, m: int, flip: float) -> np.ndarray:
    conf = np.array([[1 - flip, flip], [flip, 1 - flip]])
    t = probs.reshape([2] * m)
    for axis in range(m):
        t = np.tensordot(conf, t, axes=([1], [axis]))
        t = np.moveaxis(t, 0, axis)
    return t.reshape(-1)


def generate_tomography_data(
    process,
    t: QubitSubset,
    shots_per_setting: int | None,
    seed: int = 0,
    flip_prob: float = 0.0,
    cap: int = DEFAULT_TARGET_CAP,
) -> TomographyData:
    """Simulate the tomography experiment on the sub-process over ``t``.

    ``shots_per_setting=None`` returns exact outcome probabilities.
    ``flip_prob`` optionally flips each recorded bit independently. Counts
    are multinomial with one RNG substream per setting, so the grid order
    never affects reproducibility.
    """
    if t.is_empty():
        raise ValueError("tomography needs a non-empty target set")
    if t.size > cap:
        raise ValueError(f"target set of {t.size} qubits exceeds the cap of {cap}")
    view = as_junta_view(process)
    kraus = chi_to_kraus(view.chi_on(t))
    settings = setting_grid(t.size)
    freqs = np.zeros((len(settings), 2**t.size))
    for idx, setting in enumerate(settings):
        probs = _outcome_probs(kraus, setting)
        if flip_prob:
            probs = _apply_flip_noise(probs, t.size, flip_prob)
        if shots_per_setting is None:
            freqs[idx] = probs
        else:
            rng = _substream(seed, _TOMO_STREAM, idx)
            freqs[idx] = rng.multinomial(shots_per_setting, probs) / shots_per_setting
    return TomographyData(t, shots_per_setting, settings, freqs)


@dataclass(frozen=True)
class ReconstructionResult:
    """CPTP-projected Choi estimate with residuals and optional reference scores."""

    choi: ChoiMatrix
    iterations: int
    min_eigenvalue: float
    tp_dev: float
    fidelity: float | None = None
    distance: float | None = None

    def to_record(self) -> dict:
        return {
            "iterations": self.iterations,
            "min_eigenvalue": self.min_eigenvalue,
            "tp_dev": self.tp_dev,
            "fidelity": self.fidelity,
            "distance": self.distance,
            "projection_tol": PROJECTION_TOL,
            "choi_real": self.choi.mat.real.tolist(),
            "choi_imag": self.choi.mat.imag.tolist(),
        }


def _measurement_operator(setting: TomographySetting, outcome: int, m: int) -> np.ndarray:
    """E_outcome (x) rho_prep^T, the operator whose Choi overlap is the probability."""
    vecs = []
    for j, b in enumerate(setting.basis):
        bit = (outcome >> (m - 1 - j)) & 1
        vecs.append(BASIS_VECTORS[b][bit])
    ev = kron_all(vecs)
    pv = kron_all([EIGENSTATES[p] for p in setting.prep])
    e = np.outer(ev, ev.conj())
    rho_t = np.outer(pv, pv.conj()).T
    return np.kron(e, rho_t)


def _psd_project(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.clip(w, 0.0, None)) @ v.conj().T


def _tp_project(j: np.ndarray, d: int) -> np.ndarray:
    t = j.reshape(d, d, d, d)
    excess = np.einsum("cacb->ab", t) - np.eye(d)
    return j - np.kron(np.eye(d), excess) / d


def project_cptp(j: np.ndarray, n: int) -> tuple[np.ndarray, int]:
    """Dykstra alternating projections onto PSD intersect trace-preserving."""
    d = 2**n
    x = (j + j.conj().T) / 2
    correction = np.zeros_like(x)
    iterations = 0
    for iterations in range(1, PROJECTION_MAX_ITER + 1):
        y = _psd_project(x + correction)
        correction = x + correction - y
        x_new = _tp_project(y, d)
        if np.linalg.norm(x_new - x) < PROJECTION_TOL:
            x = x_new
            break
        x = x_new
    return x, iterations


def reconstruct_cptp(data: TomographyData, reference: ChiMatrix | None = None) -> ReconstructionResult:
    """Least-squares Choi estimate from frequencies, projected to CPTP.

    The Choi operator is expanded in the orthonormal Hermitian basis of
    scaled Pauli strings, giving a real least-squares problem; the full
    six-state/three-basis grid makes the design matrix full rank.
    """
    m = data.m
    d = 2**m
    gens = pauli_basis(2 * m) / d  # orthonormal: Tr[G_i G_j] = delta_ij
    rows = []
    rhs = []
    for setting, freq in zip(data.settings, data.frequencies):
        for outcome in range(d):
            op = _measurement_operator(setting, outcome, m)
            rows.append(np.einsum("kij,ji->k", gens, op).real)
            rhs.append(freq[outcome])
    design = np.array(rows)
    theta, _, rank, _ = np.linalg.lstsq(design, np.array(rhs), rcond=None)
    if rank < d**4:
        raise RuntimeError(f"tomography design matrix is rank deficient ({rank} < {d**4})")
    j_ls = np.tensordot(theta, gens, axes=1)
    j_proj, iterations = project_cptp(j_ls, m)
    choi = ChoiMatrix(m, j_proj)
    fidelity = distance = None
    if reference is not None:
        chi_hat = choi_to_chi(choi)
        fidelity = process_fidelity(chi_hat, reference)
        distance = process_distance(chi_hat, reference)
    return ReconstructionResult(
        choi=choi,
        iterations=iterations,
        min_eigenvalue=float(np.linalg.eigvalsh(j_proj)[0]),
        tp_dev=tp_deviation(j_proj, m),
        fidelity=fidelity,
        distance=distance,
    )


@dataclass(frozen=True)
class LearnerOutput:
    """A junta description of the process with composed error bounds.

    ``epsilon`` bounds the distance to the nearest T-junta; ``epsilon_r``
    (when a reference sub-process is available) is the reconstruction
    distance, and the total distance to the learned description is bounded
    by their sum.
    """

    t: QubitSubset
    choi_t: ChoiMatrix | None
    epsilon: float
    epsilon_stderr: float | None
    epsilon_r: float | None
    total_bound: float | None
    hiqi: HiqiResult
    reconstruction: ReconstructionResult | None

    def to_record(self) -> dict:
        return {
            "t": list(self.t.qubits),
            "epsilon": self.epsilon,
            "epsilon_stderr": self.epsilon_stderr,
            "epsilon_r": self.epsilon_r,
            "total_bound": self.total_bound,
            "hiqi": self.hiqi.to_record(),
            "reconstruction": None if self.reconstruction is None else self.reconstruction.to_record(),
        }


def junta_learner(
    process,
    delta: float,
    config: SamplerConfig,
    shots_per_setting: int | None,
    tomography_flip: float = 0.0,
    cap: int = DEFAULT_TARGET_CAP,
    compare_reference: bool = True,
) -> LearnerOutput:
    """Identify the influential qubits, then learn the sub-process on them.

    Returns the reconstructed sub-process Choi operator together with the
    junta-approximation bound epsilon and, when the true sub-process is
    compared, the reconstruction distance epsilon_r and the combined bound.
    An empty T yields the global-identity description with epsilon taken
    from the whole-system influence bound.
    """
    view: JuntaView = as_junta_view(process)
    result = hiqi(view, delta, config)
    eps = junta_distance_bound(result.iu_tc)
    eps_se = junta_distance_bound_stderr(result.iu_tc, result.bounds_tc.best_iu_stderr)
    if result.t.is_empty():
        return LearnerOutput(
            t=result.t,
            choi_t=None,
            epsilon=eps,
            epsilon_stderr=eps_se,
            epsilon_r=None,
            total_bound=None,
            hiqi=result,
            reconstruction=None,
        )
    data = generate_tomography_data(
        view, result.t, shots_per_setting, seed=config.seed, flip_prob=tomography_flip, cap=cap
    )
    reference = view.chi_on(result.t) if compare_reference else None
    recon = reconstruct_cptp(data, reference)
    eps_r = recon.distance
    return LearnerOutput(
        t=result.t,
        choi_t=recon.choi,
        epsilon=eps,
        epsilon_stderr=eps_se,
        epsilon_r=eps_r,
        total_bound=None if eps_r is None else eps + eps_r,
        hiqi=result,
        reconstruction=recon,
    )
