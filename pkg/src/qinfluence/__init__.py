"""Influence sampling toolkit for n-qubit quantum processes.

Exact influence computation on process matrices, shot-level simulation of
the sampling circuits, high-influence qubit identification under SPAM
noise, junta testing, and CPTP process tomography of identified
sub-processes - as a library plus the ``qinfluence`` experiment CLI.
"""

from .channels import (
    GateSpec,
    JuntaView,
    NoiseModel,
    ProcessSpec,
    build_gate,
    embed_chi,
    embed_dense,
    junta_view,
)
from .estimation import (
    HiqiResult,
    InfluenceBounds,
    TesterVerdict,
    bounds_from_estimates,
    estimate_sampler,
    junta_distance_bound,
    junta_distance_bound_stderr,
    hiqi,
    junta_tester,
    theoretical_iu_variance,
)
from .influence import (
    InfluenceDiagnostics,
    influence_bounds,
    influence_diagnostics,
    influence_exact,
    influence_via_infidelity,
    reduce_subprocess,
    sampler_expectations,
)
from .processes import (
    ChiMatrix,
    ChoiMatrix,
    KrausSet,
    ValidationError,
    apply_process,
    chi_to_choi,
    chi_to_kraus,
    choi_to_chi,
    choi_to_kraus,
    identity_chi,
    kraus_to_chi,
    kraus_to_choi,
    process_distance,
    process_fidelity,
    random_channel,
    random_unitary,
    unitary_to_chi,
)
from .sampling import (
    CapabilityError,
    CapacityError,
    SamplerConfig,
    ShotRecord,
    SubsetDistribution,
    influence_sample_shot,
    run_sampling,
    run_sampling_random,
)
from .subsets import QubitSubset, all_subsets
from .tomography import (
    LearnerOutput,
    ReconstructionResult,
    TomographyData,
    generate_tomography_data,
    junta_learner,
    reconstruct_cptp,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "CapacityError",
    "ChiMatrix",
    "ChoiMatrix",
    "GateSpec",
    "HiqiResult",
    "InfluenceBounds",
    "InfluenceDiagnostics",
    "JuntaView",
    "KrausSet",
    "LearnerOutput",
    "NoiseModel",
    "ProcessSpec",
    "QubitSubset",
    "ReconstructionResult",
    "SamplerConfig",
    "ShotRecord",
    "SubsetDistribution",
    "TesterVerdict",
    "TomographyData",
    "ValidationError",
    "all_subsets",
    "apply_process",
    "bounds_from_estimates",
    "build_gate",
    "chi_to_choi",
    "chi_to_kraus",
    "choi_to_chi",
    "choi_to_kraus",
    "embed_chi",
    "embed_dense",
    "estimate_sampler",
    "junta_distance_bound",
    "junta_distance_bound_stderr",
    "generate_tomography_data",
    "hiqi",
    "identity_chi",
    "influence_bounds",
    "influence_diagnostics",
    "influence_exact",
    "influence_sample_shot",
    "influence_via_infidelity",
    "junta_learner",
    "junta_tester",
    "junta_view",
    "kraus_to_chi",
    "kraus_to_choi",
    "process_distance",
    "process_fidelity",
    "random_channel",
    "random_unitary",
    "reconstruct_cptp",
    "reduce_subprocess",
    "run_sampling",
    "run_sampling_random",
    "sampler_expectations",
    "theoretical_iu_variance",
    "unitary_to_chi",
]
