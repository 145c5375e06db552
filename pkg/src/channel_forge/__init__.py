"""channel-forge: quantum-channel algebra, dilation synthesis, circuit-level
density-matrix simulation, noise tailoring, and event-driven network runs."""

from .channels import (
    Channel,
    ChannelError,
    CPTPReport,
    apply,
    channel_from_dict,
    channel_from_json,
    channel_to_dict,
    channel_to_json,
    choi_fidelity,
    choi_to_kraus,
    compose,
    compose_all,
    kraus_to_choi,
    kraus_to_superop,
    mix,
    random_channel,
    random_density_matrix,
    superop_choi_reshuffle,
    validate_cptp,
    validate_density,
)
from .circuits import (
    Circuit,
    ProcessResult,
    build_ad_circuit,
    build_bitflip_circuit_a,
    build_bitflip_circuit_b,
    circuit_from_dict,
    circuit_to_dict,
    extract_channel,
    simulate,
    simulate_detailed,
)
from .dilation import (
    NOT_MIXED_UNITARY,
    NotMixedUnitary,
    POVMRoutine,
    POVMSpec,
    ProjectiveRoutine,
    QuditRoutine,
    StinespringDilation,
    dilation_execute,
    extended_qudit_routine,
    mixed_unitary_decompose,
    povm_to_routine,
    projective_channel_routine,
    qudit_overhead,
    routine_to_dict,
    stinespring_dilate,
)
from .linalg import hermitian_sqrt, state_fidelity
from .netsim import (
    AddRegisters,
    ApplyChannel,
    ApplyGate,
    ConditionalOp,
    FidelityReport,
    MeasureRegister,
    NetworkScenario,
    RemoveRegisters,
    ResourceEstimate,
    StateReport,
    resource_estimate,
    run_scenario,
    scenario_from_dict,
)
from .noise import (
    BlockModel,
    GateModel,
    PauliDiagonalSpec,
    amplitude_damping,
    apply_noise_model,
    bit_flip,
    channel_by_name,
    dephasing,
    depolarizing,
    depolarizing_white,
    erasure,
    noise_model_from_config,
    pauli_diagonal,
    rotation_noise_b,
)
from .tailor import (
    ADRepeatResult,
    BuildingBlockConfig,
    CPTPParameterization,
    Infeasible,
    OptimizerConfig,
    ParametricCircuit,
    PauliTailorResult,
    TailoringRecipe,
    ad_repeat_tailor,
    blackbox_optimize,
    building_block_optimize,
    full_circuit_tailor,
    optimize_block_pair_mixture,
    pauli_mixture_channel,
    pauli_tailor,
    recipe_to_dict,
    run_tailoring_job,
    standard_block_dictionary,
    theta_tailor,
)

__version__ = "0.1.0"
