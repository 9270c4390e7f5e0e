"""Gaussian cloning of coherent states and its reversal by local operations."""
from .measurement import (
    QuadratureForm,
    bell_measure,
    effective_output_map,
    homodyne,
    run_conditional_trajectory,
    sample_trajectories,
)
from .network import (
    Component,
    Network,
    amplifier,
    balanced_coupler,
    beam_splitter,
    build_asymmetric_cloner,
    build_distributed_cloner,
    build_partial_reversal_network,
    displace,
    phase_rotation,
    qnd_coupling,
)
from .protocols import (
    ConfigError,
    FidelityReport,
    InputSpec,
    ProtocolConfig,
    clone_only,
    distributed_reversal,
    partial_reversal,
    run,
    total_reversal,
)
from .quad_algebra import (
    ClonerLabError,
    GaussianMap,
    GaussianState,
    NonCommutingMeasurement,
    NotUnityGain,
    OperatorLinearForm,
    chaotic_photons,
    commutator,
    gaussian_fidelity,
    hermitian_parts,
    make_state,
)

__version__ = "0.1.0"
