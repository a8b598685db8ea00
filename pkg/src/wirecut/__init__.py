"""Wire cutting with parameterized quasiprobability tables and variance-aware shot allocation."""

from .circuit import (
    Configuration,
    CutPoint,
    Fragment,
    GateOp,
    Partition,
    QuantumCircuit,
    apply_cuts,
    enumerate_configurations,
    parse_circuit,
    parse_document,
    prep_states_for,
    stitch,
)
from .decomposition import (
    CoefficientTable,
    CutParameters,
    Scheme,
    build_table,
    l4_subspace_project,
    preset_table,
    validate_table,
)
from .errors import InputError, WirecutError
from .harness import Experiment, RunConfig, evaluate_variance, run_pipeline
from .optimizer import (
    OptimizerConfig,
    ShotPlan,
    allocate,
    improvement_ratio,
    loss,
    optimize_parameters,
    segment_schedule,
)
from .reconstruction import Reconstructor, VarianceModel, predicted_err, reconstruct, variance_coefficients
from .simulator import estimate, sample, simulate_exact, simulate_fragment

__version__ = "0.1.0"
