"""Fisher-information regret and incompatibility tradeoffs for quantum multiparameter estimation."""

from .linalg import (
    DensityMatrix,
    ParametricModel,
    Povm,
    hermitian_eig,
    matrix_sqrt_psd,
    projective_povm,
    random_povm,
    trace_norm,
)
from .geometry import QuantumGeometry, SldSet, geometric_tensor, pure_state_tensor, sld_at
from .measurement import (
    ErrorTradeoffReport,
    RegretReport,
    classical_fim,
    comparison_bounds_coherent,
    error_tradeoff_report,
    outcome_distribution,
    regret_report,
)
from .dilation import (
    Dilation,
    MeasurementChannel,
    bridge_check,
    build_dilation,
    channel_sld,
    ozawa_error,
)
from .models import (
    CoherentModel,
    GaussianJointMeasurement,
    GenericPureModel,
    QubitDephasingModel,
    coherent_model,
    gaussian_log_density,
    gaussian_measurement_fim,
    qubit_model,
    trace_frontier,
    vidrighin_check,
)
from .simulate import (
    EstimationRun,
    attainment_report,
    estimate,
    sample_gaussian_outcomes,
    sample_povm_outcomes,
)

__version__ = "0.1.0"
