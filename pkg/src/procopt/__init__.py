"""Optimal coherent control of open-quantum-system processes.

The dynamical variable is the process matrix chi of the evolving channel;
it is propagated under a Lindblad-type master equation lifted to operator
space and steered by the monotonically convergent Krotov iteration toward
fidelity-based or feature-based (purity, coherence) objectives.
"""

from .basis import (
    BasisChange,
    BasisKind,
    OperatorBasis,
    basis_change,
    devectorize,
    embed_operator,
    gell_mann_basis,
    logical_basis,
    vectorize,
)
from .dynamics import (
    ControlField,
    LindbladModel,
    Superoperator,
    TimeGrid,
    build_generator,
    check_trajectory,
    control_generator_derivative,
    density_oracle,
    propagate_costate_backward,
    propagate_forward,
    reconstruct_process_from_oracle,
    trajectory_process,
)
from .functionals import (
    FunctionalSpec,
    f_c,
    f_geo,
    f_hs,
    f_nc,
    f_state,
    gradient,
    krotov_A,
    probe_states,
    value,
)
from .krotov import (
    IterationRecord,
    KrotovConfig,
    OptimizationResult,
    Termination,
    j_d,
    run,
    update_field_step,
)
from .lambda_system import (
    LambdaParams,
    TargetGate,
    guess_field,
    lambda_model,
    rescale_field,
    target_process,
)
from .process import (
    BlochVector,
    InvariantViolation,
    ProcessMatrix,
    apply_process,
    bloch_decompose,
    bloch_reconstruct,
    chi_from_unitary,
    choi_state,
    coherence_l1,
    initial_process,
    purity,
)

__version__ = "0.1.0"
