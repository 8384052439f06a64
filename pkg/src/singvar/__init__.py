"""singvar: epsilon-net calculus for singular variational mechanics.

Net-valued scalars over a gauge, vanishing-moment mollifier embeddings of
jumps and point masses, smooth-field calculus, higher-order variational
identities along integrated trajectories, three singular mechanical systems,
and a forward-backward optimal control sweep.
"""

__version__ = "0.1.0"

from .errors import SingvarError
from .gauge import (
    AsymptoticClass,
    Gauge,
    GaugeKind,
    GenNumber,
    Tag,
    classify,
    default_gauge,
    gauge_from_range,
    gen_arith,
    inf_sup,
    is_far_from,
    is_negligible_to_order,
    is_strictly_positive,
)
from .mollifier import (
    MollifierSpec,
    PiecewisePoly,
    build_mollifier,
    delta_at,
    delta_compose_delta,
    embed_piecewise,
    heaviside_at,
)
from .gsfield import (
    GsfField,
    GradedNorm,
    TaylorReport,
    field_from_function,
    graded_norm,
    gsf_derivative,
    integrate_1d,
    taylor_check,
)
from .variational import (
    Direction,
    FunctionPath,
    LagrangianSpec,
    Symmetry,
    action,
    dalembert_residual,
    dbr_residual,
    el_residual,
    first_variation,
    first_variation_central,
    noether_constant,
    phi_operators,
    phi_recurrence_residual,
    second_variation,
    probe_direction,
)
from .dynamics import (
    SystemName,
    SystemSpec,
    Trajectory,
    energy,
    integrate,
    pu_analytic,
    small_oscillation_reference,
)
from .optctrl import (
    ControlGrid,
    ControlProblem,
    SweepState,
    control_first_variation,
    forward_state,
    adjoint_state,
    linearized_state,
    hamiltonian,
    hamiltonian_time_identity,
    solve_wps,
)
