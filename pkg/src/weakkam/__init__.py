"""Discounted Hamilton-Jacobi equations on the circle.

Semi-Lagrangian solvers for ``lam u + H_check(x, Du) = c`` and its forward
counterpart, the critical value, projected Aubry sets and the discounted
characteristic flow for ``H = p^2/2 + b(x) p + U(x)``.
"""

from .aubry import (
    AubryEstimate,
    aubry_reversible,
    check_vanishing_on_aubry,
    critical_fixed_point,
    peierls_oracle,
)
from .critical import (
    CriticalReport,
    check_constant_subsolution,
    critical_value_ergodic,
    critical_value_reversible,
)
from .estimators import CriticalValueEstimator, DiscountedSolver, ForwardWeakKAMSolver
from .exceptions import (
    Blowup,
    BoundaryMinimizer,
    DegenerateFixedPoints,
    Divergence,
    GraphFailure,
    NoConvergence,
    NotFixedPoint,
    NotReversible,
    NotSaddle,
    PreconditionError,
    WeakKAMError,
)
from .flow import (
    EmpiricalMeasure,
    LinearizationReport,
    ManifoldPatch,
    MatherEstimate,
    PhasePoint,
    Trajectory,
    dissipation_profile,
    empirical_measure,
    find_fixed_points,
    integrate,
    linearize,
    mather_set_estimate,
    stable_manifold_local,
    vector_field,
)
from .model import (
    Grid,
    GridFunction,
    HamiltonianSpec,
    ScalarField,
    custom,
    eval_H,
    eval_H_check,
    eval_L,
    eval_L_check,
    grad_central,
    interpolate,
    lipschitz_constant,
    mane,
    mechanical,
    pendulum,
    remark,
    zero,
)
from .semigroup import (
    SemigroupConfig,
    SolveReport,
    backward_step,
    calibration_defect,
    forward_limit,
    forward_step,
    minimal_solution_negative,
    optimal_momentum,
    residual,
    solve_discounted,
)

__version__ = "0.1.0"
