"""Spiked Dyson Brownian motion: simulation, top-eigenvalue deviation
rate functionals, and Girsanov-tilted rare-event estimation."""

from .dbm import (
    EnsemblePath,
    SimConfig,
    coupled_spike_pair,
    simulate_matrix,
    simulate_particle,
    top_path,
)
from .errors import (
    DomainError,
    DysonLDPError,
    EmptySegmentError,
    IntegrationError,
    InvalidParameterError,
    NoDensityError,
    SingularDriftError,
    WallViolationError,
)
from .fixedtime import (
    FixedTimeQuery,
    K_theta,
    closed_form_linear_rate,
    int_sqrt,
    optimal_path,
    tangent_departure_time,
)
from .measures import (
    EmpiricalMeasure,
    SemicircleLaw,
    emp_drift,
    leave_top_out,
    sc_density,
    sc_drift,
    w1_distance,
)
from .paths import ScalarPath, uniform_grid
from .rate import (
    SEMICIRCLE,
    F_functional,
    G_functional,
    RateParams,
    k_phi,
    lln_path,
    rate_I,
    sup_J_lower,
    t0_of,
    x_transform,
)
from .sampler import (
    EstimateReport,
    TiltSpec,
    estimate_tail_prob,
    estimate_tube_prob,
    fn_identity_check,
    tightness_check,
    tilted_simulate,
    tube_tilt,
)
from .variational import (
    MinimizeResult,
    VarProblem,
    dbr_constant,
    discretized_objective,
    el_residual,
    minimize_path,
    objective_gradient,
)

__version__ = "0.1.0"
