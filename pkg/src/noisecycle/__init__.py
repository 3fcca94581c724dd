"""Noise-induced quantum limit cycles and their classical stochastic twin.

Truncated-Fock generators and steady states, closed-form phase-space
quasiprobabilities and the phase diagram, circulation and detailed balance,
grid phase-space currents, and a multiplicative-noise classical comparison
model.
"""

from .analytic import (
    HopfFit,
    Phase,
    PhasePoint,
    TailGaussian,
    WignerClosedForm,
    coherent_cycle_threshold,
    coherent_even_weight,
    coherent_thresholds,
    hopf_scaling,
    limit_cycle_radius,
    mandel_q,
    mean_n_ss,
    nonclassical_region,
    phase_boundary,
    phase_classify,
    rho_ss_analytic,
    scan_radius,
    sigmoid,
    tail_gaussian,
    wigner_origin,
    wigner_radial,
    wigner_ss,
    wigner_ss_complex,
    wigner_ss_polar,
)
from .fock import (
    FockError,
    ModelKind,
    ModelParams,
    NoStationaryStateError,
    adjoint_liouvillian,
    build_ladder,
    coherent_state,
    default_dim,
    devectorize,
    dim_for_tail,
    dissipator,
    fock_state,
    liouvillian,
    number_op,
    parity_op,
    quadrature_x,
    quadrature_y,
    vectorize,
)
from .lindblad import (
    CirculationResult,
    ConservedDecomposition,
    DegenerateSpectrumError,
    SteadyStateResult,
    circulation,
    conserved_decomposition,
    conserved_reconstruction,
    detailed_balance_residual,
    evolve,
    parity_expectation,
    parity_weights,
    steady_states,
    time_reverse_operator,
    time_reversed_liouvillian,
    trace_distance,
    wigner_numeric,
    wigner_numeric_grid,
)
from .sde import (
    SdeConfig,
    SdeEnsembleResult,
    analytic_pdfs,
    circulation_classical,
    classical_detailed_balance,
    fokker_planck_residual,
    noise_induced_drift_check,
    simulate_ensemble,
    step_cartesian,
    step_polar,
)
from .wignerflux import (
    FluxDecomposition,
    WignerField,
    divergence,
    flux_decompose,
    sample_steady_field,
    wigner_current,
    wigner_generator_apply,
)

__version__ = "0.1.0"
