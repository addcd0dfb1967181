//! Monte-Carlo wavefunction propagation with reaction-termination jumps.

pub mod ensemble;
pub mod initial;
pub mod jump;
pub mod rng;
pub mod trajectory;

pub use ensemble::{
    run_ensemble, run_ensemble_range, trapezoid_weights, EnsembleAccumulator, EnsembleResult,
    EnsembleSettings, Moment,
};
pub use initial::{
    exhaustive_state, product_state, sample_initial_state, singlet_electron_state,
    spin_coherent_state, t0_electron_state, InitialStateStrategy,
};
pub use jump::{jump_rates, select_and_apply_jump, JumpOutcome, JumpRates};
pub use rng::RandomStream;
pub use trajectory::{
    propagate_trajectory, propagate_with_observer, uniform_grid, validate_grid, GridObserver,
    GridSample, JumpEvent, JumpType, NoJumpEvolution, Outcome, TrajectoryRecord,
    TrajectorySummary, DEFAULT_TRAJECTORY_TOL,
};
