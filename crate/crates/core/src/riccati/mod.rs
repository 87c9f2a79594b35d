//! Periodic Riccati equation `dQ/dt = A Q² + B Q + C0 + alpha C1` for one block.

mod coefficients;
mod periodic;

pub use coefficients::{
    block_coefficients, Block, BlockState, CoefficientInjection, CoefficientSample, InjectedSample,
    RiccatiCoefficients,
};
pub use periodic::{
    default_scan_range, integrate_riccati, kotin_check, log_multiplier, nullcline,
    nullcline_envelope, periodic_solutions, quadrature_periodic, select_admissible,
    shooting_periodic, IntegratorSettings, KotinReport, Method, PeriodicSet, PeriodicSolution,
    QuadratureOutcome, Selection, ShootingOutcome, Trajectory, DENSE_GRID, OUTPUT_GRID,
};
