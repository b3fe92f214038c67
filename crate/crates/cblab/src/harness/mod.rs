//! Scenario configuration, experiment drivers, rate fitting, and CSV
//! output. The CLI binary is a thin shell over this module.

mod config;
mod ratefit;
mod studies;

pub use config::{
    DeformationGrid, GardingSpec, IntegratorSpec, PotentialSpec, ScenarioConfig,
    StabilityMapSpec, StencilSpec,
};
pub use ratefit::{fit_rate, RateFit, RateOutcome, EXACT_ZERO_FLOOR};
pub use studies::{
    boundary_norm_pair, run_convergence_study, run_garding_study, run_residual_study,
    run_simulate, run_stability_map, ConvergenceRow, ConvergenceStudy, GardingRow, ResidualRow,
    ResidualStudy, RunOptions, StabilityMapRow,
};
