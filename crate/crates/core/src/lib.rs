//! Evolutionary public goods game with AI agents placed in player neighborhoods.
//!
//! Players on a torus play focal public goods games against their grid
//! neighbors. Each peripheral slot may be taken over by an AI agent whose
//! behavior is set by a [`Policy`]: always cooperate, cooperate as the focal
//! player dictates, or mimic the focal player. Populations evolve under
//! roulette-wheel selection and mutation; [`sweep`] runs replicate batteries
//! over synergy and agent-density grids and extracts the critical synergy at
//! which cooperation takes over.
//!
//! The `parallel` feature (on by default) runs sweep replicates on a rayon
//! pool; without it sweeps run sequentially with identical results.

pub mod analytics;
pub mod error;
pub mod evolution;
pub mod game;
pub mod model;
pub mod oracle;
pub mod sweep;

pub use analytics::{
    dilemma_bounds, extract_critical_r, lod_statistic, predicted_critical_r, reconstruct_lod,
    CriticalPoint, LodSeries, ResponseCurve,
};
pub use error::{Error, Result};
pub use evolution::{
    run_simulation, run_simulation_with, GenerationRecord, PopulationState, RunOptions, RunResult,
};
pub use game::{payoff_cooperator, payoff_defector, play_focal_game, GameOutcome};
pub use model::{
    validate_params, Action, Genome, InitMode, MimicMode, Policy, Role, RoleMask, SimParams,
};
pub use oracle::expected_focal_payoff_oracle;
pub use sweep::{parse_config, run_sweep, SweepCell, SweepConfig, SweepResult};
