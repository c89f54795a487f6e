//! Experiment engine: episode loops, regret estimation, bound checks,
//! sweeps and CSV output.
//!
//! Every `(prior draw, seed)` cell gets its own ChaCha8 stream derived from
//! the master seed (see [`seeding`]), cells are independent, and results are
//! folded in sorted cell order, so output does not depend on the number of
//! worker threads.

pub mod bounds;
pub mod config;
mod experiment;
pub mod output;
pub mod seeding;
pub mod sweeps;

pub use bounds::{kl_divergence, optimism_check, theorem1_check, OptimismReport, Theorem1Report};
pub use experiment::{
    bayes_regret, run_episode_loop, run_until_learned, time_to_learn, worst_case_regret,
    BayesRegret, EnvSpec, ExperimentConfig, RegretCurve, WorstCaseRegret,
};
pub use output::{CurveRow, SummaryRow};
