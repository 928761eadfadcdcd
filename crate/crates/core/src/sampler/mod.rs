//! HMC transitions and the tuning, burn-in and production stages.

mod config;
mod hmc;
mod pipeline;
mod trace;

pub use config::{HmcConfig, StepRandomization};
pub use hmc::{hmc_iteration, IterationOutcome};
pub use pipeline::{
    burn_in, chain_rng, prepare, production, run_pipeline, tune_step_size, BurnIn,
    IntegratorKind, PipelineState, ProductionPlan, TuneResult,
};
pub use trace::{ChainRecord, TRACE_VERSION};
