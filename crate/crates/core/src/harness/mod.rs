//! Experiment orchestration, configuration and structured output.

pub mod bound;
pub mod config;
pub mod data;
pub mod fit;
pub mod kernel;
pub mod ns_run;
pub mod rate;
pub mod report;
pub mod stokes;

use std::sync::Arc;

pub use config::RunConfig;
pub use report::{emit_outputs, ExperimentReport};

use crate::error::{Error, Result};
use crate::grid::ZGrid;
use crate::semigroup::KernelCache;

/// Production z-grid for viscosity `nu`.
pub fn grid_for(cfg: &RunConfig, nu: f64) -> Result<Arc<ZGrid>> {
    Ok(Arc::new(cfg.grid_spec().build(nu)?))
}

/// Kernel cache for one `(nu, beta)` with modes up to `k`, persisted when `cache_dir` is set.
pub fn cache_for(cfg: &RunConfig, nu: f64, beta: f64, k: usize, grid: Arc<ZGrid>) -> Result<KernelCache> {
    let cache = KernelCache::new(nu, beta, k, grid, cfg.contour_spec()?);
    Ok(match &cfg.cache_dir {
        Some(dir) => cache.with_disk(dir.clone()),
        None => cache,
    })
}

/// Experiment names accepted by [`run_experiment`], in CLI order.
pub const EXPERIMENTS: &[&str] = &[
    kernel::NAME,
    stokes::STOKES,
    ns_run::NAME,
    rate::NAME,
    bound::NAME,
    stokes::ORACLE,
];

/// Runs the experiment named by `cfg.experiment`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    match cfg.experiment.as_str() {
        kernel::NAME => kernel::run(cfg),
        stokes::STOKES => stokes::run_stokes(cfg),
        ns_run::NAME => ns_run::run(cfg),
        rate::NAME => rate::run(cfg),
        bound::NAME => bound::run(cfg),
        stokes::ORACLE => stokes::run_oracle(cfg),
        other => Err(Error::Config(format!(
            "unknown experiment `{other}` (known: {})",
            EXPERIMENTS.join(", ")
        ))),
    }
}
