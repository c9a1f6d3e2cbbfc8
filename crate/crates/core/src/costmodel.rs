//! Run-time accounting for extraction-per-iteration versus metamodel-based
//! optimization flows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("{0} must be finite and non-negative, got {1}")]
    Negative(&'static str, f64),
    #[error("baseline time must be positive, got {0}")]
    NonPositiveBaseline(f64),
}

/// Times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Optimizer iterations (design evaluations).
    pub n_i: u64,
    /// Samples used to build the metamodel.
    pub n_s: u64,
    /// Parasitic extraction per design.
    pub t_ext: f64,
    /// One transient simulation.
    pub t_sim: f64,
    /// Metamodel generation.
    pub t_gen: f64,
    /// Per-run initialization in the metamodel flow.
    pub t_ini: f64,
}

impl CostParams {
    pub fn new(n_i: u64, n_s: u64, t_ext: f64, t_sim: f64) -> Self {
        Self {
            n_i,
            n_s,
            t_ext,
            t_sim,
            t_gen: 0.0,
            t_ini: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        for (name, v) in [
            ("t_ext", self.t_ext),
            ("t_sim", self.t_sim),
            ("t_gen", self.t_gen),
            ("t_ini", self.t_ini),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CostError::Negative(name, v));
            }
        }
        Ok(())
    }
}

/// Extract and simulate at every iteration: `N_i t_ext + N_i t_sim`.
pub fn t_macromodel(p: &CostParams) -> f64 {
    p.n_i as f64 * p.t_ext + p.n_i as f64 * p.t_sim
}

/// Extract only the `N_s` samples, then simulate the metamodel each
/// iteration. `full` adds generation and per-run initialization;
/// otherwise those are neglected: `N_s t_ext + N_i t_sim`.
pub fn t_metamodel_flow(p: &CostParams, full: bool) -> f64 {
    let base = p.n_s as f64 * p.t_ext;
    if full {
        base + p.t_gen + p.n_i as f64 * (p.t_ini + p.t_sim)
    } else {
        base + p.n_i as f64 * p.t_sim
    }
}

/// `(N_i - N_s) t_ext`; negative when sampling costs more than it saves.
pub fn t_difference(p: &CostParams) -> f64 {
    (p.n_i as f64 - p.n_s as f64) * p.t_ext
}

/// Fractional saving `(baseline - improved) / baseline`.
pub fn reduction_pct(baseline: f64, improved: f64) -> Result<f64, CostError> {
    if !(baseline.is_finite() && baseline > 0.0) {
        return Err(CostError::NonPositiveBaseline(baseline));
    }
    Ok((baseline - improved) / baseline)
}
