//! Constrained PLL power minimization by differential evolution.

mod de;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use de::{
    candidate_rng, crossover, de_run, mutate, select, DeConfig, DeResult, GenerationRecord,
};

use crate::metamodel::{MetamodelError, Range};
use crate::pllsim::{run, PllConfig, SimError, VcoEvaluator, VcoView};

#[derive(Debug, Error)]
pub enum OptError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metamodel(#[from] MetamodelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Measured constraint quantities of one PLL design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PllConstraints {
    /// `None` if the loop never locked.
    pub lock_time: Option<f64>,
    /// Transfer-curve endpoints at the control-voltage rails.
    pub f_min: f64,
    pub f_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub objective: f64,
    pub constraints: Option<PllConstraints>,
    /// Sum of normalized constraint violations; zero when feasible.
    pub violation: f64,
    pub feasible: bool,
}

/// Anything DE can minimize over a box.
pub trait Problem: Sync {
    fn bounds(&self) -> &[Range];
    fn evaluate(&self, x: &[f64]) -> Result<Candidate, OptError>;
}

/// Unconstrained objective given as a closure.
pub struct FnProblem<F> {
    pub bounds: Vec<Range>,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Problem for FnProblem<F> {
    fn bounds(&self) -> &[Range] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<Candidate, OptError> {
        Ok(Candidate {
            x: x.to_vec(),
            objective: (self.f)(x),
            constraints: None,
            violation: 0.0,
            feasible: true,
        })
    }
}

/// Minimize locked power over `(W_P, W_N)` subject to a lock-time limit and
/// a tuning range that must cover `[f_min_req, f_max_req]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptProblem {
    pub bounds: Vec<Range>,
    pub lock_time_limit: f64,
    pub f_min_req: f64,
    pub f_max_req: f64,
    /// Scenario every candidate is simulated in; its `vco_view` is the
    /// evaluator and its `wp`/`wn` are overwritten per candidate.
    pub pll: PllConfig,
}

impl Default for OptProblem {
    fn default() -> Self {
        Self {
            bounds: vec![Range::new(5e-6, 25e-6), Range::new(5e-6, 25e-6)],
            lock_time_limit: 400e-9,
            f_min_req: 2180e6,
            f_max_req: 2300e6,
            pll: PllConfig::default(),
        }
    }
}

impl OptProblem {
    pub fn with_view(mut self, view: VcoView) -> Self {
        self.pll.vco_view = view;
        self
    }

    pub fn validate(&self) -> Result<(), OptError> {
        if self.bounds.len() != 2 {
            return Err(OptError::InvalidConfig(
                "PLL sizing has exactly two variables".into(),
            ));
        }
        if self.bounds.iter().any(|b| !(b.lo > 0.0 && b.lo < b.hi)) {
            return Err(OptError::InvalidConfig(
                "width bounds must satisfy 0 < lo < hi".into(),
            ));
        }
        if !(self.f_min_req < self.f_max_req) {
            return Err(OptError::InvalidConfig(
                "f_min_req must be below f_max_req".into(),
            ));
        }
        if !(self.lock_time_limit > 0.0) {
            return Err(OptError::InvalidConfig(
                "lock_time_limit must be > 0".into(),
            ));
        }
        self.pll.validate()?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, OptError> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OptError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Baseline-style evaluation at explicit widths.
    pub fn evaluate_at(&self, wp: f64, wn: f64) -> Result<Candidate, OptError> {
        let cfg = PllConfig {
            wp,
            wn,
            ..self.pll.clone()
        };
        let vco = VcoEvaluator::new(&cfg.vco_view, wp, wn)?;
        let (f_min, _) = vco.eval(0.0)?;
        let (f_max, _) = vco.eval(cfg.vdd)?;
        let (trace, m) = run(&cfg)?;
        let objective = m.p_locked.unwrap_or_else(|| {
            let n = trace.cycles.len().max(1) as f64;
            trace.cycles.iter().map(|c| c.power).sum::<f64>() / n
        });
        // a loop that never locks counts as taking twice the horizon
        let tl = m.lock_time.unwrap_or(2.0 * cfg.t_end);
        let violation = (tl - self.lock_time_limit).max(0.0) / self.lock_time_limit
            + (f_min - self.f_min_req).max(0.0) / self.f_min_req
            + (self.f_max_req - f_max).max(0.0) / self.f_max_req;
        let feasible = m.lock_time.is_some_and(|t| t <= self.lock_time_limit)
            && f_min <= self.f_min_req
            && f_max >= self.f_max_req;
        Ok(Candidate {
            x: vec![wp, wn],
            objective,
            constraints: Some(PllConstraints {
                lock_time: m.lock_time,
                f_min,
                f_max,
            }),
            violation: if feasible {
                0.0
            } else {
                violation.max(f64::MIN_POSITIVE)
            },
            feasible,
        })
    }
}

impl Problem for OptProblem {
    fn bounds(&self) -> &[Range] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<Candidate, OptError> {
        self.evaluate_at(x[0], x[1])
    }
}

/// Exhaustive `n x n` grid over a two-variable problem (endpoints
/// included). Returns every evaluated candidate, row-major in `x[0]`.
pub fn grid_search<P: Problem>(problem: &P, n: usize) -> Result<Vec<Candidate>, OptError> {
    let b = problem.bounds();
    if b.len() != 2 || n < 2 {
        return Err(OptError::InvalidConfig(
            "grid search needs two variables and n >= 2".into(),
        ));
    }
    let level = |r: &Range, k: usize| r.lo + r.width() * k as f64 / (n - 1) as f64;
    let xs: Vec<Vec<f64>> = (0..n * n)
        .map(|c| vec![level(&b[0], c / n), level(&b[1], c % n)])
        .collect();
    xs.par_iter().map(|x| problem.evaluate(x)).collect()
}

/// Best feasible candidate of a set (lowest violation if none is feasible).
pub fn best_of(cands: &[Candidate]) -> Option<&Candidate> {
    cands.iter().min_by(|a, b| {
        b.feasible.cmp(&a.feasible).then(if a.feasible {
            a.objective.total_cmp(&b.objective)
        } else {
            a.violation.total_cmp(&b.violation)
        })
    })
}
