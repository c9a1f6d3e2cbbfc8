use serde::{Deserialize, Serialize};

use super::SimError;
use crate::metamodel::{FixedWidthModel, PolyMetamodel};
use crate::oracle::{LinearVcoModel, Oracle, OracleConfig};

/// Which VCO model drives the oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VcoView {
    Linear(LinearVcoModel),
    Metamodel(PolyMetamodel),
    Oracle(OracleConfig),
}

impl VcoView {
    pub fn name(&self) -> &'static str {
        match self {
            VcoView::Linear(_) => "linear",
            VcoView::Metamodel(_) => "metamodel",
            VcoView::Oracle(_) => "oracle",
        }
    }
}

/// A view bound to one sizing, ready for repeated evaluation in `vc`.
#[derive(Debug, Clone)]
pub enum VcoEvaluator {
    Linear(LinearVcoModel),
    Poly(FixedWidthModel),
    Oracle {
        oracle: Box<Oracle>,
        wp: f64,
        wn: f64,
    },
}

impl VcoEvaluator {
    pub fn new(view: &VcoView, wp: f64, wn: f64) -> Result<Self, SimError> {
        Ok(match view {
            VcoView::Linear(m) => VcoEvaluator::Linear(*m),
            VcoView::Metamodel(m) => VcoEvaluator::Poly(m.at_widths(wp, wn)?),
            VcoView::Oracle(cfg) => VcoEvaluator::Oracle {
                oracle: Box::new(Oracle::new(cfg.clone())?),
                wp,
                wn,
            },
        })
    }

    fn name(&self) -> &'static str {
        match self {
            VcoEvaluator::Linear(_) => "linear",
            VcoEvaluator::Poly(_) => "metamodel",
            VcoEvaluator::Oracle { .. } => "oracle",
        }
    }

    /// `(freq, power)` at control voltage `vc`; a non-positive or non-finite
    /// frequency is an error naming the view.
    pub fn eval(&self, vc: f64) -> Result<(f64, f64), SimError> {
        let (f, p) = match self {
            VcoEvaluator::Linear(m) => m.evaluate(vc),
            VcoEvaluator::Poly(m) => m.evaluate(vc),
            VcoEvaluator::Oracle { oracle, wp, wn } => oracle.eval(*wp, *wn, vc)?,
        };
        if !(f.is_finite() && f > 0.0 && p.is_finite()) {
            return Err(SimError::BadVco {
                view: self.name(),
                vc,
                freq: f,
            });
        }
        Ok((f, p))
    }
}

/// Evaluate a view once at `(wp, wn, vc)`.
pub fn vco_step(view: &VcoView, wp: f64, wn: f64, vc: f64) -> Result<(f64, f64), SimError> {
    VcoEvaluator::new(view, wp, wn)?.eval(vc)
}

/// The three views compared throughout: the oracle itself, a straight line
/// through its transfer curve at `(wp, wn)`, and a degree-`degree`
/// metamodel fitted to `samples` LHS oracle runs.
pub fn standard_views(
    cfg: &OracleConfig,
    wp: f64,
    wn: f64,
    samples: usize,
    degree: u32,
    seed: u64,
) -> Result<Vec<(String, VcoView)>, SimError> {
    use crate::metamodel::{fit, lhs_sample, vco_ranges, Range, Response};
    use crate::oracle::fit_linear_model;

    let oracle = Oracle::new(cfg.clone())?;
    let mut ranges = vco_ranges();
    ranges[2] = Range::new(0.0, cfg.vdd);
    let plan = lhs_sample(samples, &ranges, seed)?.try_evaluate(|x| {
        oracle
            .eval(x[0], x[1], x[2])
            .map(|(freq, power)| Response { freq, power })
    })?;
    let (model, _) = fit(&plan, degree)?;
    let linear = fit_linear_model(&oracle, wp, wn, Range::new(0.0, cfg.vdd), 181)?;
    Ok(vec![
        ("oracle".into(), VcoView::Oracle(cfg.clone())),
        ("linear".into(), VcoView::Linear(linear)),
        ("metamodel".into(), VcoView::Metamodel(model)),
    ])
}
