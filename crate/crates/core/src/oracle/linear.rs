use serde::{Deserialize, Serialize};

use super::{Oracle, OracleError};
use crate::metamodel::Range;

/// Ideal VCO: `f = f0 + kvco * vc`, constant power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearVcoModel {
    pub f0: f64,
    pub kvco: f64,
    pub power_const: f64,
}

impl LinearVcoModel {
    pub fn new(f0: f64, kvco: f64, power_const: f64) -> Result<Self, OracleError> {
        if !(f0.is_finite() && f0 > 0.0 && kvco.is_finite() && power_const.is_finite()) {
            return Err(OracleError::InvalidConfig(format!(
                "linear VCO needs f0 > 0 and finite gain (f0 = {f0}, kvco = {kvco})"
            )));
        }
        Ok(Self {
            f0,
            kvco,
            power_const,
        })
    }

    #[inline]
    pub fn evaluate(&self, vc: f64) -> (f64, f64) {
        (self.f0 + self.kvco * vc, self.power_const)
    }

    /// Least-squares line through `(vc, freq)` samples; power is the sample
    /// mean.
    pub fn fit(vcs: &[f64], freqs: &[f64], powers: &[f64]) -> Result<Self, OracleError> {
        let n = vcs.len();
        if n < 2 || freqs.len() != n || powers.len() != n {
            return Err(OracleError::InvalidConfig(
                "line fit needs at least two matching samples".into(),
            ));
        }
        let nf = n as f64;
        let mx = vcs.iter().sum::<f64>() / nf;
        let my = freqs.iter().sum::<f64>() / nf;
        let sxx: f64 = vcs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = vcs
            .iter()
            .zip(freqs)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum();
        if sxx == 0.0 {
            return Err(OracleError::InvalidConfig(
                "line fit needs at least two distinct control voltages".into(),
            ));
        }
        let kvco = sxy / sxx;
        Self::new(my - kvco * mx, kvco, powers.iter().sum::<f64>() / nf)
    }
}

/// Straight-line model of the oracle transfer curve at fixed widths, fitted
/// to `samples` evenly spaced control voltages across `vc_range`.
pub fn fit_linear_model(
    oracle: &Oracle,
    wp: f64,
    wn: f64,
    vc_range: Range,
    samples: usize,
) -> Result<LinearVcoModel, OracleError> {
    if !(vc_range.lo < vc_range.hi) || samples < 2 {
        return Err(OracleError::InvalidConfig(format!(
            "bad control-voltage sweep [{}, {}] with {samples} samples",
            vc_range.lo, vc_range.hi
        )));
    }
    let vcs: Vec<f64> = (0..samples)
        .map(|k| vc_range.lo + vc_range.width() * k as f64 / (samples - 1) as f64)
        .collect();
    let mut freqs = Vec::with_capacity(samples);
    let mut powers = Vec::with_capacity(samples);
    for &vc in &vcs {
        let (f, p) = oracle.eval(wp, wn, vc)?;
        freqs.push(f);
        powers.push(p);
    }
    LinearVcoModel::fit(&vcs, &freqs, &powers)
}
