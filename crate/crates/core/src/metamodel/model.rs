use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::basis::powu;
use super::{BasisTerm, MetamodelError, Range};

/// Dual response surface `f(x) = sum_i beta_i * x1^p1i * x2^p2i * x3^p3i`
/// for frequency (Hz) and power (W), sharing one set of monomials.
///
/// Coefficients are stored for raw SI inputs (widths in metres, control
/// voltage in volts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyMetamodel {
    terms: Vec<BasisTerm>,
    beta_f: Vec<f64>,
    beta_p: Vec<f64>,
    var_ranges: Vec<Range>,
    sample_count: usize,
}

/// Model output plus a flag for inputs outside the fitted box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub freq: f64,
    pub power: f64,
    pub extrapolated: bool,
}

impl PolyMetamodel {
    pub fn new(
        terms: Vec<BasisTerm>,
        beta_f: Vec<f64>,
        beta_p: Vec<f64>,
        var_ranges: Vec<Range>,
        sample_count: usize,
    ) -> Result<Self, MetamodelError> {
        if terms.is_empty() {
            return Err(MetamodelError::EmptyModel);
        }
        if beta_f.len() != terms.len() || beta_p.len() != terms.len() {
            return Err(MetamodelError::InvalidInput(format!(
                "{} terms but {} frequency and {} power coefficients",
                terms.len(),
                beta_f.len(),
                beta_p.len()
            )));
        }
        let nvars = var_ranges.len();
        if let Some(t) = terms.iter().find(|t| t.nvars() != nvars) {
            return Err(MetamodelError::InvalidInput(format!(
                "term {t} does not have {nvars} variables"
            )));
        }
        let mut seen = HashSet::new();
        for (i, t) in terms.iter().enumerate() {
            if !seen.insert(t) {
                return Err(MetamodelError::DuplicateTerm {
                    line: i + 1,
                    term: t.clone(),
                });
            }
        }
        Ok(Self {
            terms,
            beta_f,
            beta_p,
            var_ranges,
            sample_count,
        })
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    pub fn beta_f(&self) -> &[f64] {
        &self.beta_f
    }

    pub fn beta_p(&self) -> &[f64] {
        &self.beta_p
    }

    pub fn var_ranges(&self) -> &[Range] {
        &self.var_ranges
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Number of basis functions, `K`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.var_ranges.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(BasisTerm::degree).max().unwrap_or(0)
    }

    /// Same terms and ranges, different coefficients.
    pub fn with_coefficients(
        &self,
        beta_f: Vec<f64>,
        beta_p: Vec<f64>,
    ) -> Result<Self, MetamodelError> {
        Self::new(
            self.terms.clone(),
            beta_f,
            beta_p,
            self.var_ranges.clone(),
            self.sample_count,
        )
    }

    pub fn with_ranges(mut self, var_ranges: Vec<Range>) -> Result<Self, MetamodelError> {
        if var_ranges.len() != self.nvars() {
            return Err(MetamodelError::InvalidInput(format!(
                "expected {} ranges, got {}",
                self.nvars(),
                var_ranges.len()
            )));
        }
        self.var_ranges = var_ranges;
        Ok(self)
    }

    /// Evaluate at an arbitrary point. Points outside `var_ranges` are
    /// evaluated anyway and flagged.
    pub fn evaluate_point(&self, x: &[f64]) -> Result<Evaluation, MetamodelError> {
        if x.len() != self.nvars() {
            return Err(MetamodelError::InvalidInput(format!(
                "expected {} inputs, got {}",
                self.nvars(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(MetamodelError::NonFinite(x.to_vec()));
        }
        let (mut freq, mut power) = (0.0, 0.0);
        for ((t, bf), bp) in self.terms.iter().zip(&self.beta_f).zip(&self.beta_p) {
            let m = t.eval(x);
            freq += bf * m;
            power += bp * m;
        }
        let extrapolated = self.var_ranges.iter().zip(x).any(|(r, v)| !r.contains(*v));
        Ok(Evaluation {
            freq,
            power,
            extrapolated,
        })
    }

    /// `(freq, power)` at `(W_P, W_N, V_C)`.
    pub fn evaluate(&self, wp: f64, wn: f64, vc: f64) -> Result<(f64, f64), MetamodelError> {
        let e = self.evaluate_point(&[wp, wn, vc])?;
        Ok((e.freq, e.power))
    }

    /// Fold the width-dependent part of every term into per-power-of-`V_C`
    /// coefficients, leaving a cheap polynomial in the control voltage.
    pub fn at_widths(&self, wp: f64, wn: f64) -> Result<FixedWidthModel, MetamodelError> {
        if self.nvars() != 3 {
            return Err(MetamodelError::InvalidInput(
                "fixed-width view needs a (W_P, W_N, V_C) model".into(),
            ));
        }
        if !(wp.is_finite() && wn.is_finite()) {
            return Err(MetamodelError::NonFinite(vec![wp, wn]));
        }
        let max_p3 = self.terms.iter().map(BasisTerm::p3).max().unwrap_or(0) as usize;
        let mut cf = vec![0.0; max_p3 + 1];
        let mut cp = vec![0.0; max_p3 + 1];
        for ((t, bf), bp) in self.terms.iter().zip(&self.beta_f).zip(&self.beta_p) {
            let w = powu(wp, t.p1()) * powu(wn, t.p2());
            cf[t.p3() as usize] += bf * w;
            cp[t.p3() as usize] += bp * w;
        }
        Ok(FixedWidthModel { cf, cp })
    }
}

/// A [`PolyMetamodel`] with the widths bound: `freq(vc)` and `power(vc)`
/// as plain polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedWidthModel {
    cf: Vec<f64>,
    cp: Vec<f64>,
}

impl FixedWidthModel {
    #[inline]
    pub fn evaluate(&self, vc: f64) -> (f64, f64) {
        (horner(&self.cf, vc), horner(&self.cp, vc))
    }
}

#[inline]
fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}
