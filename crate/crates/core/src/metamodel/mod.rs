//! Polynomial response-surface metamodels of the VCO.
//!
//! A [`PolyMetamodel`] holds one list of monomials shared by two response
//! surfaces, oscillation frequency and power, each with its own coefficient
//! vector. Models are fitted from a [`SamplePlan`] by least squares, stored
//! in a five-column text file (`p1,p2,p3,beta_f,beta_p`) and can be emitted
//! as a Verilog-AMS behavioral module that reads that file.

mod basis;
mod fit;
mod io;
mod model;
mod sampling;
mod vams;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use basis::{enumerate_basis, BasisTerm};
pub use fit::{fit, fit_with_basis, r_squared, rmse, FitReport};
pub use io::{
    format_sci, load_csv, parse_csv, read_sample_csv, sample_csv_string, save_csv, to_csv_string,
    write_sample_csv, SAMPLE_HEADER,
};
pub use model::{Evaluation, FixedWidthModel, PolyMetamodel};
pub use sampling::{grid_sample, lhs_sample, Response, SampleMethod, SamplePlan};
pub use vams::{emit_vams, VamsOptions};

/// Closed interval `[lo, hi]` of one design variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Default VCO modelling box: `W_P`, `W_N` in 5..25 µm and `V_C` rail to rail
/// of a 1.8 V supply.
pub fn vco_ranges() -> [Range; 3] {
    [
        Range::new(5e-6, 25e-6),
        Range::new(5e-6, 25e-6),
        Range::new(0.0, 1.8),
    ]
}

#[derive(Debug, Error)]
pub enum MetamodelError {
    #[error("invalid range for variable {var}: [{lo}, {hi}]")]
    InvalidRange { var: usize, lo: f64, hi: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("sample plan has no responses")]
    MissingResponses,
    #[error("underdetermined fit: {points} points for {terms} basis terms")]
    Underdetermined { points: usize, terms: usize },
    #[error("rank-deficient design matrix: rank {rank} < {terms} basis terms (condition {condition:.3e})")]
    RankDeficient {
        rank: usize,
        terms: usize,
        condition: f64,
    },
    #[error("model has no terms")]
    EmptyModel,
    #[error("non-finite input {0:?}")]
    NonFinite(Vec<f64>),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate exponent tuple {term}")]
    DuplicateTerm { line: usize, term: BasisTerm },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
