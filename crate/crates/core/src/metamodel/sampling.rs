use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MetamodelError, Range};

/// Simulated VCO response at one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub freq: f64,
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleMethod {
    Lhs,
    UniformGrid,
}

/// A design of experiments: points in the variable box and, once the
/// expensive model has been run, the response at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub ranges: Vec<Range>,
    pub points: Vec<Vec<f64>>,
    pub responses: Option<Vec<Response>>,
    pub seed: u64,
    pub method: SampleMethod,
}

impl SamplePlan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn nvars(&self) -> usize {
        self.ranges.len()
    }

    /// Attach responses by evaluating `f` at every point.
    pub fn evaluate<F>(mut self, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Response,
    {
        self.responses = Some(self.points.iter().map(|p| f(p)).collect());
        self
    }

    /// Fallible variant of [`SamplePlan::evaluate`].
    pub fn try_evaluate<F, E>(mut self, mut f: F) -> Result<Self, E>
    where
        F: FnMut(&[f64]) -> Result<Response, E>,
    {
        let rs = self
            .points
            .iter()
            .map(|p| f(p))
            .collect::<Result<Vec<_>, E>>()?;
        self.responses = Some(rs);
        Ok(self)
    }

    /// Index of the stratum each coordinate falls into when dimension `dim`
    /// is cut into `len()` equal slices.
    pub fn strata(&self, dim: usize) -> Vec<usize> {
        let n = self.points.len();
        let r = self.ranges[dim];
        self.points
            .iter()
            .map(|p| {
                let u = (p[dim] - r.lo) / r.width();
                ((u * n as f64).floor() as usize).min(n - 1)
            })
            .collect()
    }
}

fn check_ranges(ranges: &[Range]) -> Result<(), MetamodelError> {
    if ranges.is_empty() {
        return Err(MetamodelError::InvalidInput("no variables given".into()));
    }
    for (var, r) in ranges.iter().enumerate() {
        if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo >= r.hi {
            return Err(MetamodelError::InvalidRange {
                var,
                lo: r.lo,
                hi: r.hi,
            });
        }
    }
    Ok(())
}

/// Latin hypercube plan of `n` points. Every variable's range is cut into
/// `n` equal strata and each stratum receives exactly one point, placed
/// uniformly at random inside it; strata are paired across variables by
/// independent random permutations.
pub fn lhs_sample(n: usize, ranges: &[Range], seed: u64) -> Result<SamplePlan, MetamodelError> {
    check_ranges(ranges)?;
    if n == 0 {
        return Err(MetamodelError::InvalidInput(
            "a sample plan needs at least one point".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![0.0; ranges.len()]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for (j, r) in ranges.iter().enumerate() {
        perm.shuffle(&mut rng);
        for (i, &stratum) in perm.iter().enumerate() {
            let u = (stratum as f64 + rng.random::<f64>()) / n as f64;
            // keep the point inside its stratum even after rounding
            let x = r.lo + u * r.width();
            points[i][j] = x.clamp(r.lo, r.hi);
        }
    }
    Ok(SamplePlan {
        ranges: ranges.to_vec(),
        points,
        responses: None,
        seed,
        method: SampleMethod::Lhs,
    })
}

/// Full-factorial grid with `per_dim` levels on each axis, endpoints
/// included. `per_dim == 1` puts the single level at the box centre.
pub fn grid_sample(per_dim: usize, ranges: &[Range]) -> Result<SamplePlan, MetamodelError> {
    check_ranges(ranges)?;
    if per_dim == 0 {
        return Err(MetamodelError::InvalidInput(
            "a grid needs at least one level per axis".into(),
        ));
    }
    let levels: Vec<Vec<f64>> = ranges
        .iter()
        .map(|r| {
            if per_dim == 1 {
                vec![r.mid()]
            } else {
                (0..per_dim)
                    .map(|k| r.lo + r.width() * k as f64 / (per_dim - 1) as f64)
                    .collect()
            }
        })
        .collect();
    let total = per_dim.pow(ranges.len() as u32);
    let mut points = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let mut p = Vec::with_capacity(ranges.len());
        for lv in &levels {
            p.push(lv[c % per_dim]);
            c /= per_dim;
        }
        points.push(p);
    }
    Ok(SamplePlan {
        ranges: ranges.to_vec(),
        points,
        responses: None,
        seed: 0,
        method: SampleMethod::UniformGrid,
    })
}
