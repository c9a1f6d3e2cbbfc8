use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::basis::{binomial, powu};
use super::{enumerate_basis, BasisTerm, MetamodelError, PolyMetamodel, Range, SamplePlan};

/// Relative singular-value cutoff below which the design matrix is treated
/// as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Training-set diagnostics returned alongside a fitted model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub points: usize,
    pub terms: usize,
    pub rmse_freq: f64,
    pub rmse_power: f64,
    pub r2_freq: f64,
    pub r2_power: f64,
    /// Ratio of largest to smallest singular value of the scaled design matrix.
    pub condition: f64,
}

/// Ordinary least-squares fit of a full total-degree basis to both responses.
pub fn fit(plan: &SamplePlan, degree: u32) -> Result<(PolyMetamodel, FitReport), MetamodelError> {
    fit_with_basis(plan, enumerate_basis(degree, plan.nvars()))
}

/// Least-squares fit over an explicit basis. The basis must be closed under
/// lowering any exponent, so that the affine input scaling used internally
/// can be folded back into raw-variable coefficients.
pub fn fit_with_basis(
    plan: &SamplePlan,
    terms: Vec<BasisTerm>,
) -> Result<(PolyMetamodel, FitReport), MetamodelError> {
    let responses = plan
        .responses
        .as_ref()
        .ok_or(MetamodelError::MissingResponses)?;
    if responses.len() != plan.len() {
        return Err(MetamodelError::InvalidInput(format!(
            "{} points but {} responses",
            plan.len(),
            responses.len()
        )));
    }
    if terms.is_empty() {
        return Err(MetamodelError::EmptyModel);
    }
    let (m, k) = (plan.len(), terms.len());
    if m < k {
        return Err(MetamodelError::Underdetermined {
            points: m,
            terms: k,
        });
    }
    let index: HashMap<&BasisTerm, usize> = terms.iter().enumerate().map(|(i, t)| (t, i)).collect();
    check_downward_closed(&terms, &index)?;

    let ranges = &plan.ranges;
    let scaled: Vec<Vec<f64>> = plan
        .points
        .iter()
        .map(|p| p.iter().zip(ranges).map(|(x, r)| to_unit(*x, r)).collect())
        .collect();
    let a = DMatrix::from_fn(m, k, |i, j| terms[j].eval(&scaled[i]));
    let b = DMatrix::from_fn(m, 2, |i, j| {
        if j == 0 {
            responses[i].freq
        } else {
            responses[i].power
        }
    });

    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cutoff = RANK_TOL * smax;
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if rank < k {
        return Err(MetamodelError::RankDeficient {
            rank,
            terms: k,
            condition,
        });
    }
    let coef = svd
        .solve(&b, cutoff)
        .map_err(|e| MetamodelError::InvalidInput(e.to_string()))?;

    let scaled_f: Vec<f64> = coef.column(0).iter().copied().collect();
    let scaled_p: Vec<f64> = coef.column(1).iter().copied().collect();
    let beta_f = unscale(&terms, &index, &scaled_f, ranges);
    let beta_p = unscale(&terms, &index, &scaled_p, ranges);
    let model = PolyMetamodel::new(terms, beta_f, beta_p, ranges.clone(), m)?;

    let mut pred_f = Vec::with_capacity(m);
    let mut pred_p = Vec::with_capacity(m);
    for p in &plan.points {
        let e = model.evaluate_point(p)?;
        pred_f.push(e.freq);
        pred_p.push(e.power);
    }
    let obs_f: Vec<f64> = responses.iter().map(|r| r.freq).collect();
    let obs_p: Vec<f64> = responses.iter().map(|r| r.power).collect();
    let report = FitReport {
        points: m,
        terms: k,
        rmse_freq: rmse(&obs_f, &pred_f),
        rmse_power: rmse(&obs_p, &pred_p),
        r2_freq: r_squared(&obs_f, &pred_f),
        r2_power: r_squared(&obs_p, &pred_p),
        condition,
    };
    Ok((model, report))
}

fn to_unit(x: f64, r: &Range) -> f64 {
    (x - r.mid()) / (0.5 * r.width())
}

fn check_downward_closed(
    terms: &[BasisTerm],
    index: &HashMap<&BasisTerm, usize>,
) -> Result<(), MetamodelError> {
    for t in terms {
        for v in 0..t.nvars() {
            if t.powers()[v] > 0 {
                let mut lower = t.powers().to_vec();
                lower[v] -= 1;
                if !index.contains_key(&BasisTerm::new(lower)) {
                    return Err(MetamodelError::InvalidInput(format!(
                        "basis is not closed under lowering exponents (term {t})"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Convert coefficients on `z = (x - mid) / half` into coefficients on `x`
/// by binomial expansion of every scaled monomial.
fn unscale(
    terms: &[BasisTerm],
    index: &HashMap<&BasisTerm, usize>,
    scaled: &[f64],
    ranges: &[Range],
) -> Vec<f64> {
    let slope: Vec<f64> = ranges.iter().map(|r| 2.0 / r.width()).collect();
    let offset: Vec<f64> = ranges.iter().map(|r| -r.mid() * 2.0 / r.width()).collect();
    let mut raw = vec![0.0; terms.len()];
    for (t, &c) in terms.iter().zip(scaled) {
        if c == 0.0 {
            continue;
        }
        // per-variable expansion of (slope*x + offset)^p
        let factors: Vec<Vec<f64>> = t
            .powers()
            .iter()
            .enumerate()
            .map(|(v, &p)| {
                (0..=p)
                    .map(|k| {
                        binomial(p as u64, k as u64) as f64
                            * powu(slope[v], k)
                            * powu(offset[v], p - k)
                    })
                    .collect()
            })
            .collect();
        let mut ks = vec![0u32; t.nvars()];
        'expand: loop {
            let weight: f64 = ks
                .iter()
                .enumerate()
                .map(|(v, &k)| factors[v][k as usize])
                .product();
            raw[index[&BasisTerm::new(ks.clone())]] += c * weight;
            for (v, k) in ks.iter_mut().enumerate() {
                if *k < t.powers()[v] {
                    *k += 1;
                    continue 'expand;
                }
                *k = 0;
            }
            break;
        }
    }
    raw
}

pub fn rmse(obs: &[f64], pred: &[f64]) -> f64 {
    assert_eq!(obs.len(), pred.len());
    if obs.is_empty() {
        return 0.0;
    }
    let ss: f64 = obs.iter().zip(pred).map(|(o, p)| (o - p) * (o - p)).sum();
    (ss / obs.len() as f64).sqrt()
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r_squared(obs: &[f64], pred: &[f64]) -> f64 {
    assert_eq!(obs.len(), pred.len());
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    let ss_tot: f64 = obs.iter().map(|o| (o - mean) * (o - mean)).sum();
    let ss_res: f64 = obs.iter().zip(pred).map(|(o, p)| (o - p) * (o - p)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}
