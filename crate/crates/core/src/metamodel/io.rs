use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{
    vco_ranges, BasisTerm, MetamodelError, PolyMetamodel, Range, Response, SampleMethod, SamplePlan,
};

/// Header of the sample-plan CSV; the response columns are optional.
pub const SAMPLE_HEADER: &str = "wp_m,wn_m,vc_v,freq_hz,power_w";

/// C `%.15e` style: 16 significant digits and a signed exponent of at least
/// two digits (`2.113000000000000e+09`).
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.15e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Header-less `p1,p2,p3,beta_f,beta_p` text, one term per line.
pub fn to_csv_string(model: &PolyMetamodel) -> Result<String, MetamodelError> {
    if model.nvars() != 3 {
        return Err(MetamodelError::InvalidInput(format!(
            "coefficient files hold three-variable models, this one has {}",
            model.nvars()
        )));
    }
    let mut out = String::new();
    for ((t, bf), bp) in model.terms().iter().zip(model.beta_f()).zip(model.beta_p()) {
        writeln!(
            out,
            "{},{},{},{},{}",
            t.p1(),
            t.p2(),
            t.p3(),
            format_sci(*bf),
            format_sci(*bp)
        )
        .expect("write to string");
    }
    Ok(out)
}

pub fn save_csv(model: &PolyMetamodel, path: impl AsRef<Path>) -> Result<(), MetamodelError> {
    fs::write(path, to_csv_string(model)?)?;
    Ok(())
}

/// Load a coefficient file. The file carries no variable ranges, so the
/// model gets the default VCO box; use [`PolyMetamodel::with_ranges`] to
/// override.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PolyMetamodel, MetamodelError> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Parse coefficient-file text. Fields may carry surrounding whitespace and
/// any scientific notation `f64::from_str` accepts (`2.113e+009` included).
/// Blank lines are skipped.
pub fn parse_csv(text: &str) -> Result<PolyMetamodel, MetamodelError> {
    let mut terms = Vec::new();
    let mut beta_f = Vec::new();
    let mut beta_p = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(MetamodelError::Parse {
                line,
                message: format!("expected 5 columns, found {}", fields.len()),
            });
        }
        let mut powers = [0u32; 3];
        for (k, f) in fields[..3].iter().enumerate() {
            powers[k] = parse_exponent(f).ok_or_else(|| MetamodelError::Parse {
                line,
                message: format!(
                    "column {}: `{f}` is not a non-negative integer exponent",
                    k + 1
                ),
            })?;
        }
        let bf = parse_number(fields[3], line, 4)?;
        let bp = parse_number(fields[4], line, 5)?;
        let term = BasisTerm::xyz(powers[0], powers[1], powers[2]);
        if !seen.insert(term.clone()) {
            return Err(MetamodelError::DuplicateTerm { line, term });
        }
        terms.push(term);
        beta_f.push(bf);
        beta_p.push(bp);
    }
    PolyMetamodel::new(terms, beta_f, beta_p, vco_ranges().to_vec(), 0)
}

fn parse_exponent(s: &str) -> Option<u32> {
    if let Ok(v) = s.parse::<u32>() {
        return Some(v);
    }
    let v: f64 = s.parse().ok()?;
    (v.fract() == 0.0 && (0.0..=64.0).contains(&v)).then_some(v as u32)
}

fn parse_number(s: &str, line: usize, col: usize) -> Result<f64, MetamodelError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(MetamodelError::Parse {
            line,
            message: format!("column {col}: `{s}` is not a finite number"),
        }),
    }
}

/// Serialize a three-variable sample plan. Response columns are written only
/// when the plan has responses.
pub fn sample_csv_string(plan: &SamplePlan) -> Result<String, MetamodelError> {
    if plan.nvars() != 3 {
        return Err(MetamodelError::InvalidInput(
            "sample files hold (W_P, W_N, V_C) plans".into(),
        ));
    }
    let mut out = String::new();
    match &plan.responses {
        Some(rs) => {
            out.push_str(SAMPLE_HEADER);
            out.push('\n');
            for (p, r) in plan.points.iter().zip(rs) {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    format_sci(p[0]),
                    format_sci(p[1]),
                    format_sci(p[2]),
                    format_sci(r.freq),
                    format_sci(r.power)
                )
                .expect("write to string");
            }
        }
        None => {
            out.push_str("wp_m,wn_m,vc_v\n");
            for p in &plan.points {
                writeln!(
                    out,
                    "{},{},{}",
                    format_sci(p[0]),
                    format_sci(p[1]),
                    format_sci(p[2])
                )
                .expect("write to string");
            }
        }
    }
    Ok(out)
}

pub fn write_sample_csv(plan: &SamplePlan, path: impl AsRef<Path>) -> Result<(), MetamodelError> {
    fs::write(path, sample_csv_string(plan)?)?;
    Ok(())
}

/// Read a sample CSV written by [`write_sample_csv`] (or by hand). `ranges`
/// is the modelling box the plan was drawn from.
pub fn read_sample_csv(
    path: impl AsRef<Path>,
    ranges: &[Range],
) -> Result<SamplePlan, MetamodelError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(MetamodelError::Parse {
        line: 1,
        message: "empty sample file".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let with_resp = match cols.as_slice() {
        ["wp_m", "wn_m", "vc_v"] => false,
        ["wp_m", "wn_m", "vc_v", "freq_hz", "power_w"] => true,
        _ => {
            return Err(MetamodelError::Parse {
                line: 1,
                message: format!("unexpected header `{header}`"),
            })
        }
    };
    let width = if with_resp { 5 } else { 3 };
    let mut points = Vec::new();
    let mut responses = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(MetamodelError::Parse {
                line,
                message: format!("expected {width} columns, found {}", fields.len()),
            });
        }
        let vals = fields
            .iter()
            .enumerate()
            .map(|(c, f)| parse_number(f, line, c + 1))
            .collect::<Result<Vec<_>, _>>()?;
        points.push(vals[..3].to_vec());
        if with_resp {
            responses.push(Response {
                freq: vals[3],
                power: vals[4],
            });
        }
    }
    Ok(SamplePlan {
        ranges: ranges.to_vec(),
        points,
        responses: with_resp.then_some(responses),
        seed: 0,
        method: SampleMethod::Lhs,
    })
}
