use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{run, Fs, PllConfig, SimError, SimTrace, VcoView, FS_PER_S};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    /// `None` means the loop never settled before `t_end`.
    pub lock_time: Option<f64>,
    pub f_locked: Option<f64>,
    pub p_locked: Option<f64>,
    pub vc_rmse_vs_ref: Option<f64>,
}

/// Mean VCO frequency within each complete reference cycle
/// `[k T, (k+1) T)`; `None` for a cycle with no VCO rising edge.
pub fn reference_cycle_freqs(trace: &SimTrace, f_in: f64) -> Vec<Option<f64>> {
    let t_ref = FS_PER_S / f_in;
    let n = (trace.t_end() as f64 / t_ref).floor() as usize;
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for c in &trace.cycles {
        let k = (c.t as f64 / t_ref).floor() as usize;
        if k < n {
            sum[k] += c.freq;
            count[k] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
        .collect()
}

/// Lock is declared at the start of the earliest run of reference cycles that
/// stays within `tol` of `target` through the end of the simulation, provided
/// that run is at least `window` cycles long.
pub fn lock_cycle(freqs: &[Option<f64>], target: f64, tol: f64, window: usize) -> Option<usize> {
    let ok = |f: &Option<f64>| f.is_some_and(|f| ((f - target) / target).abs() <= tol);
    let start = freqs.iter().rposition(|f| !ok(f)).map_or(0, |i| i + 1);
    (freqs.len() - start >= window.max(1)).then_some(start)
}

pub(crate) fn measure(trace: &SimTrace, cfg: &PllConfig) -> SimMetrics {
    let target = cfg.n as f64 * cfg.f_in;
    let freqs = reference_cycle_freqs(trace, cfg.f_in);
    let Some(k) = lock_cycle(&freqs, target, cfg.lock_tol, cfg.lock_window) else {
        return SimMetrics {
            lock_time: None,
            f_locked: None,
            p_locked: None,
            vc_rmse_vs_ref: None,
        };
    };
    let t_ref = 1.0 / cfg.f_in;
    let lock_time = k as f64 * t_ref;
    let locked: Vec<f64> = freqs[k..].iter().flatten().copied().collect();
    let f_locked = locked.iter().sum::<f64>() / locked.len() as f64;
    let t_lock_fs = (lock_time * FS_PER_S).round() as Fs;
    let t_stop_fs = (freqs.len() as f64 * t_ref * FS_PER_S).round() as Fs;
    let powers: Vec<f64> = trace
        .cycles
        .iter()
        .filter(|c| c.t >= t_lock_fs && c.t < t_stop_fs)
        .map(|c| c.power)
        .collect();
    let p_locked = (!powers.is_empty()).then(|| powers.iter().sum::<f64>() / powers.len() as f64);
    SimMetrics {
        lock_time: Some(lock_time),
        f_locked: Some(f_locked),
        p_locked,
        vc_rmse_vs_ref: None,
    }
}

/// RMS difference of two control-voltage traces, both sampled onto a common
/// uniform grid of step `grid` seconds by zero-order hold over their shared
/// time span.
pub fn vc_rmse(a: &SimTrace, b: &SimTrace, grid: f64) -> Result<f64, SimError> {
    let (Some(&a0), Some(&b0)) = (a.t.first(), b.t.first()) else {
        return Err(SimError::TraceMismatch("empty trace".into()));
    };
    let lo = a0.max(b0);
    let hi = a.t_end().min(b.t_end());
    if hi <= lo {
        return Err(SimError::TraceMismatch(format!(
            "traces do not overlap ([{a0}, {}] fs vs [{b0}, {}] fs)",
            a.t_end(),
            b.t_end()
        )));
    }
    if !(grid > 0.0) {
        return Err(SimError::InvalidConfig(
            "resampling grid must be > 0".into(),
        ));
    }
    let step = ((grid * FS_PER_S).round() as Fs).max(1);
    let (mut ia, mut ib) = (0, 0);
    let (mut ss, mut n) = (0.0, 0usize);
    let mut t = lo;
    while t <= hi {
        while ia + 1 < a.t.len() && a.t[ia + 1] <= t {
            ia += 1;
        }
        while ib + 1 < b.t.len() && b.t[ib + 1] <= t {
            ib += 1;
        }
        let d = a.vc[ia] - b.vc[ib];
        ss += d * d;
        n += 1;
        t += step;
    }
    Ok((ss / n as f64).sqrt())
}

/// One column of a view comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewResult {
    pub name: String,
    pub metrics: SimMetrics,
    pub wall_clock_s: f64,
    pub vco_evals: u64,
    /// `|x - x_ref| / x_ref * 100` against the first view.
    pub lock_time_err_pct: Option<f64>,
    pub f_locked_err_pct: Option<f64>,
    pub p_locked_err_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<ViewResult>,
}

fn pct(x: Option<f64>, r: Option<f64>) -> Option<f64> {
    match (x, r) {
        (Some(x), Some(r)) if r != 0.0 => Some(((x - r) / r).abs() * 100.0),
        _ => None,
    }
}

/// Run the same scenario with each view. The first view is the reference
/// for percentage errors and for the control-voltage RMSE.
pub fn compare_views(
    cfg: &PllConfig,
    views: &[(String, VcoView)],
) -> Result<CompareReport, SimError> {
    if views.len() < 2 {
        return Err(SimError::InvalidConfig(
            "comparison needs at least two views".into(),
        ));
    }
    let mut runs = Vec::with_capacity(views.len());
    for (name, view) in views {
        let c = PllConfig {
            vco_view: view.clone(),
            ..cfg.clone()
        };
        let start = Instant::now();
        let (trace, metrics) = run(&c)?;
        runs.push((name.clone(), trace, metrics, start.elapsed().as_secs_f64()));
    }
    let ref_trace = runs[0].1.clone();
    let ref_m = runs[0].2;
    let mut rows = Vec::with_capacity(runs.len());
    for (name, trace, mut metrics, wall) in runs {
        metrics.vc_rmse_vs_ref = Some(vc_rmse(&trace, &ref_trace, cfg.rmse_grid)?);
        rows.push(ViewResult {
            name,
            lock_time_err_pct: pct(metrics.lock_time, ref_m.lock_time),
            f_locked_err_pct: pct(metrics.f_locked, ref_m.f_locked),
            p_locked_err_pct: pct(metrics.p_locked, ref_m.p_locked),
            metrics,
            wall_clock_s: wall,
            vco_evals: trace.vco_evals,
        });
    }
    Ok(CompareReport { rows })
}

impl CompareReport {
    /// Fixed-width text table, one column per view.
    pub fn table(&self) -> String {
        use std::fmt::Write as _;
        let ns = |x: Option<f64>, s: f64, p: usize| {
            x.map_or_else(|| "never".to_string(), |v| format!("{:.p$}", v * s))
        };
        let e = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.2} %"));
        let mut out = String::new();
        let _ = write!(out, "{:<22}", "");
        for r in &self.rows {
            let _ = write!(out, "{:>14}", r.name);
        }
        out.push('\n');
        let mut line = |label: &str, f: &dyn Fn(&ViewResult) -> String| {
            let _ = write!(out, "{label:<22}");
            for r in &self.rows {
                let _ = write!(out, "{:>14}", f(r));
            }
            out.push('\n');
        };
        line("lock time (ns)", &|r| ns(r.metrics.lock_time, 1e9, 2));
        line("  error", &|r| e(r.lock_time_err_pct));
        line("f locked (MHz)", &|r| ns(r.metrics.f_locked, 1e-6, 3));
        line("  error", &|r| e(r.f_locked_err_pct));
        line("P locked (uW)", &|r| ns(r.metrics.p_locked, 1e6, 2));
        line("  error", &|r| e(r.p_locked_err_pct));
        line("V_C RMSE (mV)", &|r| ns(r.metrics.vc_rmse_vs_ref, 1e3, 3));
        line("wall clock (ms)", &|r| {
            format!("{:.2}", r.wall_clock_s * 1e3)
        });
        out
    }
}
