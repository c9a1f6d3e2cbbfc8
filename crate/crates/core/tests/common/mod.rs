//! Invariant checks shared by the property suites and the acceptance runner.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcometa_core::metamodel::{lhs_sample, Range};
use vcometa_core::optimize::{de_run, Candidate, DeConfig, FnProblem, OptError, Problem};
use vcometa_core::oracle::LinearVcoModel;
use vcometa_core::pllsim::{run, LoopFilter, PllConfig, Signal, SimTrace, VcoView};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Every coordinate of an `n`-point plan lands in a distinct one of `n`
/// equal slices of its range, and inside the range.
pub fn lhs_stratified(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.random_range(1..200);
    let d = rng.random_range(1..6);
    let ranges: Vec<Range> = (0..d)
        .map(|_| {
            let lo = rng.random_range(-10.0..10.0);
            Range::new(lo, lo + rng.random_range(1e-6..50.0))
        })
        .collect();
    let plan = lhs_sample(n, &ranges, seed).map_err(|e| e.to_string())?;
    ensure!(
        plan.len() == n,
        "seed {seed}: {} points, wanted {n}",
        plan.len()
    );
    for (j, r) in ranges.iter().enumerate() {
        let mut hit = vec![false; n];
        for p in &plan.points {
            ensure!(r.contains(p[j]), "seed {seed}: {} outside {r:?}", p[j]);
            let k = (((p[j] - r.lo) / r.width() * n as f64).floor() as usize).min(n - 1);
            ensure!(!hit[k], "seed {seed}: stratum {k} of dim {j} hit twice");
            hit[k] = true;
        }
    }
    Ok(())
}

/// A randomized but well-posed linear-VCO scenario.
pub fn random_scenario(seed: u64) -> PllConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=8u32);
    let f_in = rng.random_range(150e6..600e6);
    let target = n as f64 * f_in;
    let vdd = 1.8;
    let kvco = target * rng.random_range(0.05..0.3);
    let f0 = target - kvco * rng.random_range(0.3..1.5);
    let cp = rng.random_range(20e-6..100e-6);
    let lf = LoopFilter::design(f_in / rng.random_range(20.0..120.0), 60.0, cp, kvco, n)
        .expect("design");
    PllConfig {
        f_in,
        n,
        cp_current: cp,
        cp_transition: rng.random_range(0.0..5e-12),
        pfd_reset_delay: rng.random_range(1e-12..20e-12),
        lf,
        vdd,
        analog_dt: 10e-12,
        t_end: 200e-9,
        vco_view: VcoView::Linear(LinearVcoModel::new(f0, kvco, 5e-4).expect("valid line")),
        vc_init: rng.random_range(0.0..vdd),
        ..PllConfig::default()
    }
}

pub fn vc_clamped(trace: &SimTrace, cfg: &PllConfig) -> Check {
    for (t, v) in trace.t.iter().zip(&trace.vc) {
        ensure!(
            (0.0..=cfg.vdd).contains(v),
            "vc = {v} at {t} fs outside [0, {}]",
            cfg.vdd
        );
    }
    Ok(())
}

/// Longest stretch with `up` and `dn` both high, in femtoseconds.
pub fn max_overlap(trace: &SimTrace) -> i64 {
    let (mut up, mut dn) = (false, false);
    let mut since = None;
    let mut worst = 0;
    for e in &trace.edges {
        match e.signal {
            Signal::Up => up = e.value,
            Signal::Dn => dn = e.value,
            _ => continue,
        }
        match (up && dn, since) {
            (true, None) => since = Some(e.t),
            (false, Some(t0)) => {
                worst = worst.max(e.t - t0);
                since = None;
            }
            _ => {}
        }
    }
    if let Some(t0) = since {
        worst = worst.max(trace.t_end() - t0);
    }
    worst
}

pub fn pfd_exclusive(trace: &SimTrace, cfg: &PllConfig) -> Check {
    let limit = ((cfg.pfd_reset_delay + cfg.cp_transition) * 1e15).round() as i64;
    let worst = max_overlap(trace);
    ensure!(
        worst <= limit,
        "up and dn overlapped {worst} fs > {limit} fs"
    );
    Ok(())
}

/// At every feedback rising edge exactly `k N` output rising edges have
/// occurred; overall the counts agree within `N`.
pub fn divider_ratio(trace: &SimTrace, cfg: &PllConfig) -> Check {
    let n = cfg.n as u64;
    let (mut out, mut fb) = (0u64, 0u64);
    for e in trace.edges.iter().filter(|e| e.value) {
        match e.signal {
            Signal::Out => out += 1,
            Signal::Fb => {
                fb += 1;
                ensure!(
                    out == fb * n,
                    "fb edge {fb} after {out} output edges (N = {n})"
                );
            }
            _ => {}
        }
    }
    ensure!(
        out.abs_diff(fb * n) <= n,
        "{fb} fb edges x {n} vs {out} output edges"
    );
    Ok(())
}

pub fn pll_invariants(seed: u64) -> Check {
    let cfg = random_scenario(seed);
    let (trace, _) = run(&cfg).map_err(|e| format!("seed {seed}: {e}"))?;
    let tag = |r: Check| r.map_err(|e| format!("seed {seed}: {e}"));
    tag(vc_clamped(&trace, &cfg))?;
    tag(pfd_exclusive(&trace, &cfg))?;
    tag(divider_ratio(&trace, &cfg))?;
    Ok(())
}

pub fn pll_deterministic(seed: u64) -> Check {
    let cfg = random_scenario(seed);
    let a = run(&cfg).map_err(|e| e.to_string())?;
    let b = run(&cfg).map_err(|e| e.to_string())?;
    ensure!(a == b, "seed {seed}: two runs differ");
    Ok(())
}

/// Minimize `|x|^2` subject to `x0 + x1 >= 1`; optimum 0.5 at (0.5, 0.5).
pub struct HalfPlane {
    pub bounds: Vec<Range>,
}

impl Problem for HalfPlane {
    fn bounds(&self) -> &[Range] {
        &self.bounds
    }

    fn evaluate(&self, x: &[f64]) -> Result<Candidate, OptError> {
        let gap = (1.0 - x[0] - x[1]).max(0.0);
        Ok(Candidate {
            x: x.to_vec(),
            objective: x[0] * x[0] + x[1] * x[1],
            constraints: None,
            violation: gap,
            feasible: gap == 0.0,
        })
    }
}

fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
            .sum::<f64>()
}

/// Best objective never increases; once feasible, stays feasible; every
/// recorded best lies in the box; a rerun reproduces the history.
pub fn de_monotone(seed: u64) -> Check {
    let cfg = DeConfig {
        k: 12,
        max_generations: 25,
        stall_generations: None,
        seed,
        ..DeConfig::default()
    };
    let box2 = vec![Range::new(-5.12, 5.12), Range::new(-5.12, 5.12)];
    let half = HalfPlane {
        bounds: vec![Range::new(-3.0, 1.2), Range::new(-3.0, 1.2)],
    };
    let ras = FnProblem {
        bounds: box2,
        f: rastrigin,
    };
    let runs = [
        (de_run(&ras, &cfg), ras.bounds()),
        (de_run(&half, &cfg), half.bounds()),
    ];
    for (r, bounds) in runs {
        let r = r.map_err(|e| e.to_string())?;
        for w in r.history.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.feasible {
                ensure!(
                    b.feasible,
                    "seed {seed}: feasibility lost at generation {}",
                    b.generation
                );
                ensure!(
                    b.best_objective <= a.best_objective,
                    "seed {seed}: best rose {} -> {} at generation {}",
                    a.best_objective,
                    b.best_objective,
                    b.generation
                );
            }
        }
        for h in &r.history {
            ensure!(
                h.best_x.iter().zip(bounds).all(|(v, b)| b.contains(*v)),
                "seed {seed}: {:?} outside bounds",
                h.best_x
            );
        }
    }
    let a = de_run(&ras, &cfg).map_err(|e| e.to_string())?;
    let b = de_run(&ras, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        a.history == b.history,
        "seed {seed}: DE history not reproducible"
    );
    Ok(())
}

pub fn lhs_deterministic(seed: u64) -> Check {
    let r = [
        Range::new(0.0, 1.0),
        Range::new(-2.0, 3.0),
        Range::new(5.0, 6.0),
    ];
    let a = lhs_sample(50, &r, seed).map_err(|e| e.to_string())?;
    let b = lhs_sample(50, &r, seed).map_err(|e| e.to_string())?;
    ensure!(a == b, "seed {seed}: LHS plans differ");
    Ok(())
}

/// Run `check` over seeds `0..n`, returning the first failure.
pub fn over_seeds(n: u64, check: impl Fn(u64) -> Check + Sync + Send) -> Check {
    use rayon::prelude::*;
    (0..n)
        .into_par_iter()
        .map(check)
        .collect::<Result<Vec<()>, String>>()
        .map(|_| ())
}
