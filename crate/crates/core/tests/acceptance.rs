//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances and runtime limits are fixed here.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::Check;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcometa_core::costmodel::{reduction_pct, t_difference, CostParams};
use vcometa_core::metamodel::{
    enumerate_basis, fit, lhs_sample, load_csv, to_csv_string, vco_ranges, PolyMetamodel, Response,
    SamplePlan,
};
use vcometa_core::optimize::{best_of, de_run, grid_search, DeConfig, FnProblem, OptProblem};
use vcometa_core::oracle::{Oracle, OracleConfig};
use vcometa_core::pllsim::{compare_views, run, standard_views, PllConfig, VcoView};

type Outcome = Result<String, String>;
type Suite = (&'static str, fn(u64) -> Check);
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn published() -> Result<PolyMetamodel, String> {
    load_csv(data("vco_quadratic_100.csv")).map_err(|e| e.to_string())
}

fn basis_and_golden_file() -> Outcome {
    let want = [
        (0, 0, 0),
        (1, 0, 0),
        (2, 0, 0),
        (0, 1, 0),
        (1, 1, 0),
        (0, 2, 0),
        (0, 0, 1),
        (1, 0, 1),
        (0, 1, 1),
        (0, 0, 2),
    ];
    let got: Vec<_> = enumerate_basis(2, 3)
        .iter()
        .map(|t| (t.p1(), t.p2(), t.p3()))
        .collect();
    if got != want {
        return Err(format!("basis order {got:?}"));
    }
    let golden =
        std::fs::read_to_string(data("vco_quadratic_100.golden.csv")).map_err(|e| e.to_string())?;
    let written = to_csv_string(&published()?).map_err(|e| e.to_string())?;
    if written != golden {
        return Err("coefficient file differs from the golden bytes".into());
    }
    Ok("10 terms in file order, golden file byte-identical".into())
}

fn published_evaluation() -> Outcome {
    // exact decimal sum of the ten published terms at (20 um, 10 um, 0.5 V)
    const WANT: f64 = 2_213_449_000.0;
    let (f, _) = published()?
        .evaluate(20e-6, 10e-6, 0.5)
        .map_err(|e| e.to_string())?;
    let rel = (f - WANT).abs() / WANT;
    if rel > 1e-9 {
        return Err(format!("f = {f} Hz, relative error {rel:.2e} > 1e-9"));
    }
    Ok(format!("f = {f:.1} Hz, relative error {rel:.1e}"))
}

fn exact_recovery() -> Outcome {
    let basis = enumerate_basis(2, 3);
    let scale: [f64; 3] = [1e-5, 1e-5, 1.0];
    let mut worst: f64 = 0.0;
    for trial in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(77 + trial);
        let coef: Vec<(f64, f64)> = basis
            .iter()
            .map(|t| {
                let s: f64 = t
                    .powers()
                    .iter()
                    .zip(scale)
                    .map(|(&e, s)| s.powi(e as i32))
                    .product();
                (
                    1e9 * rng.random_range(-1.0..1.0) / s,
                    1e-3 * rng.random_range(-1.0..1.0) / s,
                )
            })
            .collect();
        let plan = lhs_sample(40, &vco_ranges(), trial)
            .map_err(|e| e.to_string())?
            .evaluate(|x| {
                let (freq, power) =
                    basis
                        .iter()
                        .zip(&coef)
                        .fold((0.0, 0.0), |(f, p), (t, (cf, cp))| {
                            let m = t.eval(x);
                            (f + cf * m, p + cp * m)
                        });
                Response { freq, power }
            });
        let (m, _) = fit(&plan, 2).map_err(|e| e.to_string())?;
        for (i, (cf, cp)) in coef.iter().enumerate() {
            worst = worst
                .max((m.beta_f()[i] - cf).abs() / cf.abs())
                .max((m.beta_p()[i] - cp).abs() / cp.abs());
        }
    }
    if worst > 1e-8 {
        return Err(format!(
            "worst coefficient relative error {worst:.2e} > 1e-8"
        ));
    }
    Ok(format!(
        "50 trials, worst coefficient relative error {worst:.1e}"
    ))
}

fn oracle_plan(oracle: &Oracle, n: usize, seed: u64) -> Result<SamplePlan, String> {
    lhs_sample(n, &vco_ranges(), seed)
        .map_err(|e| e.to_string())?
        .try_evaluate(|x| {
            oracle
                .eval(x[0], x[1], x[2])
                .map(|(freq, power)| Response { freq, power })
        })
        .map_err(|e| e.to_string())
}

/// Held-out `(rmse_f, r2_f, rmse_p, r2_p)`.
fn held_out(m: &PolyMetamodel, test: &SamplePlan) -> [f64; 4] {
    let resp = test.responses.as_ref().expect("evaluated plan");
    let score = |obs: Vec<f64>, pred: Vec<f64>| {
        let n = obs.len() as f64;
        let mean = obs.iter().sum::<f64>() / n;
        let ss_res: f64 = obs.iter().zip(&pred).map(|(o, p)| (o - p).powi(2)).sum();
        let ss_tot: f64 = obs.iter().map(|o| (o - mean).powi(2)).sum();
        ((ss_res / n).sqrt(), 1.0 - ss_res / ss_tot)
    };
    let ev: Vec<_> = test
        .points
        .iter()
        .map(|x| m.evaluate_point(x).expect("finite"))
        .collect();
    let (rf, r2f) = score(
        resp.iter().map(|r| r.freq).collect(),
        ev.iter().map(|e| e.freq).collect(),
    );
    let (rp, r2p) = score(
        resp.iter().map(|r| r.power).collect(),
        ev.iter().map(|e| e.power).collect(),
    );
    [rf, r2f, rp, r2p]
}

fn oracle_fit_quality() -> Outcome {
    let oracle = Oracle::new(OracleConfig::default()).map_err(|e| e.to_string())?;
    let test = oracle_plan(&oracle, 200, 9)?;
    let (m2, _) = fit(&oracle_plan(&oracle, 100, 7)?, 2).map_err(|e| e.to_string())?;
    let (m5, _) = fit(&oracle_plan(&oracle, 500, 8)?, 5).map_err(|e| e.to_string())?;
    let [rf2, r2f, rp2, r2p] = held_out(&m2, &test);
    let [rf5, _, rp5, _] = held_out(&m5, &test);
    let gain_f = (rf2 - rf5) / rf2;
    let gain_p = (rp2 - rp5) / rp2;
    let detail = format!(
        "degree-2 held-out R2 f {r2f:.5} P {r2p:.5}; degree-5 RMSE gain f {:.1} % P {:.1} %",
        gain_f * 100.0,
        gain_p * 100.0
    );
    if r2f < 0.99 || r2p < 0.99 {
        return Err(format!("held-out R2 below 0.99: {detail}"));
    }
    if gain_f >= 0.20 || gain_p >= 0.20 {
        return Err(format!("degree 5 improves RMSE by 20 % or more: {detail}"));
    }
    Ok(detail)
}

fn views() -> Result<Vec<(String, VcoView)>, String> {
    standard_views(&OracleConfig::default(), 20e-6, 10e-6, 100, 2, 7).map_err(|e| e.to_string())
}

fn metamodel_lock() -> Outcome {
    let cfg = PllConfig {
        vco_view: views()?.remove(2).1,
        t_end: 2e-6,
        ..PllConfig::default()
    };
    let (_, m) = run(&cfg).map_err(|e| e.to_string())?;
    let (Some(t), Some(f)) = (m.lock_time, m.f_locked) else {
        return Err("metamodel view never locked within 2 us".into());
    };
    let err = (f / 2.2e9 - 1.0).abs();
    if err > 1e-3 {
        return Err(format!("f_locked = {f} Hz, off by {:.3} %", err * 100.0));
    }
    Ok(format!(
        "lock {:.2} ns, f_locked {:.3} MHz ({:.4} % off)",
        t * 1e9,
        f * 1e-6,
        err * 100.0
    ))
}

fn view_ordering() -> Outcome {
    let r = compare_views(&PllConfig::default(), &views()?).map_err(|e| e.to_string())?;
    let lock = |i: usize| {
        r.rows[i]
            .metrics
            .lock_time
            .ok_or(format!("{} never locked", r.rows[i].name))
    };
    let rmse = |i: usize| r.rows[i].metrics.vc_rmse_vs_ref.unwrap_or(f64::NAN);
    let (t_o, t_l, t_m) = (lock(0)?, lock(1)?, lock(2)?);
    let (d_l, d_m) = ((t_l - t_o).abs(), (t_m - t_o).abs());
    let (e_l, e_m) = (rmse(1), rmse(2));
    let detail = format!(
        "|dTL| metamodel {:.2} ns vs linear {:.2} ns; V_C RMSE metamodel {:.2} mV vs linear {:.2} mV",
        d_m * 1e9,
        d_l * 1e9,
        e_m * 1e3,
        e_l * 1e3
    );
    if !(2.0 * d_m < d_l && 2.0 * e_m < e_l) {
        return Err(format!("ordering without 2x margin: {detail}"));
    }
    Ok(detail)
}

fn speedup() -> Outcome {
    let oracle_cfg = OracleConfig {
        work_factor: 4,
        mesh_nodes: 64,
        ..OracleConfig::default()
    };
    let all = standard_views(&oracle_cfg, 20e-6, 10e-6, 100, 2, 7).map_err(|e| e.to_string())?;
    let time = |view: &VcoView| -> Result<f64, String> {
        let cfg = PllConfig {
            vco_view: view.clone(),
            ..PllConfig::default()
        };
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            run(&cfg).map_err(|e| e.to_string())?;
            best = best.min(t.elapsed().as_secs_f64());
        }
        Ok(best)
    };
    let t_oracle = time(&all[0].1)?;
    let t_meta = time(&all[2].1)?;
    let ratio = t_meta / t_oracle;
    let detail = format!(
        "oracle {:.1} ms, metamodel {:.2} ms, ratio 1/{:.0}",
        t_oracle * 1e3,
        t_meta * 1e3,
        1.0 / ratio
    );
    if ratio > 0.2 {
        return Err(format!("speedup below 5x: {detail}"));
    }
    Ok(detail)
}

fn de_correctness() -> Outcome {
    let sphere = FnProblem {
        bounds: vec![vcometa_core::metamodel::Range::new(-5.0, 5.0); 2],
        f: |x: &[f64]| (x[0] - 1.3).powi(2) + (x[1] + 0.7).powi(2),
    };
    let cfg = DeConfig {
        stall_generations: None,
        ..DeConfig::default()
    };
    let s = de_run(&sphere, &cfg).map_err(|e| e.to_string())?;
    if s.history.len() != 101 || s.best.objective > 1e-3 {
        return Err(format!(
            "sphere best {:.2e} after {} records",
            s.best.objective,
            s.history.len()
        ));
    }

    let problem = OptProblem::default().with_view(views()?.remove(2).1);
    let baseline = problem
        .evaluate_at(20e-6, 10e-6)
        .map_err(|e| e.to_string())?;
    let grid = grid_search(&problem, 30).map_err(|e| e.to_string())?;
    let g = best_of(&grid).ok_or("empty grid")?;
    let r = de_run(&problem, &DeConfig::default()).map_err(|e| e.to_string())?;
    let cell = 20e-6 / 29.0;
    let off: Vec<f64> = r
        .best
        .x
        .iter()
        .zip(&g.x)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let gain = reduction_pct(baseline.objective, r.best.objective).map_err(|e| e.to_string())?;
    let monotone = r
        .history
        .windows(2)
        .all(|w| !w[0].feasible || (w[1].feasible && w[1].best_objective <= w[0].best_objective));
    let detail = format!(
        "sphere {:.1e}; DE ({:.2}, {:.2}) um vs grid ({:.2}, {:.2}) um; {:.2} -> {:.2} uW ({:.1} %)",
        s.best.objective,
        r.best.x[0] * 1e6,
        r.best.x[1] * 1e6,
        g.x[0] * 1e6,
        g.x[1] * 1e6,
        baseline.objective * 1e6,
        r.best.objective * 1e6,
        gain * 100.0
    );
    if !(r.feasible && g.feasible) {
        return Err(format!("no feasible optimum: {detail}"));
    }
    if off.iter().any(|d| *d > cell) {
        return Err(format!(
            "argmin more than one grid cell from the grid: {detail}"
        ));
    }
    if gain < 0.25 {
        return Err(format!("power improvement below 25 %: {detail}"));
    }
    if !monotone {
        return Err(format!("best-feasible history not monotone: {detail}"));
    }
    Ok(detail)
}

fn cost_model() -> Outcome {
    let d = t_difference(&CostParams::new(1200, 200, 60.0, 0.0));
    let r = reduction_pct(45.55, 5.06).map_err(|e| e.to_string())?;
    if d != 60_000.0 || (d / 3600.0 - 16.67).abs() > 0.005 {
        return Err(format!("t_difference = {d} s"));
    }
    if (r * 100.0 - 88.9).abs() > 0.1 {
        return Err(format!("reduction = {:.3} %", r * 100.0));
    }
    Ok(format!(
        "t_D = {d} s = {:.2} h; reduction {:.2} %",
        d / 3600.0,
        r * 100.0
    ))
}

fn invariant_suites() -> Outcome {
    const SEEDS: u64 = 100;
    let suites: [Suite; 5] = [
        ("LHS stratification", common::lhs_stratified),
        ("LHS determinism", common::lhs_deterministic),
        (
            "PFD exclusion, divider ratio, V_C clamp",
            common::pll_invariants,
        ),
        ("PLL determinism", common::pll_deterministic),
        ("DE monotonicity and determinism", common::de_monotone),
    ];
    for (name, f) in suites {
        common::over_seeds(SEEDS, f).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("5 suites x {SEEDS} seeds"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "basis order and coefficient file",
            Duration::from_secs(1),
            basis_and_golden_file,
        ),
        (
            "published model evaluation",
            Duration::from_secs(1),
            published_evaluation,
        ),
        (
            "exact-recovery fit",
            Duration::from_secs(10),
            exact_recovery,
        ),
        (
            "oracle fit quality",
            Duration::from_secs(30),
            oracle_fit_quality,
        ),
        (
            "metamodel-view lock",
            Duration::from_secs(60),
            metamodel_lock,
        ),
        (
            "view accuracy ordering",
            Duration::from_secs(60),
            view_ordering,
        ),
        ("metamodel speedup", Duration::from_secs(300), speedup),
        (
            "differential evolution",
            Duration::from_secs(600),
            de_correctness,
        ),
        ("cost model", Duration::from_secs(1), cost_model),
        (
            "invariant suites",
            Duration::from_secs(300),
            invariant_suites,
        ),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut outcome = f();
        let took = start.elapsed();
        if outcome.is_ok() && took > *limit {
            outcome = Err(format!(
                "took {:.1} s, limit {} s",
                took.as_secs_f64(),
                limit.as_secs()
            ));
        }
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(e) => {
                failed += 1;
                ("FAIL", e)
            }
        };
        println!(
            "criterion {:>2} {tag} {name}: {detail} [{:.2} s]",
            i + 1,
            took.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
