mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcometa_core::metamodel::Range;
use vcometa_core::optimize::{
    best_of, candidate_rng, crossover, de_run, grid_search, mutate, select, Candidate, DeConfig,
    FnProblem, OptProblem,
};
use vcometa_core::oracle::{LinearVcoModel, OracleConfig};
use vcometa_core::pllsim::{standard_views, VcoView};

const C: [f64; 2] = [1.3, -0.7];

fn sphere(x: &[f64]) -> f64 {
    x.iter().zip(C).map(|(a, c)| (a - c).powi(2)).sum()
}

#[test]
fn sphere_converges_to_the_grid_optimum() {
    // brute-force reference on a 0.01 lattice
    let mut best = (f64::INFINITY, [0.0; 2]);
    for i in 0..=1000 {
        for j in 0..=1000 {
            let x = [-5.0 + i as f64 * 0.01, -5.0 + j as f64 * 0.01];
            let f = sphere(&x);
            if f < best.0 {
                best = (f, x);
            }
        }
    }
    assert!((best.1[0] - C[0]).abs() < 1e-9 && (best.1[1] - C[1]).abs() < 1e-9);

    let problem = FnProblem {
        bounds: vec![Range::new(-5.0, 5.0); 2],
        f: sphere,
    };
    for seed in 0..10 {
        let cfg = DeConfig {
            seed,
            stall_generations: None,
            ..DeConfig::default()
        };
        let r = de_run(&problem, &cfg).unwrap();
        assert_eq!(r.history.len(), 101);
        assert!(
            r.best.objective - best.0 <= 1e-3,
            "seed {seed}: {}",
            r.best.objective
        );
        assert_eq!(r.evaluations, 20 * 101);
    }
}

#[test]
fn histories_are_monotone_and_reproducible() {
    common::over_seeds(100, common::de_monotone).unwrap();
}

fn cand(objective: f64, feasible: bool, violation: f64) -> Candidate {
    Candidate {
        x: vec![0.0],
        objective,
        constraints: None,
        violation,
        feasible,
    }
}

#[test]
fn selection_is_feasibility_first() {
    assert!(select(&cand(2.0, true, 0.0), &cand(1.0, true, 0.0)));
    assert!(select(&cand(2.0, true, 0.0), &cand(2.0, true, 0.0)));
    assert!(!select(&cand(2.0, true, 0.0), &cand(3.0, true, 0.0)));
    assert!(!select(&cand(2.0, true, 0.0), &cand(0.5, false, 0.1)));
    assert!(select(&cand(0.5, false, 0.1), &cand(9.0, true, 0.0)));
    assert!(select(&cand(0.5, false, 0.3), &cand(9.0, false, 0.1)));
    assert!(!select(&cand(0.5, false, 0.1), &cand(0.1, false, 0.3)));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let target = cand(rng.random(), true, 0.0);
        let trial = cand(rng.random(), false, rng.random_range(1e-9..1.0));
        assert!(!select(&target, &trial));
    }
}

#[test]
fn crossover_edge_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..200 {
        let d = rng.random_range(1..8);
        let x: Vec<f64> = (0..d).map(|j| j as f64).collect();
        let v: Vec<f64> = (0..d).map(|j| -1.0 - j as f64).collect();
        let mut r = candidate_rng(seed, 1, 0);
        assert_eq!(crossover(&x, &v, 1.0, &mut r), v);
        let u = crossover(&x, &v, 0.0, &mut r);
        assert_eq!(u.iter().zip(&x).filter(|(a, b)| a != b).count(), 1);
        let u = crossover(&x, &v, 0.5, &mut r);
        assert!(u.iter().zip(&v).any(|(a, b)| a == b));
        assert_eq!(crossover(&x[..1], &v[..1], 0.0, &mut r), v[..1]);
    }
}

#[test]
fn mutation_cases() {
    let bounds = vec![Range::new(0.0, 1.0); 2];
    let same = vec![vec![0.3, 0.4]; 5];
    let mut r = candidate_rng(1, 1, 0);
    assert_eq!(mutate(&same, 0, 0.8, &bounds, &mut r), vec![0.3, 0.4]);

    // every difference vector pushes past the upper bound of x0 and below
    // the lower bound of x1
    let pop = vec![
        vec![0.9, 0.1],
        vec![0.95, 0.05],
        vec![0.0, 1.0],
        vec![1.0, 0.0],
        vec![0.92, 0.08],
    ];
    for seed in 0..100 {
        let mut r = candidate_rng(seed, 2, 0);
        let v = mutate(&pop, 2, 2.0, &bounds, &mut r);
        assert!(v.iter().zip(&bounds).all(|(x, b)| b.contains(*x)));
    }
    let spread = vec![
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
    ];
    let clipped = (0..200).any(|seed| {
        let mut r = candidate_rng(seed, 3, 0);
        let v = mutate(&spread, 0, 2.0, &bounds, &mut r);
        v == vec![1.0, 0.0] || v == vec![0.0, 1.0]
    });
    assert!(clipped);
}

#[test]
fn infeasible_problem_returns_least_violation() {
    let p = common::HalfPlane {
        bounds: vec![Range::new(-3.0, 0.2), Range::new(-3.0, 0.3)],
    };
    let r = de_run(
        &p,
        &DeConfig {
            max_generations: 60,
            ..DeConfig::default()
        },
    )
    .unwrap();
    assert!(!r.feasible && !r.best.feasible);
    // the closest the box gets to x0 + x1 = 1 is its corner (0.2, 0.3)
    assert!(
        (r.best.violation - 0.5).abs() < 1e-3,
        "{}",
        r.best.violation
    );
}

#[test]
fn stall_window_ends_the_run_early() {
    let problem = FnProblem {
        bounds: vec![Range::new(-1.0, 1.0)],
        f: |x: &[f64]| x[0].abs().max(0.5),
    };
    let r = de_run(&problem, &DeConfig::default()).unwrap();
    assert!(r.stalled && r.history.len() < 101);
    let last = &r.history[r.history.len() - 21..];
    assert!(last.iter().all(|h| h.best_objective == 0.5));
}

#[test]
fn pll_constraints_are_measured() {
    let base = OptProblem::default();
    let c = base.evaluate_at(20e-6, 10e-6).unwrap();
    let k = c.constraints.unwrap();
    assert!(c.feasible && c.violation == 0.0);
    assert!(k.f_min <= 2180e6 && k.f_max >= 2300e6, "{k:?}");
    assert!(k.lock_time.unwrap() <= 400e-9);

    // a VCO that cannot reach the target never locks and is infeasible
    let slow = base.clone().with_view(VcoView::Linear(
        LinearVcoModel::new(1.5e9, 1e8, 1e-3).unwrap(),
    ));
    let c = slow.evaluate_at(20e-6, 10e-6).unwrap();
    assert!(!c.feasible && c.violation > 0.0);
    assert!(c.constraints.unwrap().lock_time.is_none());

    let bad = OptProblem {
        f_min_req: 3e9,
        ..OptProblem::default()
    };
    assert!(bad.validate().is_err());
    assert!(OptProblem::from_json(r#"{"lock_time_limit": 3e-7}"#).is_ok());
}

#[test]
fn grid_is_row_major_and_complete() {
    let problem = FnProblem {
        bounds: vec![Range::new(0.0, 1.0), Range::new(10.0, 20.0)],
        f: |x: &[f64]| x[0] + x[1],
    };
    let g = grid_search(&problem, 3).unwrap();
    assert_eq!(g.len(), 9);
    assert_eq!(g[1].x, vec![0.0, 15.0]);
    assert_eq!(g[3].x, vec![0.5, 10.0]);
    assert_eq!(best_of(&g).unwrap().x, vec![0.0, 10.0]);
}

/// Both views steer DE to the same design, to within one cell of a 30 x 30
/// grid over the bounds.
#[test]
fn metamodel_and_oracle_agree_on_the_optimum() {
    let views = standard_views(&OracleConfig::default(), 20e-6, 10e-6, 100, 2, 7).unwrap();
    let run = |view: &VcoView| {
        let p = OptProblem::default().with_view(view.clone());
        de_run(&p, &DeConfig::default()).unwrap()
    };
    let oracle = run(&views[0].1);
    let meta = run(&views[2].1);
    assert!(oracle.feasible && meta.feasible);
    let cell = 20e-6 / 29.0;
    for j in 0..2 {
        let d = (oracle.best.x[j] - meta.best.x[j]).abs();
        assert!(
            d <= cell,
            "coordinate {j}: {:?} vs {:?}",
            oracle.best.x,
            meta.best.x
        );
    }
}
