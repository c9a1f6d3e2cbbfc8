use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Candidate, OptError, Problem};
use crate::metamodel::{lhs_sample, Range};

/// Classic DE/rand/1/bin settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeConfig {
    /// Scale factor `F`.
    pub f: f64,
    /// Crossover rate `CR`.
    pub cr: f64,
    /// Population size `K`.
    pub k: usize,
    pub max_generations: usize,
    /// Stop once the best objective has not moved for this many
    /// generations; `None` always runs `max_generations`.
    pub stall_generations: Option<usize>,
    pub seed: u64,
    pub strategy: String,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            f: 0.8,
            cr: 0.9,
            k: 20,
            max_generations: 100,
            stall_generations: Some(20),
            seed: 1,
            strategy: "rand/1/bin".into(),
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<(), OptError> {
        let bad = |m: String| Err(OptError::InvalidConfig(m));
        if !(self.f > 0.0 && self.f <= 2.0) {
            return bad(format!("F must be in (0, 2], got {}", self.f));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return bad(format!("CR must be in [0, 1], got {}", self.cr));
        }
        if self.k < 4 {
            return bad(format!(
                "population must hold at least 4 members, got {}",
                self.k
            ));
        }
        if self.strategy != "rand/1/bin" {
            return bad(format!("unsupported strategy `{}`", self.strategy));
        }
        if self.stall_generations == Some(0) {
            return bad("stall window must be at least one generation".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, OptError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Random stream for candidate `i` in generation `g`, independent of how
/// evaluations are scheduled.
pub fn candidate_rng(seed: u64, generation: usize, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | i as u64);
    rng
}

fn clip(x: &mut [f64], bounds: &[Range]) {
    for (v, b) in x.iter_mut().zip(bounds) {
        *v = v.clamp(b.lo, b.hi);
    }
}

/// `v = x[r1] + F (x[r2] - x[r3])` with `r1, r2, r3, i` distinct, clipped to
/// `bounds`.
pub fn mutate<R: Rng>(
    pop: &[Vec<f64>],
    i: usize,
    f: f64,
    bounds: &[Range],
    rng: &mut R,
) -> Vec<f64> {
    let k = pop.len();
    assert!(k >= 4, "mutation needs three members besides the target");
    let mut pick = |taken: &[usize]| loop {
        let r = rng.random_range(0..k);
        if !taken.contains(&r) {
            return r;
        }
    };
    let r1 = pick(&[i]);
    let r2 = pick(&[i, r1]);
    let r3 = pick(&[i, r1, r2]);
    let mut v: Vec<f64> = pop[r1]
        .iter()
        .zip(&pop[r2])
        .zip(&pop[r3])
        .map(|((a, b), c)| a + f * (b - c))
        .collect();
    clip(&mut v, bounds);
    v
}

/// Binomial crossover; component `jrand` always comes from the mutant.
pub fn crossover<R: Rng>(x: &[f64], v: &[f64], cr: f64, rng: &mut R) -> Vec<f64> {
    let d = x.len();
    let jrand = rng.random_range(0..d);
    (0..d)
        .map(|j| {
            // uniform draws lie in [0, 1), so `<` gives CR = 1 -> always and
            // CR = 0 -> never, exactly as the closed comparison intends
            if rng.random::<f64>() < cr || j == jrand {
                v[j]
            } else {
                x[j]
            }
        })
        .collect()
}

/// Does the trial replace the target? A feasible target is replaced only by
/// a feasible trial with no higher objective. While the target is
/// infeasible, any feasible trial wins and otherwise the smaller total
/// constraint violation wins.
pub fn select(target: &Candidate, trial: &Candidate) -> bool {
    match (target.feasible, trial.feasible) {
        (true, true) => trial.objective <= target.objective,
        (true, false) => false,
        (false, true) => true,
        (false, false) => trial.violation <= target.violation,
    }
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    match (a.feasible, b.feasible) {
        (true, true) => a.objective < b.objective,
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
    }
}

/// Best member of a generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_objective: f64,
    pub best_x: Vec<f64>,
    pub feasible: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeResult {
    pub best: Candidate,
    pub history: Vec<GenerationRecord>,
    /// False when no feasible design was ever found; `best` is then the
    /// least-violating one.
    pub feasible: bool,
    pub evaluations: usize,
    pub stalled: bool,
}

impl DeResult {
    /// `generation,best_power_w,best_wp_m,best_wn_m,feasible`
    pub fn history_csv(&self) -> String {
        let mut out = String::from("generation,best_power_w,best_wp_m,best_wn_m,feasible\n");
        for r in &self.history {
            let x = |j: usize| r.best_x.get(j).copied().unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{}",
                r.generation,
                r.best_objective,
                x(0),
                x(1),
                r.feasible
            );
        }
        out
    }

    pub fn save_history(&self, path: impl AsRef<Path>) -> Result<(), OptError> {
        fs::write(path, self.history_csv())?;
        Ok(())
    }
}

fn evaluate_all<P: Problem>(problem: &P, xs: Vec<Vec<f64>>) -> Result<Vec<Candidate>, OptError> {
    xs.into_par_iter().map(|x| problem.evaluate(&x)).collect()
}

fn record(generation: usize, pop: &[Candidate], evaluations: usize) -> GenerationRecord {
    let best = pop
        .iter()
        .reduce(|a, b| if better(b, a) { b } else { a })
        .expect("population is not empty");
    GenerationRecord {
        generation,
        best_objective: best.objective,
        best_x: best.x.clone(),
        feasible: best.feasible,
        evaluations,
    }
}

/// Synchronous DE: all trials of a generation are built from the current
/// population, evaluated (in parallel), and then selected one-to-one.
pub fn de_run<P: Problem>(problem: &P, cfg: &DeConfig) -> Result<DeResult, OptError> {
    cfg.validate()?;
    let bounds = problem.bounds().to_vec();
    let init = lhs_sample(cfg.k, &bounds, cfg.seed)?;
    let mut pop = evaluate_all(problem, init.points)?;
    let mut evaluations = pop.len();
    let mut history = vec![record(0, &pop, evaluations)];
    let mut stall = 0;
    let mut stalled = false;

    for g in 1..=cfg.max_generations {
        let xs: Vec<Vec<f64>> = pop.iter().map(|c| c.x.clone()).collect();
        let trials: Vec<Vec<f64>> = (0..cfg.k)
            .map(|i| {
                let mut rng = candidate_rng(cfg.seed, g, i);
                let v = mutate(&xs, i, cfg.f, &bounds, &mut rng);
                crossover(&xs[i], &v, cfg.cr, &mut rng)
            })
            .collect();
        let trials = evaluate_all(problem, trials)?;
        evaluations += trials.len();
        for (target, trial) in pop.iter_mut().zip(trials) {
            if select(target, &trial) {
                *target = trial;
            }
        }
        let rec = record(g, &pop, evaluations);
        let prev = history.last().expect("history starts with generation 0");
        if rec.feasible && prev.feasible && rec.best_objective == prev.best_objective {
            stall += 1;
        } else {
            stall = 0;
        }
        history.push(rec);
        if cfg.stall_generations.is_some_and(|w| stall >= w) {
            stalled = true;
            break;
        }
    }

    let best = pop
        .iter()
        .reduce(|a, b| if better(b, a) { b } else { a })
        .expect("population is not empty")
        .clone();
    Ok(DeResult {
        feasible: best.feasible,
        best,
        history,
        evaluations,
        stalled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(d: usize) -> Vec<Range> {
        vec![Range::new(-5.0, 5.0); d]
    }

    fn pop() -> Vec<Vec<f64>> {
        (0..6)
            .map(|i| vec![i as f64 * 0.5, -(i as f64) * 0.25])
            .collect()
    }

    #[test]
    fn zero_scale_returns_base_vector() {
        let p = pop();
        let mut rng = candidate_rng(3, 1, 0);
        let v = mutate(&p, 0, 0.0, &unit(2), &mut rng);
        assert!(p[1..].contains(&v));
    }

    #[test]
    fn identical_difference_pair_returns_base_vector() {
        let p = vec![vec![1.0, 1.0]; 5];
        let mut rng = candidate_rng(3, 1, 0);
        assert_eq!(mutate(&p, 2, 0.8, &unit(2), &mut rng), vec![1.0, 1.0]);
    }

    #[test]
    fn mutant_is_clipped_to_violated_bound() {
        let p = vec![vec![4.9], vec![5.0], vec![-5.0], vec![4.0], vec![4.5]];
        let b = vec![Range::new(-5.0, 5.0)];
        for s in 0..200 {
            let mut rng = candidate_rng(s, 0, 0);
            let v = mutate(&p, 0, 2.0, &b, &mut rng);
            assert!(b[0].contains(v[0]));
        }
        // r1 = 4.9 region with a large positive difference must hit the top
        let q = vec![vec![0.0], vec![4.9], vec![5.0], vec![-5.0], vec![4.9]];
        let hit = (0..200).any(|s| mutate(&q, 0, 2.0, &b, &mut candidate_rng(s, 0, 0))[0] == 5.0);
        assert!(hit);
    }

    #[test]
    fn crossover_extremes() {
        let x = vec![0.0; 6];
        let v = vec![1.0; 6];
        for s in 0..50 {
            let mut rng = candidate_rng(s, 0, 0);
            assert_eq!(crossover(&x, &v, 1.0, &mut rng), v);
            let u = crossover(&x, &v, 0.0, &mut rng);
            assert_eq!(u.iter().filter(|&&c| c == 1.0).count(), 1);
            assert_eq!(crossover(&[0.0], &[1.0], 0.0, &mut rng), vec![1.0]);
        }
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
    fn selection_rules() {
        assert!(select(&cand(2.0, true, 0.0), &cand(1.0, true, 0.0)));
        assert!(!select(&cand(2.0, true, 0.0), &cand(1.0, false, 0.3)));
        assert!(select(&cand(2.0, true, 0.0), &cand(2.0, true, 0.0)));
        assert!(!select(&cand(1.0, true, 0.0), &cand(2.0, true, 0.0)));
        assert!(select(&cand(1.0, false, 0.5), &cand(9.0, true, 0.0)));
        assert!(select(&cand(1.0, false, 0.5), &cand(9.0, false, 0.2)));
        assert!(!select(&cand(1.0, false, 0.5), &cand(0.0, false, 0.7)));
    }

    #[test]
    fn config_bounds_are_checked() {
        assert!(DeConfig {
            k: 3,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DeConfig {
            f: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DeConfig {
            cr: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DeConfig::default().validate().is_ok());
    }
}
