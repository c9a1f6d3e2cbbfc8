use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use serde_json::json;
use vcometa_core::costmodel::{self, CostParams};
use vcometa_core::metamodel::{
    emit_vams, fit, lhs_sample, load_csv, r_squared, read_sample_csv, rmse, sample_csv_string,
    to_csv_string, vco_ranges, MetamodelError, Range, Response, VamsOptions,
};
use vcometa_core::optimize::{
    best_of, de_run, grid_search, Candidate, DeConfig, OptError, OptProblem,
};
use vcometa_core::oracle::{Oracle, OracleConfig, OracleError};
use vcometa_core::pllsim::{compare_views, run, standard_views, PllConfig, SimError, VcoView};

use crate::manifest::{digest_file, sha256_hex, substream, Artifact, RunManifest};
use crate::{Command, Global, ViewArgs};

/// A failed command, tagged with its exit-code class.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Fit(anyhow::Error),
    Sim(anyhow::Error),
}

impl Failure {
    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Fit(e) | Failure::Sim(e) => e,
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

impl From<MetamodelError> for Failure {
    fn from(e: MetamodelError) -> Self {
        use MetamodelError::*;
        match e {
            Underdetermined { .. } | RankDeficient { .. } | MissingResponses | EmptyModel => {
                Failure::Fit(e.into())
            }
            NonFinite(_) => Failure::Sim(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InvalidConfig(_) | OracleError::Io(_) | OracleError::Json(_) => {
                Failure::Usage(e.into())
            }
            _ => Failure::Sim(e.into()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) | SimError::Io(_) | SimError::Json(_) => {
                Failure::Usage(e.into())
            }
            SimError::Oracle(e) => e.into(),
            SimError::Metamodel(e) => e.into(),
            _ => Failure::Sim(e.into()),
        }
    }
}

impl From<OptError> for Failure {
    fn from(e: OptError) -> Self {
        match e {
            OptError::Sim(e) => e.into(),
            OptError::Metamodel(e) => e.into(),
            _ => Failure::Usage(e.into()),
        }
    }
}

/// Files produced by a command, written together once it succeeds.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    stdout: String,
}

impl Outputs {
    fn file(&mut self, name: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.files.push((name.into(), body.into()));
    }
}

pub fn execute(g: &Global, cmd: &Command, argv: &[String]) -> Result<(), Failure> {
    let start = Instant::now();
    let mut digests = BTreeMap::new();
    for p in input_paths(g, cmd) {
        let d = digest_file(&p).map_err(usage)?;
        digests.insert(p.display().to_string(), d);
    }

    let out = match cmd {
        Command::Sample { n, ranges, out } => cmd_sample(g, *n as usize, ranges.as_deref(), out),
        Command::Fit {
            samples,
            degree,
            holdout,
            out,
            vams,
            module_name,
            ranges,
        } => cmd_fit(
            samples,
            *degree,
            holdout.as_deref(),
            out,
            vams.as_deref(),
            module_name,
            ranges.as_deref(),
        ),
        Command::Simulate { view, views, trace } => cmd_simulate(g, view, views, trace),
        Command::Compare { views, view_args } => cmd_compare(g, views, view_args),
        Command::Optimize {
            view,
            views,
            problem,
            de,
            grid,
            history,
        } => cmd_optimize(
            g,
            view,
            views,
            problem.as_deref(),
            de.as_deref(),
            *grid,
            history,
        ),
        Command::Cost {
            ni,
            ns,
            text,
            tsim,
            tgen,
            tini,
        } => cmd_cost(*ni, *ns, *text, *tsim, *tgen, *tini),
    }?;

    fs::create_dir_all(&g.out_dir)
        .with_context(|| format!("cannot create {}", g.out_dir.display()))
        .map_err(usage)?;
    let mut artifacts = Vec::with_capacity(out.files.len());
    for (name, body) in &out.files {
        let path = g.out_dir.join(name);
        fs::write(&path, body)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(usage)?;
        artifacts.push(Artifact {
            path: path.display().to_string(),
            sha256: sha256_hex(body),
        });
    }
    let name = command_name(cmd);
    let manifest = RunManifest {
        command: name.into(),
        args: argv.iter().skip(1).cloned().collect(),
        config_digests: digests,
        seed: g.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        artifacts,
    };
    let path = g.out_dir.join(format!("{name}.manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(usage)?;
    print!("{}", out.stdout);
    Ok(())
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Sample { .. } => "sample",
        Command::Fit { .. } => "fit",
        Command::Simulate { .. } => "simulate",
        Command::Compare { .. } => "compare",
        Command::Optimize { .. } => "optimize",
        Command::Cost { .. } => "cost",
    }
}

fn input_paths(g: &Global, cmd: &Command) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = g.config.iter().cloned().collect();
    let views =
        |v: &mut Vec<PathBuf>, a: &ViewArgs| v.extend(a.oracle.iter().chain(&a.model).cloned());
    match cmd {
        Command::Fit {
            samples, holdout, ..
        } => v.extend(std::iter::once(samples).chain(holdout).cloned()),
        Command::Simulate { views: a, .. } | Command::Compare { view_args: a, .. } => {
            views(&mut v, a)
        }
        Command::Optimize {
            views: a,
            problem,
            de,
            ..
        } => {
            views(&mut v, a);
            v.extend(problem.iter().chain(de).cloned());
        }
        Command::Sample { .. } | Command::Cost { .. } => {}
    }
    v
}

fn oracle_config(path: Option<&Path>, work_factor: Option<u32>) -> Result<OracleConfig, Failure> {
    let mut cfg = match path {
        Some(p) => OracleConfig::load(p)?,
        None => OracleConfig::default(),
    };
    if let Some(w) = work_factor {
        cfg.work_factor = w;
        cfg.validate()?;
    }
    Ok(cfg)
}

/// `lo:hi,lo:hi,lo:hi` for W_P, W_N and V_C.
fn parse_ranges(text: Option<&str>, vdd: f64) -> Result<Vec<Range>, Failure> {
    let Some(text) = text else {
        let mut r = vco_ranges();
        r[2] = Range::new(0.0, vdd);
        return Ok(r.to_vec());
    };
    let ranges = text
        .split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| anyhow!("range `{part}` is not lo:hi"))?;
            let r = Range::new(lo.trim().parse()?, hi.trim().parse()?);
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo < r.hi) {
                return Err(anyhow!("range `{part}` must satisfy lo < hi"));
            }
            Ok(r)
        })
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(usage)?;
    if ranges.len() != 3 {
        return Err(usage(anyhow!(
            "expected 3 ranges (W_P, W_N, V_C), got {}",
            ranges.len()
        )));
    }
    if ranges[0].lo <= 0.0 || ranges[1].lo <= 0.0 {
        return Err(usage(anyhow!("width ranges must be positive")));
    }
    if ranges[2].lo < 0.0 || ranges[2].hi > vdd {
        return Err(usage(anyhow!(
            "control-voltage range must lie within [0, {vdd}]"
        )));
    }
    Ok(ranges)
}

fn cmd_sample(g: &Global, n: usize, ranges: Option<&str>, name: &str) -> Result<Outputs, Failure> {
    let cfg = oracle_config(g.config.as_deref(), g.work_factor)?;
    let ranges = parse_ranges(ranges, cfg.vdd)?;
    let oracle = Oracle::new(cfg)?;
    let plan = lhs_sample(n, &ranges, substream(g.seed, "sample"))?.try_evaluate(|x| {
        oracle
            .eval(x[0], x[1], x[2])
            .map(|(freq, power)| Response { freq, power })
    })?;
    let mut out = Outputs::default();
    out.file(name, sample_csv_string(&plan)?);
    out.stdout = format!("{n} oracle samples -> {name}\n");
    Ok(out)
}

fn holdout_scores(
    model: &vcometa_core::metamodel::PolyMetamodel,
    path: &Path,
    ranges: &[Range],
) -> Result<[f64; 4], Failure> {
    let plan = read_sample_csv(path, ranges)?;
    let resp = plan
        .responses
        .as_ref()
        .ok_or_else(|| usage(anyhow!("{} has no response columns", path.display())))?;
    let mut pf = Vec::with_capacity(plan.len());
    let mut pp = Vec::with_capacity(plan.len());
    for x in &plan.points {
        let e = model.evaluate_point(x)?;
        pf.push(e.freq);
        pp.push(e.power);
    }
    let of: Vec<f64> = resp.iter().map(|r| r.freq).collect();
    let op: Vec<f64> = resp.iter().map(|r| r.power).collect();
    Ok([
        rmse(&of, &pf),
        r_squared(&of, &pf),
        rmse(&op, &pp),
        r_squared(&op, &pp),
    ])
}

fn cmd_fit(
    samples: &Path,
    degree: u32,
    holdout: Option<&Path>,
    name: &str,
    vams: Option<&str>,
    module_name: &str,
    ranges: Option<&str>,
) -> Result<Outputs, Failure> {
    let ranges = parse_ranges(ranges, vco_ranges()[2].hi)?;
    let plan = read_sample_csv(samples, &ranges)?;
    let (model, report) = fit(&plan, degree)?;
    let mut out = Outputs::default();
    let s = &mut out.stdout;
    let _ = writeln!(
        s,
        "degree {degree}: {} terms, {} samples, condition {:.3e}",
        report.terms, report.points, report.condition
    );
    let _ = writeln!(
        s,
        "train  freq RMSE {:.6e} Hz  R2 {:.6}",
        report.rmse_freq, report.r2_freq
    );
    let _ = writeln!(
        s,
        "train  power RMSE {:.6e} W  R2 {:.6}",
        report.rmse_power, report.r2_power
    );
    let mut summary = json!({ "degree": degree, "train": report });
    if let Some(h) = holdout {
        let [rf, r2f, rp, r2p] = holdout_scores(&model, h, &ranges)?;
        let _ = writeln!(s, "holdout freq RMSE {rf:.6e} Hz  R2 {r2f:.6}");
        let _ = writeln!(s, "holdout power RMSE {rp:.6e} W  R2 {r2p:.6}");
        summary["holdout"] =
            json!({ "rmse_freq": rf, "r2_freq": r2f, "rmse_power": rp, "r2_power": r2p });
    }
    out.file(name, to_csv_string(&model)?);
    if let Some(v) = vams {
        let opts = VamsOptions {
            module_name: module_name.into(),
            csv_file: name.into(),
            ..VamsOptions::default()
        };
        out.file(v, emit_vams(&model, &opts)?);
    }
    out.file(
        "fit_report.json",
        serde_json::to_string_pretty(&summary).expect("report serializes") + "\n",
    );
    Ok(out)
}

fn scenario(g: &Global) -> Result<PllConfig, Failure> {
    match &g.config {
        Some(p) => Ok(PllConfig::load(p)?),
        None => Ok(PllConfig::default()),
    }
}

/// Build the requested views at one sizing, in the requested order.
fn build_views(
    g: &Global,
    a: &ViewArgs,
    names: &[String],
    wp: f64,
    wn: f64,
) -> Result<Vec<(String, VcoView)>, Failure> {
    if names.is_empty() {
        return Err(usage(anyhow!("no views requested")));
    }
    let cfg = oracle_config(a.oracle.as_deref(), g.work_factor)?;
    let mut all = standard_views(
        &cfg,
        wp,
        wn,
        a.samples,
        a.degree,
        substream(g.seed, "metamodel"),
    )?;
    if let Some(p) = &a.model {
        let model = load_csv(p)?;
        for (n, v) in &mut all {
            if n == "metamodel" {
                *v = VcoView::Metamodel(model.clone());
            }
        }
    }
    names
        .iter()
        .map(|name| {
            all.iter()
                .find(|(n, _)| n == name.trim())
                .cloned()
                .ok_or_else(|| {
                    usage(anyhow!(
                        "unknown view `{name}` (expected oracle, linear or metamodel)"
                    ))
                })
        })
        .collect()
}

fn opt_ns(x: Option<f64>, scale: f64) -> String {
    x.map_or_else(|| "never".into(), |v| format!("{:.3}", v * scale))
}

fn cmd_simulate(g: &Global, view: &str, a: &ViewArgs, name: &str) -> Result<Outputs, Failure> {
    let mut cfg = scenario(g)?;
    let (_, v) = build_views(g, a, &[view.to_string()], cfg.wp, cfg.wn)?.remove(0);
    cfg.vco_view = v;
    let (trace, m) = run(&cfg)?;
    let mut out = Outputs::default();
    let stem = name.strip_suffix(".csv").unwrap_or(name);
    out.file(name, trace.to_csv());
    out.file(format!("{stem}_edges.csv"), trace.edges_csv());
    out.file(
        "metrics.json",
        serde_json::to_string_pretty(&m).expect("metrics serialize") + "\n",
    );
    let s = &mut out.stdout;
    let _ = writeln!(s, "view            {view}");
    let _ = writeln!(s, "lock time (ns)  {}", opt_ns(m.lock_time, 1e9));
    let _ = writeln!(s, "f locked (MHz)  {}", opt_ns(m.f_locked, 1e-6));
    let _ = writeln!(s, "P locked (uW)   {}", opt_ns(m.p_locked, 1e6));
    let _ = writeln!(s, "VCO evaluations {}", trace.vco_evals);
    Ok(out)
}

fn cmd_compare(g: &Global, names: &[String], a: &ViewArgs) -> Result<Outputs, Failure> {
    let cfg = scenario(g)?;
    let views = build_views(g, a, names, cfg.wp, cfg.wn)?;
    let report = compare_views(&cfg, &views)?;
    let mut csv = String::from("view,lock_time_s,f_locked_hz,p_locked_w,vc_rmse_v,vco_evals\n");
    let f = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:e}"));
    for r in &report.rows {
        let m = &r.metrics;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.name,
            f(m.lock_time),
            f(m.f_locked),
            f(m.p_locked),
            f(m.vc_rmse_vs_ref),
            r.vco_evals
        );
    }
    let mut out = Outputs::default();
    out.file("compare.csv", csv);
    out.stdout = report.table();
    Ok(out)
}

fn candidate_json(c: &Candidate) -> serde_json::Value {
    serde_json::to_value(c).expect("candidate serializes")
}

fn cmd_optimize(
    g: &Global,
    view: &str,
    a: &ViewArgs,
    problem: Option<&Path>,
    de: Option<&Path>,
    grid: Option<usize>,
    history: &str,
) -> Result<Outputs, Failure> {
    let problem = match problem.or(g.config.as_deref()) {
        Some(p) => OptProblem::load(p)?,
        None => OptProblem::default(),
    };
    let (wp0, wn0) = (problem.pll.wp, problem.pll.wn);
    let (_, v) = build_views(g, a, &[view.to_string()], wp0, wn0)?.remove(0);
    let problem = problem.with_view(v);
    let mut de_cfg = match de {
        Some(p) => DeConfig::from_json(&fs::read_to_string(p).map_err(usage)?)?,
        None => DeConfig::default(),
    };
    de_cfg.seed = substream(g.seed, "de");

    let baseline = problem.evaluate_at(wp0, wn0)?;
    let result = de_run(&problem, &de_cfg)?;
    let improvement = costmodel::reduction_pct(baseline.objective, result.best.objective)
        .map_err(|e| Failure::Sim(e.into()))?;

    let mut out = Outputs::default();
    out.file(history, result.history_csv());
    let mut summary = json!({
        "view": view,
        "baseline": candidate_json(&baseline),
        "best": candidate_json(&result.best),
        "feasible": result.feasible,
        "generations": result.history.len(),
        "evaluations": result.evaluations,
        "stalled": result.stalled,
        "power_reduction": improvement,
    });
    let s = &mut out.stdout;
    let _ = writeln!(
        s,
        "baseline W_P {:.3} um  W_N {:.3} um  P {:.2} uW",
        wp0 * 1e6,
        wn0 * 1e6,
        baseline.objective * 1e6
    );
    let _ = writeln!(
        s,
        "DE best  W_P {:.3} um  W_N {:.3} um  P {:.2} uW  ({}feasible, {} generations, {} evaluations)",
        result.best.x[0] * 1e6,
        result.best.x[1] * 1e6,
        result.best.objective * 1e6,
        if result.feasible { "" } else { "in" },
        result.history.len(),
        result.evaluations
    );
    let _ = writeln!(s, "power reduction {:.1} %", improvement * 100.0);
    if let Some(n) = grid {
        let cands = grid_search(&problem, n)?;
        let mut csv = String::from("wp_m,wn_m,power_w,feasible,violation\n");
        for c in &cands {
            let _ = writeln!(
                csv,
                "{:e},{:e},{:e},{},{:e}",
                c.x[0], c.x[1], c.objective, c.feasible, c.violation
            );
        }
        out.file("grid.csv", csv);
        if let Some(b) = best_of(&cands) {
            let _ = writeln!(
                out.stdout,
                "grid best W_P {:.3} um  W_N {:.3} um  P {:.2} uW",
                b.x[0] * 1e6,
                b.x[1] * 1e6,
                b.objective * 1e6
            );
            summary["grid_best"] = candidate_json(b);
        }
    }
    out.file(
        "optimize.json",
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    );
    Ok(out)
}

fn cmd_cost(
    ni: u64,
    ns: u64,
    text: f64,
    tsim: f64,
    tgen: f64,
    tini: f64,
) -> Result<Outputs, Failure> {
    let p = CostParams {
        t_gen: tgen,
        t_ini: tini,
        ..CostParams::new(ni, ns, text, tsim)
    };
    p.validate().map_err(usage)?;
    let macro_t = costmodel::t_macromodel(&p);
    let meta = costmodel::t_metamodel_flow(&p, false);
    let meta_full = costmodel::t_metamodel_flow(&p, true);
    let diff = costmodel::t_difference(&p);
    let mut out = Outputs::default();
    let s = &mut out.stdout;
    let row = |s: &mut String, label: &str, t: f64| {
        let _ = writeln!(s, "{label:<28}{t:>14.1} s{:>10.1} h", t / 3600.0);
    };
    row(s, "extract every iteration", macro_t);
    row(s, "metamodel flow", meta);
    row(s, "metamodel flow (full)", meta_full);
    row(s, "difference", diff);
    if let Ok(r) = costmodel::reduction_pct(macro_t, meta) {
        let _ = writeln!(s, "{:<28}{:>14.1} %", "reduction", r * 100.0);
    }
    let body = json!({
        "params": p,
        "t_macromodel_s": macro_t,
        "t_metamodel_s": meta,
        "t_metamodel_full_s": meta_full,
        "t_difference_s": diff,
    });
    out.file(
        "cost.json",
        serde_json::to_string_pretty(&body).expect("cost serializes") + "\n",
    );
    Ok(out)
}
