//! Python bindings. Configuration goes in as JSON text (the same documents the
//! CLI reads) and structured results come back as plain dicts.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use vcometa_core::costmodel::{self, CostParams};
use vcometa_core::metamodel::{self, PolyMetamodel, Response, VamsOptions};
use vcometa_core::optimize::{de_run, DeConfig, OptProblem};
use vcometa_core::oracle::{self, OracleConfig};
use vcometa_core::pllsim::{self, PllConfig, VcoView};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn oracle_config(json: Option<&str>) -> PyResult<OracleConfig> {
    json.map_or_else(
        || Ok(OracleConfig::default()),
        |s| OracleConfig::from_json(s).map_err(err),
    )
}

fn scenario(json: Option<&str>) -> PyResult<PllConfig> {
    json.map_or_else(
        || Ok(PllConfig::default()),
        |s| PllConfig::from_json(s).map_err(err),
    )
}

/// Polynomial frequency/power model of the VCO over `(wp, wn, vc)`.
#[pyclass(name = "Metamodel", module = "vcometa", frozen)]
struct PyMetamodel {
    inner: PolyMetamodel,
}

#[pymethods]
impl PyMetamodel {
    /// Parse a header-less `p1,p2,p3,beta_f,beta_p` coefficient file.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        metamodel::parse_csv(text)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        metamodel::load_csv(path)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    /// `(frequency_hz, power_w)` at one operating point.
    fn evaluate(&self, wp: f64, wn: f64, vc: f64) -> PyResult<(f64, f64)> {
        self.inner.evaluate(wp, wn, vc).map_err(err)
    }

    fn to_csv(&self) -> PyResult<String> {
        metamodel::to_csv_string(&self.inner).map_err(err)
    }

    #[pyo3(signature = (module_name = "vco_metamodel", csv_file = "metamodel.csv"))]
    fn to_vams(&self, module_name: &str, csv_file: &str) -> PyResult<String> {
        let opts = VamsOptions {
            module_name: module_name.into(),
            csv_file: csv_file.into(),
            ..VamsOptions::default()
        };
        metamodel::emit_vams(&self.inner, &opts).map_err(err)
    }

    #[getter]
    fn degree(&self) -> u32 {
        self.inner.degree()
    }

    /// Exponent tuples in coefficient order.
    #[getter]
    fn terms(&self) -> Vec<Vec<u32>> {
        self.inner
            .terms()
            .iter()
            .map(|t| t.powers().to_vec())
            .collect()
    }

    #[getter]
    fn beta_f(&self) -> Vec<f64> {
        self.inner.beta_f().to_vec()
    }

    #[getter]
    fn beta_p(&self) -> Vec<f64> {
        self.inner.beta_p().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Metamodel(degree={}, terms={})",
            self.inner.degree(),
            self.inner.len()
        )
    }
}

/// Layout-aware reference VCO: the slow model the metamodel stands in for.
#[pyclass(name = "Oracle", module = "vcometa", frozen)]
struct PyOracle {
    inner: oracle::Oracle,
}

#[pymethods]
impl PyOracle {
    #[new]
    #[pyo3(signature = (config_json = None))]
    fn new(config_json: Option<&str>) -> PyResult<Self> {
        let inner = oracle::Oracle::new(oracle_config(config_json)?).map_err(err)?;
        Ok(Self { inner })
    }

    fn eval(&self, wp: f64, wn: f64, vc: f64) -> PyResult<(f64, f64)> {
        self.inner.eval(wp, wn, vc).map_err(err)
    }

    fn config_json(&self) -> String {
        self.inner.config().to_json()
    }
}

/// Latin-hypercube points over the default `(wp, wn, vc)` box.
#[pyfunction]
#[pyo3(signature = (n, seed = 1))]
fn lhs(n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(metamodel::lhs_sample(n, &metamodel::vco_ranges(), seed)
        .map_err(err)?
        .points)
}

/// Least-squares fit to given points and responses; returns `(model, report)`.
#[pyfunction]
fn fit<'py>(
    py: Python<'py>,
    points: Vec<Vec<f64>>,
    freq: Vec<f64>,
    power: Vec<f64>,
    degree: u32,
) -> PyResult<(PyMetamodel, Bound<'py, PyAny>)> {
    if points.len() != freq.len() || points.len() != power.len() {
        return Err(PyValueError::new_err(
            "points, freq and power differ in length",
        ));
    }
    let mut plan = metamodel::lhs_sample(1, &metamodel::vco_ranges(), 0).map_err(err)?;
    plan.points = points;
    plan.responses = Some(
        freq.into_iter()
            .zip(power)
            .map(|(freq, power)| Response { freq, power })
            .collect(),
    );
    let (inner, report) = metamodel::fit(&plan, degree).map_err(err)?;
    Ok((PyMetamodel { inner }, to_py(py, &report)?))
}

/// Sample the oracle at `n` LHS points and fit a degree-`degree` model.
#[pyfunction]
#[pyo3(signature = (n, degree = 2, seed = 7, config_json = None))]
fn fit_oracle<'py>(
    py: Python<'py>,
    n: usize,
    degree: u32,
    seed: u64,
    config_json: Option<&str>,
) -> PyResult<(PyMetamodel, Bound<'py, PyAny>)> {
    let oracle = oracle::Oracle::new(oracle_config(config_json)?).map_err(err)?;
    let plan = metamodel::lhs_sample(n, &metamodel::vco_ranges(), seed)
        .map_err(err)?
        .try_evaluate(|x| {
            oracle
                .eval(x[0], x[1], x[2])
                .map(|(freq, power)| Response { freq, power })
        })
        .map_err(err)?;
    let (inner, report) = py.detach(|| metamodel::fit(&plan, degree)).map_err(err)?;
    Ok((PyMetamodel { inner }, to_py(py, &report)?))
}

fn pick_view(
    view: &str,
    model: Option<&PyMetamodel>,
    oracle_json: Option<&str>,
    cfg: &PllConfig,
) -> PyResult<VcoView> {
    if let Some(m) = model {
        return Ok(VcoView::Metamodel(m.inner.clone()));
    }
    let views = pllsim::standard_views(&oracle_config(oracle_json)?, cfg.wp, cfg.wn, 100, 2, 7)
        .map_err(err)?;
    views
        .into_iter()
        .find(|(name, _)| name == view)
        .map(|(_, v)| v)
        .ok_or_else(|| {
            PyValueError::new_err(format!(
                "unknown view {view:?}; expected oracle, linear or metamodel"
            ))
        })
}

/// Run the behavioural PLL; returns `(metrics, trace)` where `trace` holds
/// `t` (s) and `vc` (V) lists.
#[pyfunction]
#[pyo3(signature = (view = "metamodel", model = None, scenario_json = None, oracle_json = None))]
fn simulate<'py>(
    py: Python<'py>,
    view: &str,
    model: Option<&PyMetamodel>,
    scenario_json: Option<&str>,
    oracle_json: Option<&str>,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let mut cfg = scenario(scenario_json)?;
    cfg.vco_view = pick_view(view, model, oracle_json, &cfg)?;
    let (trace, metrics) = py.detach(|| pllsim::run(&cfg)).map_err(err)?;
    let t: Vec<f64> = trace.t.iter().map(|&t| t as f64 * 1e-15).collect();
    let trace = serde_json::json!({ "t": t, "vc": trace.vc });
    Ok((to_py(py, &metrics)?, to_py(py, &trace)?))
}

/// Oracle, linear and metamodel views on one scenario, oracle first.
#[pyfunction]
#[pyo3(signature = (scenario_json = None, oracle_json = None, samples = 100, degree = 2, seed = 7))]
fn compare<'py>(
    py: Python<'py>,
    scenario_json: Option<&str>,
    oracle_json: Option<&str>,
    samples: usize,
    degree: u32,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = scenario(scenario_json)?;
    let ocfg = oracle_config(oracle_json)?;
    let report = py
        .detach(|| {
            let views = pllsim::standard_views(&ocfg, cfg.wp, cfg.wn, samples, degree, seed)?;
            pllsim::compare_views(&cfg, &views)
        })
        .map_err(err)?;
    to_py(py, &report.rows)
}

/// Differential-evolution sizing of `(wp, wn)` for minimum locked power.
#[pyfunction]
#[pyo3(signature = (view = "metamodel", model = None, problem_json = None, de_json = None, oracle_json = None))]
fn optimize<'py>(
    py: Python<'py>,
    view: &str,
    model: Option<&PyMetamodel>,
    problem_json: Option<&str>,
    de_json: Option<&str>,
    oracle_json: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let problem = problem_json
        .map_or_else(|| Ok(OptProblem::default()), OptProblem::from_json)
        .map_err(err)?;
    let de = de_json
        .map_or_else(|| Ok(DeConfig::default()), DeConfig::from_json)
        .map_err(err)?;
    let problem = {
        let v = pick_view(view, model, oracle_json, &problem.pll)?;
        problem.with_view(v)
    };
    let result = py.detach(|| de_run(&problem, &de)).map_err(err)?;
    to_py(py, &result)
}

/// Run-time accounting for the macromodel and metamodel flows (seconds).
#[pyfunction]
#[pyo3(signature = (n_i, n_s, t_ext, t_sim, t_gen = 0.0, t_ini = 0.0))]
fn cost<'py>(
    py: Python<'py>,
    n_i: u64,
    n_s: u64,
    t_ext: f64,
    t_sim: f64,
    t_gen: f64,
    t_ini: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = CostParams {
        t_gen,
        t_ini,
        ..CostParams::new(n_i, n_s, t_ext, t_sim)
    };
    p.validate().map_err(err)?;
    let out = serde_json::json!({
        "t_macromodel": costmodel::t_macromodel(&p),
        "t_metamodel": costmodel::t_metamodel_flow(&p, false),
        "t_metamodel_full": costmodel::t_metamodel_flow(&p, true),
        "t_difference": costmodel::t_difference(&p),
    });
    to_py(py, &out)
}

#[pyfunction]
fn reduction_pct(baseline: f64, improved: f64) -> PyResult<f64> {
    costmodel::reduction_pct(baseline, improved).map_err(err)
}

#[pymodule]
fn vcometa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetamodel>()?;
    m.add_class::<PyOracle>()?;
    m.add_function(wrap_pyfunction!(lhs, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(fit_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(cost, m)?)?;
    m.add_function(wrap_pyfunction!(reduction_pct, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
