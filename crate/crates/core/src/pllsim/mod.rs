//! Behavioural charge-pump PLL: PFD, charge pump, passive loop filter, VCO
//! and feedback divider.
//!
//! Digital events (reference edges, VCO toggles, divider edges, PFD reset)
//! live on an integer femtosecond time base and are processed in time order
//! from a priority queue. The loop filter is integrated by backward Euler on
//! a fixed `analog_dt` grid, with extra breakpoints at every digital event so
//! pump pulses are charged exactly.

mod filter;
mod metrics;
mod pfd;
mod trace;
mod view;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{cp_lf_step, AnalogState, LoopFilter};
pub use metrics::{
    compare_views, lock_cycle, reference_cycle_freqs, vc_rmse, CompareReport, SimMetrics,
    ViewResult,
};
pub use pfd::{pfd_step, PfdState};
pub use trace::{Edge, Signal, SimTrace, VcoCycle};
pub use view::{standard_views, vco_step, VcoEvaluator, VcoView};

use crate::metamodel::MetamodelError;
use crate::oracle::{OracleConfig, OracleError};

/// Simulation time in femtoseconds.
pub type Fs = i64;
pub const FS_PER_S: f64 = 1e15;

fn to_fs(t: f64) -> Fs {
    (t * FS_PER_S).round() as Fs
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid PLL configuration: {0}")]
    InvalidConfig(String),
    #[error("{view} VCO produced frequency {freq} Hz at vc = {vc} V")]
    BadVco {
        view: &'static str,
        vc: f64,
        freq: f64,
    },
    #[error("trace mismatch: {0}")]
    TraceMismatch(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Metamodel(#[from] MetamodelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Full scenario description. All times in seconds, widths in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PllConfig {
    pub f_in: f64,
    pub n: u32,
    pub cp_current: f64,
    pub cp_transition: f64,
    pub pfd_reset_delay: f64,
    pub lf: LoopFilter,
    pub vdd: f64,
    pub analog_dt: f64,
    pub t_end: f64,
    pub vco_view: VcoView,
    pub wp: f64,
    pub wn: f64,
    pub vc_init: f64,
    pub power_window_cycles: usize,
    pub lock_tol: f64,
    pub lock_window: usize,
    /// Resampling step for control-voltage RMSE.
    pub rmse_grid: f64,
}

/// Default filter: 5 MHz crossover (about `f_in / 110`) and 60 degrees of
/// phase margin for a 50 uA pump, N = 4 and a 125 MHz/V VCO.
pub const DEFAULT_LOOP_BANDWIDTH: f64 = 5e6;

impl Default for PllConfig {
    fn default() -> Self {
        let lf = LoopFilter::design(DEFAULT_LOOP_BANDWIDTH, 60.0, 50e-6, 125e6, 4)
            .expect("default filter design is valid");
        Self {
            f_in: 550e6,
            n: 4,
            cp_current: 50e-6,
            cp_transition: 2e-12,
            pfd_reset_delay: 10e-12,
            lf,
            vdd: 1.8,
            analog_dt: 10e-12,
            t_end: 500e-9,
            vco_view: VcoView::Oracle(OracleConfig::default()),
            wp: 20e-6,
            wn: 10e-6,
            vc_init: 0.0,
            power_window_cycles: 50,
            lock_tol: 1e-3,
            lock_window: 20,
            rmse_grid: 0.1e-9,
        }
    }
}

impl PllConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        self.lf.validate()?;
        if self.n < 1 {
            return bad("divider ratio must be >= 1".into());
        }
        for (name, v) in [
            ("f_in", self.f_in),
            ("cp_current", self.cp_current),
            ("vdd", self.vdd),
            ("analog_dt", self.analog_dt),
            ("t_end", self.t_end),
            ("wp", self.wp),
            ("wn", self.wn),
            ("lock_tol", self.lock_tol),
            ("rmse_grid", self.rmse_grid),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [
            ("cp_transition", self.cp_transition),
            ("pfd_reset_delay", self.pfd_reset_delay),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if to_fs(self.analog_dt) < 1 {
            return bad("analog_dt is below the 1 fs time resolution".into());
        }
        if !(0.0..=self.vdd).contains(&self.vc_init) {
            return bad(format!("vc_init {} outside [0, vdd]", self.vc_init));
        }
        if self.power_window_cycles == 0 {
            return bad("power_window_cycles must be >= 1".into());
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    PfdReset,
    Reference,
    VcoToggle,
    AnalogTick,
}

struct Queue(BinaryHeap<Reverse<(Fs, Event)>>);

impl Queue {
    fn push(&mut self, t: Fs, e: Event) {
        self.0.push(Reverse((t, e)));
    }

    fn peek_time(&self) -> Option<Fs> {
        self.0.peek().map(|Reverse((t, _))| *t)
    }

    fn pop_at(&mut self, t: Fs) -> Option<Event> {
        match self.0.peek() {
            Some(Reverse((te, _))) if *te == t => self.0.pop().map(|Reverse((_, e))| e),
            _ => None,
        }
    }
}

/// Simulate `[0, t_end]` and measure the run.
pub fn run(cfg: &PllConfig) -> Result<(SimTrace, SimMetrics), SimError> {
    cfg.validate()?;
    let vco = VcoEvaluator::new(&cfg.vco_view, cfg.wp, cfg.wn)?;
    let t_end = to_fs(cfg.t_end);
    let dt = to_fs(cfg.analog_dt);
    let reset_delay = to_fs(cfg.pfd_reset_delay);
    let t_ref = FS_PER_S / cfg.f_in;
    let dt_s = |a: Fs, b: Fs| (b - a) as f64 / FS_PER_S;

    let mut analog = AnalogState::at_rest(cfg.vc_init);
    let mut pfd = PfdState::default();
    let mut out = false;
    let mut fb = false;
    let mut rises: u64 = 0;
    let mut last_rise: Option<Fs> = None;
    let mut ref_count: u64 = 0;
    let mut window = (0.0, 0usize);

    let mut trace = SimTrace {
        t: vec![0],
        vc: vec![analog.vc],
        cycles: Vec::new(),
        power_windows: Vec::new(),
        edges: Vec::new(),
        vco_evals: 0,
    };

    let (f0, p0) = vco.eval(analog.vc)?;
    trace.vco_evals += 1;
    let mut power_now = p0;
    let half = |f: f64| ((0.5 * FS_PER_S / f).round() as Fs).max(1);

    let mut q = Queue(BinaryHeap::new());
    q.push(0, Event::Reference);
    q.push(half(f0), Event::VcoToggle);
    q.push(dt, Event::AnalogTick);

    let mut t_now: Fs = 0;
    while let Some(t) = q.peek_time() {
        if t > t_end {
            break;
        }
        analog.advance(&cfg.lf, dt_s(t_now, t), cfg.vdd);
        t_now = t;

        let (mut ref_edge, mut fb_edge, mut reset_due) = (false, false, false);
        while let Some(ev) = q.pop_at(t) {
            match ev {
                Event::AnalogTick => {
                    trace.t.push(t);
                    trace.vc.push(analog.vc);
                    q.push(t + dt, Event::AnalogTick);
                }
                Event::Reference => {
                    ref_edge = true;
                    trace.edges.push(Edge {
                        t,
                        signal: Signal::Ref,
                        value: true,
                    });
                    ref_count += 1;
                    q.push((ref_count as f64 * t_ref).round() as Fs, Event::Reference);
                }
                Event::PfdReset => reset_due = true,
                Event::VcoToggle => {
                    out = !out;
                    trace.edges.push(Edge {
                        t,
                        signal: Signal::Out,
                        value: out,
                    });
                    let (f, p) = vco.eval(analog.vc)?;
                    trace.vco_evals += 1;
                    if out {
                        rises += 1;
                        if let Some(prev) = last_rise {
                            trace.cycles.push(VcoCycle {
                                t,
                                freq: FS_PER_S / (t - prev) as f64,
                                power: power_now,
                            });
                            window.0 += power_now;
                            window.1 += 1;
                            if window.1 == cfg.power_window_cycles {
                                trace.power_windows.push((t, window.0 / window.1 as f64));
                                window = (0.0, 0);
                            }
                        }
                        last_rise = Some(t);
                        power_now = p;
                        let phase = rises % cfg.n as u64;
                        if phase == 0 {
                            fb = true;
                            fb_edge = true;
                            trace.edges.push(Edge {
                                t,
                                signal: Signal::Fb,
                                value: true,
                            });
                        } else if cfg.n > 1 && phase == (cfg.n / 2) as u64 && fb {
                            fb = false;
                            trace.edges.push(Edge {
                                t,
                                signal: Signal::Fb,
                                value: false,
                            });
                        }
                    } else if cfg.n == 1 && fb {
                        fb = false;
                        trace.edges.push(Edge {
                            t,
                            signal: Signal::Fb,
                            value: false,
                        });
                    }
                    q.push(t + half(f), Event::VcoToggle);
                }
            }
        }

        if ref_edge || fb_edge || reset_due {
            let before = pfd;
            pfd = pfd_step(pfd, ref_edge, fb_edge, t, reset_delay);
            if pfd.up != before.up {
                trace.edges.push(Edge {
                    t,
                    signal: Signal::Up,
                    value: pfd.up,
                });
            }
            if pfd.dn != before.dn {
                trace.edges.push(Edge {
                    t,
                    signal: Signal::Dn,
                    value: pfd.dn,
                });
            }
            if let (Some(r), None) = (pfd.reset_at, before.reset_at) {
                q.push(r, Event::PfdReset);
            }
        }
        let target = analog.pump_target(pfd.up, pfd.dn, cfg.cp_current, cfg.vdd);
        analog.set_target(target, cfg.cp_transition);
    }
    if t_now < t_end {
        analog.advance(&cfg.lf, dt_s(t_now, t_end), cfg.vdd);
        trace.t.push(t_end);
        trace.vc.push(analog.vc);
    }

    let metrics = metrics::measure(&trace, cfg);
    Ok((trace, metrics))
}
