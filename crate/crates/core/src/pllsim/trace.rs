use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Fs, SimError, FS_PER_S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Ref,
    Up,
    Dn,
    Out,
    Fb,
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Signal::Ref => "ref",
            Signal::Up => "up",
            Signal::Dn => "dn",
            Signal::Out => "out",
            Signal::Fb => "fb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub t: Fs,
    pub signal: Signal,
    pub value: bool,
}

/// One VCO output period, closed by the rising edge at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VcoCycle {
    pub t: Fs,
    /// Measured from the spacing of consecutive rising edges.
    pub freq: f64,
    /// Model power evaluated at the rising edge.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    /// Analog grid in femtoseconds and the control voltage on it.
    pub t: Vec<Fs>,
    pub vc: Vec<f64>,
    pub cycles: Vec<VcoCycle>,
    /// Power averaged over consecutive windows of VCO cycles `(t_end, W)`.
    pub power_windows: Vec<(Fs, f64)>,
    pub edges: Vec<Edge>,
    pub vco_evals: u64,
}

impl SimTrace {
    pub fn t_end(&self) -> Fs {
        self.t.last().copied().unwrap_or(0)
    }

    /// Uniform-grid export: `t_s,vc_v,freq_hz,power_w` with the last known
    /// cycle frequency and window power held between updates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_s,vc_v,freq_hz,power_w\n");
        let (mut ci, mut pi) = (0, 0);
        let (mut f, mut p) = (f64::NAN, f64::NAN);
        for (&t, &v) in self.t.iter().zip(&self.vc) {
            while ci < self.cycles.len() && self.cycles[ci].t <= t {
                f = self.cycles[ci].freq;
                ci += 1;
            }
            while pi < self.power_windows.len() && self.power_windows[pi].0 <= t {
                p = self.power_windows[pi].1;
                pi += 1;
            }
            let _ = writeln!(out, "{:e},{v:e},{f:e},{p:e}", t as f64 / FS_PER_S);
        }
        out
    }

    pub fn edges_csv(&self) -> String {
        let mut out = String::from("t_s,signal,value\n");
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{:e},{},{}",
                e.t as f64 / FS_PER_S,
                e.signal,
                u8::from(e.value)
            );
        }
        out
    }

    /// Write the uniform-grid trace to `path` and the edge log next to it
    /// (`<stem>_edges.csv`). Returns the edge-log path.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<std::path::PathBuf, SimError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv())?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        let edges = path.with_file_name(format!("{stem}_edges.csv"));
        fs::write(&edges, self.edges_csv())?;
        Ok(edges)
    }
}
