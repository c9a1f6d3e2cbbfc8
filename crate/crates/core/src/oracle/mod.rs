//! Synthetic "virtual layout" VCO.
//!
//! Stands in for the extracted-parasitic netlist: a smooth frequency/power
//! surface over `(W_P, W_N, V_C)` whose every evaluation solves a dense SPD
//! RC mesh, so it is genuinely expensive compared with a polynomial.

mod linear;
mod mesh;

use std::fs;
use std::hint::black_box;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linear::{fit_linear_model, LinearVcoModel};
pub use mesh::Mesh;
use mesh::MeshTemplate;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error("widths must be positive and finite (wp = {wp}, wn = {wn})")]
    BadWidth { wp: f64, wn: f64 },
    #[error("control voltage {vc} outside [0, {vdd}]")]
    BadControl { vc: f64, vdd: f64 },
    #[error("parasitic mesh with {0} nodes is not positive definite")]
    SingularMesh(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// All knobs of the synthetic oracle. Units are SI throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub vdd: f64,
    /// Reference sizing the curve parameters are quoted at.
    pub wp_ref_m: f64,
    pub wn_ref_m: f64,
    /// Frequency at `vc = 0` for the reference sizing.
    pub f0_base_hz: f64,
    /// Rise of the transfer curve from rail to rail at the reference sizing.
    pub tuning_span_hz: f64,
    /// Sigmoid centre and width of the varactor tuning characteristic.
    pub sat_knee_v: f64,
    pub sat_width_v: f64,
    /// First and second order width sensitivities of the tank frequency.
    pub kf_wp_hz_per_m: f64,
    pub kf_wn_hz_per_m: f64,
    pub kf_wp2_hz_per_m2: f64,
    pub kf_wn2_hz_per_m2: f64,
    /// Frequency pulled down per farad of effective parasitic load.
    pub gamma_hz_per_f: f64,
    /// Static core current `bias + gp*wp + gn*wn`, scaled by `1 + kv*vc`.
    pub bias_a: f64,
    pub gp_a_per_m: f64,
    pub gn_a_per_m: f64,
    pub kv_per_v: f64,
    /// Voltage swing on the parasitic load for dynamic power `C*V^2*f`.
    pub swing_v: f64,
    pub mesh_nodes: usize,
    pub mesh_seed: u64,
    pub wire_r_ohm: f64,
    pub wire_c_f: f64,
    pub cross_r_ohm: f64,
    pub shunt_g_s: f64,
    pub device_r_ohm: f64,
    pub device_ref_width_m: f64,
    pub finger_c_f: f64,
    pub finger_width_m: f64,
    pub n_finger_weight: f64,
    /// Mesh solves per evaluation.
    pub work_factor: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let vdd = 1.8;
        let sat_width_v = 1.5;
        Self {
            vdd,
            wp_ref_m: 20e-6,
            wn_ref_m: 10e-6,
            f0_base_hz: 2090e6,
            tuning_span_hz: 225e6,
            // 0.658 puts the inflection of the sigmoid's slope just below
            // mid-rail, leaving the curve gently concave over the range
            sat_knee_v: 0.5 * vdd - 0.658 * sat_width_v,
            sat_width_v,
            kf_wp_hz_per_m: -8e12,
            kf_wn_hz_per_m: -3e12,
            kf_wp2_hz_per_m2: 0.0,
            kf_wn2_hz_per_m2: 0.0,
            gamma_hz_per_f: 2e21,
            bias_a: 10e-6,
            gp_a_per_m: 8.0,
            gn_a_per_m: 8.1,
            kv_per_v: 0.1,
            swing_v: 1.0,
            mesh_nodes: 64,
            mesh_seed: 1,
            wire_r_ohm: 320.0,
            wire_c_f: 25.6e-15,
            cross_r_ohm: 800.0,
            shunt_g_s: 1e-6,
            device_r_ohm: 400.0,
            device_ref_width_m: 30e-6,
            finger_c_f: 2e-15,
            finger_width_m: 1e-6,
            n_finger_weight: 0.8,
            work_factor: 1,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: &str| Err(OracleError::InvalidConfig(m.into()));
        if self.mesh_nodes < 2 {
            return bad("mesh_nodes must be at least 2");
        }
        if self.work_factor < 1 {
            return bad("work_factor must be at least 1");
        }
        let positive = [
            ("vdd", self.vdd),
            ("wp_ref_m", self.wp_ref_m),
            ("wn_ref_m", self.wn_ref_m),
            ("f0_base_hz", self.f0_base_hz),
            ("sat_width_v", self.sat_width_v),
            ("wire_r_ohm", self.wire_r_ohm),
            ("cross_r_ohm", self.cross_r_ohm),
            ("shunt_g_s", self.shunt_g_s),
            ("device_r_ohm", self.device_r_ohm),
            ("device_ref_width_m", self.device_ref_width_m),
            ("finger_width_m", self.finger_width_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(OracleError::InvalidConfig(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        let finite = [
            self.tuning_span_hz,
            self.sat_knee_v,
            self.kf_wp_hz_per_m,
            self.kf_wn_hz_per_m,
            self.kf_wp2_hz_per_m2,
            self.kf_wn2_hz_per_m2,
            self.gamma_hz_per_f,
            self.bias_a,
            self.gp_a_per_m,
            self.gn_a_per_m,
            self.kv_per_v,
            self.swing_v,
            self.wire_c_f,
            self.finger_c_f,
            self.n_finger_weight,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all coefficients must be finite");
        }
        if self.wire_c_f < 0.0 || self.finger_c_f < 0.0 {
            return bad("capacitances must be non-negative");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, OracleError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// A ready-to-evaluate oracle: validated config plus the prebuilt mesh
/// wiring and the reference-sizing parasitic load.
#[derive(Debug, Clone)]
pub struct Oracle {
    cfg: OracleConfig,
    template: MeshTemplate,
    ceff_ref: f64,
}

impl Oracle {
    pub fn new(cfg: OracleConfig) -> Result<Self, OracleError> {
        cfg.validate()?;
        let template = MeshTemplate::new(&cfg);
        let (ceff_ref, _) = template
            .with_devices(&cfg, cfg.wp_ref_m, cfg.wn_ref_m)
            .effective_load()?;
        Ok(Self {
            cfg,
            template,
            ceff_ref,
        })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    pub fn mesh(&self, wp: f64, wn: f64) -> Result<Mesh, OracleError> {
        check_widths(wp, wn)?;
        Ok(self.template.with_devices(&self.cfg, wp, wn))
    }

    /// `(ceff, reff)` of the parasitic mesh for one sizing. Runs
    /// `work_factor` full factorizations.
    pub fn mesh_effective_load(&self, wp: f64, wn: f64) -> Result<(f64, f64), OracleError> {
        let mesh = self.mesh(wp, wn)?;
        let load = mesh.effective_load()?;
        for _ in 1..self.cfg.work_factor {
            black_box(black_box(&mesh).effective_load()?);
        }
        Ok(load)
    }

    /// Normalized tuning characteristic, 0 at `vc = 0` and 1 at `vc = vdd`.
    fn tuning(&self, vc: f64) -> f64 {
        let c = &self.cfg;
        let t = |v: f64| ((v - c.sat_knee_v) / c.sat_width_v).tanh();
        (t(vc) - t(0.0)) / (t(c.vdd) - t(0.0))
    }

    /// `(freq, power)` at one design point.
    pub fn eval(&self, wp: f64, wn: f64, vc: f64) -> Result<(f64, f64), OracleError> {
        let c = &self.cfg;
        if !(vc.is_finite() && (0.0..=c.vdd).contains(&vc)) {
            return Err(OracleError::BadControl { vc, vdd: c.vdd });
        }
        let (ceff, _) = self.mesh_effective_load(wp, wn)?;
        let (du, dv) = (wp - c.wp_ref_m, wn - c.wn_ref_m);
        let freq = c.f0_base_hz
            + c.kf_wp_hz_per_m * du
            + c.kf_wn_hz_per_m * dv
            + c.kf_wp2_hz_per_m2 * du * du
            + c.kf_wn2_hz_per_m2 * dv * dv
            + c.tuning_span_hz * self.tuning(vc)
            - c.gamma_hz_per_f * (ceff - self.ceff_ref);
        let static_p =
            c.vdd * (c.bias_a + c.gp_a_per_m * wp + c.gn_a_per_m * wn) * (1.0 + c.kv_per_v * vc);
        let power = static_p + ceff * c.swing_v * c.swing_v * freq;
        Ok((freq, power))
    }
}

fn check_widths(wp: f64, wn: f64) -> Result<(), OracleError> {
    if wp.is_finite() && wn.is_finite() && wp > 0.0 && wn > 0.0 {
        Ok(())
    } else {
        Err(OracleError::BadWidth { wp, wn })
    }
}

/// One-shot evaluation; builds the mesh wiring from scratch. Prefer holding
/// an [`Oracle`] when evaluating repeatedly.
pub fn oracle_eval(
    cfg: &OracleConfig,
    wp: f64,
    wn: f64,
    vc: f64,
) -> Result<(f64, f64), OracleError> {
    Oracle::new(cfg.clone())?.eval(wp, wn, vc)
}

/// One-shot `(ceff, reff)` for a sizing.
pub fn mesh_effective_load(
    cfg: &OracleConfig,
    wp: f64,
    wn: f64,
) -> Result<(f64, f64), OracleError> {
    Oracle::new(cfg.clone())?.mesh_effective_load(wp, wn)
}
