use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Passive second-order loop filter: `r1` in series with `c1`, that branch
/// in parallel with `c2`, all from the control node to ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopFilter {
    pub r1: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LoopFilter {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.c1.is_finite() && self.c1 > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "c1 must be > 0, got {}",
                self.c1
            )));
        }
        if !(self.r1.is_finite() && self.r1 >= 0.0 && self.c2.is_finite() && self.c2 >= 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "r1 and c2 must be >= 0 (r1 = {}, c2 = {})",
                self.r1, self.c2
            )));
        }
        Ok(())
    }

    /// Textbook design for a given unity-gain bandwidth and phase margin:
    /// the crossover sits at the geometric mean of the stabilizing zero and
    /// the ripple pole.
    pub fn design(
        bandwidth_hz: f64,
        phase_margin_deg: f64,
        icp: f64,
        kvco_hz_per_v: f64,
        n: u32,
    ) -> Result<Self, SimError> {
        if !(bandwidth_hz > 0.0 && icp > 0.0 && kvco_hz_per_v > 0.0 && n >= 1)
            || !(0.0..90.0).contains(&phase_margin_deg)
        {
            return Err(SimError::InvalidConfig(
                "filter design needs positive bandwidth, current, gain and a margin in [0, 90)"
                    .into(),
            ));
        }
        let wc = 2.0 * PI * bandwidth_hz;
        let b = (PI / 4.0 + phase_margin_deg.to_radians() / 2.0).tan();
        let kv = 2.0 * PI * kvco_hz_per_v;
        let ctot = icp * kv * b / (2.0 * PI * n as f64 * wc * wc);
        let c2 = ctot / (b * b);
        let c1 = ctot - c2;
        let r1 = b / wc / c1;
        Ok(Self { r1, c1, c2 })
    }
}

/// Charge pump plus loop filter state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalogState {
    /// Control voltage (across `c2`).
    pub vc: f64,
    /// Voltage on `c1`.
    pub v1: f64,
    /// Pump output current now and the value it is slewing towards.
    pub i: f64,
    pub i_target: f64,
    slope: f64,
}

impl AnalogState {
    pub fn at_rest(vc: f64) -> Self {
        Self {
            vc,
            v1: vc,
            ..Default::default()
        }
    }

    /// Pump decision: source when only `up` is high and there is headroom,
    /// sink when only `dn` is high and `vc` is above ground, otherwise off.
    pub fn pump_target(&self, up: bool, dn: bool, cur: f64, vdd: f64) -> f64 {
        if dn && !up && self.vc > 0.0 {
            -cur
        } else if up && !dn && self.vc < vdd {
            cur
        } else {
            0.0
        }
    }

    /// Start slewing towards `target` over `transition` seconds.
    pub fn set_target(&mut self, target: f64, transition: f64) {
        if target == self.i_target {
            return;
        }
        self.i_target = target;
        if transition <= 0.0 {
            self.i = target;
            self.slope = 0.0;
        } else {
            self.slope = (target - self.i) / transition;
        }
    }

    /// Exact charge delivered by the slewing pump over `h`, advancing the
    /// pump current.
    fn pump_charge(&mut self, h: f64) -> f64 {
        if self.i == self.i_target || self.slope == 0.0 {
            self.i = self.i_target;
            return self.i * h;
        }
        let t_ramp = (self.i_target - self.i) / self.slope;
        if t_ramp >= h {
            let i_end = self.i + self.slope * h;
            let q = 0.5 * (self.i + i_end) * h;
            self.i = i_end;
            q
        } else {
            let q = 0.5 * (self.i + self.i_target) * t_ramp + self.i_target * (h - t_ramp);
            self.i = self.i_target;
            self.slope = 0.0;
            q
        }
    }

    /// One backward-Euler step of length `h` with the pump's average current
    /// over the step, then clamp to the rails.
    pub fn advance(&mut self, lf: &LoopFilter, h: f64, vdd: f64) {
        if h <= 0.0 {
            return;
        }
        let q = self.pump_charge(h);
        let i = q / h;
        // series branch conductance after eliminating v1
        let k = 1.0 / (lf.r1 + h / lf.c1);
        let b = lf.c2 / h;
        let vc = (i + b * self.vc + k * self.v1) / (b + k);
        self.v1 += h * k * (vc - self.v1) / lf.c1;
        self.vc = vc.clamp(0.0, vdd);
    }
}

/// Charge-pump / loop-filter update over one analog step: pick the pump
/// current from `up`, `dn` and the rail guards, slew it, integrate it into the
/// filter and return the new control voltage.
#[allow(clippy::too_many_arguments)]
pub fn cp_lf_step(
    state: &mut AnalogState,
    lf: &LoopFilter,
    up: bool,
    dn: bool,
    cur: f64,
    transition: f64,
    vdd: f64,
    dt: f64,
) -> f64 {
    let target = state.pump_target(up, dn, cur, vdd);
    state.set_target(target, transition);
    state.advance(lf, dt, vdd);
    state.vc
}
