use serde::{Deserialize, Serialize};

use super::Fs;

/// Tri-state phase/frequency detector.
///
/// A reference edge raises `up`, a feedback edge raises `dn`. Once both are
/// high an internal reset fires `reset_delay` later and clears both; the reset
/// line itself stays high for another `reset_delay`, and edges arriving while
/// it is high are swallowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PfdState {
    pub up: bool,
    pub dn: bool,
    /// Pending reset, if both outputs are high.
    pub reset_at: Option<Fs>,
    /// Reset line is high until this time.
    pub reset_until: Fs,
}

/// Advance the detector to `now`, applying any due reset first and then the
/// rising edges seen at `now`.
pub fn pfd_step(
    mut s: PfdState,
    ref_edge: bool,
    fb_edge: bool,
    now: Fs,
    reset_delay: Fs,
) -> PfdState {
    if let Some(t) = s.reset_at {
        if t <= now {
            s.up = false;
            s.dn = false;
            s.reset_at = None;
            s.reset_until = t + reset_delay;
        }
    }
    let blocked = now < s.reset_until;
    if ref_edge && !blocked {
        s.up = true;
    }
    if fb_edge && !blocked {
        s.dn = true;
    }
    if s.up && s.dn && s.reset_at.is_none() {
        s.reset_at = Some(now + reset_delay);
    }
    s
}
