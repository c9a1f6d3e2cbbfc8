use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{OracleConfig, OracleError};

/// Parasitic RC network seen by the oscillator core.
///
/// Node 0 is the tank port; the active devices hang on the last node. The
/// wiring is a resistive chain with randomly placed cross links and a small
/// shunt to ground at every node, so the conductance matrix is symmetric,
/// strictly diagonally dominant and hence positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub g: DMatrix<f64>,
    pub c: DVector<f64>,
}

/// Width-independent part of the mesh, built once per configuration.
#[derive(Debug, Clone)]
pub(crate) struct MeshTemplate {
    g: DMatrix<f64>,
    c: DVector<f64>,
}

impl MeshTemplate {
    pub(crate) fn new(cfg: &OracleConfig) -> Self {
        let n = cfg.mesh_nodes;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.mesh_seed);
        let mut g = DMatrix::zeros(n, n);
        let link = |g: &mut DMatrix<f64>, a: usize, b: usize, y: f64| {
            g[(a, a)] += y;
            g[(b, b)] += y;
            g[(a, b)] -= y;
            g[(b, a)] -= y;
        };
        let r_link = cfg.wire_r_ohm / (n - 1) as f64;
        for i in 0..n - 1 {
            let r = r_link * (0.9 + 0.2 * rng.random::<f64>());
            link(&mut g, i, i + 1, 1.0 / r);
        }
        for _ in 0..n / 4 {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let r = cfg.cross_r_ohm * (0.5 + rng.random::<f64>());
            if a != b {
                link(&mut g, a, b, 1.0 / r);
            }
        }
        for i in 0..n {
            g[(i, i)] += cfg.shunt_g_s;
        }
        let c = DVector::from_element(n, cfg.wire_c_f / n as f64);
        Self { g, c }
    }

    /// Stamp the device conductance and finger capacitance for one sizing.
    pub(crate) fn with_devices(&self, cfg: &OracleConfig, wp: f64, wn: f64) -> Mesh {
        let mut g = self.g.clone();
        let mut c = self.c.clone();
        let last = g.nrows() - 1;
        g[(last, last)] += (wp + wn) / cfg.device_ref_width_m / cfg.device_r_ohm;
        c[last] += finger_count(cfg, wp, wn) * cfg.finger_c_f;
        Mesh { g, c }
    }
}

/// Devices are folded into fingers of at most `finger_width_m`; each finger
/// adds a fixed diffusion/contact capacitance (NMOS fingers weighted).
fn finger_count(cfg: &OracleConfig, wp: f64, wn: f64) -> f64 {
    let fingers = |w: f64| (w / cfg.finger_width_m - 1e-9).ceil().max(1.0);
    fingers(wp) + cfg.n_finger_weight * fingers(wn)
}

impl Mesh {
    /// Same network with every conductance multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            g: &self.g * alpha,
            c: self.c.clone(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.c.len()
    }

    /// Driving-point resistance at node 0 and the capacitance it effectively
    /// sees: every node capacitor weighted by the square of its voltage
    /// transfer from the port.
    pub fn effective_load(&self) -> Result<(f64, f64), OracleError> {
        let chol = self
            .g
            .clone()
            .cholesky()
            .ok_or(OracleError::SingularMesh(self.nodes()))?;
        let mut e0 = DVector::zeros(self.nodes());
        e0[0] = 1.0;
        let x = chol.solve(&e0);
        let reff = x[0];
        let ceff = self
            .c
            .iter()
            .zip(x.iter())
            .map(|(c, xi)| c * (xi / reff).powi(2))
            .sum();
        Ok((ceff, reff))
    }
}
