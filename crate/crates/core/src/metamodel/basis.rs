use std::fmt;

use serde::{Deserialize, Serialize};

/// One monomial of a polynomial response surface: the power each input
/// variable is raised to. For the VCO models the variables are
/// `(W_P, W_N, V_C)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisTerm {
    powers: Vec<u32>,
}

impl BasisTerm {
    pub fn new(powers: Vec<u32>) -> Self {
        Self { powers }
    }

    /// Shorthand for the three-variable case.
    pub fn xyz(p1: u32, p2: u32, p3: u32) -> Self {
        Self::new(vec![p1, p2, p3])
    }

    pub fn powers(&self) -> &[u32] {
        &self.powers
    }

    pub fn nvars(&self) -> usize {
        self.powers.len()
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    pub fn p1(&self) -> u32 {
        self.powers.first().copied().unwrap_or(0)
    }

    pub fn p2(&self) -> u32 {
        self.powers.get(1).copied().unwrap_or(0)
    }

    pub fn p3(&self) -> u32 {
        self.powers.get(2).copied().unwrap_or(0)
    }

    /// Value of the monomial at `x`. `x` must have `nvars()` entries.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.powers.len());
        self.powers
            .iter()
            .zip(x)
            .map(|(&p, &xi)| powu(xi, p))
            .product()
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.powers.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Integer power with `0^0 == 1`.
#[inline]
pub(crate) fn powu(x: f64, p: u32) -> f64 {
    match p {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(p as i32),
    }
}

/// All monomials in `nvars` variables with total degree `<= degree`.
///
/// The ordering nests the last variable outermost and the first variable
/// innermost, so for three variables and degree 2 the sequence is
/// `(0,0,0) (1,0,0) (2,0,0) (0,1,0) (1,1,0) (0,2,0) (0,0,1) (1,0,1) (0,1,1) (0,0,2)`,
/// the row order of the coefficient files this crate reads and writes.
pub fn enumerate_basis(degree: u32, nvars: usize) -> Vec<BasisTerm> {
    assert!(nvars >= 1, "a basis needs at least one variable");
    let mut out = Vec::new();
    let mut powers = vec![0u32; nvars];
    push_terms(nvars - 1, degree, &mut powers, &mut out);
    out
}

fn push_terms(var: usize, budget: u32, powers: &mut Vec<u32>, out: &mut Vec<BasisTerm>) {
    for p in 0..=budget {
        powers[var] = p;
        if var == 0 {
            out.push(BasisTerm::new(powers.clone()));
        } else {
            push_terms(var - 1, budget - p, powers, out);
        }
    }
    powers[var] = 0;
}

/// `C(n, k)` as u64; small arguments only.
pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
