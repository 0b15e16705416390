//! Numerical tolerances and size caps shared by every module.
//!
//! | Knob | Default | Used for |
//! |------|---------|----------|
//! | `validation` | 1e-10 | structural invariants (stochasticity, centering) |
//! | `comparison` | 1e-8 | agreement between two computation paths |
//! | `prob_sum` | 1e-12 | probability vectors summing to one |
//! | `bruteforce_n` | 10 | coordinates enumerated by outcome-level oracles |
//! | `bruteforce_cells` | 10^7 | outcome cells enumerated by oracles |
//! | `ryser_n` | 28 | exact permanent dimension |
//! | `rect_ell` | 22 | rows in rectangular permanent sums |
//! | `esp_n` | 64 | elementary symmetric polynomial length |

use serde::Serialize;

/// Tolerances and caps in one record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Config {
    pub validation: f64,
    pub comparison: f64,
    pub prob_sum: f64,
    pub bruteforce_n: usize,
    pub bruteforce_cells: u64,
    pub ryser_n: usize,
    pub rect_ell: usize,
    pub esp_n: usize,
    pub direct_series_budget: f64,
    pub r_ell_budget: f64,
    pub f_mu_max: f64,
    pub oracle_mu_max: f64,
    pub cumulant_l_max: usize,
    pub worst_case_size: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            validation: 1e-10,
            comparison: 1e-8,
            prob_sum: 1e-12,
            bruteforce_n: 10,
            bruteforce_cells: 10_000_000,
            ryser_n: 28,
            rect_ell: 22,
            esp_n: 64,
            direct_series_budget: 1e9,
            r_ell_budget: 1e7,
            f_mu_max: 30.0,
            oracle_mu_max: 5.0,
            cumulant_l_max: 200,
            worst_case_size: 64,
        }
    }
}

/// Eigenvalues of a mixture matrix are clamped to this window before truncation into [0, 1].
pub const EIGEN_SLACK: f64 = 1e-10;

/// Second eigenvalue above `1 - SINGULAR_GAP` makes spectral upper bounds infinite.
pub const SINGULAR_GAP: f64 = 1e-12;

/// Interpolated series must reproduce a fresh permanent evaluation to this relative residual.
pub const INTERPOLATION_RESIDUAL: f64 = 1e-6;

/// Omitted Poisson tail mass used when none is given.
pub const POISSON_TAIL: f64 = 1e-12;

/// Largest Poisson tail mass accepted.
pub const POISSON_TAIL_MAX: f64 = 1e-6;

/// Gauss-Hermite nodes for one-dimensional Gaussian integrals.
pub const HERMITE_NODES: usize = 200;

/// `a` and `b` agree to relative tolerance `rel`, measured against the larger magnitude.
pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs())
}
