//! Elementary symmetric polynomials of centered, normalized vectors.
//!
//! For `x` with `sum x_i = 0` and `sum |x_i|^2 = n`:
//!
//! | Class | Bound on `|e_l(x)|` |
//! |-------|---------------------|
//! | complex | `sqrt(n^n / (l^l (n-l)^(n-l)))`, below `sqrt(3 sqrt(l+1) C(n,l))` |
//! | real | `sqrt(10 C(n,l))` |

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::config::Config;
use crate::error::{invalid, Error, Result};
use crate::permanent::{rectangular_permanent_sum, Scalar};

/// Zero-sum vector rescaled to squared norm `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> CenteredVector<T> {
    /// Validates an already centered and normalized vector.
    pub fn new(values: Vec<T>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return invalid("empty vector");
        }
        let sum = values.iter().fold(T::zero(), |a, &b| a + b);
        if sum.norm_sqr().sqrt() > 1e-10 * n as f64 {
            return invalid("vector entries do not sum to zero");
        }
        let norm: f64 = values.iter().map(|v| v.norm_sqr()).sum();
        if (norm - n as f64).abs() > 1e-8 * n as f64 {
            return invalid(format!("squared norm {norm} differs from n = {n}"));
        }
        Ok(CenteredVector { values })
    }

    /// Subtracts the mean and rescales to squared norm `n`.
    pub fn normalize(values: &[T]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return invalid("need at least two entries to center");
        }
        let mean = values.iter().fold(T::zero(), |a, &b| a + b) * T::from_f64(1.0 / n as f64);
        let centered: Vec<T> = values.iter().map(|&v| v - mean).collect();
        let norm: f64 = centered.iter().map(|v| v.norm_sqr()).sum();
        if !(norm > 0.0) {
            return invalid("constant vector cannot be normalized");
        }
        let s = T::from_f64((n as f64 / norm).sqrt());
        Self::new(centered.into_iter().map(|v| v * s).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// `(e_0, ..., e_n)`, the coefficients of `prod (1 + x_i z)`.
pub fn esp_all<T: Scalar>(x: &[T]) -> Vec<T> {
    let mut e = vec![T::zero(); x.len() + 1];
    e[0] = T::one();
    for (k, &v) in x.iter().enumerate() {
        for d in (1..=k + 1).rev() {
            e[d] = e[d] + v * e[d - 1];
        }
    }
    e
}

/// `esp_all` with the length cap enforced.
pub fn esp_checked<T: Scalar>(x: &CenteredVector<T>) -> Result<Vec<T>> {
    let cap = Config::default().esp_n;
    if x.n() > cap {
        return Err(Error::Cap(format!("length {} exceeds {cap}", x.n())));
    }
    Ok(esp_all(x.values()))
}

/// Two-valued extremal vector: `n-k` entries `sqrt(k/(n-k))`, `k` entries `-sqrt((n-k)/k)`.
pub fn binary_support_vector(n: usize, k: usize) -> Result<CenteredVector<f64>> {
    if k == 0 || k >= n {
        return invalid(format!("k = {k} outside 1..={}", n.saturating_sub(1)));
    }
    let a = (k as f64 / (n - k) as f64).sqrt();
    let b = ((n - k) as f64 / k as f64).sqrt();
    let mut v = vec![a; n - k];
    v.extend(std::iter::repeat_n(-b, k));
    CenteredVector::new(v)
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EspBounds {
    pub complex_bound: f64,
    pub complex_bound_binomial: f64,
    pub real_bound: f64,
}

/// Natural logs of the three bounds.
pub fn esp_log_bounds(n: usize, ell: usize) -> (f64, f64, f64) {
    let (nf, lf) = (n as f64, ell as f64);
    let complex = 0.5 * (xlogx(nf) - xlogx(lf) - xlogx(nf - lf));
    let lb = ln_binomial(n, ell);
    let binom = 0.5 * ((3.0f64).ln() + 0.5 * (lf + 1.0).ln() + lb);
    let real = 0.5 * ((10.0f64).ln() + lb);
    (complex, binom, real)
}

pub fn esp_bounds(n: usize, ell: usize) -> Result<EspBounds> {
    if ell > n {
        return invalid(format!("degree {ell} exceeds n = {n}"));
    }
    let (c, b, r) = esp_log_bounds(n, ell);
    Ok(EspBounds { complex_bound: c.exp(), complex_bound_binomial: b.exp(), real_bound: r.exp() })
}

/// `|value| / exp(log_bound)` computed on the log scale.
fn ratio(value_abs: f64, log_bound: f64) -> f64 {
    if value_abs == 0.0 {
        0.0
    } else {
        (value_abs.ln() - log_bound).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEntry {
    pub n: usize,
    pub ell: usize,
    pub k: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: &'static str,
    pub n: usize,
    pub ell: usize,
    pub k: usize,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EspReport {
    pub max_ratio_real: f64,
    pub argmax_real: Option<RatioEntry>,
    pub max_ratio_complex: f64,
    pub argmax_complex: Option<RatioEntry>,
    /// Largest real ratio per `(n, l)` over `k`.
    pub per_n_ell: Vec<RatioEntry>,
    pub complex_trials: usize,
    pub violations: Vec<Violation>,
}

/// Exhaustive real check over binary-support vectors plus random complex vectors.
pub fn verify_esp_theorem(n_max: usize, trials: usize, seed: u64) -> Result<EspReport> {
    let cap = Config::default().esp_n;
    if n_max > cap {
        return Err(Error::Cap(format!("n_max {n_max} exceeds {cap}")));
    }
    let mut report = EspReport {
        max_ratio_real: 0.0,
        argmax_real: None,
        max_ratio_complex: 0.0,
        argmax_complex: None,
        per_n_ell: Vec::new(),
        complex_trials: trials,
        violations: Vec::new(),
    };
    for n in 2..=n_max {
        let mut best = vec![RatioEntry { n, ell: 0, k: 0, ratio: -1.0 }; n + 1];
        for k in 1..n {
            let x = binary_support_vector(n, k)?;
            let e = esp_all(x.values());
            for (ell, v) in e.iter().enumerate() {
                let (_, _, lr) = esp_log_bounds(n, ell);
                let r = ratio(v.abs(), lr);
                if r > best[ell].ratio {
                    best[ell] = RatioEntry { n, ell, k, ratio: r };
                }
                if r >= report.max_ratio_real {
                    report.max_ratio_real = r;
                    report.argmax_real = Some(RatioEntry { n, ell, k, ratio: r });
                }
                if r > 1.0 + 1e-8 {
                    report.violations.push(Violation { kind: "real", n, ell, k, value: v.abs(), bound: lr.exp() });
                }
            }
        }
        report.per_n_ell.extend(best);
    }
    let n_hi = n_max.min(32);
    if n_hi >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for trial in 0..trials {
            let n = 2 + trial % (n_hi - 1);
            let raw: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
                .collect();
            let x = CenteredVector::normalize(&raw)?;
            let e = esp_all(x.values());
            for (ell, v) in e.iter().enumerate() {
                let (lc, _, _) = esp_log_bounds(n, ell);
                let r = ratio(v.norm(), lc);
                if r > report.max_ratio_complex {
                    report.max_ratio_complex = r;
                    report.argmax_complex = Some(RatioEntry { n, ell, k: trial, ratio: r });
                }
                if r > 1.0 + 1e-8 {
                    report.violations.push(Violation {
                        kind: "complex",
                        n,
                        ell,
                        k: trial,
                        value: v.norm(),
                        bound: lc.exp(),
                    });
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HadamardCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `|(1/l!) sum_{|T|=l} Perm(a_T)| <= sqrt(10 C(n,l)) prod_i (mean_j a_ij^2)^{1/2}`.
pub fn hadamard_check(a: &[f64], rows: usize, cols: usize) -> Result<HadamardCheck> {
    if a.len() != rows * cols {
        return Err(Error::Dimension { expected: rows * cols, got: a.len() });
    }
    for i in 0..rows {
        let s: f64 = a[i * cols..(i + 1) * cols].iter().sum();
        if s.abs() > 1e-9 * cols as f64 {
            return invalid(format!("row {i} sums to {s}"));
        }
    }
    let sum = rectangular_permanent_sum(a, rows, cols)?;
    let ln_fact: f64 = (1..=rows).map(|k| (k as f64).ln()).sum();
    let lhs = if sum == 0.0 { 0.0 } else { (sum.abs().ln() - ln_fact).exp() };
    let mut ln_rhs = 0.5 * (10f64.ln() + ln_binomial(cols, rows));
    for i in 0..rows {
        let ms: f64 = a[i * cols..(i + 1) * cols].iter().map(|v| v * v).sum::<f64>() / cols as f64;
        ln_rhs += 0.5 * ms.ln();
    }
    let rhs = ln_rhs.exp();
    Ok(HadamardCheck { lhs, rhs, holds: lhs <= rhs + 1e-8 * rhs })
}

/// Closed form `e_l(x^(k)) = sum_j C(n-k, j) C(k, l-j) a^j (-b)^(l-j)` (test oracle).
pub fn binary_support_esp(n: usize, k: usize, ell: usize) -> f64 {
    // e_l = I / (k (n-k))^{l/2} with I = sum_j C(n-k,j) C(k,l-j) (-1)^{l-j} k^j (n-k)^{l-j}
    let (k_big, r_big) = (BigInt::from(k), BigInt::from(n - k));
    let mut total = BigInt::zero();
    for j in 0..=ell.min(n - k) {
        if ell - j > k {
            continue;
        }
        let term = big_binomial(n - k, j) * big_binomial(k, ell - j) * k_big.pow(j as u32) * r_big.pow((ell - j) as u32);
        if (ell - j) % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    let scale = 0.5 * ell as f64 * ((k * (n - k)) as f64).ln();
    let (sign, mag) = (total.sign(), total.magnitude().clone());
    if mag.is_zero() {
        return 0.0;
    }
    let bits = mag.bits();
    let shift = bits.saturating_sub(60);
    let top = (mag >> shift).to_f64().expect("60-bit mantissa");
    let v = (top.ln() + shift as f64 * std::f64::consts::LN_2 - scale).exp();
    if sign == Sign::Minus { -v } else { v }
}

fn big_binomial(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}
