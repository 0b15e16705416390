//! Balanced Gaussian location model and the moment/cumulant blowup terms.
//!
//! Coordinates `X_i ~ N(theta_i, 1)` with `theta` a uniformly random arrangement of
//! `n/2` copies of `+mu` and `n/2` copies of `-mu`. The exact divergence is
//! `sum_{l>=2} C(n,l) f(mu)^l g_l^2` with
//! `f(mu) = e^{-mu^2/2} int sinh^2(mu x)/cosh(mu x) phi(x) dx` and
//! `g_l = (-1)^{l/2} C(n/2, l/2) / C(n, l)` for even `l`.

use std::sync::OnceLock;

use gauss_quad::GaussHermite;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::config::{Config, HERMITE_NODES};
use crate::error::{invalid, Error, Result};
use crate::esp::ln_binomial;
use crate::report::ser_f64;

const SQRT_2PI: f64 = 2.5066282746310002;

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Gauss-Hermite rule rescaled to integrate against the standard normal density.
pub fn normal_rule(nodes: usize) -> Vec<(f64, f64)> {
    let rule = GaussHermite::new(nodes).expect("at least two nodes");
    let s = std::f64::consts::PI.sqrt();
    rule.iter().map(|(x, w)| (std::f64::consts::SQRT_2 * x, w / s)).collect()
}

fn default_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| normal_rule(HERMITE_NODES))
}

/// `E g(Z)` for `Z ~ N(0,1)` using the default rule.
pub fn normal_expectation(g: impl Fn(f64) -> f64) -> f64 {
    default_rule().iter().map(|(x, w)| w * g(*x)).sum()
}

/// Trapezoidal rule on `[-half_width, half_width]` with step `h`.
fn trapezoid(g: &impl Fn(f64) -> f64, half_width: f64, h: f64) -> f64 {
    let steps = (2.0 * half_width / h).ceil() as usize;
    let h = 2.0 * half_width / steps as f64;
    let mut s = 0.5 * (g(-half_width) + g(half_width));
    for k in 1..steps {
        s += g(-half_width + k as f64 * h);
    }
    s * h
}

/// Both integral forms of `f(mu)` and the step-halving change of the primary one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FMuEvaluation {
    pub value: f64,
    pub alternate: f64,
    pub halving_delta: f64,
}

/// Evaluates `f(mu)`.
///
/// `tanh` has poles at distance `pi/(2 mu)` from the real axis, which caps the
/// accuracy of a fixed Gauss-Hermite rule; the trapezoidal rule on the real line
/// converges geometrically at a rate set by that strip width, so the step is
/// scaled with `1/mu`.
pub fn f_mu_detailed(mu: f64) -> Result<FMuEvaluation> {
    if !(mu >= 0.0) {
        return invalid(format!("mu = {mu} must be nonnegative"));
    }
    let cap = Config::default().f_mu_max;
    if mu > cap {
        return Err(Error::Cap(format!("mu = {mu} exceeds {cap}")));
    }
    if mu == 0.0 {
        return Ok(FMuEvaluation { value: 0.0, alternate: 0.0, halving_delta: 0.0 });
    }
    let half_width = mu + 40.0;
    let h = (0.1f64).min(0.1 / mu);
    let primary = |x: f64| 0.5 * (phi(x - mu) + phi(x + mu)) * (mu * x).tanh().powi(2);
    let shift = (-0.5 * mu * mu).exp();
    let sech = |x: f64| shift * phi(x) / (mu * x).cosh();
    let value = trapezoid(&primary, half_width, h);
    let halved = trapezoid(&primary, half_width, h / 2.0);
    let alternate = 1.0 - trapezoid(&sech, half_width, h);
    Ok(FMuEvaluation { value: value.clamp(0.0, 1.0), alternate, halving_delta: (value - halved).abs() })
}

pub fn f_mu(mu: f64) -> Result<f64> {
    let e = f_mu_detailed(mu)?;
    if (e.value - e.alternate).abs() > Config::default().validation {
        return invalid(format!("f({mu}) integral forms disagree: {} vs {}", e.value, e.alternate));
    }
    Ok(e.value)
}

pub fn g_ell(n: usize, ell: usize) -> Result<f64> {
    if n % 2 == 1 {
        return invalid(format!("n = {n} must be even"));
    }
    if ell > n {
        return invalid(format!("degree {ell} exceeds n = {n}"));
    }
    if ell % 2 == 1 {
        return Ok(0.0);
    }
    let mag = (ln_binomial(n / 2, ell / 2) - ln_binomial(n, ell)).exp();
    Ok(if (ell / 2) % 2 == 0 { mag } else { -mag })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyModelResult {
    pub mu: f64,
    pub n: usize,
    pub f_mu: f64,
    pub g: Vec<f64>,
    pub chi2_series: f64,
    #[serde(serialize_with = "ser_f64")]
    pub geometric_cap: f64,
}

impl ToyModelResult {
    pub fn validate(&self) -> Result<()> {
        let tol = Config::default();
        if self.f_mu > 1.0 - (-self.mu * self.mu).exp() + tol.validation {
            return invalid(format!("f({}) = {} above 1 - exp(-mu^2)", self.mu, self.f_mu));
        }
        if self.g.len() > 1 && self.g[1] != 0.0 {
            return invalid("g_1 must vanish");
        }
        for (l, g) in self.g.iter().enumerate() {
            if l % 2 == 1 && *g != 0.0 {
                return invalid(format!("odd coefficient g_{l} = {g}"));
            }
            if g * g > (-ln_binomial(self.n, l)).exp() + 1e-12 {
                return invalid(format!("g_{l}^2 exceeds 1/C(n,l)"));
            }
        }
        if self.chi2_series > self.geometric_cap + tol.comparison {
            return invalid("series exceeds f^2/(1-f)");
        }
        Ok(())
    }
}

pub fn toy_chi2(n: usize, mu: f64) -> Result<ToyModelResult> {
    if n == 0 || n % 2 == 1 {
        return invalid(format!("n = {n} must be positive and even"));
    }
    if n > 1_000_000 {
        return Err(Error::Cap(format!("n = {n} exceeds 10^6")));
    }
    let f = f_mu(mu)?;
    let g: Vec<f64> = (0..=n).map(|l| g_ell(n, l)).collect::<Result<_>>()?;
    let ln_f = f.ln();
    let mut chi2 = 0.0;
    for l in (2..=n).step_by(2) {
        let ln_term = 2.0 * ln_binomial(n / 2, l / 2) - ln_binomial(n, l) + l as f64 * ln_f;
        chi2 += ln_term.exp();
    }
    let cap = if f < 1.0 { f * f / (1.0 - f) } else { f64::INFINITY };
    let out = ToyModelResult { mu, n, f_mu: f, g, chi2_series: chi2, geometric_cap: cap };
    out.validate()?;
    Ok(out)
}

fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Two-coordinate divergence by tensor Gauss-Hermite quadrature with `nodes` per axis.
pub fn toy_chi2_oracle_n2_with(mu: f64, nodes: usize) -> Result<f64> {
    if !(mu >= 0.0) {
        return invalid(format!("mu = {mu} must be nonnegative"));
    }
    let cap = Config::default().oracle_mu_max;
    if mu > cap {
        return Err(Error::Cap(format!("mu = {mu} exceeds {cap}")));
    }
    let rule = if nodes == HERMITE_NODES { default_rule().to_vec() } else { normal_rule(nodes) };
    let mut s = 0.0;
    for &(x, wx) in &rule {
        let lx = ln_cosh(mu * x);
        let mut inner = 0.0;
        for &(y, wy) in &rule {
            let ln_ratio = -mu * mu + 2.0 * ln_cosh(mu * (x - y)) - lx - ln_cosh(mu * y);
            inner += wy * ln_ratio.exp();
        }
        s += wx * inner;
    }
    Ok((s - 1.0).max(0.0))
}

pub fn toy_chi2_oracle_n2(mu: f64) -> Result<f64> {
    toy_chi2_oracle_n2_with(mu, HERMITE_NODES)
}

/// `mu^{4l+4} / (2^l (n-1)^2) * n! / (2! l! (n-l-2)!)`.
pub fn moments_blowup(n: usize, mu: f64, ell: usize) -> Result<f64> {
    if ell + 2 > n {
        return invalid(format!("need l + 2 <= n, got l = {ell}, n = {n}"));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    Ok(ln_moments_blowup(n, mu, ell).exp())
}

pub fn ln_moments_blowup(n: usize, mu: f64, ell: usize) -> f64 {
    let (nf, lf) = (n as f64, ell as f64);
    (4.0 * lf + 4.0) * mu.ln() - lf * std::f64::consts::LN_2 - 2.0 * (nf - 1.0).ln() + ln_gamma(nf + 1.0)
        - std::f64::consts::LN_2
        - ln_gamma(lf + 1.0)
        - ln_gamma(nf - lf - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSweep {
    pub mu: f64,
    pub ell: usize,
    pub n: Vec<usize>,
    pub term: Vec<f64>,
    pub log_slope: f64,
}

/// Terms over `n = 2^a, ..., 2^b` (every power of two) and the least-squares slope of `ln term` on `ln n`.
pub fn moments_sweep(mu: f64, ell: usize, log2_lo: u32, log2_hi: u32) -> Result<MomentSweep> {
    if log2_lo >= log2_hi || log2_hi > 40 {
        return invalid("sweep needs 0 <= a < b <= 40");
    }
    if !(mu > 0.0) {
        return invalid("slope needs mu > 0");
    }
    let n: Vec<usize> = (log2_lo..=log2_hi).map(|k| 1usize << k).collect();
    if n[0] < ell + 2 {
        return invalid(format!("smallest n = {} below l + 2", n[0]));
    }
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let y: Vec<f64> = n.iter().map(|&v| ln_moments_blowup(v, mu, ell)).collect();
    let m = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / m, y.iter().sum::<f64>() / m);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(MomentSweep { mu, ell, n, term: y.iter().map(|v| v.exp()).collect(), log_slope: sxy / sxx })
}

/// `b_1, b_3, ..., b_{2 l_max + 1}` from the alternating recursion (tangent numbers).
pub fn cumulant_sequence(l_max: usize) -> Result<Vec<BigInt>> {
    let cap = Config::default().cumulant_l_max;
    if l_max > cap {
        return Err(Error::Cap(format!("l_max = {l_max} exceeds {cap}")));
    }
    let mut b: Vec<BigInt> = vec![BigInt::one()];
    for l in 1..=l_max {
        let m = 2 * l + 1;
        let mut v = if l % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        let mut binom = BigInt::one();
        for j in 1..=l {
            binom = binom * BigInt::from((m - 2 * j + 2) * (m - 2 * j + 1)) / BigInt::from((2 * j - 1) * (2 * j));
            let term = &binom * &b[l - j];
            if j % 2 == 1 {
                v += term;
            } else {
                v -= term;
            }
        }
        b.push(v);
    }
    Ok(b)
}

/// Natural log of `|x|` for arbitrarily large integers.
pub fn ln_abs_bigint(x: &BigInt) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let a = x.abs();
    let bits = a.bits();
    if bits <= 1000 {
        return a.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top: BigInt = &a >> shift;
    top.to_f64().expect("64 bits fit").ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CumulantRow {
    pub ell: usize,
    pub b: String,
    pub ln_b: f64,
    /// `ln |a_{2l+1}|`
    pub ln_kappa: f64,
    /// `ln (kappa^2 / alpha!)` along `alpha = (1, 2l+1, 0, ...)`
    pub ln_term: f64,
    pub ln_partial_sum: f64,
    #[serde(serialize_with = "ser_f64")]
    pub partial_sum: f64,
}

/// Cumulant terms and their partial sums at `(mu, n)`.
pub fn cumulant_divergence(l_max: usize, mu: f64, n: usize) -> Result<Vec<CumulantRow>> {
    if n < 2 || !(mu > 0.0) {
        return invalid("need n >= 2 and mu > 0");
    }
    let b = cumulant_sequence(l_max)?;
    let mut rows = Vec::with_capacity(b.len());
    let mut ln_sum = f64::NEG_INFINITY;
    for (l, bl) in b.iter().enumerate() {
        let ln_b = ln_abs_bigint(bl);
        let ln_kappa = (2 * l + 2) as f64 * mu.ln() + ln_b - ((n - 1) as f64).ln();
        let ln_term = 2.0 * ln_kappa - ln_gamma((2 * l + 2) as f64);
        ln_sum = log_add(ln_sum, ln_term);
        rows.push(CumulantRow {
            ell: l,
            b: bl.to_string(),
            ln_b,
            ln_kappa,
            ln_term,
            ln_partial_sum: ln_sum,
            partial_sum: ln_sum.exp(),
        });
    }
    Ok(rows)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f_mu_basics() {
        assert_eq!(f_mu(0.0).unwrap(), 0.0);
        let e = f_mu_detailed(1.0).unwrap();
        assert!((e.value - e.alternate).abs() < 1e-10);
        assert!(e.halving_delta < 1e-12);
        assert!(f_mu(31.0).is_err());
        assert!(f_mu(-1.0).is_err());
        let hermite = normal_expectation(|x| (-0.5f64).exp() * x.sinh().powi(2) / x.cosh());
        assert!((hermite - f_mu(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_ell(4, 0).unwrap(), 1.0);
        assert_eq!(g_ell(4, 1).unwrap(), 0.0);
        assert!((g_ell(4, 2).unwrap() + 1.0 / 3.0).abs() < 1e-14);
        assert!(g_ell(5, 2).is_err());
    }

    #[test]
    fn toy_examples() {
        assert_eq!(toy_chi2(10, 0.0).unwrap().chi2_series, 0.0);
        let r = toy_chi2(2, 1.0).unwrap();
        assert!((r.chi2_series - r.f_mu * r.f_mu).abs() < 1e-15);
        for n in [10, 100, 1000] {
            let r = toy_chi2(n, 1.0).unwrap();
            assert!(r.chi2_series > 0.0 && r.chi2_series <= r.geometric_cap);
        }
        assert!(toy_chi2(3, 1.0).is_err());
    }

    #[test]
    fn oracle_matches_series() {
        assert!(toy_chi2_oracle_n2(0.0).unwrap().abs() < 1e-14);
        for mu in [0.25, 1.0, 2.0] {
            let a = toy_chi2_oracle_n2(mu).unwrap();
            let b = toy_chi2(2, mu).unwrap().chi2_series;
            assert!((a - b).abs() < 1e-8, "mu={mu}: {a} vs {b}");
        }
    }

    #[test]
    fn moments_examples() {
        assert_eq!(moments_blowup(10, 0.0, 1).unwrap(), 0.0);
        let big = moments_blowup(1 << 20, 1.3, 0).unwrap();
        assert!((big - 1.3f64.powi(4) / 2.0).abs() < 1e-5);
        let r = moments_blowup(1 << 21, 1.0, 1).unwrap() / moments_blowup(1 << 20, 1.0, 1).unwrap();
        assert!((r - 2.0).abs() < 1e-5);
        assert!(moments_blowup(3, 1.0, 2).is_err());
    }

    #[test]
    fn tangent_numbers() {
        let b = cumulant_sequence(4).unwrap();
        let want = [1, 2, 16, 272, 7936];
        for (x, w) in b.iter().zip(want) {
            assert_eq!(*x, BigInt::from(w));
        }
        let long = cumulant_sequence(200).unwrap();
        assert!(long[200].to_string().len() > 300);
        assert!(cumulant_sequence(201).is_err());
    }

    #[test]
    fn big_log() {
        let x = BigInt::from(10).pow(400);
        assert!((ln_abs_bigint(&x) - 400.0 * 10f64.ln()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn f_mu_below_cap(mu in 0.0f64..5.0) {
            let f = f_mu(mu).unwrap();
            prop_assert!(f <= 1.0 - (-mu * mu).exp() + 1e-10);
        }

        #[test]
        fn g_squared_bounded(half in 1usize..200, frac in 0.0f64..1.0) {
            let n = 2 * half;
            let l = ((n as f64) * frac) as usize;
            let g = g_ell(n, l).unwrap();
            prop_assert!(g * g <= (-ln_binomial(n, l)).exp() + 1e-12);
        }
    }
}
