//! Family-level functionals: chi-square capacity, diameters and maximum singularity.
//!
//! | Functional | Definition |
//! |------------|------------|
//! | `C` | `sup_rho E_{P~rho} chi2(P || E_rho P')` |
//! | `D_chi2` | `sup_{P,P'} chi2(P || P')` |
//! | `D_H2` | `sup_{P,P'} H^2(P, P')` |
//! | `Delta_H2` | `(1 - D_H2/2)^{-2}` |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::config::{Config, POISSON_TAIL, POISSON_TAIL_MAX};
use crate::error::{invalid, Error, Result};
use crate::gaussian_demo::{f_mu, normal_expectation};
use crate::mixtures::{chi2, delta_from_h2, max_pair_divergence, DivergenceKind, FiniteDistribution};
use crate::report::ser_f64;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum FamilySpec {
    Explicit {
        components: Vec<Vec<f64>>,
    },
    Gaussian {
        mu_max: f64,
        #[serde(default)]
        support: Option<Vec<f64>>,
    },
    Bernoulli {
        eps: f64,
    },
    Poisson {
        m_max: f64,
        #[serde(default = "default_tail")]
        truncation_mass: f64,
    },
}

fn default_tail() -> f64 {
    POISSON_TAIL
}

impl FamilySpec {
    pub fn from_json(s: &str) -> Result<Self> {
        let spec: FamilySpec = serde_json::from_str(s).map_err(|e| Error::Parse(format!("family: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn explicit(dists: &[FiniteDistribution]) -> Self {
        FamilySpec::Explicit { components: dists.iter().map(|d| d.probs().to_vec()).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FamilySpec::Explicit { components } => {
                explicit_members(components)?;
            }
            FamilySpec::Gaussian { mu_max, support } => {
                if !(*mu_max >= 0.0 && mu_max.is_finite()) {
                    return invalid(format!("mu_max = {mu_max}"));
                }
                if let Some(s) = support {
                    if s.is_empty() || s.iter().any(|t| !(t.abs() <= *mu_max)) {
                        return invalid("support must be non-empty and inside [-mu_max, mu_max]");
                    }
                }
            }
            FamilySpec::Bernoulli { eps } => {
                if !(*eps > 0.0 && *eps <= 0.5) {
                    return invalid(format!("eps = {eps} outside (0, 1/2]"));
                }
            }
            FamilySpec::Poisson { m_max, truncation_mass } => {
                if !(*m_max >= 0.0 && m_max.is_finite()) {
                    return invalid(format!("m_max = {m_max}"));
                }
                if !(*truncation_mass > 0.0) {
                    return invalid("truncation mass must be positive");
                }
                if *truncation_mass > POISSON_TAIL_MAX {
                    return invalid(format!(
                        "truncation mass {truncation_mass} above {POISSON_TAIL_MAX} makes diameters inaccurate"
                    ));
                }
            }
        }
        Ok(())
    }
}

fn explicit_members(components: &[Vec<f64>]) -> Result<Vec<FiniteDistribution>> {
    if components.is_empty() {
        return invalid("explicit family is empty");
    }
    let d: Vec<FiniteDistribution> = components.iter().cloned().map(FiniteDistribution::new).collect::<Result<_>>()?;
    let k = d[0].len();
    if let Some(bad) = d.iter().find(|p| p.len() != k) {
        return Err(Error::Dimension { expected: k, got: bad.len() });
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyFunctionals {
    #[serde(serialize_with = "ser_f64")]
    pub c_chi2_upper: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_chi2_estimate: f64,
    #[serde(serialize_with = "ser_f64")]
    pub d_chi2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub d_h2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub delta_h2: f64,
}

impl FamilyFunctionals {
    pub fn validate(&self) -> Result<()> {
        let tol = Config::default().comparison;
        if self.c_chi2_estimate > self.c_chi2_upper + tol {
            return invalid(format!("estimate {} above certified {}", self.c_chi2_estimate, self.c_chi2_upper));
        }
        if self.c_chi2_upper > self.d_chi2 + tol {
            return invalid(format!("capacity bound {} above diameter {}", self.c_chi2_upper, self.d_chi2));
        }
        if self.d_chi2.is_finite() && self.delta_h2.is_finite() && self.delta_h2 > self.d_chi2 + 1.0 + tol {
            return invalid(format!("Delta {} above D + 1 = {}", self.delta_h2, self.d_chi2 + 1.0));
        }
        if !(0.0..=2.0).contains(&self.d_h2) {
            return invalid(format!("H^2 diameter {}", self.d_h2));
        }
        Ok(())
    }
}

/// `sum_i rho_i chi2(P_i || sum_j rho_j P_j)`.
pub fn chi2_mutual_information(family: &[FiniteDistribution], prior: &[f64]) -> Result<f64> {
    if prior.len() != family.len() {
        return Err(Error::Dimension { expected: family.len(), got: prior.len() });
    }
    if prior.iter().any(|r| !(*r >= 0.0)) || (prior.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return invalid("prior must be a probability vector");
    }
    Ok(mutual_information_unchecked(family, prior))
}

fn mutual_information_unchecked(family: &[FiniteDistribution], prior: &[f64]) -> f64 {
    let k = family[0].len();
    let mut mix = vec![0.0; k];
    for (p, r) in family.iter().zip(prior) {
        for (m, v) in mix.iter_mut().zip(p.probs()) {
            *m += r * v;
        }
    }
    family
        .iter()
        .zip(prior)
        .filter(|(_, r)| **r > 0.0)
        .map(|(p, r)| r * chi2(p.probs(), &mix))
        .sum()
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

pub const CAPACITY_ITERATIONS: usize = 200;
pub const CAPACITY_RESTARTS: usize = 32;

/// Best chi-square mutual information found by projected gradient ascent (a lower estimate).
pub fn capacity_estimate(family: &[FiniteDistribution], restarts: usize, seed: u64) -> Result<f64> {
    let m = family.len();
    if m == 0 {
        return invalid("empty family");
    }
    if m > 64 {
        return Err(Error::Cap(format!("family of {m} members exceeds 64")));
    }
    if m == 1 {
        return Ok(0.0);
    }
    let f = |rho: &[f64]| mutual_information_unchecked(family, rho);
    let mut best = f(&vec![1.0 / m as f64; m]);
    for r in 0..=restarts {
        let mut rho = if r == 0 {
            vec![1.0 / m as f64; m]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let g: Vec<f64> = (0..m).map(|_| Exp1.sample(&mut rng)).collect();
            let t: f64 = g.iter().sum();
            g.iter().map(|x| x / t).collect()
        };
        let mut val = f(&rho);
        let mut step = 1.0;
        for _ in 0..CAPACITY_ITERATIONS {
            let h = 1e-7;
            let grad: Vec<f64> = (0..m)
                .map(|i| {
                    let mut up = rho.clone();
                    up[i] += h;
                    let mut dn = rho.clone();
                    dn[i] = (dn[i] - h).max(0.0);
                    let fu = f(&up);
                    let fd = f(&dn);
                    if fu.is_finite() && fd.is_finite() { (fu - fd) / (up[i] - dn[i]) } else { 0.0 }
                })
                .collect();
            let mut improved = false;
            let mut s = step * 2.0;
            for _ in 0..40 {
                let trial: Vec<f64> = rho.iter().zip(&grad).map(|(x, g)| x + s * g).collect();
                let cand = project_simplex(&trial);
                let v = f(&cand);
                if v.is_finite() && v > val {
                    rho = cand;
                    val = v;
                    step = s;
                    improved = true;
                    break;
                }
                s *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if val > best {
            best = val;
        }
    }
    Ok(best)
}

/// `sum_i b_i + m - 1`.
pub fn union_capacity_bound(bounds: &[f64]) -> Result<f64> {
    if bounds.is_empty() {
        return invalid("no subfamily bounds");
    }
    Ok(bounds.iter().sum::<f64>() + bounds.len() as f64 - 1.0)
}

fn gaussian_h2(a: f64, b: f64) -> f64 {
    2.0 - 2.0 * (-(a - b) * (a - b) / 8.0).exp()
}

fn gaussian_chi2(a: f64, b: f64) -> f64 {
    ((a - b) * (a - b)).exp_m1()
}

/// `H^2(N(a,1), N(b,1))` by Gauss-Hermite quadrature of the affinity.
pub fn gaussian_h2_quadrature(a: f64, b: f64) -> f64 {
    let bc = normal_expectation(|z| (z * (a + b) / 2.0 - (a * a + b * b) / 4.0).exp());
    2.0 - 2.0 * bc
}

fn poisson_pmf(lambda: f64, kmax: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(kmax + 1);
    let mut v = (-lambda).exp();
    for k in 0..=kmax {
        p.push(v);
        v *= lambda / (k + 1) as f64;
    }
    p
}

/// Smallest `K` with `P(Poi(lambda) > K) < tail`.
fn poisson_cutoff(lambda: f64, tail: f64) -> usize {
    let mut k = 0usize;
    let mut v = (-lambda).exp();
    let mut cdf = v;
    while 1.0 - cdf >= tail && k < 100_000 {
        k += 1;
        v *= lambda / k as f64;
        cdf += v;
    }
    (k as f64 + 10.0 * lambda.sqrt() + 10.0) as usize
}

const GRID: usize = 9;

pub fn family_functionals(spec: &FamilySpec, seed: u64) -> Result<FamilyFunctionals> {
    spec.validate()?;
    let out = match spec {
        FamilySpec::Explicit { components } => {
            let d = explicit_members(components)?;
            let d_chi2 = max_pair_divergence(&d, DivergenceKind::Chi2);
            let d_h2 = max_pair_divergence(&d, DivergenceKind::Hellinger2);
            let upper = d_chi2.min(d.len() as f64 - 1.0);
            let estimate = capacity_estimate(&d, CAPACITY_RESTARTS, seed)?;
            FamilyFunctionals { c_chi2_upper: upper, c_chi2_estimate: estimate, d_chi2, d_h2, delta_h2: delta_from_h2(d_h2) }
        }
        FamilySpec::Gaussian { mu_max, support } => {
            let (lo, hi) = match support {
                Some(s) => (s.iter().copied().fold(f64::INFINITY, f64::min), s.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                None => (-mu_max, *mu_max),
            };
            let d_chi2 = gaussian_chi2(hi, lo);
            let d_h2 = gaussian_h2(hi, lo);
            let strips = 2 * (mu_max + 1.0).floor() as usize + 1;
            let strip_route = strips as f64 * (std::f64::consts::E - 1.0) + strips as f64 - 1.0;
            let mut upper = d_chi2.min(strip_route);
            if let Some(s) = support {
                let mut distinct = s.clone();
                distinct.sort_by(f64::total_cmp);
                distinct.dedup();
                upper = upper.min(distinct.len() as f64 - 1.0);
            }
            let estimate = if hi > lo { f_mu((hi - lo) / 2.0)? } else { 0.0 };
            FamilyFunctionals {
                c_chi2_upper: upper,
                c_chi2_estimate: estimate,
                d_chi2,
                d_h2,
                delta_h2: delta_from_h2(d_h2),
            }
        }
        FamilySpec::Bernoulli { eps } => {
            let e = *eps;
            let d_chi2 = (1.0 - 2.0 * e).powi(2) / (e * (1.0 - e));
            let d_h2 = 2.0 - 4.0 * (e * (1.0 - e)).sqrt();
            let upper = (1.0 - 2.0 * e).min(d_chi2);
            let grid: Vec<FiniteDistribution> = (0..GRID)
                .map(|i| FiniteDistribution::bernoulli(e + (1.0 - 2.0 * e) * i as f64 / (GRID - 1) as f64))
                .collect::<Result<_>>()?;
            let estimate = capacity_estimate(&grid, CAPACITY_RESTARTS, seed)?.max((1.0 - 2.0 * e).powi(2));
            FamilyFunctionals {
                c_chi2_upper: upper,
                c_chi2_estimate: estimate,
                d_chi2,
                d_h2,
                delta_h2: delta_from_h2(d_h2),
            }
        }
        FamilySpec::Poisson { m_max, truncation_mass } => {
            let m = *m_max;
            let d_h2 = 2.0 - 2.0 * (-m / 2.0).exp();
            let d_chi2 = if m > 0.0 { f64::INFINITY } else { 0.0 };
            let upper = if m <= 1.0 {
                m
            } else {
                let strips = m.sqrt().ceil() as usize;
                let mut b = vec![1.0];
                for i in 2..=strips {
                    let lo = ((i - 1) * (i - 1)) as f64;
                    let hi = ((i * i) as f64).min(m);
                    b.push(((hi - lo) * (hi - lo) / lo).exp_m1());
                }
                union_capacity_bound(&b)?
            };
            let kmax = poisson_cutoff(m, *truncation_mass);
            let grid: Vec<FiniteDistribution> = (0..GRID)
                .map(|i| {
                    let p = poisson_pmf(m * i as f64 / (GRID - 1) as f64, kmax);
                    FiniteDistribution::from_weights(&p)
                })
                .collect::<Result<_>>()?;
            let estimate = if m > 0.0 { capacity_estimate(&grid, CAPACITY_RESTARTS, seed)? } else { 0.0 };
            let h2_sum = max_pair_divergence(&[grid[0].clone(), grid[GRID - 1].clone()], DivergenceKind::Hellinger2);
            if (h2_sum - d_h2).abs() > 1e-8 {
                return invalid(format!("Poisson H^2 sum {h2_sum} disagrees with closed form {d_h2}"));
            }
            FamilyFunctionals {
                c_chi2_upper: upper,
                c_chi2_estimate: estimate,
                d_chi2,
                d_h2,
                delta_h2: delta_from_h2(d_h2),
            }
        }
    };
    out.validate()?;
    Ok(out)
}

/// Raw optimizer output for an explicit family, without capping by the certified bound.
pub fn explicit_estimate_uncapped(spec: &FamilySpec, seed: u64) -> Result<f64> {
    match spec {
        FamilySpec::Explicit { components } => capacity_estimate(&explicit_members(components)?, CAPACITY_RESTARTS, seed),
        _ => invalid("explicit family required"),
    }
}
