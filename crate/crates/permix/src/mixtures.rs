//! Finite distributions, divergences, permutation mixtures and the mixture matrix.
//!
//! A component list `(P_1, ..., P_n)` on a shared alphabet `0..K` defines two laws on
//! `K^n` outcomes:
//!
//! | Law | Definition |
//! |-----|------------|
//! | permutation mixture | `(1/n!) sum_pi prod_i P_{pi(i)}(x_i)` |
//! | i.i.d. counterpart | `prod_i Pbar(x_i)` with `Pbar = (1/n) sum_i P_i` |
//!
//! Their chi-square divergence is encoded by the mixture matrix
//! `A_ij = (1/n) sum_x P_i(x) P_j(x) / Pbar(x)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::config::{Config, EIGEN_SLACK};
use crate::error::{invalid, Error, Result};
use crate::permanent::{permanent_ryser, rectangular_permanent_sum, SquareMatrix};

/// Probability vector over `0..K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return invalid("distribution over an empty alphabet");
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return invalid(format!("probability {p} at symbol {i}"));
            }
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > Config::default().prob_sum {
            return invalid(format!("probabilities sum to {s}"));
        }
        Ok(FiniteDistribution { probs })
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0) || w.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return invalid("weights must be nonnegative with positive sum");
        }
        Self::new(w.iter().map(|x| x / s).collect())
    }

    /// `Bern(p)` on `{0, 1}` with `P(1) = p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("Bernoulli parameter {p}"));
        }
        Self::new(vec![1.0 - p, p])
    }

    /// Point mass at `symbol` on an alphabet of `size` symbols.
    pub fn point(symbol: usize, size: usize) -> Result<Self> {
        if symbol >= size {
            return invalid(format!("symbol {symbol} outside alphabet of size {size}"));
        }
        let mut p = vec![0.0; size];
        p[symbol] = 1.0;
        Self::new(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Signed weights over the alphabet with zero total mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedMeasure {
    weights: Vec<f64>,
}

impl SignedMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        let scale = weights.iter().map(|w| w.abs()).sum::<f64>().max(1.0);
        if s.abs() > Config::default().prob_sum * scale {
            return invalid(format!("signed measure has total mass {s}"));
        }
        Ok(SignedMeasure { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `(P_1, ..., P_n)` on one alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentList {
    components: Vec<FiniteDistribution>,
    alphabet_size: usize,
}

#[derive(Serialize, Deserialize)]
struct ComponentListJson {
    alphabet_size: usize,
    components: Vec<Vec<f64>>,
}

impl ComponentList {
    pub fn new(components: Vec<FiniteDistribution>) -> Result<Self> {
        let Some(first) = components.first() else {
            return invalid("component list is empty");
        };
        let k = first.len();
        for c in &components {
            if c.len() != k {
                return Err(Error::Dimension { expected: k, got: c.len() });
            }
        }
        let list = ComponentList { components, alphabet_size: k };
        let tol = Config::default().validation;
        let psi = list.psi();
        for (i, m) in psi.iter().enumerate() {
            let s: f64 = m.weights().iter().sum();
            if s.abs() > tol {
                return invalid(format!("centered component {i} has mass {s}"));
            }
        }
        for x in 0..k {
            let s: f64 = psi.iter().map(|m| m.weights()[x]).sum();
            if s.abs() > tol {
                return invalid(format!("centered components do not cancel at symbol {x}"));
            }
        }
        Ok(list)
    }

    /// Builds from raw rows, validating each as a distribution.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(FiniteDistribution::new).collect::<Result<_>>()?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ComponentListJson =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("component list: {e}")))?;
        let list = Self::from_rows(raw.components)?;
        if list.alphabet_size != raw.alphabet_size {
            return Err(Error::Dimension { expected: raw.alphabet_size, got: list.alphabet_size });
        }
        Ok(list)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ComponentListJson {
            alphabet_size: self.alphabet_size,
            components: self.components.iter().map(|c| c.probs.clone()).collect(),
        })
        .expect("component list serializes")
    }

    pub fn components(&self) -> &[FiniteDistribution] {
        &self.components
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Uniform average of the components.
    pub fn marginal(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut m = vec![0.0; self.alphabet_size];
        for c in &self.components {
            for (a, p) in m.iter_mut().zip(&c.probs) {
                *a += p;
            }
        }
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// `P_i - Pbar` for every component.
    pub fn psi(&self) -> Vec<SignedMeasure> {
        let m = self.marginal();
        self.components
            .iter()
            .map(|c| SignedMeasure {
                weights: c.probs.iter().zip(&m).map(|(p, q)| p - q).collect(),
            })
            .collect()
    }

    /// The same list with every component repeated `times` times in a row.
    pub fn replicate(&self, times: usize) -> ComponentList {
        let components = self
            .components
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.clone(), times))
            .collect();
        ComponentList { components, alphabet_size: self.alphabet_size }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Chi2,
    Hellinger2,
    Tv,
    Kl,
    Lecam,
}

impl std::str::FromStr for DivergenceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chi2" => Ok(DivergenceKind::Chi2),
            "hellinger2" => Ok(DivergenceKind::Hellinger2),
            "tv" => Ok(DivergenceKind::Tv),
            "kl" => Ok(DivergenceKind::Kl),
            "lecam" => Ok(DivergenceKind::Lecam),
            _ => invalid(format!("unknown divergence {s}")),
        }
    }
}

pub fn divergence(kind: DivergenceKind, p: &FiniteDistribution, q: &FiniteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension { expected: p.len(), got: q.len() });
    }
    Ok(divergence_slices(kind, &p.probs, &q.probs))
}

/// Divergence between two nonnegative tables of equal length.
pub fn divergence_slices(kind: DivergenceKind, p: &[f64], q: &[f64]) -> f64 {
    match kind {
        DivergenceKind::Chi2 => chi2(p, q),
        DivergenceKind::Hellinger2 => {
            let bc: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
            (2.0 - 2.0 * bc).clamp(0.0, 2.0)
        }
        DivergenceKind::Tv => (0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()).min(1.0),
        DivergenceKind::Kl => {
            let mut s = 0.0;
            for (&a, &b) in p.iter().zip(q) {
                if a > 0.0 {
                    if b <= 0.0 {
                        return f64::INFINITY;
                    }
                    s += a * (a / b).ln();
                }
            }
            s.max(0.0)
        }
        DivergenceKind::Lecam => {
            0.5 * p
                .iter()
                .zip(q)
                .filter(|(a, b)| **a + **b > 0.0)
                .map(|(a, b)| (a - b) * (a - b) / (a + b))
                .sum::<f64>()
        }
    }
}

/// `sum (p - q)^2 / q`; infinite when `p` charges a `q`-null cell.
pub fn chi2(p: &[f64], q: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if b <= 0.0 {
            if a > 0.0 {
                return f64::INFINITY;
            }
            continue;
        }
        s += (a - b) * (a - b) / b;
    }
    s
}

/// `(1 - H^2/2)^{-2}`; infinite for mutually singular pairs.
pub fn delta_from_h2(h2: f64) -> f64 {
    let bc = 1.0 - h2 / 2.0;
    if bc <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (bc * bc)
    }
}

/// Largest divergence over ordered pairs of distinct components (0 for a single component).
pub fn max_pair_divergence(dists: &[FiniteDistribution], kind: DivergenceKind) -> f64 {
    let mut best: f64 = 0.0;
    for (i, p) in dists.iter().enumerate() {
        for (j, q) in dists.iter().enumerate() {
            if i != j {
                best = best.max(divergence_slices(kind, &p.probs, &q.probs));
            }
        }
    }
    best
}

/// Maximum pairwise H^2 singularity `(1 - max H^2/2)^{-2}`.
pub fn max_pair_delta(dists: &[FiniteDistribution]) -> f64 {
    delta_from_h2(max_pair_divergence(dists, DivergenceKind::Hellinger2))
}

fn bruteforce_cells(c: &ComponentList, coords: usize) -> Result<usize> {
    let cfg = Config::default();
    if coords > cfg.bruteforce_n {
        return Err(Error::Cap(format!(
            "{coords} coordinates exceed the enumeration cap {}; use the permanent path",
            cfg.bruteforce_n
        )));
    }
    let cells = (c.alphabet_size as f64).powi(coords as i32);
    if cells > cfg.bruteforce_cells as f64 {
        return Err(Error::Cap(format!("{cells} outcome cells exceed {}", cfg.bruteforce_cells)));
    }
    Ok(cells as usize)
}

/// Decodes a lexicographic cell index into a symbol tuple.
pub fn decode_cell(mut idx: usize, k: usize, len: usize, out: &mut [usize]) {
    for i in (0..len).rev() {
        out[i] = idx % k;
        idx /= k;
    }
}

fn check_tuple(c: &ComponentList, x: &[usize]) -> Result<()> {
    if let Some(&s) = x.iter().find(|&&s| s >= c.alphabet_size) {
        return invalid(format!("symbol {s} outside alphabet of size {}", c.alphabet_size));
    }
    Ok(())
}

/// Probability of the tuple `x` under the permutation mixture.
pub fn permutation_mixture_pmf(c: &ComponentList, x: &[usize]) -> Result<f64> {
    let n = c.n();
    if x.len() != n {
        return Err(Error::Dimension { expected: n, got: x.len() });
    }
    bruteforce_cells(c, n)?;
    check_tuple(c, x)?;
    Ok(pmf_unchecked(c, x))
}

fn pmf_unchecked(c: &ComponentList, x: &[usize]) -> f64 {
    let n = c.n();
    let m = SquareMatrix::from_fn(n, |i, j| c.components[j].probs[x[i]]);
    let perm = permanent_ryser(&m).expect("dimension within enumeration cap");
    (perm / factorial(n)).max(0.0)
}

/// Probability of the tuple `x` under the i.i.d. counterpart.
pub fn iid_mixture_pmf(c: &ComponentList, x: &[usize]) -> Result<f64> {
    if x.len() != c.n() {
        return Err(Error::Dimension { expected: c.n(), got: x.len() });
    }
    bruteforce_cells(c, c.n())?;
    check_tuple(c, x)?;
    let m = c.marginal();
    Ok(x.iter().map(|&s| m[s]).product())
}

/// Full outcome table of the permutation mixture, cells in lexicographic order.
pub fn permutation_mixture_table(c: &ComponentList) -> Result<Vec<f64>> {
    let cells = bruteforce_cells(c, c.n())?;
    let mut x = vec![0; c.n()];
    Ok((0..cells)
        .map(|idx| {
            decode_cell(idx, c.alphabet_size, c.n(), &mut x);
            pmf_unchecked(c, &x)
        })
        .collect())
}

/// Table of the first `k` coordinates of the permutation mixture.
pub fn permutation_marginal_table(c: &ComponentList, k: usize) -> Result<Vec<f64>> {
    let n = c.n();
    if k == 0 || k > n {
        return invalid(format!("marginal order {k} outside 1..={n}"));
    }
    let cells = bruteforce_cells(c, k)?;
    let norm = falling_factorial(n, k);
    let mut y = vec![0; k];
    let mut rows = vec![0.0; k * n];
    Ok((0..cells)
        .map(|idx| {
            decode_cell(idx, c.alphabet_size, k, &mut y);
            for i in 0..k {
                for j in 0..n {
                    rows[i * n + j] = c.components[j].probs[y[i]];
                }
            }
            let s = rectangular_permanent_sum(&rows, k, n).expect("marginal order within cap");
            (s / norm).max(0.0)
        })
        .collect())
}

/// Table of `Pbar^{\otimes len}`.
pub fn iid_table(marginal: &[f64], len: usize) -> Vec<f64> {
    let mut t = vec![1.0];
    for _ in 0..len {
        t = t.iter().flat_map(|a| marginal.iter().map(move |b| a * b)).collect();
    }
    t
}

/// Chi-square between the two laws by enumerating every outcome cell.
pub fn exact_chi2_bruteforce(c: &ComponentList) -> Result<f64> {
    let p = permutation_mixture_table(c)?;
    let q = iid_table(&c.marginal(), c.n());
    Ok(chi2(&p, &q))
}

/// `(1/n) sum_i chi2(P_i || Pbar)`.
pub fn instance_capacity(c: &ComponentList) -> f64 {
    let m = c.marginal();
    c.components.iter().map(|p| chi2(&p.probs, &m)).sum::<f64>() / c.n() as f64
}

/// Mixture matrix with spectral data.
#[derive(Debug, Clone, Serialize)]
pub struct MixtureMatrix {
    pub n: usize,
    /// Row-major `n x n` entries.
    pub entries: Vec<f64>,
    /// Eigenvalues sorted decreasingly, truncated into `[0, 1]`.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, aligned with `eigenvalues`.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub spectral_gap: f64,
    pub trace: f64,
}

impl MixtureMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn as_square(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.n, |i, j| self.get(i, j))
    }

    /// `A - J/n`.
    pub fn centered(&self) -> Vec<f64> {
        let inv = 1.0 / self.n as f64;
        self.entries.iter().map(|a| a - inv).collect()
    }

    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }
}

/// Builds `A`, decomposes it and validates its structural invariants.
pub fn build_mixture_matrix(c: &ComponentList) -> Result<MixtureMatrix> {
    let n = c.n();
    let m = c.marginal();
    for x in 0..c.alphabet_size {
        if m[x] <= 0.0 && c.components.iter().any(|p| p.probs[x] > 0.0) {
            return Err(Error::ZeroMarginal { symbol: x });
        }
    }
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let pi = &c.components[i].probs;
            let pj = &c.components[j].probs;
            let mut s = 0.0;
            for x in 0..c.alphabet_size {
                if m[x] > 0.0 {
                    s += pi[x] * pj[x] / m[x];
                }
            }
            entries[i * n + j] = s / n as f64;
            entries[j * n + i] = s / n as f64;
        }
    }
    let dm = DMatrix::from_row_slice(n, n, &entries);
    let eig = SymmetricEigen::new(dm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let raw: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors: Vec<Vec<f64>> =
        order.iter().map(|&k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
    let tol = Config::default().validation;

    for i in 0..n {
        let row: f64 = entries[i * n..(i + 1) * n].iter().sum();
        if (row - 1.0).abs() > tol {
            return invalid(format!("mixture matrix row {i} sums to {row}"));
        }
    }
    if raw[0] > 1.0 + EIGEN_SLACK || raw[0] < 1.0 - tol || raw[n - 1] < -EIGEN_SLACK {
        return invalid(format!("mixture matrix spectrum [{}, {}] outside [0, 1]", raw[n - 1], raw[0]));
    }
    let eigenvalues: Vec<f64> = raw.iter().map(|l| l.clamp(0.0, 1.0)).collect();
    let trace: f64 = (0..n).map(|i| entries[i * n + i]).sum();
    let lambda2 = eigenvalues.get(1).copied().unwrap_or(0.0);
    let mm = MixtureMatrix { n, entries, eigenvalues, eigenvectors, spectral_gap: 1.0 - lambda2, trace };

    let delta = max_pair_delta(&c.components);
    if delta.is_finite() && mm.spectral_gap < 1.0 / delta - Config::default().comparison {
        return invalid(format!("spectral gap {} below 1/Delta = {}", mm.spectral_gap, 1.0 / delta));
    }
    let cap = instance_capacity(c);
    if trace > 1.0 + cap + Config::default().comparison {
        return invalid(format!("trace {trace} exceeds 1 + capacity {cap}"));
    }
    Ok(mm)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub(crate) fn falling_factorial(n: usize, k: usize) -> f64 {
    ((n - k + 1)..=n).map(|j| j as f64).product()
}

/// Random component list whose entries are all at least `floor`.
pub fn random_component_list<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, floor: f64) -> ComponentList {
    assert!(floor * k as f64 <= 1.0, "floor too large for alphabet");
    let gamma = Gamma::new(1.0, 1.0).expect("unit gamma");
    let rows = (0..n)
        .map(|_| {
            let g: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
            let s: f64 = g.iter().sum();
            let free = 1.0 - floor * k as f64;
            let mut row: Vec<f64> = g.iter().map(|x| floor + free * x / s).collect();
            let t: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= t);
            row
        })
        .collect();
    ComponentList::from_rows(rows).expect("random rows are valid distributions")
}
