//! Matrix permanents and the degree decomposition of `chi2 + 1`.
//!
//! With `Abar = A - J/n` the polynomial `Perm(t Abar + J/n)` equals
//! `(n!/n^n) sum_l S_l t^l`, and
//!
//! | Quantity | Form |
//! |----------|------|
//! | `T_l` | `sum_{|S|=|S'|=l} Perm(Abar_{S,S'})` |
//! | `S_l` | `(n-l)! n^l / n! * T_l` |
//! | `R_l` | `S_l / C(n, l)`, second moment of the degree-`l` centered term |
//!
//! so `sum_l S_l = chi2 + 1` with `S_0 = 1` and `S_1 = 0`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{Config, INTERPOLATION_RESIDUAL, SINGULAR_GAP};
use crate::error::{invalid, Error, Result};
use crate::esp::esp_all;
use crate::mixtures::{falling_factorial, ComponentList, MixtureMatrix};

/// Field elements the kernels run over.
pub trait Scalar:
    Copy + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn norm_sqr(self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// Kahan-compensated accumulator.
#[derive(Clone, Copy)]
struct Kahan<T> {
    sum: T,
    c: T,
}

impl<T: Scalar> Kahan<T> {
    fn new() -> Self {
        Kahan { sum: T::zero(), c: T::zero() }
    }
    fn add(&mut self, x: T) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Dense real `n x n` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return invalid("matrix dimension must be positive");
        }
        if data.len() != n * n {
            return Err(Error::Dimension { expected: n * n, got: data.len() });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return invalid("matrix entries must be finite");
        }
        Ok(SquareMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let data = (0..n * n).map(|k| f(k / n, k % n)).collect();
        SquareMatrix { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Dense complex `n x n` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSquareMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

/// Dense real `rows x cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RectMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `M M^T` as a square matrix.
    pub fn gram(&self) -> SquareMatrix {
        SquareMatrix::from_fn(self.rows, |i, j| {
            (0..self.cols).map(|k| self.get(i, k) * self.get(j, k)).sum()
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixValue {
    Real(SquareMatrix),
    Complex(ComplexSquareMatrix),
}

#[derive(Deserialize)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    complex: bool,
    #[serde(default)]
    imag_rows: Option<Vec<Vec<f64>>>,
}

/// Parses `{"n", "rows", "complex", "imag_rows"}`.
pub fn parse_matrix_json(s: &str) -> Result<MatrixValue> {
    let m: MatrixJson = serde_json::from_str(s).map_err(|e| Error::Parse(format!("matrix: {e}")))?;
    let flat = |rows: &[Vec<f64>]| -> Result<Vec<f64>> {
        if rows.len() != m.n || rows.iter().any(|r| r.len() != m.n) {
            return invalid(format!("matrix rows do not form a {0}x{0} array", m.n));
        }
        Ok(rows.concat())
    };
    let re = SquareMatrix::new(m.n, flat(&m.rows)?)?;
    if !m.complex {
        return Ok(MatrixValue::Real(re));
    }
    let im = match &m.imag_rows {
        Some(rows) => SquareMatrix::new(m.n, flat(rows)?)?.data,
        None => vec![0.0; m.n * m.n],
    };
    let data = re.data.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
    Ok(MatrixValue::Complex(ComplexSquareMatrix { n: m.n, data }))
}

fn check_ryser_cap(n: usize) -> Result<()> {
    let cap = Config::default().ryser_n;
    if n > cap {
        return Err(Error::Cap(format!("permanent of dimension {n} exceeds cap {cap}")));
    }
    Ok(())
}

/// Ryser inclusion-exclusion with Gray-code column updates.
fn ryser<T: Scalar>(n: usize, a: &[T]) -> T {
    let mut row_sums = vec![T::zero(); n];
    let mut acc = Kahan::<T>::new();
    let mut in_set = vec![false; n];
    let total: u64 = 1u64 << n;
    for g in 1..total {
        let j = g.trailing_zeros() as usize;
        in_set[j] = !in_set[j];
        if in_set[j] {
            for (i, r) in row_sums.iter_mut().enumerate() {
                *r = *r + a[i * n + j];
            }
        } else {
            for (i, r) in row_sums.iter_mut().enumerate() {
                *r = *r - a[i * n + j];
            }
        }
        let size = (g ^ (g >> 1)).count_ones() as usize;
        let mut prod = T::one();
        for &r in &row_sums {
            prod = prod * r;
        }
        if (n - size) % 2 == 1 {
            acc.add(-prod);
        } else {
            acc.add(prod);
        }
    }
    acc.sum
}

pub fn permanent_ryser(m: &SquareMatrix) -> Result<f64> {
    check_ryser_cap(m.n)?;
    Ok(ryser(m.n, &m.data))
}

pub fn permanent_ryser_complex(m: &ComplexSquareMatrix) -> Result<Complex64> {
    check_ryser_cap(m.n)?;
    Ok(ryser(m.n, &m.data))
}

/// `sum_{|T|=rows} Perm(a_{:,T})` for a row-major `rows x cols` array.
pub fn rectangular_permanent_sum<T: Scalar>(a: &[T], rows: usize, cols: usize) -> Result<T> {
    if rows > cols {
        return invalid(format!("{rows} rows exceed {cols} columns"));
    }
    if a.len() != rows * cols {
        return Err(Error::Dimension { expected: rows * cols, got: a.len() });
    }
    let cap = Config::default().rect_ell;
    if rows > cap {
        return Err(Error::Cap(format!("{rows} rows exceed cap {cap}")));
    }
    let full = (1usize << rows) - 1;
    let mut dp = vec![T::zero(); full + 1];
    dp[0] = T::one();
    for j in 0..cols {
        for mask in (0..full).rev() {
            let v = dp[mask];
            let mut free = full & !mask;
            while free != 0 {
                let i = free.trailing_zeros() as usize;
                free &= free - 1;
                let dst = mask | (1 << i);
                dp[dst] = dp[dst] + v * a[i * cols + j];
            }
        }
    }
    Ok(dp[full])
}

/// `(n^n/n!) Perm(A) - 1`.
pub fn exact_chi2_permanent(c: &ComponentList) -> Result<f64> {
    let a = crate::mixtures::build_mixture_matrix(c)?;
    chi2_from_matrix(&a)
}

pub fn chi2_from_matrix(a: &MixtureMatrix) -> Result<f64> {
    let p = permanent_ryser(&a.as_square())?;
    Ok(p * inv_flat_permanent(a.n) - 1.0)
}

/// `n^n / n!`, the reciprocal of `Perm(J/n)`.
pub fn inv_flat_permanent(n: usize) -> f64 {
    (1..=n).map(|k| n as f64 / k as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesMethod {
    Interpolation,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesDecomposition {
    pub n: usize,
    pub s: Vec<f64>,
    pub r: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
    pub chi2: f64,
}

impl SeriesDecomposition {
    fn from_s(n: usize, s: Vec<f64>, t: Option<Vec<f64>>) -> Result<Self> {
        let r = s.iter().enumerate().map(|(l, v)| v / binomial(n, l)).collect();
        let chi2 = s.iter().sum::<f64>() - 1.0;
        let out = SeriesDecomposition { n, s, r: Some(r), t, chi2 };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.s[0] - 1.0).abs() > 1e-8 {
            return invalid(format!("S_0 = {}", self.s[0]));
        }
        if self.n >= 1 && self.s[1].abs() > 1e-6 {
            return invalid(format!("S_1 = {}", self.s[1]));
        }
        if let Some((l, v)) = self.s.iter().enumerate().find(|(_, v)| **v < -1e-6) {
            return invalid(format!("S_{l} = {v} is negative"));
        }
        Ok(())
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `n^l (n-l)! / n!`.
fn t_to_s_factor(n: usize, l: usize) -> f64 {
    (0..l).map(|j| n as f64 / (n - j) as f64).product()
}

pub fn s_series(a: &MixtureMatrix, method: SeriesMethod) -> Result<SeriesDecomposition> {
    series_from_centered(&a.centered(), a.n, method)
}

/// Series of `Abar + J/n` for any zero-row-sum `Abar`.
pub fn series_from_centered(abar: &[f64], n: usize, method: SeriesMethod) -> Result<SeriesDecomposition> {
    match method {
        SeriesMethod::Interpolation => series_interpolation(abar, n),
        SeriesMethod::Direct => series_direct(abar, n),
    }
}

fn shifted_polynomial(abar: &[f64], n: usize, t: Complex64) -> Result<Complex64> {
    let inv = 1.0 / n as f64;
    let m = ComplexSquareMatrix { n, data: abar.iter().map(|&x| t * x + inv).collect() };
    Ok(permanent_ryser_complex(&m)? * inv_flat_permanent(n))
}

/// `S_l rho^l` from values on the circle of radius `rho` (a discrete Fourier transform).
fn circle_coefficients(abar: &[f64], n: usize, rho: f64) -> Result<Vec<f64>> {
    let points = n + 1;
    let root = |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / points as f64);
    let values: Vec<Complex64> =
        (0..points).map(|k| shifted_polynomial(abar, n, root(k) * rho)).collect::<Result<_>>()?;
    Ok((0..points)
        .map(|l| {
            let s: Complex64 = values.iter().enumerate().map(|(k, v)| v * root((k * l) % points).conj()).sum();
            s.re / points as f64
        })
        .collect())
}

/// Log of a bound on the magnitude of Ryser's summands at radius `rho`, scaled like `p(t)`.
fn ln_ryser_scale(abar: &[f64], n: usize, rho: f64) -> f64 {
    let inv = 1.0 / n as f64;
    let rows: f64 = (0..n).map(|i| abar[i * n..(i + 1) * n].iter().map(|x| (rho * x).abs() + inv).sum::<f64>().ln()).sum();
    rows + n as f64 * std::f64::consts::LN_2 + inv_flat_permanent(n).ln()
}

/// Coefficients of `p(t) = sum_l S_l t^l` from evaluations on circles of doubling radii; each
/// `S_l` is read off the radius with the smallest rounding bound `scale(rho) / rho^l`, then
/// checked against a fresh evaluation at an off-node point.
fn series_interpolation(abar: &[f64], n: usize) -> Result<SeriesDecomposition> {
    check_ryser_cap(n)?;
    let row_max = (0..n).map(|i| abar[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut radii = vec![1.0];
    while radii.len() < 12 && radii[radii.len() - 1] * row_max < 4.0 {
        radii.push(2.0 * radii[radii.len() - 1]);
    }
    let mut best = vec![(f64::INFINITY, 0.0); n + 1];
    for &rho in &radii {
        let c = circle_coefficients(abar, n, rho)?;
        let scale = ln_ryser_scale(abar, n, rho);
        for (l, v) in c.iter().enumerate() {
            let err = scale - l as f64 * rho.ln();
            if err < best[l].0 {
                best[l] = (err, v / rho.powi(l as i32));
            }
        }
    }
    let coef: Vec<f64> = best.iter().map(|b| b.1).collect();
    let probe = (n / 2) as f64 / n as f64 + 0.5 / n as f64;
    let fresh = shifted_polynomial(abar, n, Complex64::new(probe, 0.0))?.re;
    let fitted = coef.iter().rev().fold(0.0, |acc, c| acc * probe + c);
    let residual = (fresh - fitted).abs() / fresh.abs().max(f64::MIN_POSITIVE);
    if residual > INTERPOLATION_RESIDUAL {
        return Err(Error::IllConditioned { residual });
    }
    SeriesDecomposition::from_s(n, coef, None)
}

fn series_direct(abar: &[f64], n: usize) -> Result<SeriesDecomposition> {
    let cfg = Config::default();
    if n >= usize::BITS as usize - 1 || n > cfg.rect_ell {
        return Err(Error::Cap(format!("direct series for n = {n}")));
    }
    let cost: f64 = (1..=n).map(|l| binomial(n, l) * (n * l) as f64 * 2f64.powi(l as i32)).sum();
    if cost > cfg.direct_series_budget {
        return Err(Error::Cap(format!("direct series cost {cost:e} exceeds budget")));
    }
    let mut t = vec![0.0; n + 1];
    t[0] = 1.0;
    let mut rows = Vec::with_capacity(n * n);
    for mask in 1usize..(1 << n) {
        rows.clear();
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            rows.extend_from_slice(&abar[i * n..(i + 1) * n]);
        }
        let l = mask.count_ones() as usize;
        t[l] += rectangular_permanent_sum(&rows, l, n)?;
    }
    let s = t.iter().enumerate().map(|(l, v)| v * t_to_s_factor(n, l)).collect();
    SeriesDecomposition::from_s(n, s, Some(t))
}

/// `E_{X ~ Pbar^l} [(E_pi prod_{i<l} Psi_{pi(i)}(X_i)/Pbar(X_i))^2]` by enumeration.
pub fn r_ell_enumeration(c: &ComponentList, ell: usize) -> Result<f64> {
    let n = c.n();
    if ell > n {
        return invalid(format!("degree {ell} exceeds n = {n}"));
    }
    let k = c.alphabet_size();
    let tuples = falling_factorial(n, ell);
    let cost = (k as f64).powi(ell as i32) * tuples;
    if cost > Config::default().r_ell_budget {
        return Err(Error::Cap(format!("enumeration cost {cost:e} over budget")));
    }
    let m = c.marginal();
    let support: Vec<usize> = (0..k).filter(|&x| m[x] > 0.0).collect();
    let ratio: Vec<Vec<f64>> = c
        .components()
        .iter()
        .map(|p| (0..k).map(|x| if m[x] > 0.0 { p.probs()[x] / m[x] - 1.0 } else { 0.0 }).collect())
        .collect();
    let injections = injective_maps(ell, n);
    let mut xs = vec![0usize; ell];
    let cells = support.len().pow(ell as u32);
    let mut acc = Kahan::<f64>::new();
    for idx in 0..cells {
        crate::mixtures::decode_cell(idx, support.len(), ell, &mut xs);
        let weight: f64 = xs.iter().map(|&s| m[support[s]]).product();
        let mut inner = Kahan::<f64>::new();
        for map in &injections {
            let mut prod = 1.0;
            for (i, &j) in map.iter().enumerate() {
                prod *= ratio[j][support[xs[i]]];
            }
            inner.add(prod);
        }
        let avg = inner.sum / tuples;
        acc.add(weight * avg * avg);
    }
    Ok(acc.sum)
}

fn injective_maps(ell: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(ell);
    let mut used = vec![false; n];
    fn rec(ell: usize, n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == ell {
            out.push(cur.clone());
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(ell, n, cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    rec(ell, n, &mut cur, &mut used, &mut out);
    out
}

/// Complete homogeneous symmetric sums `h_0..h_degree` of `values`.
pub fn complete_homogeneous(values: &[f64], degree: usize) -> Vec<f64> {
    let mut h = vec![0.0; degree + 1];
    h[0] = 1.0;
    for &v in values {
        for d in 1..=degree {
            h[d] += v * h[d - 1];
        }
    }
    h
}

/// `prod_{i>=2} 1/(1 - lambda_i)`, infinite once `lambda_2` reaches one.
pub fn entire_sum_bound(eigenvalues: &[f64]) -> f64 {
    let mut log = 0.0;
    for &l in eigenvalues.iter().skip(1) {
        if l >= 1.0 - SINGULAR_GAP {
            return f64::INFINITY;
        }
        log -= (1.0 - l).ln();
    }
    log.exp()
}

/// `3 sqrt(l+1) h_l(lambda_2, ..., lambda_n)` for every `l`.
pub fn individual_sum_bounds(eigenvalues: &[f64]) -> Vec<f64> {
    let n = eigenvalues.len();
    let tail = if n > 1 { &eigenvalues[1..] } else { &[][..] };
    complete_homogeneous(tail, n)
        .iter()
        .enumerate()
        .map(|(l, h)| 3.0 * ((l + 1) as f64).sqrt() * h)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub upper: f64,
    pub permanent: Option<f64>,
    pub holds: bool,
}

/// `n!/n^n <= Perm(A) <= (n!/n^n) prod_{i>=2} 1/(1 - lambda_i)`.
pub fn permanent_sandwich(a: &MixtureMatrix) -> Sandwich {
    let lower = 1.0 / inv_flat_permanent(a.n);
    let upper = lower * entire_sum_bound(&a.eigenvalues);
    let permanent = permanent_ryser(&a.as_square()).ok();
    let holds = match permanent {
        Some(p) => p >= lower - 1e-10 && (upper.is_infinite() || p <= upper + 1e-8 * upper),
        None => true,
    };
    Sandwich { lower, upper, permanent, holds }
}

/// `P = U D^{1/2}` so that `P P^T = A`.
pub fn wick_factor(a: &MixtureMatrix) -> RectMatrix {
    factor_from(a, 0)
}

/// `P~` built from every eigenpair except the leading one, so `P~ P~^T = A - J/n`.
pub fn wick_factor_centered(a: &MixtureMatrix) -> RectMatrix {
    factor_from(a, 1)
}

fn factor_from(a: &MixtureMatrix, skip: usize) -> RectMatrix {
    let n = a.n;
    let cols = n - skip;
    let mut data = vec![0.0; n * cols];
    for (c, k) in (skip..n).enumerate() {
        let s = a.eigenvalues[k].sqrt();
        for i in 0..n {
            data[i * cols + c] = a.eigenvectors[k][i] * s;
        }
    }
    RectMatrix { rows: n, cols, data }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WickTarget {
    /// `E prod_i |(Pz)_i|^2 = Perm(P P^T)`.
    Permanent,
    /// `n^l (n-l)!/n! E |e_l(Pz)|^2 = S_l` of `P P^T + J/n`.
    Series { ell: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WickResult {
    pub estimate: f64,
    pub stderr: f64,
    pub target: f64,
}

impl WickResult {
    /// Deviation in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.stderr == 0.0 {
            if self.estimate == self.target { 0.0 } else { f64::INFINITY }
        } else {
            (self.estimate - self.target).abs() / self.stderr
        }
    }
}

const WICK_CHUNK: u64 = 4096;

/// Monte Carlo estimate of a complex-Gaussian moment against its exact value.
pub fn wick_mc_check(p: &RectMatrix, target: WickTarget, samples: u64, seed: u64) -> Result<WickResult> {
    if samples < 1000 {
        return invalid("at least 1000 samples are required");
    }
    let n = p.rows;
    let exact = match target {
        WickTarget::Permanent => permanent_ryser(&p.gram())?,
        WickTarget::Series { ell } => {
            if ell > n {
                return invalid(format!("degree {ell} exceeds n = {n}"));
            }
            series_from_centered(&p.gram().data, n, SeriesMethod::Direct)?.s[ell]
        }
    };
    let scale = match target {
        WickTarget::Permanent => 1.0,
        WickTarget::Series { ell } => t_to_s_factor(n, ell),
    };
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut z = vec![Complex64::zero(); p.cols];
    let mut y = vec![Complex64::zero(); n];
    let mut sum = Kahan::<f64>::new();
    let mut sum_sq = Kahan::<f64>::new();
    let mut drawn = 0u64;
    let mut stream = 0u64;
    while drawn < samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        stream += 1;
        let batch = WICK_CHUNK.min(samples - drawn);
        for _ in 0..batch {
            for zk in z.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *zk = Complex64::new(re * half, im * half);
            }
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = (0..p.cols).map(|k| z[k] * p.get(i, k)).sum();
            }
            let v = match target {
                WickTarget::Permanent => y.iter().map(|v| v.norm_sqr()).product::<f64>(),
                WickTarget::Series { ell } => scale * esp_all(&y)[ell].norm_sqr(),
            };
            sum.add(v);
            sum_sq.add(v * v);
        }
        drawn += batch;
    }
    let m = samples as f64;
    let mean = sum.sum / m;
    let var = ((sum_sq.sum / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok(WickResult { estimate: mean, stderr: (var / m).sqrt(), target: exact })
}

/// Brute-force permanent by summing over all permutations (test oracle).
pub fn permanent_naive(m: &SquareMatrix) -> f64 {
    let n = m.n;
    let maps = injective_maps(n, n);
    maps.iter().map(|p| p.iter().enumerate().map(|(i, &j)| m.get(i, j)).product::<f64>()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixtures::{build_mixture_matrix, exact_chi2_bruteforce, random_component_list, FiniteDistribution};
    use proptest::prelude::*;

    fn two_bern() -> ComponentList {
        ComponentList::new(vec![
            FiniteDistribution::bernoulli(0.2).unwrap(),
            FiniteDistribution::bernoulli(0.8).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn ryser_examples() {
        assert!((permanent_ryser(&SquareMatrix::identity(3)).unwrap() - 1.0).abs() < 1e-15);
        let j3 = SquareMatrix::from_fn(3, |_, _| 1.0);
        assert!((permanent_ryser(&j3).unwrap() - 6.0).abs() < 1e-13);
        let a = SquareMatrix::new(2, vec![0.68, 0.32, 0.32, 0.68]).unwrap();
        assert!((permanent_ryser(&a).unwrap() - 0.5648).abs() < 1e-15);
        let big = SquareMatrix::identity(29);
        assert!(matches!(permanent_ryser(&big), Err(Error::Cap(_))));
    }

    #[test]
    fn complex_ryser_matches_definition() {
        let data: Vec<Complex64> = (0..9).map(|k| Complex64::new(k as f64 * 0.3 - 1.0, (k * k) as f64 * 0.1)).collect();
        let m = ComplexSquareMatrix { n: 3, data: data.clone() };
        let maps = injective_maps(3, 3);
        let want: Complex64 =
            maps.iter().map(|p| p.iter().enumerate().map(|(i, &j)| data[i * 3 + j]).product::<Complex64>()).sum();
        assert!((permanent_ryser_complex(&m).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn matrix_json() {
        let v = parse_matrix_json(r#"{"n":2,"rows":[[1,2],[3,4]],"complex":false}"#).unwrap();
        assert!(matches!(v, MatrixValue::Real(_)));
        let c = parse_matrix_json(r#"{"n":1,"rows":[[1]],"complex":true,"imag_rows":[[2]]}"#).unwrap();
        match c {
            MatrixValue::Complex(m) => assert_eq!(m.data[0], Complex64::new(1.0, 2.0)),
            _ => panic!("expected complex"),
        }
        assert!(parse_matrix_json(r#"{"n":2,"rows":[[1,2]]}"#).is_err());
    }

    #[test]
    fn rectangular_examples() {
        let row = [0.5, 1.5, -2.0, 4.0];
        assert!((rectangular_permanent_sum(&row, 1, 4).unwrap() - 4.0).abs() < 1e-15);
        let ones = [1.0; 6];
        assert!((rectangular_permanent_sum(&ones, 2, 3).unwrap() - 6.0).abs() < 1e-15);
        let centered = [1.0, -2.0, 1.0];
        assert!(rectangular_permanent_sum(&centered, 1, 3).unwrap().abs() < 1e-15);
        assert!(rectangular_permanent_sum(&ones, 3, 2).is_err());
    }

    #[test]
    fn chi2_permanent_examples() {
        assert!((exact_chi2_permanent(&two_bern()).unwrap() - 0.1296).abs() < 1e-14);
        let p = FiniteDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        let same = ComponentList::new(vec![p; 5]).unwrap();
        assert!(exact_chi2_permanent(&same).unwrap().abs() < 1e-12);
        let singular = ComponentList::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!((exact_chi2_permanent(&singular).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn series_examples() {
        let a = build_mixture_matrix(&two_bern()).unwrap();
        for method in [SeriesMethod::Interpolation, SeriesMethod::Direct] {
            let s = s_series(&a, method).unwrap();
            assert!((s.s[0] - 1.0).abs() < 1e-12);
            assert!(s.s[1].abs() < 1e-12);
            assert!((s.s[2] - 0.1296).abs() < 1e-12);
        }
        let t = s_series(&a, SeriesMethod::Direct).unwrap().t.unwrap();
        assert!((t[2] - 2.0 * 0.18 * 0.18).abs() < 1e-14);
        let p = FiniteDistribution::new(vec![0.4, 0.6]).unwrap();
        let flat = build_mixture_matrix(&ComponentList::new(vec![p; 4]).unwrap()).unwrap();
        let s = s_series(&flat, SeriesMethod::Interpolation).unwrap();
        assert!((s.s[0] - 1.0).abs() < 1e-12 && s.s[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn r_ell_examples() {
        let c = two_bern();
        assert!(r_ell_enumeration(&c, 1).unwrap().abs() < 1e-15);
        assert!((r_ell_enumeration(&c, 2).unwrap() - 0.1296).abs() < 1e-14);
        let p = FiniteDistribution::new(vec![0.4, 0.6]).unwrap();
        let same = ComponentList::new(vec![p; 3]).unwrap();
        assert!(r_ell_enumeration(&same, 2).unwrap().abs() < 1e-15);
        assert!((r_ell_enumeration(&same, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sandwich_examples() {
        let a = build_mixture_matrix(&two_bern()).unwrap();
        let s = permanent_sandwich(&a);
        assert!((s.lower - 0.5).abs() < 1e-15);
        assert!((s.upper - 0.78125).abs() < 1e-12);
        assert!(s.holds);
        let singular = ComponentList::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = permanent_sandwich(&build_mixture_matrix(&singular).unwrap());
        assert!(s.upper.is_infinite() && s.holds);
    }

    #[test]
    fn homogeneous_sums() {
        let h = complete_homogeneous(&[0.5, 0.25], 3);
        assert!((h[1] - 0.75).abs() < 1e-15);
        assert!((h[2] - (0.25 + 0.125 + 0.0625)).abs() < 1e-15);
    }

    #[test]
    fn wick_smoke() {
        let id = RectMatrix { rows: 2, cols: 2, data: vec![1.0, 0.0, 0.0, 1.0] };
        let r = wick_mc_check(&id, WickTarget::Permanent, 20_000, 1).unwrap();
        assert!((r.target - 1.0).abs() < 1e-15);
        assert!(r.z_score() < 4.0);
        let a = build_mixture_matrix(&two_bern()).unwrap();
        let r = wick_mc_check(&wick_factor(&a), WickTarget::Permanent, 20_000, 2).unwrap();
        assert!((r.target - 0.5648).abs() < 1e-12 && r.z_score() < 4.0);
        let r = wick_mc_check(&wick_factor_centered(&a), WickTarget::Series { ell: 2 }, 20_000, 3).unwrap();
        assert!((r.target - 0.1296).abs() < 1e-12 && r.z_score() < 4.0);
        assert!(wick_mc_check(&id, WickTarget::Permanent, 10, 1).is_err());
    }

    proptest! {
        #[test]
        fn ryser_matches_naive(seed in any::<u64>(), n in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = SquareMatrix::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let a = permanent_ryser(&m).unwrap();
            let b = permanent_naive(&m);
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }

        #[test]
        fn rectangular_full_equals_permanent(seed in any::<u64>(), n in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = SquareMatrix::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let a = rectangular_permanent_sum(&m.data, n, n).unwrap();
            let b = permanent_ryser(&m).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }

        #[test]
        fn series_sums_to_chi2(seed in any::<u64>(), n in 1usize..=5, k in 2usize..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_component_list(&mut rng, n, k, 0.05);
            let a = build_mixture_matrix(&c).unwrap();
            let direct = s_series(&a, SeriesMethod::Direct).unwrap();
            let exact = exact_chi2_bruteforce(&c).unwrap();
            prop_assert!((direct.chi2 - exact).abs() <= 1e-9 * (1.0 + exact));
            let hb = individual_sum_bounds(&a.eigenvalues);
            for (s, b) in direct.s.iter().zip(&hb) {
                prop_assert!(*s <= b + 1e-10);
            }
            prop_assert!(direct.chi2 + 1.0 <= entire_sum_bound(&a.eigenvalues) * (1.0 + 1e-10));
        }
    }
}
