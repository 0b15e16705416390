//! Upper bounds on the permutation-vs-i.i.d. chi-square, their corollaries,
//! and the worst-case constructions showing the exponent in `C` is needed.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::capacity::{capacity_estimate, family_functionals, union_capacity_bound, FamilySpec};
use crate::config::{Config, SINGULAR_GAP};
use crate::error::{invalid, Error, Result};
use crate::mixtures::{
    build_mixture_matrix, chi2, divergence_slices, instance_capacity, iid_table, max_pair_delta,
    max_pair_divergence, permutation_marginal_table, permutation_mixture_table, ComponentList, DivergenceKind,
    FiniteDistribution,
};
use crate::permanent::{binomial, exact_chi2_permanent, permanent_ryser, s_series, SeriesMethod, SquareMatrix};
use crate::report::{ser_f64, ser_opt_f64};

/// `(ub1, ub2, ub3)` for `n` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainBounds {
    #[serde(serialize_with = "ser_f64")]
    pub ub1: f64,
    #[serde(serialize_with = "ser_f64")]
    pub ub2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub ub3: f64,
}

impl MainBounds {
    /// Smallest of the three; infinite when none is available.
    pub fn min(&self) -> f64 {
        self.ub1.min(self.ub2).min(self.ub3)
    }
}

/// `ub1 = 10 sum_{l=2}^n c^l`, `ub2 = (e Delta)^c - 1`, `ub3 = (1 + D)^{1+c} - 1`.
pub fn thm_main_bounds(n: usize, c: f64, delta_h2: f64, d_chi2: f64) -> MainBounds {
    MainBounds { ub1: geometric_bound(n, c), ub2: singularity_bound(c, delta_h2), ub3: diameter_bound(c, d_chi2) }
}

fn geometric_bound(n: usize, c: f64) -> f64 {
    if n < 2 || c == 0.0 {
        return 0.0;
    }
    if c.is_infinite() || c.is_nan() {
        return f64::INFINITY;
    }
    let k = (n - 1) as f64;
    if c == 1.0 {
        return 10.0 * k;
    }
    // 10 c^2 (c^{n-1} - 1) / (c - 1), in logs
    let lc = c.ln();
    let ratio = ((k * lc).exp_m1() / (c - 1.0)).abs();
    let v = (10f64.ln() + 2.0 * lc + ratio.ln()).exp();
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn singularity_bound(c: f64, delta: f64) -> f64 {
    if delta.is_infinite() || c.is_infinite() {
        return f64::INFINITY;
    }
    (c * (1.0 + delta.ln())).exp_m1()
}

fn diameter_bound(c: f64, d: f64) -> f64 {
    if d.is_infinite() || c.is_infinite() {
        return f64::INFINITY;
    }
    ((1.0 + c) * d.ln_1p()).exp_m1()
}

/// `1/sqrt(1 - lambda_2^2) - 1`.
pub fn spectral_lower(lambda2: f64) -> f64 {
    if lambda2 >= 1.0 - SINGULAR_GAP {
        return f64::INFINITY;
    }
    1.0 / (1.0 - lambda2 * lambda2).sqrt() - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Instance,
    Family,
    UserSupplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub n: usize,
    #[serde(serialize_with = "ser_f64")]
    pub c: f64,
    #[serde(serialize_with = "ser_f64")]
    pub delta: f64,
    #[serde(serialize_with = "ser_f64")]
    pub d: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(serialize_with = "ser_opt_f64")]
    pub exact_chi2: Option<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub ub1: f64,
    #[serde(serialize_with = "ser_f64")]
    pub ub2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub ub3: f64,
    #[serde(serialize_with = "ser_f64")]
    pub lower_spectral: f64,
    pub inputs: BoundInputs,
}

impl BoundReport {
    pub fn bounds(&self) -> MainBounds {
        MainBounds { ub1: self.ub1, ub2: self.ub2, ub3: self.ub3 }
    }

    /// Exact value below the smallest available bound, with slack `1e-8 (1 + min)`.
    pub fn holds(&self) -> bool {
        match self.exact_chi2 {
            None => true,
            Some(x) => {
                let m = self.bounds().min();
                x >= -Config::default().comparison && x <= m + Config::default().comparison * (1.0 + m)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.holds() {
            Ok(())
        } else {
            invalid(format!("exact chi2 {:?} exceeds min bound {}", self.exact_chi2, self.bounds().min()))
        }
    }
}

/// `(C, Delta, D)` of the components themselves.
pub fn instance_functionals(c: &ComponentList) -> (f64, f64, f64) {
    (
        instance_capacity(c),
        max_pair_delta(c.components()),
        max_pair_divergence(c.components(), DivergenceKind::Chi2),
    )
}

fn exact_if_feasible(c: &ComponentList) -> Result<Option<f64>> {
    if c.n() > Config::default().ryser_n {
        return Ok(None);
    }
    exact_chi2_permanent(c).map(Some)
}

/// Bounds from instance functionals, the exact value and the spectral lower bound.
pub fn evaluate_instance(c: &ComponentList) -> Result<BoundReport> {
    let (cap, delta, d) = instance_functionals(c);
    let inputs = BoundInputs { n: c.n(), c: cap, delta, d, provenance: Provenance::Instance };
    evaluate_with_inputs(c, inputs)
}

/// Same as [`evaluate_instance`] with `(C, Delta, D)` taken from a family containing the components.
pub fn evaluate_with_family(c: &ComponentList, family: &FamilySpec, seed: u64) -> Result<BoundReport> {
    let f = family_functionals(family, seed)?;
    let inputs =
        BoundInputs { n: c.n(), c: f.c_chi2_upper, delta: f.delta_h2, d: f.d_chi2, provenance: Provenance::Family };
    evaluate_with_inputs(c, inputs)
}

pub fn evaluate_with_inputs(c: &ComponentList, inputs: BoundInputs) -> Result<BoundReport> {
    if inputs.n != c.n() {
        return Err(Error::Dimension { expected: c.n(), got: inputs.n });
    }
    let a = build_mixture_matrix(c)?;
    let b = thm_main_bounds(inputs.n, inputs.c, inputs.delta, inputs.d);
    Ok(BoundReport {
        exact_chi2: exact_if_feasible(c)?,
        ub1: b.ub1,
        ub2: b.ub2,
        ub3: b.ub3,
        lower_spectral: spectral_lower(a.lambda2()),
        inputs,
    })
}

/// `S_0..S_n`, by subsets when affordable and by interpolation otherwise.
pub fn series_values(c: &ComponentList) -> Result<Vec<f64>> {
    let a = build_mixture_matrix(c)?;
    match s_series(&a, SeriesMethod::Direct) {
        Err(Error::Cap(_)) => Ok(s_series(&a, SeriesMethod::Interpolation)?.s),
        r => Ok(r?.s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeFinetti {
    pub k: usize,
    #[serde(serialize_with = "ser_f64")]
    pub exact: f64,
    #[serde(serialize_with = "ser_f64")]
    pub bound: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub bruteforce: Option<f64>,
}

/// `sum_{l=2}^k C(k,l)/C(n,l) S_l` given the full series.
pub fn definetti_from_series(s: &[f64], k: usize) -> f64 {
    let n = s.len() - 1;
    (2..=k).map(|l| binomial(k, l) / binomial(n, l) * s[l]).sum()
}

/// Chi-square between the first `k` coordinates of the permutation mixture and `Pbar^{⊗k}`.
pub fn marginal_chi2_bruteforce(c: &ComponentList, k: usize) -> Result<f64> {
    let p = permutation_marginal_table(c, k)?;
    Ok(chi2(&p, &iid_table(&c.marginal(), k)))
}

pub fn definetti_bound_and_exact(c: &ComponentList, k: usize) -> Result<DeFinetti> {
    let n = c.n();
    if k == 0 || k > n {
        return invalid(format!("k = {k} outside 1..={n}"));
    }
    let s = series_values(c)?;
    let exact = definetti_from_series(&s, k);
    let (cap, delta, d) = instance_functionals(c);
    let b = thm_main_bounds(n, cap, delta, d);
    let bound = if k < 2 { 0.0 } else { (k * (k - 1)) as f64 / (n * (n - 1)) as f64 * b.ub1.min(b.ub2) };
    let cfg = Config::default();
    let feasible = k <= cfg.bruteforce_n && (c.alphabet_size() as f64).powi(k as i32) <= cfg.bruteforce_cells as f64;
    let bruteforce = if feasible { Some(marginal_chi2_bruteforce(c, k)?) } else { None };
    Ok(DeFinetti { k, exact, bound, bruteforce })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoMixtures {
    #[serde(serialize_with = "ser_f64")]
    pub tv2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub middle: f64,
    #[serde(serialize_with = "ser_f64")]
    pub intermediate: f64,
    #[serde(serialize_with = "ser_f64")]
    pub bound: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c: f64,
    #[serde(serialize_with = "ser_f64")]
    pub delta: f64,
    #[serde(serialize_with = "ser_f64")]
    pub d: f64,
}

impl TwoMixtures {
    /// `tv2 <= middle <= intermediate <= bound`, each step with relative slack 1e-8.
    pub fn holds(&self) -> bool {
        let le = |a: f64, b: f64| a <= b + Config::default().comparison * (1.0 + b.abs());
        le(self.tv2, self.middle) && le(self.middle, self.intermediate) && le(self.intermediate, self.bound)
    }
}

/// Mixtures with first component `p1` versus `q1`, the remaining `n - 1` components shared.
pub fn two_mixtures_check(
    shared: &[FiniteDistribution],
    p1: &FiniteDistribution,
    q1: &FiniteDistribution,
) -> Result<TwoMixtures> {
    if shared.is_empty() {
        return invalid("two-mixtures check needs at least one shared component");
    }
    let n = shared.len() + 1;
    let with = |first: &FiniteDistribution| {
        let mut v = vec![first.clone()];
        v.extend_from_slice(shared);
        ComponentList::new(v)
    };
    let pn = permutation_mixture_table(&with(p1)?)?;
    let qn = permutation_mixture_table(&with(q1)?)?;
    let shared_list = ComponentList::new(shared.to_vec())?;
    let r = iid_table(&shared_list.marginal(), n);

    let tv: f64 = 0.5 * pn.iter().zip(&qn).map(|(a, b)| (a - b).abs()).sum::<f64>();
    let mut middle = 0.0;
    for ((a, b), w) in pn.iter().zip(&qn).zip(&r) {
        let d = a - b;
        if d != 0.0 {
            middle += if *w > 0.0 { d * d / w } else { f64::INFINITY };
        }
    }
    middle *= 0.25;

    let mut all = vec![p1.clone(), q1.clone()];
    all.extend_from_slice(shared);
    let d = max_pair_divergence(&all, DivergenceKind::Chi2);
    let delta = max_pair_delta(&all);
    let c = instance_capacity(&shared_list);
    let s = series_values(&shared_list)?;
    let weighted: f64 = (1..=n).map(|l| l as f64 * s[l - 1]).sum();
    let intermediate = if d == 0.0 { 0.0 } else { d / n as f64 * weighted };
    let bound = if d == 0.0 {
        0.0
    } else if d.is_infinite() || delta.is_infinite() {
        f64::INFINITY
    } else {
        (3f64.ln() + d.ln() + 3.0 * c * (1.0 + delta.ln()) - (n as f64).ln()).exp()
    };
    Ok(TwoMixtures { tv2: tv * tv, middle, intermediate, bound, c, delta, d })
}

/// `M sqrt(6 n D (e Delta)^{3C})`.
pub fn eb_risk_gap_bound(m_loss: f64, n: usize, c: f64, delta: f64, d: f64) -> Result<f64> {
    if m_loss < 0.0 || c < 0.0 || d < 0.0 || delta < 1.0 || m_loss.is_nan() || c.is_nan() || d.is_nan() || delta.is_nan()
    {
        return invalid(format!("risk-gap inputs M={m_loss}, C={c}, Delta={delta}, D={d}"));
    }
    if m_loss == 0.0 || d == 0.0 || n == 0 {
        return Ok(0.0);
    }
    if m_loss.is_infinite() || d.is_infinite() || delta.is_infinite() || c.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let half = 0.5 * (6f64.ln() + (n as f64).ln() + d.ln() + 3.0 * c * (1.0 + delta.ln()));
    Ok((m_loss.ln() + half).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutualInfoGap {
    #[serde(serialize_with = "ser_f64")]
    pub gap: f64,
    #[serde(serialize_with = "ser_f64")]
    pub ub: f64,
}

/// `n I(theta_1; X_1) - I(theta; X)` as `KL(P_n || Q_n)`, against `min(ub1, C (1 + ln Delta))`.
pub fn mutual_info_gap(c: &ComponentList) -> Result<MutualInfoGap> {
    let p = permutation_mixture_table(c)?;
    let q = iid_table(&c.marginal(), c.n());
    let gap = divergence_slices(DivergenceKind::Kl, &p, &q);
    let (cap, delta, _) = instance_functionals(c);
    let log_route = if delta.is_infinite() { f64::INFINITY } else { cap * (1.0 + delta.ln()) };
    Ok(MutualInfoGap { gap, ub: geometric_bound(c.n(), cap).min(log_route) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase {
    pub m: usize,
    pub n: usize,
    #[serde(serialize_with = "ser_f64")]
    pub delta: f64,
    pub matrix: SquareMatrix,
    pub eigenvalues: Vec<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub trace: f64,
    #[serde(serialize_with = "ser_opt_f64")]
    pub permanent: Option<f64>,
    #[serde(serialize_with = "ser_f64")]
    pub permanent_lower: f64,
}

/// `m = ceil(C)`, `n = ceil(1 / (2 ln(1/(1-Delta))))`.
pub fn worst_case_dims(c_target: f64, delta: f64) -> Result<(usize, usize)> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("Delta = {delta} outside (0, 1)"));
    }
    if !(c_target >= 1.0) || c_target.is_infinite() {
        return invalid(format!("capacity target {c_target} must be finite and at least 1"));
    }
    let m = c_target.ceil() as usize;
    let n = (1.0 / (2.0 * (1.0 / (1.0 - delta)).ln())).ceil().max(1.0) as usize;
    Ok((m, n))
}

pub fn worst_case_matrix(c_target: f64, delta: f64) -> Result<WorstCase> {
    let (m, n) = worst_case_dims(c_target, delta)?;
    let w = kronecker_worst_case(m, n, delta)?;
    if w.trace > 1.0 + c_target + Config::default().validation {
        return invalid(format!("trace {} above 1 + C = {}", w.trace, 1.0 + c_target));
    }
    Ok(w)
}

/// `((Delta/m) J_m + (1 - Delta) I_m) ⊗ (J_n / n)` with its invariants checked.
pub fn kronecker_worst_case(m: usize, n: usize, delta: f64) -> Result<WorstCase> {
    if m == 0 || n == 0 || !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("worst case needs m, n >= 1 and Delta in (0, 1]; got m={m}, n={n}, Delta={delta}"));
    }
    let cfg = Config::default();
    let size = m * n;
    if size > cfg.worst_case_size {
        return Err(Error::Cap(format!("worst-case matrix m={m}, n={n} has size {size} > {}", cfg.worst_case_size)));
    }
    let outer = |a: usize, b: usize| delta / m as f64 + if a == b { 1.0 - delta } else { 0.0 };
    let matrix = SquareMatrix::from_fn(size, |i, j| outer(i / n, j / n) / n as f64);
    let tol = cfg.validation;

    for i in 0..size {
        let row: f64 = (0..size).map(|j| matrix.get(i, j)).sum();
        let col: f64 = (0..size).map(|j| matrix.get(j, i)).sum();
        if (row - 1.0).abs() > tol || (col - 1.0).abs() > tol {
            return invalid(format!("row/column {i} sums {row}, {col}"));
        }
    }
    let eig = SymmetricEigen::new(DMatrix::from_fn(size, size, |i, j| matrix.get(i, j)));
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let expected = worst_case_spectrum(m, n, delta);
    if let Some((k, (got, want))) =
        eigenvalues.iter().zip(&expected).enumerate().find(|(_, (g, w))| (*g - *w).abs() > tol)
    {
        return invalid(format!("eigenvalue {k} is {got}, expected {want}"));
    }
    let trace: f64 = (0..size).map(|i| matrix.get(i, i)).sum();
    let want_trace = 1.0 + (m as f64 - 1.0) * (1.0 - delta);
    if (trace - want_trace).abs() > tol {
        return invalid(format!("trace {trace}, expected {want_trace}"));
    }
    let ln_lower = m as f64 * (crate::mixtures::factorial(n).ln() + n as f64 * ((1.0 - delta) / n as f64).ln());
    let permanent_lower = ln_lower.exp();
    let permanent = if size <= 20 { Some(permanent_ryser(&matrix)?) } else { None };
    if let Some(p) = permanent {
        if p < permanent_lower * (1.0 - cfg.comparison) {
            return invalid(format!("permanent {p} below block lower bound {permanent_lower}"));
        }
    }
    Ok(WorstCase { m, n, delta, matrix, eigenvalues, trace, permanent, permanent_lower })
}

/// `{1, (1 - Delta) x (m - 1), 0 x m(n - 1)}`, decreasing.
pub fn worst_case_spectrum(m: usize, n: usize, delta: f64) -> Vec<f64> {
    let mut v = vec![1.0];
    v.extend(std::iter::repeat_n(1.0 - delta, m - 1));
    v.extend(std::iter::repeat_n(0.0, m * (n - 1)));
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstFamily {
    pub m: usize,
    pub members: Vec<Vec<f64>>,
    #[serde(serialize_with = "ser_f64")]
    pub delta_h2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_upper: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_estimate: f64,
}

/// `P_i = sqrt(Delta) delta_0 + (1 - sqrt(Delta)) delta_i` on `{0, ..., m}`, `i = 1..m`.
pub fn worst_case_members(m: usize, delta: f64) -> Result<Vec<FiniteDistribution>> {
    if m == 0 || !(delta > 0.0 && delta <= 1.0) {
        return invalid(format!("family needs m >= 1 and Delta in (0, 1]; got m={m}, Delta={delta}"));
    }
    let r = delta.sqrt();
    (1..=m)
        .map(|i| {
            let mut p = vec![0.0; m + 1];
            p[0] = r;
            p[i] += 1.0 - r;
            FiniteDistribution::new(p)
        })
        .collect()
}

pub fn worst_case_family(c_target: f64, delta: f64) -> Result<FamilySpec> {
    if !(c_target >= 1.0) || c_target.is_infinite() {
        return invalid(format!("capacity target {c_target} must be finite and at least 1"));
    }
    Ok(FamilySpec::explicit(&worst_case_members(c_target.ceil() as usize, delta)?))
}

/// Checks `Delta_H2 = 1/Delta` and `C <= m - 1` for the worst-case family.
pub fn verify_worst_family(m: usize, delta: f64, seed: u64) -> Result<WorstFamily> {
    let members = worst_case_members(m, delta)?;
    let delta_h2 = max_pair_delta(&members);
    let tol = Config::default().validation;
    if m >= 2 && delta < 1.0 && (delta_h2 * delta - 1.0).abs() > tol {
        return invalid(format!("Delta_H2 = {delta_h2}, expected {}", 1.0 / delta));
    }
    let c_upper = union_capacity_bound(&vec![0.0; m])?;
    let c_estimate = capacity_estimate(&members, 4, seed)?;
    if c_estimate > c_upper + Config::default().comparison {
        return invalid(format!("capacity estimate {c_estimate} above m - 1 = {c_upper}"));
    }
    Ok(WorstFamily {
        m,
        members: members.iter().map(|p| p.probs().to_vec()).collect(),
        delta_h2,
        c_upper,
        c_estimate,
    })
}

/// Exact chi-square of the list replicated `1..=max_times` times.
pub fn replication_trend(c: &ComponentList, max_times: usize) -> Result<Vec<f64>> {
    (1..=max_times).map(|r| exact_chi2_permanent(&c.replicate(r))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenshteinRitov {
    #[serde(serialize_with = "ser_f64")]
    pub max_chi2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub bound: f64,
    #[serde(serialize_with = "ser_f64")]
    pub max_h2: f64,
    #[serde(serialize_with = "ser_f64")]
    pub h2_bound: f64,
}

impl GreenshteinRitov {
    pub fn holds(&self) -> bool {
        let le = |a: f64, b: f64| a <= b + Config::default().comparison * (1.0 + b.abs());
        le(self.max_chi2, self.bound) && le(self.max_h2, self.h2_bound)
    }
}

/// Leave-one-out permutation mixtures of `n + 1` components against their average.
pub fn greenshtein_ritov_check(components: &[FiniteDistribution]) -> Result<GreenshteinRitov> {
    let n1 = components.len();
    if n1 < 2 {
        return invalid("leave-one-out check needs at least two components");
    }
    let tables: Vec<Vec<f64>> = (0..n1)
        .map(|i| {
            let rest: Vec<FiniteDistribution> =
                components.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
            permutation_mixture_table(&ComponentList::new(rest)?)
        })
        .collect::<Result<_>>()?;
    let cells = tables[0].len();
    let avg: Vec<f64> = (0..cells).map(|x| tables.iter().map(|t| t[x]).sum::<f64>() / n1 as f64).collect();
    let max_chi2 = tables.iter().map(|t| chi2(&avg, t)).fold(0.0, f64::max);
    let mut max_h2: f64 = 0.0;
    for i in 0..n1 {
        for j in i + 1..n1 {
            max_h2 = max_h2.max(divergence_slices(DivergenceKind::Hellinger2, &tables[i], &tables[j]));
        }
    }
    let d = max_pair_divergence(components, DivergenceKind::Chi2);
    Ok(GreenshteinRitov { max_chi2, bound: d / n1 as f64, max_h2, h2_bound: 4.0 * d / n1 as f64 })
}
