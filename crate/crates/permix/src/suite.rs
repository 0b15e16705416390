//! Randomized and exhaustive invariant sweeps behind `verify-all`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::json;

use crate::bounds::{
    definetti_bound_and_exact, eb_risk_gap_bound, evaluate_instance, greenshtein_ritov_check, kronecker_worst_case,
    mutual_info_gap, replication_trend, thm_main_bounds, two_mixtures_check, verify_worst_family, worst_case_family,
    worst_case_matrix,
};
use crate::capacity::{
    capacity_estimate, chi2_mutual_information, family_functionals, union_capacity_bound, FamilySpec,
};
use crate::error::{Error, Result};
use crate::esp::{binary_support_esp, binary_support_vector, esp_all, esp_bounds, hadamard_check, verify_esp_theorem};
use crate::gaussian_demo::{
    cumulant_divergence, cumulant_sequence, f_mu, g_ell, moments_blowup, moments_sweep, toy_chi2, toy_chi2_oracle_n2,
};
use crate::mixtures::{
    build_mixture_matrix, divergence, exact_chi2_bruteforce, iid_mixture_pmf, instance_capacity,
    permutation_mixture_pmf, random_component_list, ComponentList, DivergenceKind, FiniteDistribution,
};
use crate::permanent::{
    exact_chi2_permanent, permanent_naive, permanent_ryser, permanent_sandwich, r_ell_enumeration,
    rectangular_permanent_sum, s_series, wick_factor, wick_factor_centered, wick_mc_check, SeriesMethod, SquareMatrix,
    WickTarget,
};
use crate::report::{num, nums, to_value, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Small,
    Medium,
    Large,
}

impl FromStr for Budget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Budget::Small),
            "medium" => Ok(Budget::Medium),
            "large" => Ok(Budget::Large),
            _ => Err(Error::Parse(format!("unknown budget {s:?}"))),
        }
    }
}

/// Sweep sizes for one budget preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizes {
    pub instances: usize,
    pub n_max: usize,
    pub series_n_max: usize,
    pub esp_n_max: usize,
    pub esp_trials: usize,
    pub hadamard_trials: usize,
    pub wick_instances: usize,
    pub wick_samples: u64,
    pub capacity_restarts: usize,
    pub toy_n_max: usize,
    pub cumulant_l_max: usize,
}

impl Sizes {
    pub fn for_budget(b: Budget) -> Self {
        match b {
            Budget::Small => Sizes {
                instances: 40,
                n_max: 4,
                series_n_max: 6,
                esp_n_max: 24,
                esp_trials: 2_000,
                hadamard_trials: 300,
                wick_instances: 2,
                wick_samples: 20_000,
                capacity_restarts: 4,
                toy_n_max: 10_000,
                cumulant_l_max: 30,
            },
            Budget::Medium => Sizes {
                instances: 500,
                n_max: 5,
                series_n_max: 8,
                esp_n_max: 40,
                esp_trials: 100_000,
                hadamard_trials: 10_000,
                wick_instances: 20,
                wick_samples: 100_000,
                capacity_restarts: 8,
                toy_n_max: 1_000_000,
                cumulant_l_max: 60,
            },
            Budget::Large => Sizes {
                instances: 2_000,
                n_max: 6,
                series_n_max: 10,
                esp_n_max: 60,
                esp_trials: 400_000,
                hadamard_trials: 40_000,
                wick_instances: 40,
                wick_samples: 400_000,
                capacity_restarts: 16,
                toy_n_max: 1_000_000,
                cumulant_l_max: 120,
            },
        }
    }
}

/// Independent generator for item `idx` of sweep `section`.
pub fn instance_rng(seed: u64, section: u64, idx: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ section.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    r.set_stream(idx);
    r
}

/// Random list with `2 <= n <= n_max`, alphabet `2..=4`, entries at least `0.05`.
pub fn random_instance(seed: u64, section: u64, idx: u64, n_max: usize) -> ComponentList {
    let mut r = instance_rng(seed, section, idx);
    let n = r.random_range(2..=n_max);
    let k = r.random_range(2..=4);
    random_component_list(&mut r, n, k, 0.05)
}

fn bern(ps: &[f64]) -> Result<ComponentList> {
    ComponentList::new(ps.iter().map(|&p| FiniteDistribution::bernoulli(p)).collect::<Result<_>>()?)
}

fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

pub fn verify_all(seed: u64, sizes: &Sizes) -> Result<Report> {
    let mut r = Report::new("verify-all", seed, &format!("{sizes:?}"));
    r.merge("mixtures", mixtures_suite(seed, sizes)?);
    r.merge("permanent", permanent_suite(seed, sizes)?);
    r.merge("esp", esp_suite(seed, sizes)?);
    r.merge("capacity", capacity_suite(seed, sizes)?);
    r.merge("bounds", bounds_suite(seed, sizes)?);
    r.merge("gaussian_demo", gaussian_suite(sizes)?);
    Ok(r)
}

pub fn mixtures_suite(seed: u64, sizes: &Sizes) -> Result<Report> {
    let mut r = Report::new("mixtures", seed, "");
    let golden = bern(&[0.2, 0.8])?;
    let a = build_mixture_matrix(&golden)?;
    r.close("golden.chi2_bruteforce", exact_chi2_bruteforce(&golden)?, 0.1296, 1e-10);
    r.close("golden.lambda2", a.lambda2(), 0.36, 1e-10);
    let delta = crate::mixtures::max_pair_delta(golden.components());
    r.close("golden.gap_equals_inverse_delta", a.spectral_gap, 1.0 / delta, 1e-10);

    let rows: Vec<_> = (0..sizes.instances as u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let c = random_instance(seed, 1, i, sizes.n_max);
            let pm = exact_chi2_permanent(&c)?;
            let bf = exact_chi2_bruteforce(&c)?;
            let a = build_mixture_matrix(&c)?;
            let cap = instance_capacity(&c);
            let ps = c.components();
            let (p, q) = (&ps[0], &ps[1]);
            let chi = divergence(DivergenceKind::Chi2, p, q)?;
            let kl = divergence(DivergenceKind::Kl, p, q)?;
            let tv = divergence(DivergenceKind::Tv, p, q)?;
            let h2 = divergence(DivergenceKind::Hellinger2, p, q)?;
            let lc = divergence(DivergenceKind::Lecam, p, q)?;
            let mut pmf_sum = 0.0;
            let mut iid_sum = 0.0;
            let mut y = vec![0; c.n()];
            let cells = c.alphabet_size().pow(c.n() as u32);
            for idx in 0..cells {
                crate::mixtures::decode_cell(idx, c.alphabet_size(), c.n(), &mut y);
                pmf_sum += permutation_mixture_pmf(&c, &y)?;
                iid_sum += iid_mixture_pmf(&c, &y)?;
            }
            let order = [
                (kl - chi.ln_1p()).max(0.0),
                (tv - 0.5 * chi.sqrt()).max(0.0),
                (0.5 * h2 - tv).max(0.0),
                (-lc).max(0.0),
                (lc - tv).max(0.0),
            ];
            Ok((
                (pm - bf).abs() / (1.0 + bf),
                (a.trace - 1.0 - cap).abs(),
                a.eigenvalues[0] - 1.0,
                max_of(order),
                (pmf_sum - 1.0).abs().max((iid_sum - 1.0).abs()),
            ))
        })
        .collect::<Result<_>>()?;
    let worst = |f: fn(&(f64, f64, f64, f64, f64)) -> f64| max_of(rows.iter().map(f));
    r.le("permanent_vs_bruteforce.max_rel", worst(|x| x.0), 1e-8);
    r.le("capacity_equals_trace_minus_one.max_abs", worst(|x| x.1), 1e-10);
    r.le("top_eigenvalue_is_one.max_abs", worst(|x| x.2.abs()), 1e-10);
    r.le("divergence_inequalities.max_violation", worst(|x| x.3), 1e-12);
    r.le("pmf_tables_sum_to_one.max_abs", worst(|x| x.4), 1e-12);
    r.set("instances", json!(sizes.instances));
    Ok(r)
}

pub fn permanent_suite(seed: u64, sizes: &Sizes) -> Result<Report> {
    let mut r = Report::new("permanent", seed, "");
    r.close("ryser.identity", permanent_ryser(&SquareMatrix::identity(6))?, 1.0, 1e-12);
    r.close("ryser.ones", permanent_ryser(&SquareMatrix::from_fn(6, |_, _| 1.0))?, 720.0, 1e-9);
    let mut naive_gap: f64 = 0.0;
    let mut rect_gap: f64 = 0.0;
    for i in 0..sizes.instances.min(50) as u64 {
        let mut g = instance_rng(seed, 2, i);
        let n = g.random_range(1..=6);
        let m = SquareMatrix::from_fn(n, |_, _| StandardNormal.sample(&mut g));
        let (fast, slow) = (permanent_ryser(&m)?, permanent_naive(&m));
        naive_gap = naive_gap.max((fast - slow).abs() / (1.0 + slow.abs()));
        let rows = g.random_range(1..=n);
        let block: Vec<f64> = m.data[..rows * n].to_vec();
        let fast = rectangular_permanent_sum(&block, rows, n)?;
        rect_gap = rect_gap.max((fast - rect_sum_oracle(&block, rows, n)?).abs() / (1.0 + fast.abs()));
    }
    r.le("ryser_vs_naive.max_gap", naive_gap, 1e-9);
    r.le("rectangular_sum_vs_subsets.max_gap", rect_gap, 1e-9);

    let rows: Vec<_> = (0..sizes.instances.min(100) as u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let c = random_instance(seed, 3, i, sizes.series_n_max);
            let a = build_mixture_matrix(&c)?;
            let d = s_series(&a, SeriesMethod::Direct)?;
            let it = s_series(&a, SeriesMethod::Interpolation)?;
            let n = c.n();
            let mut interp: f64 = 0.0;
            let mut rst: f64 = 0.0;
            for l in 0..=n {
                if l == 1 {
                    interp = interp.max((d.s[1].abs().max(it.s[1].abs()) - 1e-12).max(0.0));
                    continue;
                }
                interp = interp.max(rel_gap(d.s[l], it.s[l]));
                if n <= 5 {
                    let rl = r_ell_enumeration(&c, l)?;
                    rst = rst.max(rel_gap(crate::permanent::binomial(n, l) * rl, d.s[l]));
                }
            }
            let sw = permanent_sandwich(&a);
            let series_chi2 = (d.chi2 - exact_chi2_permanent(&c)?).abs();
            Ok((interp, rst, sw.holds, series_chi2))
        })
        .collect::<Result<_>>()?;
    r.le("series.interpolation_vs_direct.max_rel", max_of(rows.iter().map(|x| x.0)), 1e-5);
    r.le("series.rst_identity.max_rel", max_of(rows.iter().map(|x| x.1)), 1e-6);
    r.le("series.sum_matches_chi2.max_abs", max_of(rows.iter().map(|x| x.3)), 1e-8);
    r.check("sandwich.all_hold", rows.iter().all(|x| x.2));

    let mut zs = Vec::new();
    for i in 0..sizes.wick_instances as u64 {
        let c = random_instance(seed, 4, i, 4);
        let a = build_mixture_matrix(&c)?;
        let s = i.wrapping_mul(31).wrapping_add(seed);
        let zp = wick_mc_check(&wick_factor(&a), WickTarget::Permanent, sizes.wick_samples, s)?.z_score();
        let zs2 = wick_mc_check(&wick_factor_centered(&a), WickTarget::Series { ell: 2 }, sizes.wick_samples, s + 1)?
            .z_score();
        zs.push(zp.max(zs2));
    }
    r.le("wick.max_z", max_of(zs.iter().copied()), 4.0);
    r.set("wick_z", nums(&zs));
    Ok(r)
}

/// `sum over column subsets T` of `Perm(a[:, T])` by Ryser on each square block.
fn rect_sum_oracle(a: &[f64], rows: usize, cols: usize) -> Result<f64> {
    let mut s = 0.0;
    for mask in 0usize..(1 << cols) {
        if mask.count_ones() as usize != rows {
            continue;
        }
        let picked: Vec<usize> = (0..cols).filter(|j| mask >> j & 1 == 1).collect();
        let m = SquareMatrix::from_fn(rows, |i, j| a[i * cols + picked[j]]);
        s += permanent_ryser(&m)?;
    }
    Ok(s)
}

pub fn esp_suite(seed: u64, sizes: &Sizes) -> Result<Report> {
    let mut r = Report::new("esp", seed, "");
    let rep = verify_esp_theorem(sizes.esp_n_max, sizes.esp_trials, seed)?;
    r.check("sweep.no_violations", rep.violations.is_empty());
    r.le("sweep.max_ratio_real", rep.max_ratio_real, 1.0 + 1e-8);
    r.le("sweep.max_ratio_complex", rep.max_ratio_complex, 1.0 + 1e-8);
    r.set("max_ratio_real", num(rep.max_ratio_real));
    r.set("argmax_real", to_value(&rep.argmax_real));
    r.set("max_ratio_complex", num(rep.max_ratio_complex));
    let two = verify_esp_theorem(2, 0, seed)?;
    r.close("n2.max_ratio_real", two.max_ratio_real, 1.0 / 10f64.sqrt(), 1e-3);

    let mut closed: f64 = 0.0;
    for n in 2..=sizes.esp_n_max.min(30) {
        for k in 1..n {
            let e = esp_all(binary_support_vector(n, k)?.values());
            for (l, v) in e.iter().enumerate() {
                let w = binary_support_esp(n, k, l);
                closed = closed.max((v - w).abs() / (1.0 + w.abs()));
            }
        }
    }
    r.le("binary_support.closed_form.max_gap", closed, 1e-9);
    let b0 = esp_bounds(10, 0)?;
    r.check("bounds.degree0_at_least_one", b0.complex_bound >= 1.0 && b0.real_bound >= 1.0);

    let results: Vec<bool> = (0..sizes.hadamard_trials as u64)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let mut g = instance_rng(seed, 5, i);
            let n = g.random_range(2..=12);
            let l = g.random_range(1..=6.min(n));
            let mut a: Vec<f64> = (0..l * n).map(|_| StandardNormal.sample(&mut g)).collect();
            for row in a.chunks_mut(n) {
                let m = row.iter().sum::<f64>() / n as f64;
                row.iter_mut().for_each(|x| *x -= m);
            }
            Ok(hadamard_check(&a, l, n)?.holds)
        })
        .collect::<Result<_>>()?;
    r.check("hadamard.no_violations", results.iter().all(|h| *h));
    Ok(r)
}

pub fn capacity_suite(seed: u64, sizes: &Sizes) -> Result<Report> {
    let mut r = Report::new("capacity", seed, "");
    let mut gaps = Vec::new();
    for i in 0..sizes.instances.min(20) as u64 {
        let c = random_instance(seed, 6, i, sizes.n_max);
        let fam = c.components();
        let uniform = vec![1.0 / fam.len() as f64; fam.len()];
        let mi = chi2_mutual_information(fam, &uniform)?;
        let est = capacity_estimate(fam, sizes.capacity_restarts, seed + i)?;
        let spec = FamilySpec::explicit(fam);
        let f = family_functionals(&spec, seed + i)?;
        gaps.push(((mi - instance_capacity(&c)).abs(), mi - est, est - f.c_chi2_upper));
    }
    r.le("uniform_prior_equals_instance_capacity.max_abs", max_of(gaps.iter().map(|g| g.0)), 1e-12);
    r.le("estimate_at_least_uniform.max_shortfall", max_of(gaps.iter().map(|g| g.1)), 1e-9);
    r.le("estimate_below_certified.max_excess", max_of(gaps.iter().map(|g| g.2)), 1e-8);
    r.close("union_bound.example", union_capacity_bound(&[0.5, 0.25, 1.0])?, 3.75, 1e-15);
    let families = [
        ("bernoulli", FamilySpec::Bernoulli { eps: 0.1 }),
        ("gaussian", FamilySpec::Gaussian { mu_max: 1.0, support: None }),
        ("gaussian_support", FamilySpec::Gaussian { mu_max: 1.0, support: Some(vec![-1.0, 0.0, 1.0]) }),
        ("poisson_small", FamilySpec::Poisson { m_max: 0.8, truncation_mass: 1e-12 }),
        ("poisson", FamilySpec::Poisson { m_max: 4.0, truncation_mass: 1e-12 }),
    ];
    for (name, spec) in &families {
        let f = family_functionals(spec, seed)?;
        r.le(format!("{name}.estimate_below_certified"), f.c_chi2_estimate, f.c_chi2_upper + 1e-8);
        r.set(name, to_value(&f));
    }
    Ok(r)
}

pub fn bounds_suite(seed: u64, sizes: &Sizes) -> Result<Report> {
    let mut r = Report::new("bounds", seed, "");
    let b = thm_main_bounds(2, 0.36, 1.5625, 0.36);
    r.close("main_bounds.ub1_example", b.ub1, 1.296, 1e-12);
    r.close("main_bounds.c1_degenerate", thm_main_bounds(5, 1.0, 2.0, 1.0).ub1, 40.0, 1e-12);

    let rows: Vec<_> = (0..sizes.instances as u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let c = random_instance(seed, 7, i, sizes.n_max);
            let rep = evaluate_instance(&c)?;
            let n = c.n();
            let mut fin: f64 = 0.0;
            let mut mono = true;
            let mut prev = 0.0;
            for k in 1..=n {
                let d = definetti_bound_and_exact(&c, k)?;
                if let Some(bf) = d.bruteforce {
                    fin = fin.max(if k == 1 { d.exact.abs() } else { rel_gap(d.exact, bf) });
                }
                fin = fin.max((d.exact - d.bound).max(0.0));
                mono &= d.exact >= prev - 1e-12;
                prev = d.exact;
            }
            let mi = mutual_info_gap(&c)?;
            Ok((rep.holds(), fin, mono, mi.gap >= -1e-10 && mi.gap <= mi.ub + 1e-10))
        })
        .collect::<Result<_>>()?;
    r.check("sandwich.all_instances", rows.iter().all(|x| x.0));
    r.le("definetti.max_identity_or_bound_gap", max_of(rows.iter().map(|x| x.1)), 1e-7);
    r.check("definetti.nondecreasing_in_k", rows.iter().all(|x| x.2));
    r.check("mutual_info.gap_within_bounds", rows.iter().all(|x| x.3));

    let chains: Vec<bool> = (0..sizes.instances.min(200) as u64)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let mut g = instance_rng(seed, 8, i);
            let n = g.random_range(2..=sizes.n_max.min(5));
            let k = g.random_range(2..=3);
            let all = random_component_list(&mut g, n + 1, k, 0.05);
            let ps = all.components();
            Ok(two_mixtures_check(&ps[2..], &ps[0], &ps[1])?.holds())
        })
        .collect::<Result<_>>()?;
    r.check("two_mixtures.chain_all_instances", chains.iter().all(|h| *h));

    let gr: Vec<bool> = (0..sizes.instances.min(100) as u64)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let mut g = instance_rng(seed, 9, i);
            let n1 = g.random_range(2..=5);
            let k = g.random_range(2..=3);
            let all = random_component_list(&mut g, n1, k, 0.05);
            Ok(greenshtein_ritov_check(all.components())?.holds())
        })
        .collect::<Result<_>>()?;
    r.check("greenshtein_ritov.all_instances", gr.iter().all(|h| *h));

    let eb = eb_risk_gap_bound(1.0, 100, 0.36, 1.5625, 0.36)?;
    let direct = (600.0 * 0.36 * (std::f64::consts::E * 1.5625f64).powf(1.08)).sqrt();
    r.close("eb_risk.example", eb, direct, 1e-9 * direct);

    let mut shapes = 0;
    for m in 1..=16usize {
        for n in 1..=16 / m {
            for delta in [0.1, 0.25, 0.5, 0.75, 0.9] {
                kronecker_worst_case(m, n, delta)?;
                shapes += 1;
            }
        }
    }
    r.check("worst_case.kronecker_invariants", shapes > 0);
    r.set("worst_case_shapes_checked", json!(shapes));
    let w = worst_case_matrix(2.0, 0.1)?;
    r.le("worst_case.permanent_block_lower", w.permanent_lower, w.permanent.unwrap_or(f64::INFINITY));
    let fam = verify_worst_family(2, 0.25, seed)?;
    r.close("worst_family.delta_h2", fam.delta_h2, 4.0, 1e-12);
    r.le("worst_family.capacity_below_m_minus_1", fam.c_estimate, fam.c_upper);
    let members = match worst_case_family(2.0, 0.25)? {
        FamilySpec::Explicit { components } => ComponentList::from_rows(components)?,
        _ => unreachable!("worst-case family is explicit"),
    };
    let trend = replication_trend(&members, 4)?;
    r.set("worst_family_replication_trend", nums(&trend));
    Ok(r)
}

pub fn gaussian_suite(sizes: &Sizes) -> Result<Report> {
    let mut r = Report::new("gaussian_demo", 0, "");
    let mut worst: f64 = 0.0;
    for i in 0..=50 {
        let mu = 0.1 * i as f64;
        worst = worst.max(f_mu(mu)? - (1.0 - (-mu * mu).exp()));
    }
    r.le("f_mu.below_one_minus_exp.max_excess", worst, 1e-12);
    let mut g_excess: f64 = 0.0;
    for l in 0..=20 {
        let g = g_ell(20, l)?;
        g_excess = g_excess.max(g * g - 1.0 / crate::permanent::binomial(20, l));
    }
    r.le("g_ell.squared_below_inverse_binomial", g_excess, 1e-15);
    for mu in [0.25, 0.5, 1.0, 2.0] {
        r.close(format!("oracle_mu_{mu}"), toy_chi2(2, mu)?.chi2_series, toy_chi2_oracle_n2(mu)?, 1e-8);
    }
    let mut n = 2;
    while n <= sizes.toy_n_max {
        let t = toy_chi2(n, 1.0)?;
        r.le(format!("toy_n_{n}.below_cap"), t.chi2_series, t.geometric_cap);
        n *= 10;
    }
    for ell in 0..=2 {
        let s = moments_sweep(1.0, ell, 4, 12)?;
        r.close(format!("moments.slope_ell_{ell}"), s.log_slope, ell as f64, 0.05);
    }
    r.set("moments.slope_ell_3", num(moments_sweep(1.0, 3, 4, 12)?.log_slope));
    r.check("moments.positive", moments_blowup(16, 1.0, 2)? > 0.0);
    let b = cumulant_sequence(4)?;
    let want = ["1", "2", "16", "272", "7936"];
    r.check("cumulants.prefix", b.iter().map(|v| v.to_string()).eq(want.iter().map(|s| s.to_string())));
    let rows = cumulant_divergence(sizes.cumulant_l_max.max(30), 1.0, 10)?;
    let first = rows.iter().position(|row| row.partial_sum > 1e6).map(|p| rows[p].ell);
    r.le("cumulants.partial_sum_exceeds_1e6_by_ell", first.map_or(f64::INFINITY, |l| l as f64), 30.0);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgets_parse_and_grow() {
        assert_eq!("medium".parse::<Budget>().unwrap(), Budget::Medium);
        assert!("huge".parse::<Budget>().is_err());
        let (s, l) = (Sizes::for_budget(Budget::Small), Sizes::for_budget(Budget::Large));
        assert!(s.instances < l.instances && s.esp_trials < l.esp_trials);
    }

    #[test]
    fn instances_are_reproducible_and_distinct() {
        let a = random_instance(7, 1, 3, 5);
        assert_eq!(a, random_instance(7, 1, 3, 5));
        assert_ne!(a, random_instance(7, 1, 4, 5));
        assert_ne!(a, random_instance(7, 2, 3, 5));
        assert!((2..=5).contains(&a.n()));
        assert!(a.components().iter().all(|p| p.probs().iter().all(|&x| x >= 0.05)));
    }

    #[test]
    fn small_budget_passes_and_is_stable() {
        let sizes = Sizes::for_budget(Budget::Small);
        let r = verify_all(11, &sizes).unwrap();
        assert!(r.passed, "{:?}", r.assertions.iter().filter(|a| !a.pass).collect::<Vec<_>>());
        for module in ["mixtures", "permanent", "esp", "capacity", "bounds", "gaussian_demo"] {
            assert!(r.assertions.iter().any(|a| a.name.starts_with(module)), "{module}");
        }
        assert_eq!(r.to_json(), verify_all(11, &sizes).unwrap().to_json());
    }
}
