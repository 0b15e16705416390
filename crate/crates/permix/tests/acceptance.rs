use std::process::{Command, ExitCode};
use std::time::Instant;

use permix::bounds::{
    definetti_bound_and_exact, evaluate_instance, greenshtein_ritov_check, kronecker_worst_case, mutual_info_gap,
    two_mixtures_check, verify_worst_family,
};
use permix::esp::{hadamard_check, verify_esp_theorem};
use permix::gaussian_demo::{cumulant_divergence, cumulant_sequence, f_mu, moments_sweep, toy_chi2, toy_chi2_oracle_n2};
use permix::mixtures::{
    build_mixture_matrix, exact_chi2_bruteforce, max_pair_delta, random_component_list, ComponentList,
    FiniteDistribution,
};
use permix::permanent::{
    exact_chi2_permanent, r_ell_enumeration, s_series, wick_factor, wick_factor_centered, wick_mc_check,
    SeriesMethod, WickTarget,
};
use permix::suite::{instance_rng, random_instance};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

const SEED: u64 = 20_240_611;

type Outcome = permix::Result<(bool, String)>;

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn max(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn instances() -> Vec<ComponentList> {
    (0..500).map(|i| random_instance(SEED, 101, i, 5)).collect()
}

fn c1_permanent_identity() -> Outcome {
    let start = Instant::now();
    let worst: Vec<f64> = instances()
        .par_iter()
        .map(|c| -> permix::Result<f64> {
            let (p, b) = (exact_chi2_permanent(c)?, exact_chi2_bruteforce(c)?);
            Ok((p - b).abs() / (1.0 + b))
        })
        .collect::<permix::Result<_>>()?;
    let w = max(worst);
    let secs = start.elapsed().as_secs_f64();
    Ok((w <= 1e-8 && secs < 60.0, format!("500 instances, max scaled gap {w:.2e}, {secs:.2}s")))
}

fn c2_golden() -> Outcome {
    let c = ComponentList::new(vec![FiniteDistribution::bernoulli(0.2)?, FiniteDistribution::bernoulli(0.8)?])?;
    let p = exact_chi2_permanent(&c)?;
    let b = exact_chi2_bruteforce(&c)?;
    let a = build_mixture_matrix(&c)?;
    let gap = (a.spectral_gap - 1.0 / max_pair_delta(c.components())).abs();
    let ok = (p - 0.1296).abs() <= 1e-10 && (b - 0.1296).abs() <= 1e-10 && (a.lambda2() - 0.36).abs() <= 1e-10 && gap <= 1e-10;
    Ok((ok, format!("permanent {p}, brute force {b}, lambda2 {}, gap error {gap:.1e}", a.lambda2())))
}

fn c3_sandwich() -> Outcome {
    let bad: Vec<bool> = instances()
        .par_iter()
        .map(|c| -> permix::Result<bool> {
            let r = evaluate_instance(c)?;
            let x = r.exact_chi2.expect("exact value available at n <= 5");
            Ok([r.ub1, r.ub2, r.ub3].iter().any(|&u| u.is_finite() && x > u))
        })
        .collect::<permix::Result<_>>()?;
    let v = bad.iter().filter(|b| **b).count();
    Ok((v == 0, format!("{v} violations on 500 instances")))
}

fn c4_series() -> Outcome {
    let rst: Vec<(f64, f64)> = (0..100)
        .into_par_iter()
        .map(|i| -> permix::Result<(f64, f64)> {
            let c = random_instance(SEED, 104, i, 6);
            let a = build_mixture_matrix(&c)?;
            let interp = s_series(&a, SeriesMethod::Interpolation)?;
            let direct = s_series(&a, SeriesMethod::Direct)?;
            let t = direct.t.as_ref().expect("direct method keeps T");
            let n = c.n();
            let (mut w, mut s1): (f64, f64) = (0.0, 0.0);
            for l in 0..=n {
                let via_r = binom(n, l) * r_ell_enumeration(&c, l)?;
                let via_t = (0..l).map(|j| n as f64 / (n - j) as f64).product::<f64>() * t[l];
                if l == 1 {
                    s1 = s1.max(max([interp.s[1].abs(), via_r.abs(), via_t.abs()]));
                } else {
                    w = w.max(rel(interp.s[l], via_r)).max(rel(interp.s[l], via_t));
                }
            }
            Ok((w, s1))
        })
        .collect::<permix::Result<_>>()?;
    let agree: Vec<(f64, f64)> = (0..100)
        .into_par_iter()
        .map(|i| -> permix::Result<(f64, f64)> {
            let c = random_instance(SEED, 105, i, 8);
            let a = build_mixture_matrix(&c)?;
            let d = s_series(&a, SeriesMethod::Direct)?;
            let it = s_series(&a, SeriesMethod::Interpolation)?;
            let w = max((0..=c.n()).filter(|&l| l != 1).map(|l| rel(d.s[l], it.s[l])));
            Ok((w, d.s[1].abs().max(it.s[1].abs())))
        })
        .collect::<permix::Result<_>>()?;
    let (w, g) = (max(rst.iter().map(|x| x.0)), max(agree.iter().map(|x| x.0)));
    let s1 = max(rst.iter().chain(&agree).map(|x| x.1));
    Ok((
        w <= 1e-6 && g <= 1e-5 && s1 <= 1e-12,
        format!("RST max rel {w:.2e} (n <= 6), interpolation vs direct max rel {g:.2e} (n <= 8), max |S_1| {s1:.1e}"),
    ))
}

fn c5_esp() -> Outcome {
    let start = Instant::now();
    let r = verify_esp_theorem(40, 100_000, SEED)?;
    let secs = start.elapsed().as_secs_f64();
    let ok = r.violations.is_empty() && secs < 120.0;
    Ok((
        ok,
        format!(
            "{} violations, max real ratio {:.4}, max complex ratio {:.6}, {secs:.2}s",
            r.violations.len(),
            r.max_ratio_real,
            r.max_ratio_complex
        ),
    ))
}

fn c6_hadamard() -> Outcome {
    let held: Vec<bool> = (0..10_000u64)
        .into_par_iter()
        .map(|i| -> permix::Result<bool> {
            let mut g = instance_rng(SEED, 106, i);
            let n = g.random_range(2..=12);
            let l = g.random_range(1..=6.min(n));
            let mut a: Vec<f64> = (0..l * n).map(|_| StandardNormal.sample(&mut g)).collect();
            for row in a.chunks_mut(n) {
                let m = row.iter().sum::<f64>() / n as f64;
                row.iter_mut().for_each(|x| *x -= m);
            }
            Ok(hadamard_check(&a, l, n)?.holds)
        })
        .collect::<permix::Result<_>>()?;
    let v = held.iter().filter(|h| !**h).count();
    Ok((v == 0, format!("{v} violations on 10000 matrices")))
}

fn c7_wick() -> Outcome {
    let zs: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|i| -> permix::Result<(f64, f64)> {
            let c = random_instance(SEED, 107, i, 4);
            let a = build_mixture_matrix(&c)?;
            let zp = wick_mc_check(&wick_factor(&a), WickTarget::Permanent, 100_000, SEED + 2 * i)?.z_score();
            let ell = 2.min(c.n());
            let zs = wick_mc_check(&wick_factor_centered(&a), WickTarget::Series { ell }, 100_000, SEED + 2 * i + 1)?
                .z_score();
            Ok((zp, zs))
        })
        .collect::<permix::Result<_>>()?;
    let (p, s) = (max(zs.iter().map(|z| z.0)), max(zs.iter().map(|z| z.1)));
    Ok((p <= 4.0 && s <= 4.0, format!("max |z| permanent {p:.2}, series {s:.2} over 20 instances")))
}

fn c8_definetti() -> Outcome {
    let rows: Vec<(f64, f64, bool)> = instances()
        .par_iter()
        .map(|c| -> permix::Result<(f64, f64, bool)> {
            let mut w: f64 = 0.0;
            let mut first = 0.0f64;
            let mut dominated = true;
            for k in 1..=c.n() {
                let d = definetti_bound_and_exact(c, k)?;
                let bf = d.bruteforce.expect("brute force available at n <= 5");
                if k == 1 {
                    first = first.max(d.exact.abs().max(bf.abs()));
                } else {
                    w = w.max(rel(d.exact, bf));
                }
                dominated &= d.exact <= d.bound;
            }
            Ok((w, first, dominated))
        })
        .collect::<permix::Result<_>>()?;
    let w = max(rows.iter().map(|r| r.0));
    let first = max(rows.iter().map(|r| r.1));
    let v = rows.iter().filter(|r| !r.2).count();
    Ok((
        w <= 1e-7 && first <= 1e-12 && v == 0,
        format!("identity max rel {w:.2e} (k >= 2), max |k = 1 value| {first:.1e}, {v} bound violations on 500 instances"),
    ))
}

fn c9_two_mixtures() -> Outcome {
    let held: Vec<bool> = (0..200u64)
        .into_par_iter()
        .map(|i| -> permix::Result<bool> {
            let mut g = instance_rng(SEED, 109, i);
            let n = g.random_range(2..=5);
            let k = g.random_range(2..=4);
            let all = random_component_list(&mut g, n + 1, k, 0.05);
            let ps = all.components();
            Ok(two_mixtures_check(&ps[2..], &ps[0], &ps[1])?.holds())
        })
        .collect::<permix::Result<_>>()?;
    let v = held.iter().filter(|h| !**h).count();
    Ok((v == 0, format!("{v} chain violations on 200 instances")))
}

fn c10_mutual_info() -> Outcome {
    let held: Vec<bool> = (0..200u64)
        .into_par_iter()
        .map(|i| -> permix::Result<bool> {
            let m = mutual_info_gap(&random_instance(SEED, 110, i, 5))?;
            Ok(m.gap >= 0.0 && m.gap <= m.ub)
        })
        .collect::<permix::Result<_>>()?;
    let v = held.iter().filter(|h| !**h).count();
    Ok((v == 0, format!("{v} violations on 200 instances")))
}

fn c11_toy() -> Outcome {
    let mut oracle: f64 = 0.0;
    for mu in [0.25, 0.5, 1.0, 2.0] {
        oracle = oracle.max((toy_chi2(2, mu)?.chi2_series - toy_chi2_oracle_n2(mu)?).abs());
    }
    let mut capped = true;
    let mut n = 2;
    while n <= 1_000_000 {
        let t = toy_chi2(n, 1.0)?;
        let f = t.f_mu;
        capped &= t.chi2_series <= f * f / (1.0 - f);
        n = if n == 2 { 10 } else { n * 10 };
    }
    let mut excess: f64 = f64::NEG_INFINITY;
    for i in 0..=100 {
        let mu = 0.05 * i as f64;
        excess = excess.max(f_mu(mu)? - (1.0 - (-mu * mu).exp()));
    }
    let ok = oracle <= 1e-8 && capped && excess <= 1e-12;
    Ok((ok, format!("oracle max gap {oracle:.2e}, cap holds to n = 1e6: {capped}, max f - (1 - e^-mu^2) = {excess:.2e}")))
}

fn c12_failure_demos() -> Outcome {
    let mut slopes = Vec::new();
    for ell in 0..=2 {
        slopes.push(moments_sweep(1.0, ell, 4, 12)?.log_slope);
    }
    let slope_ok = slopes.iter().enumerate().all(|(l, s)| (s - l as f64).abs() <= 0.05);
    let b: Vec<String> = cumulant_sequence(4)?.iter().map(|v| v.to_string()).collect();
    let prefix_ok = b == ["1", "2", "16", "272", "7936"];
    let first = cumulant_divergence(30, 1.0, 10)?.into_iter().find(|r| r.partial_sum > 1e6).map(|r| r.ell);
    Ok((
        slope_ok && prefix_ok && first.is_some(),
        format!("slopes {slopes:.3?} for ell 0..=2, b = {b:?}, partial sum > 1e6 first at ell {first:?}"),
    ))
}

fn c13_worst_case() -> Outcome {
    let mut shapes = 0;
    for m in 1..=16usize {
        for n in 1..=16 / m {
            for delta in [0.05, 0.25, 0.5, 0.75, 0.95] {
                kronecker_worst_case(m, n, delta)?;
                shapes += 1;
            }
        }
    }
    let mut fam_ok = true;
    for m in 2..=5 {
        for delta in [0.1, 0.25, 0.5, 0.9] {
            let f = verify_worst_family(m, delta, SEED)?;
            fam_ok &= (f.delta_h2 - 1.0 / delta).abs() <= 1e-10 / delta;
            fam_ok &= f.c_upper <= (m - 1) as f64 + 1e-12 && f.c_estimate <= f.c_upper + 1e-12;
        }
    }
    Ok((fam_ok, format!("{shapes} Kronecker shapes verified (mn <= 16), family functionals ok: {fam_ok}")))
}

fn c14_greenshtein_ritov() -> Outcome {
    let held: Vec<bool> = (0..100u64)
        .into_par_iter()
        .map(|i| -> permix::Result<bool> {
            let mut g = instance_rng(SEED, 114, i);
            let n1 = g.random_range(2..=5);
            let k = g.random_range(2..=4);
            let all = random_component_list(&mut g, n1, k, 0.05);
            Ok(greenshtein_ritov_check(all.components())?.holds())
        })
        .collect::<permix::Result<_>>()?;
    let v = held.iter().filter(|h| !**h).count();
    Ok((v == 0, format!("{v} violations on 100 instances")))
}

fn c15_determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_permix"))
            .args(["verify-all", "--seed", "7"])
            .env_remove("PERMIX_BUDGET")
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    let ok = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    Ok((ok, format!("exit {:?}/{:?}, {} bytes, identical: {}", a.status.code(), b.status.code(), a.stdout.len(), a.stdout == b.stdout)))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 15] = [
        (1, c1_permanent_identity),
        (2, c2_golden),
        (3, c3_sandwich),
        (4, c4_series),
        (5, c5_esp),
        (6, c6_hadamard),
        (7, c7_wick),
        (8, c8_definetti),
        (9, c9_two_mixtures),
        (10, c10_mutual_info),
        (11, c11_toy),
        (12, c12_failure_demos),
        (13, c13_worst_case),
        (14, c14_greenshtein_ritov),
        (15, c15_determinism),
    ];
    let mut failed = 0;
    for (id, f) in criteria {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
