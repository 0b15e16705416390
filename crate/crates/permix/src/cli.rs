//! Command-line front end. Every subcommand emits a [`Report`]; the exit code is
//! 0 when all assertions pass, 1 when one fails and 2 on usage or input errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bounds::{
    definetti_bound_and_exact, eb_risk_gap_bound, evaluate_instance, evaluate_with_family, evaluate_with_inputs,
    kronecker_worst_case, mutual_info_gap, replication_trend, two_mixtures_check, verify_worst_family,
    worst_case_dims, worst_case_matrix, BoundInputs, Provenance,
};
use crate::capacity::{family_functionals, FamilySpec};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::esp::verify_esp_theorem;
use crate::gaussian_demo::{cumulant_divergence, moments_sweep, toy_chi2, toy_chi2_oracle_n2};
use crate::mixtures::{
    build_mixture_matrix, exact_chi2_bruteforce, instance_capacity, max_pair_delta, max_pair_divergence,
    ComponentList, DivergenceKind,
};
use crate::permanent::{
    exact_chi2_permanent, parse_matrix_json, permanent_ryser, permanent_ryser_complex, permanent_sandwich,
    s_series, series_from_centered, MatrixValue, SeriesMethod,
};
use crate::report::{csv_table, fmt_f64, num, nums, to_value, Report};
use crate::suite::{verify_all, Budget, Sizes};

#[derive(Parser, Debug)]
#[command(name = "permix", version, about = "Permutation mixtures versus i.i.d. mixtures: exact chi-square, series and bounds")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Base seed for every random sweep.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for parallel sweeps (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, env = "PERMIX_BUDGET", default_value = "small")]
    budget: Budget,
    /// Include wall-clock time in the report (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact chi-square by permanent and by enumeration, plus pairwise divergences.
    Divergence {
        #[arg(long)]
        components: PathBuf,
        #[arg(long, default_value = "chi2")]
        kind: DivergenceKind,
    },
    Bounds {
        #[command(subcommand)]
        action: BoundsCmd,
    },
    /// S-series of a component list, or permanent (and series when stochastic) of a matrix.
    Series {
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        components: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    Esp {
        #[command(subcommand)]
        action: EspCmd,
    },
    /// Capacity, diameters and singularity of a family.
    Capacity {
        #[arg(long)]
        family: PathBuf,
    },
    /// k-coordinate marginal chi-square against the best i.i.d. mixture.
    Definetti {
        #[arg(long)]
        components: PathBuf,
        /// Single marginal order; all of 1..=n when omitted.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Rows are p1, q1, then the shared components.
    TwoMixtures {
        #[arg(long)]
        components: PathBuf,
    },
    MutualInfo {
        #[arg(long)]
        components: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
        part: u8,
    },
    /// Kronecker worst-case matrix and the matching explicit family.
    WorstCase {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        delta: f64,
        /// Override the block count (requires --n).
        #[arg(long, requires = "n")]
        m: Option<usize>,
        #[arg(long, requires = "m")]
        n: Option<usize>,
        /// Replications of the family for the chi-square trend.
        #[arg(long, default_value_t = 3)]
        replicate: usize,
    },
    Toy {
        #[command(subcommand)]
        model: ToyCmd,
    },
    Demo {
        #[command(subcommand)]
        which: DemoCmd,
    },
    /// Every module's invariant suite at the selected budget.
    VerifyAll,
}

#[derive(Subcommand, Debug)]
enum BoundsCmd {
    /// Upper bounds, exact value and spectral lower bound for one instance.
    Evaluate {
        #[arg(long)]
        components: PathBuf,
        #[arg(long, conflicts_with_all = ["c", "delta", "d"])]
        family: Option<PathBuf>,
        #[arg(long, requires_all = ["delta", "d"])]
        c: Option<f64>,
        #[arg(long, requires_all = ["c", "d"])]
        delta: Option<f64>,
        #[arg(long, requires_all = ["c", "delta"])]
        d: Option<f64>,
    },
    /// Risk-gap bound M sqrt(6 n D (e Delta)^{3C}).
    EbRisk {
        #[arg(long)]
        m_loss: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        d: f64,
    },
}

#[derive(Subcommand, Debug)]
enum EspCmd {
    /// Exhaustive real check and random complex check of the ESP bounds.
    Verify {
        #[arg(long, default_value_t = 40)]
        n_max: usize,
        /// Random complex vectors; budget default when omitted.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum ToyCmd {
    /// Symmetric Gaussian location pair.
    Gaussian {
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
enum DemoCmd {
    /// Log-slope of the moment-method blow-up term in n.
    Moments {
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2])]
        ell: Vec<usize>,
        #[arg(long, default_value_t = 4)]
        log2_lo: u32,
        #[arg(long, default_value_t = 12)]
        log2_hi: u32,
    },
    /// Cumulant recursion and its divergent partial sums.
    Cumulants {
        #[arg(long, default_value_t = 30)]
        l_max: usize,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MethodArg {
    Interpolation,
    Direct,
}

impl From<MethodArg> for SeriesMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Interpolation => SeriesMethod::Interpolation,
            MethodArg::Direct => SeriesMethod::Direct,
        }
    }
}

struct Output {
    report: Report,
    table: Option<String>,
}

impl From<Report> for Output {
    fn from(report: Report) -> Self {
        Output { report, table: None }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    2
                }
            };
            return code;
        }
    };
    let start = Instant::now();
    let result = match cli.global.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::Invalid(format!("thread pool: {e}"))),
        },
        None => dispatch(&cli),
    };
    let mut output = match result {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    if cli.global.timing {
        output.report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    let text = match cli.global.format {
        Format::Json => output.report.to_json(),
        Format::Csv => output.table.clone().unwrap_or_else(|| output.report.assertions_csv()),
    };
    let written = match &cli.global.out {
        Some(path) => std::fs::write(path, text.as_bytes()).map_err(|e| format!("{}: {e}", path.display())),
        None => out.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return 2;
    }
    if output.report.passed {
        0
    } else {
        for a in output.report.assertions.iter().filter(|a| !a.pass) {
            let _ = writeln!(err, "assertion failed: {} ({} <= {})", a.name, fmt_f64(a.lhs), fmt_f64(a.rhs));
        }
        1
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_components(path: &Path) -> Result<(ComponentList, String)> {
    let text = read(path)?;
    Ok((ComponentList::from_json(&text)?, text))
}

fn slack(x: f64) -> f64 {
    x + Config::default().comparison * (1.0 + x.abs())
}

fn dispatch(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    let sizes = Sizes::for_budget(g.budget);
    match &cli.command {
        Command::Divergence { components, kind } => divergence_cmd(components, *kind, g.seed).map(Output::from),
        Command::Bounds { action } => bounds_cmd(action, g.seed).map(Output::from),
        Command::Series { components, matrix, method } => {
            series_cmd(components.as_deref(), matrix.as_deref(), *method, g.seed).map(Output::from)
        }
        Command::Esp { action: EspCmd::Verify { n_max, trials } } => {
            let trials = trials.unwrap_or(sizes.esp_trials);
            let mut r = Report::new("esp verify", g.seed, &format!("{n_max} {trials}"));
            let rep = verify_esp_theorem(*n_max, trials, g.seed)?;
            r.le("max_ratio_real", rep.max_ratio_real, 1.0 + 1e-8);
            r.le("max_ratio_complex", rep.max_ratio_complex, 1.0 + 1e-8);
            r.check("no_violations", rep.violations.is_empty());
            let table = csv_table(
                &["n", "ell", "k", "ratio"],
                &rep.per_n_ell.iter().map(|e| vec![e.n.to_string(), e.ell.to_string(), e.k.to_string(), fmt_f64(e.ratio)]).collect::<Vec<_>>(),
            );
            for (k, v) in to_value(&rep).as_object().expect("struct").clone() {
                r.set(&k, v);
            }
            Ok(Output { report: r, table: Some(table) })
        }
        Command::Capacity { family } => {
            let text = read(family)?;
            let spec = FamilySpec::from_json(&text)?;
            let mut r = Report::new("capacity", g.seed, &text);
            let f = family_functionals(&spec, g.seed)?;
            r.le("estimate_below_certified", f.c_chi2_estimate, slack(f.c_chi2_upper));
            r.le("certified_below_diameter", f.c_chi2_upper, slack(f.d_chi2));
            r.set("functionals", to_value(&f));
            Ok(r.into())
        }
        Command::Definetti { components, k } => definetti_cmd(components, *k, g.seed).map(Output::from),
        Command::TwoMixtures { components } => {
            let (c, text) = load_components(components)?;
            if c.n() < 3 {
                return Err(Error::Invalid("two-mixtures needs rows p1, q1 and at least one shared component".into()));
            }
            let ps = c.components();
            let t = two_mixtures_check(&ps[2..], &ps[0], &ps[1])?;
            let mut r = Report::new("two-mixtures", g.seed, &text);
            r.le("tv2_le_middle", t.tv2, slack(t.middle));
            r.le("middle_le_intermediate", t.middle, slack(t.intermediate));
            r.le("intermediate_le_bound", t.intermediate, slack(t.bound));
            r.set("check", to_value(&t));
            Ok(r.into())
        }
        Command::MutualInfo { components, part } => {
            let (c, text) = load_components(components)?;
            let mut r = Report::new("mutual-info", g.seed, &text);
            if *part == 2 {
                r.set("part", json!(2));
                r.set(
                    "status",
                    json!("not computed: this form needs KL covering numbers of the family's convex hull; use part 1"),
                );
                return Ok(r.into());
            }
            let m = mutual_info_gap(&c)?;
            r.le("gap_nonnegative", -m.gap, 1e-10);
            r.le("gap_le_bound", m.gap, slack(m.ub));
            r.set("gap", num(m.gap));
            r.set("ub", num(m.ub));
            Ok(r.into())
        }
        Command::WorstCase { c, delta, m, n, replicate } => {
            worst_case_cmd(*c, *delta, *m, *n, *replicate, g.seed).map(Output::from)
        }
        Command::Toy { model: ToyCmd::Gaussian { mu, n } } => {
            let mut r = Report::new("toy gaussian", g.seed, &format!("{mu} {n}"));
            let t = toy_chi2(*n, *mu)?;
            r.le("series_le_geometric_cap", t.chi2_series, slack(t.geometric_cap));
            r.le("f_le_one_minus_exp", t.f_mu, 1.0 - (-mu * mu).exp() + 1e-12);
            if *n == 2 && *mu <= Config::default().oracle_mu_max {
                let o = toy_chi2_oracle_n2(*mu)?;
                r.close("series_vs_quadrature_oracle", t.chi2_series, o, 1e-8);
                r.set("oracle", num(o));
            }
            r.set("result", to_value(&t));
            Ok(r.into())
        }
        Command::Demo { which: DemoCmd::Moments { mu, ell, log2_lo, log2_hi } } => {
            let mut r = Report::new("demo moments", g.seed, &format!("{mu} {ell:?} {log2_lo} {log2_hi}"));
            let mut rows = Vec::new();
            for &l in ell {
                let s = moments_sweep(*mu, l, *log2_lo, *log2_hi)?;
                r.close(format!("slope_ell_{l}"), s.log_slope, l as f64, 0.05);
                for (n, t) in s.n.iter().zip(&s.term) {
                    rows.push(vec![l.to_string(), n.to_string(), fmt_f64(*t)]);
                }
                r.set(&format!("ell_{l}"), to_value(&s));
            }
            Ok(Output { report: r, table: Some(csv_table(&["ell", "n", "term"], &rows)) })
        }
        Command::Demo { which: DemoCmd::Cumulants { l_max, mu, n } } => {
            let mut r = Report::new("demo cumulants", g.seed, &format!("{l_max} {mu} {n}"));
            let rows = cumulant_divergence(*l_max, *mu, *n)?;
            let want = ["1", "2", "16", "272", "7936"];
            let prefix = rows.iter().take(5).map(|x| x.b.as_str()).eq(want.iter().take(rows.len().min(5)).copied());
            r.check("sequence_prefix", prefix);
            let first = rows.iter().find(|x| x.partial_sum > 1e6).map(|x| x.ell);
            r.set("first_ell_partial_sum_above_1e6", json!(first));
            r.set("rows", to_value(&rows));
            let table = csv_table(
                &["ell", "b", "ln_kappa", "ln_term", "ln_partial_sum"],
                &rows
                    .iter()
                    .map(|x| {
                        vec![x.ell.to_string(), x.b.clone(), fmt_f64(x.ln_kappa), fmt_f64(x.ln_term), fmt_f64(x.ln_partial_sum)]
                    })
                    .collect::<Vec<_>>(),
            );
            Ok(Output { report: r, table: Some(table) })
        }
        Command::VerifyAll => verify_all(g.seed, &sizes).map(Output::from),
    }
}

fn divergence_cmd(path: &Path, kind: DivergenceKind, seed: u64) -> Result<Report> {
    let (c, text) = load_components(path)?;
    let mut r = Report::new("divergence", seed, &text);
    let ps = c.components();
    let pairs: Vec<Vec<serde_json::Value>> = ps
        .iter()
        .map(|p| ps.iter().map(|q| num(crate::mixtures::divergence(kind, p, q).expect("same alphabet"))).collect())
        .collect();
    r.set("kind", to_value(&kind));
    r.set("pairwise", json!(pairs));
    let pm = exact_chi2_permanent(&c)?;
    r.set("exact_chi2_permanent", num(pm));
    match exact_chi2_bruteforce(&c) {
        Ok(bf) => {
            r.close("permanent_vs_bruteforce", pm, bf, 1e-8 * (1.0 + bf));
            r.set("exact_chi2_bruteforce", num(bf));
        }
        Err(Error::Cap(msg)) => r.set("exact_chi2_bruteforce", json!(format!("skipped: {msg}"))),
        Err(e) => return Err(e),
    }
    let a = build_mixture_matrix(&c)?;
    let cap = instance_capacity(&c);
    let delta = max_pair_delta(ps);
    r.close("capacity_equals_trace_minus_one", cap, a.trace - 1.0, 1e-10);
    r.le("inverse_delta_le_spectral_gap", 1.0 / delta, slack(a.spectral_gap));
    r.set("instance_capacity", num(cap));
    r.set("lambda2", num(a.lambda2()));
    r.set("spectral_gap", num(a.spectral_gap));
    r.set("delta_h2", num(delta));
    r.set("eigenvalues", nums(&a.eigenvalues));
    Ok(r)
}

fn bounds_cmd(action: &BoundsCmd, seed: u64) -> Result<Report> {
    match action {
        BoundsCmd::Evaluate { components, family, c, delta, d } => {
            let (list, text) = load_components(components)?;
            let rep = match (family, c, delta, d) {
                (Some(f), ..) => evaluate_with_family(&list, &FamilySpec::from_json(&read(f)?)?, seed)?,
                (None, Some(c), Some(delta), Some(d)) => evaluate_with_inputs(
                    &list,
                    BoundInputs { n: list.n(), c: *c, delta: *delta, d: *d, provenance: Provenance::UserSupplied },
                )?,
                _ => evaluate_instance(&list)?,
            };
            let mut r = Report::new("bounds evaluate", seed, &text);
            if let Some(x) = rep.exact_chi2 {
                r.le("exact_nonnegative", -x, Config::default().comparison);
                for (name, ub) in [("ub1", rep.ub1), ("ub2", rep.ub2), ("ub3", rep.ub3)] {
                    if ub.is_finite() {
                        r.le(format!("exact_le_{name}"), x, slack(ub));
                    }
                }
            }
            for (k, v) in to_value(&rep).as_object().expect("struct").clone() {
                r.set(&k, v);
            }
            Ok(r)
        }
        BoundsCmd::EbRisk { m_loss, n, c, delta, d } => {
            let mut r = Report::new("bounds eb-risk", seed, &format!("{m_loss} {n} {c} {delta} {d}"));
            r.set("bound", num(eb_risk_gap_bound(*m_loss, *n, *c, *delta, *d)?));
            Ok(r)
        }
    }
}

fn series_cmd(components: Option<&Path>, matrix: Option<&Path>, method: Option<MethodArg>, seed: u64) -> Result<Report> {
    let methods: Vec<SeriesMethod> = match method {
        Some(m) => vec![m.into()],
        None => vec![SeriesMethod::Direct, SeriesMethod::Interpolation],
    };
    if let Some(path) = matrix {
        let text = read(path)?;
        let mut r = Report::new("series", seed, &text);
        match parse_matrix_json(&text)? {
            MatrixValue::Complex(m) => {
                let p = permanent_ryser_complex(&m)?;
                r.set("permanent", json!({"re": num(p.re), "im": num(p.im)}));
            }
            MatrixValue::Real(m) => {
                r.set("permanent", num(permanent_ryser(&m)?));
                let n = m.n;
                let stochastic = (0..n).all(|i| ((0..n).map(|j| m.get(i, j)).sum::<f64>() - 1.0).abs() <= 1e-10);
                if stochastic {
                    let abar: Vec<f64> = m.data.iter().map(|x| x - 1.0 / n as f64).collect();
                    for meth in &methods {
                        let s = series_from_centered(&abar, n, *meth)?;
                        r.set(method_name(*meth), to_value(&s));
                    }
                }
            }
        }
        return Ok(r);
    }
    let path = components.expect("clap requires one of the inputs");
    let (c, text) = load_components(path)?;
    let mut r = Report::new("series", seed, &text);
    let a = build_mixture_matrix(&c)?;
    let exact = exact_chi2_permanent(&c)?;
    let mut found = Vec::new();
    for meth in &methods {
        match s_series(&a, *meth) {
            Ok(s) => {
                r.close(format!("{}.sum_matches_exact", method_name(*meth)), s.chi2, exact, 1e-8 * (1.0 + exact));
                r.set(method_name(*meth), to_value(&s));
                found.push(s);
            }
            Err(Error::Cap(msg)) => r.set(method_name(*meth), json!(format!("skipped: {msg}"))),
            Err(e) => return Err(e),
        }
    }
    if let [a1, a2] = &found[..] {
        let worst = a1
            .s
            .iter()
            .zip(&a2.s)
            .enumerate()
            .filter(|(l, _)| *l != 1)
            .map(|(_, (x, y))| if x == y { 0.0 } else { (x - y).abs() / x.abs().max(y.abs()) })
            .fold(0.0, f64::max);
        r.le("methods_agree.max_rel", worst, 1e-5);
    }
    let sw = permanent_sandwich(&a);
    r.check("permanent_sandwich", sw.holds);
    r.set("sandwich", to_value(&sw));
    r.set("exact_chi2", num(exact));
    Ok(r)
}

fn method_name(m: SeriesMethod) -> &'static str {
    match m {
        SeriesMethod::Interpolation => "interpolation",
        SeriesMethod::Direct => "direct",
    }
}

fn definetti_cmd(path: &Path, k: Option<usize>, seed: u64) -> Result<Report> {
    let (c, text) = load_components(path)?;
    let mut r = Report::new("definetti", seed, &text);
    let ks: Vec<usize> = match k {
        Some(k) => vec![k],
        None => (1..=c.n()).collect(),
    };
    let mut rows = Vec::new();
    for k in ks {
        let d = definetti_bound_and_exact(&c, k)?;
        r.le(format!("k{k}.exact_le_bound"), d.exact, slack(d.bound));
        if let Some(bf) = d.bruteforce {
            let rel = if k == 1 { d.exact.abs() } else if d.exact == bf { 0.0 } else { (d.exact - bf).abs() / d.exact.abs().max(bf.abs()) };
            r.le(format!("k{k}.identity_vs_bruteforce"), rel, 1e-7);
        }
        rows.push(to_value(&d));
    }
    r.set("marginals", json!(rows));
    Ok(r)
}

fn worst_case_cmd(c: f64, delta: f64, m: Option<usize>, n: Option<usize>, replicate: usize, seed: u64) -> Result<Report> {
    let mut r = Report::new("worst-case", seed, &format!("{c} {delta} {m:?} {n:?} {replicate}"));
    let w = match (m, n) {
        (Some(m), Some(n)) => kronecker_worst_case(m, n, delta)?,
        _ => worst_case_matrix(c, delta)?,
    };
    if m.is_none() {
        let (mm, nn) = worst_case_dims(c, delta)?;
        r.set("formula_dims", json!([mm, nn]));
        r.le("trace_le_one_plus_c", w.trace, 1.0 + c + Config::default().validation);
    }
    if let Some(p) = w.permanent {
        r.le("block_lower_le_permanent", w.permanent_lower, slack(p));
    }
    r.set("matrix", to_value(&w));
    let fam = verify_worst_family(w.m, delta, seed)?;
    if w.m >= 2 {
        r.close("family.delta_h2_is_inverse_delta", fam.delta_h2, 1.0 / delta, 1e-10 / delta);
    }
    r.le("family.capacity_le_m_minus_1", fam.c_estimate, slack(fam.c_upper));
    r.set("family", to_value(&fam));
    let members = ComponentList::from_rows(fam.members.clone())?;
    let cap = Config::default().ryser_n.min(20);
    let times = (1..=replicate).take_while(|t| t * w.m <= cap).last().unwrap_or(0);
    if times > 0 {
        let trend = replication_trend(&members, times)?;
        r.set("replication_trend", nums(&trend));
    }
    r.set("family_d_chi2", num(max_pair_divergence(members.components(), DivergenceKind::Chi2)));
    Ok(r)
}
