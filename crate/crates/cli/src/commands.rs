//! Subcommand implementations. Each writes its files under the output
//! directory and returns the overall verdict.

use std::path::Path;

use pspin_core::ascent::{self, AscentConfig, CEstimateOptions, Termination, Trajectory};
use pspin_core::goe;
use pspin_core::hamiltonian::{self, Hamiltonian};
use pspin_core::polytope::{self, PolytopeConfig, PolytopeH, PolytopeTrajectory};
use pspin_core::{exec, geom, Error, Mixture};
use serde::Serialize;

use crate::config::{self, CBound, ExperimentConfig, Generator};
use crate::output::{self, OutputOptions};
use crate::{CliError, Verdict};

/// Tolerance on the cumulative `|x|_2^2` and `|x - x0|_2^2` telescoping sums.
pub const TELESCOPING_TOL: f64 = 1e-8;
/// Allowed energy decrease per step.
pub const MONOTONE_TOL: f64 = 1e-9;

pub struct Context {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub out: OutputOptions,
}

fn sample_hamiltonian(ctx: &Context) -> Result<Hamiltonian, CliError> {
    Ok(Hamiltonian::sample(ctx.config.mixture.clone(), ctx.config.n, ctx.seed)?)
}

fn resolve_c(h: &Hamiltonian, c: CBound, samples: usize, seed: u64) -> Result<(f64, &'static str), CliError> {
    match c {
        CBound::Value(v) => Ok((v, "config")),
        CBound::Keyword(_) => {
            let opts = CEstimateOptions { n_samples: samples, seed, refine_iters: 3 };
            Ok((ascent::estimate_c_with(h, &opts)?, "estimated"))
        }
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn min(xs: &[f64]) -> Option<f64> {
    xs.iter().copied().reduce(f64::min)
}

fn required(n: usize, fraction: f64) -> usize {
    (fraction * n as f64 - 1e-9).ceil().max(0.0) as usize
}

#[derive(Debug, Serialize)]
pub struct CubeTrajectorySummary {
    pub index: usize,
    pub x0_norm_sq: f64,
    pub final_norm_sq: f64,
    pub steps: usize,
    pub termination: Termination,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub realized_gain: f64,
    /// `int_{|x0|^2}^{1 - delta} zeta(t) sqrt(1 - t) dt`.
    pub integral: f64,
    pub riemann_sum: f64,
    pub gain_pass: bool,
    pub monotone: bool,
    pub telescoping_error: f64,
    pub steps_certified: usize,
    pub pass: bool,
}

/// Largest deviation of `|x^i|_2^2 - |x^0|_2^2` from the partial sums of
/// `|v|_2^2`, including the final point.
fn cumulative_error(start: f64, rows: impl Iterator<Item = (f64, f64)>, end: f64) -> f64 {
    let mut sum = 0.0;
    let mut worst = 0.0_f64;
    for (at, v) in rows {
        worst = worst.max((at - start - sum).abs());
        sum += v;
    }
    worst.max((end - start - sum).abs())
}

pub fn summarize_cube(
    index: usize,
    t: &Trajectory,
    m: &Mixture,
    delta: f64,
    eta: f64,
) -> Result<CubeTrajectorySummary, CliError> {
    let q0 = t.initial_norm_sq();
    let upper = 1.0 - delta;
    let integral = if q0 < upper { m.gain_integral_cube(q0.max(0.0), upper)? } else { 0.0 };
    let riemann_sum = ascent::gain_lower_bound(t, m, delta)?.riemann_sum;
    let realized_gain = t.realized_gain();
    let monotone = t.steps.iter().all(|s| s.realized_gain() >= -MONOTONE_TOL);
    let telescoping_error = cumulative_error(
        q0,
        t.steps.iter().map(|s| (s.x_norm_sq, s.v_norm_sq)),
        t.final_norm_sq(),
    );
    let gain_pass = realized_gain >= integral - eta;
    let steps_certified = t.steps.iter().filter(|s| s.realized_gain() >= s.bound_gain - MONOTONE_TOL).count();
    let pass = t.termination == Termination::ReachedNorm
        && monotone
        && telescoping_error <= TELESCOPING_TOL
        && gain_pass;
    Ok(CubeTrajectorySummary {
        index,
        x0_norm_sq: q0,
        final_norm_sq: t.final_norm_sq(),
        steps: t.steps.len(),
        termination: t.termination,
        initial_energy: t.initial_energy(),
        final_energy: t.final_energy,
        realized_gain,
        integral,
        riemann_sum,
        gain_pass,
        monotone,
        telescoping_error,
        steps_certified,
        pass,
    })
}

#[derive(Debug, Serialize)]
struct AscendSummary<'a> {
    command: &'static str,
    n: usize,
    seed: u64,
    mixture: &'a Mixture,
    eps: f64,
    delta: f64,
    c_bound: f64,
    c_bound_source: &'static str,
    step_cap: f64,
    eta: f64,
    n_trajectories: usize,
    min_gain: Option<f64>,
    mean_gain: Option<f64>,
    n_pass: usize,
    n_required: usize,
    total_steps: usize,
    steps_certified: usize,
    trajectories: Vec<CubeTrajectorySummary>,
    verdict: &'static str,
}

fn starts(
    n_trajectories: usize,
    file: Option<&Path>,
    n: usize,
    sample: impl Fn(usize) -> pspin_core::Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>, CliError> {
    match file {
        Some(path) => {
            let pts = config::read_points(path, n)?;
            if pts.len() < n_trajectories {
                return Err(CliError::Config(format!(
                    "{} holds {} points but {n_trajectories} trajectories were requested",
                    path.display(),
                    pts.len()
                )));
            }
            Ok(pts.into_iter().take(n_trajectories).collect())
        }
        None => Ok((0..n_trajectories).map(sample).collect::<pspin_core::Result<_>>()?),
    }
}

pub fn ascend(ctx: &Context) -> Result<Verdict, CliError> {
    let cfg = &ctx.config;
    let sec = cfg.section(&cfg.ascent, "ascent")?;
    let h = sample_hamiltonian(ctx)?;
    let (c_bound, c_bound_source) = resolve_c(&h, sec.c_bound, sec.c_samples, ctx.seed)?;
    let mut acfg = AscentConfig::new(sec.eps, sec.delta, c_bound)?;
    acfg.step_cap = sec.step_cap;
    acfg.max_steps = sec.max_steps;
    acfg.clamp_tol = sec.clamp_tol;
    acfg.line_search = sec.line_search;
    acfg.seed = ctx.seed;
    acfg.validate()?;

    let x0s = starts(sec.n_trajectories, sec.start_file.as_deref(), cfg.n, |i| {
        sec.start.sample_cube(cfg.n, ctx.seed, i)
    })?;
    let runs = exec::map_indexed(x0s.len(), |i| match ascent::run_ascent(&h, &x0s[i], &acfg) {
        Ok(t) => Ok(t),
        Err(Error::MaxStepsExceeded(t)) => Ok(*t),
        Err(e) => Err(e),
    });
    let runs = runs.into_iter().collect::<pspin_core::Result<Vec<_>>>()?;

    ctx.out.ensure_dir()?;
    let mut summaries = Vec::with_capacity(runs.len());
    for (i, t) in runs.iter().enumerate() {
        t.write_csv(ctx.out.create(&format!("trajectory_{i}.csv"))?)?;
        summaries.push(summarize_cube(i, t, &cfg.mixture, sec.delta, sec.eta)?);
    }
    let gains: Vec<f64> = summaries.iter().map(|s| s.realized_gain).collect();
    let n_pass = summaries.iter().filter(|s| s.pass).count();
    let n_required = required(summaries.len(), sec.min_pass_fraction);
    let verdict = Verdict::from_bool(n_pass >= n_required);
    let summary = AscendSummary {
        command: "ascend",
        n: cfg.n,
        seed: ctx.seed,
        mixture: &cfg.mixture,
        eps: sec.eps,
        delta: sec.delta,
        c_bound,
        c_bound_source,
        step_cap: acfg.step_cap(),
        eta: sec.eta,
        n_trajectories: summaries.len(),
        min_gain: min(&gains),
        mean_gain: mean(&gains),
        n_pass,
        n_required,
        total_steps: summaries.iter().map(|s| s.steps).sum(),
        steps_certified: summaries.iter().map(|s| s.steps_certified).sum(),
        trajectories: summaries,
        verdict: verdict.as_str(),
    };
    ctx.out.write_json("ascend_summary.json", &summary)?;
    Ok(verdict)
}

#[derive(Debug, Serialize)]
pub struct PolytopeTrajectorySummary {
    pub index: usize,
    pub x0_norm_sq: f64,
    pub final_norm_sq: f64,
    pub final_dist_sq: f64,
    pub final_dim_u: usize,
    pub steps: usize,
    pub termination: Termination,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub realized_gain: f64,
    /// `sqrt(eps) int_{|x0|^2}^{|x0|^2 + |x^m - x0|^2} zeta(t) dt`.
    pub integral: f64,
    pub gain_pass: bool,
    pub monotone: bool,
    pub dim_u_monotone: bool,
    pub norm_telescoping_error: f64,
    pub dist_telescoping_error: f64,
    pub steps_certified: usize,
    /// `|x^m - x0|_2^2 <= eps_prime`, when `eps_prime` is configured.
    pub within_eps_prime: Option<bool>,
    pub pass: bool,
}

pub fn summarize_polytope(
    index: usize,
    t: &PolytopeTrajectory,
    m: &Mixture,
    eps: f64,
    eta: f64,
    eps_prime: Option<f64>,
) -> Result<PolytopeTrajectorySummary, CliError> {
    let q0 = geom::norm_sq(&t.x0);
    let integral = t.gain_integral(m, eps)?;
    let realized_gain = t.realized_gain();
    let monotone = t.steps.iter().all(|s| s.realized_gain() >= -MONOTONE_TOL);
    let dim_u_monotone = t.steps.windows(2).all(|w| w[1].dim_u <= w[0].dim_u)
        && t.steps.last().is_none_or(|s| t.final_dim_u <= s.dim_u);
    let norm_telescoping_error = cumulative_error(
        q0,
        t.steps.iter().map(|s| (s.x_norm_sq, s.v_norm_sq)),
        geom::norm_sq(&t.final_point),
    );
    let dist_telescoping_error =
        cumulative_error(0.0, t.steps.iter().map(|s| (s.dist_sq, s.v_norm_sq)), t.final_dist_sq());
    let gain_pass = realized_gain >= integral - eta;
    let steps_certified = t.steps.iter().filter(|s| s.realized_gain() >= s.bound_gain - MONOTONE_TOL).count();
    let pass = t.termination == Termination::ReachedCorner
        && monotone
        && dim_u_monotone
        && norm_telescoping_error <= TELESCOPING_TOL
        && dist_telescoping_error <= TELESCOPING_TOL
        && gain_pass;
    Ok(PolytopeTrajectorySummary {
        index,
        x0_norm_sq: q0,
        final_norm_sq: geom::norm_sq(&t.final_point),
        final_dist_sq: t.final_dist_sq(),
        final_dim_u: t.final_dim_u,
        steps: t.steps.len(),
        termination: t.termination,
        initial_energy: t.initial_energy(),
        final_energy: t.final_energy,
        realized_gain,
        integral,
        gain_pass,
        monotone,
        dim_u_monotone,
        norm_telescoping_error,
        dist_telescoping_error,
        steps_certified,
        within_eps_prime: eps_prime.map(|e| t.final_dist_sq() <= e),
        pass,
    })
}

#[derive(Debug, Serialize)]
struct PolytopeSummary<'a> {
    command: &'static str,
    n: usize,
    seed: u64,
    mixture: &'a Mixture,
    polytope_constraints: usize,
    eps: f64,
    delta: f64,
    eps_prime: Option<f64>,
    c_bound: f64,
    c_bound_source: &'static str,
    step_cap: f64,
    eta: f64,
    n_trajectories: usize,
    min_gain: Option<f64>,
    mean_gain: Option<f64>,
    n_pass: usize,
    n_required: usize,
    total_steps: usize,
    steps_certified: usize,
    trajectories: Vec<PolytopeTrajectorySummary>,
    verdict: &'static str,
}

pub fn ascend_polytope(ctx: &Context) -> Result<Verdict, CliError> {
    let cfg = &ctx.config;
    let sec = cfg.section(&cfg.polytope, "polytope")?;
    let p = sec.load()?;
    if p.n() != cfg.n {
        return Err(CliError::Config(format!("polytope dimension {} differs from n = {}", p.n(), cfg.n)));
    }
    let h = sample_hamiltonian(ctx)?;
    let (c_bound, c_bound_source) = resolve_c(&h, sec.c_bound, sec.c_samples, ctx.seed)?;
    let mut acfg = AscentConfig::new(sec.eps, sec.delta, c_bound)?;
    acfg.step_cap = sec.step_cap;
    acfg.max_steps = sec.max_steps;
    acfg.line_search = sec.line_search;
    acfg.seed = ctx.seed;
    let pcfg = PolytopeConfig { ascent: acfg, act_tol: sec.act_tol };
    pcfg.validate()?;

    let x0s = starts(sec.n_trajectories, sec.start_file.as_deref(), cfg.n, |i| {
        sec.start.sample_polytope(&p, ctx.seed, i)
    })?;
    for (i, x0) in x0s.iter().enumerate() {
        if !p.contains(x0, sec.act_tol) {
            return Err(CliError::Config(format!("start {i} lies outside the polytope")));
        }
    }
    let runs = exec::map_indexed(x0s.len(), |i| match polytope::run_polytope_ascent(&h, &p, &x0s[i], &pcfg) {
        Ok(t) => Ok(t),
        Err(Error::PolytopeMaxStepsExceeded(t)) => Ok(*t),
        Err(e) => Err(e),
    });
    let runs = runs.into_iter().collect::<pspin_core::Result<Vec<_>>>()?;

    ctx.out.ensure_dir()?;
    let mut summaries = Vec::with_capacity(runs.len());
    for (i, t) in runs.iter().enumerate() {
        t.write_csv(ctx.out.create(&format!("polytope_trajectory_{i}.csv"))?)?;
        summaries.push(summarize_polytope(i, t, &cfg.mixture, sec.eps, sec.eta, sec.eps_prime)?);
    }
    let gains: Vec<f64> = summaries.iter().map(|s| s.realized_gain).collect();
    let n_pass = summaries.iter().filter(|s| s.pass).count();
    let n_required = required(summaries.len(), sec.min_pass_fraction);
    let verdict = Verdict::from_bool(n_pass >= n_required);
    let summary = PolytopeSummary {
        command: "ascend-polytope",
        n: cfg.n,
        seed: ctx.seed,
        mixture: &cfg.mixture,
        polytope_constraints: p.m(),
        eps: sec.eps,
        delta: sec.delta,
        eps_prime: sec.eps_prime,
        c_bound,
        c_bound_source,
        step_cap: pcfg.ascent.step_cap(),
        eta: sec.eta,
        n_trajectories: summaries.len(),
        min_gain: min(&gains),
        mean_gain: mean(&gains),
        n_pass,
        n_required,
        total_steps: summaries.iter().map(|s| s.steps).sum(),
        steps_certified: summaries.iter().map(|s| s.steps_certified).sum(),
        trajectories: summaries,
        verdict: verdict.as_str(),
    };
    ctx.out.write_json("ascend_polytope_summary.json", &summary)?;
    Ok(verdict)
}

/// One named pass/fail check with its measured value and tolerance.
#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
struct ChecksSummary<T: Serialize> {
    command: &'static str,
    seed: u64,
    checks: Vec<Check>,
    details: T,
    verdict: &'static str,
}

fn finish<T: Serialize>(ctx: &Context, command: &'static str, file: &str, checks: Vec<Check>, details: T) -> Result<Verdict, CliError> {
    let verdict = Verdict::from_bool(checks.iter().all(|c| c.pass));
    let summary = ChecksSummary { command, seed: ctx.seed, checks, details, verdict: verdict.as_str() };
    ctx.out.write_json(file, &summary)?;
    Ok(verdict)
}

#[derive(Debug, Default, Serialize)]
struct GoeDetails {
    tail_frequencies: Option<Vec<f64>>,
    semicircle_ks: Option<f64>,
    restricted: Option<Vec<goe::GoeStatsReport>>,
}

pub fn validate_goe(ctx: &Context) -> Result<Verdict, CliError> {
    let cfg = &ctx.config;
    let sec = cfg.section(&cfg.goe, "goe")?;
    let mut checks = Vec::new();
    let mut details = GoeDetails::default();
    if let Some(t) = &sec.tail {
        if t.min_freq.len() != t.ks.len() {
            return Err(CliError::Config("goe.tail.min_freq needs one entry per k".into()));
        }
        let freqs = goe::lambda_k_tail_freqs(t.d, &t.ks, t.delta, t.n_samples, ctx.seed)?;
        for ((k, f), min_f) in t.ks.iter().zip(&freqs).zip(&t.min_freq) {
            checks.push(Check {
                name: format!("lambda_{k} >= 2 - {} frequency (d = {})", t.delta, t.d),
                measured: *f,
                target: *min_f,
                tolerance: "measured >= target".into(),
                pass: f >= min_f,
            });
        }
        details.tail_frequencies = Some(freqs);
    }
    if let Some(s) = &sec.semicircle {
        let spectrum = goe::pooled_spectrum(s.d, s.n_samples, ctx.seed)?;
        if s.write_spectrum {
            use std::io::Write;
            let mut w = ctx.out.create("goe_spectrum.csv")?;
            writeln!(w, "eigenvalue")?;
            for e in &spectrum {
                writeln!(w, "{e}")?;
            }
            w.flush()?;
        }
        let ks = goe::semicircle_ks(s.d, s.n_samples, ctx.seed)?;
        checks.push(Check {
            name: format!("semicircle KS distance (d = {})", s.d),
            measured: ks,
            target: s.max_ks,
            tolerance: "measured < target".into(),
            pass: ks < s.max_ks,
        });
        details.semicircle_ks = Some(ks);
    }
    if let Some(r) = &sec.restricted {
        let x = goe::random_sign_point(cfg.n, r.x_norm_sq, ctx.seed);
        let subsets = goe::nested_subsets(cfg.n, &r.subset_sizes, ctx.seed)?;
        let reports = goe::restricted_hessian_stats_multi(&cfg.mixture, cfg.n, &x, &subsets, r.n_samples, ctx.seed)?;
        for (size, rep) in r.subset_sizes.iter().zip(&reports) {
            checks.push(Check {
                name: format!("off-diagonal variance |S| = {size}"),
                measured: rep.offdiag_var_emp,
                target: rep.offdiag_var_theory,
                tolerance: format!("{} standard errors", r.z_tol),
                pass: rep.offdiag_z().abs() <= r.z_tol,
            });
            checks.push(Check {
                name: format!("diagonal variance |S| = {size}"),
                measured: rep.diag_var_emp,
                target: rep.diag_var_theory,
                tolerance: format!("{} standard errors", r.z_tol),
                pass: rep.diag_z().abs() <= r.z_tol,
            });
            if rep.d >= r.lambda_min_d {
                checks.push(Check {
                    name: format!("lambda_1 mean |S| = {size}"),
                    measured: rep.lambda1_mean,
                    target: rep.lambda1_theory,
                    tolerance: format!("relative {}", r.lambda_rel_tol),
                    pass: rep.lambda1_rel_error() <= r.lambda_rel_tol,
                });
            }
        }
        details.restricted = Some(reports);
    }
    finish(ctx, "validate-goe", "validate_goe.json", checks, details)
}

pub fn validate_covariance(ctx: &Context) -> Result<Verdict, CliError> {
    let cfg = &ctx.config;
    let sec = cfg.section(&cfg.covariance, "covariance")?;
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = match &sec.pairs {
        Some(p) => p.iter().map(|[x, y]| (x.clone(), y.clone())).collect(),
        None => hamiltonian::covariance_test_pairs(cfg.n, sec.n_random_pairs, ctx.seed)?,
    };
    let report = hamiltonian::covariance_check(&cfg.mixture, cfg.n, &pairs, sec.n_seeds, ctx.seed, sec.z_tol)?;
    let mut checks: Vec<Check> = report
        .pairs
        .iter()
        .map(|p| Check {
            name: format!("covariance at overlap {}", p.overlap),
            measured: p.empirical,
            target: p.expected,
            tolerance: format!("{} standard errors", sec.z_tol),
            pass: p.pass,
        })
        .collect();
    checks.push(Check {
        name: "gaussian marginal KS".into(),
        measured: report.gaussian_ks,
        target: report.gaussian_ks_critical,
        tolerance: "measured < 1% critical value".into(),
        pass: report.gaussian_ks < report.gaussian_ks_critical,
    });
    finish(ctx, "validate-covariance", "validate_covariance.json", checks, report)
}

#[derive(Debug, Serialize)]
struct EstimateCSummary<'a> {
    command: &'static str,
    n: usize,
    seed: u64,
    mixture: &'a Mixture,
    n_samples: usize,
    refine_iters: usize,
    c_bound: f64,
}

pub fn estimate_c(ctx: &Context) -> Result<Verdict, CliError> {
    let cfg = &ctx.config;
    let sec = cfg.section(&cfg.estimate_c, "estimate_c")?;
    let h = sample_hamiltonian(ctx)?;
    let opts = CEstimateOptions { n_samples: sec.n_samples, seed: ctx.seed, refine_iters: sec.refine_iters };
    let c = ascent::estimate_c_with(&h, &opts)?;
    ctx.out.write_json(
        "estimate_c.json",
        &EstimateCSummary {
            command: "estimate-c",
            n: cfg.n,
            seed: ctx.seed,
            mixture: &cfg.mixture,
            n_samples: sec.n_samples,
            refine_iters: sec.refine_iters,
            c_bound: c,
        },
    )?;
    Ok(Verdict::Pass)
}

pub fn check_goodness(ctx: &Context) -> Result<Verdict, CliError> {
    let cfg = &ctx.config;
    let sec = cfg.section(&cfg.goodness, "goodness")?;
    let h = sample_hamiltonian(ctx)?;
    let x = match &sec.point {
        Some(p) => p.clone(),
        None => sec.start.sample_cube(cfg.n, ctx.seed, 0)?,
    };
    let report = ascent::check_goodness(&h, &x, sec.eps, sec.delta, sec.n_subsets, ctx.seed)?;
    let checks = vec![Check {
        name: "goodness pass fraction".into(),
        measured: report.pass_fraction,
        target: sec.min_pass_fraction,
        tolerance: "measured >= target".into(),
        pass: report.pass_fraction >= sec.min_pass_fraction,
    }];
    finish(ctx, "check-goodness", "check_goodness.json", checks, report)
}

/// Writes the generated polytope as `{n, rows, b}` JSON.
pub fn gen_polytope(generator: &Generator, path: &Path) -> Result<PolytopeH, CliError> {
    let p = generator.build()?;
    output::write_json_file(path, &p.to_file_format())?;
    Ok(p)
}
