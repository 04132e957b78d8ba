use kfbd::estimation::{
    bound_audit, generate, min_divergence_fit, rho_estimate, triangle_study, AuditConfig, ContaminationSpec,
    DependenceSpec, FitObjective, FitOptions, RhoOptions,
};
use kfbd::findim::suite::{self, SuiteConfig};
use kfbd::rng::substream;
use kfbd::scan::{sandwich_scan, PairDesign, SandwichScan};
use kfbd::{Kernel, KernelFamily, RadialGenerator, RadialProfile};
use serde::Serialize;

use crate::args::{Suite, VerifyArgs};
use crate::config::Context;
use crate::error::CliError;
use crate::output::{Format, Report};

pub const SANDWICH_PAIRS: usize = 10_000;

pub fn run(args: &VerifyArgs, ctx: &Context) -> Result<Report, CliError> {
    match args.suite {
        Suite::Findim => findim(args, ctx),
        Suite::Sandwich => sandwich(args, ctx),
        Suite::EstimationSmoke => estimation_smoke(ctx),
    }
}

fn findim(args: &VerifyArgs, ctx: &Context) -> Result<Report, CliError> {
    if args.generator.generator.is_some() {
        return Err(CliError::Input("--generator does not apply to the findim suite".into()));
    }
    let mut cfg = ctx.config.suite.clone().unwrap_or_default();
    if ctx.seed_from_flag || ctx.config.suite.is_none() {
        cfg.seed = ctx.seed;
    }
    if let Some(t) = args.trials.or(ctx.config.trials) {
        cfg.trials = t;
    }
    check_suite(&cfg)?;
    let report = suite::run(&cfg)?;
    Report::new(&report, &report.results, Format::Json, report.pass)
}

fn check_suite(cfg: &SuiteConfig) -> Result<(), CliError> {
    if cfg.trials == 0 || cfg.dual_trials == 0 || cfg.mean_trials == 0 || cfg.triangle_trials == 0 {
        return Err(CliError::Input("suite trial counts must be positive".into()));
    }
    if cfg.dims.iter().chain(&cfg.triangle_dims).any(|&d| d == 0) {
        return Err(CliError::Input("suite dimensions must be positive".into()));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SandwichReport {
    suite: &'static str,
    seed: u64,
    pass: bool,
    results: Vec<SandwichScan>,
}

fn sandwich(args: &VerifyArgs, ctx: &Context) -> Result<Report, CliError> {
    let generators = match args.generator.resolve()? {
        Some(g) => vec![g],
        None => match ctx.config.generator {
            Some(p) => vec![RadialGenerator::new(p)?],
            None => suite::radial_profiles(),
        },
    };
    let pairs = args.trials.or(ctx.config.trials).unwrap_or(SANDWICH_PAIRS);
    let results = generators
        .iter()
        .map(|g| sandwich_scan(g, pairs, args.radius, &PairDesign::default(), ctx.seed, false))
        .collect::<kfbd::Result<Vec<_>>>()?;
    let report = SandwichReport {
        suite: "sandwich",
        seed: ctx.seed,
        pass: results.iter().all(SandwichScan::pass),
        results,
    };
    Report::new(&report, &report.results, Format::Json, report.pass)
}

#[derive(Debug, Clone, Serialize)]
struct Check {
    check: &'static str,
    statistic: f64,
    tolerance: f64,
    comparison: &'static str,
    pass: bool,
}

fn at_most(check: &'static str, statistic: f64, tolerance: f64) -> Check {
    Check {
        check,
        statistic,
        tolerance,
        comparison: "<=",
        pass: statistic <= tolerance,
    }
}

#[derive(Debug, Serialize)]
struct SmokeReport {
    suite: &'static str,
    seed: u64,
    pass: bool,
    results: Vec<Check>,
}

/// Small, fast versions of the estimation checks.
fn estimation_smoke(ctx: &Context) -> Result<Report, CliError> {
    let seed = ctx.seed;
    let model = ctx.model(None)?;
    let kernel = Kernel::gaussian(1.0)?;
    let square = RadialGenerator::square();
    let clean = ContaminationSpec::none(vec![0.0]);
    let dirty = ContaminationSpec::point_mass(0.1, vec![10.0], vec![0.0])?;
    let opts = FitOptions {
        seed,
        ..FitOptions::default()
    };
    let mut results = Vec::new();

    let data = generate(
        &model,
        &clean,
        &DependenceSpec::Iid,
        500,
        &mut substream(seed, "smoke_clean"),
    )?;
    let fit = min_divergence_fit(&model, &data, &square, &kernel, &opts)?;
    results.push(at_most("clean_fit_abs_error", fit.theta_hat[0].abs(), 0.2));
    let base = model.crn_base(opts.model_sample_size, &mut substream(seed, "model"))?;
    let objective = FitObjective::new(&kernel, &square, &model, base, &data)?;
    results.push(at_most(
        "objective_at_fit_minus_at_truth",
        fit.objective - objective.value(&[0.0])?,
        1e-3,
    ));

    let data = generate(
        &model,
        &dirty,
        &DependenceSpec::Iid,
        500,
        &mut substream(seed, "smoke_dirty"),
    )?;
    let fit = min_divergence_fit(&model, &data, &square, &kernel, &opts)?;
    results.push(at_most(
        "contaminated_fit_error_minus_mean_error",
        fit.theta_hat[0].abs() - data.mean()[0].abs(),
        0.0,
    ));

    let rho = RhoOptions {
        n: 400,
        replicates: 20,
        reference_size: 2000,
        max_lag: 20,
    };
    let r = rho_estimate(&kernel, &model, &clean, &DependenceSpec::Iid, &rho, seed)?;
    results.push(at_most("iid_rho_in_se", r.sum.abs() / r.se.max(f64::MIN_POSITIVE), 3.0));

    let audit = bound_audit(&AuditConfig {
        generator: RadialProfile::Square,
        kernel: KernelFamily::Gaussian { bandwidth: 1.0 },
        model,
        contamination: clean.clone(),
        dependence: DependenceSpec::Iid,
        n_grid: vec![50, 200],
        replicates: 4,
        model_sample_size: 100,
        eval_sample_size: 300,
        reference_size: 1000,
        rho,
        grid_points: 41,
        grid_halfwidth: 3.0,
        seed,
    })?;
    let worst = audit
        .rows
        .iter()
        .map(|r| r.lhs - r.rhs - 3.0 * r.lhs_se)
        .fold(f64::NEG_INFINITY, f64::max);
    results.push(at_most("expectation_bound_excess", worst, 0.0));

    let tri = triangle_study(
        &RadialGenerator::exp_centered(),
        &kernel,
        &model,
        &dirty,
        10,
        1000,
        seed,
    )?;
    results.push(at_most("triangle_violations", tri.violations as f64, 0.0));

    let report = SmokeReport {
        suite: "estimation-smoke",
        seed,
        pass: results.iter().all(|c| c.pass),
        results,
    };
    Report::new(&report, &report.results, Format::Json, report.pass)
}
