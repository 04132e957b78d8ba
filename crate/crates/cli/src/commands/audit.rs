use kfbd::estimation::{
    bound_audit, robustness_study, triangle_study, AuditConfig, AuditReport, ContaminationSpec, RhoOptions,
    RobustnessReport, TriangleStudy,
};
use kfbd::{Kernel, RadialGenerator};
use serde::Serialize;

use crate::args::{AuditArgs, AuditKind};
use crate::config::Context;
use crate::error::CliError;
use crate::output::{Format, Report};

/// Accepted ratio of median fit errors between `n` and `4n` (about 2 at the
/// root-n rate).
pub const RATE_RATIO_RANGE: (f64, f64) = (1.4, 2.8);

pub fn run(args: &AuditArgs, ctx: &Context) -> Result<Report, CliError> {
    match args.kind {
        AuditKind::Expectation => expectation(args, ctx),
        AuditKind::Triangle => triangle(args, ctx),
        AuditKind::Robustness => robustness(args, ctx),
    }
}

fn generator(args: &AuditArgs, ctx: &Context) -> Result<RadialGenerator, CliError> {
    Ok(match args.generator.resolve()? {
        Some(g) => g,
        None => match ctx.config.generator {
            Some(p) => RadialGenerator::new(p)?,
            None => RadialGenerator::square(),
        },
    })
}

fn contamination(args: &AuditArgs) -> Result<ContaminationSpec, CliError> {
    Ok(ContaminationSpec::point_mass(
        args.epsilon,
        vec![args.offset],
        vec![args.theta0],
    )?)
}

fn expectation(args: &AuditArgs, ctx: &Context) -> Result<Report, CliError> {
    let cfg = match &ctx.config.audit {
        Some(cfg) => {
            let mut cfg = cfg.clone();
            if ctx.seed_from_flag {
                cfg.seed = ctx.seed;
            }
            cfg
        }
        None => AuditConfig {
            generator: generator(args, ctx)?.profile(),
            kernel: ctx.kernel(args.kernel)?.family(),
            model: ctx.model(args.model)?,
            contamination: contamination(args)?,
            dependence: args.dependence,
            n_grid: args.n_grid.clone(),
            replicates: args.replicates.unwrap_or(10),
            model_sample_size: args.model_sample_size.unwrap_or(100),
            eval_sample_size: 1000,
            reference_size: args.reference_size,
            rho: RhoOptions::default(),
            grid_points: 101,
            grid_halfwidth: 3.0,
            seed: ctx.seed,
        },
    };
    let report: AuditReport = bound_audit(&cfg)?;
    Report::new(&report, &report.rows, Format::Csv, report.pass)
}

#[derive(Debug, Serialize)]
struct TriangleOut {
    #[serde(flatten)]
    study: TriangleStudy,
    pass: bool,
}

fn triangle(args: &AuditArgs, ctx: &Context) -> Result<Report, CliError> {
    let g = generator(args, ctx)?;
    let kernel: Kernel = ctx.kernel(args.kernel)?;
    let study = triangle_study(
        &g,
        &kernel,
        &ctx.model(args.model)?,
        &contamination(args)?,
        args.instances,
        args.reference_size,
        ctx.seed,
    )?;
    let pass = study.violations == 0;
    let out = TriangleOut { study, pass };
    Report::new(&out, &[&out.study], Format::Json, pass)
}

#[derive(Debug, Serialize)]
struct RobustnessOut {
    #[serde(flatten)]
    report: RobustnessReport,
    rate_ratio_min: f64,
    rate_ratio_max: f64,
    fit_beats_mean: bool,
    pass: bool,
}

fn robustness(args: &AuditArgs, ctx: &Context) -> Result<Report, CliError> {
    let g = generator(args, ctx)?;
    let report = robustness_study(
        &g,
        &ctx.kernel(args.kernel)?,
        &ctx.model(args.model)?,
        &contamination(args)?,
        args.n,
        args.factor,
        args.replicates.unwrap_or(50),
        args.model_sample_size.unwrap_or(200),
        ctx.seed,
    )?;
    let fit_beats_mean = report.median_error_fit < report.median_error_mean;
    let (lo, hi) = RATE_RATIO_RANGE;
    let pass = fit_beats_mean && (lo..=hi).contains(&report.rate_ratio);
    let out = RobustnessOut {
        report,
        rate_ratio_min: lo,
        rate_ratio_max: hi,
        fit_beats_mean,
        pass,
    };
    Report::new(&out, &[&out.report], Format::Json, pass)
}
