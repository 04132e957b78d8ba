use kfbd::divergence::{deformed_divergence, operator_g_divergence, OperatorG, QuadratureGrid, ScalarMap};
use kfbd::{embed, RadialGenerator, SampleSet};
use serde::Serialize;

use crate::args::{DivergenceArgs, OperatorKind};
use crate::config::Context;
use crate::error::CliError;
use crate::output::{Format, Report};

#[derive(Debug, Serialize)]
struct Row {
    p: String,
    q: String,
    kernel: String,
    generator: String,
    value: f64,
    mmd_sq: f64,
    norm_f: f64,
    norm_g: f64,
    cross: f64,
    lower: f64,
    upper: f64,
    #[serde(rename = "R")]
    radius: f64,
    #[serde(rename = "R_tight")]
    tight_radius: f64,
    #[serde(rename = "m")]
    curvature_min: f64,
    #[serde(rename = "L")]
    curvature_max: f64,
    within_bounds: bool,
    operator: Option<&'static str>,
    operator_value: Option<f64>,
}

pub fn run(args: &DivergenceArgs, ctx: &Context) -> Result<Report, CliError> {
    let p_path = ctx.input(&args.first, 0, "first sample")?;
    let q_path = ctx.input(&args.second, 1, "second sample")?;
    let kernel = ctx.kernel(args.kernel)?;
    let generator = match args.generator.resolve()? {
        Some(g) => g,
        None => match ctx.config.generator {
            Some(p) => RadialGenerator::new(p)?,
            None => RadialGenerator::square(),
        },
    };
    let p = SampleSet::read(&p_path)?;
    let q = SampleSet::read(&q_path)?;
    let r = deformed_divergence(&generator, &embed(&kernel, &p), &embed(&kernel, &q))?;
    let (operator, operator_value) = match args.operator {
        None => (None, None),
        Some(kind) => {
            let (name, op) = match kind {
                OperatorKind::Identity => ("identity", OperatorG::Identity),
                OperatorKind::Deformed => ("deformed", OperatorG::Deformed(ScalarMap::RadialQuotient(generator))),
                OperatorKind::PointwiseLog => {
                    let grid = QuadratureGrid::covering(&p, &q, 3.0 * kernel.width(), args.grid_points)?;
                    (
                        "pointwise_log",
                        OperatorG::Pointwise {
                            sigma: ScalarMap::Log,
                            grid,
                        },
                    )
                }
            };
            (Some(name), Some(operator_g_divergence(&op, &kernel, &p, &q)?))
        }
    };
    let row = Row {
        p: p_path.display().to_string(),
        q: q_path.display().to_string(),
        kernel: kernel.family().to_string(),
        generator: generator.to_string(),
        value: r.value,
        mmd_sq: r.mmd_sq,
        norm_f: r.norm_f,
        norm_g: r.norm_g,
        cross: r.cross,
        lower: r.lower,
        upper: r.upper,
        radius: r.radius,
        tight_radius: r.tight_radius,
        curvature_min: r.curvature_min,
        curvature_max: r.curvature_max,
        within_bounds: r.within_bounds(),
        operator,
        operator_value,
    };
    Report::new(&row, &[&row], Format::Json, true)
}
