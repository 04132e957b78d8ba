use kfbd::estimation::{median, min_divergence_fit, FitOptions};
use kfbd::{RadialGenerator, SampleSet};
use serde::Serialize;

use crate::args::FitArgs;
use crate::config::Context;
use crate::error::CliError;
use crate::output::{Format, Report};

#[derive(Debug, Serialize)]
struct FitOut {
    data: String,
    n: usize,
    dim: usize,
    model: String,
    kernel: String,
    generator: String,
    theta_hat: Vec<f64>,
    objective: f64,
    evals: usize,
    sample_mean: Vec<f64>,
    sample_median: Vec<f64>,
    model_sample_size: usize,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct Row {
    coordinate: usize,
    theta_hat: f64,
    sample_mean: f64,
    sample_median: f64,
    objective: f64,
}

pub fn run(args: &FitArgs, ctx: &Context) -> Result<Report, CliError> {
    let path = ctx.input(&args.data.clone().or_else(|| args.data_flag.clone()), 0, "data sample")?;
    let kernel = ctx.kernel(args.kernel)?;
    let generator = match args.generator.resolve()? {
        Some(g) => g,
        None => match ctx.config.generator {
            Some(p) => RadialGenerator::new(p)?,
            None => RadialGenerator::square(),
        },
    };
    let data = SampleSet::read(&path)?;
    let model = ctx.model(args.model)?.with_dim(data.dim())?;
    let opts = FitOptions {
        model_sample_size: args.model_sample_size,
        restarts: args.restarts,
        seed: ctx.seed,
        ..FitOptions::default()
    };
    let fit = min_divergence_fit(&model, &data, &generator, &kernel, &opts)?;
    let out = FitOut {
        data: path.display().to_string(),
        n: data.len(),
        dim: data.dim(),
        model: model.to_string(),
        kernel: kernel.family().to_string(),
        generator: generator.to_string(),
        theta_hat: fit.theta_hat.clone(),
        objective: fit.objective,
        evals: fit.evals,
        sample_mean: data.mean(),
        sample_median: median(&data),
        model_sample_size: fit.model_sample_size,
        seed: fit.seed,
    };
    let rows: Vec<Row> = (0..out.dim)
        .map(|c| Row {
            coordinate: c,
            theta_hat: out.theta_hat[c],
            sample_mean: out.sample_mean[c],
            sample_median: out.sample_median[c],
            objective: out.objective,
        })
        .collect();
    Report::new(&out, &rows, Format::Json, true)
}
