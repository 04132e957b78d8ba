use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{generate, prefix, reference, ContaminationSpec, DependenceSpec};
use super::fit::{fit_with, FitObjective, FitOptions, NelderMeadOptions};
use super::model::LocationModel;
use crate::divergence::deformed_from_moments;
use crate::embedding::{embed, eval_at, inner, norm_sq, PairMoments};
use crate::error::{Error, Result};
use crate::generators::{RadialGenerator, RadialProfile, SandwichConstants};
use crate::kernels::{Kernel, KernelFamily};
use crate::rng::{substream, trial_stream};
use crate::sample::{PointCloud, SampleSet};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Embedding of a fixed sample with its squared norm cached.
struct Cached<'a> {
    sample: &'a SampleSet<f64>,
    norm_sq: f64,
}

impl<'a> Cached<'a> {
    fn new(kernel: &Kernel<f64>, sample: &'a SampleSet<f64>) -> Self {
        Self {
            sample,
            norm_sq: norm_sq(&embed(kernel, sample)),
        }
    }

    fn moments(&self, kernel: &Kernel<f64>, other: &SampleSet<f64>, other_norm_sq: f64) -> Result<PairMoments<f64>> {
        Ok(PairMoments {
            norm_sq_a: other_norm_sq,
            norm_sq_b: self.norm_sq,
            cross: inner(&embed(kernel, other), &embed(kernel, self.sample))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RhoOptions {
    /// Length of each simulated series.
    pub n: usize,
    pub replicates: usize,
    /// Size of the stratified sample standing in for the stationary law.
    pub reference_size: usize,
    pub max_lag: usize,
}

impl Default for RhoOptions {
    fn default() -> Self {
        Self {
            n: 1000,
            replicates: 50,
            reference_size: 10_000,
            max_lag: 50,
        }
    }
}

/// Estimate of `sum_i rho_i`, `rho_i = E <k(X_i,.) - mu, k(X_0,.) - mu>`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    /// `sum_{i <= lag} rho_i`
    pub sum: f64,
    pub se: f64,
    /// Last lag included: lag 1 always, then every lag before the first one
    /// whose estimate is below two standard errors in magnitude.
    pub lag: usize,
    pub per_lag: Vec<f64>,
    pub per_lag_se: Vec<f64>,
}

/// Monte Carlo estimate of the summed kernelised autocovariance of the
/// (stationary) data process.
pub fn rho_estimate(
    kernel: &Kernel<f64>,
    model: &LocationModel,
    contamination: &ContaminationSpec,
    dependence: &DependenceSpec,
    opts: &RhoOptions,
    seed: u64,
) -> Result<RhoEstimate> {
    if opts.replicates < 2 || opts.n < 2 {
        return Err(Error::invalid("rho estimate needs at least 2 replicates of length 2"));
    }
    let max_lag = opts.max_lag.clamp(1, opts.n - 1);
    let reference = reference(
        model,
        contamination,
        opts.reference_size,
        &mut substream(seed, "rho_reference"),
    )?;
    let mu = embed(kernel, &reference);
    let mu_norm = norm_sq(&mu);
    // per chain: lag-i averages of centred inner products
    let chains = (0..opts.replicates)
        .into_par_iter()
        .map(|r| {
            let x = generate(
                model,
                contamination,
                dependence,
                opts.n,
                &mut trial_stream(seed, r, "rho"),
            )?;
            let m: Vec<f64> = x.points().iter().map(|p| eval_at(&mu, p)).collect::<Result<_>>()?;
            Ok((1..=max_lag)
                .map(|i| {
                    let s: f64 = (0..opts.n - i)
                        .map(|t| {
                            kernel.eval_unchecked(x.points().point(t), x.points().point(t + i)) - m[t] - m[t + i]
                                + mu_norm
                        })
                        .sum();
                    s / (opts.n - i) as f64
                })
                .collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let (per_lag, per_lag_se): (Vec<f64>, Vec<f64>) = (0..max_lag)
        .map(|i| mean_se(&chains.iter().map(|c| c[i]).collect::<Vec<_>>()))
        .unzip();
    let mut lag = 1;
    while lag < max_lag && per_lag[lag].abs() >= 2.0 * per_lag_se[lag] {
        lag += 1;
    }
    let sums: Vec<f64> = chains.iter().map(|c| c[..lag].iter().sum()).collect();
    let (sum, se) = mean_se(&sums);
    Ok(RhoEstimate {
        sum,
        se,
        lag,
        per_lag,
        per_lag_se,
    })
}

/// `inf_theta MMD(p_theta, p0)` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfimum {
    pub mmd: f64,
    pub theta: Vec<f64>,
    pub points: usize,
}

#[allow(clippy::too_many_arguments)]
fn grid_infimum(
    kernel: &Kernel<f64>,
    model: &LocationModel,
    base: &PointCloud<f64>,
    base_norm_sq: f64,
    p0: &Cached<'_>,
    centre: &[f64],
    points_per_dim: usize,
    halfwidth: f64,
) -> Result<GridInfimum> {
    let d = model.dim;
    if d > 2 {
        return Err(Error::invalid("grid infimum supports models of dimension at most 2"));
    }
    let steps = points_per_dim.max(2);
    let total = steps.pow(d as u32);
    let values = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut theta = centre.to_vec();
            let mut rem = idx;
            for t in theta.iter_mut() {
                let j = rem % steps;
                rem /= steps;
                *t += -halfwidth + 2.0 * halfwidth * j as f64 / (steps - 1) as f64;
            }
            let s = model.shifted(base, &theta)?;
            let mmd = p0.moments(kernel, &s, base_norm_sq)?.mmd_sq().sqrt();
            Ok((mmd, theta))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mmd, theta) = values
        .into_iter()
        .fold((f64::INFINITY, Vec::new()), |a, b| if b.0 < a.0 { b } else { a });
    Ok(GridInfimum {
        mmd,
        theta,
        points: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub generator: RadialProfile<f64>,
    pub kernel: KernelFamily<f64>,
    pub model: LocationModel,
    pub contamination: ContaminationSpec,
    #[serde(default)]
    pub dependence: DependenceSpec,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    #[serde(default = "defaults::model_sample_size")]
    pub model_sample_size: usize,
    /// Model sample used to evaluate `d(p_theta_hat, p0)` and the infimum.
    #[serde(default = "defaults::eval_sample_size")]
    pub eval_sample_size: usize,
    /// Stratified surrogate for `p0`.
    #[serde(default = "defaults::reference_size")]
    pub reference_size: usize,
    #[serde(default)]
    pub rho: RhoOptions,
    #[serde(default = "defaults::grid_points")]
    pub grid_points: usize,
    #[serde(default = "defaults::grid_halfwidth")]
    pub grid_halfwidth: f64,
    #[serde(default)]
    pub seed: u64,
}

mod defaults {
    pub fn model_sample_size() -> usize {
        200
    }
    pub fn eval_sample_size() -> usize {
        1000
    }
    pub fn reference_size() -> usize {
        4000
    }
    pub fn grid_points() -> usize {
        101
    }
    pub fn grid_halfwidth() -> f64 {
        3.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub n: usize,
    pub replicates: usize,
    /// Mean of `sqrt(d(p_theta_hat, p0))` over replicates.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `L/sqrt(2m) * sqrt(inf MMD)`, the infimum term as stated.
    pub inf_term: f64,
    /// `L/sqrt(2m) * inf MMD`, the variant with `sqrt(MMD^2)`.
    pub inf_term_mmd: f64,
    /// `sqrt((1 + rho)/n) (sqrt(L/2) + L/sqrt(2m))`
    pub stat_term: f64,
    pub rhs: f64,
    pub rhs_mmd: f64,
    pub rho_hat: f64,
    /// `lhs <= rhs + 3 se`
    pub pass: bool,
    pub pass_mmd: bool,
    /// Mean of `MMD(p_n, p0)` over replicates.
    pub data_mmd: f64,
    pub data_mmd_se: f64,
    /// `sqrt((1 + rho)/n)`
    pub envelope: f64,
    /// `data_mmd <= envelope + 3 se`
    pub envelope_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub generator: String,
    pub constants: SandwichConstants<f64>,
    pub rho: RhoEstimate,
    pub infimum: GridInfimum,
    /// The grid infimum bounds the true infimum from above, so the
    /// right-hand side is at least as large as the exact one.
    pub grid_note: &'static str,
    pub rows: Vec<AuditRow>,
    pub pass: bool,
    pub seed: u64,
}

/// Monte Carlo audit of the expectation bound for minimum-divergence fits.
pub fn bound_audit(cfg: &AuditConfig) -> Result<AuditReport> {
    let generator = RadialGenerator::new(cfg.generator)?;
    let kernel = Kernel::new(cfg.kernel)?;
    let model = cfg.model.with_dim(cfg.contamination.dim())?;
    let constants = generator.sandwich_constants(kernel.embedding_radius())?;
    let (l, m) = (constants.curvature_max, constants.curvature_min);
    if !(m > 0.0) {
        return Err(Error::invalid(format!(
            "the bound is vacuous for {generator}: curvature lower bound m(R) = 0"
        )));
    }
    if cfg.n_grid.is_empty() || cfg.replicates < 2 || cfg.n_grid.contains(&0) {
        return Err(Error::invalid(
            "audit needs a nonempty n grid and at least 2 replicates",
        ));
    }
    let seed = cfg.seed;
    let p0_sample = reference(
        &model,
        &cfg.contamination,
        cfg.reference_size,
        &mut substream(seed, "reference"),
    )?;
    let p0 = Cached::new(&kernel, &p0_sample);
    let eval_base = model.crn_base(cfg.eval_sample_size, &mut substream(seed, "eval_model"))?;
    let eval_norm_sq = norm_sq(&embed(&kernel, &model.shifted(&eval_base, &vec![0.0; model.dim])?));
    let infimum = grid_infimum(
        &kernel,
        &model,
        &eval_base,
        eval_norm_sq,
        &p0,
        &cfg.contamination.theta0,
        cfg.grid_points,
        cfg.grid_halfwidth,
    )?;
    let rho = rho_estimate(&kernel, &model, &cfg.contamination, &cfg.dependence, &cfg.rho, seed)?;
    let c1 = l / (2.0 * m).sqrt();
    let c2 = (l / 2.0).sqrt() + c1;
    let n_max = *cfg.n_grid.iter().max().expect("nonempty");
    let fit_base = model.crn_base(cfg.model_sample_size, &mut substream(seed, "model"))?;

    // replicate r: one series of length n_max, prefixes for every n
    let per_rep = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let series = generate(
                &model,
                &cfg.contamination,
                &cfg.dependence,
                n_max,
                &mut trial_stream(seed, r, "data"),
            )?;
            cfg.n_grid
                .iter()
                .map(|&n| {
                    let data = prefix(&series, n)?;
                    let obj = FitObjective::new(&kernel, &generator, &model, fit_base.clone(), &data)?;
                    let opts = FitOptions {
                        model_sample_size: cfg.model_sample_size,
                        restarts: 3,
                        nelder_mead: NelderMeadOptions::default(),
                        seed: seed.wrapping_add(r as u64),
                    };
                    let fit = fit_with(&obj, &opts)?;
                    let at_hat = model.shifted(&eval_base, &fit.theta_hat)?;
                    let mo = p0.moments(&kernel, &at_hat, eval_norm_sq)?;
                    let lhs = deformed_from_moments(&generator, &mo, kernel.embedding_radius())?
                        .value
                        .max(0.0)
                        .sqrt();
                    let data_mmd = p0.moments(&kernel, &data, obj.data_norm_sq())?.mmd_sq().sqrt();
                    Ok((lhs, data_mmd))
                })
                .collect::<Result<Vec<(f64, f64)>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let one_plus_rho = (1.0 + rho.sum).max(0.0);
    let rows: Vec<AuditRow> = cfg
        .n_grid
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let (lhs, lhs_se) = mean_se(&per_rep.iter().map(|v| v[j].0).collect::<Vec<_>>());
            let (data_mmd, data_mmd_se) = mean_se(&per_rep.iter().map(|v| v[j].1).collect::<Vec<_>>());
            let envelope = (one_plus_rho / n as f64).sqrt();
            let stat_term = envelope * c2;
            let inf_term = c1 * infimum.mmd.sqrt();
            let inf_term_mmd = c1 * infimum.mmd;
            let rhs = inf_term + stat_term;
            let rhs_mmd = inf_term_mmd + stat_term;
            AuditRow {
                n,
                replicates: cfg.replicates,
                lhs,
                lhs_se,
                inf_term,
                inf_term_mmd,
                stat_term,
                rhs,
                rhs_mmd,
                rho_hat: rho.sum,
                pass: lhs <= rhs + 3.0 * lhs_se,
                pass_mmd: lhs <= rhs_mmd + 3.0 * lhs_se,
                data_mmd,
                data_mmd_se,
                envelope,
                envelope_pass: data_mmd <= envelope + 3.0 * data_mmd_se,
            }
        })
        .collect();
    Ok(AuditReport {
        generator: generator.to_string(),
        constants,
        pass: rows.iter().all(|r| r.pass),
        rho,
        infimum,
        grid_note: "infimum over a finite grid; it upper-bounds the exact infimum",
        rows,
        seed,
    })
}

/// One instance of the deterministic oracle inequality
/// `sqrt d(p_hat, p0) <= c1 MMD(p_theta, p0) + c2 MMD(p_n, p0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleRecord {
    pub theta: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// True when the fit did no better than `theta` on the data and `theta`
    /// itself was used as the minimiser.
    pub fallback: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

pub const TRIANGLE_AUDIT_TOL: f64 = 1e-9;

/// Evaluates the inequality for one `(theta, data)` pair. All model
/// embeddings share one base sample, `p0` is represented by `p0_sample`.
pub fn triangle_audit(
    generator: &RadialGenerator<f64>,
    kernel: &Kernel<f64>,
    model: &LocationModel,
    theta: &[f64],
    data: &SampleSet<f64>,
    p0_sample: &SampleSet<f64>,
    opts: &FitOptions,
) -> Result<TriangleRecord> {
    let base = model.crn_base(opts.model_sample_size, &mut substream(opts.seed, "model"))?;
    let obj = FitObjective::new(kernel, generator, model, base, data)?;
    let p0 = Cached::new(kernel, p0_sample);
    triangle_instance(generator, kernel, &obj, theta, &p0, opts)
}

fn triangle_instance(
    generator: &RadialGenerator<f64>,
    kernel: &Kernel<f64>,
    obj: &FitObjective<'_>,
    theta: &[f64],
    p0: &Cached<'_>,
    opts: &FitOptions,
) -> Result<TriangleRecord> {
    let radius = kernel.embedding_radius();
    let c = generator.sandwich_constants(radius)?;
    let (l, m) = (c.curvature_max, c.curvature_min);
    if !(m > 0.0) {
        return Err(Error::invalid(format!(
            "inequality is vacuous for {generator}: m(R) = 0"
        )));
    }
    let fit = fit_with(obj, opts)?;
    let fallback = obj.divergence(&fit.theta_hat)? > obj.divergence(theta)?;
    let theta_hat = if fallback { theta.to_vec() } else { fit.theta_hat };
    let model_norm = obj.model_norm_sq();
    let at_hat = obj.model_sample(&theta_hat)?;
    let at_theta = obj.model_sample(theta)?;
    let lhs = deformed_from_moments(generator, &p0.moments(kernel, &at_hat, model_norm)?, radius)?
        .value
        .max(0.0)
        .sqrt();
    let mmd_theta = p0.moments(kernel, &at_theta, model_norm)?.mmd_sq().sqrt();
    let mmd_data = p0.moments(kernel, obj.data(), obj.data_norm_sq())?.mmd_sq().sqrt();
    let c1 = l / (2.0 * m).sqrt();
    let rhs = c1 * mmd_theta + ((l / 2.0).sqrt() + c1) * mmd_data;
    Ok(TriangleRecord {
        theta: theta.to_vec(),
        theta_hat,
        fallback,
        lhs,
        rhs,
        slack: rhs - lhs,
        holds: lhs <= rhs + TRIANGLE_AUDIT_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleStudy {
    pub generator: String,
    pub instances: usize,
    pub violations: usize,
    pub fallbacks: usize,
    pub worst_slack: f64,
    pub seed: u64,
}

/// `instances` random `(theta, data)` pairs: `theta` uniform within 2 of
/// `theta0`, sample sizes uniform in `[50, 300]`.
pub fn triangle_study(
    generator: &RadialGenerator<f64>,
    kernel: &Kernel<f64>,
    model: &LocationModel,
    contamination: &ContaminationSpec,
    instances: usize,
    reference_size: usize,
    seed: u64,
) -> Result<TriangleStudy> {
    let model = model.with_dim(contamination.dim())?;
    let p0_sample = reference(&model, contamination, reference_size, &mut substream(seed, "reference"))?;
    let p0 = Cached::new(kernel, &p0_sample);
    let records = (0..instances)
        .into_par_iter()
        .map(|i| {
            let rng = &mut trial_stream(seed, i, "triangle");
            let theta: Vec<f64> = contamination
                .theta0
                .iter()
                .map(|t| t + rng.random_range(-2.0..2.0))
                .collect();
            let n = rng.random_range(50..=300);
            let data = generate(&model, contamination, &DependenceSpec::Iid, n, rng)?;
            let opts = FitOptions {
                model_sample_size: 100,
                seed: seed.wrapping_add(i as u64),
                ..FitOptions::default()
            };
            let base = model.crn_base(opts.model_sample_size, &mut substream(opts.seed, "model"))?;
            let obj = FitObjective::new(kernel, generator, &model, base, &data)?;
            triangle_instance(generator, kernel, &obj, &theta, &p0, &opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TriangleStudy {
        generator: generator.to_string(),
        instances,
        violations: records.iter().filter(|r| !r.holds).count(),
        fallbacks: records.iter().filter(|r| r.fallback).count(),
        worst_slack: records.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min),
        seed,
    })
}

/// Minimum-divergence fit against the sample mean under contamination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub n: usize,
    pub n_large: usize,
    pub replicates: usize,
    pub median_error_fit: f64,
    pub median_error_mean: f64,
    pub median_error_fit_large: f64,
    /// `median_error_fit / median_error_fit_large`; about 2 at the root-n rate.
    pub rate_ratio: f64,
    pub seed: u64,
}

/// Fits at `n` and `factor * n` on nested data (the small sample is a prefix
/// of the large one) for each replicate.
#[allow(clippy::too_many_arguments)]
pub fn robustness_study(
    generator: &RadialGenerator<f64>,
    kernel: &Kernel<f64>,
    model: &LocationModel,
    contamination: &ContaminationSpec,
    n: usize,
    factor: usize,
    replicates: usize,
    model_sample_size: usize,
    seed: u64,
) -> Result<RobustnessReport> {
    let model = model.with_dim(contamination.dim())?;
    let n_large = n * factor.max(1);
    let errs = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let series = generate(
                &model,
                contamination,
                &DependenceSpec::Iid,
                n_large,
                &mut trial_stream(seed, r, "data"),
            )?;
            let small = prefix(&series, n)?;
            let opts = FitOptions {
                model_sample_size,
                seed: seed.wrapping_add(r as u64),
                ..FitOptions::default()
            };
            let fit = |data: &SampleSet<f64>| -> Result<f64> {
                let f = super::fit::min_divergence_fit(&model, data, generator, kernel, &opts)?;
                Ok(dist(&f.theta_hat, &contamination.theta0))
            };
            Ok((fit(&small)?, dist(&small.mean(), &contamination.theta0), fit(&series)?))
        })
        .collect::<Result<Vec<(f64, f64, f64)>>>()?;
    let median_error_fit = median(errs.iter().map(|e| e.0).collect());
    let median_error_fit_large = median(errs.iter().map(|e| e.2).collect());
    Ok(RobustnessReport {
        n,
        n_large,
        replicates,
        median_error_fit,
        median_error_mean: median(errs.iter().map(|e| e.1).collect()),
        median_error_fit_large,
        rate_ratio: median_error_fit / median_error_fit_large,
        seed,
    })
}

/// `inf_theta MMD(p_theta, p0)` on the audit grid, for studying how the
/// approximation term grows with the contamination level.
pub fn infimum_term(
    kernel: &Kernel<f64>,
    model: &LocationModel,
    contamination: &ContaminationSpec,
    eval_sample_size: usize,
    reference_size: usize,
    grid_points: usize,
    seed: u64,
) -> Result<GridInfimum> {
    let model = model.with_dim(contamination.dim())?;
    let p0_sample = reference(&model, contamination, reference_size, &mut substream(seed, "reference"))?;
    let p0 = Cached::new(kernel, &p0_sample);
    let base = model.crn_base(eval_sample_size, &mut substream(seed, "eval_model"))?;
    let base_norm = norm_sq(&embed(kernel, &model.shifted(&base, &vec![0.0; model.dim])?));
    grid_infimum(
        kernel,
        &model,
        &base,
        base_norm,
        &p0,
        &contamination.theta0,
        grid_points,
        3.0,
    )
}
