use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::model::LocationModel;
use crate::divergence::deformed_from_moments;
use crate::embedding::{embed, inner, norm_sq, PairMoments};
use crate::error::{Error, Result};
use crate::generators::RadialGenerator;
use crate::kernels::Kernel;
use crate::rng::substream;
use crate::sample::{PointCloud, SampleSet};

/// Nelder-Mead stopping rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once `max_i f_i - min_i f_i` falls below this.
    pub f_tol: f64,
    /// Stop once every vertex is within this distance of the best one.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 1000,
            f_tol: 1e-12,
            x_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Nelder-Mead with standard coefficients on the box `[lower, upper]^d`;
/// every trial vertex is clamped into the box before evaluation.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    start: &[f64],
    step: f64,
    lower: f64,
    upper: f64,
    opts: NelderMeadOptions,
) -> Result<Minimum> {
    let d = start.len();
    let clamp = |mut x: Vec<f64>| {
        for v in &mut x {
            *v = v.clamp(lower, upper);
        }
        x
    };
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let x0 = clamp(start.to_vec());
    let f0 = eval(&x0, &mut evals)?;
    simplex.push((x0.clone(), f0));
    for i in 0..d {
        let mut x = x0.clone();
        // step inwards when the start sits on the upper face
        x[i] += if x[i] + step <= upper { step } else { -step };
        let x = clamp(x);
        let fx = eval(&x, &mut evals)?;
        simplex.push((x, fx));
    }
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].clone();
        let spread = simplex[d].1 - best.1;
        let diam = simplex
            .iter()
            .map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol || diam <= opts.x_tol {
            return Ok(Minimum {
                x: best.0,
                value: best.1,
                evals,
            });
        }
        if evals >= opts.max_evals {
            return Err(Error::NoConvergence {
                what: "Nelder-Mead",
                iterations: evals,
                residual: spread,
                best: best.0,
            });
        }
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let towards =
            |t: f64, x: &[f64]| -> Vec<f64> { clamp(centroid.iter().zip(x).map(|(c, w)| c + t * (w - c)).collect()) };
        let worst = simplex[d].clone();
        let xr = towards(-1.0, &worst.0);
        let fr = eval(&xr, &mut evals)?;
        if fr < best.1 {
            let xe = towards(-2.0, &worst.0);
            let fe = eval(&xe, &mut evals)?;
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = towards(-0.5, &worst.0);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            } else {
                let xc = towards(0.5, &worst.0);
                let fc = eval(&xc, &mut evals)?;
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                for v in simplex.iter_mut().skip(1) {
                    let x = clamp(best.0.iter().zip(&v.0).map(|(b, w)| b + 0.5 * (w - b)).collect());
                    let fx = eval(&x, &mut evals)?;
                    *v = (x, fx);
                }
            }
        }
    }
}

/// `theta -> sqrt(d(p_theta, data))` with `p_theta` represented by a fixed
/// standardised base sample shifted to `theta` (common random numbers).
///
/// The kernels are translation invariant, so `|mu(p_theta)|^2` does not
/// depend on `theta` and is computed once, as is the data norm. Each
/// evaluation then costs one cross sum.
#[derive(Debug, Clone)]
pub struct FitObjective<'a> {
    kernel: Kernel<f64>,
    generator: RadialGenerator<f64>,
    model: LocationModel,
    base: PointCloud<f64>,
    data: &'a SampleSet<f64>,
    model_norm_sq: f64,
    data_norm_sq: f64,
}

impl<'a> FitObjective<'a> {
    pub fn new(
        kernel: &Kernel<f64>,
        generator: &RadialGenerator<f64>,
        model: &LocationModel,
        base: PointCloud<f64>,
        data: &'a SampleSet<f64>,
    ) -> Result<Self> {
        if data.dim() != model.dim || base.dim() != model.dim {
            return Err(Error::DimensionMismatch {
                expected: model.dim,
                got: if data.dim() != model.dim {
                    data.dim()
                } else {
                    base.dim()
                },
            });
        }
        let at_zero = model.shifted(&base, &vec![0.0; model.dim])?;
        let model_norm_sq = norm_sq(&embed(kernel, &at_zero));
        let data_norm_sq = norm_sq(&embed(kernel, data));
        Ok(Self {
            kernel: *kernel,
            generator: *generator,
            model: *model,
            base,
            data,
            model_norm_sq,
            data_norm_sq,
        })
    }

    pub fn model(&self) -> &LocationModel {
        &self.model
    }

    pub fn data(&self) -> &'a SampleSet<f64> {
        self.data
    }

    /// `|mu(p_theta)|^2`, the same for every `theta`.
    pub fn model_norm_sq(&self) -> f64 {
        self.model_norm_sq
    }

    pub fn data_norm_sq(&self) -> f64 {
        self.data_norm_sq
    }

    pub fn model_sample(&self, theta: &[f64]) -> Result<SampleSet<f64>> {
        self.model.shifted(&self.base, theta)
    }

    /// Gram sums of `(p_theta, data)`.
    pub fn moments(&self, theta: &[f64]) -> Result<PairMoments<f64>> {
        let s = self.model_sample(theta)?;
        let cross = inner(&embed(&self.kernel, &s), &embed(&self.kernel, self.data))?;
        Ok(PairMoments {
            norm_sq_a: self.model_norm_sq,
            norm_sq_b: self.data_norm_sq,
            cross,
        })
    }

    /// `d(p_theta, data)`
    pub fn divergence(&self, theta: &[f64]) -> Result<f64> {
        let m = self.moments(theta)?;
        Ok(deformed_from_moments(&self.generator, &m, self.kernel.embedding_radius())?.value)
    }

    /// `sqrt(max(d(p_theta, data), 0))`
    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        Ok(self.divergence(theta)?.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitOptions {
    pub model_sample_size: usize,
    pub restarts: usize,
    pub nelder_mead: NelderMeadOptions,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            model_sample_size: 200,
            restarts: 3,
            nelder_mead: NelderMeadOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    /// `sqrt(d(p_theta_hat, data))`
    pub objective: f64,
    pub evals: usize,
    pub starts: Vec<Vec<f64>>,
    pub model_sample_size: usize,
    pub seed: u64,
}

/// Coordinatewise median.
pub fn median(data: &SampleSet<f64>) -> Vec<f64> {
    (0..data.dim())
        .map(|c| {
            let mut col: Vec<f64> = data.points().iter().map(|p| p[c]).collect();
            col.sort_by(f64::total_cmp);
            let n = col.len();
            if n % 2 == 1 {
                col[n / 2]
            } else {
                0.5 * (col[n / 2 - 1] + col[n / 2])
            }
        })
        .collect()
}

/// Minimum-divergence estimate `argmin_theta sqrt(d(p_theta, data))`.
///
/// Nelder-Mead is started from the data median and from `restarts` points
/// drawn around it (two model scales); the best end point wins.
pub fn min_divergence_fit(
    model: &LocationModel,
    data: &SampleSet<f64>,
    generator: &RadialGenerator<f64>,
    kernel: &Kernel<f64>,
    opts: &FitOptions,
) -> Result<FitResult> {
    if opts.model_sample_size < 100 {
        return Err(Error::invalid("model sample size must be at least 100"));
    }
    let base = model.crn_base(opts.model_sample_size, &mut substream(opts.seed, "model"))?;
    let objective = FitObjective::new(kernel, generator, model, base, data)?;
    fit_with(&objective, opts)
}

/// As [`min_divergence_fit`] with a prepared objective.
pub fn fit_with(objective: &FitObjective<'_>, opts: &FitOptions) -> Result<FitResult> {
    let model = objective.model();
    let centre = median(objective.data);
    let mut rng = substream(opts.seed, "restarts");
    let mut starts = vec![centre.clone()];
    for _ in 0..opts.restarts {
        starts.push(jitter(&centre, 2.0 * model.scale, model, &mut rng));
    }
    let mut best: Option<Minimum> = None;
    let mut evals = 0;
    for s in &starts {
        let m = nelder_mead(
            |t| objective.value(t),
            s,
            model.scale,
            model.lower,
            model.upper,
            opts.nelder_mead,
        )?;
        evals += m.evals;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    Ok(FitResult {
        theta_hat: best.x,
        objective: best.value,
        evals,
        starts,
        model_sample_size: opts.model_sample_size,
        seed: opts.seed,
    })
}

fn jitter<R: Rng + ?Sized>(centre: &[f64], sd: f64, model: &LocationModel, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = centre
        .iter()
        .map(|c| {
            let z: f64 = StandardNormal.sample(rng);
            c + sd * z
        })
        .collect();
    model.clamp(&mut x);
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let f = |x: &[f64]| Ok((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2));
        let m = nelder_mead(f, &[0.0, 0.0], 1.0, -10.0, 10.0, NelderMeadOptions::default()).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] + 0.5).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_respects_box() {
        let f = |x: &[f64]| Ok(x[0]);
        let m = nelder_mead(f, &[0.0], 1.0, -2.0, 2.0, NelderMeadOptions::default()).unwrap();
        assert_eq!(m.x, vec![-2.0]);
    }

    #[test]
    fn nelder_mead_reports_budget_exhaustion() {
        let f = |x: &[f64]| Ok((x[0] - 3.0).powi(2));
        let opts = NelderMeadOptions {
            max_evals: 5,
            ..Default::default()
        };
        match nelder_mead(f, &[0.0], 0.1, -10.0, 10.0, opts) {
            Err(Error::NoConvergence { best, .. }) => assert_eq!(best.len(), 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn median_odd_even() {
        let s = SampleSet::from_scalars(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(median(&s), vec![2.0]);
        let s = SampleSet::from_scalars(&[4.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(median(&s), vec![2.5]);
    }

    #[test]
    fn model_sample_size_is_checked() {
        let m = LocationModel::gaussian(1.0, 1).unwrap();
        let s = SampleSet::from_scalars(&[0.0, 1.0]).unwrap();
        let opts = FitOptions {
            model_sample_size: 10,
            ..Default::default()
        };
        let k = Kernel::gaussian(1.0).unwrap();
        assert!(min_divergence_fit(&m, &s, &RadialGenerator::square(), &k, &opts).is_err());
    }
}
