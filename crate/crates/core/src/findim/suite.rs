//! Randomised verification suite over all generator kinds.
//!
//! Each property draws trial `i` from `rng::trial_stream(seed, i, property)`
//! and reduces with order-independent maxima, so reports do not depend on
//! the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::*;
use super::metric::{gsb, gsb_block, schur_report, triangle_fuzz, MetricisationSpec, TRIANGLE_TOL};
use super::{conjugate, Family, FinDimGenerator, FinDimKind, Sampling, Vector};
use crate::error::Result;
use crate::generators::RadialGenerator;
use crate::rng::{substream, trial_stream};

pub const IDENTITY_TOL: f64 = 1e-10;
pub const DUAL_TOL: f64 = 1e-7;
pub const MEAN_TOL: f64 = 1e-6;
pub const QUASI_TOL: f64 = 1e-5;
pub const ASYMMETRY_WITNESS: f64 = 1e-6;
pub const SPECTRAL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    /// Instances for the exact identities and the symmetry probe.
    pub trials: usize,
    /// Pairs for the conjugate-based dual divergence check.
    pub dual_trials: usize,
    /// Families for the two means.
    pub mean_trials: usize,
    /// Triples for the triangle fuzz.
    pub triangle_trials: usize,
    /// Dimensions for the triangle fuzz.
    pub triangle_dims: Vec<usize>,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 5, 10],
            trials: 1000,
            dual_trials: 100,
            mean_trials: 100,
            triangle_trials: 10_000,
            triangle_dims: vec![2, 5],
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub property: &'static str,
    pub generator: String,
    pub dim: usize,
    pub trials: usize,
    /// Worst observed value of the property's statistic.
    pub statistic: f64,
    pub tolerance: f64,
    /// How `statistic` is compared with `tolerance`.
    pub comparison: &'static str,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub seed: u64,
    pub pass: bool,
    pub results: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &PropertyResult> {
        self.results.iter().filter(|r| !r.pass)
    }
}

/// Radial profiles exercised by the suite.
pub fn radial_profiles() -> Vec<RadialGenerator<f64>> {
    vec![
        RadialGenerator::square(),
        RadialGenerator::exp_centered(),
        RadialGenerator::logcosh(),
        RadialGenerator::sqrtplus(),
        RadialGenerator::quartic(0.5).expect("valid lambda"),
        RadialGenerator::power(3.0).expect("valid p"),
    ]
}

/// Every generator kind in dimension `dim`; the quadratic is drawn from `seed`.
pub fn generators(dim: usize, seed: u64) -> Result<Vec<FinDimGenerator>> {
    let mut rng = substream(seed.wrapping_add(dim as u64), "quadratic");
    let mut out = vec![FinDimGenerator::random_quadratic(dim, &mut rng)?];
    for g in radial_profiles() {
        out.push(FinDimGenerator::radial(g, dim)?);
    }
    out.push(FinDimGenerator::neg_entropy(dim)?);
    out.push(FinDimGenerator::log_sum_exp(dim)?);
    Ok(out)
}

struct Ctx<'a> {
    gen: &'a FinDimGenerator,
    seed: u64,
}

impl Ctx<'_> {
    /// Max of `f` over `n` trials.
    fn worst(&self, name: &str, n: usize, f: impl Fn(&mut crate::rng::StdRng) -> Result<f64> + Sync) -> Result<f64> {
        let vals = (0..n)
            .into_par_iter()
            .map(|i| f(&mut trial_stream(self.seed, i, name)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(vals.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    fn at_most(&self, property: &'static str, trials: usize, statistic: f64, tolerance: f64) -> PropertyResult {
        self.result(property, trials, statistic, tolerance, "<=", statistic <= tolerance)
    }

    fn result(
        &self,
        property: &'static str,
        trials: usize,
        statistic: f64,
        tolerance: f64,
        comparison: &'static str,
        pass: bool,
    ) -> PropertyResult {
        PropertyResult {
            property,
            generator: self.gen.name(),
            dim: self.gen.dim(),
            trials,
            statistic,
            tolerance,
            comparison,
            pass,
        }
    }
}

fn family_size<R: rand::Rng + ?Sized>(rng: &mut R) -> usize {
    use rand::RngExt;
    rng.random_range(1..=10)
}

/// Points for Fenchel-Young and dual checks: `z = grad Phi(u)` for a domain point `u`.
fn dual_point<R: rand::Rng + ?Sized>(gen: &FinDimGenerator, rng: &mut R) -> Result<Vector> {
    gen.grad(&gen.sample_point(rng))
}

pub fn identity_properties(gen: &FinDimGenerator, cfg: &SuiteConfig) -> Result<Vec<PropertyResult>> {
    let cx = Ctx { gen, seed: cfg.seed };
    let n = cfg.trials;
    let mut out = Vec::new();

    let tp = cx.worst("three_point", n, |rng| {
        let (f, g, h) = (gen.sample_point(rng), gen.sample_point(rng), gen.sample_point(rng));
        Ok(three_point(gen, &f, &g, &h)?.abs() / (1.0 + bregman(gen, &f, &g)?.abs()))
    })?;
    out.push(cx.at_most("three_point", n, tp, IDENTITY_TOL));

    let bv = cx.worst("bias_variance", n, |rng| {
        let size = family_size(rng);
        let fam = Family::random(gen, size, rng)?;
        let g = gen.sample_point(rng);
        Ok(bias_variance_check(gen, &fam, &g)?.abs() / (1.0 + risk(gen, &fam, &g)?.abs()))
    })?;
    out.push(cx.at_most("bias_variance", n, bv, IDENTITY_TOL));

    let spec_rng = &mut substream(cfg.seed.wrapping_add(gen.dim() as u64), "metric_spec");
    let spec = MetricisationSpec::random_valid(gen.dim(), spec_rng)?;
    let gb = cx.worst("gsb_block", n, |rng| {
        let (f, g) = (gen.sample_point(rng), gen.sample_point(rng));
        let a = gsb(gen, &spec, &f, &g)?;
        Ok((a - gsb_block(gen, &spec, &f, &g)?).abs() / (1.0 + a.abs()))
    })?;
    out.push(cx.at_most("gsb_block_agreement", n, gb, IDENTITY_TOL));

    // negative part of the relative Fenchel-Young gap
    let fy = cx.worst("fenchel_young", n, |rng| {
        let f = gen.sample_point(rng);
        let z = dual_point(gen, rng)?;
        let conj = conjugate(gen, &z)?.value;
        let phi = gen.value(&f)?;
        let gap = phi + conj - f.dot(&z);
        Ok((-gap).max(0.0) / (1.0 + phi.abs() + conj.abs() + f.dot(&z).abs()))
    })?;
    out.push(cx.at_most("fenchel_young_gap_nonnegative", n, fy, IDENTITY_TOL));

    let sym = symmetry_probe(gen, n, Sampling::Domain, cfg.seed)?;
    out.push(if gen.is_quadratic() {
        cx.at_most("symmetry_quadratic", n, sym.max_asymmetry, IDENTITY_TOL)
    } else {
        cx.result(
            "asymmetry_witness",
            n,
            sym.max_asymmetry,
            ASYMMETRY_WITNESS,
            ">",
            sym.max_asymmetry > ASYMMETRY_WITNESS,
        )
    });
    Ok(out)
}

pub fn dual_property(gen: &FinDimGenerator, cfg: &SuiteConfig) -> Result<PropertyResult> {
    let cx = Ctx { gen, seed: cfg.seed };
    let n = cfg.dual_trials;
    let worst = cx.worst("dual_divergence", n, |rng| {
        let (f, g) = (gen.sample_point(rng), gen.sample_point(rng));
        Ok(dual_divergence_check(gen, &f, &g)?.abs())
    })?;
    Ok(cx.at_most("dual_divergence", n, worst, DUAL_TOL))
}

pub fn mean_properties(gen: &FinDimGenerator, cfg: &SuiteConfig) -> Result<Vec<PropertyResult>> {
    let cx = Ctx { gen, seed: cfg.seed };
    let n = cfg.mean_trials;
    let mm = cx.worst("mean_minimiser", n, |rng| {
        let size = family_size(rng);
        let fam = Family::random(gen, size, rng)?;
        Ok((mean_minimiser(gen, &fam)? - gen.gauge(&fam.mean())).norm())
    })?;
    let qa = cx.worst("quasi_arithmetic", n, |rng| {
        let size = family_size(rng);
        let fam = Family::random(gen, size, rng)?;
        let q = quasi_arithmetic_mean(gen, &fam)?;
        Ok((q - reverse_risk_minimiser(gen, &fam)?).norm())
    })?;
    // the risk strictly increases when the minimiser is perturbed by 1e-3
    let un = cx.worst("mean_uniqueness", n.min(20), |rng| {
        let size = family_size(rng);
        let fam = Family::random(gen, size, rng)?;
        let g = mean_minimiser(gen, &fam)?;
        let base = risk(gen, &fam, &g)?;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..20 {
            let d = gen.gauge(&Vector::from_fn(gen.dim(), |_, _| super::normal(rng)));
            let p = &g + &d * (1e-3 / d.norm().max(1e-300));
            if gen.contains(&p) {
                worst = worst.max(base - risk(gen, &fam, &p)?);
            }
        }
        Ok(worst)
    })?;
    Ok(vec![
        cx.at_most("mean_minimiser", n, mm, MEAN_TOL),
        cx.at_most("quasi_arithmetic_mean", n, qa, QUASI_TOL),
        cx.result("mean_uniqueness", n.min(20), un, 0.0, "<", un < 0.0),
    ])
}

pub fn triangle_property(gen: &FinDimGenerator, cfg: &SuiteConfig) -> Result<Vec<PropertyResult>> {
    let cx = Ctx { gen, seed: cfg.seed };
    let spec_rng = &mut substream(cfg.seed.wrapping_add(gen.dim() as u64), "metric_spec");
    let spec = MetricisationSpec::random_valid(gen.dim(), spec_rng)?;
    let schur = schur_report(&spec)?;
    let sampling = match gen.kind() {
        FinDimKind::NegEntropy => Sampling::Simplex,
        _ => Sampling::Domain,
    };
    let fuzz = triangle_fuzz(gen, &spec, cfg.triangle_trials, sampling, cfg.seed)?;
    Ok(vec![
        cx.result(
            "schur_valid",
            1,
            schur.min_eig_block,
            -1e-8,
            ">=",
            schur.valid && schur.min_eig_block >= -1e-8,
        ),
        cx.result(
            "triangle_violations",
            fuzz.trials,
            fuzz.violations as f64,
            0.0,
            "<=",
            fuzz.violations == 0 && fuzz.worst_slack >= -TRIANGLE_TOL,
        ),
    ])
}

pub fn radial_properties(dim: usize, cfg: &SuiteConfig) -> Result<Vec<PropertyResult>> {
    let mut out = Vec::new();
    for g in radial_profiles() {
        let gen = FinDimGenerator::radial(g, dim)?;
        let cx = Ctx {
            gen: &gen,
            seed: cfg.seed,
        };
        let n = cfg.trials.min(100);
        let grad = cx.worst("radial_gradient", n, |rng| {
            radial_gradient_check(&g, &gen.sample_point(rng))
        })?;
        out.push(cx.at_most("radial_gradient", n, grad, 1e-6));
        let mut spec = f64::NEG_INFINITY;
        for (j, r) in [0.1, 0.5, 0.9].into_iter().enumerate() {
            let rng = &mut trial_stream(cfg.seed, j, "radial_hessian");
            spec = spec.max(radial_hessian_check(&g, dim, r, rng)?);
        }
        out.push(cx.at_most("radial_hessian_spectrum", 3, spec, SPECTRAL_TOL));
    }
    Ok(out)
}

/// Runs every finite-dimensional property.
pub fn run(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut results = Vec::new();
    for &dim in &cfg.dims {
        for gen in generators(dim, cfg.seed)? {
            results.extend(identity_properties(&gen, cfg)?);
            if matches!(
                gen.kind(),
                FinDimKind::Quadratic { .. } | FinDimKind::NegEntropy | FinDimKind::LogSumExp
            ) {
                results.push(dual_property(&gen, cfg)?);
            }
            results.extend(mean_properties(&gen, cfg)?);
        }
        results.extend(radial_properties(dim, cfg)?);
    }
    for &dim in &cfg.triangle_dims {
        let mut rng = substream(cfg.seed.wrapping_add(dim as u64), "quadratic");
        for gen in [
            FinDimGenerator::random_quadratic(dim, &mut rng)?,
            FinDimGenerator::neg_entropy(dim)?,
        ] {
            results.extend(triangle_property(&gen, cfg)?);
        }
    }
    Ok(SuiteReport {
        suite: "findim",
        seed: cfg.seed,
        pass: results.iter().all(|r| r.pass),
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_suite_passes_and_is_reproducible() {
        let cfg = SuiteConfig {
            dims: vec![2, 5],
            trials: 100,
            dual_trials: 20,
            mean_trials: 10,
            triangle_trials: 500,
            triangle_dims: vec![2],
            seed: 3,
        };
        let a = run(&cfg).unwrap();
        for f in a.failures() {
            eprintln!("{f:?}");
        }
        assert!(a.pass);
        assert_eq!(a, run(&cfg).unwrap());
    }
}
