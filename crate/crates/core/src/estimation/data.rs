use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::fmt;
use std::str::FromStr;

use super::model::{LocationFamily, LocationModel};
use crate::error::{Error, Result};
use crate::sample::{PointCloud, SampleSet};

/// Outlier distribution, located relative to the true parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Contaminant {
    /// All outliers at `theta0 + offset`.
    PointMass { offset: Vec<f64> },
    /// Outliers `N(theta0 + offset, scale^2 I)`.
    Gaussian { offset: Vec<f64>, scale: f64 },
}

/// Data distribution `(1 - epsilon) p_theta0 + epsilon Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationSpec {
    pub epsilon: f64,
    pub contaminant: Contaminant,
    pub theta0: Vec<f64>,
}

impl ContaminationSpec {
    pub fn none(theta0: Vec<f64>) -> Self {
        let d = theta0.len();
        Self {
            epsilon: 0.0,
            contaminant: Contaminant::PointMass { offset: vec![0.0; d] },
            theta0,
        }
    }

    pub fn point_mass(epsilon: f64, offset: Vec<f64>, theta0: Vec<f64>) -> Result<Self> {
        let s = Self {
            epsilon,
            contaminant: Contaminant::PointMass { offset },
            theta0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::invalid(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        let (offset, scale) = match &self.contaminant {
            Contaminant::PointMass { offset } => (offset, 1.0),
            Contaminant::Gaussian { offset, scale } => (offset, *scale),
        };
        if offset.len() != self.theta0.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta0.len(),
                got: offset.len(),
            });
        }
        if !(scale > 0.0) {
            return Err(Error::invalid("contaminant scale must be positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.theta0.len()
    }

    /// `theta0 + offset`
    pub fn contaminant_location(&self) -> Vec<f64> {
        let offset = match &self.contaminant {
            Contaminant::PointMass { offset } | Contaminant::Gaussian { offset, .. } => offset,
        };
        self.theta0.iter().zip(offset).map(|(t, o)| t + o).collect()
    }

    fn draw_contaminant<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let loc = self.contaminant_location();
        match &self.contaminant {
            Contaminant::PointMass { .. } => out.copy_from_slice(&loc),
            Contaminant::Gaussian { scale, .. } => {
                for (o, l) in out.iter_mut().zip(&loc) {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = l + scale * z;
                }
            }
        }
    }
}

/// Serial dependence of the clean observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DependenceSpec {
    #[default]
    Iid,
    /// Stationary Gaussian AR(1) latent process pushed through the model's
    /// marginal quantile, so each observation keeps the model marginal.
    Ar1 { coefficient: f64 },
}

impl DependenceSpec {
    pub fn validate(&self) -> Result<()> {
        if let DependenceSpec::Ar1 { coefficient } = self {
            if !(coefficient.abs() < 1.0) {
                return Err(Error::invalid("AR(1) coefficient must lie in (-1, 1)"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DependenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DependenceSpec::Iid => f.write_str("iid"),
            DependenceSpec::Ar1 { coefficient } => write!(f, "ar1:{coefficient}"),
        }
    }
}

/// `iid` or `ar1:<coefficient>`.
impl FromStr for DependenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spec = match s.trim().split_once(':') {
            None if s.trim().eq_ignore_ascii_case("iid") => DependenceSpec::Iid,
            Some((name, a)) if name.trim().eq_ignore_ascii_case("ar1") => DependenceSpec::Ar1 {
                coefficient: a
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad AR(1) coefficient in `{s}`")))?,
            },
            _ => {
                return Err(Error::invalid(format!(
                    "unknown dependence `{s}`, expected iid or ar1:<a>"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `n` observations from the contaminated, possibly dependent process.
pub fn generate<R: Rng + ?Sized>(
    model: &LocationModel,
    contamination: &ContaminationSpec,
    dependence: &DependenceSpec,
    n: usize,
    rng: &mut R,
) -> Result<SampleSet<f64>> {
    contamination.validate()?;
    dependence.validate()?;
    model.check_theta(&contamination.theta0)?;
    if n == 0 {
        return Err(Error::Empty("generated sample"));
    }
    let d = model.dim;
    let normal = Normal::standard();
    let mut latent: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let mut coords = vec![0.0; n * d];
    for t in 0..n {
        let row = &mut coords[t * d..(t + 1) * d];
        for (c, x) in row.iter_mut().enumerate() {
            let z = match *dependence {
                DependenceSpec::Iid => model.scale * model.standard_draw(rng),
                DependenceSpec::Ar1 { coefficient: a } => {
                    if t > 0 {
                        let e: f64 = StandardNormal.sample(rng);
                        latent[c] = a * latent[c] + (1.0 - a * a).sqrt() * e;
                    }
                    let z = match model.family {
                        LocationFamily::GaussianLocation => latent[c],
                        LocationFamily::LaplaceLocation => {
                            let u = normal.cdf(latent[c]).clamp(f64::EPSILON, 1.0 - f64::EPSILON);
                            model.standard_quantile(u)
                        }
                    };
                    model.scale * z
                }
            };
            *x = contamination.theta0[c] + z;
        }
        if contamination.epsilon > 0.0 && rng.random::<f64>() < contamination.epsilon {
            contamination.draw_contaminant(rng, row);
        }
    }
    SampleSet::uniform(PointCloud::from_flat(d, coords)?)
}

/// Weighted surrogate for the data distribution: a stratified model sample of
/// `size` points at `theta0` with mass `1 - epsilon`, plus the contaminant
/// (one atom, or `size` draws) with mass `epsilon`.
pub fn reference<R: Rng + ?Sized>(
    model: &LocationModel,
    contamination: &ContaminationSpec,
    size: usize,
    rng: &mut R,
) -> Result<SampleSet<f64>> {
    contamination.validate()?;
    let base = model.crn_base(size, rng)?;
    let clean = model.shifted(&base, &contamination.theta0)?;
    if contamination.epsilon == 0.0 {
        return Ok(clean);
    }
    let outliers = match &contamination.contaminant {
        Contaminant::PointMass { .. } => SampleSet::from_rows(&[contamination.contaminant_location()])?,
        Contaminant::Gaussian { scale, .. } => {
            let g = LocationModel::gaussian(*scale, model.dim)?;
            let b = g.crn_base(size, rng)?;
            g.shifted(&b, &contamination.contaminant_location())?
        }
    };
    SampleSet::mixture(&clean, 1.0 - contamination.epsilon, &outliers)
}

/// The first `n` observations of `s`.
pub fn prefix(s: &SampleSet<f64>, n: usize) -> Result<SampleSet<f64>> {
    if n == 0 || n > s.len() {
        return Err(Error::invalid(format!("prefix length {n} outside 1..={}", s.len())));
    }
    let d = s.dim();
    SampleSet::uniform(PointCloud::from_flat(d, s.points().coords()[..n * d].to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn dependence_round_trips_through_text() {
        for d in [DependenceSpec::Iid, DependenceSpec::Ar1 { coefficient: 0.5 }] {
            assert_eq!(d.to_string().parse::<DependenceSpec>().unwrap(), d);
        }
        assert!("ar1:1.5".parse::<DependenceSpec>().is_err());
        assert!("ma1:0.5".parse::<DependenceSpec>().is_err());
    }

    #[test]
    fn contamination_fraction_and_location() {
        let m = LocationModel::gaussian(1.0, 1).unwrap();
        let c = ContaminationSpec::point_mass(0.1, vec![10.0], vec![2.0]).unwrap();
        let s = generate(&m, &c, &DependenceSpec::Iid, 20_000, &mut seeded(1)).unwrap();
        let at = s.points().coords().iter().filter(|&&x| x == 12.0).count() as f64 / 20_000.0;
        assert!((at - 0.1).abs() < 0.01, "{at}");
    }

    #[test]
    fn ar1_keeps_marginal_and_correlates() {
        let m = LocationModel::gaussian(1.0, 1).unwrap();
        let c = ContaminationSpec::none(vec![0.0]);
        let s = generate(
            &m,
            &c,
            &DependenceSpec::Ar1 { coefficient: 0.5 },
            50_000,
            &mut seeded(2),
        )
        .unwrap();
        let x = s.points().coords();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let lag1 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1.0) / var;
        assert!(mean.abs() < 0.05 && (var - 1.0).abs() < 0.05, "{mean} {var}");
        assert!((lag1 - 0.5).abs() < 0.03, "{lag1}");
    }

    #[test]
    fn reference_weights() {
        let m = LocationModel::gaussian(1.0, 1).unwrap();
        let c = ContaminationSpec::point_mass(0.2, vec![5.0], vec![0.0]).unwrap();
        let r = reference(&m, &c, 100, &mut seeded(3)).unwrap();
        assert_eq!(r.len(), 101);
        assert!((r.weights()[100] - 0.2).abs() < 1e-15);
        assert!(ContaminationSpec::point_mass(1.0, vec![0.0], vec![0.0]).is_err());
        let ar = DependenceSpec::Ar1 { coefficient: 1.0 };
        assert!(generate(&m, &c, &ar, 5, &mut seeded(0)).is_err());
    }
}
