use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::sample::{PointCloud, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationFamily {
    GaussianLocation,
    LaplaceLocation,
}

/// Location family `x = theta + scale * z`, with `z` standard Gaussian or
/// standard Laplace in each coordinate independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationModel {
    pub family: LocationFamily,
    pub scale: f64,
    #[serde(default = "one")]
    pub dim: usize,
    /// Box `[lower, upper]^d` the optimiser is confined to.
    #[serde(default = "default_lower")]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
}

fn one() -> usize {
    1
}
fn default_lower() -> f64 {
    -10.0
}
fn default_upper() -> f64 {
    10.0
}

fn std_normal() -> Normal {
    Normal::standard()
}

impl LocationModel {
    pub fn new(family: LocationFamily, scale: f64, dim: usize) -> Result<Self> {
        let m = Self {
            family,
            scale,
            dim,
            lower: default_lower(),
            upper: default_upper(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(scale: f64, dim: usize) -> Result<Self> {
        Self::new(LocationFamily::GaussianLocation, scale, dim)
    }

    pub fn laplace(scale: f64, dim: usize) -> Result<Self> {
        Self::new(LocationFamily::LaplaceLocation, scale, dim)
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        self.dim = dim;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!(
                "model scale must be positive, got {}",
                self.scale
            )));
        }
        if self.dim == 0 {
            return Err(Error::invalid("model dimension must be positive"));
        }
        if !(self.lower < self.upper) {
            return Err(Error::invalid("model box needs lower < upper"));
        }
        Ok(())
    }

    pub fn clamp(&self, theta: &mut [f64]) {
        for t in theta {
            *t = t.clamp(self.lower, self.upper);
        }
    }

    /// Quantile of the standard noise.
    pub fn standard_quantile(&self, u: f64) -> f64 {
        match self.family {
            LocationFamily::GaussianLocation => std_normal().inverse_cdf(u),
            LocationFamily::LaplaceLocation => {
                if u < 0.5 {
                    (2.0 * u).ln()
                } else {
                    -(2.0 * (1.0 - u)).ln()
                }
            }
        }
    }

    pub fn standard_cdf(&self, z: f64) -> f64 {
        match self.family {
            LocationFamily::GaussianLocation => std_normal().cdf(z),
            LocationFamily::LaplaceLocation => {
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
        }
    }

    /// Marginal CDF of coordinate `x` under location `theta`.
    pub fn cdf(&self, x: f64, theta: f64) -> f64 {
        self.standard_cdf((x - theta) / self.scale)
    }

    pub fn density(&self, x: &[f64], theta: &[f64]) -> f64 {
        x.iter()
            .zip(theta)
            .map(|(&xi, &ti)| {
                let z = (xi - ti) / self.scale;
                let d = match self.family {
                    LocationFamily::GaussianLocation => std_normal().pdf(z),
                    LocationFamily::LaplaceLocation => 0.5 * (-z.abs()).exp(),
                };
                d / self.scale
            })
            .product()
    }

    pub(crate) fn standard_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.family {
            LocationFamily::GaussianLocation => StandardNormal.sample(rng),
            LocationFamily::LaplaceLocation => {
                // open interval keeps the quantile finite
                let u: f64 = rng.random_range(f64::EPSILON..1.0);
                self.standard_quantile(u)
            }
        }
    }

    /// `n` independent draws at `theta`.
    pub fn sample_iid<R: Rng + ?Sized>(&self, theta: &[f64], n: usize, rng: &mut R) -> Result<SampleSet<f64>> {
        self.check_theta(theta)?;
        let coords = (0..n * self.dim)
            .map(|i| theta[i % self.dim] + self.scale * self.standard_draw(rng))
            .collect();
        SampleSet::uniform(PointCloud::from_flat(self.dim, coords)?)
    }

    pub(crate) fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Standardised noise for common random numbers: randomised stratified
    /// quantiles, mirrored so the set is symmetric about zero, and combined
    /// across coordinates as a Latin hypercube.
    pub fn crn_base<R: Rng + ?Sized>(&self, size: usize, rng: &mut R) -> Result<PointCloud<f64>> {
        if size == 0 {
            return Err(Error::Empty("model sample"));
        }
        let columns: Vec<Vec<f64>> = (0..self.dim)
            .map(|_| {
                let mut col = stratified_uniforms(size, rng);
                col.shuffle(rng);
                col.into_iter().map(|u| self.standard_quantile(u)).collect()
            })
            .collect();
        let coords = (0..size * self.dim)
            .map(|i| columns[i % self.dim][i / self.dim])
            .collect();
        PointCloud::from_flat(self.dim, coords)
    }

    /// `theta + scale * base`, uniformly weighted.
    pub fn shifted(&self, base: &PointCloud<f64>, theta: &[f64]) -> Result<SampleSet<f64>> {
        self.check_theta(theta)?;
        let scaled: Vec<f64> = base.coords().iter().map(|z| self.scale * z).collect();
        let cloud = PointCloud::from_flat(self.dim, scaled)?.translated(theta)?;
        SampleSet::uniform(cloud)
    }
}

/// One uniform in each of `size` equal strata, with stratum `i` mirrored onto
/// stratum `size - 1 - i`.
fn stratified_uniforms<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Vec<f64> {
    let m = size as f64;
    let mut out = vec![0.5; size];
    for i in 0..size / 2 {
        let u = (i as f64 + rng.random_range(f64::EPSILON..1.0)) / m;
        out[i] = u;
        out[size - 1 - i] = 1.0 - u;
    }
    out
}

impl fmt::Display for LocationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.family {
            LocationFamily::GaussianLocation => "gaussian",
            LocationFamily::LaplaceLocation => "laplace",
        };
        write!(f, "{name}:{}", self.scale)
    }
}

/// `gaussian:1.0` or `laplace:0.5`; dimension 1 until set with [`LocationModel::with_dim`].
impl FromStr for LocationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, scale) = match s.split_once(':') {
            Some((n, v)) => (
                n,
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad model scale in `{s}`")))?,
            ),
            None => (s, 1.0),
        };
        match name.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gaussian_location" | "normal" => Self::gaussian(scale, 1),
            "laplace" | "laplace_location" => Self::laplace(scale, 1),
            other => Err(Error::invalid(format!("unknown model family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn crn_base_is_symmetric_and_stratified() {
        let m = LocationModel::gaussian(1.0, 1).unwrap();
        let base = m.crn_base(200, &mut seeded(1)).unwrap();
        let mut z: Vec<f64> = base.coords().to_vec();
        let s: f64 = z.iter().sum();
        assert!(s.abs() < 1e-10, "{s}");
        z.sort_by(f64::total_cmp);
        for (i, &zi) in z.iter().enumerate() {
            let u = m.standard_cdf(zi);
            assert!(u >= i as f64 / 200.0 - 1e-12 && u <= (i + 1) as f64 / 200.0 + 1e-12);
        }
    }

    #[test]
    fn latin_hypercube_marginals() {
        let m = LocationModel::laplace(2.0, 3).unwrap();
        let base = m.crn_base(50, &mut seeded(2)).unwrap();
        for c in 0..3 {
            let mut col: Vec<f64> = base.iter().map(|p| p[c]).collect();
            col.sort_by(f64::total_cmp);
            for (i, &z) in col.iter().enumerate() {
                let u = m.standard_cdf(z);
                assert!(u >= i as f64 / 50.0 - 1e-12 && u <= (i + 1) as f64 / 50.0 + 1e-12);
            }
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for m in [
            LocationModel::gaussian(1.0, 1).unwrap(),
            LocationModel::laplace(1.0, 1).unwrap(),
        ] {
            for u in [0.01, 0.3, 0.5, 0.77, 0.99] {
                let e = (m.standard_cdf(m.standard_quantile(u)) - u).abs();
                // the Gaussian inverse CDF is accurate to about 1e-11
                assert!(e < 1e-10, "{m} {u} {e}");
            }
        }
    }

    #[test]
    fn parse_and_validate() {
        let m: LocationModel = "laplace:0.5".parse().unwrap();
        assert_eq!((m.family, m.scale, m.dim), (LocationFamily::LaplaceLocation, 0.5, 1));
        assert!("gaussian:-1".parse::<LocationModel>().is_err());
        assert!("cauchy".parse::<LocationModel>().is_err());
        assert_eq!(m.to_string().parse::<LocationModel>().unwrap(), m);
    }
}
