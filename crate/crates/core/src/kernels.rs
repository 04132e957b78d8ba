//! Bounded positive semidefinite kernels on `R^d`.
//!
//! Every supplied family is stationary and normalised so that
//! `k(x, x) = 1`, which places every kernel mean embedding of a probability
//! measure inside the unit ball of the RKHS.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::PointCloud;
use crate::scalar::Scalar;

/// Kernel family and its length-scale parameter.
///
/// Serialises as `{"family": "gaussian", "bandwidth": 1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelFamily<T> {
    /// `exp(-|x - y|^2 / (2 bandwidth^2))`
    Gaussian { bandwidth: T },
    /// `exp(-|x - y| / scale)`
    Laplace { scale: T },
    /// `(1 + |x - y|^2 / c^2)^(-1/2)`
    InverseMultiquadric { c: T },
}

impl<T: Scalar> KernelFamily<T> {
    fn width(&self) -> T {
        match *self {
            KernelFamily::Gaussian { bandwidth } => bandwidth,
            KernelFamily::Laplace { scale } => scale,
            KernelFamily::InverseMultiquadric { c } => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Laplace { .. } => "laplace",
            KernelFamily::InverseMultiquadric { .. } => "inverse_multiquadric",
        }
    }
}

impl<T: Scalar> fmt::Display for KernelFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name(), self.width())
    }
}

/// Parses `family:width`, e.g. `gaussian:1.0`, `laplace:0.5`, `imq:2`.
/// A bare family name uses width 1.
impl<T: Scalar> FromStr for KernelFamily<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, width) = match s.split_once(':') {
            Some((n, w)) => {
                let w: f64 = w
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad kernel width in '{s}'")))?;
                (n.trim(), w)
            }
            None => (s.trim(), 1.0),
        };
        let w = T::lit(width);
        match name.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelFamily::Gaussian { bandwidth: w }),
            "laplace" => Ok(KernelFamily::Laplace { scale: w }),
            "imq" | "inverse_multiquadric" => Ok(KernelFamily::InverseMultiquadric { c: w }),
            other => Err(Error::invalid(format!("unknown kernel family '{other}'"))),
        }
    }
}

/// A validated kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel<T> {
    family: KernelFamily<T>,
    // -1/(2 sigma^2), -1/s or 1/c^2 depending on the family
    coef: T,
}

impl<T: Scalar> Kernel<T> {
    pub fn new(family: KernelFamily<T>) -> Result<Self> {
        let w = family.width();
        if !(w > T::zero()) || !w.is_finite() {
            return Err(Error::invalid(format!(
                "{} kernel width must be positive and finite, got {w}",
                family.name()
            )));
        }
        let coef = match family {
            KernelFamily::Gaussian { bandwidth } => -T::one() / (T::lit(2.0) * bandwidth * bandwidth),
            KernelFamily::Laplace { scale } => -T::one() / scale,
            KernelFamily::InverseMultiquadric { c } => T::one() / (c * c),
        };
        Ok(Self { family, coef })
    }

    pub fn gaussian(bandwidth: T) -> Result<Self> {
        Self::new(KernelFamily::Gaussian { bandwidth })
    }

    pub fn laplace(scale: T) -> Result<Self> {
        Self::new(KernelFamily::Laplace { scale })
    }

    pub fn inverse_multiquadric(c: T) -> Result<Self> {
        Self::new(KernelFamily::InverseMultiquadric { c })
    }

    pub fn family(&self) -> KernelFamily<T> {
        self.family
    }

    /// Length scale of the kernel (bandwidth, scale or `c`).
    pub fn width(&self) -> T {
        self.family.width()
    }

    /// `sup_x k(x, x)`.
    pub fn bound(&self) -> T {
        T::one()
    }

    /// Radius of the ball holding every embedding of a probability measure.
    pub fn embedding_radius(&self) -> T {
        self.bound().sqrt()
    }

    /// Kernel value as a function of the squared distance.
    #[inline]
    pub fn profile(&self, sq_dist: T) -> T {
        match self.family {
            KernelFamily::Gaussian { .. } => (self.coef * sq_dist).exp(),
            KernelFamily::Laplace { .. } => (self.coef * sq_dist.sqrt()).exp(),
            KernelFamily::InverseMultiquadric { .. } => T::one() / (T::one() + self.coef * sq_dist).sqrt(),
        }
    }

    /// `k(x, y)` without dimension checks.
    #[inline]
    pub fn eval_unchecked(&self, x: &[T], y: &[T]) -> T {
        self.profile(sq_dist(x, y))
    }

    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// `sum_j w_j k(x, y_j)`, summed in index order.
    pub fn weighted_row_sum(&self, x: &[T], ys: &PointCloud<T>, weights: &[T]) -> T {
        debug_assert_eq!(ys.len(), weights.len());
        self.weighted_sum_flat(x, ys.coords(), weights)
    }

    /// As [`Kernel::weighted_row_sum`] over points stored flat in `coords`.
    pub(crate) fn weighted_sum_flat(&self, x: &[T], coords: &[T], weights: &[T]) -> T {
        let ys = coords.chunks_exact(x.len().max(1));
        // Match once per row so the inner loop is monomorphic.
        match self.family {
            KernelFamily::Gaussian { .. } => {
                let c = self.coef;
                ys.zip(weights)
                    .fold(T::zero(), |acc, (y, &w)| acc + w * (c * sq_dist(x, y)).exp())
            }
            _ => ys
                .zip(weights)
                .fold(T::zero(), |acc, (y, &w)| acc + w * self.eval_unchecked(x, y)),
        }
    }

    /// Gram matrix `G[i][j] = k(x_i, x_j)`.
    ///
    /// Rows are filled independently (in parallel when large); every entry is
    /// computed the same way regardless of scheduling.
    pub fn gram(&self, xs: &PointCloud<T>) -> Result<DMatrix<T>> {
        if xs.is_empty() {
            return Err(Error::Empty("gram point list"));
        }
        self.fill(xs, xs)
    }

    /// Cross-Gram matrix `C[i][j] = k(x_i, y_j)`.
    pub fn cross_gram(&self, xs: &PointCloud<T>, ys: &PointCloud<T>) -> Result<DMatrix<T>> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::Empty("cross-gram point list"));
        }
        if xs.dim() != ys.dim() {
            return Err(Error::DimensionMismatch {
                expected: xs.dim(),
                got: ys.dim(),
            });
        }
        self.fill(xs, ys)
    }

    fn fill(&self, xs: &PointCloud<T>, ys: &PointCloud<T>) -> Result<DMatrix<T>> {
        let (n, m) = (xs.len(), ys.len());
        let mut data = vec![T::zero(); n * m];
        let fill_row = |(i, row): (usize, &mut [T])| {
            let x = xs.point(i);
            for (slot, y) in row.iter_mut().zip(ys.iter()) {
                *slot = self.eval_unchecked(x, y);
            }
        };
        if n * m >= PARALLEL_THRESHOLD {
            data.par_chunks_mut(m).enumerate().for_each(fill_row);
        } else {
            data.chunks_mut(m).enumerate().for_each(fill_row);
        }
        Ok(DMatrix::from_row_slice(n, m, &data))
    }

    /// Integral of the stationary profile `kappa(u) = k(u, 0)` over `R^dim`,
    /// when finite. Dividing by it turns `kappa` into a noise density.
    pub fn profile_mass(&self, dim: usize) -> Option<T> {
        let d = dim as f64;
        let w = self.width().as_f64();
        match self.family {
            KernelFamily::Gaussian { .. } => Some(T::lit((w * (2.0 * std::f64::consts::PI).sqrt()).powf(d))),
            KernelFamily::Laplace { .. } => {
                // surface area of the unit sphere times int_0^inf r^(d-1) e^(-r/w) dr
                let area = 2.0 * std::f64::consts::PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0);
                Some(T::lit(area * w.powf(d) * statrs::function::gamma::gamma(d)))
            }
            KernelFamily::InverseMultiquadric { .. } => None,
        }
    }
}

pub(crate) const PARALLEL_THRESHOLD: usize = 1 << 16;

#[inline]
pub(crate) fn sq_dist<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| {
        let d = a - b;
        acc + d * d
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn g1() -> Kernel<f64> {
        Kernel::gaussian(1.0).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(g1().eval(&[0.0], &[0.0]).unwrap(), 1.0);
        assert_relative_eq!(g1().eval(&[0.0], &[1.0]).unwrap(), 0.6065306597126334, epsilon = 1e-15);
        let lap = Kernel::laplace(1.0).unwrap();
        assert_relative_eq!(lap.eval(&[0.0], &[2.0]).unwrap(), 0.1353352832366127, epsilon = 1e-15);
        assert!(matches!(
            g1().eval(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gram_examples() {
        let single = PointCloud::from_scalars(&[0.0]).unwrap();
        assert_eq!(g1().gram(&single).unwrap()[(0, 0)], 1.0);
        let two = PointCloud::from_scalars(&[0.0, 1.0]).unwrap();
        let g = g1().gram(&two).unwrap();
        let e = (-0.5f64).exp();
        assert_eq!(g[(0, 1)], g[(1, 0)]);
        assert_relative_eq!(g[(0, 1)], e, epsilon = 1e-15);
        let c = g1()
            .cross_gram(&single, &PointCloud::from_scalars(&[1.0]).unwrap())
            .unwrap();
        assert_relative_eq!(c[(0, 0)], e, epsilon = 1e-15);
    }

    #[test]
    fn empty_inputs_rejected() {
        let empty = PointCloud::<f64>::from_flat(1, vec![]).unwrap();
        let one = PointCloud::from_scalars(&[0.0]).unwrap();
        assert!(matches!(g1().gram(&empty), Err(Error::Empty(_))));
        assert!(g1().cross_gram(&empty, &one).is_err());
        assert!(g1().cross_gram(&one, &empty).is_err());
    }

    #[test]
    fn invalid_widths_rejected() {
        assert!(Kernel::gaussian(0.0).is_err());
        assert!(Kernel::laplace(-1.0).is_err());
        assert!(Kernel::inverse_multiquadric(f64::NAN).is_err());
    }

    #[test]
    fn parse_and_serde() {
        let k: KernelFamily<f64> = "gaussian:1.0".parse().unwrap();
        assert_eq!(k, KernelFamily::Gaussian { bandwidth: 1.0 });
        let json = serde_json::to_string(&k).unwrap();
        assert_eq!(json, r#"{"family":"gaussian","bandwidth":1.0}"#);
        let back: KernelFamily<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, k);
        assert!("polynomial:2".parse::<KernelFamily<f64>>().is_err());
        assert!(serde_json::from_str::<KernelFamily<f64>>(r#"{"family":"gaussian","bandwidth":1,"x":2}"#).is_err());
    }

    #[test]
    fn parallel_fill_matches_serial() {
        let xs: Vec<f64> = (0..300).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let cloud = PointCloud::from_scalars(&xs).unwrap();
        let k = g1();
        let g = k.gram(&cloud).unwrap();
        for i in (0..300).step_by(17) {
            for j in (0..300).step_by(13) {
                assert_eq!(g[(i, j)], k.eval_unchecked(cloud.point(i), cloud.point(j)));
            }
        }
    }

    #[test]
    fn f32_kernel_tracks_f64() {
        let k32 = Kernel::<f32>::gaussian(1.0).unwrap();
        let v = k32.eval(&[0.0], &[1.0]).unwrap();
        assert!((v as f64 - (-0.5f64).exp()).abs() < 1e-6);
    }
}
