//! Empirical kernel mean embeddings.
//!
//! An [`Embedding`] is the RKHS element `sum_i w_i k(x_i, .)`. It is never
//! materialised; every quantity reduces to weighted kernel sums over the
//! underlying samples.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{Kernel, PARALLEL_THRESHOLD};
use crate::sample::SampleSet;
use crate::scalar::Scalar;

/// Lazy kernel mean embedding of a weighted sample set.
#[derive(Debug, Clone, Copy)]
pub struct Embedding<'a, T> {
    kernel: Kernel<T>,
    sample: &'a SampleSet<T>,
}

/// Embeds a sample set. No kernel evaluations happen here.
pub fn embed<'a, T: Scalar>(kernel: &Kernel<T>, sample: &'a SampleSet<T>) -> Embedding<'a, T> {
    Embedding {
        kernel: *kernel,
        sample,
    }
}

impl<'a, T: Scalar> Embedding<'a, T> {
    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn sample(&self) -> &'a SampleSet<T> {
        self.sample
    }

    pub fn dim(&self) -> usize {
        self.sample.dim()
    }

    /// `<mu_a, mu_b>`.
    pub fn inner(&self, other: &Embedding<'_, T>) -> Result<T> {
        inner(self, other)
    }

    /// `|mu_a|^2`.
    pub fn norm_sq(&self) -> T {
        norm_sq(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().max(T::zero()).sqrt()
    }

    /// `mu(x) = sum_i w_i k(x_i, x)`.
    pub fn eval_at(&self, x: &[T]) -> Result<T> {
        eval_at(self, x)
    }
}

fn check_pair<T: Scalar>(a: &Embedding<'_, T>, b: &Embedding<'_, T>) -> Result<()> {
    if a.kernel != b.kernel {
        return Err(Error::KernelMismatch);
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

// Double sum with a fixed reduction order: row sums in index order, then the
// weighted sum of rows in index order. Parallel scheduling only decides which
// thread computes a row, so results are bit-identical across thread counts.
fn double_sum<T: Scalar>(a: &Embedding<'_, T>, b: &Embedding<'_, T>) -> T {
    let k = &a.kernel;
    let ys = b.sample.points();
    let vs = b.sample.weights();
    let row = |(w, x): (T, &[T])| w * k.weighted_row_sum(x, ys, vs);
    if a.sample.len() * b.sample.len() >= PARALLEL_THRESHOLD {
        let pairs: Vec<(T, &[T])> = a.sample.iter().collect();
        let rows: Vec<T> = pairs.into_par_iter().map(row).collect();
        rows.into_iter().fold(T::zero(), |acc, r| acc + r)
    } else {
        a.sample.iter().map(row).fold(T::zero(), |acc, r| acc + r)
    }
}

/// `<mu(p), mu(q)> = sum_ij w_i v_j k(x_i, y_j)`.
pub fn inner<T: Scalar>(a: &Embedding<'_, T>, b: &Embedding<'_, T>) -> Result<T> {
    check_pair(a, b)?;
    Ok(double_sum(a, b))
}

/// `|mu(p)|^2`, using the symmetry of the kernel to halve the work:
/// `sum_i w_i (w_i k(x_i, x_i) + 2 sum_{j<i} w_j k(x_i, x_j))`.
pub fn norm_sq<T: Scalar>(a: &Embedding<'_, T>) -> T {
    let k = &a.kernel;
    let s = a.sample;
    let (coords, ws, d) = (s.points().coords(), s.weights(), s.dim());
    let two = T::lit(2.0);
    let row = |i: usize| {
        let x = s.points().point(i);
        let below = k.weighted_sum_flat(x, &coords[..i * d], &ws[..i]);
        ws[i] * (ws[i] * k.bound() + two * below)
    };
    let n = s.len();
    if n * n >= 2 * PARALLEL_THRESHOLD {
        let rows: Vec<T> = (0..n).into_par_iter().map(row).collect();
        rows.into_iter().fold(T::zero(), |acc, r| acc + r)
    } else {
        (0..n).map(row).fold(T::zero(), |acc, r| acc + r)
    }
}

/// Evaluates the embedding as a function, `mu(p)(x)`.
pub fn eval_at<T: Scalar>(a: &Embedding<'_, T>, x: &[T]) -> Result<T> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: x.len(),
        });
    }
    Ok(a.kernel.weighted_row_sum(x, a.sample.points(), a.sample.weights()))
}

/// The three Gram sums needed by every divergence on a pair of embeddings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments<T> {
    /// `|mu_a|^2`
    pub norm_sq_a: T,
    /// `|mu_b|^2`
    pub norm_sq_b: T,
    /// `<mu_a, mu_b>`
    pub cross: T,
}

impl<T: Scalar> PairMoments<T> {
    pub fn of(a: &Embedding<'_, T>, b: &Embedding<'_, T>) -> Result<Self> {
        check_pair(a, b)?;
        Ok(Self {
            norm_sq_a: double_sum(a, a),
            norm_sq_b: double_sum(b, b),
            cross: double_sum(a, b),
        })
    }

    /// Squared RKHS distance with tiny negative rounding clamped to zero.
    pub fn mmd_sq(&self) -> T {
        let raw = self.norm_sq_a - T::lit(2.0) * self.cross + self.norm_sq_b;
        if raw < T::zero() && raw >= -T::tol(1e-12) {
            T::zero()
        } else {
            raw
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            norm_sq_a: self.norm_sq_b,
            norm_sq_b: self.norm_sq_a,
            cross: self.cross,
        }
    }
}

/// Biased (V-statistic) squared MMD, `|mu(p) - mu(q)|^2`.
pub fn mmd_sq_biased<T: Scalar>(a: &Embedding<'_, T>, b: &Embedding<'_, T>) -> Result<T> {
    Ok(PairMoments::of(a, b)?.mmd_sq())
}

/// Unbiased (U-statistic) squared MMD between two uniformly weighted samples.
///
/// Diagonal terms are excluded from the within-sample sums, so the value can
/// be negative when the samples come from the same distribution.
pub fn mmd_sq_unbiased<T: Scalar>(kernel: &Kernel<T>, xs: &SampleSet<T>, ys: &SampleSet<T>) -> Result<T> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::invalid("unbiased MMD needs at least two points in each sample"));
    }
    if !xs.is_uniform() || !ys.is_uniform() {
        return Err(Error::invalid("unbiased MMD requires uniform weights"));
    }
    if xs.dim() != ys.dim() {
        return Err(Error::DimensionMismatch {
            expected: xs.dim(),
            got: ys.dim(),
        });
    }
    let off_diagonal = |s: &SampleSet<T>| {
        let pts = s.points();
        let mut total = T::zero();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    total = total + kernel.eval_unchecked(pts.point(i), pts.point(j));
                }
            }
        }
        let n = T::from_count(pts.len());
        total / (n * (n - T::one()))
    };
    let mut cross = T::zero();
    for x in xs.points().iter() {
        for y in ys.points().iter() {
            cross = cross + kernel.eval_unchecked(x, y);
        }
    }
    let nm = T::from_count(xs.len()) * T::from_count(ys.len());
    Ok(off_diagonal(xs) - T::lit(2.0) * cross / nm + off_diagonal(ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k() -> Kernel<f64> {
        Kernel::gaussian(1.0).unwrap()
    }

    #[test]
    fn single_point_has_unit_norm() {
        let s = SampleSet::from_scalars(&[0.0]).unwrap();
        assert_eq!(embed(&k(), &s).norm_sq(), 1.0);
        assert_eq!(embed(&k(), &s).eval_at(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn two_point_norm_and_evaluation() {
        let s = SampleSet::from_scalars(&[0.0, 1.0]).unwrap();
        let e = embed(&k(), &s);
        assert_relative_eq!(e.norm_sq(), 0.8032653298563167, epsilon = 1e-12);
        assert_relative_eq!(e.eval_at(&[0.0]).unwrap(), 0.8032653298563167, epsilon = 1e-12);
    }

    #[test]
    fn zero_weight_point_is_inert() {
        let ab = SampleSet::weighted(
            crate::sample::PointCloud::from_scalars(&[0.3, 2.0]).unwrap(),
            vec![1.0, 0.0],
        )
        .unwrap();
        let a = SampleSet::from_scalars(&[0.3]).unwrap();
        let other = SampleSet::from_scalars(&[-1.0, 0.5]).unwrap();
        let kk = k();
        assert_eq!(embed(&kk, &ab).norm_sq(), embed(&kk, &a).norm_sq());
        assert_eq!(
            embed(&kk, &ab).inner(&embed(&kk, &other)).unwrap(),
            embed(&kk, &a).inner(&embed(&kk, &other)).unwrap()
        );
    }

    #[test]
    fn point_pair_mmd() {
        let a = SampleSet::from_scalars(&[0.0]).unwrap();
        let b = SampleSet::from_scalars(&[1.0]).unwrap();
        let (ea, eb) = (embed(&k(), &a), embed(&k(), &b));
        assert_relative_eq!(ea.inner(&eb).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(mmd_sq_biased(&ea, &eb).unwrap(), 0.7869386805747332, epsilon = 1e-12);
        assert_eq!(mmd_sq_biased(&ea, &eb).unwrap(), mmd_sq_biased(&eb, &ea).unwrap());
        assert_eq!(mmd_sq_biased(&ea, &ea).unwrap(), 0.0);
    }

    #[test]
    fn kernel_mismatch_is_an_error() {
        let s = SampleSet::from_scalars(&[0.0]).unwrap();
        let k2 = Kernel::gaussian(2.0).unwrap();
        let r = inner(&embed(&k(), &s), &embed(&k2, &s));
        assert!(matches!(r, Err(Error::KernelMismatch)));
        assert!(mmd_sq_biased(&embed(&k(), &s), &embed(&k2, &s)).is_err());
    }

    #[test]
    fn unbiased_small_example() {
        let s = SampleSet::from_scalars(&[0.0, 1.0]).unwrap();
        let v = mmd_sq_unbiased(&k(), &s, &s).unwrap();
        assert_relative_eq!(v, (-0.5f64).exp() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unbiased_preconditions() {
        let one = SampleSet::from_scalars(&[0.0]).unwrap();
        let two = SampleSet::from_scalars(&[0.0, 1.0]).unwrap();
        assert!(mmd_sq_unbiased(&k(), &one, &two).is_err());
        let weighted = SampleSet::weighted(two.points().clone(), vec![0.25, 0.75]).unwrap();
        assert!(mmd_sq_unbiased(&k(), &weighted, &two).is_err());
    }
}
