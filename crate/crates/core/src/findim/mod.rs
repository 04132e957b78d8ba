//! Finite-dimensional Bregman geometry on `R^m`.
//!
//! The Hilbert-space identities behind the kernel divergences are
//! dimension-free, so each is exercised here on coordinates with explicit
//! gradients, Hessians and a Newton-based convex conjugate.

mod checks;
mod conjugate;
pub mod fd;
mod metric;
pub mod suite;

pub use checks::{
    bias_variance_check, bregman, dual_divergence_check, fenchel_young_gap, mean_minimiser, quasi_arithmetic_mean,
    radial_gradient_check, radial_hessian_check, reverse_risk_minimiser, risk, symmetry_probe, three_point,
    SymmetryProbe,
};
pub use conjugate::{conjugate, conjugate_newton, Conjugate, NEWTON_MAX_ITER, NEWTON_TOL};
pub use metric::{
    gsb, gsb_block, schur_check, schur_report, triangle_fuzz, MetricisationSpec, SchurReport, TriangleFuzz,
};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngExt};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::generators::RadialGenerator;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Family of strictly convex generators on `R^m`.
#[derive(Debug, Clone, PartialEq)]
pub enum FinDimKind {
    /// `1/2 <u, T u> + <b, u> + c` with `T` symmetric positive definite.
    Quadratic { t: Matrix, b: Vector, c: f64 },
    /// `phi(|u|)`
    Radial(RadialGenerator<f64>),
    /// `sum_i u_i log u_i` on the open positive orthant.
    NegEntropy,
    /// `log sum_i exp(u_i)`; strictly convex only modulo shifts along `1`.
    LogSumExp,
}

/// A generator together with its dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FinDimGenerator {
    kind: FinDimKind,
    dim: usize,
}

/// How random points are drawn from a generator's domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// The kind's default box (see [`FinDimGenerator::sample_point`]).
    #[default]
    Domain,
    /// Interior of the probability simplex, coordinates at least `1e-4`.
    Simplex,
}

impl FinDimGenerator {
    pub fn quadratic(t: Matrix, b: Vector, c: f64) -> Result<Self> {
        let m = t.nrows();
        if m == 0 || t.ncols() != m || b.len() != m {
            return Err(Error::invalid("quadratic generator needs square T and matching b"));
        }
        let asym = (&t - t.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + t.abs().max()) {
            return Err(Error::invalid("quadratic generator needs symmetric T"));
        }
        if t.clone().cholesky().is_none() {
            return Err(Error::Singular("T is not positive definite".into()));
        }
        Ok(Self {
            kind: FinDimKind::Quadratic { t, b, c },
            dim: m,
        })
    }

    /// `1/2 s |u|^2`
    pub fn scaled_identity(dim: usize, s: f64) -> Result<Self> {
        Self::quadratic(Matrix::identity(dim, dim) * s, Vector::zeros(dim), 0.0)
    }

    pub fn radial(g: RadialGenerator<f64>, dim: usize) -> Result<Self> {
        Self::simple(FinDimKind::Radial(g), dim)
    }

    pub fn neg_entropy(dim: usize) -> Result<Self> {
        Self::simple(FinDimKind::NegEntropy, dim)
    }

    pub fn log_sum_exp(dim: usize) -> Result<Self> {
        Self::simple(FinDimKind::LogSumExp, dim)
    }

    fn simple(kind: FinDimKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(Self { kind, dim })
    }

    /// Random well-conditioned quadratic: `T = G G^T / m + I/2`, `b, c` standard normal.
    pub fn random_quadratic<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let g = Matrix::from_fn(dim, dim, |_, _| normal(rng));
        let t = (&g * g.transpose()) / dim as f64 + Matrix::identity(dim, dim) * 0.5;
        let t = (&t + t.transpose()) * 0.5;
        let b = Vector::from_fn(dim, |_, _| normal(rng));
        Self::quadratic(t, b, normal(rng))
    }

    pub fn kind(&self) -> &FinDimKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> String {
        match &self.kind {
            FinDimKind::Quadratic { .. } => "quadratic".into(),
            FinDimKind::Radial(g) => format!("radial:{g}"),
            FinDimKind::NegEntropy => "neg_entropy".into(),
            FinDimKind::LogSumExp => "log_sum_exp".into(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        match &self.kind {
            FinDimKind::Quadratic { .. } => true,
            FinDimKind::Radial(g) => g.is_quadratic(),
            _ => false,
        }
    }

    /// True when `u` has the right length, is finite and lies in the domain.
    pub fn contains(&self, u: &Vector) -> bool {
        u.len() == self.dim
            && u.iter().all(|x| x.is_finite())
            && (!matches!(self.kind, FinDimKind::NegEntropy) || u.iter().all(|&x| x > 0.0))
    }

    pub fn check(&self, u: &Vector) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        if !self.contains(u) {
            return Err(Error::Domain(format!("point outside the domain of {}", self.name())));
        }
        Ok(())
    }

    pub fn value(&self, u: &Vector) -> Result<f64> {
        self.check(u)?;
        Ok(self.value_unchecked(u))
    }

    pub(crate) fn value_unchecked(&self, u: &Vector) -> f64 {
        match &self.kind {
            FinDimKind::Quadratic { t, b, c } => 0.5 * u.dot(&(t * u)) + b.dot(u) + c,
            FinDimKind::Radial(g) => g.phi(u.norm()),
            FinDimKind::NegEntropy => u.iter().map(|&x| x * x.ln()).sum(),
            FinDimKind::LogSumExp => {
                let mx = u.max();
                mx + u.iter().map(|&x| (x - mx).exp()).sum::<f64>().ln()
            }
        }
    }

    pub fn grad(&self, u: &Vector) -> Result<Vector> {
        self.check(u)?;
        Ok(match &self.kind {
            FinDimKind::Quadratic { t, b, .. } => t * u + b,
            FinDimKind::Radial(g) => u * g.lambda_perp(u.norm()),
            FinDimKind::NegEntropy => u.map(|x| x.ln() + 1.0),
            FinDimKind::LogSumExp => softmax(u),
        })
    }

    pub fn hess(&self, u: &Vector) -> Result<Matrix> {
        self.check(u)?;
        let m = self.dim;
        Ok(match &self.kind {
            FinDimKind::Quadratic { t, .. } => t.clone(),
            FinDimKind::Radial(g) => {
                let r = u.norm();
                let perp = g.lambda_perp(r);
                let mut h = Matrix::identity(m, m) * perp;
                if r > crate::generators::PERP_SWITCH {
                    let e = u / r;
                    h += (&e * e.transpose()) * (g.lambda_par(r) - perp);
                }
                h
            }
            FinDimKind::NegEntropy => Matrix::from_diagonal(&u.map(|x| 1.0 / x)),
            FinDimKind::LogSumExp => {
                let s = softmax(u);
                Matrix::from_diagonal(&s) - &s * s.transpose()
            }
        })
    }

    /// Random point of the kind's sampling box:
    /// positive orthant `[1e-2, 2]^m` for neg-entropy, radius at most `1.5`
    /// for radial kinds, `[-2, 2]^m` otherwise.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let m = self.dim;
        match &self.kind {
            FinDimKind::NegEntropy => Vector::from_fn(m, |_, _| rng.random_range(1e-2..2.0)),
            FinDimKind::Radial(_) => {
                let dir = Vector::from_fn(m, |_, _| normal(rng));
                let n = dir.norm().max(1e-300);
                dir * (rng.random_range(0.05..1.5) / n)
            }
            _ => Vector::from_fn(m, |_, _| rng.random_range(-2.0..2.0)),
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, sampling: Sampling, rng: &mut R) -> Vector {
        match sampling {
            Sampling::Domain => self.sample_point(rng),
            Sampling::Simplex => sample_simplex(self.dim, rng),
        }
    }

    /// `P u` with `P` removing the component along `1` for log-sum-exp and the
    /// identity otherwise. Log-sum-exp gradients are invariant under `u + c 1`,
    /// so points are compared in this gauge.
    pub fn gauge(&self, u: &Vector) -> Vector {
        match self.kind {
            FinDimKind::LogSumExp => u.add_scalar(-u.mean()),
            _ => u.clone(),
        }
    }
}

pub(crate) fn softmax(u: &Vector) -> Vector {
    let mx = u.max();
    let e = u.map(|x| (x - mx).exp());
    let s = e.sum();
    e / s
}

pub(crate) fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Interior of the simplex with all coordinates at least `1e-4`.
pub fn sample_simplex<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    let floor = 1e-4;
    let e = Vector::from_fn(dim, |_, _| -(1.0 - rng.random::<f64>()).ln());
    let s = e.sum();
    // mix with the uniform point so no coordinate drops below the floor
    let mix = floor * dim as f64;
    e.map(|x| (1.0 - mix) * x / s + floor)
}

/// Weighted family of points.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub weights: Vec<f64>,
    pub points: Vec<Vector>,
}

impl Family {
    pub fn new(weights: Vec<f64>, points: Vec<Vector>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("family"));
        }
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("family members have different dimensions"));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-12 * points.len() as f64 {
            return Err(Error::invalid("family weights must be nonnegative and sum to 1"));
        }
        Ok(Self { weights, points })
    }

    pub fn uniform(points: Vec<Vector>) -> Result<Self> {
        let n = points.len().max(1) as f64;
        Self::new(vec![1.0 / n; points.len()], points)
    }

    /// Random family of `size` domain points with Dirichlet(1) weights.
    pub fn random<R: Rng + ?Sized>(gen: &FinDimGenerator, size: usize, rng: &mut R) -> Result<Self> {
        let points = (0..size).map(|_| gen.sample_point(rng)).collect();
        let raw: Vec<f64> = (0..size).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / s).collect();
        // put the rounding error on the last weight
        let head: f64 = weights[..size - 1].iter().sum();
        weights[size - 1] = 1.0 - head;
        Self::new(weights, points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Vector)> {
        self.weights.iter().copied().zip(self.points.iter())
    }

    /// Arithmetic (Bochner) mean `sum_i w_i f_i`.
    pub fn mean(&self) -> Vector {
        self.iter().fold(Vector::zeros(self.dim()), |acc, (w, p)| acc + p * w)
    }
}
