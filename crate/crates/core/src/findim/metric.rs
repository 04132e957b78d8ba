//! Symmetrised square-root divergence and its metric conditions.

use rand::Rng;
use serde::Serialize;

use super::checks::bregman;
use super::{normal, FinDimGenerator, Matrix, Sampling, Vector};
use crate::error::{Error, Result};

/// Operators `A`, `B` of the symmetrised divergence
/// `d(f,g) + d(g,f) + 1/2 |f-g|_A^2 + 1/2 |grad f - grad g|_B^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricisationSpec {
    pub a: Matrix,
    pub b: Matrix,
}

impl MetricisationSpec {
    pub fn new(a: Matrix, b: Matrix) -> Result<Self> {
        let m = a.nrows();
        if m == 0 || a.ncols() != m || b.nrows() != m || b.ncols() != m {
            return Err(Error::invalid("A and B must be square of equal size"));
        }
        Ok(Self { a, b })
    }

    pub fn scaled_identities(dim: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(Matrix::identity(dim, dim) * a, Matrix::identity(dim, dim) * b)
    }

    /// Random `A` (SPD, eigenvalues bounded below by 1/2) with
    /// `B = A^{-1} + C C^T / m`, so the Schur condition holds.
    pub fn random_valid<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Self> {
        let g = Matrix::from_fn(dim, dim, |_, _| normal(rng));
        let a = sym(&((&g * g.transpose()) / dim as f64 + Matrix::identity(dim, dim) * 0.5));
        let ainv = a.clone().try_inverse().ok_or_else(|| Error::Singular("A".into()))?;
        let c = Matrix::from_fn(dim, dim, |_, _| normal(rng));
        let b = sym(&(ainv + (&c * c.transpose()) / dim as f64));
        Self::new(a, b)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `[[A, I], [I, B]]`
    pub fn block(&self) -> Matrix {
        let m = self.dim();
        let mut out = Matrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&self.a);
        out.view_mut((m, m), (m, m)).copy_from(&self.b);
        for i in 0..m {
            out[(i, m + i)] = 1.0;
            out[(m + i, i)] = 1.0;
        }
        out
    }
}

fn sym(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Four-term symmetrised divergence.
pub fn gsb(gen: &FinDimGenerator, spec: &MetricisationSpec, f: &Vector, g: &Vector) -> Result<f64> {
    check_dims(gen, spec)?;
    let df = f - g;
    let dg = gen.grad(f)? - gen.grad(g)?;
    Ok(bregman(gen, f, g)? + bregman(gen, g, f)? + 0.5 * df.dot(&(&spec.a * &df)) + 0.5 * dg.dot(&(&spec.b * &dg)))
}

/// The same quantity as `1/2 <b(f) - b(g), M (b(f) - b(g))>` with
/// `b(f) = (f, grad Phi(f))` and `M` the block operator.
pub fn gsb_block(gen: &FinDimGenerator, spec: &MetricisationSpec, f: &Vector, g: &Vector) -> Result<f64> {
    check_dims(gen, spec)?;
    let m = gen.dim();
    let mut delta = Vector::zeros(2 * m);
    delta.rows_mut(0, m).copy_from(&(f - g));
    delta.rows_mut(m, m).copy_from(&(gen.grad(f)? - gen.grad(g)?));
    Ok(0.5 * delta.dot(&(spec.block() * &delta)))
}

fn check_dims(gen: &FinDimGenerator, spec: &MetricisationSpec) -> Result<()> {
    if spec.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            got: spec.dim(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchurReport {
    pub min_eig_a: f64,
    /// Smallest eigenvalue of `B - A^{-1}`.
    pub min_eig_schur: f64,
    /// Smallest eigenvalue of the block operator.
    pub min_eig_block: f64,
    pub valid: bool,
}

/// `valid` iff `min eig(B - A^{-1}) >= -1e-8` and `min eig(A) >= 1e-8`.
pub fn schur_report(spec: &MetricisationSpec) -> Result<SchurReport> {
    let ainv = spec
        .a
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("A is not invertible".into()))?;
    let min_eig_a = sym(&spec.a).symmetric_eigenvalues().min();
    let min_eig_schur = sym(&(&spec.b - ainv)).symmetric_eigenvalues().min();
    let min_eig_block = sym(&spec.block()).symmetric_eigenvalues().min();
    Ok(SchurReport {
        min_eig_a,
        min_eig_schur,
        min_eig_block,
        valid: min_eig_schur >= -1e-8 && min_eig_a >= 1e-8,
    })
}

pub fn schur_check(spec: &MetricisationSpec) -> Result<bool> {
    Ok(schur_report(spec)?.valid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleFuzz {
    pub trials: usize,
    pub violations: usize,
    /// Smallest `sqrt gsb(f,g) + sqrt gsb(g,h) - sqrt gsb(f,h)` seen.
    pub worst_slack: f64,
}

pub const TRIANGLE_TOL: f64 = 1e-9;

/// Counts triples with `sqrt gsb(f,h) > sqrt gsb(f,g) + sqrt gsb(g,h) + 1e-9`.
pub fn triangle_fuzz(
    gen: &FinDimGenerator,
    spec: &MetricisationSpec,
    trials: usize,
    sampling: Sampling,
    seed: u64,
) -> Result<TriangleFuzz> {
    use rayon::prelude::*;
    let slacks = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::trial(seed, i);
            let f = gen.sample_with(sampling, &mut rng);
            let g = gen.sample_with(sampling, &mut rng);
            let h = gen.sample_with(sampling, &mut rng);
            let d = |x: &Vector, y: &Vector| gsb(gen, spec, x, y).map(|v| v.max(0.0).sqrt());
            Ok(d(&f, &g)? + d(&g, &h)? - d(&f, &h)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(TriangleFuzz {
        trials,
        violations: slacks.iter().filter(|&&s| s < -TRIANGLE_TOL).count(),
        worst_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial;

    #[test]
    fn identity_quadratic_doubles_squared_distance() {
        let gen = FinDimGenerator::scaled_identity(3, 1.0).unwrap();
        let spec = MetricisationSpec::scaled_identities(3, 1.0, 1.0).unwrap();
        let f = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        let g = Vector::from_vec(vec![0.0, 1.0, 0.25]);
        let want = 2.0 * (&f - &g).norm_squared();
        assert!((gsb(&gen, &spec, &f, &g).unwrap() - want).abs() < 1e-12);
        assert!((gsb_block(&gen, &spec, &f, &g).unwrap() - want).abs() < 1e-12);
        assert_eq!(gsb(&gen, &spec, &f, &f).unwrap(), 0.0);
        assert_eq!(gsb(&gen, &spec, &f, &g).unwrap(), gsb(&gen, &spec, &g, &f).unwrap());
        let r = schur_report(&spec).unwrap();
        assert!(r.valid && r.min_eig_schur.abs() < 1e-12);
    }

    #[test]
    fn schur_examples() {
        let ok = MetricisationSpec::scaled_identities(2, 2.0, 1.0).unwrap();
        let r = schur_report(&ok).unwrap();
        assert!(r.valid && (r.min_eig_schur - 0.5).abs() < 1e-12 && r.min_eig_block >= -1e-12);
        let bad = MetricisationSpec::scaled_identities(2, 0.5, 1.0).unwrap();
        let r = schur_report(&bad).unwrap();
        assert!(!r.valid && (r.min_eig_schur + 1.0).abs() < 1e-12);
        assert!(r.min_eig_block < 0.0);
        let sing = MetricisationSpec::new(Matrix::zeros(2, 2), Matrix::identity(2, 2)).unwrap();
        assert!(matches!(schur_check(&sing), Err(Error::Singular(_))));
    }

    #[test]
    fn random_valid_specs_pass_and_block_is_psd() {
        let mut rng = trial(11, 0);
        for dim in [2, 5, 10] {
            let spec = MetricisationSpec::random_valid(dim, &mut rng).unwrap();
            let r = schur_report(&spec).unwrap();
            assert!(r.valid);
            assert!(r.min_eig_block >= -1e-8);
        }
    }

    #[test]
    fn triangle_fuzz_is_deterministic() {
        let gen = FinDimGenerator::neg_entropy(3).unwrap();
        let spec = MetricisationSpec::scaled_identities(3, 1.0, 1.0).unwrap();
        let a = triangle_fuzz(&gen, &spec, 500, Sampling::Simplex, 3).unwrap();
        let b = triangle_fuzz(&gen, &spec, 500, Sampling::Simplex, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.violations, 0);
    }
}
