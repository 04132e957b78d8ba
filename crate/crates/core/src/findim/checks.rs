//! Bregman identities evaluated directly on coordinates.

use rand::Rng;
use serde::Serialize;

use super::conjugate::conjugate;
use super::{fd, Family, FinDimGenerator, Matrix, Sampling, Vector};
use crate::error::{Error, Result};
use crate::generators::RadialGenerator;

/// `Phi(f) - Phi(g) - <grad Phi(g), f - g>`
pub fn bregman(gen: &FinDimGenerator, f: &Vector, g: &Vector) -> Result<f64> {
    let gg = gen.grad(g)?;
    Ok(gen.value(f)? - gen.value_unchecked(g) - gg.dot(&(f - g)))
}

/// `d(f,g) - d(f,h) - d(h,g) + <grad Phi(g) - grad Phi(h), f - h>`, zero in exact arithmetic.
pub fn three_point(gen: &FinDimGenerator, f: &Vector, g: &Vector, h: &Vector) -> Result<f64> {
    let cross = (gen.grad(g)? - gen.grad(h)?).dot(&(f - h));
    Ok(bregman(gen, f, g)? - bregman(gen, f, h)? - bregman(gen, h, g)? + cross)
}

/// `Phi(f) + Phi*(z) - <f, z>`, nonnegative by Fenchel-Young.
pub fn fenchel_young_gap(gen: &FinDimGenerator, f: &Vector, z: &Vector) -> Result<f64> {
    Ok(gen.value(f)? + conjugate(gen, z)?.value - f.dot(z))
}

/// `d_Phi(g, f) - d_{Phi*}(grad Phi(f), grad Phi(g))` with `Phi*` from [`conjugate`].
pub fn dual_divergence_check(gen: &FinDimGenerator, f: &Vector, g: &Vector) -> Result<f64> {
    let (zf, zg) = (gen.grad(f)?, gen.grad(g)?);
    let cf = conjugate(gen, &zf)?;
    let cg = conjugate(gen, &zg)?;
    let dual = cf.value - cg.value - cg.argmax_vector().dot(&(&zf - &zg));
    Ok(bregman(gen, g, f)? - dual)
}

/// Expected divergence `sum_i w_i d(f_i, g)`.
pub fn risk(gen: &FinDimGenerator, family: &Family, g: &Vector) -> Result<f64> {
    family
        .iter()
        .try_fold(0.0, |acc, (w, f)| Ok(acc + w * bregman(gen, f, g)?))
}

/// Expected divergence in the second slot, `sum_i w_i d(g, f_i)`.
pub fn reverse_risk(gen: &FinDimGenerator, family: &Family, g: &Vector) -> Result<f64> {
    family
        .iter()
        .try_fold(0.0, |acc, (w, f)| Ok(acc + w * bregman(gen, g, f)?))
}

/// `E d(F, g) - E d(F, mean) - d(mean, g)`, zero in exact arithmetic.
pub fn bias_variance_check(gen: &FinDimGenerator, family: &Family, g: &Vector) -> Result<f64> {
    let mean = family.mean();
    Ok(risk(gen, family, g)? - risk(gen, family, &mean)? - bregman(gen, &mean, g)?)
}

const GD_MAX_ITER: usize = 50_000;

/// Minimises `g -> sum_i w_i d(f_i, g)` by gradient descent with
/// Barzilai-Borwein steps and backtracking, starting from the first member.
pub fn mean_minimiser(gen: &FinDimGenerator, family: &Family) -> Result<Vector> {
    let objective = |g: &Vector| risk(gen, family, g);
    // grad_g d(f, g) = -H(g) (f - g)
    let gradient = |g: &Vector| -> Result<Vector> {
        let h = gen.hess(g)?;
        Ok(family
            .iter()
            .fold(Vector::zeros(g.len()), |acc, (w, f)| acc - &h * (f - g) * w))
    };
    descend(
        gen,
        objective,
        gradient,
        family.points[0].clone(),
        spread(family),
        "mean minimiser",
    )
}

/// Minimises `g -> sum_i w_i d(g, f_i)` by gradient descent; the gradient is
/// `grad Phi(g) - sum_i w_i grad Phi(f_i)`. Starts from the arithmetic mean.
pub fn reverse_risk_minimiser(gen: &FinDimGenerator, family: &Family) -> Result<Vector> {
    let zbar = mean_gradient(gen, family)?;
    let objective = |g: &Vector| reverse_risk(gen, family, g);
    let gradient = |g: &Vector| Ok(gen.grad(g)? - &zbar);
    descend(
        gen,
        objective,
        gradient,
        family.mean(),
        spread(family),
        "reverse risk minimiser",
    )
}

// Largest step allowed in one iteration: Barzilai-Borwein steps can be huge
// where the objective is flat (e.g. saturated log-sum-exp).
fn spread(family: &Family) -> f64 {
    let first = &family.points[0];
    1.0 + family.points.iter().map(|p| (p - first).norm()).fold(0.0, f64::max)
}

fn mean_gradient(gen: &FinDimGenerator, family: &Family) -> Result<Vector> {
    family
        .iter()
        .try_fold(Vector::zeros(family.dim()), |acc, (w, f)| Ok(acc + gen.grad(f)? * w))
}

/// `(grad Phi)^{-1}(sum_i w_i grad Phi(f_i))`, via the conjugate maximiser.
pub fn quasi_arithmetic_mean(gen: &FinDimGenerator, family: &Family) -> Result<Vector> {
    let zbar = mean_gradient(gen, family)?;
    Ok(conjugate(gen, &zbar)?.argmax_vector())
}

fn descend(
    gen: &FinDimGenerator,
    objective: impl Fn(&Vector) -> Result<f64>,
    gradient: impl Fn(&Vector) -> Result<Vector>,
    start: Vector,
    max_step: f64,
    what: &'static str,
) -> Result<Vector> {
    let mut x = start;
    let mut fx = objective(&x)?;
    let mut gx = gradient(&x)?;
    let tol = 1e-13 * (1.0 + x.norm());
    let mut step: f64 = 1.0;
    for _ in 0..GD_MAX_ITER {
        if gx.norm() <= tol {
            return Ok(gen.gauge(&x));
        }
        let noise = 1e-15 * (1.0 + fx.abs());
        let mut t = step.min(max_step / gx.norm());
        let mut moved = None;
        for _ in 0..80 {
            let cand = &x - &gx * t;
            if gen.contains(&cand) {
                let fc = objective(&cand)?;
                if fc <= fx - 1e-4 * t * gx.norm_squared() + noise {
                    moved = Some((cand, fc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((nx, nf)) = moved else {
            // the objective is flat to rounding; accept if the gradient is small
            if gx.norm() <= 1e-9 * (1.0 + x.norm()) {
                return Ok(gen.gauge(&x));
            }
            break;
        };
        let ng = gradient(&nx)?;
        let s = &nx - &x;
        let y = &ng - &gx;
        let sy = s.dot(&y);
        step = if sy > 0.0 { s.norm_squared() / sy } else { 1.0 };
        x = nx;
        fx = nf;
        gx = ng;
    }
    Err(Error::NoConvergence {
        what,
        iterations: GD_MAX_ITER,
        residual: gx.norm(),
        best: x.as_slice().to_vec(),
    })
}

/// Largest observed `|d(f,g) - d(g,f)|` together with the pair attaining it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryProbe {
    pub max_asymmetry: f64,
    pub is_quadratic: bool,
    pub trials: usize,
    pub witness_f: Vec<f64>,
    pub witness_g: Vec<f64>,
}

/// Random search for an asymmetric pair; trial `i` draws from `trial(seed, i)`.
pub fn symmetry_probe(gen: &FinDimGenerator, trials: usize, sampling: Sampling, seed: u64) -> Result<SymmetryProbe> {
    if trials == 0 {
        return Err(Error::invalid("symmetry probe needs at least one trial"));
    }
    let mut best = (f64::NEG_INFINITY, Vector::zeros(0), Vector::zeros(0));
    for i in 0..trials {
        let mut rng = crate::rng::trial(seed, i);
        let f = gen.sample_with(sampling, &mut rng);
        let g = gen.sample_with(sampling, &mut rng);
        let a = (bregman(gen, &f, &g)? - bregman(gen, &g, &f)?).abs();
        if a > best.0 {
            best = (a, f, g);
        }
    }
    Ok(SymmetryProbe {
        max_asymmetry: best.0,
        is_quadratic: gen.is_quadratic(),
        trials,
        witness_f: best.1.as_slice().to_vec(),
        witness_g: best.2.as_slice().to_vec(),
    })
}

/// Relative error between `(phi'(|u|)/|u|) u` and central differences of `phi(|u|)`.
pub fn radial_gradient_check(g: &RadialGenerator<f64>, u: &Vector) -> Result<f64> {
    let r = u.norm();
    if !(r > 1e-8) {
        return Err(Error::invalid("radial gradient check needs |u| > 1e-8"));
    }
    let closed = u * (g.dphi(r) / r);
    let numeric = fd::central_gradient(|x| g.phi(x.norm()), u, 1e-5);
    Ok((&closed - numeric).norm() / (1.0 + closed.norm()))
}

/// Largest gap between the sorted eigenvalues of a central-difference Hessian
/// of `u -> phi(|u|)` at a point of radius `r` in `R^m` and the predicted
/// spectrum `{lambda_par(r)} + {lambda_perp(r)} x (m - 1)`.
pub fn radial_hessian_check<R: Rng + ?Sized>(g: &RadialGenerator<f64>, dim: usize, r: f64, rng: &mut R) -> Result<f64> {
    if dim == 0 || !(r > 0.0) {
        return Err(Error::invalid("radial Hessian check needs dim > 0 and r > 0"));
    }
    let dir = Vector::from_fn(dim, |_, _| super::normal(rng));
    let u = &dir * (r / dir.norm());
    let h: Matrix = fd::central_hessian(|x| g.phi(x.norm()), &u, 1e-4);
    let mut got: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    got.sort_by(f64::total_cmp);
    let mut want = vec![g.lambda_perp(r); dim - 1];
    want.push(g.lambda_par(r));
    want.sort_by(f64::total_cmp);
    Ok(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn squared_norm_generator_gives_squared_distance() {
        let gen = FinDimGenerator::scaled_identity(3, 2.0).unwrap();
        let (f, g) = (v(&[1.0, 2.0, -0.5]), v(&[0.0, 1.5, 0.5]));
        assert!((bregman(&gen, &f, &g).unwrap() - (&f - &g).norm_squared()).abs() < 1e-14);
        assert_eq!(bregman(&gen, &f, &f).unwrap(), 0.0);
    }

    #[test]
    fn neg_entropy_is_generalised_kl() {
        let gen = FinDimGenerator::neg_entropy(2).unwrap();
        let (f, g) = (v(&[0.5, 0.5]), v(&[0.9, 0.1]));
        let kl = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((bregman(&gen, &f, &g).unwrap() - kl).abs() < 1e-14);
        assert!((kl - 0.5108256238).abs() < 1e-9);
    }

    #[test]
    fn three_point_degenerate_cases_are_exact() {
        let gen = FinDimGenerator::neg_entropy(3).unwrap();
        let (f, g) = (v(&[0.2, 1.0, 0.7]), v(&[1.5, 0.3, 0.9]));
        assert_eq!(three_point(&gen, &f, &g, &g).unwrap(), 0.0);
        assert_eq!(three_point(&gen, &f, &g, &f).unwrap(), 0.0);
    }

    #[test]
    fn singleton_and_degenerate_families() {
        let gen = FinDimGenerator::log_sum_exp(3).unwrap();
        let p = v(&[0.3, -0.2, 1.0]);
        let fam = Family::uniform(vec![p.clone()]).unwrap();
        assert!((mean_minimiser(&gen, &fam).unwrap() - gen.gauge(&p)).norm() < 1e-12);
        assert!((quasi_arithmetic_mean(&gen, &fam).unwrap() - gen.gauge(&p)).norm() < 1e-8);
        let fam = Family::uniform(vec![p.clone(), p.clone()]).unwrap();
        assert_eq!(risk(&gen, &fam, &p).unwrap(), 0.0);
    }

    #[test]
    fn neg_entropy_quasi_mean_is_geometric() {
        // grad = log u + 1 is affine in log u, so the quasi-arithmetic mean is geometric
        let gen = FinDimGenerator::neg_entropy(2).unwrap();
        let fam = Family::new(vec![0.25, 0.75], vec![v(&[1.0, 0.2]), v(&[0.5, 1.8])]).unwrap();
        let q = quasi_arithmetic_mean(&gen, &fam).unwrap();
        let geo = v(&[
            1.0f64.powf(0.25) * 0.5f64.powf(0.75),
            0.2f64.powf(0.25) * 1.8f64.powf(0.75),
        ]);
        assert!((q - geo).norm() < 1e-9);
    }

    #[test]
    fn exp_centered_gradient_at_unit_radius() {
        let g = RadialGenerator::exp_centered();
        let u = v(&[0.6, 0.8]);
        assert!(radial_gradient_check(&g, &u).unwrap() < 1e-6);
        assert!((g.dphi(1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        assert!(radial_gradient_check(&g, &v(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn symmetry_probe_reports_witness() {
        let gen = FinDimGenerator::radial(RadialGenerator::exp_centered(), 2).unwrap();
        let p = symmetry_probe(&gen, 200, Sampling::Domain, 5).unwrap();
        assert!(p.max_asymmetry > 1e-6 && !p.is_quadratic);
        let (f, g) = (v(&p.witness_f), v(&p.witness_g));
        let a = (bregman(&gen, &f, &g).unwrap() - bregman(&gen, &g, &f).unwrap()).abs();
        assert_eq!(a, p.max_asymmetry);
    }

    #[test]
    fn radial_spectrum_matches() {
        let mut rng = trial(9, 0);
        let e = radial_hessian_check(&RadialGenerator::logcosh(), 5, 0.5, &mut rng).unwrap();
        assert!(e < 1e-4, "{e}");
    }
}
