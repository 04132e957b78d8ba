//! Convex conjugate `Phi*(z) = sup_u <z, u> - Phi(u)`.

use serde::Serialize;

use super::{FinDimGenerator, FinDimKind, Matrix, Vector};
use crate::error::{Error, Result};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 200;
const MAX_BACKTRACK: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conjugate {
    pub value: f64,
    /// Maximiser, i.e. `(grad Phi)^{-1}(z)`; in the zero-sum gauge for log-sum-exp.
    pub argmax: Vec<f64>,
    /// `|grad Phi(argmax) - z|`
    pub residual: f64,
    /// Newton iterations used; 0 for closed forms.
    pub iterations: usize,
}

impl Conjugate {
    pub fn argmax_vector(&self) -> Vector {
        Vector::from_column_slice(&self.argmax)
    }
}

/// Conjugate in closed form for quadratics, by Newton otherwise.
pub fn conjugate(gen: &FinDimGenerator, z: &Vector) -> Result<Conjugate> {
    match gen.kind() {
        FinDimKind::Quadratic { t, b, c } => {
            check_len(gen, z)?;
            let chol = t
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Singular("T is not positive definite".into()))?;
            let zb = z - b;
            let u = chol.solve(&zb);
            let residual = (t * &u + b - z).norm();
            Ok(Conjugate {
                value: 0.5 * zb.dot(&u) - c,
                argmax: u.as_slice().to_vec(),
                residual,
                iterations: 0,
            })
        }
        _ => conjugate_newton(gen, z),
    }
}

fn check_len(gen: &FinDimGenerator, z: &Vector) -> Result<()> {
    if z.len() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            got: z.len(),
        });
    }
    if z.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite dual point"));
    }
    Ok(())
}

/// Damped Newton on `psi(u) = Phi(u) - <z, u>` with Armijo backtracking.
///
/// Starts at the origin (at `1` for neg-entropy). For log-sum-exp the Hessian
/// is singular along `1`; `z` must lie in the open simplex and the system is
/// solved with `H + 1 1^T / m`.
pub fn conjugate_newton(gen: &FinDimGenerator, z: &Vector) -> Result<Conjugate> {
    check_len(gen, z)?;
    let m = gen.dim();
    let lse = matches!(gen.kind(), FinDimKind::LogSumExp);
    if lse && (z.iter().any(|&x| x <= 0.0) || (z.sum() - 1.0).abs() > 1e-10) {
        return Err(Error::Domain(
            "log-sum-exp conjugate is finite only on the open simplex".into(),
        ));
    }
    let mut u = match gen.kind() {
        FinDimKind::NegEntropy => Vector::from_element(m, 1.0),
        _ => Vector::zeros(m),
    };
    let psi = |u: &Vector| gen.value_unchecked(u) - z.dot(u);
    let mut val = psi(&u);
    let mut r = gen.grad(&u)? - z;
    let mut iterations = 0;
    while r.norm() > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NoConvergence {
                what: "conjugate Newton",
                iterations,
                residual: r.norm(),
                best: u.as_slice().to_vec(),
            });
        }
        iterations += 1;
        let mut h = gen.hess(&u)?;
        if lse {
            h += Matrix::from_element(m, m, 1.0 / m as f64);
        }
        let p = solve_spd(h, &(-&r))?;
        let slope = r.dot(&p);
        let noise = 1e-15 * (1.0 + val.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACK {
            let cand = &u + &p * t;
            if gen.contains(&cand) {
                let v = psi(&cand);
                if v <= val + 1e-4 * t * slope + noise {
                    u = cand;
                    val = v;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                what: "conjugate line search",
                iterations,
                residual: r.norm(),
                best: u.as_slice().to_vec(),
            });
        }
        r = gen.grad(&u)? - z;
    }
    let u = gen.gauge(&u);
    let residual = (gen.grad(&u)? - z).norm();
    Ok(Conjugate {
        value: z.dot(&u) - gen.value_unchecked(&u),
        argmax: u.as_slice().to_vec(),
        residual,
        iterations,
    })
}

/// Solves `H x = rhs` for symmetric PSD `H`, adding a growing ridge when
/// Cholesky fails.
pub(crate) fn solve_spd(h: Matrix, rhs: &Vector) -> Result<Vector> {
    if let Some(ch) = h.clone().cholesky() {
        return Ok(ch.solve(rhs));
    }
    let m = h.nrows();
    let mut ridge = 1e-10 * (1.0 + h.abs().max());
    for _ in 0..40 {
        if let Some(ch) = (&h + Matrix::identity(m, m) * ridge).cholesky() {
            return Ok(ch.solve(rhs));
        }
        ridge *= 10.0;
    }
    Err(Error::Singular("Newton system".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::RadialGenerator;
    use crate::rng::trial;

    #[test]
    fn quadratic_closed_form_matches_newton() {
        let mut rng = trial(10, 0);
        for dim in [2, 5, 10] {
            let gen = FinDimGenerator::random_quadratic(dim, &mut rng).unwrap();
            let z = gen.sample_point(&mut rng);
            let a = conjugate(&gen, &z).unwrap();
            let b = conjugate_newton(&gen, &z).unwrap();
            assert!((a.value - b.value).abs() <= 1e-8, "{} vs {}", a.value, b.value);
            assert!((a.argmax_vector() - b.argmax_vector()).norm() <= 1e-8);
            assert_eq!(a.iterations, 0);
        }
    }

    #[test]
    fn neg_entropy_matches_exponential_closed_form() {
        // sup_u <z,u> - sum u log u is attained at u = exp(z - 1)
        let gen = FinDimGenerator::neg_entropy(3).unwrap();
        let z = Vector::from_vec(vec![-2.0, 0.3, 1.5]);
        let c = conjugate(&gen, &z).unwrap();
        let expect: f64 = z.iter().map(|x| (x - 1.0).exp()).sum();
        assert!((c.value - expect).abs() < 1e-10);
        assert!(c.residual <= 1e-8);
    }

    #[test]
    fn log_sum_exp_round_trip_in_gauge() {
        let gen = FinDimGenerator::log_sum_exp(4).unwrap();
        let u0 = Vector::from_vec(vec![0.5, -1.0, 2.0, 0.1]);
        let z = gen.grad(&u0).unwrap();
        let c = conjugate(&gen, &z).unwrap();
        assert!((c.argmax_vector() - gen.gauge(&u0)).norm() < 1e-8);
        // conjugate of log-sum-exp is neg-entropy on the simplex
        let negent: f64 = z.iter().map(|p| p * p.ln()).sum();
        assert!((c.value - negent).abs() < 1e-10);
        let off = Vector::from_vec(vec![0.5, 0.5, 0.5, 0.5]);
        assert!(matches!(conjugate(&gen, &off), Err(Error::Domain(_))));
    }

    #[test]
    fn radial_inverse_gradient() {
        for g in [
            RadialGenerator::exp_centered(),
            RadialGenerator::power(3.0).unwrap(),
            RadialGenerator::sqrtplus(),
        ] {
            let gen = FinDimGenerator::radial(g, 3).unwrap();
            let u0 = Vector::from_vec(vec![0.2, -0.4, 0.3]);
            let z = gen.grad(&u0).unwrap();
            let c = conjugate(&gen, &z).unwrap();
            assert!((c.argmax_vector() - &u0).norm() < 1e-8, "{g}");
        }
    }
}
