//! Central finite differences.

use super::{Matrix, Vector};

pub fn central_gradient(f: impl Fn(&Vector) -> f64, u: &Vector, h: f64) -> Vector {
    let mut x = u.clone();
    Vector::from_fn(u.len(), |i, _| {
        x[i] = u[i] + h;
        let up = f(&x);
        x[i] = u[i] - h;
        let dn = f(&x);
        x[i] = u[i];
        (up - dn) / (2.0 * h)
    })
}

/// Symmetrised central-difference Hessian.
pub fn central_hessian(f: impl Fn(&Vector) -> f64, u: &Vector, h: f64) -> Matrix {
    let m = u.len();
    let mut x = u.clone();
    let mut at = |di: f64, i: usize, dj: f64, j: usize| {
        x[i] += di;
        x[j] += dj;
        let v = f(&x);
        x[i] = u[i];
        x[j] = u[j];
        v
    };
    let mut hm = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = if i == j {
                let f0 = f(u);
                (at(h, i, 0.0, i) - 2.0 * f0 + at(-h, i, 0.0, i)) / (h * h)
            } else {
                (at(h, i, h, j) - at(h, i, -h, j) - at(-h, i, h, j) + at(-h, i, -h, j)) / (4.0 * h * h)
            };
            hm[(i, j)] = v;
            hm[(j, i)] = v;
        }
    }
    hm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_recovered() {
        let u = Vector::from_vec(vec![0.3, -1.2]);
        let f = |x: &Vector| x[0] * x[0] + 3.0 * x[0] * x[1] + 0.5 * x[1] * x[1];
        let g = central_gradient(f, &u, 1e-5);
        assert!((g[0] - (0.6 - 3.6)).abs() < 1e-8);
        assert!((g[1] - (0.9 - 1.2)).abs() < 1e-8);
        let h = central_hessian(f, &u, 1e-3);
        assert!((h[(0, 0)] - 2.0).abs() < 1e-6 && (h[(0, 1)] - 3.0).abs() < 1e-6 && (h[(1, 1)] - 1.0).abs() < 1e-6);
    }
}
