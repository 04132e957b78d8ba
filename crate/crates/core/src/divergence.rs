//! Estimators of kernelized functional Bregman divergences.
//!
//! Two routes are provided:
//!
//! * [`deformed_divergence`]: the closed form for a radial generator
//!   `F(u) = phi(|u|)`, written in terms of the three Gram sums
//!   `|mu_p|^2`, `|mu_q|^2` and `<mu_p, mu_q>`;
//! * [`operator_g_divergence`]: the plug-in estimator for generators of the
//!   form `F(mu) = <mu, G(mu)>`, evaluated pointwise on the samples.
//!
//! For `G(mu) = sigma(|mu|) mu` with `sigma(r) r^2 = phi(r)` the two routes
//! agree, which the tests exploit.

use serde::Serialize;

use crate::embedding::{embed, Embedding, PairMoments};
use crate::error::{Error, Result};
use crate::generators::{RadialGenerator, SandwichConstants, PERP_SWITCH};
use crate::kernels::Kernel;
use crate::sample::SampleSet;
use crate::scalar::Scalar;

/// Slack used when checking nonnegativity and the sandwich bounds.
pub const BOUND_SLACK: f64 = 1e-10;

/// Value of a divergence estimate together with the quantities it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport<T> {
    pub value: T,
    /// `|mu(p)|`
    pub norm_f: T,
    /// `|mu(q)|`
    pub norm_g: T,
    /// `<mu(p), mu(q)>`
    pub cross: T,
    pub mmd_sq: T,
    /// `m(R)/2 * mmd_sq`
    pub lower: T,
    /// `L(R)/2 * mmd_sq`
    pub upper: T,
    /// Radius of the ball the bounds are stated on.
    #[serde(rename = "R")]
    pub radius: T,
    /// `max(|mu(p)|, |mu(q)|)`, the smallest radius containing both embeddings.
    #[serde(rename = "R_tight")]
    pub tight_radius: T,
    #[serde(rename = "m")]
    pub curvature_min: T,
    #[serde(rename = "L")]
    pub curvature_max: T,
}

impl<T: Scalar> DivergenceReport<T> {
    /// True when `lower - slack <= value <= upper + slack`.
    pub fn within_bounds(&self) -> bool {
        let s = T::tol(BOUND_SLACK);
        self.lower - s <= self.value && self.value <= self.upper + s
    }
}

/// Deformed squared MMD from precomputed Gram sums.
///
/// `a` is the first argument (`mu(p)`), `b` the second (`mu(q)`). The bounds
/// are evaluated on the ball of radius `max(radius_floor, |mu_p|, |mu_q|)`.
pub fn deformed_from_moments<T: Scalar>(
    generator: &RadialGenerator<T>,
    moments: &PairMoments<T>,
    radius_floor: T,
) -> Result<DivergenceReport<T>> {
    let ns_f = moments.norm_sq_a.max(T::zero());
    let ns_g = moments.norm_sq_b.max(T::zero());
    let (norm_f, norm_g) = (ns_f.sqrt(), ns_g.sqrt());
    let mmd_sq = moments.mmd_sq();
    // phi'(|g|)/|g|, extended by phi''(0) at the origin
    let half = generator.lambda_perp(norm_g) / T::lit(2.0);
    // phi(|f|) - phi(|g|) - (phi'(|g|)/|g|) <g, f - g> regrouped around the
    // squared distance; for phi(r) = r^2 the two brackets vanish exactly.
    let value =
        half * mmd_sq + (generator.phi_of_norm_sq(ns_f) - half * ns_f) - (generator.phi_of_norm_sq(ns_g) - half * ns_g);
    let tight_radius = norm_f.max(norm_g);
    let radius = radius_floor.max(tight_radius);
    let c = generator.sandwich_constants(radius)?;
    Ok(report(value, norm_f, norm_g, moments.cross, mmd_sq, tight_radius, c))
}

fn report<T: Scalar>(
    value: T,
    norm_f: T,
    norm_g: T,
    cross: T,
    mmd_sq: T,
    tight_radius: T,
    c: SandwichConstants<T>,
) -> DivergenceReport<T> {
    let two = T::lit(2.0);
    DivergenceReport {
        value,
        norm_f,
        norm_g,
        cross,
        mmd_sq,
        lower: c.curvature_min / two * mmd_sq,
        upper: c.curvature_max / two * mmd_sq,
        radius: c.radius,
        tight_radius,
        curvature_min: c.curvature_min,
        curvature_max: c.curvature_max,
    }
}

/// `d(p, q) = phi(|mu_p|) - phi(|mu_q|) - (phi'(|mu_q|)/|mu_q|) <mu_q, mu_p - mu_q>`.
///
/// Bounds in the report use `R = max(1, |mu_p|, |mu_q|)`.
pub fn deformed_divergence<T: Scalar>(
    generator: &RadialGenerator<T>,
    a: &Embedding<'_, T>,
    b: &Embedding<'_, T>,
) -> Result<DivergenceReport<T>> {
    let moments = PairMoments::of(a, b)?;
    deformed_from_moments(generator, &moments, a.kernel().embedding_radius())
}

/// `sqrt(max(d, 0))`, the objective of minimum-divergence estimation.
pub fn sqrt_divergence<T: Scalar>(
    generator: &RadialGenerator<T>,
    a: &Embedding<'_, T>,
    b: &Embedding<'_, T>,
) -> Result<T> {
    Ok(deformed_divergence(generator, a, b)?.value.max(T::zero()).sqrt())
}

/// Outcome of checking a divergence against its sandwich bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichCheck<T> {
    pub value: T,
    pub mmd_sq: T,
    pub lower: T,
    pub upper: T,
    pub ok: bool,
}

/// Checks `m(R)/2 MMD^2 <= d <= L(R)/2 MMD^2` on the unit ball.
pub fn sandwich_check<T: Scalar>(
    generator: &RadialGenerator<T>,
    a: &Embedding<'_, T>,
    b: &Embedding<'_, T>,
) -> Result<SandwichCheck<T>> {
    sandwich_check_at(generator, a, b, T::one())
}

pub fn sandwich_check_at<T: Scalar>(
    generator: &RadialGenerator<T>,
    a: &Embedding<'_, T>,
    b: &Embedding<'_, T>,
    radius: T,
) -> Result<SandwichCheck<T>> {
    let moments = PairMoments::of(a, b)?;
    let r = deformed_from_moments(generator, &moments, radius)?;
    // bounds on the requested ball, not the widened one
    let c = generator.sandwich_constants(radius)?;
    let two = T::lit(2.0);
    let lower = c.curvature_min / two * r.mmd_sq;
    let upper = c.curvature_max / two * r.mmd_sq;
    let s = T::tol(BOUND_SLACK);
    Ok(SandwichCheck {
        value: r.value,
        mmd_sq: r.mmd_sq,
        lower,
        upper,
        ok: lower - s <= r.value && r.value <= upper + s,
    })
}

/// Scalar map `sigma` used to build an operator `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarMap<T> {
    /// `sigma(t) = c`
    Constant(T),
    /// `sigma(t) = log t`, defined for `t > 0`
    Log,
    /// `sigma(t) = phi(t) / t^2`, so that `sigma(|mu|) |mu|^2 = phi(|mu|)`
    RadialQuotient(RadialGenerator<T>),
}

impl<T: Scalar> ScalarMap<T> {
    /// `(sigma(t), sigma'(t))`, or `None` outside the domain.
    pub fn eval(&self, t: T) -> Option<(T, T)> {
        match *self {
            ScalarMap::Constant(c) => Some((c, T::zero())),
            ScalarMap::Log => (t > T::zero() && t.is_finite()).then(|| (t.ln(), T::one() / t)),
            ScalarMap::RadialQuotient(g) => {
                if t <= T::lit(1e-6) {
                    return None;
                }
                let t2 = t * t;
                let phi = g.phi(t);
                Some((phi / t2, g.dphi(t) / t2 - T::lit(2.0) * phi / (t2 * t)))
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ScalarMap::Constant(_) => "constant",
            ScalarMap::Log => "log",
            ScalarMap::RadialQuotient(_) => "radial quotient",
        }
    }
}

/// Uniform trapezoid quadrature on `[lo, hi]` for the reference measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid<T> {
    pub lo: T,
    pub hi: T,
    pub points: usize,
}

impl<T: Scalar> QuadratureGrid<T> {
    pub fn new(lo: T, hi: T, points: usize) -> Result<Self> {
        if !(hi > lo) || points < 2 {
            return Err(Error::invalid("quadrature grid needs hi > lo and at least 2 points"));
        }
        Ok(Self { lo, hi, points })
    }

    /// Grid covering both samples padded by `pad` on each side.
    pub fn covering(p: &SampleSet<T>, q: &SampleSet<T>, pad: T, points: usize) -> Result<Self> {
        let (lo, hi) = support_1d(p, q)?;
        Self::new(lo - pad, hi + pad, points)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (T, T)> + '_ {
        let h = (self.hi - self.lo) / T::from_count(self.points - 1);
        (0..self.points).map(move |i| {
            let x = if i + 1 == self.points {
                self.hi
            } else {
                self.lo + h * T::from_count(i)
            };
            let w = if i == 0 || i + 1 == self.points {
                h / T::lit(2.0)
            } else {
                h
            };
            (x, w)
        })
    }
}

fn support_1d<T: Scalar>(p: &SampleSet<T>, q: &SampleSet<T>) -> Result<(T, T)> {
    if p.dim() != 1 || q.dim() != 1 {
        return Err(Error::invalid(
            "pointwise operators are only supported on one-dimensional samples",
        ));
    }
    let all = p.points().coords().iter().chain(q.points().coords());
    let lo = all.clone().fold(T::infinity(), |a, &b| a.min(b));
    let hi = all.fold(T::neg_infinity(), |a, &b| a.max(b));
    Ok((lo, hi))
}

/// Operator `G: H -> H` defining the generator `F(mu) = <mu, G(mu)>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorG<T> {
    /// `G(mu) = mu`; recovers the squared MMD.
    Identity,
    /// `G(mu) = sigma(|mu|) mu`; recovers the deformed squared MMD.
    Deformed(ScalarMap<T>),
    /// `G(mu) = int sigma(mu(x)) k(x, .) dnu(x)` with `nu` Lebesgue measure
    /// on a one-dimensional grid; `F(mu) = int sigma(mu(x)) mu(x) dnu(x)`.
    Pointwise {
        sigma: ScalarMap<T>,
        grid: QuadratureGrid<T>,
    },
}

/// Naive plug-in estimate
/// `sum_i w_i [G(mu_p)(x_i) - G(mu_q)(x_i)] - sum_j v_j grad G(mu_q)[mu_p - mu_q](y_j)`.
pub fn operator_g_divergence<T: Scalar>(
    op: &OperatorG<T>,
    kernel: &Kernel<T>,
    p: &SampleSet<T>,
    q: &SampleSet<T>,
) -> Result<T> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let (ep, eq) = (embed(kernel, p), embed(kernel, q));
    match op {
        OperatorG::Identity => {
            let t1 = weighted_sum(p, |x| Ok(ep.eval_at(x)? - eq.eval_at(x)?))?;
            let t2 = weighted_sum(q, |y| Ok(ep.eval_at(y)? - eq.eval_at(y)?))?;
            Ok(t1 - t2)
        }
        OperatorG::Deformed(sigma) => deformed_plug_in(sigma, &ep, &eq),
        OperatorG::Pointwise { sigma, grid } => pointwise_plug_in(sigma, grid, kernel, &ep, &eq),
    }
}

fn weighted_sum<T: Scalar>(s: &SampleSet<T>, mut f: impl FnMut(&[T]) -> Result<T>) -> Result<T> {
    let mut acc = T::zero();
    for (w, x) in s.iter() {
        acc = acc + w * f(x)?;
    }
    Ok(acc)
}

fn deformed_plug_in<T: Scalar>(sigma: &ScalarMap<T>, ep: &Embedding<'_, T>, eq: &Embedding<'_, T>) -> Result<T> {
    let (np, nq) = (ep.norm(), eq.norm());
    let domain = |t: T| {
        sigma
            .eval(t)
            .ok_or_else(|| Error::Domain(format!("{} map undefined at embedding norm {t}", sigma.name())))
    };
    let (sp, _) = domain(np)?;
    let (sq, dsq) = domain(nq)?;
    // G(mu) = sigma(|mu|) mu
    let t1 = weighted_sum(ep.sample(), |x| Ok(sp * ep.eval_at(x)? - sq * eq.eval_at(x)?))?;
    // <mu_q, h> for h = mu_p - mu_q, by the reproducing property
    let h_on_q = weighted_sum(eq.sample(), |y| Ok(ep.eval_at(y)? - eq.eval_at(y)?))?;
    let radial = if nq > T::lit(PERP_SWITCH) {
        dsq * h_on_q / nq
    } else {
        T::zero()
    };
    // grad G(mu)[h] = sigma(|mu|) h + sigma'(|mu|) <mu, h>/|mu| mu
    let t2 = weighted_sum(eq.sample(), |y| {
        let h = ep.eval_at(y)? - eq.eval_at(y)?;
        Ok(sq * h + radial * eq.eval_at(y)?)
    })?;
    Ok(t1 - t2)
}

fn pointwise_plug_in<T: Scalar>(
    sigma: &ScalarMap<T>,
    grid: &QuadratureGrid<T>,
    kernel: &Kernel<T>,
    ep: &Embedding<'_, T>,
    eq: &Embedding<'_, T>,
) -> Result<T> {
    let (lo, hi) = support_1d(ep.sample(), eq.sample())?;
    let pad = T::lit(3.0) * kernel.width();
    if grid.lo > lo - pad || grid.hi < hi + pad {
        return Err(Error::invalid(format!(
            "quadrature grid [{}, {}] must cover the samples padded by three kernel widths [{}, {}]",
            grid.lo,
            grid.hi,
            lo - pad,
            hi + pad
        )));
    }
    // per node: (x, weight * (sigma(u_p) - sigma(u_q)), weight * sigma'(u_q) (u_p - u_q))
    let mut nodes = Vec::with_capacity(grid.points);
    for (i, (x, w)) in grid.nodes().enumerate() {
        let up = ep.eval_at(&[x])?;
        let uq = eq.eval_at(&[x])?;
        let eval = |u: T| {
            sigma.eval(u).ok_or_else(|| {
                Error::Domain(format!(
                    "{} map undefined at grid point {i} (x = {x}): embedding value {u}",
                    sigma.name()
                ))
            })
        };
        let (sp, _) = eval(up)?;
        let (sq, dsq) = eval(uq)?;
        nodes.push((x, w * (sp - sq), w * dsq * (up - uq)));
    }
    let apply = |z: &[T], pick: fn(&(T, T, T)) -> T| {
        nodes
            .iter()
            .fold(T::zero(), |acc, n| acc + pick(n) * kernel.eval_unchecked(&[n.0], z))
    };
    // G(mu_p)(x) - G(mu_q)(x) = sum_l w_l (sigma(u_p) - sigma(u_q)) k(x_l, x)
    let t1 = weighted_sum(ep.sample(), |x| Ok(apply(x, |n| n.1)))?;
    // grad G(mu_q)[h](y) = sum_l w_l sigma'(u_q) h(x_l) k(x_l, y)
    let t2 = weighted_sum(eq.sample(), |y| Ok(apply(y, |n| n.2)))?;
    Ok(t1 - t2)
}
