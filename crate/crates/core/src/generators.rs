//! Radial generator profiles `phi: [0, inf) -> R` for deformed squared MMD.
//!
//! For a profile `phi`, the map `u -> phi(|u|)` on a Hilbert space has a
//! Hessian with two eigenvalues: `phi''(r)` along `u` and `phi'(r)/r` on the
//! orthogonal complement. Their extremes over `[0, R]` are the sandwich
//! constants `m(R)` and `L(R)` that bracket the divergence between multiples
//! of squared MMD.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Below this radius `phi'(r)/r` is replaced by its limit `phi''(0)`.
pub const PERP_SWITCH: f64 = 1e-12;

/// Supported profiles. All are `C^2` on `[0, inf)` with `phi'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile<T> {
    /// `r^2`
    Square,
    /// `e^r - 1 - r`
    ExpCentered,
    /// `2 log cosh r`
    #[serde(alias = "log_cosh")]
    Logcosh,
    /// `sqrt(1 + r^2) - 1`
    #[serde(alias = "sqrt_plus")]
    Sqrtplus,
    /// `r^2 + lambda r^4`, `lambda >= 0`
    Quartic { lambda: T },
    /// `r^p`, `p > 2`
    Power { p: T },
}

/// A validated radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGenerator<T> {
    profile: RadialProfile<T>,
}

/// Extremes of the Hessian eigenvalues of `u -> phi(|u|)` over the ball of
/// radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichConstants<T> {
    #[serde(rename = "R")]
    pub radius: T,
    /// `m(R) = inf_{0<=r<=R} min(lambda_par, lambda_perp)`
    #[serde(rename = "m")]
    pub curvature_min: T,
    /// `L(R) = sup_{0<=r<=R} max(lambda_par, lambda_perp)`
    #[serde(rename = "L")]
    pub curvature_max: T,
}

impl<T: Scalar> RadialGenerator<T> {
    pub fn new(profile: RadialProfile<T>) -> Result<Self> {
        match profile {
            RadialProfile::Quartic { lambda } if !(lambda >= T::zero() && lambda.is_finite()) => {
                Err(Error::invalid(format!("quartic lambda must be >= 0, got {lambda}")))
            }
            RadialProfile::Power { p } if !(p > T::lit(2.0) && p.is_finite()) => Err(Error::invalid(format!(
                "power profile needs p > 2 (r^p with 1 < p <= 2 is not C^2 at 0), got {p}"
            ))),
            _ => Ok(Self { profile }),
        }
    }

    pub fn square() -> Self {
        Self {
            profile: RadialProfile::Square,
        }
    }

    pub fn exp_centered() -> Self {
        Self {
            profile: RadialProfile::ExpCentered,
        }
    }

    pub fn logcosh() -> Self {
        Self {
            profile: RadialProfile::Logcosh,
        }
    }

    pub fn sqrtplus() -> Self {
        Self {
            profile: RadialProfile::Sqrtplus,
        }
    }

    pub fn quartic(lambda: T) -> Result<Self> {
        Self::new(RadialProfile::Quartic { lambda })
    }

    pub fn power(p: T) -> Result<Self> {
        Self::new(RadialProfile::Power { p })
    }

    pub fn profile(&self) -> RadialProfile<T> {
        self.profile
    }

    /// Short identifier used in reports and tables.
    pub fn name(&self) -> &'static str {
        match self.profile {
            RadialProfile::Square => "square",
            RadialProfile::ExpCentered => "exp_centered",
            RadialProfile::Logcosh => "logcosh",
            RadialProfile::Sqrtplus => "sqrtplus",
            RadialProfile::Quartic { .. } => "quartic",
            RadialProfile::Power { .. } => "power",
        }
    }

    /// True when `phi(r) = c r^2`, i.e. the divergence is a scaled squared MMD.
    pub fn is_quadratic(&self) -> bool {
        match self.profile {
            RadialProfile::Square => true,
            RadialProfile::Quartic { lambda } => lambda == T::zero(),
            _ => false,
        }
    }

    pub fn phi(&self, r: T) -> T {
        let two = T::lit(2.0);
        match self.profile {
            RadialProfile::Square => r * r,
            RadialProfile::ExpCentered => r.exp_m1() - r,
            RadialProfile::Logcosh => {
                let a = r.abs();
                if a < T::lit(20.0) {
                    two * a.cosh().ln()
                } else {
                    two * (a - T::LN_2() + (-two * a).exp().ln_1p())
                }
            }
            RadialProfile::Sqrtplus => r * r / ((T::one() + r * r).sqrt() + T::one()),
            RadialProfile::Quartic { lambda } => {
                let s = r * r;
                s + lambda * s * s
            }
            RadialProfile::Power { p } => r.powf(p),
        }
    }

    /// `phi(sqrt(s))`, evaluated without the square root where the profile
    /// is polynomial in `r^2`.
    pub fn phi_of_norm_sq(&self, s: T) -> T {
        let s = s.max(T::zero());
        match self.profile {
            RadialProfile::Square => s,
            RadialProfile::Quartic { lambda } => s + lambda * s * s,
            RadialProfile::Power { p } => s.powf(p / T::lit(2.0)),
            RadialProfile::Sqrtplus => s / ((T::one() + s).sqrt() + T::one()),
            _ => self.phi(s.sqrt()),
        }
    }

    pub fn dphi(&self, r: T) -> T {
        let two = T::lit(2.0);
        match self.profile {
            RadialProfile::Square => two * r,
            RadialProfile::ExpCentered => r.exp_m1(),
            RadialProfile::Logcosh => two * r.tanh(),
            RadialProfile::Sqrtplus => r / (T::one() + r * r).sqrt(),
            RadialProfile::Quartic { lambda } => two * r + T::lit(4.0) * lambda * r * r * r,
            RadialProfile::Power { p } => p * r.powf(p - T::one()),
        }
    }

    pub fn d2phi(&self, r: T) -> T {
        let two = T::lit(2.0);
        match self.profile {
            RadialProfile::Square => two,
            RadialProfile::ExpCentered => r.exp(),
            RadialProfile::Logcosh => {
                let c = r.cosh();
                two / (c * c)
            }
            RadialProfile::Sqrtplus => (T::one() + r * r).powf(T::lit(-1.5)),
            RadialProfile::Quartic { lambda } => two + T::lit(12.0) * lambda * r * r,
            RadialProfile::Power { p } => {
                if r == T::zero() {
                    T::zero()
                } else {
                    p * (p - T::one()) * r.powf(p - two)
                }
            }
        }
    }

    /// Radial eigenvalue `phi''(r)`.
    pub fn lambda_par(&self, r: T) -> T {
        self.d2phi(r)
    }

    /// Tangential eigenvalue `phi'(r)/r`, continuously extended by `phi''(0)`.
    pub fn lambda_perp(&self, r: T) -> T {
        if r <= T::lit(PERP_SWITCH) {
            self.d2phi(T::zero())
        } else {
            self.dphi(r) / r
        }
    }

    /// Closed-form sandwich constants on `[0, radius]`.
    pub fn sandwich_constants(&self, radius: T) -> Result<SandwichConstants<T>> {
        check_radius(radius)?;
        let two = T::lit(2.0);
        let (m, l) = match self.profile {
            RadialProfile::Square => (two, two),
            RadialProfile::ExpCentered => (T::one(), radius.exp()),
            RadialProfile::Logcosh => {
                let c = radius.cosh();
                (two / (c * c), two)
            }
            RadialProfile::Sqrtplus => ((T::one() + radius * radius).powf(T::lit(-1.5)), T::one()),
            RadialProfile::Quartic { lambda } => (two, two + T::lit(12.0) * lambda * radius * radius),
            RadialProfile::Power { p } => (T::zero(), p * (p - T::one()) * radius.powf(p - two)),
        };
        Ok(SandwichConstants {
            radius,
            curvature_min: m,
            curvature_max: l,
        })
    }

    /// Sandwich constants found numerically: a uniform grid of
    /// `SANDWICH_GRID` intervals on `[0, radius]`, then golden-section
    /// refinement around the best grid point.
    pub fn sandwich_constants_numeric(&self, radius: T) -> Result<SandwichConstants<T>> {
        check_radius(radius)?;
        let hi = |r: T| self.lambda_par(r).max(self.lambda_perp(r));
        let lo = |r: T| -(self.lambda_par(r).min(self.lambda_perp(r)));
        let l = grid_then_golden(hi, radius);
        let m = -grid_then_golden(lo, radius);
        Ok(SandwichConstants {
            radius,
            curvature_min: m,
            curvature_max: l,
        })
    }
}

pub const SANDWICH_GRID: usize = 10_000;

fn check_radius<T: Scalar>(radius: T) -> Result<()> {
    if radius > T::zero() && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("radius must be positive, got {radius}")))
    }
}

/// Maximum of `f` on `[0, radius]`.
fn grid_then_golden<T: Scalar, F: Fn(T) -> T>(f: F, radius: T) -> T {
    let step = radius / T::from_count(SANDWICH_GRID);
    let (mut best_i, mut best) = (0usize, f(T::zero()));
    for i in 1..=SANDWICH_GRID {
        let r = if i == SANDWICH_GRID {
            radius
        } else {
            step * T::from_count(i)
        };
        let v = f(r);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let a = step * T::from_count(best_i.saturating_sub(1));
    let b = (step * T::from_count(best_i + 1)).min(radius);
    let refined = golden_max(&f, a, b, T::tol(1e-10));
    best.max(f(refined))
}

fn golden_max<T: Scalar, F: Fn(T) -> T>(f: &F, mut a: T, mut b: T, tol: T) -> T {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // endpoints matter for monotone eigenvalue maps
    [a, b, (a + b) / T::lit(2.0)]
        .into_iter()
        .fold(a, |best, r| if f(r) > f(best) { r } else { best })
}

impl<T: Scalar> fmt::Display for RadialGenerator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.profile {
            RadialProfile::Quartic { lambda } => write!(f, "quartic:{lambda}"),
            RadialProfile::Power { p } => write!(f, "power:{p}"),
            _ => f.write_str(self.name()),
        }
    }
}

/// Parses `square`, `exp_centered`, `logcosh`, `sqrtplus`, `quartic:<lambda>`
/// or `power:<p>`. Profiles outside the supported class (for example `exp`
/// or `linear`, whose derivative at zero is nonzero) are rejected.
impl<T: Scalar> FromStr for RadialGenerator<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |default: Option<f64>| -> Result<T> {
            match (arg, default) {
                (Some(a), _) => a
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::invalid(format!("bad profile parameter in '{s}'"))),
                (None, Some(d)) => Ok(T::lit(d)),
                (None, None) => Err(Error::invalid(format!("profile '{name}' needs a parameter"))),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "square" => Ok(Self::square()),
            "exp_centered" => Ok(Self::exp_centered()),
            "logcosh" | "log_cosh" => Ok(Self::logcosh()),
            "sqrtplus" | "sqrt_plus" => Ok(Self::sqrtplus()),
            "quartic" => Self::quartic(num(Some(1.0))?),
            "power" => Self::power(num(None)?),
            "exp" | "linear" | "identity" => Err(Error::invalid(format!(
                "profile '{name}' has phi'(0) != 0 and is not a supported generator"
            ))),
            other => Err(Error::invalid(format!("unknown radial profile '{other}'"))),
        }
    }
}
