//! Minimum-divergence estimation of location models.
//!
//! The model `p_theta` is represented by a fixed standardised sample shifted
//! to `theta` (common random numbers across `theta`), the data by its
//! empirical measure, and the fit minimises `sqrt(d(p_theta, p_n))`.

mod audit;
mod data;
mod fit;
mod model;

pub use audit::{
    bound_audit, infimum_term, rho_estimate, robustness_study, triangle_audit, triangle_study, AuditConfig,
    AuditReport, AuditRow, GridInfimum, RhoEstimate, RhoOptions, RobustnessReport, TriangleRecord, TriangleStudy,
    TRIANGLE_AUDIT_TOL,
};
pub use data::{generate, prefix, reference, Contaminant, ContaminationSpec, DependenceSpec};
pub use fit::{
    fit_with, median, min_divergence_fit, nelder_mead, FitObjective, FitOptions, FitResult, Minimum, NelderMeadOptions,
};
pub use model::{LocationFamily, LocationModel};
