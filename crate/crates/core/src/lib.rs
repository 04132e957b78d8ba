//! Kernelized functional Bregman divergences.
//!
//! A functional Bregman divergence whose generator factors through the
//! kernel mean embedding, `Phi = F o mu`, acts on embeddings:
//! `d_Phi(p, q) = d_F(mu(p), mu(q))`. With a radial generator
//! `F(u) = phi(|u|)` this gives a family of "deformed" squared MMDs that
//! reduces to the squared MMD for `phi(r) = r^2` and is sandwiched between
//! multiples of it on any ball of embeddings.
//!
//! Layout:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`kernels`] | bounded kernels, Gram matrices |
//! | [`sample`] | weighted empirical measures, CSV/JSON ingestion |
//! | [`embedding`] | lazy kernel mean embeddings, MMD estimators |
//! | [`generators`] | radial profiles and their sandwich constants |
//! | [`divergence`] | deformed and operator-based divergence estimators |
//! | [`scan`] | Monte Carlo scans of the sandwich bounds |
//! | [`findim`] | finite-dimensional Bregman geometry checks |
//! | [`estimation`] | minimum-divergence location fits and bound audits |
//!
//! The kernel, embedding, generator and divergence layers are generic over
//! [`Scalar`] (`f32` or `f64`). The aliases below fix the scalar to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod divergence;
pub mod embedding;
pub mod error;
pub mod estimation;
pub mod findim;
pub mod generators;
pub mod kernels;
pub mod rng;
pub mod sample;
pub mod scalar;
pub mod scan;

pub use embedding::{embed, inner, mmd_sq_biased, mmd_sq_unbiased, norm_sq, PairMoments};
pub use error::{Error, Result};
pub use generators::RadialProfile;
pub use kernels::KernelFamily;
pub use scalar::Scalar;

pub type Kernel = kernels::Kernel<f64>;
pub type Kernel32 = kernels::Kernel<f32>;
pub type SampleSet = sample::SampleSet<f64>;
pub type SampleSet32 = sample::SampleSet<f32>;
pub type PointCloud = sample::PointCloud<f64>;
pub type Embedding<'a> = embedding::Embedding<'a, f64>;
pub type RadialGenerator = generators::RadialGenerator<f64>;
pub type RadialGenerator32 = generators::RadialGenerator<f32>;
pub type SandwichConstants = generators::SandwichConstants<f64>;
pub type DivergenceReport = divergence::DivergenceReport<f64>;
pub type OperatorG = divergence::OperatorG<f64>;
