//! Small-noise exit asymptotics near a hyperbolic saddle.
//!
//! For `dX = b(X)dt + ε dW` started on the stable manifold of a saddle whose
//! linearization has a simple, real, dominant eigenvalue `λ > 0`, the exit
//! pair `(H_ε, τ_ε - ln(1/ε)/λ)` from a region `G` converges to
//! `½δ_{q+}×μ_{h+,σ} + ½δ_{q-}×μ_{h-,σ}`, where `μ_{h,σ}` is the law of
//! `h - ln(σ|𝒩|)/λ`. This crate computes every ingredient from the vector
//! field ([`dynsys`], [`flow`], [`theory`]) and checks the prediction
//! against simulation ([`sde`], [`mc`]).
//!
//! All numerics are generic over [`Real`]; the aliases below fix `f64`.

// `!(x > 0)` is the NaN-rejecting form used for every input check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynsys;
pub mod error;
pub mod flow;
pub mod linalg;
pub mod mc;
mod scalar;
pub mod sde;
pub mod theory;

pub use error::{Error, ErrorFamily, Result};
pub use scalar::Real;

pub type Matrix = linalg::Matrix<f64>;
pub type Domain = dynsys::Domain<f64>;
pub type Model = dynsys::VectorFieldModel<f64>;
pub type Spectral = dynsys::SpectralData<f64>;
pub type FlowResult = flow::FlowResult<f64>;
pub type UnstableCurve = flow::UnstableCurveData<f64>;
pub type HConstants = flow::HConstants<f64>;
pub type ExitSample = sde::ExitSample<f64>;
pub type LinearizedPath = sde::LinearizedPath<f64>;
pub type SdePath = sde::SdePath<f64>;
pub type ExitLawParams = theory::ExitLawParams<f64>;
pub type LimitLaw = theory::LimitLaw<f64>;
pub type ComparisonReport = mc::ComparisonReport;
