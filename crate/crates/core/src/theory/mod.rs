//! Parameters and distributions of the limiting exit law.

mod law;
mod pipeline;
mod sigma;

pub use law::{limit_cdf, limit_density, sample_limit_law, ExitLawParams, LimitLaw, Side};
pub use pipeline::{analyze, Analysis, AnalysisOptions};
pub use sigma::{default_t_read, estimate_n, sigma_at_fixed_point, sigma_via_adjoint, AdjointOptions, SigmaEstimate};
