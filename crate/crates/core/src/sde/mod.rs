//! Stochastic simulation of the perturbed flow and of its linearization.

mod exit;
mod linearized;
mod noise;

pub use exit::{simulate_exit, simulate_path, ExitSample, SampleStatus, SdeOptions, SdePath, SideLabels};
pub use linearized::{simulate_linearized, simulate_linearized_on, tau_linear_threshold, LinearizedPath, ReferenceOrbit};
pub use noise::NoiseStream;
