//! Deterministic dynamics: the flow `S^t`, boundary exits, the unstable
//! curve `γ` with its boundary hits `q±`, and the time shifts `h±`.

mod curve;
mod hconst;
mod integrator;

pub use curve::{boundary_hits, unstable_curve_point, CurveOptions, UnstableCurveData};
pub use hconst::{h_constants, HConstants, HGrid};
pub use integrator::{integrate_flow, integrate_until, EventOutcome, FlowOptions, FlowResult, StepControl};
pub(crate) use integrator::Stepper;
