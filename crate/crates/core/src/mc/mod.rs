//! Monte Carlo experiments: exit batches, comparison against the limit law,
//! ε-sweeps and coupled-path checks of the linearization.

mod batch;
mod ks;
mod lemmas;
mod report;
mod sweep;

pub use batch::{labels_for, run_batch, samples_csv};
pub use ks::{ks_band_99, ks_statistic};
pub use lemmas::{
    lemma_tests, CouplingReport, GronwallReport, LemmaOptions, LemmaReport, StableComponentReport,
    ThresholdGapReport,
};
pub use report::{
    compare_to_limit, concentration_fraction, empirical_quantile, CenteredStats, CompareOptions,
    ComparisonReport, Concentration,
};
pub use sweep::{convergence_sweep, sweep_csv, SWEEP_HEADER};
