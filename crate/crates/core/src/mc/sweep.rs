use std::fmt::Write as _;

use crate::dynsys::{SpectralData, VectorFieldModel};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sde::SdeOptions;
use crate::theory::LimitLaw;

use super::batch::run_batch;
use super::report::{compare_to_limit, CompareOptions, ComparisonReport};

/// One [`ComparisonReport`] per `ε`, each batch using the same seed.
#[allow(clippy::too_many_arguments)]
pub fn convergence_sweep<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    law: &LimitLaw<T>,
    x0: &[T],
    eps_list: &[T],
    n: usize,
    seed: u64,
    opts: &SdeOptions<T>,
) -> Result<Vec<ComparisonReport>> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidInput(format!("sweep needs at least 3 eps values, got {}", eps_list.len())));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps_list must be strictly decreasing".into()));
    }
    let compare = CompareOptions::new(model.domain().diameter().to_f64_lossy());
    eps_list
        .iter()
        .map(|&eps| {
            let samples = run_batch(model, s, law, x0, eps, n, seed, opts)?;
            compare_to_limit(&samples, law, &compare)
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "eps,ks_plus,ks_minus,side_frac,conc_r01,median_err,n_capped";

/// Tidy CSV of a sweep. `conc_r01` is the fraction within `0.1·diam(G)` of
/// `q±`.
pub fn sweep_csv(rows: &[ComparisonReport]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.eps,
            r.ks_plus,
            r.ks_minus,
            r.side_fraction_plus,
            r.concentration_at(0.1 * r.diameter).unwrap_or(f64::NAN),
            r.median_error,
            r.n_capped
        );
    }
    out
}
