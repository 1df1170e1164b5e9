use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dynsys::{SpectralData, VectorFieldModel};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sde::{simulate_exit, ExitSample, NoiseStream, SdeOptions, SideLabels};
use crate::theory::LimitLaw;

/// Side labels for a law's `q±` with ambiguity radius `diam(G)/4`.
pub fn labels_for<T: Real>(model: &VectorFieldModel<T>, law: &LimitLaw<T>) -> SideLabels<T> {
    SideLabels {
        q_plus: law.params.q_plus.clone(),
        q_minus: law.params.q_minus.clone(),
        ambiguity_radius: model.domain().diameter() / T::lit(4.0),
    }
}

/// `n` independent exits, trajectory `i` driven by `NoiseStream(seed, i)`.
///
/// Runs on the current rayon pool; the result is ordered by trajectory index
/// and does not depend on the number of worker threads. A path that fails
/// (non-finite state) becomes a flagged sample instead of aborting the batch.
#[allow(clippy::too_many_arguments)]
pub fn run_batch<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    law: &LimitLaw<T>,
    x0: &[T],
    eps: T,
    n: usize,
    seed: u64,
    opts: &SdeOptions<T>,
) -> Result<Vec<ExitSample<T>>> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x0.len() });
    }
    if !model.domain().contains_interior(x0) {
        return Err(Error::NotInterior);
    }
    let labels = labels_for(model, law);
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(seed, i);
            match simulate_exit(model, s, &labels, x0, eps, opts, &mut noise) {
                Ok(sample) => sample,
                Err(Error::NonFinite { t }) => ExitSample::failed(i, seed, eps, x0.len(), T::lit(t)),
                Err(_) => ExitSample::failed(i, seed, eps, x0.len(), T::nan()),
            }
        })
        .collect();
    Ok(samples)
}

/// CSV with header `traj,eps,tau,exit_x0..exit_x{d-1},side,capped`, rows in
/// trajectory order.
pub fn samples_csv<T: Real>(samples: &[ExitSample<T>]) -> String {
    let d = samples.first().map_or(0, |s| s.exit_point.len());
    let mut out = String::from("traj,eps,tau");
    for k in 0..d {
        let _ = write!(out, ",exit_x{k}");
    }
    out.push_str(",side,capped\n");
    let mut sorted: Vec<&ExitSample<T>> = samples.iter().collect();
    sorted.sort_by_key(|s| s.trajectory_index);
    for s in sorted {
        let _ = write!(out, "{},{},{}", s.trajectory_index, s.eps.to_f64_lossy(), s.tau.to_f64_lossy());
        for x in &s.exit_point {
            let _ = write!(out, ",{}", x.to_f64_lossy());
        }
        let _ = writeln!(out, ",{},{}", s.side, u8::from(s.capped()));
    }
    out
}
