use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::distance;
use crate::scalar::Real;
use crate::sde::{ExitSample, SampleStatus};
use crate::theory::{LimitLaw, Side};

use super::ks::{ks_band_99, ks_statistic};

/// Fraction of exited samples within `radius` of `q_side`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Concentration {
    pub radius: f64,
    pub fraction: f64,
}

/// Summary of the centered times `τ - ln(1/ε)/λ` of the side-labelled samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CenteredStats {
    pub mean: f64,
    pub median: f64,
    /// `(p, empirical quantile, theoretical mixture quantile)`.
    pub quantiles: Vec<(f64, f64, f64)>,
}

/// Empirical exit statistics against the limit law.
///
/// `n = n_used + n_capped + n_ambiguous`, where `n_capped` also counts the
/// `n_nonfinite` failed paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub eps: f64,
    pub n: usize,
    pub n_used: usize,
    pub n_capped: usize,
    pub n_nonfinite: usize,
    pub n_ambiguous: usize,
    pub n_plus: usize,
    pub n_minus: usize,
    pub side_fraction_plus: f64,
    pub side_fraction_minus: f64,
    pub ambiguous_fraction: f64,
    pub ks_plus: f64,
    pub ks_minus: f64,
    pub ks_band_plus: f64,
    pub ks_band_minus: f64,
    pub centered: CenteredStats,
    pub theory_median: f64,
    /// Empirical minus theoretical median of the centered time.
    pub median_error: f64,
    pub diameter: f64,
    pub concentration: Vec<Concentration>,
    /// Median distance from the exit point to the nearer of `q±`.
    pub median_exit_distance: f64,
}

impl ComparisonReport {
    /// Concentration fraction at the radius closest to `radius`.
    pub fn concentration_at(&self, radius: f64) -> Option<f64> {
        self.concentration
            .iter()
            .min_by(|a, b| (a.radius - radius).abs().total_cmp(&(b.radius - radius).abs()))
            .map(|c| c.fraction)
    }
}

#[derive(Clone, Debug)]
pub struct CompareOptions {
    /// `diam(G)`; concentration radii are multiples of it.
    pub diameter: f64,
    pub radius_fractions: Vec<f64>,
    pub min_per_side: usize,
}

impl CompareOptions {
    pub fn new(diameter: f64) -> Self {
        Self { diameter, radius_fractions: vec![0.2, 0.1, 0.05], min_per_side: 100 }
    }
}

const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn nearest_distance<T: Real>(x: &[T], law: &LimitLaw<T>) -> f64 {
    let p = &law.params;
    distance(x, &p.q_plus).min(distance(x, &p.q_minus)).to_f64_lossy()
}

/// Fraction of exited samples whose exit point is within `radius` of `q±`.
pub fn concentration_fraction<T: Real>(samples: &[ExitSample<T>], law: &LimitLaw<T>, radius: f64) -> f64 {
    let exited: Vec<f64> = samples
        .iter()
        .filter(|s| s.status == SampleStatus::Exited)
        .map(|s| nearest_distance(&s.exit_point, law))
        .collect();
    if exited.is_empty() {
        return f64::NAN;
    }
    exited.iter().filter(|&&d| d <= radius).count() as f64 / exited.len() as f64
}

/// Empirical quantile by linear interpolation of the order statistics.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

fn mixture_quantile<T: Real>(law: &LimitLaw<T>, p: f64) -> f64 {
    let (a, b) = (law.quantile(Side::Plus, T::lit(p)), law.quantile(Side::Minus, T::lit(p)));
    let (mut lo, mut hi) = (a.min(b).to_f64_lossy(), a.max(b).to_f64_lossy());
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if law.mixture_cdf(T::lit(mid)).to_f64_lossy() < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Side-conditional one-sample KS distances of the centered times against
/// `μ_{h±,σ}`, side balance, and exit-point concentration.
pub fn compare_to_limit<T: Real>(
    samples: &[ExitSample<T>],
    law: &LimitLaw<T>,
    opts: &CompareOptions,
) -> Result<ComparisonReport> {
    let lambda = law.params.lambda;
    let n = samples.len();
    let n_nonfinite = samples.iter().filter(|s| s.status == SampleStatus::NonFinite).count();
    let n_capped = samples.iter().filter(|s| s.status != SampleStatus::Exited).count();
    let exited: Vec<&ExitSample<T>> = samples.iter().filter(|s| s.status == SampleStatus::Exited).collect();
    let centered = |side: i8| -> Vec<f64> {
        exited.iter().filter(|s| s.side == side).map(|s| s.centered_time(lambda).to_f64_lossy()).collect()
    };
    let plus = centered(1);
    let minus = centered(-1);
    let n_ambiguous = exited.len() - plus.len() - minus.len();
    for (name, got) in [("plus", plus.len()), ("minus", minus.len())] {
        if got < opts.min_per_side {
            return Err(Error::TooFewSamples { side: name, got, need: opts.min_per_side });
        }
    }
    let ks_plus = ks_statistic(&plus, |t| law.cdf(Side::Plus, T::lit(t)).to_f64_lossy());
    let ks_minus = ks_statistic(&minus, |t| law.cdf(Side::Minus, T::lit(t)).to_f64_lossy());

    let mut all: Vec<f64> = plus.iter().chain(&minus).copied().collect();
    all.sort_by(f64::total_cmp);
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let median = empirical_quantile(&all, 0.5);
    let theory_median = law.mixture_median().to_f64_lossy();
    let quantiles = QUANTILE_LEVELS
        .iter()
        .map(|&p| (p, empirical_quantile(&all, p), mixture_quantile(law, p)))
        .collect();

    let mut dist: Vec<f64> = exited.iter().map(|s| nearest_distance(&s.exit_point, law)).collect();
    dist.sort_by(f64::total_cmp);
    let concentration = opts
        .radius_fractions
        .iter()
        .map(|&f| {
            let radius = f * opts.diameter;
            let fraction = dist.iter().filter(|&&d| d <= radius).count() as f64 / dist.len() as f64;
            Concentration { radius, fraction }
        })
        .collect();

    let n_exited = exited.len() as f64;
    Ok(ComparisonReport {
        eps: samples.first().map_or(f64::NAN, |s| s.eps.to_f64_lossy()),
        n,
        n_used: plus.len() + minus.len(),
        n_capped,
        n_nonfinite,
        n_ambiguous,
        n_plus: plus.len(),
        n_minus: minus.len(),
        side_fraction_plus: plus.len() as f64 / n_exited,
        side_fraction_minus: minus.len() as f64 / n_exited,
        ambiguous_fraction: n_ambiguous as f64 / n_exited,
        ks_plus,
        ks_minus,
        ks_band_plus: ks_band_99(plus.len()),
        ks_band_minus: ks_band_99(minus.len()),
        centered: CenteredStats { mean, median, quantiles },
        theory_median,
        median_error: median - theory_median,
        diameter: opts.diameter,
        concentration,
        median_exit_distance: empirical_quantile(&dist, 0.5),
    })
}
