use rayon::prelude::*;
use serde::Serialize;

use crate::dynsys::{SpectralData, VectorFieldModel};
use crate::error::{Error, Result};
use crate::scalar::Real;

use super::curve::{unstable_curve_point, CurveOptions, UnstableCurveData};
use super::integrator::integrate_flow;

/// Time-shift constants `h± = lim_{δ→0} (ln δ/λ + t(±δ))`, where `t(±δ)`
/// is the travel time from `γ(±δ)` to `∂G`.
#[derive(Clone, Debug, Serialize)]
pub struct HConstants<T> {
    pub h_plus: T,
    pub h_minus: T,
    /// `(δ_k, a(δ_k))` with `a(δ) = ln δ/λ + t(δ)`.
    pub raw_plus: Vec<(T, T)>,
    pub raw_minus: Vec<(T, T)>,
    pub error_plus: T,
    pub error_minus: T,
    /// Largest of the two per-side estimates.
    pub extrapolation_error_estimate: T,
}

/// Geometric grid `δ_k = delta0·2^{-k}`, `k = 0..=levels`.
#[derive(Clone, Copy, Debug)]
pub struct HGrid<T> {
    pub delta0: T,
    pub levels: usize,
}

impl<T: Real> Default for HGrid<T> {
    fn default() -> Self {
        Self { delta0: T::lit(1e-2), levels: 6 }
    }
}

impl<T: Real> HGrid<T> {
    pub fn deltas(&self) -> Vec<T> {
        (0..=self.levels).map(|k| self.delta0 * T::lit(0.5f64.powi(k as i32))).collect()
    }
}

/// Differences below this are treated as converged and exempt from the decay check.
const NOISE_FLOOR: f64 = 1e-8;

/// Tabulate `a(δ_k)` on each branch and extrapolate with the linear error
/// model `a(δ) = h + c·δ + o(δ)`: `h ≈ 2a(δ_K) - a(δ_{K-1})`.
///
/// Curve points already sampled in `curve` are reused as starting points.
pub fn h_constants<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    curve: &UnstableCurveData<T>,
    grid: &HGrid<T>,
    opts: &CurveOptions<T>,
) -> Result<HConstants<T>> {
    if grid.levels < 1 || !(grid.delta0 > T::zero()) {
        return Err(Error::InvalidInput("h grid needs delta0 > 0 and at least two levels".into()));
    }
    let deltas = grid.deltas();
    let t_max = opts.t_max_lambda / s.lambda;
    let side = |sign: i8| -> Result<Vec<(T, T)>> {
        deltas
            .par_iter()
            .map(|&dk| {
                let signed = if sign > 0 { dk } else { -dk };
                let cached = curve
                    .gamma_samples
                    .iter()
                    .find(|(d, _)| (*d - signed).abs() <= T::lit(1e-12) * dk)
                    .map(|(_, p)| p.clone());
                let start = match cached {
                    Some(p) => p,
                    None => unstable_curve_point(model, s, dk, sign, opts)?,
                };
                let fr = integrate_flow(model, &start, t_max, &opts.flow)?;
                if !fr.exited() {
                    return Err(Error::NoExit { t_max: t_max.to_f64_lossy() });
                }
                Ok((dk, dk.ln() / s.lambda + fr.exit_time))
            })
            .collect()
    };
    let raw_plus = side(1)?;
    let raw_minus = side(-1)?;
    check_decay(&raw_plus)?;
    check_decay(&raw_minus)?;
    let (h_plus, error_plus) = richardson(&raw_plus);
    let (h_minus, error_minus) = richardson(&raw_minus);
    Ok(HConstants {
        h_plus,
        h_minus,
        raw_plus,
        raw_minus,
        error_plus,
        error_minus,
        extrapolation_error_estimate: error_plus.max(error_minus),
    })
}

fn richardson<T: Real>(table: &[(T, T)]) -> (T, T) {
    let n = table.len();
    let (a_last, a_prev) = (table[n - 1].1, table[n - 2].1);
    (T::lit(2.0) * a_last - a_prev, (a_last - a_prev).abs())
}

/// Successive differences must shrink; a growth beyond `4 × 1/2` means the
/// grid is outside the asymptotic regime.
fn check_decay<T: Real>(table: &[(T, T)]) -> Result<()> {
    let diffs: Vec<T> = table.windows(2).map(|w| w[1].1 - w[0].1).collect();
    for (k, w) in diffs.windows(2).enumerate() {
        let (prev, next) = (w[0].abs(), w[1].abs());
        if prev.to_f64_lossy() <= NOISE_FLOOR {
            continue;
        }
        let ratio = next / prev;
        if ratio > T::lit(2.0) {
            return Err(Error::NonmonotoneTable { index: k + 1, ratio: ratio.to_f64_lossy() });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_linear_term() {
        let table: Vec<(f64, f64)> = [0.04, 0.02, 0.01].iter().map(|&d| (d, 0.3 + 2.0 * d)).collect();
        let (h, err) = richardson(&table);
        assert!((h - 0.3).abs() < 1e-14);
        assert!((err - 0.02).abs() < 1e-14);
    }

    #[test]
    fn growing_differences_rejected() {
        let table = vec![(0.04, 0.0), (0.02, 0.01), (0.01, 0.05)];
        assert!(matches!(check_decay(&table), Err(Error::NonmonotoneTable { index: 1, .. })));
        let flat = vec![(0.04, 1.0), (0.02, 1.0), (0.01, 1.0 + 1e-12)];
        assert!(check_decay(&flat).is_ok());
    }
}
