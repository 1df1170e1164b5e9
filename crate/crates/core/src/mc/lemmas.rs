use rayon::prelude::*;
use serde::Serialize;

use crate::dynsys::{SpectralData, VectorFieldModel};
use crate::error::{Error, Result};
use crate::linalg::{distance, dot, norm};
use crate::scalar::Real;
use crate::sde::{simulate_linearized_on, simulate_path, tau_linear_threshold, NoiseStream, ReferenceOrbit, SdeOptions};
use crate::theory::{default_t_read, estimate_n};

use super::report::empirical_quantile;

#[derive(Clone, Copy, Debug)]
pub struct LemmaOptions<T> {
    pub eps_coarse: T,
    pub eps_fine: T,
    /// Largest threshold `δ₀`; the δ² test also uses `δ₀/2` and `δ₀/4`.
    pub delta: T,
    pub n: usize,
    pub seed: u64,
    pub sde: SdeOptions<T>,
    /// Read-out time for `N̂` past the threshold time; default `15/gap`.
    pub t_read: Option<T>,
    pub gronwall_seeds: usize,
    pub gronwall_eps: T,
    pub gronwall_horizon: T,
}

impl<T: Real> Default for LemmaOptions<T> {
    fn default() -> Self {
        Self {
            eps_coarse: T::lit(1e-2),
            eps_fine: T::lit(1e-4),
            delta: T::lit(0.1),
            n: 2000,
            seed: 0,
            sde: SdeOptions::default(),
            t_read: None,
            gronwall_seeds: 100,
            gronwall_eps: T::lit(1e-2),
            gronwall_horizon: T::lit(5.0),
        }
    }
}

/// Threshold time of the linearization against its Gaussian prediction.
#[derive(Clone, Debug, Serialize)]
pub struct ThresholdGapReport {
    pub eps: [f64; 2],
    /// Sample mean of `τ(X̃_ε, δ, v) - ln(δ/(ε|N̂|))/λ`.
    pub mean_gap: [f64; 2],
    pub mean_abs_gap: [f64; 2],
    pub used: [usize; 2],
    pub pass: bool,
}

/// Size of the stable component `ε|Π_L Y(τ)|` at the threshold time.
#[derive(Clone, Debug, Serialize)]
pub struct StableComponentReport {
    pub eps: [f64; 2],
    pub median: [f64; 2],
    /// Fitted exponent in `median ∝ ε^β`.
    pub beta: f64,
    pub pass: bool,
}

/// Coupled discrepancy `|X_ε(τ_δ) - X̃_ε(τ_δ)|`.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingReport {
    pub eps: f64,
    pub deltas: [f64; 3],
    pub p90: [f64; 3],
    /// `p90(δ/2)/p90(δ)`; `δ²` scaling gives 1/4.
    pub ratios: [f64; 2],
    /// `p90(δ₀)/δ₀²`.
    pub constant: f64,
    /// Whether `p90(δ)/δ² <= 2·constant` at the smaller δ.
    pub constant_band_ok: bool,
    /// Discrepancy is at rounding level (linear fields).
    pub exact: bool,
    pub used: usize,
    pub pass: bool,
}

/// Pathwise bound `|S^t_{ε,W} x - S^t x| <= 1.1·ε·W*(t)·e^{Mt}`.
#[derive(Clone, Debug, Serialize)]
pub struct GronwallReport {
    pub seeds: usize,
    pub eps: f64,
    pub horizon: f64,
    pub lipschitz: f64,
    pub violations: usize,
    /// Largest observed `|difference| / (ε W* e^{Mt})`.
    pub worst_ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    pub threshold_gap: ThresholdGapReport,
    pub stable_component: StableComponentReport,
    pub coupling: CouplingReport,
    pub gronwall: GronwallReport,
    pub pass: bool,
}

struct LinearStats {
    gap: Option<f64>,
    stable: Option<f64>,
}

fn linear_horizon<T: Real>(s: &SpectralData<T>, eps: T, delta: T, opts: &LemmaOptions<T>) -> T {
    let t_read = opts.t_read.unwrap_or_else(|| default_t_read(s));
    (delta / eps).ln() / s.lambda + t_read
}

fn linear_stats<T: Real>(
    orbit: &ReferenceOrbit<T>,
    s: &SpectralData<T>,
    eps: T,
    opts: &LemmaOptions<T>,
    index: u64,
) -> Result<LinearStats> {
    let mut noise = NoiseStream::new(opts.seed, index);
    let path = simulate_linearized_on(orbit, s, eps, &mut noise)?;
    let t_end = path.t_end();
    let tau = match tau_linear_threshold(&path, s, eps, opts.delta) {
        Ok(t) => t,
        Err(Error::NoCrossing { .. }) => return Ok(LinearStats { gap: None, stable: None }),
        Err(e) => return Err(e),
    };
    let n_hat = estimate_n(&path, s, t_end);
    let rate = path.growth_rate();
    let gap = tau - (opts.delta / (eps * n_hat.abs())).ln() / rate;
    let y = path.y_at(tau).expect("threshold time lies on the path");
    let c = dot(&s.ell, &y);
    let stable: Vec<T> = y.iter().zip(&s.v).map(|(&yi, &vi)| yi - c * vi).collect();
    Ok(LinearStats { gap: Some(gap.to_f64_lossy()), stable: Some((eps * norm(&stable)).to_f64_lossy()) })
}

fn coupled_discrepancy<T: Real>(
    model: &VectorFieldModel<T>,
    orbit: &ReferenceOrbit<T>,
    s: &SpectralData<T>,
    x0: &[T],
    deltas: &[T; 3],
    opts: &LemmaOptions<T>,
    index: u64,
) -> Result<Option<[f64; 3]>> {
    let eps = opts.eps_fine;
    let h = orbit.step();
    let mut noise = NoiseStream::new(opts.seed, index);
    let lin = simulate_linearized_on(orbit, s, eps, &mut noise)?;
    let mut taus = [T::zero(); 3];
    for (k, &d) in deltas.iter().enumerate() {
        match tau_linear_threshold(&lin, s, eps, d) {
            Ok(t) => taus[k] = t,
            Err(Error::NoCrossing { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let t_max = taus.iter().fold(T::zero(), |a, &b| a.max(b)) + h;
    let mut noise = NoiseStream::new(opts.seed, index);
    let full = simulate_path(model, x0, eps, h, &mut noise, t_max, false)?;
    let mut out = [0.0; 3];
    for k in 0..3 {
        let a = full.at(taus[k]).expect("path covers τ_δ");
        let b = lin.x_tilde_at(taus[k]).expect("path covers τ_δ");
        out[k] = distance(&a, &b).to_f64_lossy();
    }
    Ok(Some(out))
}

fn gronwall_check<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    x0: &[T],
    lipschitz: T,
    opts: &LemmaOptions<T>,
    index: u64,
) -> Result<(bool, f64)> {
    let h = opts.sde.step(s);
    let eps = opts.gronwall_eps;
    let mut noise = NoiseStream::new(opts.seed, index);
    let noisy = simulate_path(model, x0, eps, h, &mut noise, opts.gronwall_horizon, true)?;
    let mut quiet = NoiseStream::new(opts.seed, index);
    let det = simulate_path(model, x0, T::zero(), h, &mut quiet, opts.gronwall_horizon, false)?;
    // Recreate W from the same increments the noisy path consumed.
    let mut replay = NoiseStream::new(opts.seed, index);
    let d = model.dim();
    let mut w = vec![T::zero(); d];
    let mut dw = vec![T::zero(); d];
    let mut w_sup = T::zero();
    let (mut ok, mut worst) = (true, 0.0f64);
    let sqrt_h = h.sqrt();
    for k in 0..noisy.len().min(det.len()) {
        if k > 0 {
            replay.fill_increments(sqrt_h, &mut dw);
            for i in 0..d {
                w[i] = w[i] + dw[i];
            }
            w_sup = w_sup.max(norm(&w));
        }
        let diff = distance(noisy.state(k), det.state(k)).to_f64_lossy();
        let bound = (eps * w_sup * (lipschitz * noisy.time(k)).exp()).to_f64_lossy();
        if diff > 1.1 * bound + 1e-14 {
            ok = false;
        }
        if bound > 0.0 {
            worst = worst.max(diff / bound);
        }
    }
    Ok((ok, worst))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    empirical_quantile(&v, 0.5)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Coupled-path checks of the linearization estimates.
///
/// * threshold gap: mean of `τ(X̃_ε, δ, v) - ln(δ/(ε|N̂|))/λ` shrinks from
///   `eps_coarse` to `eps_fine`; `λ` is the per-step growth rate of the
///   discretized linearization, so the gap isolates the `ε` dependence;
/// * stable component: median `ε|Π_L Y(τ)|` decays like `ε^β` with `β > 0`;
/// * coupling: the 90th percentile of `|X_ε(τ_δ) - X̃_ε(τ_δ)|` at `ε_fine`
///   shrinks by a factor in `[1/8, 1/2]` per halving of `δ`;
/// * Gronwall: the pathwise bound holds on `gronwall_seeds` paths.
pub fn lemma_tests<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    x0: &[T],
    opts: &LemmaOptions<T>,
) -> Result<LemmaReport> {
    if opts.n == 0 {
        return Err(Error::InvalidInput("n must be at least 1".into()));
    }
    if !(opts.eps_fine > T::zero() && opts.eps_fine < opts.eps_coarse) {
        return Err(Error::InvalidInput("need 0 < eps_fine < eps_coarse".into()));
    }
    if !(opts.delta > T::zero()) {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    let eps = [opts.eps_coarse, opts.eps_fine];
    let mut gaps: [Vec<f64>; 2] = Default::default();
    let mut stable: [Vec<f64>; 2] = Default::default();
    let h = opts.sde.step(s);
    for (k, &e) in eps.iter().enumerate() {
        let orbit = ReferenceOrbit::new(model, x0, h, linear_horizon(s, e, opts.delta, opts))?;
        let stats = (0..opts.n as u64)
            .into_par_iter()
            .map(|i| linear_stats(&orbit, s, e, opts, i))
            .collect::<Result<Vec<_>>>()?;
        gaps[k] = stats.iter().filter_map(|p| p.gap).collect();
        stable[k] = stats.iter().filter_map(|p| p.stable).collect();
    }
    let mean_gap = [mean(&gaps[0]), mean(&gaps[1])];
    let mean_abs = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
    let threshold_gap = ThresholdGapReport {
        eps: [eps[0].to_f64_lossy(), eps[1].to_f64_lossy()],
        mean_gap,
        mean_abs_gap: [mean_abs(&gaps[0]), mean_abs(&gaps[1])],
        used: [gaps[0].len(), gaps[1].len()],
        pass: mean_gap[1].abs() < mean_gap[0].abs(),
    };
    let med = [median(stable[0].clone()), median(stable[1].clone())];
    let beta = (med[0] / med[1]).ln() / (eps[0] / eps[1]).to_f64_lossy().ln();
    let stable_component = StableComponentReport {
        eps: threshold_gap.eps,
        median: med,
        beta,
        pass: beta > 0.0,
    };

    let two = T::lit(2.0);
    let deltas = [opts.delta, opts.delta / two, opts.delta / (two * two)];
    let orbit = ReferenceOrbit::new(model, x0, h, linear_horizon(s, opts.eps_fine, opts.delta, opts))?;
    let disc = (0..opts.n as u64)
        .into_par_iter()
        .map(|i| coupled_discrepancy(model, &orbit, s, x0, &deltas, opts, i))
        .collect::<Result<Vec<_>>>()?;
    let disc: Vec<[f64; 3]> = disc.into_iter().flatten().collect();
    let mut p90 = [0.0; 3];
    for (k, slot) in p90.iter_mut().enumerate() {
        let mut col: Vec<f64> = disc.iter().map(|r| r[k]).collect();
        col.sort_by(f64::total_cmp);
        *slot = empirical_quantile(&col, 0.9);
    }
    let d64 = deltas.map(|d| d.to_f64_lossy());
    let ratios = [p90[1] / p90[0], p90[2] / p90[1]];
    let constant = p90[0] / (d64[0] * d64[0]);
    let constant_band_ok = (1..3).all(|k| p90[k] / (d64[k] * d64[k]) <= 2.0 * constant);
    let exact = p90[0] <= 1e-9 * d64[0] * d64[0];
    let in_band = ratios.iter().all(|&r| (0.125..=0.5).contains(&r));
    let coupling = CouplingReport {
        eps: opts.eps_fine.to_f64_lossy(),
        deltas: d64,
        p90,
        ratios,
        constant,
        constant_band_ok,
        exact,
        used: disc.len(),
        pass: exact || in_band,
    };

    let lipschitz = model.lipschitz_estimate(41);
    let checks = (0..opts.gronwall_seeds as u64)
        .into_par_iter()
        .map(|i| gronwall_check(model, s, x0, lipschitz, opts, i))
        .collect::<Result<Vec<_>>>()?;
    let violations = checks.iter().filter(|c| !c.0).count();
    let gronwall = GronwallReport {
        seeds: opts.gronwall_seeds,
        eps: opts.gronwall_eps.to_f64_lossy(),
        horizon: opts.gronwall_horizon.to_f64_lossy(),
        lipschitz: lipschitz.to_f64_lossy(),
        violations,
        worst_ratio: checks.iter().map(|c| c.1).fold(0.0, f64::max),
        pass: violations == 0,
    };

    let pass = threshold_gap.pass && stable_component.pass && coupling.pass && gronwall.pass;
    Ok(LemmaReport { threshold_gap, stable_component, coupling, gronwall, pass })
}
