use serde::Serialize;

use crate::dynsys::{Domain, SpectralData, VectorField, VectorFieldModel};
use crate::error::{Error, Result};
use crate::flow::UnstableCurveData;
use crate::linalg::distance;
use crate::scalar::Real;

use super::noise::NoiseStream;

/// Labels exit points by the nearest boundary hit of the unstable curve.
#[derive(Clone, Debug, Serialize)]
pub struct SideLabels<T> {
    pub q_plus: Vec<T>,
    pub q_minus: Vec<T>,
    /// Exits farther than this from both `q±` are ambiguous (side 0).
    pub ambiguity_radius: T,
}

impl<T: Real> SideLabels<T> {
    /// Ambiguity radius `diam(G)/4`.
    pub fn from_curve(curve: &UnstableCurveData<T>, domain: &Domain<T>) -> Self {
        Self {
            q_plus: curve.q_plus.clone(),
            q_minus: curve.q_minus.clone(),
            ambiguity_radius: domain.diameter() / T::lit(4.0),
        }
    }

    pub fn classify(&self, x: &[T]) -> i8 {
        let dp = distance(x, &self.q_plus);
        let dm = distance(x, &self.q_minus);
        let (side, d) = if dp <= dm { (1, dp) } else { (-1, dm) };
        if d > self.ambiguity_radius {
            0
        } else {
            side
        }
    }

    pub fn target(&self, side: i8) -> Option<&[T]> {
        match side {
            1 => Some(&self.q_plus),
            -1 => Some(&self.q_minus),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SdeOptions<T> {
    /// Euler–Maruyama step; default `min(1e-3, 1e-2/λ)`.
    pub h: Option<T>,
    /// Give-up time; default `4·ln(1/ε)/λ + 50/λ`.
    pub t_cap: Option<T>,
}

impl<T: Real> Default for SdeOptions<T> {
    fn default() -> Self {
        Self { h: None, t_cap: None }
    }
}

impl<T: Real> SdeOptions<T> {
    pub fn with_step(h: T) -> Self {
        Self { h: Some(h), t_cap: None }
    }

    pub fn step(&self, s: &SpectralData<T>) -> T {
        self.h.unwrap_or_else(|| T::lit(1e-3).min(T::lit(1e-2) / s.lambda))
    }

    pub fn cap(&self, s: &SpectralData<T>, eps: T) -> T {
        self.t_cap.unwrap_or_else(|| {
            if eps > T::zero() {
                (T::lit(4.0) * (T::one() / eps).ln() + T::lit(50.0)) / s.lambda
            } else {
                T::lit(100.0) / s.lambda
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStatus {
    Exited,
    /// No exit before `t_cap`; `tau` holds `t_cap`.
    Capped,
    NonFinite,
}

/// One Monte Carlo exit record `(τ_ε, H_ε)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitSample<T> {
    pub trajectory_index: u64,
    pub seed: u64,
    pub eps: T,
    pub tau: T,
    pub exit_point: Vec<T>,
    /// `+1`/`-1` for the nearer of `q±`, `0` when ambiguous or not exited.
    pub side: i8,
    pub status: SampleStatus,
}

impl<T: Real> ExitSample<T> {
    pub fn capped(&self) -> bool {
        self.status != SampleStatus::Exited
    }

    /// `τ - ln(1/ε)/λ`.
    pub fn centered_time(&self, lambda: T) -> T {
        self.tau - (T::one() / self.eps).ln() / lambda
    }

    pub fn failed(index: u64, seed: u64, eps: T, dim: usize, t: T) -> Self {
        Self {
            trajectory_index: index,
            seed,
            eps,
            tau: t,
            exit_point: vec![T::nan(); dim],
            side: 0,
            status: SampleStatus::NonFinite,
        }
    }
}

/// Euler–Maruyama step `x ← x + h·b(x) + ε·ΔW`, drawing `d` normals per step.
pub(crate) struct EmKernel<'a, T: Real> {
    field: &'a dyn VectorField<T>,
    pub(crate) h: T,
    sqrt_h: T,
    eps: T,
    bx: Vec<T>,
    pub(crate) dw: Vec<T>,
}

impl<'a, T: Real> EmKernel<'a, T> {
    pub(crate) fn new(field: &'a dyn VectorField<T>, h: T, eps: T) -> Self {
        let d = field.dim();
        Self { field, h, sqrt_h: h.sqrt(), eps, bx: vec![T::zero(); d], dw: vec![T::zero(); d] }
    }

    #[inline]
    pub(crate) fn step(&mut self, x: &[T], out: &mut [T], noise: &mut NoiseStream) {
        self.field.eval(x, &mut self.bx);
        noise.fill_increments(self.sqrt_h, &mut self.dw);
        for i in 0..x.len() {
            out[i] = x[i] + self.h * self.bx[i] + self.eps * self.dw[i];
        }
    }
}

/// Crossing of `∂G` on the segment `[a, b]` (`g(a) < 0 <= g(b)`), located by
/// bisection along the segment. Returns the fraction `θ` and the point.
pub(crate) fn segment_crossing<T: Real>(domain: &Domain<T>, a: &[T], b: &[T]) -> (T, Vec<T>) {
    let (mut lo, mut hi) = (T::zero(), T::one());
    let mut p = b.to_vec();
    let at = |th: T, p: &mut Vec<T>| {
        for i in 0..a.len() {
            p[i] = a[i] + th * (b[i] - a[i]);
        }
    };
    for _ in 0..60 {
        let mid = (lo + hi) / T::lit(2.0);
        at(mid, &mut p);
        if domain.g(&p) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi, &mut p);
    (hi, p)
}

/// Simulate `dX = b(X)dt + ε dW` from `x0` until the first exit from `G`.
///
/// The crossing step is resolved by locating `∂G` on the straight segment
/// between the last two Euler states. A run that reaches `t_cap` is returned
/// as a [`SampleStatus::Capped`] sample, not an error.
pub fn simulate_exit<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    labels: &SideLabels<T>,
    x0: &[T],
    eps: T,
    opts: &SdeOptions<T>,
    noise: &mut NoiseStream,
) -> Result<ExitSample<T>> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    if !(eps >= T::zero()) {
        return Err(Error::InvalidInput("eps must be non-negative".into()));
    }
    let domain = model.domain();
    if !domain.contains_interior(x0) {
        return Err(Error::NotInterior);
    }
    let h = opts.step(s);
    let t_cap = opts.cap(s, eps);
    let n_cap = (t_cap / h).ceil().to_usize().unwrap_or(usize::MAX);
    let mut kernel = EmKernel::new(model.field().as_ref(), h, eps);
    let mut x = x0.to_vec();
    let mut xn = vec![T::zero(); d];
    for n in 0..n_cap {
        kernel.step(&x, &mut xn, noise);
        if !xn.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t: (T::lit(n as f64 + 1.0) * h).to_f64_lossy() });
        }
        if domain.g(&xn) >= T::zero() {
            let (theta, p) = segment_crossing(domain, &x, &xn);
            let tau = (T::lit(n as f64) + theta) * h;
            let side = labels.classify(&p);
            return Ok(ExitSample {
                trajectory_index: noise.trajectory_index(),
                seed: noise.seed(),
                eps,
                tau,
                exit_point: p,
                side,
                status: SampleStatus::Exited,
            });
        }
        std::mem::swap(&mut x, &mut xn);
    }
    Ok(ExitSample {
        trajectory_index: noise.trajectory_index(),
        seed: noise.seed(),
        eps,
        tau: t_cap,
        exit_point: x,
        side: 0,
        status: SampleStatus::Capped,
    })
}

/// A stored Euler–Maruyama path on the uniform grid `t_n = n·h`.
#[derive(Clone, Debug)]
pub struct SdePath<T> {
    pub h: T,
    dim: usize,
    states: Vec<T>,
    /// Whether the path was stopped at an exit from `G`.
    pub stopped: bool,
    pub tau: Option<T>,
    pub exit_point: Option<Vec<T>>,
}

impl<T: Real> SdePath<T> {
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, i: usize) -> T {
        T::lit(i as f64) * self.h
    }

    pub fn state(&self, i: usize) -> &[T] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    /// Linear interpolation on the grid; `None` past the last stored state.
    pub fn at(&self, t: T) -> Option<Vec<T>> {
        interpolate_grid(&self.states, self.dim, self.h, t)
    }
}

pub(crate) fn interpolate_grid<T: Real>(data: &[T], dim: usize, h: T, t: T) -> Option<Vec<T>> {
    let n = data.len() / dim;
    if n == 0 || t < T::zero() {
        return None;
    }
    let pos = t / h;
    let i = pos.floor().to_usize()?;
    if i + 1 >= n {
        return (i + 1 == n && pos == pos.floor()).then(|| data[i * dim..(i + 1) * dim].to_vec());
    }
    let th = pos - T::lit(i as f64);
    Some((0..dim).map(|k| data[i * dim + k] + th * (data[(i + 1) * dim + k] - data[i * dim + k])).collect())
}

/// Euler–Maruyama path up to `t_end`, optionally stopped at the exit from `G`.
///
/// Consumes the noise stream exactly like [`simulate_exit`], so runs with the
/// same `(seed, trajectory_index)` see the same Wiener increments.
pub fn simulate_path<T: Real>(
    model: &VectorFieldModel<T>,
    x0: &[T],
    eps: T,
    h: T,
    noise: &mut NoiseStream,
    t_end: T,
    stop_at_exit: bool,
) -> Result<SdePath<T>> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let steps = (t_end / h).ceil().to_usize().unwrap_or(0);
    let mut states = Vec::with_capacity((steps + 1) * d);
    states.extend_from_slice(x0);
    let mut kernel = EmKernel::new(model.field().as_ref(), h, eps);
    let mut x = x0.to_vec();
    let mut xn = vec![T::zero(); d];
    let domain = model.domain();
    for n in 0..steps {
        kernel.step(&x, &mut xn, noise);
        if !xn.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t: (T::lit(n as f64 + 1.0) * h).to_f64_lossy() });
        }
        if stop_at_exit && domain.g(&xn) >= T::zero() {
            let (theta, p) = segment_crossing(domain, &x, &xn);
            return Ok(SdePath {
                h,
                dim: d,
                states,
                stopped: true,
                tau: Some((T::lit(n as f64) + theta) * h),
                exit_point: Some(p),
            });
        }
        states.extend_from_slice(&xn);
        std::mem::swap(&mut x, &mut xn);
    }
    Ok(SdePath { h, dim: d, states, stopped: false, tau: None, exit_point: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{registry, spectral_data, SpectralOptions};
    use std::sync::Arc;

    fn linear() -> (VectorFieldModel<f64>, SpectralData<f64>, SideLabels<f64>) {
        let f = registry::linear_saddle::<f64>(1.0, 1.0).unwrap();
        let model = VectorFieldModel::with_default_enclosure(Arc::new(f), Domain::ball(2, 1.0).unwrap()).unwrap();
        let s = spectral_data(&model, SpectralOptions::default()).unwrap();
        let labels = SideLabels { q_plus: vec![1.0, 0.0], q_minus: vec![-1.0, 0.0], ambiguity_radius: 0.5 };
        (model, s, labels)
    }

    #[test]
    fn deterministic_exit_from_curve_point() {
        let (model, s, labels) = linear();
        let opts = SdeOptions::with_step(1e-5);
        let mut noise = NoiseStream::new(0, 0);
        let e = simulate_exit(&model, &s, &labels, &[0.1, 0.0], 0.0, &opts, &mut noise).unwrap();
        // Euler grows by (1 + h) per step: τ = ln 10 · h / ln(1 + h).
        assert!((e.tau - 10f64.ln()).abs() < 1e-4, "{}", e.tau);
        assert!(distance(&e.exit_point, &[1.0, 0.0]) < 1e-12);
        assert_eq!(e.side, 1);
        assert_eq!(e.status, SampleStatus::Exited);
    }

    #[test]
    fn identical_streams_identical_samples() {
        let (model, s, labels) = linear();
        let run = || {
            let mut noise = NoiseStream::new(7, 3);
            simulate_exit(&model, &s, &labels, &[0.0, 0.0], 1e-3, &SdeOptions::default(), &mut noise).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(a.tau.to_bits(), b.tau.to_bits());
    }

    #[test]
    fn cap_is_reported_not_fatal() {
        let (model, s, labels) = linear();
        let opts = SdeOptions { h: Some(1e-3), t_cap: Some(0.5) };
        let mut noise = NoiseStream::new(1, 0);
        let e = simulate_exit(&model, &s, &labels, &[0.0, 0.0], 1e-4, &opts, &mut noise).unwrap();
        assert_eq!(e.status, SampleStatus::Capped);
        assert!(e.capped());
        assert_eq!(e.tau, 0.5);
    }

    #[test]
    fn exit_point_on_boundary() {
        let (model, s, labels) = linear();
        for i in 0..20 {
            let mut noise = NoiseStream::new(5, i);
            let e = simulate_exit(&model, &s, &labels, &[0.0, 0.0], 1e-2, &SdeOptions::default(), &mut noise).unwrap();
            assert!(model.domain().g(&e.exit_point).abs() <= 1e-3);
        }
    }

    /// Exit time of the Euler scheme driven by explicit increments.
    fn exit_with(model: &VectorFieldModel<f64>, eps: f64, h: f64, incs: &[[f64; 2]]) -> Option<f64> {
        let mut x = vec![0.0, 0.0];
        let mut xn = vec![0.0; 2];
        let mut b = vec![0.0; 2];
        for (n, dw) in incs.iter().enumerate() {
            model.b(&x, &mut b);
            for i in 0..2 {
                xn[i] = x[i] + h * b[i] + eps * dw[i];
            }
            if model.domain().g(&xn) >= 0.0 {
                let (theta, _) = segment_crossing(model.domain(), &x, &xn);
                return Some((n as f64 + theta) * h);
            }
            std::mem::swap(&mut x, &mut xn);
        }
        None
    }

    #[test]
    fn strong_order_under_step_halving() {
        let (model, _, _) = linear();
        let eps = 1e-2;
        let h_fine: f64 = 5e-4;
        let steps = 40_000;
        let mut total = [0.0; 2];
        let seeds = 50;
        for seed in 0..seeds {
            let mut noise = NoiseStream::new(99, seed);
            let fine: Vec<[f64; 2]> = (0..steps)
                .map(|_| {
                    let mut w = [0.0; 2];
                    noise.fill_increments(h_fine.sqrt(), &mut w);
                    w
                })
                .collect();
            let mid: Vec<[f64; 2]> = fine.chunks(2).map(|c| [c[0][0] + c[1][0], c[0][1] + c[1][1]]).collect();
            let coarse: Vec<[f64; 2]> = mid.chunks(2).map(|c| [c[0][0] + c[1][0], c[0][1] + c[1][1]]).collect();
            let t_fine = exit_with(&model, eps, h_fine, &fine).unwrap();
            let t_mid = exit_with(&model, eps, 2.0 * h_fine, &mid).unwrap();
            let t_coarse = exit_with(&model, eps, 4.0 * h_fine, &coarse).unwrap();
            total[0] += (t_coarse - t_mid).abs();
            total[1] += (t_mid - t_fine).abs();
        }
        for (k, h) in [(0, 4.0 * h_fine), (1, 2.0 * h_fine)] {
            let mean = total[k] / seeds as f64;
            assert!(mean <= h.sqrt(), "h={h}: mean |Δτ| = {mean}");
        }
    }
}
