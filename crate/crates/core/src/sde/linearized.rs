use std::sync::Arc;

use crate::dynsys::{SpectralData, VectorFieldModel};
use crate::error::{Error, Result};
use crate::flow::Stepper;
use crate::linalg::{dot, Matrix};
use crate::scalar::Real;

use super::exit::interpolate_grid;
use super::noise::NoiseStream;

/// Solution of the equation in variations `dY = A(t)Y dt + dW`, `Y(0) = 0`,
/// with `A(t) = J(S^t x0)`, on the grid `t_n = n·h`.
///
/// Euler–Maruyama multiplies the leading mode by `ρ = 1 + hλ` per step, so
/// the path stores `Z_n = ρ^{-n} Y_n`, the discrete counterpart of
/// `e^{-λt} Y(t)`. This keeps long paths finite and makes `<ℓ, Z_n>` converge
/// to the per-path Gaussian limit without an `O(hλ²t)` growth-rate bias.
#[derive(Clone, Debug)]
pub struct LinearizedPath<T> {
    h: T,
    dim: usize,
    growth: T,
    eps: T,
    scaled: Vec<T>,
    reference: Arc<[T]>,
}

impl<T: Real> LinearizedPath<T> {
    /// Build a path from explicit `Y` states (row-major, `dim` per node).
    pub fn from_y_states(h: T, growth: T, eps: T, dim: usize, ys: &[T], reference: Vec<T>) -> Self {
        assert_eq!(ys.len() % dim, 0);
        assert_eq!(reference.len(), ys.len());
        let mut scaled = Vec::with_capacity(ys.len());
        let mut inv = T::one();
        for node in ys.chunks(dim) {
            scaled.extend(node.iter().map(|&y| y * inv));
            inv = inv / growth;
        }
        Self { h, dim, growth, eps, scaled, reference: reference.into() }
    }

    pub fn len(&self) -> usize {
        self.scaled.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> T {
        self.h
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn time(&self, i: usize) -> T {
        T::lit(i as f64) * self.h
    }

    pub fn t_end(&self) -> T {
        self.time(self.len().saturating_sub(1))
    }

    /// Per-unit-time growth rate of the leading mode, `ln(ρ)/h`.
    pub fn growth_rate(&self) -> T {
        self.growth.ln() / self.h
    }

    /// `Z_i = ρ^{-i} Y_i`.
    pub fn scaled(&self, i: usize) -> &[T] {
        &self.scaled[i * self.dim..(i + 1) * self.dim]
    }

    pub fn scaled_at(&self, t: T) -> Option<Vec<T>> {
        interpolate_grid(&self.scaled, self.dim, self.h, t)
    }

    pub fn y(&self, i: usize) -> Vec<T> {
        let f = self.growth.powi(i as i32);
        self.scaled(i).iter().map(|&z| z * f).collect()
    }

    /// `Y(t)` by linear interpolation between grid nodes.
    pub fn y_at(&self, t: T) -> Option<Vec<T>> {
        let pos = t / self.h;
        let i = pos.floor().to_usize()?;
        if i + 1 >= self.len() {
            return (i + 1 == self.len() && pos == pos.floor()).then(|| self.y(i));
        }
        let th = pos - T::lit(i as f64);
        let (a, b) = (self.y(i), self.y(i + 1));
        Some(a.iter().zip(&b).map(|(&p, &q)| p + th * (q - p)).collect())
    }

    /// `S^{t_i} x0`.
    pub fn reference(&self, i: usize) -> &[T] {
        &self.reference[i * self.dim..(i + 1) * self.dim]
    }

    pub fn reference_at(&self, t: T) -> Option<Vec<T>> {
        interpolate_grid(&self.reference, self.dim, self.h, t)
    }

    /// `X̃_ε(t_i) = S^{t_i} x0 + ε Y_i`.
    pub fn x_tilde(&self, i: usize) -> Vec<T> {
        self.reference(i).iter().zip(self.y(i)).map(|(&r, y)| r + self.eps * y).collect()
    }

    pub fn x_tilde_at(&self, t: T) -> Option<Vec<T>> {
        let r = self.reference_at(t)?;
        let y = self.y_at(t)?;
        Some(r.iter().zip(&y).map(|(&a, &b)| a + self.eps * b).collect())
    }
}

/// The deterministic part of the linearization: `S^{t_n} x0` by RK4 and
/// `A_n = J(S^{t_n} x0)` on the grid `t_n = n·h`.
///
/// It is the same for every noise realization, so batches compute it once and
/// share it through [`simulate_linearized_on`].
#[derive(Clone, Debug)]
pub struct ReferenceOrbit<T> {
    h: T,
    dim: usize,
    states: Arc<[T]>,
    jacobians: Vec<T>,
}

impl<T: Real> ReferenceOrbit<T> {
    pub fn new(model: &VectorFieldModel<T>, x0: &[T], h: T, t_end: T) -> Result<Self> {
        let d = model.dim();
        if x0.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
        }
        if !(h > T::zero()) {
            return Err(Error::InvalidInput("step must be positive".into()));
        }
        let steps = (t_end / h).ceil().to_usize().unwrap_or(0);
        let field = model.field().as_ref();
        let mut states = Vec::with_capacity((steps + 1) * d);
        let mut jacobians = Vec::with_capacity((steps + 1) * d * d);
        let mut x = x0.to_vec();
        let mut next = vec![T::zero(); d];
        let mut jac = Matrix::zeros(d, d);
        let mut stepper = Stepper::new(d);
        for n in 0..=steps {
            if n > 0 {
                stepper.rk4(field, &x, h, &mut next);
                if !next.iter().all(|v| v.is_finite()) {
                    return Err(Error::NonFinite { t: (T::lit(n as f64) * h).to_f64_lossy() });
                }
                if next != x {
                    std::mem::swap(&mut x, &mut next);
                    field.jacobian(&x, &mut jac);
                }
            } else {
                field.jacobian(&x, &mut jac);
            }
            states.extend_from_slice(&x);
            jacobians.extend_from_slice(jac.as_slice());
        }
        Ok(Self { h, dim: d, states: states.into(), jacobians })
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn step(&self) -> T {
        self.h
    }

    pub fn state(&self, n: usize) -> &[T] {
        &self.states[n * self.dim..(n + 1) * self.dim]
    }

    fn jacobian(&self, n: usize) -> &[T] {
        let dd = self.dim * self.dim;
        &self.jacobians[n * dd..(n + 1) * dd]
    }
}

/// Simulate the linearization `X̃_ε(t) = S^t x0 + ε Y(t)` up to `t_end`.
///
/// The reference orbit uses RK4 with step `h`; `Y` uses Euler–Maruyama with
/// the same noise consumption as [`super::simulate_exit`].
pub fn simulate_linearized<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    x0: &[T],
    eps: T,
    h: T,
    noise: &mut NoiseStream,
    t_end: T,
) -> Result<LinearizedPath<T>> {
    let orbit = ReferenceOrbit::new(model, x0, h, t_end)?;
    simulate_linearized_on(&orbit, s, eps, noise)
}

/// [`simulate_linearized`] over a precomputed reference orbit.
pub fn simulate_linearized_on<T: Real>(
    orbit: &ReferenceOrbit<T>,
    s: &SpectralData<T>,
    eps: T,
    noise: &mut NoiseStream,
) -> Result<LinearizedPath<T>> {
    let d = orbit.dim;
    let h = orbit.h;
    let growth = T::one() + h * s.lambda;
    let inv_growth = T::one() / growth;
    let sqrt_h = h.sqrt();
    let nodes = orbit.len();

    let mut scaled = Vec::with_capacity(nodes * d);
    let mut z = vec![T::zero(); d];
    let mut prev = vec![T::zero(); d];
    let mut dw = vec![T::zero(); d];
    let mut noise_weight = T::one();
    scaled.extend_from_slice(&z);
    for n in 0..nodes.saturating_sub(1) {
        let a = orbit.jacobian(n);
        noise.fill_increments(sqrt_h, &mut dw);
        prev.copy_from_slice(&z);
        for i in 0..d {
            let row = &a[i * d..(i + 1) * d];
            let az = row.iter().zip(&prev).fold(T::zero(), |acc, (&aij, &zj)| acc + aij * zj);
            z[i] = (prev[i] + h * az + noise_weight * dw[i]) * inv_growth;
        }
        noise_weight = noise_weight * inv_growth;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { t: (T::lit(n as f64 + 1.0) * h).to_f64_lossy() });
        }
        scaled.extend_from_slice(&z);
    }
    Ok(LinearizedPath { h, dim: d, growth, eps, scaled, reference: Arc::clone(&orbit.states) })
}

/// First time with `ε|<ℓ, Y(t)>| >= δ`, linearly interpolated inside the step.
pub fn tau_linear_threshold<T: Real>(
    path: &LinearizedPath<T>,
    s: &SpectralData<T>,
    eps: T,
    delta: T,
) -> Result<T> {
    if !(delta > T::zero() && eps > T::zero()) {
        return Err(Error::InvalidInput("need eps > 0 and delta > 0".into()));
    }
    let log_target = (delta / eps).ln();
    let log_growth = path.growth.ln();
    let level = |i: usize| -> T {
        // ε ρ^i |<ℓ, Z_i>| evaluated through logarithms.
        let c = dot(&s.ell, path.scaled(i)).abs();
        if c.is_zero() {
            T::zero()
        } else {
            (c.ln() + T::lit(i as f64) * log_growth - log_target).exp() * delta
        }
    };
    let mut prev = level(0);
    for i in 1..path.len() {
        let cur = level(i);
        if cur >= delta {
            let theta = if cur > prev { (delta - prev) / (cur - prev) } else { T::one() };
            return Ok((T::lit(i as f64 - 1.0) + theta) * path.h);
        }
        prev = cur;
    }
    Err(Error::NoCrossing { delta: delta.to_f64_lossy() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{registry, spectral_data, Domain, SpectralOptions};
    use std::sync::Arc;

    fn cubic() -> (VectorFieldModel<f64>, SpectralData<f64>) {
        let f = registry::cubic_saddle::<f64>(1.0, 1.0, 1.0).unwrap();
        let model = VectorFieldModel::with_default_enclosure(Arc::new(f), Domain::ball(2, 0.5).unwrap()).unwrap();
        let s = spectral_data(&model, SpectralOptions::default()).unwrap();
        (model, s)
    }

    fn surrogate(amplitude: f64, h: f64, n: usize) -> LinearizedPath<f64> {
        let growth = 1.0 + h;
        let mut ys = Vec::with_capacity(2 * n);
        for i in 0..n {
            ys.extend_from_slice(&[amplitude * (i as f64 * h).exp(), 0.0]);
        }
        LinearizedPath::from_y_states(h, growth, 0.0, 2, &ys, vec![0.0; 2 * n])
    }

    #[test]
    fn threshold_of_exponential_surrogate() {
        let (_, s) = cubic();
        let path = surrogate(1.0, 1e-3, 20_000);
        let tau = tau_linear_threshold(&path, &s, 1e-3, 0.1).unwrap();
        assert!((tau - 100f64.ln()).abs() < 1e-6, "{tau}");
        let path = surrogate(0.5, 1e-3, 20_000);
        let tau = tau_linear_threshold(&path, &s, 1e-3, 0.1).unwrap();
        assert!((tau - 5.298317).abs() < 1e-5, "{tau}");
        let short = surrogate(0.5, 1e-3, 100);
        assert!(matches!(tau_linear_threshold(&short, &s, 1e-3, 0.1), Err(Error::NoCrossing { .. })));
    }

    #[test]
    fn zero_noise_is_the_flow() {
        let (model, s) = cubic();
        let mut noise = NoiseStream::new(3, 1);
        let x0 = [0.0, 0.3];
        let path = simulate_linearized(&model, &s, &x0, 0.0, 1e-3, &mut noise, 3.0).unwrap();
        for i in [0, 1000, 3000] {
            let xt = path.x_tilde(i);
            assert_eq!(xt, path.reference(i).to_vec());
            let t = path.time(i);
            assert!((xt[1] - 0.3 * (-t).exp()).abs() < 1e-12);
        }
        assert_eq!(path.y(0), vec![0.0, 0.0]);
    }

    #[test]
    fn bit_identical_replays() {
        let (model, s) = cubic();
        let run = || {
            let mut noise = NoiseStream::new(7, 3);
            simulate_linearized(&model, &s, &[0.0, 0.0], 1e-3, 1e-3, &mut noise, 5.0).unwrap()
        };
        let (a, b) = (run(), run());
        for i in 0..a.len() {
            assert_eq!(a.scaled(i), b.scaled(i));
        }
    }
}
