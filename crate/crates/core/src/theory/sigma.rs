use serde::Serialize;

use crate::dynsys::{SpectralData, VectorFieldModel};
use crate::error::{Error, Result};
use crate::flow::Stepper;
use crate::linalg::{dot, norm, Matrix};
use crate::scalar::Real;
use crate::sde::LinearizedPath;

#[derive(Clone, Copy, Debug)]
pub struct AdjointOptions<T> {
    /// Sweep length; default `30/μ` with `μ` the stable contraction rate.
    pub horizon: Option<T>,
    /// Accepted relative change of σ under horizon doubling.
    pub rtol: T,
    /// Grid step; default `min(0.01/λ, 0.01/‖A‖)`.
    pub step: Option<T>,
    /// `x0` counts as on the stable manifold if its orbit comes this close
    /// to the saddle (relative to `max(1, |x0|)`).
    pub stable_tol: T,
    /// Below this radius the orbit is replaced by the saddle itself.
    pub freeze_radius: T,
}

impl<T: Real> Default for AdjointOptions<T> {
    fn default() -> Self {
        Self {
            horizon: None,
            rtol: T::lit(1e-6),
            step: None,
            stable_tol: T::lit(1e-6),
            freeze_radius: T::lit(1e-10),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SigmaEstimate<T> {
    pub sigma: T,
    /// Simpson/Richardson estimate plus the horizon-doubling change.
    pub error_bar: T,
    pub horizon: T,
}

/// `σ = |ℓ|/√(2λ)`, the exact value when the start is the saddle itself.
///
/// Equals `(2λ)^{-1/2}` exactly when `|ℓ| = 1`, i.e. when `v` is orthogonal
/// to the other invariant subspace of `A`.
pub fn sigma_at_fixed_point<T: Real>(s: &SpectralData<T>) -> T {
    s.ell_norm() / (T::lit(2.0) * s.lambda).sqrt()
}

/// `σ(x0)` from the kernel of `N = ∫ k(r)·dW(r)`.
///
/// With `p(r) = e^{λr} k(r)`, `p` solves `dp/dr = -(A(r)ᵀ - λ)p` with
/// `p(∞) = ℓ`, `A(r) = J(S^r x0)`. One backward RK4 sweep from the horizon
/// gives `p` on the whole grid, and `σ² = ∫ e^{-2λr}|p(r)|² dr` by composite
/// Simpson with a Richardson correction. Once the orbit is within
/// `freeze_radius` of the saddle, `A(r) = J(0)` and `p ≡ ℓ`, so the tail past
/// the horizon is `e^{-2λT}|ℓ|²/(2λ)` exactly.
pub fn sigma_via_adjoint<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    x0: &[T],
    opts: &AdjointOptions<T>,
) -> Result<SigmaEstimate<T>> {
    let d = model.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let rate = s.mu.unwrap_or(if s.gap.is_finite() { s.gap } else { s.lambda });
    let horizon = opts.horizon.unwrap_or(T::lit(30.0) / rate);
    if !(horizon > T::zero()) {
        return Err(Error::InvalidInput("horizon must be positive".into()));
    }
    let a_norm = s.a.operator_norm().max(s.lambda);
    let step = opts.step.unwrap_or(T::lit(0.01) / a_norm);

    let (s1, e1) = sweep(model, s, x0, horizon, step, opts)?;
    let (s2, e2) = sweep(model, s, x0, horizon * T::lit(2.0), step, opts)?;
    let change = (s1 - s2).abs() / s2;
    if !(change <= opts.rtol) {
        return Err(Error::TailNotConverged { change: change.to_f64_lossy() });
    }
    Ok(SigmaEstimate { sigma: s2, error_bar: e1.max(e2) + (s1 - s2).abs(), horizon: horizon * T::lit(2.0) })
}

fn sweep<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    x0: &[T],
    horizon: T,
    step: T,
    opts: &AdjointOptions<T>,
) -> Result<(T, T)> {
    let d = model.dim();
    let field = model.field().as_ref();
    // n a multiple of 4 so that the 2h Simpson rule is also available.
    let mut n = (horizon / step).ceil().to_usize().unwrap_or(4).max(8);
    n += (4 - n % 4) % 4;
    let h = horizon / T::lit(n as f64);
    let half = h / T::lit(2.0);

    // Reference orbit on the half-step grid.
    let scale = T::one().max(norm(x0));
    let blowup = T::lit(10.0) * scale;
    let nodes = 2 * n + 1;
    let mut orbit = Vec::with_capacity(nodes * d);
    let mut x = x0.to_vec();
    let mut next = vec![T::zero(); d];
    let mut stepper = Stepper::new(d);
    let mut frozen_from = None;
    let (mut best, mut best_k) = (norm(&x), 0);
    for k in 0..nodes {
        if k > 0 {
            stepper.rk4(field, &x, half, &mut next);
            std::mem::swap(&mut x, &mut next);
        }
        let r = norm(&x);
        if !r.is_finite() || r > blowup {
            return Err(Error::NotOnStableManifold {
                residual: r.to_f64_lossy(),
                horizon: (T::lit(k as f64) * half).to_f64_lossy(),
            });
        }
        if r < best {
            best = r;
            best_k = k;
        }
        orbit.extend_from_slice(&x);
        if r <= opts.freeze_radius * scale {
            frozen_from = Some(k);
            break;
        }
    }
    let frozen_from = match frozen_from {
        Some(k) => k,
        None if best <= opts.stable_tol * scale => best_k,
        None => {
            return Err(Error::NotOnStableManifold {
                residual: best.to_f64_lossy(),
                horizon: horizon.to_f64_lossy(),
            })
        }
    };
    let jac_at = |k: usize, out: &mut Matrix<T>| {
        if k >= frozen_from {
            out.as_mut_slice().copy_from_slice(s.a.as_slice());
        } else {
            field.jacobian(&orbit[k * d..(k + 1) * d], out);
        }
    };

    // Backward sweep for p.
    let lambda = s.lambda;
    let mut jac = Matrix::zeros(d, d);
    let rhs = |jac: &Matrix<T>, p: &[T], out: &mut [T]| {
        jac.tr_mul_vec_into(p, out);
        for i in 0..d {
            out[i] = lambda * p[i] - out[i];
        }
    };
    let mut p = s.ell.clone();
    let mut integrand = vec![T::zero(); n + 1];
    let weight = |k: usize| (-T::lit(2.0) * lambda * h * T::lit(k as f64)).exp();
    integrand[n] = weight(n) * dot(&p, &p);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![T::zero(); d], vec![T::zero(); d], vec![T::zero(); d], vec![T::zero(); d]);
    let mut tmp = vec![T::zero(); d];
    for k in (1..=n).rev() {
        jac_at(2 * k, &mut jac);
        rhs(&jac, &p, &mut k1);
        jac_at(2 * k - 1, &mut jac);
        for i in 0..d {
            tmp[i] = p[i] - half * k1[i];
        }
        rhs(&jac, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = p[i] - half * k2[i];
        }
        rhs(&jac, &tmp, &mut k3);
        jac_at(2 * k - 2, &mut jac);
        for i in 0..d {
            tmp[i] = p[i] - h * k3[i];
        }
        rhs(&jac, &tmp, &mut k4);
        for i in 0..d {
            p[i] = p[i] - h / T::lit(6.0) * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::TailNotConverged { change: f64::INFINITY });
        }
        integrand[k - 1] = weight(k - 1) * dot(&p, &p);
    }

    let fine = simpson(&integrand, h);
    let coarse: Vec<T> = integrand.iter().step_by(2).copied().collect();
    let coarse = simpson(&coarse, h * T::lit(2.0));
    let correction = (fine - coarse) / T::lit(15.0);
    let tail = weight(n) * dot(&s.ell, &s.ell) / (T::lit(2.0) * lambda);
    let sigma2 = fine + correction + tail;
    let sigma = sigma2.sqrt();
    Ok((sigma, correction.abs() / (T::lit(2.0) * sigma)))
}

fn simpson<T: Real>(f: &[T], h: T) -> T {
    let n = f.len() - 1;
    debug_assert!(n.is_multiple_of(2));
    let mut acc = f[0] + f[n];
    for (i, &v) in f.iter().enumerate().take(n).skip(1) {
        acc = acc + if i % 2 == 1 { T::lit(4.0) * v } else { T::lit(2.0) * v };
    }
    acc * h / T::lit(3.0)
}

/// Per-path realization of `N`, read off as `e^{-λt}<ℓ, Y(t)>` at `t_read`.
///
/// Uses the path's discrete scaling `ρ^{-n}` (see [`LinearizedPath`]);
/// `t_read` beyond the stored path is clamped to its end.
pub fn estimate_n<T: Real>(path: &LinearizedPath<T>, s: &SpectralData<T>, t_read: T) -> T {
    let t = t_read.min(path.t_end()).max(T::zero());
    match path.scaled_at(t) {
        Some(z) => dot(&s.ell, &z),
        None => dot(&s.ell, path.scaled(path.len() - 1)),
    }
}

/// Default read-out time `15/gap` (or `15/λ` in dimension one).
pub fn default_t_read<T: Real>(s: &SpectralData<T>) -> T {
    let rate = if s.gap.is_finite() { s.gap } else { s.lambda };
    T::lit(15.0) / rate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::{mono, registry, spectral_data, Domain, PolynomialField, SpectralOptions};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn ball_model(f: PolynomialField<f64>, r: f64) -> VectorFieldModel<f64> {
        VectorFieldModel::with_default_enclosure(Arc::new(f), Domain::ball(2, r).unwrap()).unwrap()
    }

    fn linear(a: [[f64; 2]; 2]) -> (VectorFieldModel<f64>, SpectralData<f64>) {
        let mut m = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c != 0.0 {
                    let mut pw = vec![0u32; 2];
                    pw[j] = 1;
                    m.push(mono(i, c, &pw));
                }
            }
        }
        let f = PolynomialField::new(2, m).unwrap();
        let model = VectorFieldModel::with_default_enclosure(Arc::new(f), Domain::ball(2, 1.0).unwrap()).unwrap();
        let s = spectral_data(&model, SpectralOptions::default()).unwrap();
        (model, s)
    }

    #[test]
    fn origin_matches_closed_form() {
        for lambda in [0.5, 1.0, 2.0] {
            let (model, s) = linear([[lambda, 0.0], [0.0, -1.5]]);
            let est = sigma_via_adjoint(&model, &s, &[0.0, 0.0], &AdjointOptions::default()).unwrap();
            assert_abs_diff_eq!(est.sigma, (2.0 * lambda).powf(-0.5), epsilon = 1e-9);
        }
    }

    #[test]
    fn origin_non_normal_uses_ell_norm() {
        let (model, s) = linear([[1.0, 1.0], [0.0, -1.0]]);
        let est = sigma_via_adjoint(&model, &s, &[0.0, 0.0], &AdjointOptions::default()).unwrap();
        assert_abs_diff_eq!(est.sigma * est.sigma, 0.625, epsilon = 1e-9);
        assert_abs_diff_eq!(est.sigma, sigma_at_fixed_point(&s), epsilon = 1e-12);
    }

    #[test]
    fn off_origin_closed_form() {
        // b = (x + xy, -y) from (0, y0): σ² = ∫₀¹ u e^{2 y0 u} du.
        let f = PolynomialField::new(
            2,
            vec![mono(0, 1.0, &[1, 0]), mono(0, 1.0, &[1, 1]), mono(1, -1.0, &[0, 1])],
        )
        .unwrap();
        let model = VectorFieldModel::with_default_enclosure(Arc::new(f), Domain::ball(2, 1.0).unwrap()).unwrap();
        let s = spectral_data(&model, SpectralOptions::default()).unwrap();
        for y0 in [0.3, -0.5, 0.8] {
            let c: f64 = 2.0 * y0;
            let exact = (c.exp() * (1.0 / c - 1.0 / (c * c)) + 1.0 / (c * c)).sqrt();
            let est = sigma_via_adjoint(&model, &s, &[0.0, y0], &AdjointOptions::default()).unwrap();
            assert_abs_diff_eq!(est.sigma, exact, epsilon = 1e-8);
            assert!(est.error_bar < 1e-6);
        }
    }

    #[test]
    fn off_manifold_rejected() {
        let model = ball_model(registry::linear_saddle(1.0, 1.0).unwrap(), 1.0);
        let s = spectral_data(&model, SpectralOptions::default()).unwrap();
        let err = sigma_via_adjoint(&model, &s, &[0.1, 0.3], &AdjointOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NotOnStableManifold { .. }));
    }

    #[test]
    fn horizon_doubling_is_stable() {
        let model = ball_model(registry::cubic_saddle(1.0, 1.0, 1.0).unwrap(), 0.5);
        let s = spectral_data(&model, SpectralOptions::default()).unwrap();
        let opts = AdjointOptions { horizon: Some(20.0), ..Default::default() };
        let a = sigma_via_adjoint(&model, &s, &[0.0, 0.3], &opts).unwrap();
        let opts = AdjointOptions { horizon: Some(40.0), ..Default::default() };
        let b = sigma_via_adjoint(&model, &s, &[0.0, 0.3], &opts).unwrap();
        assert!((a.sigma - b.sigma).abs() <= 1e-6 * b.sigma);
    }

    #[test]
    fn estimate_from_surrogate() {
        let (_, s) = linear([[1.0, 0.0], [0.0, -2.0]]);
        let h = 1e-2;
        let growth: f64 = 1.0 + h;
        let n = 2001;
        let mut ys = Vec::new();
        for i in 0..n {
            let y = growth.powi(i as i32) * 0.3;
            ys.extend_from_slice(&[y, 0.0]);
        }
        let path = LinearizedPath::from_y_states(h, growth, 0.0, 2, &ys, vec![0.0; 2 * n]);
        for t in [1.0, 7.5, 20.0] {
            assert_abs_diff_eq!(estimate_n(&path, &s, t), 0.3, epsilon = 1e-12);
        }
    }
}
