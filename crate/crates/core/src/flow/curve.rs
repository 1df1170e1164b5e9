use rayon::prelude::*;
use serde::Serialize;

use crate::dynsys::{SpectralData, VectorFieldModel};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Real;

use super::integrator::{integrate_flow, integrate_until, EventOutcome, FlowOptions};

#[derive(Clone, Copy, Debug)]
pub struct CurveOptions<T> {
    pub flow: FlowOptions<T>,
    /// Relaxation time before the curve point is read off; default `5/gap`.
    pub t_relax: Option<T>,
    /// Start of the geometric δ-grid (`δ_k = delta_ref·2^{-k}`).
    pub delta_ref: T,
    pub levels: usize,
    /// Horizon for reaching `∂G` from `γ(±delta_ref)`, in units of `1/λ`.
    pub t_max_lambda: T,
    /// Transversality threshold relative to `|b(q)|·|∇g(q)|`.
    pub tol_trans: T,
}

impl<T: Real> Default for CurveOptions<T> {
    fn default() -> Self {
        Self {
            flow: FlowOptions { step: super::StepControl::adaptive(T::lit(1e-11)), ..FlowOptions::default() },
            t_relax: None,
            delta_ref: T::lit(1e-2),
            levels: 6,
            t_max_lambda: T::lit(200.0),
            tol_trans: T::lit(1e-6),
        }
    }
}

impl<T: Real> CurveOptions<T> {
    fn relax_time(&self, s: &SpectralData<T>) -> T {
        self.t_relax.unwrap_or_else(|| {
            if s.gap.is_finite() {
                (T::lit(5.0) / s.gap).min(T::lit(40.0) / s.lambda)
            } else {
                T::zero()
            }
        })
    }
}

/// Point `γ(sign·δ)` of the unstable curve, i.e. the curve point with `<ℓ, x> = sign·δ`.
///
/// The curve is reached by seeding on the tangent line at `sign·δ·e^{-λT}·v`
/// and flowing forward until `|<ℓ, x>| = δ`; the transverse seeding error is
/// contracted by roughly `e^{-gap·T}` on the way.
pub fn unstable_curve_point<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    delta: T,
    sign: i8,
    opts: &CurveOptions<T>,
) -> Result<Vec<T>> {
    if !(delta > T::zero()) || sign == 0 {
        return Err(Error::InvalidInput("need delta > 0 and sign = ±1".into()));
    }
    let t_relax = opts.relax_time(s);
    let seed_scale = (-s.lambda * t_relax).exp();
    let sgn = if sign > 0 { T::one() } else { -T::one() };
    let x_seed: Vec<T> = s.v.iter().map(|&v| sgn * delta * seed_scale * v).collect();
    if seed_scale >= T::one() {
        return Ok(x_seed);
    }
    let t_max = t_relax * T::lit(4.0) + T::lit(50.0) / s.lambda;
    let event = |x: &[T]| dot(&s.ell, x).abs() - delta;
    let tol = opts.flow.tol_exit * delta;
    match integrate_until(model, &x_seed, t_max, &opts.flow, event, tol, Some(model.domain()))? {
        EventOutcome::Event { x, .. } => Ok(x),
        _ => Err(Error::NoCrossing { delta: delta.to_f64_lossy() }),
    }
}

/// Where the two branches of the unstable curve meet `∂G`.
#[derive(Clone, Debug, Serialize)]
pub struct UnstableCurveData<T> {
    pub q_plus: Vec<T>,
    pub q_minus: Vec<T>,
    pub transversality_plus: T,
    pub transversality_minus: T,
    /// `(signed δ, γ(δ))` on the geometric grid.
    pub gamma_samples: Vec<(T, Vec<T>)>,
}

pub fn boundary_hits<T: Real>(
    model: &VectorFieldModel<T>,
    s: &SpectralData<T>,
    opts: &CurveOptions<T>,
) -> Result<UnstableCurveData<T>> {
    let t_max = opts.t_max_lambda / s.lambda;
    let hit = |sign: i8| -> Result<(Vec<T>, T)> {
        let start = unstable_curve_point(model, s, opts.delta_ref, sign, opts)?;
        let fr = integrate_flow(model, &start, t_max, &opts.flow)?;
        if !fr.exited() {
            return Err(Error::NoExit { t_max: t_max.to_f64_lossy() });
        }
        let q = fr.exit_point;
        let grad = model.domain().grad(&q);
        let b = model.b_vec(&q);
        let trans = dot(&grad, &b).abs();
        if !(trans > opts.tol_trans * norm(&b) * norm(&grad)) {
            return Err(Error::TangentialIntersection { transversality: trans.to_f64_lossy() });
        }
        Ok((q, trans))
    };
    let (q_plus, transversality_plus) = hit(1)?;
    let (q_minus, transversality_minus) = hit(-1)?;

    let grid: Vec<(T, i8)> = (0..=opts.levels)
        .flat_map(|k| {
            let dk = opts.delta_ref * T::lit(0.5f64.powi(k as i32));
            [(dk, 1i8), (dk, -1i8)]
        })
        .collect();
    let gamma_samples = grid
        .par_iter()
        .map(|&(dk, sign)| {
            let p = unstable_curve_point(model, s, dk, sign, opts)?;
            let signed = if sign > 0 { dk } else { -dk };
            Ok((signed, p))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(UnstableCurveData { q_plus, q_minus, transversality_plus, transversality_minus, gamma_samples })
}
