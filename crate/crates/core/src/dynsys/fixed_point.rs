use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::scalar::Real;

use super::VectorFieldModel;

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions<T> {
    /// Residual target relative to the field scale `max(1, ‖J(guess)‖_F)`.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for FixedPointOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-12), max_iter: 50 }
    }
}

/// Newton iteration for `b(p) = 0` starting at `guess`.
///
/// Fails with [`Error::OutsideDomain`] as soon as an iterate leaves `U`.
pub fn find_fixed_point<T: Real>(
    model: &VectorFieldModel<T>,
    guess: &[T],
    opts: FixedPointOptions<T>,
) -> Result<Vec<T>> {
    let d = model.dim();
    if guess.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: guess.len() });
    }
    let scale = model.jacobian(guess).frobenius_norm().max(T::one());
    let target = opts.tol * scale;
    let mut x = guess.to_vec();
    let mut f = model.b_vec(&x);
    for _ in 0..opts.max_iter {
        if norm(&f) <= target {
            return Ok(x);
        }
        let step = model.jacobian(&x).solve(&f)?;
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi = *xi - *si;
        }
        if !x.iter().all(|v| v.is_finite()) || model.enclosure().g(&x) > T::zero() {
            return Err(Error::OutsideDomain);
        }
        f = model.b_vec(&x);
    }
    if norm(&f) <= target {
        return Ok(x);
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: norm(&f).to_f64_lossy() })
}
