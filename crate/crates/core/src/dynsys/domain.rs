use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{distance, norm};
use crate::scalar::Real;

use super::polynomial::Polynomial;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Ball,
    Box,
    LevelSet,
}

/// A region `{g < 0}` with boundary `{g = 0}`.
///
/// Ball: `g(x) = |x - c| - R`. Box: `g(x) = max_i max(lo_i - x_i, x_i - hi_i)`.
/// Level set: `g(x) = p(x + offset)` for a scalar polynomial `p`; its gradient
/// is taken by central differences.
#[derive(Clone, Debug)]
pub enum Domain<T: Real> {
    Ball { center: Vec<T>, radius: T },
    Box { lo: Vec<T>, hi: Vec<T> },
    LevelSet { poly: Arc<Polynomial<T>>, offset: Vec<T>, bound_radius: T },
}

impl<T: Real> Domain<T> {
    pub fn ball(dim: usize, radius: T) -> Result<Self> {
        Self::ball_at(vec![T::zero(); dim], radius)
    }

    pub fn ball_at(center: Vec<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || center.is_empty() {
            return Err(Error::InvalidInput("ball needs a positive radius and dimension".into()));
        }
        Ok(Self::Ball { center, radius })
    }

    pub fn boxed(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput("box bounds must have equal, positive length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidInput("box needs lo < hi in every coordinate".into()));
        }
        Ok(Self::Box { lo, hi })
    }

    pub fn level_set(poly: Polynomial<T>, bound_radius: T) -> Result<Self> {
        if poly.outputs() != 1 {
            return Err(Error::InvalidInput("level-set polynomial must be scalar".into()));
        }
        if !(bound_radius > T::zero()) {
            return Err(Error::InvalidInput("level-set bound radius must be positive".into()));
        }
        let offset = vec![T::zero(); poly.dim()];
        Ok(Self::LevelSet { poly: Arc::new(poly), offset, bound_radius })
    }

    pub fn kind(&self) -> DomainKind {
        match self {
            Self::Ball { .. } => DomainKind::Ball,
            Self::Box { .. } => DomainKind::Box,
            Self::LevelSet { .. } => DomainKind::LevelSet,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ball { center, .. } => center.len(),
            Self::Box { lo, .. } => lo.len(),
            Self::LevelSet { offset, .. } => offset.len(),
        }
    }

    #[inline]
    pub fn g(&self, x: &[T]) -> T {
        match self {
            Self::Ball { center, radius } => distance(x, center) - *radius,
            Self::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .fold(T::neg_infinity(), |m, (&xi, (&l, &h))| m.max(l - xi).max(xi - h)),
            Self::LevelSet { poly, offset, .. } => {
                if offset.iter().all(|o| o.is_zero()) {
                    poly.eval_scalar(x)
                } else {
                    let y: Vec<T> = x.iter().zip(offset).map(|(&a, &b)| a + b).collect();
                    poly.eval_scalar(&y)
                }
            }
        }
    }

    pub fn contains_interior(&self, x: &[T]) -> bool {
        self.g(x) < T::zero()
    }

    /// Outward gradient of `g`.
    pub fn grad(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Ball { center, .. } => {
                let mut v: Vec<T> = x.iter().zip(center).map(|(&a, &c)| a - c).collect();
                let n = norm(&v);
                if n > T::zero() {
                    v.iter_mut().for_each(|e| *e = *e / n);
                }
                v
            }
            Self::Box { lo, hi } => {
                let mut best = (T::neg_infinity(), 0usize, T::one());
                for (i, (&xi, (&l, &h))) in x.iter().zip(lo.iter().zip(hi)).enumerate() {
                    if l - xi > best.0 {
                        best = (l - xi, i, -T::one());
                    }
                    if xi - h > best.0 {
                        best = (xi - h, i, T::one());
                    }
                }
                let mut v = vec![T::zero(); x.len()];
                v[best.1] = best.2;
                v
            }
            Self::LevelSet { .. } => {
                let mut xp = x.to_vec();
                let mut out = vec![T::zero(); x.len()];
                let base = T::epsilon().cbrt();
                for j in 0..x.len() {
                    let h = base * x[j].abs().max(T::one());
                    xp[j] = x[j] + h;
                    let fp = self.g(&xp);
                    xp[j] = x[j] - h;
                    let fm = self.g(&xp);
                    xp[j] = x[j];
                    out[j] = (fp - fm) / (h + h);
                }
                out
            }
        }
    }

    pub fn diameter(&self) -> T {
        match self {
            Self::Ball { radius, .. } => *radius + *radius,
            Self::Box { lo, hi } => distance(lo, hi),
            Self::LevelSet { bound_radius, .. } => *bound_radius + *bound_radius,
        }
    }

    /// The same region in coordinates where `origin` becomes `0`.
    pub fn shifted(&self, origin: &[T]) -> Self {
        let sub = |v: &[T]| v.iter().zip(origin).map(|(&a, &b)| a - b).collect::<Vec<T>>();
        match self {
            Self::Ball { center, radius } => Self::Ball { center: sub(center), radius: *radius },
            Self::Box { lo, hi } => Self::Box { lo: sub(lo), hi: sub(hi) },
            Self::LevelSet { poly, offset, bound_radius } => Self::LevelSet {
                poly: poly.clone(),
                offset: offset.iter().zip(origin).map(|(&a, &b)| a + b).collect(),
                bound_radius: *bound_radius,
            },
        }
    }

    /// Concentric enlargement used as the default enclosure `U`.
    pub fn enlarged(&self, factor: T) -> Self {
        match self {
            Self::Ball { center, radius } => Self::Ball { center: center.clone(), radius: *radius * factor },
            Self::Box { lo, hi } => {
                let (mut l2, mut h2) = (lo.clone(), hi.clone());
                for i in 0..lo.len() {
                    let mid = (lo[i] + hi[i]) / T::lit(2.0);
                    let half = (hi[i] - lo[i]) / T::lit(2.0) * factor;
                    l2[i] = mid - half;
                    h2[i] = mid + half;
                }
                Self::Box { lo: l2, hi: h2 }
            }
            Self::LevelSet { offset, bound_radius, .. } => {
                // A generic level set has no canonical dilation; use its bounding ball.
                let center: Vec<T> = offset.iter().map(|&o| -o).collect();
                Self::Ball { center, radius: *bound_radius * factor }
            }
        }
    }
}
