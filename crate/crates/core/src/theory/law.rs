use serde::Serialize;
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sde::NoiseStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> i8 {
        match self {
            Side::Plus => 1,
            Side::Minus => -1,
        }
    }

    pub fn from_sign(s: i8) -> Option<Self> {
        match s {
            1 => Some(Side::Plus),
            -1 => Some(Side::Minus),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Plus => "plus",
            Side::Minus => "minus",
        }
    }
}

/// Parameters of the limiting exit law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitLawParams<T> {
    pub q_plus: Vec<T>,
    pub q_minus: Vec<T>,
    pub h_plus: T,
    pub h_minus: T,
    pub sigma: T,
    pub lambda: T,
}

impl<T: Real> ExitLawParams<T> {
    pub fn h(&self, side: Side) -> T {
        match side {
            Side::Plus => self.h_plus,
            Side::Minus => self.h_minus,
        }
    }

    pub fn q(&self, side: Side) -> &[T] {
        match side {
            Side::Plus => &self.q_plus,
            Side::Minus => &self.q_minus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero() && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.lambda > T::zero() && self.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.h_plus.is_finite() && self.h_minus.is_finite()) {
            return Err(Error::InvalidInput("h± must be finite".into()));
        }
        if self.q_plus.len() != self.q_minus.len() {
            return Err(Error::DimensionMismatch { expected: self.q_plus.len(), got: self.q_minus.len() });
        }
        Ok(())
    }
}

/// The mixture `½δ_{q+}×μ_{h+,σ} + ½δ_{q-}×μ_{h-,σ}`, where `μ_{h,σ}` is the
/// law of `h - ln(σ|𝒩|)/λ` for a standard normal `𝒩`.
///
/// With `u(t) = e^{λ(h-t)}/σ` the side-conditional CDF is
/// `F(t) = P(|𝒩| >= u) = erfc(u/√2)` and the density is `2λuφ(u)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitLaw<T> {
    pub params: ExitLawParams<T>,
}

impl<T: Real> LimitLaw<T> {
    pub fn new(params: ExitLawParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    fn u(&self, side: Side, t: f64) -> f64 {
        let p = &self.params;
        let lambda = p.lambda.to_f64_lossy();
        (lambda * (p.h(side).to_f64_lossy() - t)).exp() / p.sigma.to_f64_lossy()
    }

    pub fn cdf(&self, side: Side, t: T) -> T {
        let u = self.u(side, t.to_f64_lossy());
        T::lit(erfc(u / std::f64::consts::SQRT_2))
    }

    pub fn density(&self, side: Side, t: T) -> T {
        let u = self.u(side, t.to_f64_lossy());
        if !u.is_finite() {
            return T::zero();
        }
        let phi = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        T::lit(2.0 * self.params.lambda.to_f64_lossy() * u * phi)
    }

    /// Unconditional CDF of the centered time, `½F₊ + ½F₋`.
    pub fn mixture_cdf(&self, t: T) -> T {
        (self.cdf(Side::Plus, t) + self.cdf(Side::Minus, t)) / T::lit(2.0)
    }

    /// Side-conditional quantile, `p ∈ (0, 1)`.
    pub fn quantile(&self, side: Side, prob: T) -> T {
        self.quantile_f64(side, prob.to_f64_lossy())
    }

    fn quantile_f64(&self, side: Side, prob: f64) -> T {
        let p = &self.params;
        let u = std::f64::consts::SQRT_2 * erfc_inv(prob);
        let t = p.h(side).to_f64_lossy() - (p.sigma.to_f64_lossy() * u).ln() / p.lambda.to_f64_lossy();
        T::lit(t)
    }

    pub fn median(&self, side: Side) -> T {
        self.quantile_f64(side, 0.5)
    }

    /// Median of the mixture, by bisection between the two side medians.
    pub fn mixture_median(&self) -> T {
        let (a, b) = (self.median(Side::Plus), self.median(Side::Minus));
        let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
        let half = T::lit(0.5);
        for _ in 0..200 {
            if hi - lo <= T::epsilon() * (T::one() + hi.abs()) {
                break;
            }
            let mid = (lo + hi) / T::lit(2.0);
            if self.mixture_cdf(mid) < half {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / T::lit(2.0)
    }

    /// `(side, T)` with `side = sgn 𝒩` and `T = h_side - ln(σ|𝒩|)/λ`.
    pub fn sample(&self, noise: &mut NoiseStream) -> (Side, T) {
        loop {
            let z: T = noise.standard_normal();
            if z != T::zero() {
                return self.from_normal(z);
            }
        }
    }

    /// Deterministic map from a standard normal draw to `(side, T)`.
    pub fn from_normal(&self, z: T) -> (Side, T) {
        let p = &self.params;
        let side = if z > T::zero() { Side::Plus } else { Side::Minus };
        (side, p.h(side) - (p.sigma * z.abs()).ln() / p.lambda)
    }
}

pub fn limit_cdf<T: Real>(law: &LimitLaw<T>, side: Side, t: T) -> T {
    law.cdf(side, t)
}

pub fn limit_density<T: Real>(law: &LimitLaw<T>, side: Side, t: T) -> T {
    law.density(side, t)
}

pub fn sample_limit_law<T: Real>(law: &LimitLaw<T>, noise: &mut NoiseStream) -> (Side, T) {
    law.sample(noise)
}
