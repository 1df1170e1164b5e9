//! Built-in polynomial models and their analytic "truth cards".

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::polynomial::{mono, PolynomialField};

pub const BUILTIN_NAMES: &[&str] = &["linear-saddle", "cubic-saddle", "spiral-stable-3d"];

/// `b = (λx, -μy)`.
pub fn linear_saddle<T: Real>(lambda: f64, mu: f64) -> Result<PolynomialField<T>> {
    positive("lambda", lambda)?;
    positive("mu", mu)?;
    PolynomialField::new(2, vec![mono(0, lambda, &[1, 0]), mono(1, -mu, &[0, 1])])
}

/// `b = (λx - x³, -μy + κx²)`.
pub fn cubic_saddle<T: Real>(lambda: f64, mu: f64, coupling: f64) -> Result<PolynomialField<T>> {
    positive("lambda", lambda)?;
    positive("mu", mu)?;
    let mut terms = vec![mono(0, lambda, &[1, 0]), mono(0, -1.0, &[3, 0]), mono(1, -mu, &[0, 1])];
    if coupling != 0.0 {
        terms.push(mono(1, coupling, &[2, 0]));
    }
    PolynomialField::new(2, terms)
}

/// `b = (λx - x³, -μy - ωz + x², ωy - μz)`: a stable focus transverse to the unstable axis.
pub fn spiral_stable_3d<T: Real>(lambda: f64, mu: f64, omega: f64) -> Result<PolynomialField<T>> {
    positive("lambda", lambda)?;
    positive("mu", mu)?;
    PolynomialField::new(
        3,
        vec![
            mono(0, lambda, &[1, 0, 0]),
            mono(0, -1.0, &[3, 0, 0]),
            mono(1, -mu, &[0, 1, 0]),
            mono(1, -omega, &[0, 0, 1]),
            mono(1, 1.0, &[2, 0, 0]),
            mono(2, omega, &[0, 1, 0]),
            mono(2, -mu, &[0, 0, 1]),
        ],
    )
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

/// Closed-form exit-law parameters for a built-in model started at the origin.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct TruthCard {
    pub h_plus: f64,
    pub h_minus: f64,
    pub sigma: f64,
    pub provenance: &'static str,
}

/// Linear saddle in a ball of radius `R`: `t(δ) = ln(R/δ)/λ`, so `h± = ln R / λ`.
pub fn linear_saddle_card(lambda: f64, radius: f64) -> TruthCard {
    let h = radius.ln() / lambda;
    TruthCard {
        h_plus: h,
        h_minus: h,
        sigma: (2.0 * lambda).powf(-0.5),
        provenance: "closed form of the linear flow; sigma from the Ito isometry with |ell| = 1",
    }
}

/// Cubic saddle `(λx - x³, -μy + κx²)` in a ball of radius `R < √λ`.
///
/// With `λ = μ = 1` the unstable curve is the graph
/// `y = κ(1 - √(1-x²)·arcsin(x)/x)`; for `κ = 0` it is the x-axis for any `λ, μ`.
/// The x-dynamics decouple, so with `x*` the abscissa of the boundary hit
/// `h = (ln x* - ½ln(λ - x*²) + ½ln λ)/λ`.
pub fn cubic_saddle_card(lambda: f64, mu: f64, coupling: f64, radius: f64) -> Option<TruthCard> {
    if radius * radius >= lambda {
        return None;
    }
    let x_star = if coupling == 0.0 {
        radius
    } else if lambda == 1.0 && mu == 1.0 {
        let graph = |x: f64| coupling * cubic_manifold_profile(x);
        let (mut a, mut b) = (0.0f64, radius);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m * m + graph(m).powi(2) < radius * radius {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    } else {
        return None;
    };
    let h = (x_star.ln() - 0.5 * (lambda - x_star * x_star).ln() + 0.5 * lambda.ln()) / lambda;
    Some(TruthCard {
        h_plus: h,
        h_minus: h,
        sigma: (2.0 * lambda).powf(-0.5),
        provenance: "decoupled 1-D integral of dx/(λx - x³) up to the boundary abscissa",
    })
}

/// `1 - √(1-x²)·arcsin(x)/x`, the unstable-curve profile of `(x - x³, -y + x²)`.
pub fn cubic_manifold_profile(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Series: x²/3 + 2x⁴/15
        let x2 = x * x;
        return x2 / 3.0 + 2.0 * x2 * x2 / 15.0;
    }
    1.0 - (1.0 - x * x).sqrt() * x.asin() / x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_solves_invariance_equation() {
        // γ'(x)(x - x³) = -γ + x²
        for &x in &[0.05, 0.2, 0.45] {
            let h = 1e-6;
            let d = (cubic_manifold_profile(x + h) - cubic_manifold_profile(x - h)) / (2.0 * h);
            let lhs = d * (x - x * x * x);
            let rhs = -cubic_manifold_profile(x) + x * x;
            assert!((lhs - rhs).abs() < 1e-8, "x={x}: {lhs} vs {rhs}");
        }
        let small = 5e-5;
        assert!((cubic_manifold_profile(small) - (1.0 - (1.0 - small * small).sqrt() * small.asin() / small)).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_card_uses_radius() {
        let c = cubic_saddle_card(1.0, 1.0, 0.0, 0.5).unwrap();
        assert!((c.h_plus - (0.5f64.ln() - 0.5 * 0.75f64.ln())).abs() < 1e-14);
    }
}
