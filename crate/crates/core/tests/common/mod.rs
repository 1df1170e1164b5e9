#![allow(dead_code)]

use std::sync::Arc;

use saddle_exit::dynsys::{mono, registry, Domain, PolynomialField, VectorField, VectorFieldModel};
use saddle_exit::Model;

pub fn ball_model(field: PolynomialField<f64>, radius: f64) -> Model {
    let d = VectorField::<f64>::dim(&field);
    VectorFieldModel::with_default_enclosure(Arc::new(field), Domain::ball(d, radius).unwrap()).unwrap()
}

pub fn linear_saddle(lambda: f64, mu: f64, radius: f64) -> Model {
    ball_model(registry::linear_saddle(lambda, mu).unwrap(), radius)
}

pub fn cubic_saddle(coupling: f64, radius: f64) -> Model {
    ball_model(registry::cubic_saddle(1.0, 1.0, coupling).unwrap(), radius)
}

/// `b(x) = A x` from a dense matrix.
pub fn matrix_field(a: &[Vec<f64>]) -> PolynomialField<f64> {
    let d = a.len();
    let mut terms = Vec::new();
    for (i, row) in a.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c != 0.0 {
                let mut p = vec![0u32; d];
                p[j] = 1;
                terms.push(mono(i, c, &p));
            }
        }
    }
    PolynomialField::new(d, terms).unwrap()
}

pub fn matrix_model(a: &[Vec<f64>], radius: f64) -> Model {
    ball_model(matrix_field(a), radius)
}

/// Adaptive Simpson quadrature; the oracle for 1-D travel-time integrals.
pub fn quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 60)
}
