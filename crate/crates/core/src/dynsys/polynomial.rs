use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::field::VectorField;

pub const MAX_DEGREE: u32 = 4;

/// `coef * Π x_j^{powers[j]}` contributing to output component `out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial<T> {
    pub out: usize,
    pub coef: T,
    pub powers: Vec<u32>,
}

#[derive(Clone, Debug)]
struct Term<T> {
    coef: T,
    factors: Vec<(usize, u32)>,
}

impl<T: Real> Term<T> {
    #[inline]
    fn value(&self, x: &[T]) -> T {
        self.factors.iter().fold(self.coef, |acc, &(j, p)| acc * x[j].powi(p as i32))
    }

    /// ∂/∂x_k of this term.
    fn partial(&self, x: &[T], k: usize) -> T {
        let mut acc = self.coef;
        let mut hit = false;
        for &(j, p) in &self.factors {
            if j == k {
                hit = true;
                acc = acc * T::lit(p as f64) * x[j].powi(p as i32 - 1);
            } else {
                acc = acc * x[j].powi(p as i32);
            }
        }
        if hit {
            acc
        } else {
            T::zero()
        }
    }
}

/// Polynomial map `ℝ^d → ℝ^m` of degree at most [`MAX_DEGREE`], with an exact Jacobian.
#[derive(Clone, Debug)]
pub struct Polynomial<T> {
    dim: usize,
    outputs: usize,
    monomials: Vec<Monomial<T>>,
    by_output: Vec<Vec<Term<T>>>,
    degree: u32,
}

impl<T: Real> Polynomial<T> {
    pub fn new(dim: usize, outputs: usize, monomials: Vec<Monomial<T>>) -> Result<Self> {
        if dim == 0 || outputs == 0 {
            return Err(Error::InvalidInput("polynomial needs positive dimensions".into()));
        }
        let mut by_output = vec![Vec::new(); outputs];
        let mut degree = 0;
        for (idx, m) in monomials.iter().enumerate() {
            if m.out >= outputs {
                return Err(Error::InvalidInput(format!(
                    "term {idx}: output index {} out of range (< {outputs})",
                    m.out
                )));
            }
            if m.powers.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "term {idx}: expected {dim} exponents, got {}",
                    m.powers.len()
                )));
            }
            let deg: u32 = m.powers.iter().sum();
            if deg > MAX_DEGREE {
                return Err(Error::InvalidInput(format!(
                    "term {idx}: degree {deg} exceeds {MAX_DEGREE}"
                )));
            }
            if !m.coef.is_finite() {
                return Err(Error::InvalidInput(format!("term {idx}: non-finite coefficient")));
            }
            degree = degree.max(deg);
            let factors =
                m.powers.iter().enumerate().filter(|(_, &p)| p > 0).map(|(j, &p)| (j, p)).collect();
            by_output[m.out].push(Term { coef: m.coef, factors });
        }
        Ok(Self { dim, outputs, monomials, by_output, degree })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn monomials(&self) -> &[Monomial<T>] {
        &self.monomials
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn eval_into(&self, x: &[T], out: &mut [T]) {
        for (o, terms) in out.iter_mut().zip(&self.by_output) {
            *o = terms.iter().fold(T::zero(), |s, t| s + t.value(x));
        }
    }

    /// Scalar value of output 0.
    pub fn eval_scalar(&self, x: &[T]) -> T {
        self.by_output[0].iter().fold(T::zero(), |s, t| s + t.value(x))
    }

    pub fn jacobian_into(&self, x: &[T], jac: &mut Matrix<T>) {
        for (i, terms) in self.by_output.iter().enumerate() {
            for k in 0..self.dim {
                jac[(i, k)] = terms.iter().fold(T::zero(), |s, t| s + t.partial(x, k));
            }
        }
    }
}

/// A vector field whose components are polynomials.
#[derive(Clone, Debug)]
pub struct PolynomialField<T>(Polynomial<T>);

impl<T: Real> PolynomialField<T> {
    pub fn new(dim: usize, monomials: Vec<Monomial<T>>) -> Result<Self> {
        Polynomial::new(dim, dim, monomials).map(Self)
    }

    pub fn polynomial(&self) -> &Polynomial<T> {
        &self.0
    }
}

impl<T: Real> VectorField<T> for PolynomialField<T> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    #[inline]
    fn eval(&self, x: &[T], out: &mut [T]) {
        self.0.eval_into(x, out)
    }

    fn jacobian(&self, x: &[T], jac: &mut Matrix<T>) {
        self.0.jacobian_into(x, jac)
    }

    fn degree(&self) -> Option<u32> {
        Some(self.0.degree)
    }
}

/// Shorthand used by the registry and tests.
pub fn mono<T: Real>(out: usize, coef: f64, powers: &[u32]) -> Monomial<T> {
    Monomial { out, coef: T::lit(coef), powers: powers.to_vec() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::field::fd_jacobian;

    fn cubic() -> PolynomialField<f64> {
        PolynomialField::new(
            2,
            vec![mono(0, 1.0, &[1, 0]), mono(0, -1.0, &[3, 0]), mono(1, -1.0, &[0, 1]), mono(1, 1.0, &[2, 0])],
        )
        .unwrap()
    }

    #[test]
    fn evaluates_terms() {
        let f = cubic();
        let mut out = [0.0; 2];
        f.eval(&[0.5, 2.0], &mut out);
        assert_eq!(out, [0.5 - 0.125, -2.0 + 0.25]);
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let f: PolynomialField<f64> = PolynomialField::new(
            3,
            vec![
                mono(0, 2.0, &[1, 1, 1]),
                mono(0, -0.5, &[0, 4, 0]),
                mono(1, 1.5, &[2, 0, 1]),
                mono(2, -3.0, &[0, 0, 1]),
                mono(2, 0.25, &[1, 3, 0]),
            ],
        )
        .unwrap();
        for x in [[0.1, -0.3, 0.7], [1.2, 0.4, -0.9], [-0.6, 0.8, 0.05]] {
            let mut ja = Matrix::zeros(3, 3);
            let mut jf = Matrix::zeros(3, 3);
            f.jacobian(&x, &mut ja);
            fd_jacobian(&f, &x, &mut jf);
            let scale = ja.frobenius_norm().max(1.0);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((ja[(i, j)] - jf[(i, j)]).abs() <= 1e-5 * scale);
                }
            }
        }
    }

    #[test]
    fn rejects_high_degree_and_bad_shapes() {
        assert!(PolynomialField::<f64>::new(2, vec![mono(0, 1.0, &[5, 0])]).is_err());
        assert!(PolynomialField::<f64>::new(2, vec![mono(2, 1.0, &[1, 0])]).is_err());
        assert!(PolynomialField::<f64>::new(2, vec![mono(0, 1.0, &[1])]).is_err());
    }
}
