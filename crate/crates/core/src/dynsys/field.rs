use std::sync::Arc;

use crate::linalg::Matrix;
use crate::scalar::Real;

/// A smooth vector field `b: ℝ^d → ℝ^d` with its Jacobian `J_ij = ∂b_i/∂x_j`.
pub trait VectorField<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[T], out: &mut [T]);

    /// Defaults to central differences.
    fn jacobian(&self, x: &[T], jac: &mut Matrix<T>) {
        fd_jacobian(self, x, jac);
    }

    /// Maximum polynomial degree, if the field is polynomial.
    fn degree(&self) -> Option<u32> {
        None
    }
}

/// Central-difference Jacobian with step `eps^(1/3) * max(1, |x_j|)`.
pub fn fd_jacobian<T: Real, F: VectorField<T> + ?Sized>(field: &F, x: &[T], jac: &mut Matrix<T>) {
    let d = field.dim();
    let base = T::epsilon().cbrt();
    let mut xp = x.to_vec();
    let mut fp = vec![T::zero(); d];
    let mut fm = vec![T::zero(); d];
    for j in 0..d {
        let h = base * x[j].abs().max(T::one());
        xp[j] = x[j] + h;
        field.eval(&xp, &mut fp);
        xp[j] = x[j] - h;
        field.eval(&xp, &mut fm);
        xp[j] = x[j];
        let inv = T::one() / (h + h);
        for i in 0..d {
            jac[(i, j)] = (fp[i] - fm[i]) * inv;
        }
    }
}

/// Field given by closures; the Jacobian falls back to finite differences.
pub struct FnField<T, F> {
    dim: usize,
    f: F,
    _marker: std::marker::PhantomData<fn() -> T>,
}

impl<T, F> FnField<T, F>
where
    T: Real,
    F: Fn(&[T], &mut [T]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, _marker: std::marker::PhantomData }
    }
}

impl<T, F> VectorField<T> for FnField<T, F>
where
    T: Real,
    F: Fn(&[T], &mut [T]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[T], out: &mut [T]) {
        (self.f)(x, out)
    }
}

/// `x ↦ b(x + origin)`: moves a located equilibrium to the coordinate origin.
pub struct Shifted<T: Real> {
    inner: Arc<dyn VectorField<T>>,
    origin: Vec<T>,
}

impl<T: Real> Shifted<T> {
    pub fn new(inner: Arc<dyn VectorField<T>>, origin: Vec<T>) -> Self {
        assert_eq!(inner.dim(), origin.len());
        Self { inner, origin }
    }

    fn lift(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.origin).map(|(&a, &b)| a + b).collect()
    }
}

impl<T: Real> VectorField<T> for Shifted<T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[T], out: &mut [T]) {
        self.inner.eval(&self.lift(x), out)
    }

    fn jacobian(&self, x: &[T], jac: &mut Matrix<T>) {
        self.inner.jacobian(&self.lift(x), jac)
    }

    fn degree(&self) -> Option<u32> {
        self.inner.degree()
    }
}
