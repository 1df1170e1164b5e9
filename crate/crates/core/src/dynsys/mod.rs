//! Vector fields, regions and the spectral data of the linearization at the
//! saddle point.

mod domain;
mod field;
mod fixed_point;
mod polynomial;
pub mod registry;
mod spectral;

use std::sync::Arc;

pub use domain::{Domain, DomainKind};
pub use field::{fd_jacobian, FnField, Shifted, VectorField};
pub use fixed_point::{find_fixed_point, FixedPointOptions};
pub use polynomial::{mono, Monomial, Polynomial, PolynomialField, MAX_DEGREE};
pub use spectral::{spectral_data, SpectralData, SpectralOptions};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Vector field `b` together with the study region `G` and an enclosing region `U ⊃ G`.
#[derive(Clone)]
pub struct VectorFieldModel<T: Real> {
    field: Arc<dyn VectorField<T>>,
    domain: Domain<T>,
    enclosure: Domain<T>,
}

impl<T: Real> std::fmt::Debug for VectorFieldModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VectorFieldModel")
            .field("dim", &self.dim())
            .field("domain", &self.domain)
            .field("enclosure", &self.enclosure)
            .finish()
    }
}

impl<T: Real> VectorFieldModel<T> {
    pub fn new(field: Arc<dyn VectorField<T>>, domain: Domain<T>, enclosure: Domain<T>) -> Result<Self> {
        let d = field.dim();
        for got in [domain.dim(), enclosure.dim()] {
            if got != d {
                return Err(Error::DimensionMismatch { expected: d, got });
            }
        }
        Ok(Self { field, domain, enclosure })
    }

    /// Uses `G` enlarged by a factor 2 as the enclosure.
    pub fn with_default_enclosure(field: Arc<dyn VectorField<T>>, domain: Domain<T>) -> Result<Self> {
        let enclosure = domain.enlarged(T::lit(2.0));
        Self::new(field, domain, enclosure)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn field(&self) -> &Arc<dyn VectorField<T>> {
        &self.field
    }

    pub fn domain(&self) -> &Domain<T> {
        &self.domain
    }

    pub fn enclosure(&self) -> &Domain<T> {
        &self.enclosure
    }

    #[inline]
    pub fn b(&self, x: &[T], out: &mut [T]) {
        self.field.eval(x, out)
    }

    pub fn b_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.field.eval(x, &mut out);
        out
    }

    pub fn jacobian(&self, x: &[T]) -> Matrix<T> {
        let mut j = Matrix::zeros(self.dim(), self.dim());
        self.field.jacobian(x, &mut j);
        j
    }

    /// The model in coordinates where `origin` is mapped to `0`.
    pub fn shifted(&self, origin: &[T]) -> Self {
        if origin.iter().all(|o| o.is_zero()) {
            return self.clone();
        }
        Self {
            field: Arc::new(Shifted::new(self.field.clone(), origin.to_vec())),
            domain: self.domain.shifted(origin),
            enclosure: self.enclosure.shifted(origin),
        }
    }

    /// Largest operator norm of `J` over a grid covering `G`'s bounding box:
    /// a measured Lipschitz constant of `b` on `G`.
    pub fn lipschitz_estimate(&self, per_axis: usize) -> T {
        let d = self.dim();
        let (lo, hi) = bounding_box(&self.domain);
        let per_axis = per_axis.max(2);
        let total = per_axis.pow(d as u32);
        let mut best = T::zero();
        let mut x = vec![T::zero(); d];
        for idx in 0..total {
            let mut r = idx;
            for k in 0..d {
                let i = r % per_axis;
                r /= per_axis;
                let s = T::lit(i as f64 / (per_axis - 1) as f64);
                x[k] = lo[k] + (hi[k] - lo[k]) * s;
            }
            if self.domain.g(&x) <= T::zero() {
                best = best.max(self.jacobian(&x).operator_norm());
            }
        }
        best
    }
}

fn bounding_box<T: Real>(d: &Domain<T>) -> (Vec<T>, Vec<T>) {
    match d {
        Domain::Ball { center, radius } => (
            center.iter().map(|&c| c - *radius).collect(),
            center.iter().map(|&c| c + *radius).collect(),
        ),
        Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
        Domain::LevelSet { offset, bound_radius, .. } => (
            offset.iter().map(|&o| -o - *bound_radius).collect(),
            offset.iter().map(|&o| -o + *bound_radius).collect(),
        ),
    }
}
