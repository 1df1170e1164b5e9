use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, normalize, Matrix};
use crate::scalar::Real;

use super::VectorFieldModel;

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions<T> {
    /// Minimum admissible spectral gap, relative to `max(1, ‖A‖_F)`.
    pub tol_gap: T,
    /// Residual bound for `|Av - λv|` and `|Aᵀℓ - λℓ|`, relative to `‖A‖_F`.
    pub tol_eig: T,
}

impl<T: Real> Default for SpectralOptions<T> {
    fn default() -> Self {
        Self { tol_gap: T::lit(1e-8), tol_eig: T::epsilon().sqrt() * T::lit(1e-2) }
    }
}

/// Leading eigen-structure of `A = J(0)`.
///
/// `v` is the unit right eigenvector for `lambda` with its first nonzero
/// coordinate positive; `ell` is the left eigenvector scaled so that
/// `<ell, v> = 1`, so `Π_v x = <ell, x> v`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralData<T> {
    pub lambda: T,
    pub v: Vec<T>,
    pub ell: Vec<T>,
    /// `λ - max Re(other eigenvalues)`; infinite in dimension one.
    pub gap: T,
    /// `-max Re(negative eigenvalues)` when there is a negative one.
    pub mu: Option<T>,
    #[serde(skip)]
    pub a: Matrix<T>,
    /// All eigenvalues `(re, im)` of `A`, sorted by decreasing real part.
    pub eigenvalues: Vec<(f64, f64)>,
}

impl<T: Real> SpectralData<T> {
    pub fn from_matrix(a: Matrix<T>, opts: SpectralOptions<T>) -> Result<Self> {
        let d = a.rows();
        if d == 0 || a.cols() != d {
            return Err(Error::InvalidInput("A must be square and non-empty".into()));
        }
        if !a.as_slice().iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("A has non-finite entries".into()));
        }
        let scale = a.frobenius_norm();
        let scale64 = scale.to_f64_lossy().max(f64::MIN_POSITIVE);
        let mut eig = eigenvalues_f64(&a)?;
        eig.sort_by(|p, q| q.0.total_cmp(&p.0));

        let (re, im) = eig[0];
        let tol_gap = opts.tol_gap.to_f64_lossy() * scale64.max(1.0);
        if im.abs() > 1e-9 * scale64.max(1.0) {
            return Err(Error::LeadingEigenvalueNotSimpleReal(format!(
                "leading eigenvalue {re:.6} ± {:.6}i is complex",
                im.abs()
            )));
        }
        if re <= tol_gap {
            return Err(Error::LeadingEigenvalueNotSimpleReal(format!(
                "leading eigenvalue {re:.6e} is not positive"
            )));
        }
        let gap = match eig.get(1) {
            Some(&(re2, _)) => {
                let g = re - re2;
                if g <= tol_gap {
                    return Err(Error::LeadingEigenvalueNotSimpleReal(format!(
                        "leading eigenvalue {re:.6} is repeated or not dominant (gap {g:.3e})"
                    )));
                }
                T::lit(g)
            }
            None => T::infinity(),
        };
        let mu = eig.iter().map(|e| e.0).filter(|&r| r < 0.0).reduce(f64::max).map(|r| T::lit(-r));

        let lambda0 = T::lit(re);
        let mut v = inverse_iteration(&a, lambda0, scale)?;
        let at = a.transpose();
        let mut ell = inverse_iteration(&at, lambda0, scale)?;

        let pivot = v.iter().position(|x| x.abs() > T::lit(1e-8)).unwrap_or(0);
        if v[pivot] < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let c = dot(&ell, &v);
        if c.abs() <= T::epsilon() {
            return Err(Error::EigenFailure("left and right eigenvectors are orthogonal".into()));
        }
        ell.iter_mut().for_each(|x| *x = *x / c);

        // Two-sided Rayleigh quotient: second-order accurate in the vector errors.
        let av = a.mul_vec(&v);
        let lambda = dot(&ell, &av);

        let out = Self { lambda, v, ell, gap, mu, a, eigenvalues: eig };
        out.check_residuals(opts.tol_eig)?;
        Ok(out)
    }

    fn check_residuals(&self, tol: T) -> Result<()> {
        let scale = self.a.frobenius_norm().max(T::one());
        let av = self.a.mul_vec(&self.v);
        let mut atl = vec![T::zero(); self.dim()];
        self.a.tr_mul_vec_into(&self.ell, &mut atl);
        let rv = av.iter().zip(&self.v).map(|(&p, &q)| (p - self.lambda * q).powi(2)).sum::<T>().sqrt();
        let rl = atl.iter().zip(&self.ell).map(|(&p, &q)| (p - self.lambda * q).powi(2)).sum::<T>().sqrt()
            / crate::linalg::norm(&self.ell).max(T::one());
        if rv > tol * scale || rl > tol * scale {
            return Err(Error::EigenFailure(format!(
                "eigenvector residuals too large: right {:e}, left {:e}",
                rv.to_f64_lossy(),
                rl.to_f64_lossy()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// `<ell, x>`: coordinate of `x` along `v` in the splitting `span{v} ⊕ L`.
    #[inline]
    pub fn coord_v(&self, x: &[T]) -> T {
        dot(&self.ell, x)
    }

    pub fn project_v(&self, x: &[T]) -> Vec<T> {
        let c = self.coord_v(x);
        self.v.iter().map(|&vi| c * vi).collect()
    }

    pub fn project_l(&self, x: &[T]) -> Vec<T> {
        let c = self.coord_v(x);
        x.iter().zip(&self.v).map(|(&xi, &vi)| xi - c * vi).collect()
    }

    /// `|ℓ|`; equals 1 exactly when `v` is orthogonal to `L`.
    pub fn ell_norm(&self) -> T {
        crate::linalg::norm(&self.ell)
    }
}

/// Spectral data of `A = J(0)` for a model already centred at its equilibrium.
pub fn spectral_data<T: Real>(model: &VectorFieldModel<T>, opts: SpectralOptions<T>) -> Result<SpectralData<T>> {
    let zero = vec![T::zero(); model.dim()];
    SpectralData::from_matrix(model.jacobian(&zero), opts)
}

fn eigenvalues_f64<T: Real>(a: &Matrix<T>) -> Result<Vec<(f64, f64)>> {
    let d = a.rows();
    let data: Vec<f64> = a.as_slice().iter().map(|x| x.to_f64_lossy()).collect();
    let m = DMatrix::from_row_slice(d, d, &data);
    let schur = Schur::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure("real Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect())
}

/// Eigenvector for the eigenvalue near `shift` by shifted inverse iteration.
fn inverse_iteration<T: Real>(a: &Matrix<T>, shift: T, scale: T) -> Result<Vec<T>> {
    let d = a.rows();
    let mut offsets = [1e-10, 1e-8, 1e-6].into_iter().map(|o| T::lit(o).max(T::epsilon() * T::lit(64.0)));
    loop {
        let Some(off) = offsets.next() else {
            return Err(Error::EigenFailure("inverse iteration failed".into()));
        };
        let s = shift + off * scale.max(T::one());
        let mut m = a.clone();
        for i in 0..d {
            m[(i, i)] = m[(i, i)] - s;
        }
        let mut x: Vec<T> = (0..d).map(|i| T::one() + T::lit(0.37 * i as f64)).collect();
        normalize(&mut x);
        let mut ok = true;
        for _ in 0..6 {
            match m.solve(&x) {
                Ok(y) if y.iter().all(|v| v.is_finite()) => {
                    x = y;
                    if normalize(&mut x).is_zero() {
                        ok = false;
                        break;
                    }
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
    }
}
