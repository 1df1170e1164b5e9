//! Small dense linear algebra on slices. Dimensions are tiny (d <= 10),
//! so everything is row-major `Vec<T>` without blocking.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data: data.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `out = self * x`
    pub fn mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = dot(self.row(i), x);
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// `out = selfᵀ * x`
    #[allow(clippy::needless_range_loop)]
    pub fn tr_mul_vec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.rows);
        out.iter_mut().for_each(|o| *o = T::zero());
        for i in 0..self.rows {
            let xi = x[i];
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * xi;
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Spectral norm via power iteration on `AᵀA`.
    pub fn operator_norm(&self) -> T {
        if self.data.iter().all(|x| x.is_zero()) {
            return T::zero();
        }
        // Deterministic, non-degenerate start vector.
        let mut x: Vec<T> = (0..self.cols).map(|i| T::one() + T::lit(0.1 * i as f64)).collect();
        normalize(&mut x);
        let mut ax = vec![T::zero(); self.rows];
        let mut sigma = T::zero();
        for _ in 0..500 {
            self.mul_vec_into(&x, &mut ax);
            self.tr_mul_vec_into(&ax, &mut x);
            let n = norm(&x);
            if n.is_zero() {
                return T::zero();
            }
            x.iter_mut().for_each(|v| *v = *v / n);
            let next = n.sqrt();
            if (next - sigma).abs() <= T::lit(1e-14) * next {
                return next;
            }
            sigma = next;
        }
        sigma
    }

    /// Solve `self * x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = self.max_abs().max(T::min_positive_value());
        for col in 0..n {
            let (piv, pmax) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax <= T::epsilon() * T::lit(1e-4) * scale || !pmax.is_finite() {
                return Err(Error::SingularMatrix);
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                b.swap(col, piv);
            }
            let p = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] = a[r * n + j] - f * a[col * n + j];
                }
                b[r] = b[r] - f * b[col];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s = s - a[i * n + j] * b[j];
            }
            b[i] = s / a[i * n + i];
        }
        Ok(b)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn normalize<T: Real>(a: &mut [T]) -> T {
    let n = norm(a);
    if n > T::zero() {
        a.iter_mut().for_each(|x| *x = *x / n);
    }
    n
}

pub fn distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y)).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

pub fn scaled<T: Real>(alpha: T, x: &[T]) -> Vec<T> {
    x.iter().map(|&v| alpha * v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_pivots() {
        let a: Matrix<f64> = Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]);
        let x = a.solve(&[1.0, 8.0]).unwrap();
        assert!((x[0] - 2.5).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(a.solve(&[1.0, 1.0]), Err(Error::SingularMatrix)));
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -5.0]]);
        assert!((a.operator_norm() - 5.0f64).abs() < 1e-10);
        let b = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        // sqrt of largest eigenvalue of [[1,1],[1,2]] = golden ratio
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((b.operator_norm() - phi).abs() < 1e-10);
    }
}
