//! Dense row-major matrices and the handful of BLAS-3 style kernels the
//! solver and sketching engine are built on.

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self += s * other`; shapes must match.
    pub fn axpy_in_place(&mut self, s: f64, other: &Mat) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    /// Frobenius inner product `sum_ij self_ij * other_ij`.
    pub fn dot(&self, other: &Mat) -> f64 {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn trace(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// Copy the upper triangle onto the lower so the matrix is bit-for-bit
    /// symmetric.
    pub fn symmetrize_from_upper(&mut self) {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                self.data[j * n + i] = self.data[i * n + j];
            }
        }
    }

    /// Replace the matrix by `(M + M^T) / 2`, assigning each mirrored pair the
    /// same value so the result is exactly symmetric.
    pub fn symmetrize_average(&mut self) {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }
}

/// `C = A * B`.
pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows, "mat_mul shape mismatch");
    let mut c = Mat::zeros(a.rows, b.cols);
    gemm_into(1.0, a, false, b, false, 0.0, &mut c);
    c
}

/// `C = A * B^T`.
pub fn mat_mul_nt(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.cols, "mat_mul_nt shape mismatch");
    let mut c = Mat::zeros(a.rows, b.rows);
    gemm_into(1.0, a, false, b, true, 0.0, &mut c);
    c
}

/// `C = A^T * B`.
pub fn mat_mul_tn(a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.rows, b.rows, "mat_mul_tn shape mismatch");
    let mut c = Mat::zeros(a.cols, b.cols);
    gemm_into(1.0, a, true, b, false, 0.0, &mut c);
    c
}

/// `C = alpha * op(A) * op(B) + beta * C` with `op` an optional transpose.
pub fn gemm_into(alpha: f64, a: &Mat, ta: bool, b: &Mat, tb: bool, beta: f64, c: &mut Mat) {
    let (am, ak) = if ta {
        (a.cols, a.rows)
    } else {
        (a.rows, a.cols)
    };
    let (bk, bn) = if tb {
        (b.cols, b.rows)
    } else {
        (b.rows, b.cols)
    };
    assert_eq!(ak, bk, "gemm inner dimension mismatch");
    assert_eq!(c.rows, am, "gemm output row mismatch");
    assert_eq!(c.cols, bn, "gemm output col mismatch");
    let (rsa, csa) = if ta {
        (1isize, a.cols as isize)
    } else {
        (a.cols as isize, 1isize)
    };
    let (rsb, csb) = if tb {
        (1isize, b.cols as isize)
    } else {
        (b.cols as isize, 1isize)
    };
    unsafe {
        matrixmultiply::dgemm(
            am,
            ak,
            bn,
            alpha,
            a.data.as_ptr(),
            rsa,
            csa,
            b.data.as_ptr(),
            rsb,
            csb,
            beta,
            c.data.as_mut_ptr(),
            c.cols as isize,
            1,
        );
    }
}

/// `y = M * x`.
pub fn mat_vec(m: &Mat, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.cols, x.len(), "mat_vec shape mismatch");
    let mut y = vec![0.0; m.rows];
    for i in 0..m.rows {
        let row = m.row(i);
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x.iter()) {
            acc += a * b;
        }
        y[i] = acc;
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cholesky factorization `M = L L^T` of a symmetric positive definite matrix.
/// Returns the lower factor, or `None` when a pivot drops below `eps`.
pub fn cholesky(m: &Mat, eps: f64) -> Option<Mat> {
    debug_assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            let v = l.get(j, k);
            d -= v * v;
        }
        if d.is_nan() || d <= eps {
            return None;
        }
        let dj = d.sqrt();
        l.set(j, j, dj);
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / dj);
        }
    }
    Some(l)
}

/// Solve `L x = b` in place for lower-triangular `L`.
pub fn solve_lower(l: &Mat, b: &mut [f64]) {
    let n = l.rows;
    for i in 0..n {
        let mut s = b[i];
        let row = l.row(i);
        for k in 0..i {
            s -= row[k] * b[k];
        }
        b[i] = s / row[i];
    }
}

/// Solve `L^T x = b` in place for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Mat, b: &mut [f64]) {
    let n = l.rows;
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l.get(k, i) * b[k];
        }
        b[i] = s / l.get(i, i);
    }
}

/// Compute `L^{ -1} B L^{-T}` for lower-triangular `L` and square `B`.
///
/// Used for the positive-definite line search: the minimum eigenvalue of the
/// result bounds the feasible step along `B` from the point factored by `L`.
pub fn two_sided_lower_solve(l: &Mat, b: &Mat) -> Mat {
    let n = l.rows;
    debug_assert_eq!(b.rows, n);
    debug_assert_eq!(b.cols, n);
    // First solve L Y = B column-wise: work on B^T rows for cache friendliness.
    let mut y = b.clone();
    // L Y = B  => for each column c of Y.
    for c in 0..n {
        for i in 0..n {
            let mut s = y.get(i, c);
            for k in 0..i {
                s -= l.get(i, k) * y.get(k, c);
            }
            y.set(i, c, s / l.get(i, i));
        }
    }
    // Then Z L^T = Y  => L Z^T = Y^T; solve rows of Z.
    let mut z = y;
    for r in 0..n {
        for j in 0..n {
            let mut s = z.get(r, j);
            for k in 0..j {
                s -= z.get(r, k) * l.get(j, k);
            }
            z.set(r, j, s / l.get(j, j));
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mat_mul_small() {
        let a = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Mat::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = mat_mul(&a, &b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
    }

    #[test]
    fn transposed_variants_agree() {
        let a = Mat::from_vec(2, 3, vec![1.0, -2.0, 0.5, 3.0, 1.0, -1.0]).unwrap();
        let b = Mat::from_vec(2, 3, vec![0.0, 1.0, 2.0, -1.0, 0.5, 1.5]).unwrap();
        let direct = mat_mul(&a, &b.transpose());
        let fused = mat_mul_nt(&a, &b);
        for (x, y) in direct.data().iter().zip(fused.data().iter()) {
            assert!((x - y).abs() < 1e-14);
        }
        let direct = mat_mul(&a.transpose(), &b);
        let fused = mat_mul_tn(&a, &b);
        for (x, y) in direct.data().iter().zip(fused.data().iter()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_roundtrip() {
        let m = Mat::from_vec(3, 3, vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]).unwrap();
        let l = cholesky(&m, 0.0).unwrap();
        let back = mat_mul_nt(&l, &l);
        for (x, y) in m.data().iter().zip(back.data().iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let mut b = vec![1.0, 2.0, 3.0];
        solve_lower(&l, &mut b);
        solve_lower_transpose(&l, &mut b);
        let check = mat_vec(&m, &b);
        assert!((check[0] - 1.0).abs() < 1e-10);
        assert!((check[1] - 2.0).abs() < 1e-10);
        assert!((check[2] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Mat::from_vec(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(cholesky(&m, 0.0).is_none());
    }

    #[test]
    fn two_sided_solve_matches_explicit_inverse() {
        let m = Mat::from_vec(2, 2, vec![4.0, 1.0, 1.0, 3.0]).unwrap();
        let l = cholesky(&m, 0.0).unwrap();
        let b = Mat::from_vec(2, 2, vec![1.0, 0.5, 0.5, 2.0]).unwrap();
        let z = two_sided_lower_solve(&l, &b);
        // Explicit: Linv = inv(L); Z = Linv * B * Linv^T.
        let linv = {
            let mut inv = Mat::identity(2);
            for c in 0..2 {
                let mut col = vec![inv.get(0, c), inv.get(1, c)];
                solve_lower(&l, &mut col);
                inv.set(0, c, col[0]);
                inv.set(1, c, col[1]);
            }
            inv
        };
        let expect = mat_mul_nt(&mat_mul(&linv, &b), &linv);
        for (x, y) in z.data().iter().zip(expect.data().iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
