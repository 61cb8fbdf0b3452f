//! Dense helpers for the GP code: a packed lower-triangular Cholesky factor
//! that can grow by whole blocks of rows, and a plain row-major matrix.

use std::fmt;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            assert_eq!(r.len(), m, "ragged rows");
            data.extend(r);
        }
        Matrix {
            rows: n,
            cols: m,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }
}

/// Returned when a pivot is not strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

impl fmt::Display for NotPositiveDefinite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "non-positive pivot {:e} at row {}", self.pivot, self.row)
    }
}

/// Lower-triangular Cholesky factor `L` of a symmetric positive-definite
/// matrix `A = L Lᵀ`, stored packed by rows (row `i` holds `i + 1` entries).
///
/// Rows are computed left to right with the same accumulation order whether
/// the factor is built in one go or extended block by block, so an extended
/// factor is bitwise identical to one computed from scratch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cholesky {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

impl Cholesky {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Factors a matrix given its lower triangle by rows: `rows[i]` holds
    /// `A[i][0..=i]`.
    pub fn factor(rows: &[Vec<f64>]) -> Result<Self, NotPositiveDefinite> {
        let mut chol = Self::empty();
        chol.extend(rows)?;
        Ok(chol)
    }

    /// Factors a full symmetric matrix (only the lower triangle is read).
    pub fn factor_matrix(a: &Matrix) -> Result<Self, NotPositiveDefinite> {
        assert_eq!(a.rows(), a.cols());
        let rows: Vec<Vec<f64>> = (0..a.rows()).map(|i| a.row(i)[..=i].to_vec()).collect();
        Self::factor(&rows)
    }

    /// Extends the factor of `A` to the factor of the bordered matrix
    /// `[[A, Bᵀ], [B, C]]`. Each entry of `new_rows` is one row of `[B, C]`
    /// truncated at the diagonal, so row `k` has length `dim + k + 1`.
    ///
    /// On failure `self` is left unchanged.
    pub fn extend(&mut self, new_rows: &[Vec<f64>]) -> Result<(), NotPositiveDefinite> {
        let old_len = self.packed.len();
        let old_dim = self.dim;
        self.packed.reserve(new_rows.iter().map(Vec::len).sum());
        for (k, a) in new_rows.iter().enumerate() {
            let i = old_dim + k;
            assert_eq!(a.len(), i + 1, "row {i} must have {} entries", i + 1);
            let start = self.packed.len();
            for j in 0..i {
                let lj = &self.packed[row_start(j)..row_start(j) + j + 1];
                let li = &self.packed[start..start + j];
                let v = (a[j] - dot(li, &lj[..j])) / lj[j];
                self.packed.push(v);
            }
            let li = &self.packed[start..start + i];
            let pivot = a[i] - dot(li, li);
            if pivot <= 0.0 || !pivot.is_finite() {
                self.packed.truncate(old_len);
                self.dim = old_dim;
                return Err(NotPositiveDefinite { row: i, pivot });
            }
            self.packed.push(pivot.sqrt());
            self.dim = i + 1;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.packed[row_start(i)..row_start(i) + i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.packed[row_start(i) + j]
        }
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.dim);
        for i in 0..self.dim {
            let r = self.row(i);
            let s = dot(&r[..i], &b[..i]);
            b[i] = (b[i] - s) / r[i];
        }
    }

    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut y = b.to_vec();
        self.solve_lower_in_place(&mut y);
        y
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut [f64]) {
        assert_eq!(y.len(), self.dim);
        for i in (0..self.dim).rev() {
            let r = self.row(i);
            y[i] /= r[i];
            let xi = y[i];
            for (yk, lik) in y[..i].iter_mut().zip(&r[..i]) {
                *yk -= lik * xi;
            }
        }
    }

    /// Solves `A x = b` with `A = L Lᵀ`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.row(i)[i].ln()).sum::<f64>()
    }

    /// Returns `L Lᵀ` as a dense matrix.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&self.row(i)[..=j], &self.row(j)[..=j]);
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    /// Multiplies `L` by a vector.
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), &z[..=i])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Matrix {
        // A = B Bᵀ + n I for a fixed pseudo-random B.
        let b: Vec<f64> = (0..n * n).map(|k| ((k * 7919 % 101) as f64 / 50.0) - 1.0).collect();
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s: f64 = (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum();
                if i == j {
                    s += n as f64;
                }
                a.set(i, j, s);
            }
        }
        a
    }

    #[test]
    fn factor_reconstructs() {
        let a = spd(9);
        let l = Cholesky::factor_matrix(&a).unwrap();
        let r = l.reconstruct();
        for (x, y) in a.as_slice().iter().zip(r.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn blocked_extension_is_bitwise_equal_to_full_factor() {
        let a = spd(12);
        let rows: Vec<Vec<f64>> = (0..12).map(|i| a.row(i)[..=i].to_vec()).collect();
        let full = Cholesky::factor(&rows).unwrap();
        let mut inc = Cholesky::empty();
        inc.extend(&rows[..3]).unwrap();
        inc.extend(&rows[3..4]).unwrap();
        inc.extend(&rows[4..12]).unwrap();
        assert_eq!(full, inc);
    }

    #[test]
    fn solve_and_log_det() {
        let a = spd(6);
        let l = Cholesky::factor_matrix(&a).unwrap();
        let b = [1.0, -2.0, 0.5, 3.0, 0.0, 1.5];
        let x = l.solve(&b);
        for i in 0..6 {
            let ax: f64 = (0..6).map(|j| a.get(i, j) * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-10);
        }
        let diag = Cholesky::factor_matrix(&Matrix::from_rows(vec![vec![2.0, 0.0], vec![0.0, 8.0]])).unwrap();
        assert!((diag.log_det() - 16f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn failed_extension_leaves_factor_untouched() {
        let mut l = Cholesky::factor(&[vec![1.0]]).unwrap();
        let before = l.clone();
        // [[1, 1], [1, 1]] is singular.
        let err = l.extend(&[vec![1.0, 1.0]]).unwrap_err();
        assert_eq!(err.row, 1);
        assert_eq!(l, before);
    }

    #[test]
    fn empty_factor() {
        let l = Cholesky::factor(&[]).unwrap();
        assert_eq!(l.dim(), 0);
        assert_eq!(l.log_det(), 0.0);
        assert!(l.solve(&[]).is_empty());
    }
}
