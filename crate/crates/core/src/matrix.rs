//! Small dense row-major matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Vector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidSpec("matrix must be nonempty".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::InvalidSpec(format!(
                "ragged matrix: row {i} has {} entries, expected {n_cols}",
                rows[i].len()
            )));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("matrix entries must be finite".into()));
        }
        Ok(Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::diag(&vec![1.0; d])
    }

    pub fn diag(entries: &[f64]) -> Self {
        let d = entries.len();
        let mut m = Self::zeros(d, d);
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * d + i] = e;
        }
        m
    }

    /// Rotation by `angle` in the coordinate plane `(i, j)` of `R^d`.
    pub fn rotation(d: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut m = Self::identity(d);
        let (s, c) = angle.sin_cos();
        m.data[i * d + i] = c;
        m.data[i * d + j] = -s;
        m.data[j * d + i] = s;
        m.data[j * d + j] = c;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn mul_slice(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Aᵀ x`.
    pub fn tmul_slice(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn mul_vector(&self, x: &Vector) -> Result<Vector> {
        if x.dim() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.dim(),
            });
        }
        Ok(Vector::from_raw(self.mul_slice(x.as_slice())))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Matrix, b: f64) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// Stacks `blocks` vertically. All blocks must share a column count.
    pub fn vstack(blocks: &[Matrix]) -> Result<Matrix> {
        let cols = blocks
            .first()
            .map(|b| b.cols)
            .ok_or_else(|| Error::InvalidSpec("nothing to stack".into()))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: b.cols,
                });
            }
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Orthonormal basis of `{x : A x = 0}`.
    ///
    /// Gauss-Jordan elimination with partial pivoting; a column whose best
    /// remaining pivot has magnitude `<= pivot_tol` is treated as free. The
    /// raw null vectors are then orthonormalized with two passes of modified
    /// Gram-Schmidt.
    pub fn null_space(&self, pivot_tol: f64) -> Vec<Vec<f64>> {
        let (m, n) = (self.rows, self.cols);
        let mut a = self.data.clone();
        let mut pivot_cols = Vec::new();
        let mut r = 0;
        for c in 0..n {
            if r == m {
                break;
            }
            let (best, mag) = (r..m)
                .map(|i| (i, a[i * n + c].abs()))
                .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if mag <= pivot_tol {
                continue;
            }
            if best != r {
                for j in 0..n {
                    a.swap(best * n + j, r * n + j);
                }
            }
            let p = a[r * n + c];
            for j in 0..n {
                a[r * n + j] /= p;
            }
            for i in 0..m {
                if i == r {
                    continue;
                }
                let factor = a[i * n + c];
                if factor != 0.0 {
                    for j in 0..n {
                        a[i * n + j] -= factor * a[r * n + j];
                    }
                }
            }
            pivot_cols.push(c);
            r += 1;
        }

        let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
        let raw: Vec<Vec<f64>> = free
            .iter()
            .map(|&f| {
                let mut x = vec![0.0; n];
                x[f] = 1.0;
                for (row, &pc) in pivot_cols.iter().enumerate() {
                    x[pc] = -a[row * n + f];
                }
                x
            })
            .collect();
        orthonormalize(raw)
    }

    /// Solves the square system `A x = b` by Gaussian elimination with
    /// partial pivoting. Returns `None` when a pivot vanishes exactly.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        assert!(self.is_square() && b.len() == self.rows);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for c in 0..n {
            let best = (c..n).max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))?;
            if a[best * n + c] == 0.0 {
                return None;
            }
            if best != c {
                for j in 0..n {
                    a.swap(best * n + j, c * n + j);
                }
                x.swap(best, c);
            }
            for i in c + 1..n {
                let factor = a[i * n + c] / a[c * n + c];
                if factor != 0.0 {
                    for j in c..n {
                        a[i * n + j] -= factor * a[c * n + j];
                    }
                    x[i] -= factor * x[c];
                }
            }
        }
        for c in (0..n).rev() {
            let s: f64 = (c + 1..n).map(|j| a[c * n + j] * x[j]).sum();
            x[c] = (x[c] - s) / a[c * n + c];
        }
        Some(x)
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormalize(vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= p * bi;
                }
            }
        }
        let n = dot(&v, &v).sqrt();
        // raw null vectors are independent (distinct unit entries in free
        // columns), so this only trips on catastrophic cancellation
        if n > f64::EPSILON {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}
