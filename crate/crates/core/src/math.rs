//! Dense real vectors and matrices.
//!
//! Just enough linear algebra for back-propagation and the BFGS rank-two
//! updates. Every value is checked for finiteness when it is built, so a
//! diverging computation surfaces as a [`MathError::NonFinite`] at the point
//! where the bad value first appears.

use std::ops::Index;

use thiserror::Error;

/// Relative tolerance used to decide whether a square matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MathError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("empty vector")]
    Empty,
    #[error("matrix data has {found} elements, expected {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        found: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
}

fn check_finite(values: &[f64]) -> Result<(), MathError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(MathError::NonFinite { index }),
        None => Ok(()),
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), MathError> {
    if expected == found {
        Ok(())
    } else {
        Err(MathError::DimensionMismatch { expected, found })
    }
}

/// A non-empty vector of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(values: Vec<f64>) -> Result<Self, MathError> {
        if values.is_empty() {
            return Err(MathError::Empty);
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    /// # Panics
    /// Panics if `len == 0`.
    pub fn zeros(len: usize) -> Self {
        assert!(len > 0, "RealVector must have at least one element");
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn scale(&self, factor: f64) -> Result<Self, MathError> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Result<Self, MathError> {
        check_len(self.len(), other.len())?;
        Self::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }

    /// `self - other`.
    pub fn sub(&self, other: &Self) -> Result<Self, MathError> {
        self.add_scaled(-1.0, other)
    }
}

impl Index<usize> for RealVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for RealVector {
    type Error = MathError;

    fn try_from(values: Vec<f64>) -> Result<Self, MathError> {
        Self::new(values)
    }
}

/// Row-major dense matrix of finite values.
///
/// Square matrices are flagged symmetric at construction when every pair
/// satisfies `|a_ij - a_ji| <= 1e-12 * max(1, |a_ij|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    symmetric: bool,
}

impl RealMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MathError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(MathError::BadShape {
                rows,
                cols,
                found: data.len(),
            });
        }
        check_finite(&data)?;
        let mut m = Self {
            rows,
            cols,
            data,
            symmetric: false,
        };
        m.symmetric = m.rows == m.cols && m.max_asymmetry_rel() <= SYMMETRY_TOL;
        Ok(m)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, MathError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "identity dimension must be positive");
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
            symmetric: true,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
            symmetric: rows == cols,
        }
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

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
            symmetric: self.symmetric,
        }
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|` over all pairs.
    ///
    /// # Panics
    /// Panics on a non-square matrix.
    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn max_asymmetry_rel(&self) -> f64 {
        let n = self.rows;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (self.get(i, j), self.get(j, i));
                worst = worst.max((a - b).abs() / 1.0_f64.max(a.abs()));
            }
        }
        worst
    }

    /// Replaces the matrix with `(M + Mᵀ) / 2`, which is exactly symmetric.
    pub fn symmetrize(&mut self) -> Result<(), MathError> {
        if !self.is_square() {
            return Err(MathError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
        self.symmetric = true;
        Ok(())
    }

    pub fn scale(&self, factor: f64) -> Result<Self, MathError> {
        Self::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Result<Self, MathError> {
        check_len(self.rows, other.rows)?;
        check_len(self.cols, other.cols)?;
        Self::new(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        )
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, MathError> {
        check_len(self.cols, other.rows)?;
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let out = &mut data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Self::new(self.rows, other.cols, data)
    }
}

/// Inner product `Σ aᵢ·bᵢ`.
pub fn dot(a: &RealVector, b: &RealVector) -> Result<f64, MathError> {
    check_len(a.len(), b.len())?;
    Ok(dot_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn matvec(m: &RealMatrix, v: &RealVector) -> Result<RealVector, MathError> {
    check_len(m.cols, v.len())?;
    RealVector::new(
        (0..m.rows)
            .map(|i| dot_slices(m.row(i), v.as_slice()))
            .collect(),
    )
}

/// `a bᵀ`, shape `a.len() x b.len()`.
pub fn outer(a: &RealVector, b: &RealVector) -> RealMatrix {
    let mut data = Vec::with_capacity(a.len() * b.len());
    for &ai in a.iter() {
        data.extend(b.iter().map(|&bj| ai * bj));
    }
    // Products of finite values can still overflow.
    RealMatrix::new(a.len(), b.len(), data).unwrap_or_else(|_| {
        panic!("outer product overflowed")
    })
}

pub fn norm2(v: &RealVector) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cholesky-style test for symmetric positive definiteness: every pivot
/// must exceed `tol`.
pub fn is_spd(m: &RealMatrix, tol: f64) -> Result<bool, MathError> {
    if !m.is_square() {
        return Err(MathError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if !m.is_symmetric() {
        return Err(MathError::NotSymmetric);
    }
    let n = m.rows;
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l[j * n + k] * l[j * n + k];
        }
        if !(pivot > tol) {
            return Ok(false);
        }
        let d = pivot.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / d;
        }
    }
    Ok(true)
}
