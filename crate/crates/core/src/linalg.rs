//! Dense spectral data for real symmetric blocks and a small row-major
//! complex matrix type.

use faer::{Mat, Side};
use num_complex::Complex64;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a real
/// symmetric matrix. Each eigenvector's largest-magnitude entry (first one on
/// ties) is positive.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Mat<f64>,
}

impl Spectrum {
    pub fn of_symmetric(h: &Mat<f64>, block: &'static str) -> Result<Self> {
        let n = h.nrows();
        if h.ncols() != n {
            return Err(Error::Dimension(format!("{block} block is {}x{}", n, h.ncols())));
        }
        let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen { block })?;
        let s = evd.S().column_vector();
        let values: Vec<f64> = (0..n).map(|i| s[i]).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigen { block });
        }
        let mut vectors = evd.U().to_owned();
        for c in 0..n {
            let mut best = 0;
            for r in 1..n {
                if vectors[(r, c)].abs() > vectors[(best, c)].abs() {
                    best = r;
                }
            }
            if vectors[(best, c)] < 0.0 {
                for r in 0..n {
                    vectors[(r, c)] = -vectors[(r, c)];
                }
            }
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `max |V^T V - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        let mut err = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - target).abs());
            }
        }
        err
    }

    /// `max |V diag(E) V^T - h|`.
    pub fn reconstruction_error(&self, h: &Mat<f64>) -> f64 {
        let n = self.dim();
        let scaled = Mat::<f64>::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        let r = scaled * self.vectors.transpose();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                err = err.max((r[(i, j)] - h[(i, j)]).abs());
            }
        }
        err
    }

    /// `exp(-i E_k t)` for every eigenvalue.
    pub fn phases(&self, t: f64) -> Vec<Complex64> {
        self.values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)).collect()
    }

    /// Entry `(row, col)` of `V exp(-i E t) V^T`, given precomputed phases.
    pub fn propagator_entry(&self, phases: &[Complex64], row: usize, col: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, p) in phases.iter().enumerate() {
            acc += p * (self.vectors[(row, k)] * self.vectors[(col, k)]);
        }
        acc
    }

    /// The full propagator `V exp(-i E t) V^T`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let n = self.dim();
        let phases = self.phases(t);
        let mut out = CMatrix::zeros(n, n);
        // Symmetric in (row, col): fill the upper triangle and mirror.
        for i in 0..n {
            for j in i..n {
                let v = self.propagator_entry(&phases, i, j);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// `V exp(-i E t) V^T c` for a (possibly sparse) complex vector `c`.
    pub fn apply(&self, t: f64, c: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let phases = self.phases(t);
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        for (m, &cm) in c.iter().enumerate() {
            if cm == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (k, wk) in w.iter_mut().enumerate() {
                *wk += cm * self.vectors[(m, k)];
            }
        }
        for (wk, p) in w.iter_mut().zip(&phases) {
            *wk *= p;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, wk) in w.iter().enumerate() {
                acc += wk * self.vectors[(i, k)];
            }
            *o = acc;
        }
        out
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    m.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        m
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}
