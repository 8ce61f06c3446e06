//! Compressed sparse row matrices and the solvers built on them.

mod eigen;
mod solve;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

pub use eigen::{lanczos_extreme, smallest_generalized_eigenpair, EigenPair, LanczosOptions};
pub use solve::{solve_saddle, solve_spd, SaddleOptions, SaddleSolution, SpdSolver};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("not converged after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite")]
    Indefinite,
    #[error("saddle point system is singular (Schur complement curvature {curvature:.3e})")]
    SingularSaddle { curvature: f64 },
    #[error("matrix market: {0}")]
    MatrixMarket(String),
}

/// Row-compressed sparse matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given sparsity pattern (`rows[i]` lists the
    /// columns of row `i` in any order, possibly repeated).
    pub fn from_pattern(nrows: usize, ncols: usize, mut rows: Vec<Vec<usize>>) -> CsrMatrix {
        assert_eq!(rows.len(), nrows);
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            debug_assert!(r.last().is_none_or(|&c| c < ncols));
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Sums duplicate entries in the order given.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> CsrMatrix {
        let mut rows = vec![Vec::new(); nrows];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = CsrMatrix::from_pattern(nrows, ncols, rows);
        for &(i, j, v) in triplets {
            m.add_to(i, j, v);
        }
        m
    }

    pub fn from_dense(d: &DMatrix<f64>) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)] != 0.0 {
                    t.push((i, j, d[(i, j)]));
                }
            }
        }
        CsrMatrix::from_triplets(d.nrows(), d.ncols(), &t)
    }

    pub fn identity(n: usize) -> CsrMatrix {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        CsrMatrix::from_triplets(n, n, &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries `(column, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    /// Adds `v` to an entry of the pattern; panics outside the pattern.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let k = self.position(i, j).unwrap_or_else(|| panic!("({i}, {j}) is not in the pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.ncols {
            return Err(LinalgError::ShapeMismatch {
                expected: self.ncols,
                got: x.len(),
            });
        }
        Ok((0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect())
    }

    /// `y = Mᵀ x`
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.nrows {
            return Err(LinalgError::ShapeMismatch {
                expected: self.nrows,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push((j, i, v));
            }
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Submatrix on the given (ascending) row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in rows {
            for (j, v) in self.row(i) {
                if col_map[j] != usize::MAX {
                    col_idx.push(col_map[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: cols.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self + s * other` for matrices of equal shape.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let rows = (0..self.nrows)
            .map(|i| self.row(i).map(|e| e.0).chain(other.row(i).map(|e| e.0)).collect())
            .collect();
        let mut m = CsrMatrix::from_pattern(self.nrows, self.ncols, rows);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m.add_to(i, j, v);
            }
            for (j, v) in other.row(i) {
                m.add_to(i, j, s * v);
            }
        }
        m
    }

    /// Exact (bitwise) symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && (0..self.nrows).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Matrix Market coordinate format (general, real).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
            }
        }
        s
    }

    pub fn from_matrix_market(text: &str) -> Result<CsrMatrix, LinalgError> {
        let err = |m: &str| LinalgError::MatrixMarket(m.to_string());
        let mut lines = text.lines().filter(|l| !l.starts_with('%') && !l.trim().is_empty());
        let header: Vec<usize> = lines
            .next()
            .ok_or_else(|| err("missing size line"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err("bad size line")))
            .collect::<Result<_, _>>()?;
        let [nrows, ncols, nnz] = header[..] else {
            return Err(err("size line needs three integers"));
        };
        let mut t = Vec::with_capacity(nnz);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err("entry line needs three fields"));
            }
            let i: usize = f[0].parse().map_err(|_| err("bad row index"))?;
            let j: usize = f[1].parse().map_err(|_| err("bad column index"))?;
            let v: f64 = f[2].parse().map_err(|_| err("bad value"))?;
            if i == 0 || j == 0 || i > nrows || j > ncols {
                return Err(err("index out of range"));
            }
            t.push((i - 1, j - 1, v));
        }
        if t.len() != nnz {
            return Err(err("entry count does not match header"));
        }
        Ok(CsrMatrix::from_triplets(nrows, ncols, &t))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s * x`
pub(crate) fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}
