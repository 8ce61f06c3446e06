//! SPD and saddle-point solves.
//!
//! SPD systems go through a sparse Cholesky factorisation with a few steps of
//! iterative refinement. Saddle-point systems
//!
//! ```text
//! [ A   B ] [u]   [f]
//! [ Bᵀ  0 ] [p] = [g]
//! ```
//!
//! are reduced to the pressure Schur complement `S = Bᵀ A⁻¹ B`, solved by
//! conjugate gradients preconditioned with a diagonal pressure mass matrix.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{MatMut, Side};

use super::{axpy, dot, norm, CsrMatrix, LinalgError};

/// Cholesky factorisation of a symmetric positive definite matrix.
pub struct SpdSolver {
    matrix: CsrMatrix,
    factor: Option<Llt<usize, f64>>,
}

impl SpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<SpdSolver, LinalgError> {
        if a.nrows() != a.ncols() {
            return Err(LinalgError::ShapeMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        if n == 0 {
            return Ok(SpdSolver {
                matrix: a.clone(),
                factor: None,
            });
        }
        if a.diagonal().iter().any(|&d| d <= 0.0) {
            return Err(LinalgError::Indefinite);
        }
        // CSR of a symmetric matrix is its CSC; only the lower part is read.
        let symbolic = SymbolicSparseColMatRef::new_checked(n, n, a.row_ptr(), None, a.col_idx());
        let view = SparseColMatRef::new(symbolic, a.values());
        let factor = view.sp_cholesky(Side::Lower).map_err(|_| LinalgError::Indefinite)?;
        Ok(SpdSolver {
            matrix: a.clone(),
            factor: Some(factor),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    fn apply_factor(&self, b: &mut [f64]) {
        if let Some(f) = &self.factor {
            let n = b.len();
            f.solve_in_place(MatMut::from_column_major_slice_mut(b, n, 1));
        }
    }

    /// Solves `A x = b` with up to three refinement steps.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.apply_factor(&mut x);
        let bn = norm(b);
        for _ in 0..3 {
            let ax = self.matrix.matvec(&x).expect("square");
            let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if norm(&r) <= 1e-15 * bn {
                break;
            }
            self.apply_factor(&mut r);
            axpy(1.0, &r, &mut x);
        }
        x
    }

    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matrix.matvec(x).expect("square");
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let bn = norm(b);
        if bn == 0.0 {
            norm(&r)
        } else {
            norm(&r) / bn
        }
    }
}

/// Solves `A x = b` for SPD `A` with `‖Ax - b‖ ≤ tol ‖b‖`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.nrows() {
        return Err(LinalgError::ShapeMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let s = SpdSolver::new(a)?;
    let x = s.solve(b);
    let res = s.relative_residual(&x, b);
    if res > tol {
        return Err(LinalgError::NotConverged {
            iterations: 4,
            residual: res,
        });
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct SaddleOptions {
    /// Relative residual of the full block system.
    pub tol: f64,
    /// Constants are in the kernel of `B` (no Neumann boundary).
    pub pressure_nullspace: bool,
    /// Diagonal of the pressure mass matrix (cell volumes).
    pub pressure_weights: Vec<f64>,
    pub max_iterations: usize,
}

impl SaddleOptions {
    pub fn new(pressure_weights: Vec<f64>, pressure_nullspace: bool) -> SaddleOptions {
        SaddleOptions {
            tol: 1e-10,
            pressure_nullspace,
            pressure_weights,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub iterations: usize,
    /// `‖residual‖ / ‖(f, g)‖` of the block system.
    pub residual: f64,
}

/// Solves the saddle-point system given a factorisation of `A`.
///
/// With `pressure_nullspace`, the component of `g` along constants is
/// dropped (it is not in the range of `Bᵀ`) and the returned pressure has
/// zero weighted mean.
pub fn solve_saddle(
    a: &SpdSolver,
    b: &CsrMatrix,
    f: &[f64],
    g: &[f64],
    opts: &SaddleOptions,
) -> Result<SaddleSolution, LinalgError> {
    let (nu, np) = (b.nrows(), b.ncols());
    for (expected, got) in [(a.dim(), nu), (nu, f.len()), (np, g.len()), (np, opts.pressure_weights.len())] {
        if expected != got {
            return Err(LinalgError::ShapeMismatch { expected, got });
        }
    }
    let w = &opts.pressure_weights;
    let total_w: f64 = w.iter().sum();
    // Euclidean projection onto the complement of constants (range of S)
    let project = |v: &mut [f64]| {
        if opts.pressure_nullspace && !v.is_empty() {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        }
    };
    // preconditioner M⁻¹ restricted to the complement: M⁻¹ r − 1 (1ᵀr)/W
    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut z: Vec<f64> = r.iter().zip(w).map(|(ri, wi)| ri / wi).collect();
        if opts.pressure_nullspace {
            let s = r.iter().sum::<f64>() / total_w;
            z.iter_mut().for_each(|x| *x -= s);
        }
        z
    };
    let schur = |p: &[f64]| -> Vec<f64> {
        let bp = b.matvec(p).expect("shape checked");
        let y = a.solve(&bp);
        b.matvec_transpose(&y).expect("shape checked")
    };

    let mut g_eff = g.to_vec();
    project(&mut g_eff);
    let a_inv_f = a.solve(f);
    let mut rhs = b.matvec_transpose(&a_inv_f).expect("shape checked");
    axpy(-1.0, &g_eff, &mut rhs);
    project(&mut rhs);

    let mut p = vec![0.0; np];
    let rhs_norm = norm(&rhs);
    let mut iterations = 0;
    if np > 0 && rhs_norm > 0.0 {
        let mut r = rhs.clone();
        let mut z = precondition(&r);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        let target = 1e-3 * opts.tol * rhs_norm;
        let mut curvature_scale = 0.0f64;
        loop {
            if norm(&r) <= target {
                break;
            }
            if iterations >= opts.max_iterations {
                return Err(LinalgError::NotConverged {
                    iterations,
                    residual: norm(&r) / rhs_norm,
                });
            }
            iterations += 1;
            let mut sd = schur(&d);
            project(&mut sd);
            let dsd = dot(&d, &sd);
            let dmd: f64 = d.iter().zip(w).map(|(x, wi)| wi * x * x).sum();
            let curvature = dsd / dmd;
            curvature_scale = curvature_scale.max(curvature);
            if !(curvature > 1e-13 * curvature_scale.max(1e-300)) {
                return Err(LinalgError::SingularSaddle { curvature });
            }
            let alpha = rz / dsd;
            axpy(alpha, &d, &mut p);
            axpy(-alpha, &sd, &mut r);
            z = precondition(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for (di, zi) in d.iter_mut().zip(&z) {
                *di = zi + beta * *di;
            }
        }
    }
    if opts.pressure_nullspace && total_w > 0.0 {
        let mean = p.iter().zip(w).map(|(x, wi)| x * wi).sum::<f64>() / total_w;
        p.iter_mut().for_each(|x| *x -= mean);
    }
    let mut rhs_u = f.to_vec();
    axpy(-1.0, &b.matvec(&p).expect("shape checked"), &mut rhs_u);
    let u = a.solve(&rhs_u);

    let mut r1 = a.matrix().matvec(&u).expect("square");
    axpy(1.0, &b.matvec(&p).expect("shape checked"), &mut r1);
    axpy(-1.0, f, &mut r1);
    let mut r2 = b.matvec_transpose(&u).expect("shape checked");
    axpy(-1.0, &g_eff, &mut r2);
    let scale = (dot(f, f) + dot(&g_eff, &g_eff)).sqrt();
    let res_abs = (dot(&r1, &r1) + dot(&r2, &r2)).sqrt();
    let residual = if scale > 0.0 { res_abs / scale } else { res_abs };
    if residual > opts.tol {
        return Err(LinalgError::NotConverged { iterations, residual });
    }
    Ok(SaddleSolution {
        u,
        p,
        iterations,
        residual,
    })
}
