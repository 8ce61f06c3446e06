//! Smallest eigenpairs of symmetric pencils `S v = λ M v`.
//!
//! Small pencils are reduced to a standard dense problem; large ones go
//! through Lanczos with full reorthogonalisation on an operator that is
//! self-adjoint in the `M` inner product.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{axpy, dot, LinalgError};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    /// Normalised to `vᵀ M v = 1`.
    pub vector: Vec<f64>,
    /// `‖S v − λ M v‖ / ‖M v‖`, projected onto the complement of `M·deflate`.
    pub residual: f64,
}

/// Dense smallest eigenpair of `S v = λ M v` with `v` `M`-orthogonal to
/// every vector in `deflate`.
pub fn smallest_generalized_eigenpair(
    s: &DMatrix<f64>,
    m: &DMatrix<f64>,
    deflate: &[Vec<f64>],
) -> Result<EigenPair, LinalgError> {
    let n = s.nrows();
    if s.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(LinalgError::ShapeMismatch {
            expected: n,
            got: m.nrows(),
        });
    }
    // orthonormal basis Q of {v : dᵀ M v = 0 for all d in deflate}
    let q = if deflate.is_empty() {
        DMatrix::identity(n, n)
    } else {
        let d = DMatrix::from_columns(&deflate.iter().map(|v| DVector::from_column_slice(v)).collect::<Vec<_>>());
        let c = m * d;
        let ctc = c.transpose() * &c;
        let ctc_inv = ctc.try_inverse().ok_or(LinalgError::Indefinite)?;
        let p = DMatrix::identity(n, n) - &c * ctc_inv * c.transpose();
        let eig = SymmetricEigen::new(p);
        let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        DMatrix::from_columns(&keep.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>())
    };
    if q.ncols() == 0 {
        return Err(LinalgError::NotConverged {
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let sr = q.transpose() * s * &q;
    let mr = q.transpose() * m * &q;
    let chol = mr.cholesky().ok_or(LinalgError::Indefinite)?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(LinalgError::Indefinite)?;
    let mut c = &l_inv * sr * l_inv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let lambda = eig.eigenvalues[imin];
    let y = eig.eigenvectors.column(imin).into_owned();
    let mut v = &q * (l_inv.transpose() * y);
    let vm = (v.transpose() * m * &v)[(0, 0)].sqrt();
    v /= vm;
    let mv = m * &v;
    let r = s * &v - &mv * lambda;
    let residual = (q.transpose() * r).norm() / mv.norm();
    Ok(EigenPair {
        value: lambda,
        vector: v.as_slice().to_vec(),
        residual,
    })
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Krylov dimension per cycle.
    pub max_steps: usize,
    pub max_restarts: usize,
    /// Stop when the Ritz residual estimate is below `tol · |θ|`.
    pub tol: f64,
    /// Seek the largest rather than the smallest eigenvalue.
    pub largest: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_steps: 150,
            max_restarts: 30,
            tol: 1e-11,
            largest: false,
        }
    }
}

/// Extreme eigenpair of an operator `op` that is self-adjoint in the inner
/// product `⟨x, y⟩ = xᵀ M y`, restricted to the `M`-orthogonal complement of
/// `deflate`. The returned residual is the Ritz estimate `‖op v − θ v‖_M`.
pub fn lanczos_extreme(
    n: usize,
    op: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    m_apply: &dyn Fn(&[f64]) -> Vec<f64>,
    deflate: &[Vec<f64>],
    opts: &LanczosOptions,
) -> Result<EigenPair, LinalgError> {
    // M-orthonormal deflation basis
    let mut defl: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for d in deflate {
        let mut d = d.clone();
        for (e, me) in &defl {
            let c = dot(me, &d);
            axpy(-c, e, &mut d);
        }
        let md = m_apply(&d);
        let nd = dot(&d, &md).sqrt();
        if nd > 0.0 {
            defl.push((d.iter().map(|x| x / nd).collect(), md.iter().map(|x| x / nd).collect()));
        }
    }
    let project = |w: &mut Vec<f64>| {
        for (e, me) in &defl {
            let c = dot(me, w);
            axpy(-c, e, w);
        }
    };

    let mut start: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (1.7 * i as f64 + 0.3).sin()).collect();
    let mut best = EigenPair {
        value: f64::NAN,
        vector: Vec::new(),
        residual: f64::INFINITY,
    };
    let mut total = 0;
    for _ in 0..=opts.max_restarts {
        project(&mut start);
        let ms = m_apply(&start);
        let ns = dot(&start, &ms).sqrt();
        if ns == 0.0 {
            break;
        }
        let mut qs: Vec<Vec<f64>> = vec![start.iter().map(|x| x / ns).collect()];
        let mut mqs: Vec<Vec<f64>> = vec![ms.iter().map(|x| x / ns).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let steps = opts.max_steps.min(n.saturating_sub(defl.len())).max(1);
        for j in 0..steps {
            total += 1;
            let mut w = op(&qs[j]);
            project(&mut w);
            alpha.push(dot(&mqs[j], &w));
            for _ in 0..2 {
                for i in 0..qs.len() {
                    let c = dot(&mqs[i], &w);
                    axpy(-c, &qs[i], &mut w);
                }
                project(&mut w);
            }
            let mw = m_apply(&w);
            let b = dot(&w, &mw).max(0.0).sqrt();

            let check = (j + 1) % 5 == 0 || j + 1 == steps || b <= 1e-14 * alpha.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if check {
                let k = alpha.len();
                let t = DMatrix::from_fn(k, k, |r, c| {
                    if r == c {
                        alpha[r]
                    } else if r + 1 == c {
                        beta[r]
                    } else if c + 1 == r {
                        beta[c]
                    } else {
                        0.0
                    }
                });
                let eig = SymmetricEigen::new(t);
                let pick = (0..k)
                    .max_by(|&a, &c| {
                        let (x, y) = (eig.eigenvalues[a], eig.eigenvalues[c]);
                        if opts.largest {
                            x.total_cmp(&y)
                        } else {
                            y.total_cmp(&x)
                        }
                    })
                    .expect("nonempty");
                let theta = eig.eigenvalues[pick];
                let y = eig.eigenvectors.column(pick);
                let estimate = b * y[k - 1].abs();
                if estimate < best.residual || j + 1 == steps {
                    let mut v = vec![0.0; n];
                    for i in 0..k {
                        axpy(y[i], &qs[i], &mut v);
                    }
                    let mv = m_apply(&v);
                    let nv = dot(&v, &mv).sqrt();
                    v.iter_mut().for_each(|x| *x /= nv);
                    best = EigenPair {
                        value: theta,
                        vector: v,
                        residual: estimate,
                    };
                }
                if estimate <= opts.tol * theta.abs().max(1e-300) || b <= 1e-300 {
                    return Ok(best);
                }
            }
            if j + 1 == steps || b == 0.0 {
                break;
            }
            beta.push(b);
            qs.push(w.iter().map(|x| x / b).collect());
            mqs.push(mw.iter().map(|x| x / b).collect());
        }
        start = best.vector.clone();
    }
    if best.residual <= opts.tol * best.value.abs().max(1e-300) * 10.0 {
        return Ok(best);
    }
    Err(LinalgError::NotConverged {
        iterations: total,
        residual: best.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pencil() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0]));
        let m = DMatrix::identity(2, 2);
        let e = smallest_generalized_eigenpair(&s, &m, &[]).unwrap();
        assert_eq!(e.value, 0.0);
        assert!((e.vector[0].abs() - 1.0).abs() < 1e-15);
        let e = smallest_generalized_eigenpair(&s, &m, &[vec![1.0, 0.0]]).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 60;
        let s = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0 + i as f64 * 0.1
            } else if i.abs_diff(j) == 1 {
                -0.7
            } else {
                0.0
            }
        });
        let mdiag: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let m = DMatrix::from_diagonal(&DVector::from_vec(mdiag.clone()));
        let dense = smallest_generalized_eigenpair(&s, &m, &[]).unwrap();
        let mut op = |x: &[f64]| -> Vec<f64> {
            let y = &s * DVector::from_column_slice(x);
            y.iter().zip(&mdiag).map(|(a, b)| a / b).collect()
        };
        let mapply = |x: &[f64]| -> Vec<f64> { x.iter().zip(&mdiag).map(|(a, b)| a * b).collect() };
        let it = lanczos_extreme(n, &mut op, &mapply, &[], &LanczosOptions::default()).unwrap();
        assert!((it.value - dense.value).abs() < 1e-10 * dense.value.abs());
        assert!(crate::linalg::norm(&it.vector) > 0.0);
    }
}
