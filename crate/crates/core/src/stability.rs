//! Discrete Korn and inf-sup constants, the two instability counterexamples
//! and per-solution diagnostics.
//!
//! Constants are computed as
//!
//! * Korn: `β = min ‖ε_h v‖ / ‖v‖_{1,h}` over free velocity DOFs,
//! * inf-sup: `β = min_q sup_v b_h(v, q) / (‖∇_h v‖ ‖q‖)` over P0 pressures,
//!   mean-free when there is no Neumann boundary.
//!
//! Small problems use singular values of factored operators, which resolve
//! exact zeros to roundoff instead of its square root; mid-size problems a
//! dense generalised eigensolve; large ones Lanczos.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{self, Gram};
use crate::geometry::Point;
use crate::linalg::{self, CsrMatrix, LanczosOptions, LinalgError, SpdSolver};
use crate::mesh::{builtin, Mesh, LOCAL_FACES};
use crate::quadrature;
use crate::spaces::{SpaceKind, VelocityKind, VelocitySpace};

/// Constants at or below this are reported as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-8;

/// Free-DOF counts up to which the singular value route is used.
const SVD_LIMIT: usize = 600;
/// Sizes up to which dense eigensolves are used.
const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("the space has no free velocity DOFs")]
    NoFreeDofs,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("assertion failed: {0}")]
    AssertionFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Degenerate,
}

impl Verdict {
    pub fn of(constant: f64) -> Verdict {
        if constant <= DEGENERATE_TOL {
            Verdict::Degenerate
        } else {
            Verdict::Stable
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub space: String,
    pub level: Option<usize>,
    pub constant: f64,
    pub verdict: Verdict,
    /// Relative residual of the eigenpair behind the constant.
    pub residual: f64,
    pub method: &'static str,
    /// Extremal vector: free velocity coefficients (Korn) or cell pressures
    /// (inf-sup).
    #[serde(skip)]
    pub vector: Vec<f64>,
}

fn free_dofs(space: &VelocitySpace) -> Vec<usize> {
    space
        .dirichlet_mask()
        .iter()
        .enumerate()
        .filter(|(_, &d)| !d)
        .map(|(i, _)| i)
        .collect()
}

fn smallest_singular(c: DMatrix<f64>) -> (f64, DVector<f64>, Vec<f64>) {
    let (rows, cols) = c.shape();
    let c = if rows < cols { c.resize_vertically(cols, 0.0) } else { c };
    let svd = c.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (k, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let mut all: Vec<f64> = svd.singular_values.iter().copied().collect();
    all.sort_by(f64::total_cmp);
    (sigma, v_t.row(k).transpose(), all)
}

/// Pencil residual `‖S v − λ M v‖ / ‖M v‖` for sparse `S`, `M`.
fn pencil_residual(s: &CsrMatrix, m: &CsrMatrix, v: &[f64], lambda: f64) -> f64 {
    let sv = s.matvec(v).expect("square");
    let mv = m.matvec(v).expect("square");
    let r: Vec<f64> = sv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
    linalg::norm(&r) / linalg::norm(&mv).max(1e-300)
}

/// Korn constant and, for the singular value route, all singular values.
fn korn_impl(mesh: &Mesh, space: &VelocitySpace) -> Result<(StabilityReport, Vec<f64>), StabilityError> {
    let free = free_dofs(space);
    if free.is_empty() {
        return Err(StabilityError::NoFreeDofs);
    }
    let n = free.len();
    let e = assembly::assemble_gram(mesh, space, Gram::Eps).submatrix(&free, &free);
    let g = assembly::assemble_gram(mesh, space, Gram::Mass)
        .add_scaled(1.0, &assembly::assemble_gram(mesh, space, Gram::Grad))
        .submatrix(&free, &free);
    let name = space.kind.name();

    if n <= SVD_LIMIT {
        let rfac = strain_factor(mesh, space, &free);
        let chol = g.to_dense().cholesky().ok_or(LinalgError::Indefinite)?;
        let l = chol.l();
        // C = R L⁻ᵀ, so ‖C y‖ = ‖ε_h v‖ and ‖y‖ = ‖v‖_{1,h} for v = L⁻ᵀ y
        let x = l.solve_lower_triangular(&rfac.transpose()).ok_or(LinalgError::Indefinite)?;
        let (sigma, y, all) = smallest_singular(x.transpose());
        let v = l.transpose().solve_upper_triangular(&y).ok_or(LinalgError::Indefinite)?;
        let v: Vec<f64> = v.iter().copied().collect();
        let residual = pencil_residual(&e, &g, &v, sigma * sigma);
        return Ok((
            StabilityReport {
                space: name,
                level: None,
                constant: sigma,
                verdict: Verdict::of(sigma),
                residual,
                method: "svd",
                vector: v,
            },
            all,
        ));
    }
    let pair = if n <= DENSE_LIMIT {
        linalg::smallest_generalized_eigenpair(&e.to_dense(), &g.to_dense(), &[])?
    } else {
        // shift-invert: largest eigenvalue of E⁻¹ G is 1 / λ_min
        let fac = SpdSolver::new(&e)?;
        let mut op = |x: &[f64]| fac.solve(&g.matvec(x).expect("square"));
        let mapply = |x: &[f64]| g.matvec(x).expect("square");
        let opts = LanczosOptions {
            largest: true,
            ..LanczosOptions::default()
        };
        let mut p = linalg::lanczos_extreme(n, &mut op, &mapply, &[], &opts)?;
        p.value = 1.0 / p.value;
        p
    };
    let lambda = pair.value.max(0.0);
    let residual = pencil_residual(&e, &g, &pair.vector, pair.value);
    if residual > 1e-9 {
        return Err(LinalgError::NotConverged { iterations: 0, residual }.into());
    }
    let beta = lambda.sqrt();
    Ok((
        StabilityReport {
            space: name,
            level: None,
            constant: beta,
            verdict: Verdict::of(beta),
            residual,
            method: if n <= DENSE_LIMIT { "dense" } else { "lanczos" },
            vector: pair.vector,
        },
        Vec::new(),
    ))
}

/// `β_h = min ‖ε_h(v)‖ / ‖v‖_{1,h}` over the free DOFs of `space`.
pub fn korn_constant(mesh: &Mesh, space: &VelocitySpace) -> Result<StabilityReport, StabilityError> {
    korn_impl(mesh, space).map(|r| r.0)
}

/// Rows `√(w |T|) ε_ij(φ)` over cells, points and the six strain
/// components, compressed per cell by QR so that `RᵀR` is the strain Gram
/// matrix on `free`.
fn strain_factor(mesh: &Mesh, space: &VelocitySpace, free: &[usize]) -> DMatrix<f64> {
    let mut col = vec![usize::MAX; space.total_dofs()];
    for (k, &i) in free.iter().enumerate() {
        col[i] = k;
    }
    let rule = quadrature::rule_for_degree((2 * space.degree().saturating_sub(1)).max(1)).expect("supported degree");
    let pairs = [(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (0, 1, 2f64.sqrt()), (0, 2, 2f64.sqrt()), (1, 2, 2f64.sqrt())];
    let mut blocks: Vec<(Vec<usize>, DMatrix<f64>)> = Vec::new();
    for c in 0..mesh.num_cells() {
        let dofs: Vec<_> = space.local_dofs(mesh, c).into_iter().filter(|d| col[d.global] != usize::MAX).collect();
        if dofs.is_empty() {
            continue;
        }
        let k = dofs.len();
        let mut local = DMatrix::zeros(6 * rule.len(), k);
        for (q, (l, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let s = (w * mesh.volume_of(c)).sqrt();
            for (j, v) in space.eval_local(mesh, c, &dofs, l).iter().enumerate() {
                for (r, &(a, b, f)) in pairs.iter().enumerate() {
                    local[(6 * q + r, j)] = s * f * 0.5 * (v.grad[a][b] + v.grad[b][a]);
                }
            }
        }
        let r = local.qr().r();
        blocks.push((dofs.iter().map(|d| col[d.global]).collect(), r));
    }
    let rows: usize = blocks.iter().map(|b| b.1.nrows()).sum();
    let mut out = DMatrix::zeros(rows, free.len());
    let mut r0 = 0;
    for (cols, r) in blocks {
        for i in 0..r.nrows() {
            for (j, &cj) in cols.iter().enumerate() {
                out[(r0 + i, cj)] = r[(i, j)];
            }
        }
        r0 += r.nrows();
    }
    out
}

/// Orthonormal basis of the complement of the unit vector `w`, as the last
/// `n − 1` columns of the Householder reflection taking `w` to `±e1`.
fn complement_basis(w: &DVector<f64>) -> DMatrix<f64> {
    let n = w.len();
    let mut u = w.clone();
    let s = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    u[0] += s;
    let un = u.norm_squared();
    let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / un);
    h.columns(1, n - 1).into_owned()
}

/// `β_h = min_q sup_v b_h(v, q) / (‖∇_h v‖ ‖q‖)` with P0 pressures.
pub fn infsup_constant(mesh: &Mesh, space: &VelocitySpace) -> Result<StabilityReport, StabilityError> {
    let free = free_dofs(space);
    let np = mesh.num_cells();
    let nullspace = !mesh.has_neumann_boundary();
    let weights = mesh.volumes().to_vec();
    let name = space.kind.name();
    if free.is_empty() {
        return Ok(StabilityReport {
            space: name,
            level: None,
            constant: 0.0,
            verdict: Verdict::Degenerate,
            residual: 0.0,
            method: "trivial",
            vector: vec![1.0; np],
        });
    }
    let all_p: Vec<usize> = (0..np).collect();
    let a = assembly::assemble_gram(mesh, space, Gram::Grad).submatrix(&free, &free);
    let b = assembly::assemble_b(mesh, space).submatrix(&free, &all_p);
    let nu = free.len();
    let mdiag = CsrMatrix::from_triplets(np, np, &weights.iter().enumerate().map(|(i, &w)| (i, i, w)).collect::<Vec<_>>());
    let ones = vec![1.0; np];

    let schur_residual = |fac: &SpdSolver, q: &[f64], lambda: f64| -> f64 {
        let y = fac.solve(&b.matvec(q).expect("shape"));
        let sq = b.matvec_transpose(&y).expect("shape");
        let r: Vec<f64> = sq.iter().zip(q).zip(&weights).map(|((s, qi), w)| s - lambda * w * qi).collect();
        let mq: Vec<f64> = q.iter().zip(&weights).map(|(x, w)| x * w).collect();
        linalg::norm(&r) / linalg::norm(&mq).max(1e-300)
    };
    let fac = SpdSolver::new(&a)?;

    if np <= SVD_LIMIT.max(DENSE_LIMIT) && nu <= 3000 && np <= DENSE_LIMIT && nu * np <= 4_000_000 {
        let chol = a.to_dense().cholesky().ok_or(LinalgError::Indefinite)?;
        let x = chol.l().solve_lower_triangular(&b.to_dense()).ok_or(LinalgError::Indefinite)?;
        let inv_sqrt = DVector::from_iterator(np, weights.iter().map(|w| 1.0 / w.sqrt()));
        let mut c = x * DMatrix::from_diagonal(&inv_sqrt);
        let z = if nullspace {
            let w = DVector::from_iterator(np, weights.iter().map(|w| w.sqrt())).normalize();
            let z = complement_basis(&w);
            c = c * &z;
            Some(z)
        } else {
            None
        };
        let (sigma, y, _) = smallest_singular(c);
        let y = match &z {
            Some(z) => z * y,
            None => y,
        };
        let q: Vec<f64> = y.iter().zip(inv_sqrt.iter()).map(|(a, b)| a * b).collect();
        let residual = schur_residual(&fac, &q, sigma * sigma);
        return Ok(StabilityReport {
            space: name,
            level: None,
            constant: sigma,
            verdict: Verdict::of(sigma),
            residual,
            method: "svd",
            vector: q,
        });
    }

    let deflate = if nullspace { vec![ones.clone()] } else { Vec::new() };
    let (pair, method) = if np <= DENSE_LIMIT {
        let mut s = DMatrix::zeros(np, np);
        for j in 0..np {
            let mut e = vec![0.0; np];
            e[j] = 1.0;
            let y = fac.solve(&b.matvec(&e).expect("shape"));
            let col = b.matvec_transpose(&y).expect("shape");
            for i in 0..np {
                s[(i, j)] = col[i];
            }
        }
        let s = (&s + s.transpose()) * 0.5;
        (linalg::smallest_generalized_eigenpair(&s, &mdiag.to_dense(), &deflate)?, "dense")
    } else {
        let mut op = |q: &[f64]| -> Vec<f64> {
            let y = fac.solve(&b.matvec(q).expect("shape"));
            let sq = b.matvec_transpose(&y).expect("shape");
            sq.iter().zip(&weights).map(|(s, w)| s / w).collect()
        };
        let mapply = |x: &[f64]| -> Vec<f64> { x.iter().zip(&weights).map(|(a, w)| a * w).collect() };
        let opts = LanczosOptions {
            max_steps: 300,
            ..LanczosOptions::default()
        };
        (linalg::lanczos_extreme(np, &mut op, &mapply, &deflate, &opts)?, "lanczos")
    };
    let residual = schur_residual(&fac, &pair.vector, pair.value);
    if residual > 1e-9 {
        return Err(LinalgError::NotConverged { iterations: 0, residual }.into());
    }
    let beta = pair.value.max(0.0).sqrt();
    Ok(StabilityReport {
        space: name,
        level: None,
        constant: beta,
        verdict: Verdict::of(beta),
        residual,
        method,
        vector: pair.vector,
    })
}

/// Outcome of the inf-sup counterexample on the octahedron patch.
#[derive(Debug, Clone, Serialize)]
pub struct InfsupCounterexample {
    /// `max_i |b_h(φ_i, q)|` for `q = q̃ − ∫ q̃`.
    pub residual_integral_shift: f64,
    /// Free DOF attaining `residual_integral_shift`.
    pub worst_dof: usize,
    /// Same with `q̃` shifted by its mean.
    pub residual_mean_shift: f64,
    /// Same for `q ≡ 1`.
    pub residual_constant: f64,
    /// Same for a fixed mean-free pressure that is not a kernel element.
    pub residual_generic: f64,
    pub constant: f64,
    pub seconds: f64,
}

impl InfsupCounterexample {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.residual_integral_shift > 1e-13 {
            out.push(format!(
                "b_h(phi_{}, q) = {:e} exceeds 1e-13",
                self.worst_dof, self.residual_integral_shift
            ));
        }
        if self.residual_mean_shift > 1e-13 {
            out.push(format!("mean-shifted q residual {:e} exceeds 1e-13", self.residual_mean_shift));
        }
        if self.residual_constant > 1e-13 {
            out.push(format!("constant q residual {:e} exceeds 1e-13", self.residual_constant));
        }
        if self.residual_generic <= 1e-6 {
            out.push(format!("generic q residual {:e} is not above 1e-6", self.residual_generic));
        }
        if self.constant > DEGENERATE_TOL {
            out.push(format!("inf-sup constant {:e} exceeds {DEGENERATE_TOL:e}", self.constant));
        }
        out
    }

    pub fn verify(&self) -> Result<(), StabilityError> {
        let f = self.failures();
        if f.is_empty() {
            Ok(())
        } else {
            Err(StabilityError::AssertionFailed(f.join("; ")))
        }
    }
}

/// The pressure that is 1 on `T_111, T_112, T_221, T_222` of the octahedron
/// patch and 0 elsewhere.
pub fn checkerboard_pressure() -> Vec<f64> {
    let mut q = vec![0.0; 8];
    for (j, k, l) in [(1, 1, 1), (1, 1, 2), (2, 2, 1), (2, 2, 2)] {
        q[builtin::octahedron_cell(j, k, l)] = 1.0;
    }
    q
}

/// Builds the octahedron patch with `P1C x P1C x P1NC` and checks that the
/// checkerboard pressure is orthogonal to every discrete divergence.
pub fn counterexample_infsup() -> Result<InfsupCounterexample, StabilityError> {
    let start = Instant::now();
    let mesh = builtin::octahedron_patch();
    let space = VelocitySpace::build(&mesh, VelocityKind::Components([SpaceKind::P1C, SpaceKind::P1C, SpaceKind::P1NC]));
    let b = assembly::assemble_b(&mesh, &space);
    let free = free_dofs(&space);
    let vol = mesh.volumes();
    let l2 = |q: &[f64]| q.iter().zip(vol).map(|(x, v)| v * x * x).sum::<f64>().sqrt();
    let residual = |q: &[f64]| -> (f64, usize) {
        let bq = b.matvec(q).expect("shape");
        let scale = l2(q).max(1.0);
        free.iter()
            .map(|&i| (bq[i].abs() / scale, i))
            .fold((0.0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    let tilde = checkerboard_pressure();
    let integral: f64 = tilde.iter().zip(vol).map(|(q, v)| q * v).sum();
    let mean = integral / mesh.volume();
    let shift = |s: f64| tilde.iter().map(|q| q - s).collect::<Vec<f64>>();
    let (r_int, worst) = residual(&shift(integral));
    let (r_mean, _) = residual(&shift(mean));
    let (r_const, _) = residual(&[1.0; 8]);
    let mut generic: Vec<f64> = (0..8).map(|i| ((i * i) as f64 * 0.7 + 0.3 * i as f64).sin()).collect();
    let gm = generic.iter().zip(vol).map(|(q, v)| q * v).sum::<f64>() / mesh.volume();
    generic.iter_mut().for_each(|q| *q -= gm);
    let (r_generic, _) = residual(&generic);
    let constant = infsup_constant(&mesh, &space)?.constant;
    Ok(InfsupCounterexample {
        residual_integral_shift: r_int,
        worst_dof: worst,
        residual_mean_shift: r_mean,
        residual_constant: r_const,
        residual_generic: r_generic,
        constant,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KornVariant {
    Wedge,
    Tensor,
}

/// Outcome of a Korn counterexample.
#[derive(Debug, Clone, Serialize)]
pub struct KornCounterexample {
    pub variant: KornVariant,
    pub a: f64,
    /// Largest strain component of the discrete field on any cell.
    pub max_strain: Option<f64>,
    /// `‖ε_h(φ_h)‖`
    pub strain_norm: Option<f64>,
    /// Largest difference of face means across interior faces.
    pub max_interior_jump: Option<f64>,
    /// Largest face mean on boundary faces.
    pub max_boundary_mean: Option<f64>,
    /// `‖∇_h φ_h‖`
    pub grad_norm: Option<f64>,
    /// Largest pointwise gap between the discrete field and the formulas.
    pub reproduction_error: Option<f64>,
    pub constant: f64,
    /// Number of singular values at most `1e-10`.
    pub kernel_dim: usize,
    /// `|cos|` of the angle between the extremal vector and `φ_h`.
    pub cosine: Option<f64>,
    pub seconds: f64,
}

impl KornCounterexample {
    pub fn failures(&self) -> Vec<String> {
        let a = self.a.abs();
        let mut out = Vec::new();
        let mut check = |name: &str, v: Option<f64>, ok: fn(f64, f64) -> bool, bound: &str| {
            if let Some(v) = v {
                if !ok(v, a) {
                    out.push(format!("{name} = {v:e} violates {bound}"));
                }
            }
        };
        check("(i) max strain", self.max_strain, |v, a| v <= 1e-13 * a, "<= 1e-13 |a|");
        check("(i) strain norm", self.strain_norm, |v, a| v <= 1e-12 * a.max(1.0), "<= 1e-12");
        check("(ii) interior face-mean jump", self.max_interior_jump, |v, a| v <= 1e-13 * a, "<= 1e-13 |a|");
        check("(iii) boundary face mean", self.max_boundary_mean, |v, a| v <= 1e-13 * a, "<= 1e-13 |a|");
        check("(iv) broken gradient norm", self.grad_norm, |v, a| v >= a, ">= |a|");
        check("reproduction", self.reproduction_error, |v, a| v <= 1e-13 * a.max(1.0), "<= 1e-13");
        if self.constant > 1e-10 {
            out.push(format!("Korn constant {:e} exceeds 1e-10", self.constant));
        }
        out
    }

    pub fn verify(&self) -> Result<(), StabilityError> {
        let f = self.failures();
        if f.is_empty() {
            Ok(())
        } else {
            Err(StabilityError::AssertionFailed(f.join("; ")))
        }
    }
}

/// The four piecewise rigid motions on the wedge cells, in listed order.
pub fn wedge_motion(cell: usize, a: f64, x: Point) -> Point {
    let (x2, x3) = (x[1], x[2]);
    match cell {
        0 => [0.0, a - 3.0 * a * x3, -a + 3.0 * a * x2],
        1 => [0.0, -a + 3.0 * a * x3, -a - 3.0 * a * x2],
        2 => [0.0, -a - 3.0 * a * x3, a + 3.0 * a * x2],
        3 => [0.0, a + 3.0 * a * x3, a - 3.0 * a * x2],
        _ => panic!("the wedge has four cells"),
    }
}

fn face_mean_on_cell(mesh: &Mesh, cell: usize, face: usize, f: impl Fn(Point) -> Point) -> Point {
    let rule = quadrature::face_rule(2).expect("degree-2 face rule");
    let local = mesh.local_face_index(cell, face).expect("face of cell");
    let mut m = [0.0; 3];
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let mut l = [0.0; 4];
        for (k, &v) in LOCAL_FACES[local].iter().enumerate() {
            l[v] = p[k];
        }
        let y = f(mesh.map_point(cell, &l));
        for i in 0..3 {
            m[i] += w * y[i];
        }
    }
    m
}

/// Runs a Korn counterexample with `P1C x P1NC x P1NC`.
pub fn counterexample_korn(variant: KornVariant, a: f64) -> Result<KornCounterexample, StabilityError> {
    if a == 0.0 || !a.is_finite() {
        return Err(StabilityError::InvalidParameter(format!("a must be finite and nonzero, got {a}")));
    }
    let start = Instant::now();
    let kind = VelocityKind::Components([SpaceKind::P1C, SpaceKind::P1NC, SpaceKind::P1NC]);
    let mesh = match variant {
        KornVariant::Wedge => builtin::korn_wedge(),
        KornVariant::Tensor => builtin::korn_tensor(),
    };
    let space = VelocitySpace::build(&mesh, kind);
    let (report, singular) = korn_impl(&mesh, &space)?;
    let kernel_dim = singular.iter().filter(|&&s| s <= 1e-10).count();
    let mut out = KornCounterexample {
        variant,
        a,
        max_strain: None,
        strain_norm: None,
        max_interior_jump: None,
        max_boundary_mean: None,
        grad_norm: None,
        reproduction_error: None,
        constant: report.constant,
        kernel_dim,
        cosine: None,
        seconds: 0.0,
    };
    if variant == KornVariant::Wedge {
        let motion = |c: usize| move |x: Point| wedge_motion(c, a, x);
        let (mut jump, mut bmean) = (0.0f64, 0.0f64);
        for (fi, f) in mesh.faces().iter().enumerate() {
            let plus = face_mean_on_cell(&mesh, f.plus, fi, motion(f.plus));
            match f.minus {
                Some(m) => {
                    let minus = face_mean_on_cell(&mesh, m, fi, motion(m));
                    jump = jump.max((0..3).map(|i| (plus[i] - minus[i]).abs()).fold(0.0, f64::max));
                }
                None => bmean = bmean.max(plus.iter().fold(0.0f64, |x, y| x.max(y.abs()))),
            }
        }
        // coefficients: face means from the plus cell (first component is 0)
        let mut coeffs = vec![0.0; space.total_dofs()];
        for comp in 1..3 {
            for (fi, f) in mesh.faces().iter().enumerate() {
                coeffs[space.offset(comp) + fi] = face_mean_on_cell(&mesh, f.plus, fi, motion(f.plus))[comp];
            }
        }
        let rule = quadrature::rule_for_degree(2).expect("degree-2 rule");
        let (mut strain2, mut grad2, mut max_strain, mut repro) = (0.0, 0.0, 0.0f64, 0.0f64);
        for c in 0..mesh.num_cells() {
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let v = space.eval_function(&mesh, c, &coeffs, l);
                let exact = wedge_motion(c, a, mesh.map_point(c, l));
                for i in 0..3 {
                    repro = repro.max((v.value[i] - exact[i]).abs());
                    for j in 0..3 {
                        let e = 0.5 * (v.grad[i][j] + v.grad[j][i]);
                        max_strain = max_strain.max(e.abs());
                        strain2 += w * mesh.volume_of(c) * e * e;
                        grad2 += w * mesh.volume_of(c) * v.grad[i][j] * v.grad[i][j];
                    }
                }
            }
        }
        let free = free_dofs(&space);
        let phi: Vec<f64> = free.iter().map(|&i| coeffs[i]).collect();
        let cosine = linalg::dot(&phi, &report.vector).abs() / (linalg::norm(&phi) * linalg::norm(&report.vector));
        out.max_strain = Some(max_strain);
        out.strain_norm = Some(strain2.sqrt());
        out.max_interior_jump = Some(jump);
        out.max_boundary_mean = Some(bmean);
        out.grad_norm = Some(grad2.sqrt());
        out.reproduction_error = Some(repro);
        out.cosine = Some(cosine);
    }
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}

/// Cell means of the discrete divergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport {
    /// `max_T |(1/|T|) ∫_T div_h u_h|`
    pub max_abs_mean: f64,
    /// `‖∇_h u_h‖`
    pub grad_norm: f64,
}

pub fn divergence_means(mesh: &Mesh, space: &VelocitySpace, coeffs: &[f64]) -> DivergenceReport {
    let rule = quadrature::rule_for_degree((2 * space.degree().saturating_sub(1)).max(1)).expect("supported degree");
    let (mut max, mut g2) = (0.0f64, 0.0);
    for c in 0..mesh.num_cells() {
        let dofs = space.local_dofs(mesh, c);
        let mut div = 0.0;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let vals = space.eval_local(mesh, c, &dofs, l);
            let mut g = [[0.0; 3]; 3];
            for (d, v) in dofs.iter().zip(&vals) {
                for i in 0..3 {
                    for j in 0..3 {
                        g[i][j] += coeffs[d.global] * v.grad[i][j];
                    }
                }
            }
            div += w * (g[0][0] + g[1][1] + g[2][2]);
            g2 += w * mesh.volume_of(c) * g.iter().flatten().map(|x| x * x).sum::<f64>();
        }
        max = max.max(div.abs());
    }
    DivergenceReport {
        max_abs_mean: max,
        grad_norm: g2.sqrt(),
    }
}

/// `‖g − Π_0 g‖` with `Π_0` the cellwise mean, degree-8 quadrature.
pub fn oscillation<G>(mesh: &Mesh, g: G) -> f64
where
    G: Fn(Point) -> Point,
{
    let rule = quadrature::rule_for_degree(8).expect("degree-8 rule");
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        let vals: Vec<Point> = rule.points.iter().map(|l| g(mesh.map_point(c, l))).collect();
        let mut mean = [0.0; 3];
        for (v, w) in vals.iter().zip(&rule.weights) {
            for i in 0..3 {
                mean[i] += w * v[i];
            }
        }
        for (v, w) in vals.iter().zip(&rule.weights) {
            total += w * mesh.volume_of(c) * (0..3).map(|i| (v[i] - mean[i]).powi(2)).sum::<f64>();
        }
    }
    total.sqrt()
}
