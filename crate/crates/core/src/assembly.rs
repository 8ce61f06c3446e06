//! Cellwise assembly of the Stokes forms, Gram matrices and loads, and
//! elimination of Dirichlet degrees of freedom.
//!
//! Every local matrix is computed on its upper triangle and mirrored, and
//! entries are accumulated in cell order, so symmetric matrices are
//! symmetric bit for bit.

use thiserror::Error;

use crate::linalg::CsrMatrix;
use crate::manufactured::ExactCase;
use crate::mesh::{BoundaryLabel, Mesh, LOCAL_FACES};
use crate::quadrature;
use crate::spaces::{LocalDof, VectorValue, VelocitySpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("lifting is nonzero ({value:e}) at free DOF {dof}")]
    InconsistentLifting { dof: usize, value: f64 },
    #[error("vector length {got} does not match {expected} DOFs")]
    LengthMismatch { expected: usize, got: usize },
}

/// Which Gram matrix to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gram {
    /// `∫ u · v`
    Mass,
    /// `∫ ∇_h u : ∇_h v`
    Grad,
    /// `∫ ε_h(u) : ε_h(v)`
    Eps,
}

fn sym(g: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut e = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = 0.5 * (g[i][j] + g[j][i]);
        }
    }
    e
}

fn frobenius(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

fn div(g: &[[f64; 3]; 3]) -> f64 {
    g[0][0] + g[1][1] + g[2][2]
}

/// Local DOFs of every cell.
fn all_local_dofs(mesh: &Mesh, space: &VelocitySpace) -> Vec<Vec<LocalDof>> {
    (0..mesh.num_cells()).map(|c| space.local_dofs(mesh, c)).collect()
}

/// Symmetric velocity-velocity form `∫ k(φ_j, φ_i)`; `k` must be symmetric
/// in its arguments. `features` maps a basis value to the quantity that
/// enters `k`, so it is evaluated once per point and basis function.
fn assemble_symmetric<T, P, K>(mesh: &Mesh, space: &VelocitySpace, degree: u32, features: P, kernel: K) -> CsrMatrix
where
    P: Fn(&VectorValue) -> T,
    K: Fn(&T, &T) -> f64,
{
    let n = space.total_dofs();
    let locals = all_local_dofs(mesh, space);
    let mut rows = vec![Vec::new(); n];
    for dofs in &locals {
        for a in dofs {
            rows[a.global].extend(dofs.iter().map(|b| b.global));
        }
    }
    let mut m = CsrMatrix::from_pattern(n, n, rows);
    let rule = quadrature::rule_for_degree(degree.max(1)).expect("supported degree");
    for (c, dofs) in locals.iter().enumerate() {
        let k = dofs.len();
        let mut local = vec![0.0; k * k];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let feats: Vec<T> = space.eval_local(mesh, c, dofs, l).iter().map(&features).collect();
            for i in 0..k {
                for j in i..k {
                    local[i * k + j] += w * kernel(&feats[i], &feats[j]);
                }
            }
        }
        let vol = mesh.volume_of(c);
        for i in 0..k {
            for j in i..k {
                let v = local[i * k + j] * vol;
                m.add_to(dofs[i].global, dofs[j].global, v);
                if i != j {
                    m.add_to(dofs[j].global, dofs[i].global, v);
                }
            }
        }
    }
    m
}

/// `a_h(u, v) = 2μ ∫ ε_h(u) : ε_h(v)`
pub fn assemble_a(mesh: &Mesh, space: &VelocitySpace, mu: f64) -> CsrMatrix {
    let d = 2 * space.degree().saturating_sub(1);
    assemble_symmetric(mesh, space, d, |v| sym(&v.grad), |a, b| 2.0 * mu * frobenius(a, b))
}

pub fn assemble_gram(mesh: &Mesh, space: &VelocitySpace, which: Gram) -> CsrMatrix {
    let deg = space.degree();
    match which {
        Gram::Mass => assemble_symmetric(mesh, space, 2 * deg, |v| v.value, |a, b| a[0] * b[0] + a[1] * b[1] + a[2] * b[2]),
        Gram::Grad => assemble_symmetric(mesh, space, 2 * deg.saturating_sub(1), |v| v.grad, frobenius),
        Gram::Eps => assemble_symmetric(mesh, space, 2 * deg.saturating_sub(1), |v| sym(&v.grad), frobenius),
    }
}

/// `b_h(v, q) = −∫ q div_h v` for piecewise constant `q`: entry `(i, T)` is
/// `−∫_T div φ_i`.
pub fn assemble_b(mesh: &Mesh, space: &VelocitySpace) -> CsrMatrix {
    let n = space.total_dofs();
    let locals = all_local_dofs(mesh, space);
    let rule = quadrature::rule_for_degree(space.degree().saturating_sub(1).max(1)).expect("supported degree");
    let mut triplets = Vec::new();
    for (c, dofs) in locals.iter().enumerate() {
        let mut local = vec![0.0; dofs.len()];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            for (i, v) in space.eval_local(mesh, c, dofs, l).iter().enumerate() {
                local[i] += w * div(&v.grad);
            }
        }
        let vol = mesh.volume_of(c);
        for (d, v) in dofs.iter().zip(&local) {
            triplets.push((d.global, c, -v * vol));
        }
    }
    CsrMatrix::from_triplets(n, mesh.num_cells(), &triplets)
}

/// Load vector `∫ g · φ_i + Σ_{F ⊂ Γ_N} ∫_F t · φ_i` for the case's body force
/// and traction.
pub fn assemble_load(mesh: &Mesh, space: &VelocitySpace, case: &ExactCase) -> Vec<f64> {
    assemble_load_with(
        mesh,
        space,
        |x| case.body_force(x).expect("quadrature points avoid the re-entrant edge"),
        |x, n| case.traction(x, n).expect("quadrature points avoid the re-entrant edge"),
    )
}

/// Load vector for explicit body force `g(x)` and traction `t(x, ν)`.
pub fn assemble_load_with<G, T>(mesh: &Mesh, space: &VelocitySpace, g: G, t: T) -> Vec<f64>
where
    G: Fn([f64; 3]) -> [f64; 3],
    T: Fn([f64; 3], [f64; 3]) -> [f64; 3],
{
    let mut f = vec![0.0; space.total_dofs()];
    let rule = quadrature::rule_for_degree(8).expect("degree-8 rule");
    for c in 0..mesh.num_cells() {
        let dofs = space.local_dofs(mesh, c);
        let vol = mesh.volume_of(c);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let gx = g(mesh.map_point(c, l));
            for (d, v) in dofs.iter().zip(space.eval_local(mesh, c, &dofs, l)) {
                f[d.global] += w * vol * (gx[0] * v.value[0] + gx[1] * v.value[1] + gx[2] * v.value[2]);
            }
        }
    }
    let face_rule = quadrature::face_rule(4).expect("degree-4 face rule");
    for (fi, face) in mesh.faces().iter().enumerate() {
        if face.label != BoundaryLabel::Neumann {
            continue;
        }
        let c = face.plus;
        let local = mesh.local_face_index(c, fi).expect("face of its cell");
        let dofs = space.local_dofs(mesh, c);
        for (p, w) in face_rule.points.iter().zip(&face_rule.weights) {
            let mut l = [0.0; 4];
            for (k, &v) in LOCAL_FACES[local].iter().enumerate() {
                l[v] = p[k];
            }
            let tx = t(mesh.map_point(c, &l), face.normal);
            for (d, v) in dofs.iter().zip(space.eval_local(mesh, c, &dofs, &l)) {
                f[d.global] += w * face.area * (tx[0] * v.value[0] + tx[1] * v.value[1] + tx[2] * v.value[2]);
            }
        }
    }
    f
}

/// The system on free velocity DOFs after moving Dirichlet data to the
/// right-hand side:
///
/// ```text
/// A_ff u_f + B_f p = F_f − (A u_D)_f
/// B_fᵀ u_f         = −Bᵀ u_D
/// ```
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub a: CsrMatrix,
    pub b: CsrMatrix,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    /// Global index of each free DOF.
    pub free: Vec<usize>,
    pub lifting: Vec<f64>,
}

impl ReducedSystem {
    /// Full coefficient vector `u_D + u_f`.
    pub fn expand(&self, u_free: &[f64]) -> Vec<f64> {
        let mut u = self.lifting.clone();
        for (k, &i) in self.free.iter().enumerate() {
            u[i] += u_free[k];
        }
        u
    }

    /// Nonzeros of the free block system `[A B; Bᵀ 0]`.
    pub fn nnz(&self) -> usize {
        self.a.nnz() + 2 * self.b.nnz()
    }
}

/// Eliminates the DOFs with `dirichlet[i]` using `lifting`, which must
/// vanish at free DOFs.
pub fn apply_dirichlet(
    a: &CsrMatrix,
    b: &CsrMatrix,
    f: &[f64],
    lifting: &[f64],
    dirichlet: &[bool],
) -> Result<ReducedSystem, AssemblyError> {
    let n = a.nrows();
    for len in [f.len(), lifting.len(), dirichlet.len()] {
        if len != n {
            return Err(AssemblyError::LengthMismatch { expected: n, got: len });
        }
    }
    if let Some(i) = (0..n).find(|&i| !dirichlet[i] && lifting[i] != 0.0) {
        return Err(AssemblyError::InconsistentLifting {
            dof: i,
            value: lifting[i],
        });
    }
    let free: Vec<usize> = (0..n).filter(|&i| !dirichlet[i]).collect();
    let al = a.matvec(lifting).expect("square");
    let rhs: Vec<f64> = free.iter().map(|&i| f[i] - al[i]).collect();
    let g: Vec<f64> = b.matvec_transpose(lifting).expect("shape").iter().map(|x| -x).collect();
    let all_p: Vec<usize> = (0..b.ncols()).collect();
    Ok(ReducedSystem {
        a: a.submatrix(&free, &free),
        b: b.submatrix(&free, &all_p),
        f: rhs,
        g,
        free,
        lifting: lifting.to_vec(),
    })
}

/// Interpolant of `u` on the Dirichlet DOFs, zero elsewhere.
pub fn dirichlet_lifting<F>(mesh: &Mesh, space: &VelocitySpace, u: F) -> Vec<f64>
where
    F: Fn([f64; 3]) -> [f64; 3],
{
    let mut lift = space.interpolate(mesh, u);
    for (x, d) in lift.iter_mut().zip(space.dirichlet_mask()) {
        if !d {
            *x = 0.0;
        }
    }
    lift
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use crate::mesh::builtin;
    use crate::spaces::{SpaceKind, VelocityKind};

    fn p1_vector(mesh: &Mesh) -> VelocitySpace {
        VelocitySpace::build(mesh, VelocityKind::Components([SpaceKind::P1C; 3]))
    }

    #[test]
    fn stretching_energy() {
        let m = builtin::reference_tet(BoundaryLabel::Neumann);
        let s = p1_vector(&m);
        let a = assemble_a(&m, &s, 0.5);
        let v = s.interpolate(&m, |x| [x[0], 0.0, 0.0]);
        let av = a.matvec(&v).unwrap();
        assert!((dot(&v, &av) - 1.0 / 6.0).abs() < 1e-15);
        assert!(a.is_symmetric());
    }

    #[test]
    fn divergence_of_identity_field() {
        let m = builtin::reference_tet(BoundaryLabel::Neumann);
        let s = p1_vector(&m);
        let b = assemble_b(&m, &s);
        let v = s.interpolate(&m, |x| x);
        let bt = b.matvec_transpose(&v).unwrap();
        assert!((bt[0] + 0.5).abs() < 1e-15);
        let c = s.interpolate(&m, |_| [1.0, 2.0, 3.0]);
        assert!(b.matvec_transpose(&c).unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn mass_of_constant() {
        let m = builtin::reference_tet(BoundaryLabel::Neumann);
        let s = p1_vector(&m);
        let mass = assemble_gram(&m, &s, Gram::Mass);
        let one = s.interpolate(&m, |_| [1.0, 0.0, 0.0]);
        assert!((dot(&one, &mass.matvec(&one).unwrap()) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn nonconforming_load() {
        let m = builtin::reference_tet(BoundaryLabel::Dirichlet);
        let s = VelocitySpace::build(&m, VelocityKind::KsP2);
        let f = assemble_load_with(&m, &s, |_| [0.0, 0.0, 1.0], |_, _| [0.0; 3]);
        let off = s.offset(2);
        for k in 0..4 {
            assert!((f[off + k] - 1.0 / 24.0).abs() < 1e-15);
        }
        let zero = assemble_load_with(&m, &s, |_| [0.0; 3], |_, _| [0.0; 3]);
        assert!(zero.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn lifting_must_vanish_on_free_dofs() {
        let m = builtin::octahedron_patch();
        let s = VelocitySpace::build(&m, VelocityKind::KsP2);
        let a = assemble_a(&m, &s, 1.0);
        let b = assemble_b(&m, &s);
        let n = s.total_dofs();
        let bad = vec![1.0; n];
        let err = apply_dirichlet(&a, &b, &vec![0.0; n], &bad, &s.dirichlet_mask()).unwrap_err();
        assert!(matches!(err, AssemblyError::InconsistentLifting { .. }));
        let r = apply_dirichlet(&a, &b, &vec![0.0; n], &vec![0.0; n], &s.dirichlet_mask()).unwrap();
        assert_eq!(r.free.len(), s.num_free());
        assert!(r.f.iter().all(|&x| x == 0.0));
    }
}
