//! Oracles shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::HashMap;

use ks3d_core::manufactured::jet::Jet3;
use ks3d_core::{BoundaryLabel, Mesh};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫ x^a y^b z^c` over the unit reference tetrahedron.
pub fn reference_monomial(a: u32, b: u32, c: u32) -> f64 {
    factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
}

/// `∫_T Π λ_i^{α_i}` for a tetrahedron of volume `vol`.
pub fn barycentric_monomial(alpha: [u32; 4], vol: f64) -> f64 {
    let s: u32 = alpha.iter().sum();
    6.0 * vol * alpha.iter().map(|&a| factorial(a)).product::<f64>() / factorial(s + 3)
}

/// Expressions in three variables for jet checks.
#[derive(Debug, Clone)]
pub enum Expr {
    Var(usize),
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    /// `sqrt(1 + e²)`
    Hypot(Box<Expr>),
    /// `atan(e)`
    Atan(Box<Expr>),
    /// `e / (2 + e²)`
    Damp(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Hypot(a) => (1.0 + a.eval(x).powi(2)).sqrt(),
            Expr::Atan(a) => a.eval(x).atan(),
            Expr::Damp(a) => {
                let v = a.eval(x);
                v / (2.0 + v * v)
            }
        }
    }

    pub fn jet(&self, x: &[Jet3; 3]) -> Jet3 {
        match self {
            Expr::Var(i) => x[*i],
            Expr::Const(c) => Jet3::constant(*c),
            Expr::Add(a, b) => a.jet(x) + b.jet(x),
            Expr::Sub(a, b) => a.jet(x) - b.jet(x),
            Expr::Mul(a, b) => a.jet(x) * b.jet(x),
            Expr::Sin(a) => a.jet(x).sin(),
            Expr::Cos(a) => a.jet(x).cos(),
            Expr::Exp(a) => a.jet(x).exp(),
            Expr::Hypot(a) => {
                let v = a.jet(x);
                (v * v + 1.0).sqrt()
            }
            Expr::Atan(a) => a.jet(x).atan(),
            Expr::Damp(a) => {
                let v = a.jet(x);
                v / (v * v + 2.0)
            }
        }
    }
}

pub fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0..3usize).prop_map(Expr::Var), (-2.0..2.0f64).prop_map(Expr::Const)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Cos(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Exp(Box::new(Expr::Sin(Box::new(a))))),
            inner.clone().prop_map(|a| Expr::Hypot(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Atan(Box::new(a))),
            inner.prop_map(|a| Expr::Damp(Box::new(a))),
        ]
    })
}

fn shifted(x: [f64; 3], moves: &[(usize, f64)]) -> [f64; 3] {
    let mut y = x;
    for &(i, d) in moves {
        y[i] += d;
    }
    y
}

/// Largest relative mismatch between jet derivatives of `e` at `x` and
/// central differences: first and second derivatives from values, third
/// derivatives from the jet's own second derivatives.
pub fn jet_fd_mismatch(e: &Expr, x: [f64; 3]) -> f64 {
    let jet = e.jet(&Jet3::coordinates(x));
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut worst = rel(jet.value(), e.eval(x));
    let h1 = 1e-5;
    let g = jet.gradient();
    for i in 0..3 {
        let fd = (e.eval(shifted(x, &[(i, h1)])) - e.eval(shifted(x, &[(i, -h1)]))) / (2.0 * h1);
        worst = worst.max(rel(g[i], fd));
    }
    let h2 = 1e-4;
    let hess = jet.hessian();
    for i in 0..3 {
        for j in 0..3 {
            let f = |si: f64, sj: f64| e.eval(shifted(x, &[(i, si * h2), (j, sj * h2)]));
            let fd = (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h2 * h2);
            worst = worst.max(rel(hess[i][j], fd));
        }
    }
    let h3 = 1e-5;
    for i in 0..3 {
        let hp = e.jet(&Jet3::coordinates(shifted(x, &[(i, h3)]))).hessian();
        let hm = e.jet(&Jet3::coordinates(shifted(x, &[(i, -h3)]))).hessian();
        for j in 0..3 {
            for k in 0..3 {
                let mut alpha = [0u8; 3];
                alpha[i] += 1;
                alpha[j] += 1;
                alpha[k] += 1;
                let fd = (hp[j][k] - hm[j][k]) / (2.0 * h3);
                worst = worst.max(rel(jet.derivative(alpha), fd));
            }
        }
    }
    worst
}

/// The same mesh with vertices and cells shuffled and each cell's vertex
/// order rotated, boundary labels carried over by position.
pub fn renumbered(mesh: &Mesh, seed: u64) -> Mesh {
    let mut rng = StdRng::seed_from_u64(seed);
    let nv = mesh.num_vertices();
    let mut perm: Vec<usize> = (0..nv).collect();
    perm.shuffle(&mut rng);
    let mut vertices = vec![[0.0; 3]; nv];
    for (old, &new) in perm.iter().enumerate() {
        vertices[new] = mesh.vertices()[old];
    }
    let mut cells: Vec<[usize; 4]> = mesh
        .cells()
        .iter()
        .map(|c| {
            let mut c = c.map(|v| perm[v]);
            // even permutations keep the orientation
            let r = rng.random_range(0..3);
            c[1..].rotate_left(r);
            c
        })
        .collect();
    cells.shuffle(&mut rng);
    let key = |p: [f64; 3]| p.map(|x| (x * 1e9).round() as i64);
    let labels: HashMap<[i64; 3], BoundaryLabel> =
        mesh.faces().iter().filter(|f| f.is_boundary()).map(|f| (key(f.centroid), f.label)).collect();
    Mesh::new(vertices, cells, |f| labels.get(&key(f.centroid)).copied()).expect("renumbered mesh is valid")
}

/// Random symmetric positive definite matrix with condition number near
/// `cond`.
pub fn random_spd(n: usize, cond: f64, rng: &mut StdRng) -> DMatrix<f64> {
    let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
        cond.powf(i as f64 / (n - 1).max(1) as f64) * rng.random_range(0.9..1.1)
    }));
    let a = &q * d * q.transpose();
    (&a + a.transpose()) * 0.5
}

/// Eigenvalues of the pencil `(S, M)` through `L⁻¹ S L⁻ᵀ`, ascending.
pub fn pencil_eigenvalues(s: &DMatrix<f64>, m: &DMatrix<f64>) -> Vec<f64> {
    let l = m.clone().cholesky().expect("M is SPD").l();
    let li = l.clone().try_inverse().expect("triangular factor is invertible");
    let t = &li * s * li.transpose();
    let t = (&t + t.transpose()) * 0.5;
    let mut e: Vec<f64> = t.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}
