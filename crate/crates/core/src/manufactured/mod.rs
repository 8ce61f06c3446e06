//! Manufactured solutions for the convergence experiments, the data derived
//! from them, and error norms of discrete solutions.
//!
//! Every case is written once as a function of coordinate jets; the body
//! force `g = −2μ div ε(u) + ∇p` and the traction `(2μ ε(u) − pI) ν` are read
//! off the jets' second and first derivatives.

pub mod jet;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use jet::Jet3;

use crate::geometry::Point;
use crate::mesh::{builtin, BoundaryFace, BoundaryLabel, Mesh};
use crate::quadrature;
use crate::spaces::VelocitySpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ManufacturedError {
    #[error("unknown case `{0}` (expected cube1, cube2, cube3 or lshape)")]
    UnknownCase(String),
    #[error("evaluation on the re-entrant edge at {0:?}")]
    EvaluationAtCorner(Point),
    #[error("case `{0}` has no built-in domain")]
    NoDomain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseKind {
    Cube1,
    Cube2,
    Cube3,
    LShape,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Cube1 => "cube1",
            CaseKind::Cube2 => "cube2",
            CaseKind::Cube3 => "cube3",
            CaseKind::LShape => "lshape",
        }
    }

    pub fn parse(name: &str) -> Option<CaseKind> {
        [CaseKind::Cube1, CaseKind::Cube2, CaseKind::Cube3, CaseKind::LShape]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

type Field = dyn Fn(&[Jet3; 3]) -> ([Jet3; 3], Jet3) + Send + Sync;

/// An exact velocity/pressure pair with viscosity `mu`.
#[derive(Clone)]
pub struct ExactCase {
    pub name: String,
    pub mu: f64,
    kind: Option<CaseKind>,
    field: Arc<Field>,
}

impl fmt::Debug for ExactCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactCase").field("name", &self.name).field("mu", &self.mu).finish()
    }
}

/// Exponent of the corner singularity of the clamped plate on the L-shape.
pub const ALPHA: f64 = 0.544_483_736_782_464;
/// Interior angle of the re-entrant corner.
pub const OMEGA: f64 = 3.0 * PI / 2.0;

/// Angular part of the plate singularity.
fn plate_angular(theta: Jet3) -> Jet3 {
    let (am, ap) = (ALPHA - 1.0, ALPHA + 1.0);
    let c1 = (am * OMEGA).sin() / am - (ap * OMEGA).sin() / ap;
    let c2 = (am * OMEGA).cos() - (ap * OMEGA).cos();
    c1 * ((am * theta).cos() - (ap * theta).cos()) - c2 * ((am * theta).sin() * (1.0 / am) - (ap * theta).sin() * (1.0 / ap))
}

/// The clamped-plate singular function on the L-shape as a jet in
/// `(x1, x2)`, with the angle in `[0, 3π/2]`.
pub fn eval_ugr(x1: Jet3, x2: Jet3) -> Result<Jet3, ManufacturedError> {
    let r2 = x1 * x1 + x2 * x2;
    if r2.value() < 1e-24 {
        return Err(ManufacturedError::EvaluationAtCorner([x1.value(), x2.value(), 0.0]));
    }
    let r = r2.sqrt();
    let mut theta = Jet3::atan2(x2, x1);
    if theta.value() < 0.0 {
        theta = theta + 2.0 * PI;
    }
    let clamp = (x1 * x1 - 1.0).powi(2) * (x2 * x2 - 1.0).powi(2);
    Ok(clamp * r.powf(1.0 + ALPHA) * plate_angular(theta))
}

/// Polar form of the same function, for cross-checking.
pub fn ugr_polar(r: f64, theta: f64) -> f64 {
    let (am, ap) = (ALPHA - 1.0, ALPHA + 1.0);
    let g = ((am * OMEGA).sin() / am - (ap * OMEGA).sin() / ap) * ((am * theta).cos() - (ap * theta).cos())
        - ((am * theta).sin() / am - (ap * theta).sin() / ap) * ((am * OMEGA).cos() - (ap * OMEGA).cos());
    (r * r * theta.cos().powi(2) - 1.0).powi(2) * (r * r * theta.sin().powi(2) - 1.0).powi(2) * r.powf(1.0 + ALPHA) * g
}

fn cube1(x: &[Jet3; 3]) -> ([Jet3; 3], Jet3) {
    let s = x.map(|xi| (PI * xi).sin());
    let c = x.map(|xi| (PI * xi).cos());
    let u1 = PI * c[1] * s[0] * s[0] * s[1] * s[2];
    let u2 = -PI * c[0] * s[1] * s[1] * s[0] * s[2];
    (([u1, u2, Jet3::constant(0.0)]), Jet3::constant(0.0))
}

fn cube2(x: &[Jet3; 3]) -> ([Jet3; 3], Jet3) {
    let u = [0, 1, 2].map(|i| {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        10.0 * x[i] * x[j].powi(4) + 10.0 * x[i] * x[k].powi(4) - 4.0 * x[i].powi(5)
    });
    let sq = x.map(|xi| xi * xi);
    let p = -60.0 * (sq[0] * sq[1] + sq[0] * sq[2] + sq[1] * sq[2]) + 20.0 * (sq[0] * sq[0] + sq[1] * sq[1] + sq[2] * sq[2]);
    (u, p)
}

fn cube3(x: &[Jet3; 3]) -> ([Jet3; 3], Jet3) {
    let q = x.map(|xi| xi * xi - 1.0);
    let u1 = 2.0 * x[1] * x[2] * q[0] * q[0] * q[1] * q[2];
    let u2 = -1.0 * x[0] * x[2] * q[0] * q[1] * q[1] * q[2];
    let u3 = -1.0 * x[0] * x[1] * q[0] * q[1] * q[2] * q[2];
    ([u1, u2, u3], x[0] * x[1] * x[2])
}

fn curl(psi: &[Jet3; 3]) -> [Jet3; 3] {
    [
        psi[2].partial(1) - psi[1].partial(2),
        psi[0].partial(2) - psi[2].partial(0),
        psi[1].partial(0) - psi[0].partial(1),
    ]
}

fn lshape(x: &[Jet3; 3]) -> Result<([Jet3; 3], Jet3), ManufacturedError> {
    let ugr = eval_ugr(x[0], x[1])?;
    let z = x[2];
    let psi = [(1.0 - z * z).powi(2) * ugr, (PI * z).cos() * ugr, z * ugr];
    Ok((curl(&psi), Jet3::constant(0.0)))
}

impl ExactCase {
    /// A user-defined case without a built-in domain.
    pub fn custom<F>(name: &str, mu: f64, field: F) -> ExactCase
    where
        F: Fn(&[Jet3; 3]) -> ([Jet3; 3], Jet3) + Send + Sync + 'static,
    {
        ExactCase {
            name: name.to_string(),
            mu,
            kind: None,
            field: Arc::new(field),
        }
    }

    pub fn kind(&self) -> Option<CaseKind> {
        self.kind
    }

    pub fn with_mu(mut self, mu: f64) -> ExactCase {
        self.mu = mu;
        self
    }

    /// Velocity and pressure jets at `x`.
    pub fn jets(&self, x: Point) -> Result<([Jet3; 3], Jet3), ManufacturedError> {
        self.jets_to_order(x, 3)
    }

    /// Jets valid at least to derivative order `need`, starting from the
    /// cheapest coordinate jets and raising their order when the field
    /// differentiates internally.
    pub fn jets_to_order(&self, x: Point, need: u8) -> Result<([Jet3; 3], Jet3), ManufacturedError> {
        // the L-shape field is a curl and loses one order
        let mut order = if self.kind == Some(CaseKind::LShape) { (need + 1).min(3) } else { need };
        loop {
            let coords = Jet3::coordinates_to_order(x, order);
            let r = if self.kind == Some(CaseKind::LShape) {
                lshape(&coords)?
            } else {
                (self.field)(&coords)
            };
            let got = r.0.iter().map(Jet3::order).min().unwrap_or(3).min(r.1.order());
            if got >= need || order == 3 {
                return Ok(r);
            }
            order += 1;
        }
    }

    /// Velocity; on the re-entrant edge of the L-shape this is the limit 0.
    pub fn u(&self, x: Point) -> Point {
        match self.jets_to_order(x, 0) {
            Ok((u, _)) => u.map(|c| c.value()),
            Err(_) => [0.0; 3],
        }
    }

    pub fn p(&self, x: Point) -> f64 {
        self.jets_to_order(x, 0).map_or(0.0, |(_, p)| p.value())
    }

    /// `grad[i][j] = ∂_j u_i`
    pub fn grad_u(&self, x: Point) -> Result<[[f64; 3]; 3], ManufacturedError> {
        let (u, _) = self.jets_to_order(x, 1)?;
        Ok(u.map(|c| c.gradient()))
    }

    /// `g = −2μ div ε(u) + ∇p`
    pub fn body_force(&self, x: Point) -> Result<Point, ManufacturedError> {
        let (u, p) = self.jets_to_order(x, 2)?;
        let h = u.map(|c| c.hessian());
        let gp = p.gradient();
        Ok([0, 1, 2].map(|i| {
            let mut div_eps2 = 0.0;
            for j in 0..3 {
                div_eps2 += h[i][j][j] + h[j][i][j];
            }
            -self.mu * div_eps2 + gp[i]
        }))
    }

    /// `(2μ ε(u) − p I) ν`
    pub fn traction(&self, x: Point, normal: Point) -> Result<Point, ManufacturedError> {
        let (u, p) = self.jets_to_order(x, 1)?;
        let g = u.map(|c| c.gradient());
        let pv = p.value();
        Ok([0, 1, 2].map(|i| {
            (0..3)
                .map(|j| {
                    let s = self.mu * (g[i][j] + g[j][i]) - if i == j { pv } else { 0.0 };
                    s * normal[j]
                })
                .sum()
        }))
    }

    pub fn divergence(&self, x: Point) -> Result<f64, ManufacturedError> {
        let g = self.grad_u(x)?;
        Ok(g[0][0] + g[1][1] + g[2][2])
    }

    /// Labels for boundary faces of this case's domain.
    pub fn classify(&self, f: &BoundaryFace) -> Option<BoundaryLabel> {
        let c = f.centroid;
        let tol = 1e-12;
        let inside = |v: f64| v > 0.0 && v < 1.0;
        let neumann = match self.kind? {
            CaseKind::Cube1 => c[2].abs() < tol,
            CaseKind::Cube2 | CaseKind::Cube3 => (c[2] + 1.0).abs() < tol && inside(c[0]) && inside(c[1]),
            CaseKind::LShape => (c[0] - 1.0).abs() < tol && inside(c[1]),
        };
        Some(if neumann {
            BoundaryLabel::Neumann
        } else {
            BoundaryLabel::Dirichlet
        })
    }

    /// The coarsest mesh of the case's domain.
    pub fn initial_mesh(&self) -> Result<Mesh, ManufacturedError> {
        let kind = self.kind.ok_or_else(|| ManufacturedError::NoDomain(self.name.clone()))?;
        let classify = |f: &BoundaryFace| self.classify(f);
        Ok(match kind {
            CaseKind::Cube1 => builtin::cube_grid([0.0; 3], 1.0, classify),
            CaseKind::Cube2 | CaseKind::Cube3 => builtin::cube_grid([-1.0; 3], 2.0, classify),
            CaseKind::LShape => builtin::lshape_grid(classify),
        })
    }
}

/// One of the built-in cases with `μ = 1`.
pub fn case_library(name: &str) -> Result<ExactCase, ManufacturedError> {
    let kind = CaseKind::parse(name).ok_or_else(|| ManufacturedError::UnknownCase(name.to_string()))?;
    let field: Arc<Field> = match kind {
        CaseKind::Cube1 => Arc::new(cube1),
        CaseKind::Cube2 => Arc::new(cube2),
        CaseKind::Cube3 => Arc::new(cube3),
        // evaluated through `lshape` so that the corner error propagates
        CaseKind::LShape => Arc::new(|x: &[Jet3; 3]| lshape(x).unwrap_or(([Jet3::constant(0.0); 3], Jet3::constant(0.0)))),
    };
    Ok(ExactCase {
        name: kind.name().to_string(),
        mu: 1.0,
        kind: Some(kind),
        field,
    })
}

/// Velocity and pressure errors of a discrete solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    pub u_l2: f64,
    /// `‖∇u − ∇_h u_h‖`
    pub u_h1_semi: f64,
    /// Broken norm `(‖·‖² + ‖∇_h ·‖²)^½`.
    pub u_h1: f64,
    pub p_l2: f64,
}

/// Errors of `(coeffs, pressure)` against the case, degree-8 quadrature.
pub fn error_norms(mesh: &Mesh, space: &VelocitySpace, coeffs: &[f64], pressure: &[f64], case: &ExactCase) -> ErrorNorms {
    let rule = quadrature::rule_for_degree(8).expect("degree-8 rule");
    let (mut l2, mut semi, mut pl2) = (0.0, 0.0, 0.0);
    for c in 0..mesh.num_cells() {
        let dofs = space.local_dofs(mesh, c);
        let vol = mesh.volume_of(c);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.map_point(c, l);
            let vals = space.eval_local(mesh, c, &dofs, l);
            let mut uh = [0.0; 3];
            let mut gh = [[0.0; 3]; 3];
            for (d, v) in dofs.iter().zip(&vals) {
                let k = coeffs[d.global];
                for i in 0..3 {
                    uh[i] += k * v.value[i];
                    for j in 0..3 {
                        gh[i][j] += k * v.grad[i][j];
                    }
                }
            }
            let (uj, pj) = case.jets_to_order(x, 1).expect("quadrature points avoid the re-entrant edge");
            let wv = w * vol;
            for i in 0..3 {
                l2 += wv * (uj[i].value() - uh[i]).powi(2);
                let g = uj[i].gradient();
                for j in 0..3 {
                    semi += wv * (g[j] - gh[i][j]).powi(2);
                }
            }
            pl2 += wv * (pj.value() - pressure[c]).powi(2);
        }
    }
    ErrorNorms {
        u_l2: l2.sqrt(),
        u_h1_semi: semi.sqrt(),
        u_h1: (l2 + semi).sqrt(),
        p_l2: pl2.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube1_vanishes_at_centre() {
        let c = case_library("cube1").unwrap();
        let u = c.u([0.5; 3]);
        assert!(u.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn cube2_at_origin() {
        let c = case_library("cube2").unwrap();
        assert_eq!(c.p([0.0; 3]), 0.0);
        assert_eq!(c.u([0.0; 3]), [0.0; 3]);
    }

    #[test]
    fn unknown_case() {
        assert_eq!(case_library("sphere").unwrap_err(), ManufacturedError::UnknownCase("sphere".into()));
    }

    #[test]
    fn plate_function_vanishes_on_clamped_edges() {
        for p in [[1.0, 0.3], [-1.0, 0.3], [-0.4, 1.0], [-0.2, -1.0]] {
            let [x, y, _] = Jet3::coordinates([p[0], p[1], 0.0]);
            let v = eval_ugr(x, y).unwrap();
            assert!(v.value().abs() < 1e-15);
            assert!(v.gradient().iter().all(|g| g.abs() < 1e-13));
        }
        let [x, y, _] = Jet3::coordinates([0.0, 0.0, 0.0]);
        assert!(matches!(eval_ugr(x, y), Err(ManufacturedError::EvaluationAtCorner(_))));
    }

    #[test]
    fn plate_function_polar_and_cartesian_agree() {
        let (r, t) = (0.5, PI / 4.0);
        let [x, y, _] = Jet3::coordinates([r * t.cos(), r * t.sin(), 0.0]);
        let v = eval_ugr(x, y).unwrap().value();
        assert!((v - ugr_polar(r, t)).abs() < 1e-12);
        // third quadrant exercises the angle branch
        let t = 1.2 * PI;
        let [x, y, _] = Jet3::coordinates([r * t.cos(), r * t.sin(), 0.0]);
        assert!((eval_ugr(x, y).unwrap().value() - ugr_polar(r, t)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_field_body_force() {
        let c = ExactCase::custom("x1sq", 0.5, |x| ([x[0] * x[0], Jet3::constant(0.0), Jet3::constant(0.0)], Jet3::constant(0.0)));
        let g = c.body_force([0.3, 0.1, 0.7]).unwrap();
        assert!((g[0] + 2.0).abs() < 1e-14 && g[1] == 0.0 && g[2] == 0.0);
        let rigid = ExactCase::custom("rigid", 1.0, |x| ([1.0 - x[1], x[0] + 2.0, Jet3::constant(3.0)], Jet3::constant(0.0)));
        assert!(rigid.body_force([0.2, 0.2, 0.2]).unwrap().iter().all(|v| v.abs() < 1e-15));
    }
}
