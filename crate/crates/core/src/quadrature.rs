//! Quadrature on tetrahedra and triangles in barycentric coordinates.
//!
//! Cell rules of degree >= 3 are conical (collapsed-coordinate) products of
//! Gauss–Jacobi rules: all weights are positive and the point count is fixed
//! per degree. Weights are normalised to sum to one; multiply by the cell
//! volume (or face area) to integrate.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::geometry::Point;
use crate::mesh::Mesh;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadratureError {
    #[error("no rule of degree {0} is available")]
    UnsupportedDegree(u32),
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

#[derive(Debug, Clone)]
pub struct FaceRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: u32,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

const SUPPORTED: [u32; 7] = [1, 2, 3, 4, 5, 6, 8];

/// Cell rule exact for polynomials of total degree `degree`.
pub fn rule_for_degree(degree: u32) -> Result<&'static QuadratureRule, QuadratureError> {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    let slot = SUPPORTED
        .iter()
        .position(|&d| d == degree)
        .ok_or(QuadratureError::UnsupportedDegree(degree))?;
    let rules = RULES.get_or_init(|| SUPPORTED.iter().map(|&d| build_cell_rule(d)).collect());
    Ok(&rules[slot])
}

/// Triangle rule for `degree` in {1, 2, 4}.
pub fn face_rule(degree: u32) -> Result<&'static FaceRule, QuadratureError> {
    static RULES: OnceLock<[FaceRule; 3]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        let third = 1.0 / 3.0;
        let centroid = FaceRule {
            points: vec![[third; 3]],
            weights: vec![1.0],
            degree: 1,
        };
        let (a, b) = (1.0 / 6.0, 2.0 / 3.0);
        let three = FaceRule {
            points: vec![[b, a, a], [a, b, a], [a, a, b]],
            weights: vec![third; 3],
            degree: 2,
        };
        // Strang–Fix / Dunavant six-point rule
        let a1 = 0.445_948_490_915_964_886_318_329_253_883;
        let w1 = 0.223_381_589_678_011_465_695_007_008_433;
        let a2 = 0.091_576_213_509_770_743_459_571_463_402_2;
        let w2 = 0.109_951_743_655_321_867_638_326_324_900;
        let (c1, c2) = (1.0 - 2.0 * a1, 1.0 - 2.0 * a2);
        let six = FaceRule {
            points: vec![[c1, a1, a1], [a1, c1, a1], [a1, a1, c1], [c2, a2, a2], [a2, c2, a2], [a2, a2, c2]],
            weights: vec![w1, w1, w1, w2, w2, w2],
            degree: 4,
        };
        [centroid, three, six]
    });
    match degree {
        1 => Ok(&rules[0]),
        2 => Ok(&rules[1]),
        3 | 4 => Ok(&rules[2]),
        d => Err(QuadratureError::UnsupportedDegree(d)),
    }
}

/// `∫_T f dx` with the given rule.
pub fn integrate<F>(mesh: &Mesh, cell: usize, f: F, rule: &QuadratureRule) -> f64
where
    F: Fn(Point) -> f64,
{
    let mut s = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        s += w * f(mesh.map_point(cell, p));
    }
    s * mesh.volume_of(cell)
}

/// `∫_F f ds` over a face of the mesh.
pub fn integrate_face<F>(mesh: &Mesh, face: usize, f: F, rule: &FaceRule) -> f64
where
    F: Fn(Point) -> f64,
{
    let fc = &mesh.faces()[face];
    let x = fc.vertices.map(|v| mesh.vertices()[v]);
    let mut s = 0.0;
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let q = [0, 1, 2].map(|k| p[0] * x[0][k] + p[1] * x[1][k] + p[2] * x[2][k]);
        s += w * f(q);
    }
    s * fc.area
}

fn build_cell_rule(degree: u32) -> QuadratureRule {
    if degree == 1 {
        return QuadratureRule {
            points: vec![[0.25; 4]],
            weights: vec![1.0],
            degree,
        };
    }
    if degree == 2 {
        let a = 0.585_410_196_624_968_5;
        let b = 0.138_196_601_125_010_5;
        return QuadratureRule {
            points: vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
            weights: vec![0.25; 4],
            degree,
        };
    }
    let n = (degree as usize + 2) / 2;
    let (u, wu) = gauss_jacobi_unit(n, 2.0);
    let (v, wv) = gauss_jacobi_unit(n, 1.0);
    let (w, ww) = gauss_jacobi_unit(n, 0.0);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let x = u[i];
                let y = (1.0 - u[i]) * v[j];
                let z = (1.0 - u[i]) * (1.0 - v[j]) * w[k];
                points.push([1.0 - x - y - z, x, y, z]);
                weights.push(6.0 * wu[i] * wv[j] * ww[k]);
            }
        }
    }
    QuadratureRule {
        points,
        weights,
        degree,
    }
}

/// Gauss–Jacobi nodes and weights on `[0, 1]` for the weight `(1 - t)^alpha`
/// (Golub–Welsch).
fn gauss_jacobi_unit(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let beta = 0.0;
    let ab = alpha + beta;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        jm[(k, k)] = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let b = 4.0 * m * (m + alpha) * (m + beta) * (m + ab)
                / ((2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0));
            jm[(k, k + 1)] = b.sqrt();
            jm[(k + 1, k)] = b.sqrt();
        }
    }
    let mu0 = 2f64.powf(ab + 1.0) / (ab + 1.0);
    let eig = SymmetricEigen::new(jm);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let w = mu0 * eig.eigenvectors[(0, i)].powi(2);
            ((1.0 + x) / 2.0, w / 2f64.powf(alpha + 1.0))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builtin, BoundaryLabel};

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// `∫_T λ^a / |T| = 6 a! / (|a| + 3)!`
    fn monomial_mean(a: [u32; 4]) -> f64 {
        6.0 * a.iter().map(|&k| factorial(k)).product::<f64>() / factorial(a.iter().sum::<u32>() + 3)
    }

    /// `∫_F λ^a / |F| = 2 a! / (|a| + 2)!`
    fn face_monomial_mean(a: [u32; 3]) -> f64 {
        2.0 * a.iter().map(|&k| factorial(k)).product::<f64>() / factorial(a.iter().sum::<u32>() + 2)
    }

    fn multi_indices(max: u32) -> Vec<[u32; 4]> {
        let mut out = Vec::new();
        for a in 0..=max {
            for b in 0..=max - a {
                for c in 0..=max - a - b {
                    for d in 0..=max - a - b - c {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn cell_rules_are_exact_on_monomials() {
        for &d in &SUPPORTED {
            let rule = rule_for_degree(d).unwrap();
            assert!(rule.degree >= d);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14, "degree {d}: weights sum to {wsum}");
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for p in &rule.points {
                assert!(p.iter().all(|&l| (0.0..=1.0).contains(&l)));
            }
            for a in multi_indices(d) {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * (0..4).map(|i| p[i].powi(a[i] as i32)).product::<f64>())
                    .sum();
                let exact = monomial_mean(a);
                assert!((q - exact).abs() <= 1e-12 * exact, "degree {d}, a = {a:?}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn face_rules_are_exact_on_monomials() {
        for d in [1u32, 2, 4] {
            let rule = face_rule(d).unwrap();
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in multi_indices(d).into_iter().filter(|a| a[3] == 0) {
                let a = [a[0], a[1], a[2]];
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * (0..3).map(|i| p[i].powi(a[i] as i32)).product::<f64>())
                    .sum();
                let exact = face_monomial_mean(a);
                assert!((q - exact).abs() <= 1e-12 * exact, "face degree {d}, a = {a:?}");
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert_eq!(rule_for_degree(7).unwrap_err(), QuadratureError::UnsupportedDegree(7));
        assert!(face_rule(5).is_err());
    }

    #[test]
    fn centroid_rule() {
        let r = rule_for_degree(1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.weights[0], 1.0);
        assert_eq!(r.points[0], [0.25; 4]);
    }

    #[test]
    fn reference_tet_examples() {
        let m = builtin::reference_tet(BoundaryLabel::Dirichlet);
        let r2 = rule_for_degree(2).unwrap();
        // ∫ λ1² = |T| · 2! 3! / 5! = 1/60
        let v = integrate(&m, 0, |x| x[0] * x[0], r2);
        assert!((v - 1.0 / 60.0).abs() < 1e-15);
        assert!((integrate(&m, 0, |_| 1.0, rule_for_degree(1).unwrap()) - 1.0 / 6.0).abs() < 1e-16);
        assert!((integrate(&m, 0, |x| x[0], r2) - 1.0 / 24.0).abs() < 1e-16);
        assert!((integrate(&m, 0, |x| x[0] + x[1] + x[2], r2) - 1.0 / 8.0).abs() < 1e-15);
        // ∫ (60 λ1 λ2 λ3)² = 3600 · 6|T| · 2!2!2! / 9!
        let r6 = rule_for_degree(6).unwrap();
        let bubble = integrate(&m, 0, |x| (60.0 * x[0] * x[1] * x[2]).powi(2), r6);
        let exact = 3600.0 * 6.0 / 6.0 * 8.0 / 362_880.0;
        assert!((bubble - exact).abs() < 1e-13 * exact);
    }
}
