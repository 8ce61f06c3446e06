//! Checkers for the two mesh assumptions the stability results rely on.
//!
//! (H1) excludes horizontal Dirichlet faces that are surrounded by Neumann
//! boundary; (H2) excludes interior faces with all three vertices on the
//! boundary and single-cell meshes.

use serde::Serialize;

use super::{BoundaryLabel, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum H2Violation {
    /// The mesh consists of a single simplex.
    SingleSimplex,
    /// Interior face whose three vertices lie on the boundary.
    BoundaryInteriorFace { face: usize },
}

/// A horizontal Dirichlet face for which neither (a) nor (b) holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct H1Violation {
    pub face: usize,
}

pub(super) fn check_h2(mesh: &Mesh) -> Vec<H2Violation> {
    let mut out = Vec::new();
    if mesh.num_cells() == 1 {
        out.push(H2Violation::SingleSimplex);
    }
    let on_boundary = mesh.boundary_vertex_mask();
    for (f, face) in mesh.faces().iter().enumerate() {
        if !face.is_boundary() && face.vertices.iter().all(|&v| on_boundary[v]) {
            out.push(H2Violation::BoundaryInteriorFace { face: f });
        }
    }
    out
}

pub(super) fn check_h1(mesh: &Mesh) -> Vec<H1Violation> {
    let faces = mesh.faces();
    let mut dirichlet_at: Vec<Vec<usize>> = vec![Vec::new(); mesh.num_vertices()];
    for (f, face) in faces.iter().enumerate() {
        if face.label == BoundaryLabel::Dirichlet {
            for &v in &face.vertices {
                dirichlet_at[v].push(f);
            }
        }
    }

    let common_with = |a: usize, b: usize, c: usize| -> usize {
        faces[a]
            .vertices
            .iter()
            .filter(|v| faces[b].vertices.contains(v) && faces[c].vertices.contains(v))
            .count()
    };

    let mut out = Vec::new();
    for (f, face) in faces.iter().enumerate() {
        if face.label != BoundaryLabel::Dirichlet || !face.is_horizontal() {
            continue;
        }
        // (a): a vertex shared with a non-horizontal Dirichlet face
        let cond_a = face
            .vertices
            .iter()
            .any(|&z| dirichlet_at[z].iter().any(|&g| g != f && !faces[g].is_horizontal()));
        if cond_a {
            continue;
        }
        // (b): a vertex z and two further Dirichlet faces with {z} = F ∩ F' ∩ F''
        let cond_b = face.vertices.iter().any(|&z| {
            let around: Vec<usize> = dirichlet_at[z].iter().copied().filter(|&g| g != f).collect();
            around.iter().enumerate().any(|(i, &g1)| {
                around[i + 1..].iter().any(|&g2| common_with(f, g1, g2) == 1)
            })
        });
        if !cond_b {
            out.push(H1Violation { face: f });
        }
    }
    out
}
