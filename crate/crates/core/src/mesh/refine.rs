use std::collections::HashMap;

use super::{BoundaryLabel, Mesh, MeshError};
use crate::geometry::{self, Point};

/// Corner children of a red refinement, in terms of the parent's local
/// vertices `0..4` and local edge midpoints `4..10` (ordered as `LOCAL_EDGES`).
const CORNERS: [[usize; 4]; 4] = [[0, 4, 5, 6], [4, 1, 7, 8], [5, 7, 2, 9], [6, 8, 9, 3]];

/// The three octahedron diagonals (pairs of opposite edge midpoints) and, for
/// each, the remaining four midpoints in cyclic order around it.
const DIAGONALS: [([usize; 2], [usize; 4]); 3] = [
    ([4, 9], [5, 6, 8, 7]),
    ([5, 8], [4, 6, 9, 7]),
    ([6, 7], [4, 5, 9, 8]),
];

pub(super) fn red_refine(mesh: &Mesh) -> Result<Mesh, MeshError> {
    let nv = mesh.num_vertices();
    let mut vertices: Vec<Point> = mesh.vertices().to_vec();
    for e in mesh.edges() {
        vertices.push(geometry::midpoint(vertices[e[0]], vertices[e[1]]));
    }

    let mut cells = Vec::with_capacity(8 * mesh.num_cells());
    for c in 0..mesh.num_cells() {
        let mut local = [0usize; 10];
        local[..4].copy_from_slice(&mesh.cells()[c]);
        for (k, &e) in mesh.cell_edges(c).iter().enumerate() {
            local[4 + k] = nv + e;
        }
        let orient = |mut t: [usize; 4]| {
            let x = t.map(|v| vertices[v]);
            if geometry::signed_volume6(x[0], x[1], x[2], x[3]) < 0.0 {
                t.swap(2, 3);
            }
            t
        };
        for corner in CORNERS {
            cells.push(orient(corner.map(|l| local[l])));
        }

        // Shortest diagonal; ties broken by the smallest sorted index pair.
        let mut best = 0;
        let mut best_len = f64::INFINITY;
        let mut best_key = [usize::MAX; 2];
        for (d, (pair, _)) in DIAGONALS.iter().enumerate() {
            let (a, b) = (local[pair[0]], local[pair[1]]);
            let len = geometry::distance(vertices[a], vertices[b]);
            let key = [a.min(b), a.max(b)];
            let tie = (len - best_len).abs() <= 1e-12 * best_len.min(len);
            if (!tie && len < best_len) || (tie && key < best_key) {
                best = d;
                best_len = len;
                best_key = key;
            }
        }
        let (pair, ring) = DIAGONALS[best];
        for k in 0..4 {
            let t = [local[pair[0]], local[pair[1]], local[ring[k]], local[ring[(k + 1) % 4]]];
            cells.push(orient(t));
        }
    }

    // Each parent boundary face splits into four children with its label.
    let mut labels: HashMap<[usize; 3], BoundaryLabel> = HashMap::new();
    let edge_of = edge_lookup(mesh);
    for f in mesh.faces().iter().filter(|f| f.is_boundary()) {
        let [a, b, c] = f.vertices;
        let m = |x: usize, y: usize| nv + edge_of[&(x.min(y), x.max(y))];
        let (ab, ac, bc) = (m(a, b), m(a, c), m(b, c));
        for mut t in [[a, ab, ac], [b, ab, bc], [c, ac, bc], [ab, ac, bc]] {
            t.sort_unstable();
            labels.insert(t, f.label);
        }
    }
    Mesh::new(vertices, cells, |bf| labels.get(&bf.vertices).copied())
}

fn edge_lookup(mesh: &Mesh) -> HashMap<(usize, usize), usize> {
    mesh.edges()
        .iter()
        .enumerate()
        .map(|(i, e)| ((e[0], e[1]), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{builtin, LOCAL_EDGES};

    fn min_dihedral_angle(x: &[Point; 4]) -> f64 {
        // angle between the two faces sharing each edge
        let mut min = f64::INFINITY;
        for e in LOCAL_EDGES {
            let others: Vec<usize> = (0..4).filter(|i| !e.contains(i)).collect();
            let axis = geometry::sub(x[e[1]], x[e[0]]);
            let axis = geometry::scale(1.0 / geometry::norm(axis), axis);
            let perp = |p: Point| {
                let d = geometry::sub(p, x[e[0]]);
                geometry::sub(d, geometry::scale(geometry::dot(d, axis), axis))
            };
            let u = perp(x[others[0]]);
            let v = perp(x[others[1]]);
            let cos = geometry::dot(u, v) / (geometry::norm(u) * geometry::norm(v));
            min = min.min(cos.clamp(-1.0, 1.0).acos());
        }
        min
    }

    fn angle_set(m: &Mesh) -> Vec<f64> {
        let mut a: Vec<f64> = (0..m.num_cells()).map(|c| min_dihedral_angle(&m.cell_vertices(c))).collect();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        a
    }

    #[test]
    fn one_cell_becomes_eight() {
        let m = builtin::reference_tet(BoundaryLabel::Dirichlet);
        let r = m.red_refine().unwrap();
        assert_eq!(r.num_cells(), 8);
        assert!((r.volume() - m.volume()).abs() <= 1e-13 * m.volume());
        for c in 0..8 {
            assert!((r.volume_of(c) - m.volume() / 8.0).abs() < 1e-15);
        }
    }

    #[test]
    fn octahedron_patch_twice() {
        let m = builtin::octahedron_patch();
        let r = m.red_refine().unwrap().red_refine().unwrap();
        assert_eq!(r.num_cells(), 8 * 64);
        assert!((r.volume() - m.volume()).abs() <= 1e-13 * m.volume());
        assert!((r.boundary_area() - m.boundary_area()).abs() <= 1e-12 * m.boundary_area());
    }

    #[test]
    fn labels_and_boundary_vertices_are_inherited() {
        let m = builtin::cube_grid([0.0; 3], 1.0, |f| {
            Some(if f.centroid[2] < 1e-12 {
                BoundaryLabel::Neumann
            } else {
                BoundaryLabel::Dirichlet
            })
        });
        let r = m.red_refine().unwrap();
        let area = |mesh: &Mesh, l| mesh.faces().iter().filter(|f| f.label == l).map(|f| f.area).sum::<f64>();
        assert!((area(&r, BoundaryLabel::Neumann) - 1.0).abs() < 1e-12);
        assert!((area(&r, BoundaryLabel::Dirichlet) - 5.0).abs() < 1e-12);
        let before = m.boundary_vertex_mask();
        let after = r.boundary_vertex_mask();
        assert_eq!(&after[..m.num_vertices()], &before[..]);
    }

    #[test]
    fn similarity_classes_stabilise() {
        let m = builtin::reference_tet(BoundaryLabel::Dirichlet);
        let l1 = m.red_refine().unwrap();
        let l2 = l1.red_refine().unwrap();
        let l3 = l2.red_refine().unwrap();
        let a2 = angle_set(&l2);
        let a3 = angle_set(&l3);
        assert_eq!(a2.len(), a3.len());
        for (x, y) in a2.iter().zip(&a3) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}
