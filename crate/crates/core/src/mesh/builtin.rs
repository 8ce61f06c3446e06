//! Hand-built meshes: the two instability patches, small test meshes and the
//! cuboid assemblies used as coarse meshes for the experiments.

use std::collections::{BTreeSet, HashMap};

use super::{BoundaryFace, BoundaryLabel, Mesh};
use crate::geometry::{self, Point};

fn orient(vertices: &[Point], mut cell: [usize; 4]) -> [usize; 4] {
    let x = cell.map(|v| vertices[v]);
    if geometry::signed_volume6(x[0], x[1], x[2], x[3]) < 0.0 {
        cell.swap(2, 3);
    }
    cell
}

fn build(vertices: Vec<Point>, cells: Vec<[usize; 4]>, label: BoundaryLabel) -> Mesh {
    let cells = cells.into_iter().map(|c| orient(&vertices, c)).collect();
    Mesh::new(vertices, cells, |_| Some(label)).expect("builtin mesh is valid")
}

/// `conv{0, e1, e2, e3}` with every face labelled `label`.
pub fn reference_tet(label: BoundaryLabel) -> Mesh {
    build(
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        vec![[0, 1, 2, 3]],
        label,
    )
}

/// The reference tetrahedron with its bottom face `x3 = 0` Dirichlet and the
/// other three faces Neumann: a horizontal Dirichlet island.
pub fn horizontal_island_tet() -> Mesh {
    let vertices = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    Mesh::new(vertices, vec![[0, 1, 2, 3]], |f| {
        Some(if f.normal[2] < -0.5 {
            BoundaryLabel::Dirichlet
        } else {
            BoundaryLabel::Neumann
        })
    })
    .expect("valid")
}

/// Index of the cell `T_jkl = conv{0, (-1)^j e1, (-1)^k e2, (-1)^l e3}` of the
/// octahedron patch, `j, k, l` in `{1, 2}`.
pub fn octahedron_cell(j: usize, k: usize, l: usize) -> usize {
    assert!((1..=2).contains(&j) && (1..=2).contains(&k) && (1..=2).contains(&l));
    4 * (j - 1) + 2 * (k - 1) + (l - 1)
}

/// Vertex patch of the origin in the octahedron `|x1| + |x2| + |x3| <= 1`,
/// eight cells, pure Dirichlet boundary.
pub fn octahedron_patch() -> Mesh {
    octahedron_patch_with(|_| Some(BoundaryLabel::Dirichlet))
}

pub fn octahedron_patch_with<F>(classify: F) -> Mesh
where
    F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
{
    // 0 = origin, then (-1)^j e_i at 1 + 2i + (j - 1)
    let mut vertices = vec![[0.0; 3]];
    for i in 0..3 {
        for j in 1..=2 {
            let mut p = [0.0; 3];
            p[i] = if j == 1 { -1.0 } else { 1.0 };
            vertices.push(p);
        }
    }
    let axis = |i: usize, j: usize| 1 + 2 * i + (j - 1);
    let mut cells = Vec::new();
    for j in 1..=2 {
        for k in 1..=2 {
            for l in 1..=2 {
                cells.push(orient(&vertices, [0, axis(0, j), axis(1, k), axis(2, l)]));
            }
        }
    }
    Mesh::new(vertices, cells, classify).expect("valid")
}

/// Four cells around the edge `conv{0, e1}`, listed as
/// `{0,e1,e2,e3}, {0,e1,-e2,e3}, {0,e1,-e2,-e3}, {0,e1,e2,-e3}`; pure Dirichlet.
pub fn korn_wedge() -> Mesh {
    let vertices = vec![
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let cells = vec![[0, 1, 2, 4], [0, 1, 3, 4], [0, 1, 3, 5], [0, 1, 2, 5]];
    build(vertices, cells, BoundaryLabel::Dirichlet)
}

/// Pyramid over the square `{0} x (-1,1)^2` with apex `e1`; the base square is
/// cut along both diagonals, giving four cells (top, left, bottom, right in the
/// `(x2, x3)` plane); pure Dirichlet.
pub fn korn_tensor() -> Mesh {
    let vertices = vec![
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0],
        [0.0, 1.0, 1.0],
        [0.0, -1.0, 1.0],
        [0.0, -1.0, -1.0],
        [0.0, 1.0, -1.0],
    ];
    let cells = vec![[0, 1, 2, 3], [0, 1, 3, 4], [0, 1, 4, 5], [0, 1, 5, 2]];
    build(vertices, cells, BoundaryLabel::Dirichlet)
}

/// Unit cube split into the six Kuhn simplices around the main diagonal.
pub fn kuhn_cube(label: BoundaryLabel) -> Mesh {
    let mut vertices = Vec::new();
    for i in 0..8 {
        vertices.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
    }
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let cells = perms
        .iter()
        .map(|p| {
            let a = 1 << p[0];
            let b = a | (1 << p[1]);
            [0, a, b, 7]
        })
        .collect();
    build(vertices, cells, label)
}

/// Assembly of axis-aligned boxes with edge lengths `spacing`, the block
/// with integer coordinates `b` covering `origin + spacing * [b, b + 1]`
/// componentwise.
///
/// Every block is coned from its centre over a triangulation of its six
/// square faces. A square shared by two blocks is cut along the diagonal
/// through its smallest interior grid corner, or fanned from an added face
/// centre when all its corners lie on the boundary, so no interior face has
/// all three vertices on the boundary. Boundary squares are cut along the
/// diagonal through their smallest corner.
pub fn block_assembly<F>(origin: Point, spacing: Point, blocks: &[[i64; 3]], classify: F) -> Mesh
where
    F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
{
    let set: BTreeSet<[i64; 3]> = blocks.iter().copied().collect();
    // vertex keys in half-spacing units
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut vid = |key: [i64; 3], vertices: &mut Vec<Point>| -> usize {
        *index.entry(key).or_insert_with(|| {
            vertices.push([
                origin[0] + 0.5 * spacing[0] * key[0] as f64,
                origin[1] + 0.5 * spacing[1] * key[1] as f64,
                origin[2] + 0.5 * spacing[2] * key[2] as f64,
            ]);
            vertices.len() - 1
        })
    };
    let interior_grid_point = |g: [i64; 3]| -> bool {
        (0..8).all(|m| {
            set.contains(&[
                g[0] - 1 + (m & 1) as i64,
                g[1] - 1 + ((m >> 1) & 1) as i64,
                g[2] - 1 + ((m >> 2) & 1) as i64,
            ])
        })
    };

    let mut cells = Vec::new();
    for b in &set {
        let centre = vid([2 * b[0] + 1, 2 * b[1] + 1, 2 * b[2] + 1], &mut vertices);
        for axis in 0..3 {
            let (u, w) = ((axis + 1) % 3, (axis + 2) % 3);
            for side in 0..2 {
                let mut neighbour = *b;
                neighbour[axis] += if side == 0 { -1 } else { 1 };
                let shared = set.contains(&neighbour);
                // grid corners in cyclic order
                let corners: Vec<[i64; 3]> = [(0, 0), (1, 0), (1, 1), (0, 1)]
                    .iter()
                    .map(|&(du, dw)| {
                        let mut g = *b;
                        g[axis] += side;
                        g[u] += du;
                        g[w] += dw;
                        g
                    })
                    .collect();
                let keys: Vec<[i64; 3]> = corners.iter().map(|g| g.map(|x| 2 * x)).collect();
                let pick = |candidates: &[usize]| -> Option<usize> { candidates.iter().copied().min_by_key(|&q| corners[q]) };
                let all: Vec<usize> = (0..4).collect();
                let diagonal_from = if shared {
                    let interior: Vec<usize> = all.iter().copied().filter(|&q| interior_grid_point(corners[q])).collect();
                    pick(&interior)
                } else {
                    pick(&all)
                };
                let ids: Vec<usize> = keys.iter().map(|&k| vid(k, &mut vertices)).collect();
                match diagonal_from {
                    Some(q) => {
                        let t = |o: usize| ids[(q + o) % 4];
                        cells.push([centre, t(0), t(1), t(2)]);
                        cells.push([centre, t(0), t(2), t(3)]);
                    }
                    None => {
                        let mut fc = keys[0];
                        fc[u] += 1;
                        fc[w] += 1;
                        let fid = vid(fc, &mut vertices);
                        for q in 0..4 {
                            cells.push([centre, fid, ids[q], ids[(q + 1) % 4]]);
                        }
                    }
                }
            }
        }
    }
    let cells = cells.into_iter().map(|c| orient(&vertices, c)).collect();
    Mesh::new(vertices, cells, classify).expect("block assembly is valid")
}

/// Cube `origin + [0, size]^3` as 2 x 2 x 2 blocks.
pub fn cube_grid<F>(origin: Point, size: f64, classify: F) -> Mesh
where
    F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
{
    let mut blocks = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                blocks.push([i, j, k]);
            }
        }
    }
    block_assembly(origin, [0.5 * size; 3], &blocks, classify)
}

/// `((-1,1)^2 \ ([0,1] x [-1,0])) x (-1,1)` as three `1 x 1 x 2` cuboids,
/// each split like [`cube_grid`] into 2 x 2 x 2 blocks.
pub fn lshape_grid<F>(classify: F) -> Mesh
where
    F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
{
    let mut blocks = Vec::new();
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        for m in 0..8 {
            blocks.push([2 * i + (m & 1), 2 * j + ((m >> 1) & 1), (m >> 2) & 1]);
        }
    }
    block_assembly([-1.0, -1.0, -1.0], [0.5, 0.5, 1.0], &blocks, classify)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_grid_is_valid() {
        let m = cube_grid([0.0; 3], 1.0, |_| Some(BoundaryLabel::Dirichlet));
        assert_eq!(m.num_cells(), 96);
        assert!((m.volume() - 1.0).abs() < 1e-13);
        assert!(m.check_h2().is_empty());
    }

    #[test]
    fn lshape_grid_is_valid() {
        let m = lshape_grid(|_| Some(BoundaryLabel::Dirichlet));
        assert!((m.volume() - 6.0).abs() < 1e-13);
        assert!(m.check_h2().is_empty());
        assert!(m.check_h1().is_empty());
    }

    #[test]
    fn wedge_and_tensor_patches() {
        let w = korn_wedge();
        assert_eq!(w.num_cells(), 4);
        assert!((w.volume() - 4.0 / 6.0).abs() < 1e-14);
        assert_eq!(w.faces().iter().filter(|f| !f.is_boundary()).count(), 4);
        let t = korn_tensor();
        assert!((t.volume() - 4.0 / 3.0).abs() < 1e-14);
        assert_eq!(t.faces().iter().filter(|f| !f.is_boundary()).count(), 4);
    }

    #[test]
    fn kuhn_cube_volume() {
        let m = kuhn_cube(BoundaryLabel::Dirichlet);
        assert_eq!(m.num_cells(), 6);
        assert!((m.volume() - 1.0).abs() < 1e-14);
    }
}
