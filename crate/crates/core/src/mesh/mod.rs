//! Conforming tetrahedral meshes.
//!
//! A [`Mesh`] is immutable once built. Faces are deduplicated by their sorted
//! vertex triple and carry one fixed unit normal: it points out of the incident
//! cell with the smaller index (`plus`), which for boundary faces is the outward
//! normal of the domain. Local face `i` of a cell is the face opposite local
//! vertex `i`.

mod assumptions;
pub mod builtin;
pub mod io;
mod refine;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Point};

pub use assumptions::{H1Violation, H2Violation};

/// Boundary condition carried by a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryLabel {
    Interior,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("cell {cell} references vertex {vertex}, but the mesh has {num_vertices} vertices")]
    IndexOutOfRange {
        cell: usize,
        vertex: usize,
        num_vertices: usize,
    },
    #[error("cell {cell} repeats a vertex index")]
    RepeatedVertex { cell: usize },
    #[error("vertices {first} and {second} coincide")]
    DuplicateVertex { first: usize, second: usize },
    #[error("cell {cell} has non-positive signed volume {volume:e}")]
    InvertedCell { cell: usize, volume: f64 },
    #[error("mesh is not conforming: {reason}")]
    NonConforming { reason: String },
    #[error("boundary face {vertices:?} has no boundary label")]
    UnclassifiedBoundaryFace { vertices: [usize; 3] },
    #[error("mesh has no cells")]
    Empty,
}

/// A triangular face of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Sorted vertex indices.
    pub vertices: [usize; 3],
    /// Incident cell that `normal` points out of.
    pub plus: usize,
    /// Second incident cell, `None` on the boundary.
    pub minus: Option<usize>,
    pub normal: Point,
    pub area: f64,
    pub diameter: f64,
    pub centroid: Point,
    pub label: BoundaryLabel,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none()
    }

    pub fn is_horizontal(&self) -> bool {
        self.normal[2].abs() >= 1.0 - HORIZONTAL_TOL
    }
}

/// Tolerance on `|normal[2]| = 1` for horizontal faces.
pub const HORIZONTAL_TOL: f64 = 1e-12;

/// What a boundary classifier sees of a boundary face.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub vertices: [usize; 3],
    pub coords: [Point; 3],
    pub centroid: Point,
    pub normal: Point,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<[usize; 4]>,
    faces: Vec<Face>,
    cell_faces: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 6]>,
    volumes: Vec<f64>,
    diameters: Vec<f64>,
    grad_lambda: Vec<[Point; 4]>,
}

/// Local vertex pairs of the six edges of a tetrahedron, lexicographic.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertices of the face opposite each local vertex.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

fn sorted3(mut v: [usize; 3]) -> [usize; 3] {
    v.sort_unstable();
    v
}

impl Mesh {
    /// Builds a mesh and checks conformity, orientation and labelling.
    ///
    /// `classify` is called once per boundary face; returning `None` (or
    /// `Interior`) is an error.
    pub fn new<F>(vertices: Vec<Point>, cells: Vec<[usize; 4]>, classify: F) -> Result<Mesh, MeshError>
    where
        F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
    {
        if cells.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        cell: c,
                        vertex: v,
                        num_vertices: nv,
                    });
                }
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if cell[i] == cell[j] {
                        return Err(MeshError::RepeatedVertex { cell: c });
                    }
                }
            }
        }
        check_duplicate_vertices(&vertices)?;

        let mut volumes = Vec::with_capacity(cells.len());
        let mut diameters = Vec::with_capacity(cells.len());
        let mut grad_lambda = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let x = cell.map(|v| vertices[v]);
            let vol = geometry::signed_volume6(x[0], x[1], x[2], x[3]) / 6.0;
            let diam = LOCAL_EDGES
                .iter()
                .map(|e| geometry::distance(x[e[0]], x[e[1]]))
                .fold(0.0, f64::max);
            if !(vol > 1e-14 * diam.powi(3)) {
                return Err(MeshError::InvertedCell { cell: c, volume: vol });
            }
            volumes.push(vol);
            diameters.push(diam);
            grad_lambda.push(geometry::barycentric_gradients(&x));
        }

        // faces
        let mut face_index: HashMap<[usize; 3], usize> = HashMap::with_capacity(2 * cells.len() + 8);
        let mut incident: Vec<(usize, Option<usize>)> = Vec::new();
        let mut face_keys: Vec<[usize; 3]> = Vec::new();
        let mut cell_faces = vec![[0usize; 4]; cells.len()];
        for (c, cell) in cells.iter().enumerate() {
            for (i, lf) in LOCAL_FACES.iter().enumerate() {
                let key = sorted3(lf.map(|l| cell[l]));
                match face_index.get(&key) {
                    Some(&f) => {
                        if incident[f].1.is_some() {
                            return Err(MeshError::NonConforming {
                                reason: format!("face {key:?} is shared by more than two cells"),
                            });
                        }
                        incident[f].1 = Some(c);
                        cell_faces[c][i] = f;
                    }
                    None => {
                        let f = face_keys.len();
                        face_index.insert(key, f);
                        face_keys.push(key);
                        incident.push((c, None));
                        cell_faces[c][i] = f;
                    }
                }
            }
        }

        let mut faces = Vec::with_capacity(face_keys.len());
        for (f, key) in face_keys.iter().enumerate() {
            let (plus, minus) = incident[f];
            let coords = key.map(|v| vertices[v]);
            let n = geometry::cross(
                geometry::sub(coords[1], coords[0]),
                geometry::sub(coords[2], coords[0]),
            );
            let twice_area = geometry::norm(n);
            let mut normal = geometry::scale(1.0 / twice_area, n);
            let local = cell_faces[plus].iter().position(|&g| g == f).unwrap();
            let opposite = vertices[cells[plus][local]];
            if geometry::dot(normal, geometry::sub(opposite, coords[0])) > 0.0 {
                normal = geometry::scale(-1.0, normal);
            }
            let centroid = geometry::centroid(&coords);
            let diameter = [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(a, b)| geometry::distance(coords[a], coords[b]))
                .fold(0.0, f64::max);
            let label = if minus.is_some() {
                BoundaryLabel::Interior
            } else {
                let query = BoundaryFace {
                    vertices: *key,
                    coords,
                    centroid,
                    normal,
                };
                match classify(&query) {
                    Some(l @ (BoundaryLabel::Dirichlet | BoundaryLabel::Neumann)) => l,
                    _ => return Err(MeshError::UnclassifiedBoundaryFace { vertices: *key }),
                }
            };
            faces.push(Face {
                vertices: *key,
                plus,
                minus,
                normal,
                area: 0.5 * twice_area,
                diameter,
                centroid,
                label,
            });
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::with_capacity(cells.len() * 2);
        let mut edges = Vec::new();
        let mut cell_edges = vec![[0usize; 6]; cells.len()];
        for (c, cell) in cells.iter().enumerate() {
            for (k, le) in LOCAL_EDGES.iter().enumerate() {
                let (a, b) = (cell[le[0]], cell[le[1]]);
                let key = if a < b { [a, b] } else { [b, a] };
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
                cell_edges[c][k] = e;
            }
        }

        let mesh = Mesh {
            vertices,
            cells,
            faces,
            cell_faces,
            edges,
            cell_edges,
            volumes,
            diameters,
            grad_lambda,
        };
        mesh.check_conformity()?;
        Ok(mesh)
    }

    /// Same vertices and cells, new boundary labels.
    pub fn relabel<F>(&self, classify: F) -> Result<Mesh, MeshError>
    where
        F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
    {
        Mesh::new(self.vertices.clone(), self.cells.clone(), classify)
    }

    /// Translated copy of the mesh with labels preserved.
    pub fn translated(&self, offset: Point) -> Mesh {
        let mut m = self.clone();
        for v in m.vertices.iter_mut() {
            *v = geometry::add(*v, offset);
        }
        for f in m.faces.iter_mut() {
            f.centroid = geometry::add(f.centroid, offset);
        }
        m
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_faces(&self, cell: usize) -> &[usize; 4] {
        &self.cell_faces[cell]
    }

    pub fn cell_edges(&self, cell: usize) -> &[usize; 6] {
        &self.cell_edges[cell]
    }

    pub fn cell_vertices(&self, cell: usize) -> [Point; 4] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    pub fn volume_of(&self, cell: usize) -> f64 {
        self.volumes[cell]
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn diameter_of(&self, cell: usize) -> f64 {
        self.diameters[cell]
    }

    pub fn h_max(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    /// Gradients of the barycentric coordinates on `cell`.
    pub fn grad_lambda(&self, cell: usize) -> &[Point; 4] {
        &self.grad_lambda[cell]
    }

    pub fn volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Physical point of barycentric coordinates `bary` in `cell`.
    pub fn map_point(&self, cell: usize, bary: &[f64; 4]) -> Point {
        let x = self.cell_vertices(cell);
        let mut p = [0.0; 3];
        for i in 0..4 {
            p = geometry::add(p, geometry::scale(bary[i], x[i]));
        }
        p
    }

    /// Barycentric coordinates of `p` with respect to `cell`.
    pub fn barycentric(&self, cell: usize, p: Point) -> [f64; 4] {
        let x0 = self.vertices[self.cells[cell][0]];
        let g = &self.grad_lambda[cell];
        let d = geometry::sub(p, x0);
        let l1 = geometry::dot(g[1], d);
        let l2 = geometry::dot(g[2], d);
        let l3 = geometry::dot(g[3], d);
        [1.0 - l1 - l2 - l3, l1, l2, l3]
    }

    /// Local index of `face` within `cell`.
    pub fn local_face_index(&self, cell: usize, face: usize) -> Option<usize> {
        self.cell_faces[cell].iter().position(|&f| f == face)
    }

    /// Vertices lying on some boundary face.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for f in self.faces.iter().filter(|f| f.is_boundary()) {
            for &v in &f.vertices {
                mask[v] = true;
            }
        }
        mask
    }

    /// Vertices lying on some Dirichlet face.
    pub fn dirichlet_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for f in self.faces.iter().filter(|f| f.label == BoundaryLabel::Dirichlet) {
            for &v in &f.vertices {
                mask[v] = true;
            }
        }
        mask
    }

    /// Edges of some Dirichlet face.
    pub fn dirichlet_edge_mask(&self) -> Vec<bool> {
        let mut on_dirichlet: HashMap<[usize; 2], ()> = HashMap::new();
        for f in self.faces.iter().filter(|f| f.label == BoundaryLabel::Dirichlet) {
            let v = f.vertices;
            for (a, b) in [(v[0], v[1]), (v[0], v[2]), (v[1], v[2])] {
                on_dirichlet.insert([a, b], ());
            }
        }
        self.edges.iter().map(|e| on_dirichlet.contains_key(e)).collect()
    }

    pub fn has_neumann_boundary(&self) -> bool {
        self.faces.iter().any(|f| f.label == BoundaryLabel::Neumann)
    }

    pub fn num_faces_with_label(&self, label: BoundaryLabel) -> usize {
        self.faces.iter().filter(|f| f.label == label).count()
    }

    pub fn boundary_area(&self) -> f64 {
        self.faces.iter().filter(|f| f.is_boundary()).map(|f| f.area).sum()
    }

    /// Domain volume from the boundary surface via the divergence theorem.
    pub fn enclosed_volume(&self) -> f64 {
        self.faces
            .iter()
            .filter(|f| f.is_boundary())
            .map(|f| geometry::dot(f.centroid, f.normal) * f.area)
            .sum::<f64>()
            / 3.0
    }

    /// Red refinement: every cell is split into eight children.
    pub fn red_refine(&self) -> Result<Mesh, MeshError> {
        refine::red_refine(self)
    }

    /// Interior faces violating (H2), plus a violation for single-cell meshes.
    pub fn check_h2(&self) -> Vec<H2Violation> {
        assumptions::check_h2(self)
    }

    /// Horizontal Dirichlet faces satisfying neither condition of (H1).
    pub fn check_h1(&self) -> Vec<H1Violation> {
        assumptions::check_h1(self)
    }

    /// Hanging vertices and overlaps: no vertex may lie in a closed cell it
    /// does not belong to. The cell volumes must also add up to the volume
    /// enclosed by the boundary.
    fn check_conformity(&self) -> Result<(), MeshError> {
        let total: f64 = self.volume();
        let enclosed = self.enclosed_volume();
        if (total - enclosed).abs() > 1e-12 * total {
            return Err(MeshError::NonConforming {
                reason: format!("cell volumes sum to {total}, boundary encloses {enclosed}"),
            });
        }

        let (lo, hi) = self.bounding_box();
        let n = ((self.cells.len() as f64).cbrt().ceil() as usize).clamp(1, 64);
        let extent = geometry::sub(hi, lo);
        let h = self.h_max();
        let tol = 1e-10 * h;
        let bucket_of = |p: Point, k: usize| -> usize {
            if extent[k] <= 0.0 {
                return 0;
            }
            let t = ((p[k] - lo[k]) / extent[k] * n as f64).floor();
            (t.max(0.0) as usize).min(n - 1)
        };
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n * n * n];
        for c in 0..self.cells.len() {
            let x = self.cell_vertices(c);
            let mut bmin = [usize::MAX; 3];
            let mut bmax = [0usize; 3];
            for p in &x {
                for k in 0..3 {
                    bmin[k] = bmin[k].min(bucket_of([p[0] - tol, p[1] - tol, p[2] - tol], k));
                    bmax[k] = bmax[k].max(bucket_of([p[0] + tol, p[1] + tol, p[2] + tol], k));
                }
            }
            for i in bmin[0]..=bmax[0] {
                for j in bmin[1]..=bmax[1] {
                    for k in bmin[2]..=bmax[2] {
                        buckets[(i * n + j) * n + k].push(c);
                    }
                }
            }
        }
        for (v, &p) in self.vertices.iter().enumerate() {
            let b = (bucket_of(p, 0) * n + bucket_of(p, 1)) * n + bucket_of(p, 2);
            for &c in &buckets[b] {
                if self.cells[c].contains(&v) {
                    continue;
                }
                let lam = self.barycentric(c, p);
                if lam.iter().all(|&l| l >= -1e-10) {
                    return Err(MeshError::NonConforming {
                        reason: format!("vertex {v} lies in cell {c} without being one of its vertices"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

fn check_duplicate_vertices(vertices: &[Point]) -> Result<(), MeshError> {
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a][0].total_cmp(&vertices[b][0]));
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if vertices[b][0] - vertices[a][0] > 1e-12 {
                break;
            }
            if geometry::distance(vertices[a], vertices[b]) <= 1e-12 {
                return Err(MeshError::DuplicateVertex {
                    first: a.min(b),
                    second: a.max(b),
                });
            }
        }
    }
    Ok(())
}
