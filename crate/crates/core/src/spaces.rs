//! Scalar finite element spaces, their degree-of-freedom maps and the
//! composite velocity spaces built from them.
//!
//! Local ordering on a cell: vertices in cell order, then edges in
//! `LOCAL_EDGES` order (P2), then faces opposite each local vertex.

use serde::{Deserialize, Serialize};

use crate::geometry::{self, Point};
use crate::mesh::{BoundaryLabel, Mesh, LOCAL_EDGES, LOCAL_FACES};
use crate::quadrature;

/// Scalar (or, for `BrNormalBubbles`, normal-vector) element families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    P1C,
    P2C,
    P1NC,
    /// Face bubbles `60 λa λb λc`, only on faces not on the Dirichlet boundary.
    Bubble,
    P1CPlusBubble,
    P0,
    /// Face bubbles times the fixed face normal.
    BrNormalBubbles,
}

impl SpaceKind {
    pub fn local_count(self) -> usize {
        match self {
            SpaceKind::P1C | SpaceKind::P1NC | SpaceKind::Bubble | SpaceKind::BrNormalBubbles => 4,
            SpaceKind::P2C => 10,
            SpaceKind::P1CPlusBubble => 8,
            SpaceKind::P0 => 1,
        }
    }

    /// Polynomial degree of the basis functions.
    pub fn degree(self) -> u32 {
        match self {
            SpaceKind::P0 => 0,
            SpaceKind::P1C | SpaceKind::P1NC => 1,
            SpaceKind::P2C => 2,
            SpaceKind::Bubble | SpaceKind::P1CPlusBubble | SpaceKind::BrNormalBubbles => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DofEntity {
    Vertex(usize),
    Edge(usize),
    Face(usize),
    Cell(usize),
}

#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub total_dofs: usize,
    /// Per cell, `local_count` entries; `None` marks an absent bubble.
    cell_dofs: Vec<Option<usize>>,
    pub dof_entity: Vec<DofEntity>,
    pub dirichlet_mask: Vec<bool>,
}

impl DofMap {
    pub fn build(mesh: &Mesh, kind: SpaceKind) -> DofMap {
        let nv = mesh.num_vertices();
        let nlocal = kind.local_count();
        let mut cell_dofs = Vec::with_capacity(nlocal * mesh.num_cells());
        let mut dof_entity = Vec::new();
        let mut dirichlet_mask = Vec::new();

        let vertex_part = |entity: &mut Vec<DofEntity>, mask: &mut Vec<bool>| {
            let dv = mesh.dirichlet_vertex_mask();
            for v in 0..nv {
                entity.push(DofEntity::Vertex(v));
                mask.push(dv[v]);
            }
        };
        // global numbers of the bubble DOFs, by face
        let bubble_numbers = |start: usize, entity: &mut Vec<DofEntity>, mask: &mut Vec<bool>| {
            let mut num = vec![None; mesh.num_faces()];
            let mut next = start;
            for (f, face) in mesh.faces().iter().enumerate() {
                if face.label != BoundaryLabel::Dirichlet {
                    num[f] = Some(next);
                    entity.push(DofEntity::Face(f));
                    mask.push(false);
                    next += 1;
                }
            }
            num
        };

        match kind {
            SpaceKind::P1C => {
                vertex_part(&mut dof_entity, &mut dirichlet_mask);
                for cell in mesh.cells() {
                    cell_dofs.extend(cell.iter().map(|&v| Some(v)));
                }
            }
            SpaceKind::P2C => {
                vertex_part(&mut dof_entity, &mut dirichlet_mask);
                let de = mesh.dirichlet_edge_mask();
                for e in 0..mesh.num_edges() {
                    dof_entity.push(DofEntity::Edge(e));
                    dirichlet_mask.push(de[e]);
                }
                for c in 0..mesh.num_cells() {
                    cell_dofs.extend(mesh.cells()[c].iter().map(|&v| Some(v)));
                    cell_dofs.extend(mesh.cell_edges(c).iter().map(|&e| Some(nv + e)));
                }
            }
            SpaceKind::P1NC => {
                for (f, face) in mesh.faces().iter().enumerate() {
                    dof_entity.push(DofEntity::Face(f));
                    dirichlet_mask.push(face.label == BoundaryLabel::Dirichlet);
                }
                for c in 0..mesh.num_cells() {
                    cell_dofs.extend(mesh.cell_faces(c).iter().map(|&f| Some(f)));
                }
            }
            SpaceKind::Bubble | SpaceKind::BrNormalBubbles => {
                let num = bubble_numbers(0, &mut dof_entity, &mut dirichlet_mask);
                for c in 0..mesh.num_cells() {
                    cell_dofs.extend(mesh.cell_faces(c).iter().map(|&f| num[f]));
                }
            }
            SpaceKind::P1CPlusBubble => {
                vertex_part(&mut dof_entity, &mut dirichlet_mask);
                let num = bubble_numbers(nv, &mut dof_entity, &mut dirichlet_mask);
                for c in 0..mesh.num_cells() {
                    cell_dofs.extend(mesh.cells()[c].iter().map(|&v| Some(v)));
                    cell_dofs.extend(mesh.cell_faces(c).iter().map(|&f| num[f]));
                }
            }
            SpaceKind::P0 => {
                for c in 0..mesh.num_cells() {
                    dof_entity.push(DofEntity::Cell(c));
                    dirichlet_mask.push(false);
                    cell_dofs.push(Some(c));
                }
            }
        }
        DofMap {
            kind,
            total_dofs: dof_entity.len(),
            cell_dofs,
            dof_entity,
            dirichlet_mask,
        }
    }

    /// Global DOFs of `cell` in local order.
    pub fn cell_dofs(&self, cell: usize) -> &[Option<usize>] {
        let n = self.kind.local_count();
        &self.cell_dofs[n * cell..n * (cell + 1)]
    }

    pub fn num_free(&self) -> usize {
        self.dirichlet_mask.iter().filter(|&&d| !d).count()
    }

    /// Nodal interpolation of a scalar field: point values at vertices and
    /// edge midpoints, face means on nonconforming faces, zero on bubbles.
    pub fn interpolate<F>(&self, mesh: &Mesh, f: F) -> Vec<f64>
    where
        F: Fn(Point) -> f64,
    {
        let face_rule = quadrature::face_rule(4).expect("degree-4 face rule");
        self.dof_entity
            .iter()
            .map(|ent| match (*ent, self.kind) {
                (DofEntity::Vertex(v), _) => f(mesh.vertices()[v]),
                (DofEntity::Edge(e), _) => {
                    let [a, b] = mesh.edges()[e];
                    f(geometry::midpoint(mesh.vertices()[a], mesh.vertices()[b]))
                }
                (DofEntity::Face(face), SpaceKind::P1NC) => {
                    quadrature::integrate_face(mesh, face, &f, face_rule) / mesh.faces()[face].area
                }
                (DofEntity::Face(_), _) => 0.0,
                (DofEntity::Cell(c), _) => {
                    let r = quadrature::rule_for_degree(8).expect("degree-8 rule");
                    quadrature::integrate(mesh, c, &f, r) / mesh.volume_of(c)
                }
            })
            .collect()
    }
}

/// Local basis values of a scalar kind at barycentric point `l`.
/// `BrNormalBubbles` returns the scalar bubble factors.
pub fn eval_basis(kind: SpaceKind, l: &[f64; 4]) -> Vec<f64> {
    let bubbles = || (0..4).map(move |i| 60.0 * LOCAL_FACES[i].iter().map(|&j| l[j]).product::<f64>());
    match kind {
        SpaceKind::P1C => l.to_vec(),
        SpaceKind::P2C => {
            let mut out: Vec<f64> = l.iter().map(|&x| x * (2.0 * x - 1.0)).collect();
            out.extend(LOCAL_EDGES.iter().map(|&[a, b]| 4.0 * l[a] * l[b]));
            out
        }
        SpaceKind::P1NC => l.iter().map(|&x| 1.0 - 3.0 * x).collect(),
        SpaceKind::Bubble | SpaceKind::BrNormalBubbles => bubbles().collect(),
        SpaceKind::P1CPlusBubble => l.iter().copied().chain(bubbles()).collect(),
        SpaceKind::P0 => vec![1.0],
    }
}

/// Physical gradients of the local basis on a cell with barycentric
/// gradients `g`.
pub fn eval_basis_gradients(kind: SpaceKind, l: &[f64; 4], g: &[Point; 4]) -> Vec<Point> {
    let bubble_grad = |i: usize| {
        let [a, b, c] = LOCAL_FACES[i];
        let mut d = [0.0; 3];
        for k in 0..3 {
            d[k] = 60.0 * (g[a][k] * l[b] * l[c] + l[a] * g[b][k] * l[c] + l[a] * l[b] * g[c][k]);
        }
        d
    };
    match kind {
        SpaceKind::P1C => g.to_vec(),
        SpaceKind::P2C => {
            let mut out: Vec<Point> = (0..4).map(|i| geometry::scale(4.0 * l[i] - 1.0, g[i])).collect();
            out.extend(
                LOCAL_EDGES
                    .iter()
                    .map(|&[a, b]| geometry::add(geometry::scale(4.0 * l[b], g[a]), geometry::scale(4.0 * l[a], g[b]))),
            );
            out
        }
        SpaceKind::P1NC => g.iter().map(|&gi| geometry::scale(-3.0, gi)).collect(),
        SpaceKind::Bubble | SpaceKind::BrNormalBubbles => (0..4).map(bubble_grad).collect(),
        SpaceKind::P1CPlusBubble => g.iter().copied().chain((0..4).map(bubble_grad)).collect(),
        SpaceKind::P0 => vec![[0.0; 3]],
    }
}

/// The velocity spaces used in the experiments and counterexamples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VelocityKind {
    /// `P1C x P2C x P1NC`
    KsP2,
    /// `P1C x (P1C + bubbles) x P1NC`
    KsBubble,
    /// `(P1C)^3` plus normal face bubbles
    BernardiRaugel,
    /// Any three scalar components.
    Components([SpaceKind; 3]),
}

impl VelocityKind {
    pub fn name(self) -> String {
        match self {
            VelocityKind::KsP2 => "ks-p2".into(),
            VelocityKind::KsBubble => "ks-bubble".into(),
            VelocityKind::BernardiRaugel => "br".into(),
            VelocityKind::Components(c) => {
                let n = |k: SpaceKind| match k {
                    SpaceKind::P1C => "p1",
                    SpaceKind::P2C => "p2",
                    SpaceKind::P1NC => "p1nc",
                    SpaceKind::Bubble => "b",
                    SpaceKind::P1CPlusBubble => "p1b",
                    SpaceKind::P0 => "p0",
                    SpaceKind::BrNormalBubbles => "nb",
                };
                format!("{}-{}-{}", n(c[0]), n(c[1]), n(c[2]))
            }
        }
    }

    pub fn parse(name: &str) -> Option<VelocityKind> {
        use SpaceKind::*;
        match name {
            "ks-p2" => Some(VelocityKind::KsP2),
            "ks-bubble" => Some(VelocityKind::KsBubble),
            "br" => Some(VelocityKind::BernardiRaugel),
            "p1p1nc" | "p1-p1-p1nc" => Some(VelocityKind::Components([P1C, P1C, P1NC])),
            "p1ncnc" | "p1-p1nc-p1nc" => Some(VelocityKind::Components([P1C, P1NC, P1NC])),
            _ => None,
        }
    }

    fn components(self) -> [SpaceKind; 3] {
        use SpaceKind::*;
        match self {
            VelocityKind::KsP2 => [P1C, P2C, P1NC],
            VelocityKind::KsBubble => [P1C, P1CPlusBubble, P1NC],
            VelocityKind::BernardiRaugel => [P1C, P1C, P1C],
            VelocityKind::Components(c) => c,
        }
    }
}

/// Where a local velocity basis function comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Scalar basis `local` of `kind` in Cartesian component `component`.
    Scalar { component: usize, kind: SpaceKind, local: usize },
    /// Bubble of local face `local` times the fixed normal of that face.
    NormalBubble { local: usize, normal: Point },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalDof {
    pub global: usize,
    pub shape: Shape,
}

/// Value and gradient (`grad[i][j] = ∂_j v_i`) of a vector basis function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorValue {
    pub value: Point,
    pub grad: [[f64; 3]; 3],
}

/// A vector-valued velocity space with one global numbering: component
/// blocks `x1, x2, x3`, then normal bubbles for Bernardi–Raugel.
#[derive(Debug, Clone)]
pub struct VelocitySpace {
    pub kind: VelocityKind,
    pub components: [DofMap; 3],
    pub normal_bubbles: Option<DofMap>,
    offsets: [usize; 4],
    total: usize,
}

impl VelocitySpace {
    pub fn build(mesh: &Mesh, kind: VelocityKind) -> VelocitySpace {
        let components = kind.components().map(|k| DofMap::build(mesh, k));
        let normal_bubbles =
            (kind == VelocityKind::BernardiRaugel).then(|| DofMap::build(mesh, SpaceKind::BrNormalBubbles));
        let mut offsets = [0; 4];
        for c in 1..4 {
            offsets[c] = offsets[c - 1] + components[c - 1].total_dofs;
        }
        let total = offsets[3] + normal_bubbles.as_ref().map_or(0, |m| m.total_dofs);
        VelocitySpace {
            kind,
            components,
            normal_bubbles,
            offsets,
            total,
        }
    }

    pub fn total_dofs(&self) -> usize {
        self.total
    }

    /// Global offset of component `c` (`c = 3` for normal bubbles).
    pub fn offset(&self, c: usize) -> usize {
        self.offsets[c]
    }

    pub fn dirichlet_mask(&self) -> Vec<bool> {
        let mut m: Vec<bool> = self.components.iter().flat_map(|d| d.dirichlet_mask.iter().copied()).collect();
        if let Some(nb) = &self.normal_bubbles {
            m.extend(&nb.dirichlet_mask);
        }
        m
    }

    pub fn num_free(&self) -> usize {
        self.dirichlet_mask().iter().filter(|&&d| !d).count()
    }

    /// Highest polynomial degree of any basis function.
    pub fn degree(&self) -> u32 {
        let mut d = self.components.iter().map(|m| m.kind.degree()).max().unwrap_or(0);
        if self.normal_bubbles.is_some() {
            d = d.max(3);
        }
        d
    }

    /// Basis functions living on `cell`.
    pub fn local_dofs(&self, mesh: &Mesh, cell: usize) -> Vec<LocalDof> {
        let mut out = Vec::with_capacity(24);
        for (c, map) in self.components.iter().enumerate() {
            for (local, g) in map.cell_dofs(cell).iter().enumerate() {
                if let Some(g) = g {
                    out.push(LocalDof {
                        global: self.offsets[c] + g,
                        shape: Shape::Scalar {
                            component: c,
                            kind: map.kind,
                            local,
                        },
                    });
                }
            }
        }
        if let Some(nb) = &self.normal_bubbles {
            let faces = mesh.cell_faces(cell);
            for (local, g) in nb.cell_dofs(cell).iter().enumerate() {
                if let Some(g) = g {
                    out.push(LocalDof {
                        global: self.offsets[3] + g,
                        shape: Shape::NormalBubble {
                            local,
                            normal: mesh.faces()[faces[local]].normal,
                        },
                    });
                }
            }
        }
        out
    }

    /// Values and gradients of the local basis at barycentric point `l`.
    pub fn eval_local(&self, mesh: &Mesh, cell: usize, dofs: &[LocalDof], l: &[f64; 4]) -> Vec<VectorValue> {
        let g = mesh.grad_lambda(cell);
        let mut cache: Vec<(SpaceKind, Vec<f64>, Vec<Point>)> = Vec::new();
        let mut lookup = |kind: SpaceKind, local: usize| -> (f64, Point) {
            let pos = match cache.iter().position(|e| e.0 == kind) {
                Some(p) => p,
                None => {
                    cache.push((kind, eval_basis(kind, l), eval_basis_gradients(kind, l, g)));
                    cache.len() - 1
                }
            };
            (cache[pos].1[local], cache[pos].2[local])
        };
        dofs.iter()
            .map(|d| match d.shape {
                Shape::Scalar { component, kind, local } => {
                    let (v, dv) = lookup(kind, local);
                    let mut value = [0.0; 3];
                    value[component] = v;
                    let mut grad = [[0.0; 3]; 3];
                    grad[component] = dv;
                    VectorValue { value, grad }
                }
                Shape::NormalBubble { local, normal } => {
                    let (v, dv) = lookup(SpaceKind::BrNormalBubbles, local);
                    VectorValue {
                        value: geometry::scale(v, normal),
                        grad: [0, 1, 2].map(|i| geometry::scale(normal[i], dv)),
                    }
                }
            })
            .collect()
    }

    /// Interpolates a vector field; bubble coefficients are zero.
    pub fn interpolate<F>(&self, mesh: &Mesh, f: F) -> Vec<f64>
    where
        F: Fn(Point) -> Point,
    {
        let mut out = Vec::with_capacity(self.total);
        for (c, map) in self.components.iter().enumerate() {
            out.extend(map.interpolate(mesh, |x| f(x)[c]));
        }
        if let Some(nb) = &self.normal_bubbles {
            out.extend(std::iter::repeat_n(0.0, nb.total_dofs));
        }
        out
    }

    /// Value and gradient of the discrete field `coeffs` at `l` in `cell`.
    pub fn eval_function(&self, mesh: &Mesh, cell: usize, coeffs: &[f64], l: &[f64; 4]) -> VectorValue {
        let dofs = self.local_dofs(mesh, cell);
        let vals = self.eval_local(mesh, cell, &dofs, l);
        let mut out = VectorValue {
            value: [0.0; 3],
            grad: [[0.0; 3]; 3],
        };
        for (d, v) in dofs.iter().zip(&vals) {
            let c = coeffs[d.global];
            for i in 0..3 {
                out.value[i] += c * v.value[i];
                for j in 0..3 {
                    out.grad[i][j] += c * v.grad[i][j];
                }
            }
        }
        out
    }
}

/// A discrete field together with the space it lives in.
#[derive(Debug, Clone)]
pub struct FiniteElementFunction<'a> {
    pub space: &'a VelocitySpace,
    pub coeffs: Vec<f64>,
}

impl<'a> FiniteElementFunction<'a> {
    pub fn zero(space: &'a VelocitySpace) -> Self {
        FiniteElementFunction {
            space,
            coeffs: vec![0.0; space.total_dofs()],
        }
    }

    pub fn eval(&self, mesh: &Mesh, cell: usize, l: &[f64; 4]) -> VectorValue {
        self.space.eval_function(mesh, cell, &self.coeffs, l)
    }
}
