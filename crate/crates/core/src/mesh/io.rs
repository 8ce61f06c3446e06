//! Plain-text mesh files.
//!
//! ```text
//! $vertices N
//! x y z            (N lines)
//! $cells M
//! v0 v1 v2 v3      (M lines, 0-based)
//! $boundary K      (optional)
//! v0 v1 v2 D|N     (K lines)
//! ```
//!
//! Boundary faces without a `$boundary` entry are labelled by a fallback
//! classifier.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{BoundaryFace, BoundaryLabel, Mesh, MeshError};
use crate::geometry::Point;

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Raw contents of a mesh file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshFile {
    pub vertices: Vec<Point>,
    pub cells: Vec<[usize; 4]>,
    pub markers: HashMap<[usize; 3], BoundaryLabel>,
}

impl MeshFile {
    pub fn parse(text: &str) -> Result<MeshFile, MeshIoError> {
        let mut out = MeshFile::default();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, message: String| MeshIoError::Parse { line, message };

        while let Some((ln, header)) = lines.next() {
            let mut parts = header.split_whitespace();
            let section = parts.next().unwrap_or_default();
            let count: usize = parts
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| err(ln, format!("expected a count after `{section}`")))?;
            for _ in 0..count {
                let (ln, body) = lines
                    .next()
                    .ok_or_else(|| err(ln, format!("`{section}` ended early")))?;
                let fields: Vec<&str> = body.split_whitespace().collect();
                match section {
                    "$vertices" => {
                        if fields.len() != 3 {
                            return Err(err(ln, "expected three coordinates".into()));
                        }
                        let mut p = [0.0; 3];
                        for (k, f) in fields.iter().enumerate() {
                            p[k] = f.parse().map_err(|_| err(ln, format!("bad coordinate `{f}`")))?;
                        }
                        out.vertices.push(p);
                    }
                    "$cells" => {
                        if fields.len() != 4 {
                            return Err(err(ln, "expected four vertex indices".into()));
                        }
                        let mut c = [0usize; 4];
                        for (k, f) in fields.iter().enumerate() {
                            c[k] = f.parse().map_err(|_| err(ln, format!("bad index `{f}`")))?;
                        }
                        out.cells.push(c);
                    }
                    "$boundary" => {
                        if fields.len() != 4 {
                            return Err(err(ln, "expected three indices and a marker".into()));
                        }
                        let mut t = [0usize; 3];
                        for k in 0..3 {
                            t[k] = fields[k]
                                .parse()
                                .map_err(|_| err(ln, format!("bad index `{}`", fields[k])))?;
                        }
                        t.sort_unstable();
                        let label = match fields[3] {
                            "D" => BoundaryLabel::Dirichlet,
                            "N" => BoundaryLabel::Neumann,
                            m => return Err(err(ln, format!("unknown marker `{m}`"))),
                        };
                        out.markers.insert(t, label);
                    }
                    other => return Err(err(ln, format!("unknown section `{other}`"))),
                }
            }
        }
        Ok(out)
    }

    /// Builds the mesh; unmarked boundary faces go to `fallback`.
    pub fn into_mesh<F>(self, fallback: F) -> Result<Mesh, MeshIoError>
    where
        F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
    {
        let markers = self.markers;
        Ok(Mesh::new(self.vertices, self.cells, |f| {
            markers.get(&f.vertices).copied().or_else(|| fallback(f))
        })?)
    }
}

pub fn read_mesh<F>(path: &std::path::Path, fallback: F) -> Result<Mesh, MeshIoError>
where
    F: Fn(&BoundaryFace) -> Option<BoundaryLabel>,
{
    let text = std::fs::read_to_string(path)?;
    MeshFile::parse(&text)?.into_mesh(fallback)
}

/// Serialises a mesh with an explicit marker for every boundary face.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "$vertices {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "$cells {}", mesh.num_cells());
    for c in mesh.cells() {
        let _ = writeln!(s, "{} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let boundary: Vec<_> = mesh.faces().iter().filter(|f| f.is_boundary()).collect();
    let _ = writeln!(s, "$boundary {}", boundary.len());
    for f in boundary {
        let m = if f.label == BoundaryLabel::Dirichlet { "D" } else { "N" };
        let _ = writeln!(s, "{} {} {} {m}", f.vertices[0], f.vertices[1], f.vertices[2]);
    }
    s
}
