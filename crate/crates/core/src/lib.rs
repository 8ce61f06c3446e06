//! Low-order nonconforming finite element methods for the 3D Stokes problem.

pub mod assembly;
pub mod geometry;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod plot;
pub mod quadrature;
pub mod spaces;
pub mod stability;
pub mod study;

pub use assembly::Gram;
pub use geometry::Point;
pub use linalg::{CsrMatrix, LinalgError};
pub use manufactured::{case_library, ErrorNorms, ExactCase};
pub use mesh::{BoundaryLabel, Mesh, MeshError};
pub use spaces::{SpaceKind, VelocityKind, VelocitySpace};
pub use stability::{StabilityReport, Verdict};
pub use study::{ConvergenceRow, ConvergenceTable};
