//! Discrete Stokes solves and convergence studies over refinement levels.

use std::io;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{self, AssemblyError};
use crate::linalg::{self, LinalgError, SaddleOptions, SpdSolver};
use crate::manufactured::{self, ErrorNorms, ExactCase, ManufacturedError};
use crate::mesh::{Mesh, MeshError};
use crate::spaces::{VelocityKind, VelocitySpace};
use crate::stability;

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Case(#[from] ManufacturedError),
    #[error("at least one level is required")]
    NoLevels,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A solved discrete Stokes problem.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub space: VelocitySpace,
    /// Velocity coefficients including Dirichlet values.
    pub u: Vec<f64>,
    /// Pressure per cell.
    pub p: Vec<f64>,
    /// Free velocity plus pressure DOFs.
    pub n_dof: usize,
    /// Nonzeros of the free block system.
    pub nnz: usize,
    pub residual: f64,
    pub iterations: usize,
}

/// Assembles and solves the Stokes problem for `case` on `mesh`.
pub fn solve_stokes(mesh: &Mesh, kind: VelocityKind, case: &ExactCase) -> Result<DiscreteSolution, StudyError> {
    let space = VelocitySpace::build(mesh, kind);
    let a = assembly::assemble_a(mesh, &space, case.mu);
    let b = assembly::assemble_b(mesh, &space);
    let f = assembly::assemble_load(mesh, &space, case);
    let lifting = assembly::dirichlet_lifting(mesh, &space, |x| case.u(x));
    let sys = assembly::apply_dirichlet(&a, &b, &f, &lifting, &space.dirichlet_mask())?;
    let solver = SpdSolver::new(&sys.a)?;
    let opts = SaddleOptions::new(mesh.volumes().to_vec(), !mesh.has_neumann_boundary());
    let sol = linalg::solve_saddle(&solver, &sys.b, &sys.f, &sys.g, &opts)?;
    Ok(DiscreteSolution {
        n_dof: sys.free.len() + mesh.num_cells(),
        nnz: sys.nnz(),
        u: sys.expand(&sol.u),
        p: sol.p,
        residual: sol.residual,
        iterations: sol.iterations,
        space,
    })
}

/// Per-level diagnostics beyond the table row.
#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub cells: usize,
    pub errors: ErrorNorms,
    /// Largest cell mean of `div_h u_h`.
    pub max_div_mean: f64,
    /// `‖∇_h u_h‖`
    pub grad_norm: f64,
    pub saddle_residual: f64,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub case: String,
    pub space: String,
    pub level: usize,
    pub h_max: f64,
    pub n_dof: usize,
    pub nnz: usize,
    pub err_u_h1: f64,
    pub err_u_l2: f64,
    pub err_p_l2: f64,
    pub rate_h1: Option<f64>,
    pub rate_l2: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Appends a row, filling the rates from the previous row of the same
    /// case and space.
    pub fn push(&mut self, mut row: ConvergenceRow) {
        if let Some(prev) = self.rows.iter().rev().find(|r| r.case == row.case && r.space == row.space) {
            row.rate_h1 = Some((prev.err_u_h1 / row.err_u_h1).log2());
            row.rate_l2 = Some((prev.err_u_l2 / row.err_u_l2).log2());
        }
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), StudyError> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<ConvergenceTable, StudyError> {
        let mut rd = csv::Reader::from_reader(r);
        let rows = rd.deserialize().collect::<Result<Vec<ConvergenceRow>, _>>()?;
        Ok(ConvergenceTable { rows })
    }

    pub fn read_csv_file(path: &Path) -> Result<ConvergenceTable, StudyError> {
        ConvergenceTable::read_csv(std::fs::File::open(path)?)
    }
}

/// Solves on levels `0..levels` (level 0 is the initial mesh, each further
/// level one red refinement) and reports errors and rates. `on_level` is
/// called after each level.
pub fn run_case<F>(
    case: &ExactCase,
    kind: VelocityKind,
    levels: usize,
    mut on_level: F,
) -> Result<(ConvergenceTable, Vec<LevelReport>), StudyError>
where
    F: FnMut(&ConvergenceRow, &LevelReport),
{
    if levels == 0 {
        return Err(StudyError::NoLevels);
    }
    let mut mesh = case.initial_mesh()?;
    let mut table = ConvergenceTable::default();
    let mut reports = Vec::new();
    for level in 0..levels {
        if level > 0 {
            mesh = mesh.red_refine()?;
        }
        let start = Instant::now();
        let sol = solve_stokes(&mesh, kind, case)?;
        let errors = manufactured::error_norms(&mesh, &sol.space, &sol.u, &sol.p, case);
        let div = stability::divergence_means(&mesh, &sol.space, &sol.u);
        let report = LevelReport {
            level,
            cells: mesh.num_cells(),
            errors,
            max_div_mean: div.max_abs_mean,
            grad_norm: div.grad_norm,
            saddle_residual: sol.residual,
            iterations: sol.iterations,
            seconds: start.elapsed().as_secs_f64(),
        };
        table.push(ConvergenceRow {
            case: case.name.clone(),
            space: kind.name(),
            level,
            h_max: mesh.h_max(),
            n_dof: sol.n_dof,
            nnz: sol.nnz,
            err_u_h1: errors.u_h1,
            err_u_l2: errors.u_l2,
            err_p_l2: errors.p_l2,
            rate_h1: None,
            rate_l2: None,
        });
        on_level(table.last().expect("just pushed"), &report);
        reports.push(report);
    }
    Ok((table, reports))
}
