//! `ks3d`: convergence studies, stability reports, counterexamples, mesh
//! checks and plots.
//!
//! Exit codes: 0 success, 2 a checked property failed, 3 a solver failed,
//! 4 bad input.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ks3d_core::mesh::{builtin, io as mesh_io};
use ks3d_core::stability::{self, KornVariant, StabilityError};
use ks3d_core::study::{self, StudyError};
use ks3d_core::{case_library, plot, BoundaryLabel, ConvergenceTable, LinalgError, Mesh, VelocityKind, VelocitySpace};

#[derive(Parser)]
#[command(name = "ks3d", version, about = "Low-order nonconforming Stokes elements in 3D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study of a manufactured solution; writes a CSV table.
    Run {
        #[arg(long)]
        case: String,
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Discrete Korn and inf-sup constants on a sequence of meshes; one JSON
    /// record per line.
    Stability {
        #[arg(long, value_enum, conflicts_with = "mesh", required_unless_present = "mesh")]
        builtin: Option<BuiltinMesh>,
        /// Mesh file; unlisted boundary faces are Dirichlet.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 1)]
        levels: usize,
    },
    /// Verify one of the two instability counterexamples.
    Counterexample {
        #[arg(value_enum)]
        kind: CounterexampleKind,
        /// Scale of the piecewise rigid motion (Korn variants).
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        a: f64,
    },
    /// Check the mesh assumptions (H1) and (H2) for a mesh file.
    Check {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Log-log SVG plot of a convergence table.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BuiltinMesh {
    OctaPatch,
    Cube,
}

#[derive(Clone, Copy, ValueEnum)]
enum CounterexampleKind {
    Infsup,
    KornWedge,
    KornTensor,
}

enum Failure {
    Assertion(String),
    Solver(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Assertion(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Input(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Assertion(m) | Failure::Solver(m) | Failure::Input(m) => m,
        }
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Failure {
        match e {
            StudyError::Linalg(_) => Failure::Solver(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<StabilityError> for Failure {
    fn from(e: StabilityError) -> Failure {
        match e {
            StabilityError::Linalg(_) => Failure::Solver(e.to_string()),
            StabilityError::AssertionFailed(_) => Failure::Assertion(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<LinalgError> for Failure {
    fn from(e: LinalgError) -> Failure {
        Failure::Solver(e.to_string())
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn parse_space(name: &str) -> Result<VelocityKind, Failure> {
    VelocityKind::parse(name).ok_or_else(|| {
        Failure::Input(format!(
            "unknown space `{name}` (expected ks-p2, ks-bubble, br, p1p1nc or p1ncnc)"
        ))
    })
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("serialisable"));
}

fn run(case: &str, space: &str, levels: usize, mu: f64, out: &PathBuf) -> Result<(), Failure> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Failure::Input(format!("mu must be positive, got {mu}")));
    }
    let case = case_library(case).map_err(input)?.with_mu(mu);
    let kind = parse_space(space)?;
    let mut broken = Vec::new();
    let (table, _) = study::run_case(&case, kind, levels, |row, rep| {
        eprintln!(
            "level {}: cells {}, n_dof {}, nnz {}, err_u_h1 {:.4e}, err_u_l2 {:.4e}, err_p_l2 {:.4e}, {:.2} s",
            row.level, rep.cells, row.n_dof, row.nnz, row.err_u_h1, row.err_u_l2, row.err_p_l2, rep.seconds
        );
        if rep.max_div_mean > 1e-10 * (1.0 + rep.grad_norm) {
            broken.push(format!("level {}: cell divergence mean {:e}", row.level, rep.max_div_mean));
        }
    })?;
    let file = fs::File::create(out).map_err(input)?;
    table.write_csv(file)?;
    if !broken.is_empty() {
        return Err(Failure::Assertion(broken.join("; ")));
    }
    Ok(())
}

#[derive(Serialize)]
struct StabilityRecord<'a> {
    constant_kind: &'static str,
    #[serde(flatten)]
    report: &'a ks3d_core::StabilityReport,
    cells: usize,
}

fn stability_cmd(builtin: Option<BuiltinMesh>, mesh: Option<&PathBuf>, space: &str, levels: usize) -> Result<(), Failure> {
    let kind = parse_space(space)?;
    if levels == 0 {
        return Err(Failure::Input("at least one level is required".into()));
    }
    let mut m: Mesh = match (builtin, mesh) {
        (_, Some(path)) => mesh_io::read_mesh(path, |_| Some(BoundaryLabel::Dirichlet)).map_err(input)?,
        (Some(BuiltinMesh::OctaPatch), None) => builtin::octahedron_patch(),
        (Some(BuiltinMesh::Cube), None) => builtin::cube_grid([0.0; 3], 1.0, |_| Some(BoundaryLabel::Dirichlet)),
        (None, None) => return Err(Failure::Input("pass --builtin or --mesh".into())),
    };
    for level in 0..levels {
        if level > 0 {
            m = m.red_refine().map_err(input)?;
        }
        let space = VelocitySpace::build(&m, kind);
        let start = Instant::now();
        for (name, result) in [
            ("korn", stability::korn_constant(&m, &space)),
            ("infsup", stability::infsup_constant(&m, &space)),
        ] {
            let mut report = result?;
            report.level = Some(level);
            print_json(&StabilityRecord {
                constant_kind: name,
                report: &report,
                cells: m.num_cells(),
            });
        }
        eprintln!("level {level}: {:.2} s", start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn counterexample(kind: CounterexampleKind, a: f64) -> Result<(), Failure> {
    match kind {
        CounterexampleKind::Infsup => {
            let r = stability::counterexample_infsup()?;
            print_json(&r);
            r.verify()?;
        }
        CounterexampleKind::KornWedge | CounterexampleKind::KornTensor => {
            let variant = if matches!(kind, CounterexampleKind::KornWedge) {
                KornVariant::Wedge
            } else {
                KornVariant::Tensor
            };
            let r = stability::counterexample_korn(variant, a)?;
            print_json(&r);
            r.verify()?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckReport {
    cells: usize,
    h1: Vec<ks3d_core::mesh::H1Violation>,
    h2: Vec<ks3d_core::mesh::H2Violation>,
}

fn check(path: &PathBuf) -> Result<(), Failure> {
    let m = mesh_io::read_mesh(path, |_| Some(BoundaryLabel::Dirichlet)).map_err(input)?;
    let report = CheckReport {
        cells: m.num_cells(),
        h1: m.check_h1(),
        h2: m.check_h2(),
    };
    print_json(&report);
    match (report.h1.is_empty(), report.h2.is_empty()) {
        (true, true) => Ok(()),
        (h1, h2) => Err(Failure::Assertion(format!(
            "mesh violates{}{}",
            if h1 { "" } else { " (H1)" },
            if h2 { "" } else { " (H2)" }
        ))),
    }
}

fn plot_cmd(input_path: &PathBuf, out: &PathBuf) -> Result<(), Failure> {
    let table = ConvergenceTable::read_csv_file(input_path)?;
    let svg = plot::svg_plot(&table).map_err(input)?;
    fs::write(out, svg).map_err(input)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(4) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run {
            case,
            space,
            levels,
            mu,
            out,
        } => run(case, space, *levels, *mu, out),
        Command::Stability {
            builtin,
            mesh,
            space,
            levels,
        } => stability_cmd(*builtin, mesh.as_ref(), space, *levels),
        Command::Counterexample { kind, a } => counterexample(*kind, *a),
        Command::Check { mesh } => check(mesh),
        Command::Plot { input, out } => plot_cmd(input, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
