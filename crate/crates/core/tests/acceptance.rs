//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed. The
//! process fails on a failing criterion only when `KS3D_ACCEPTANCE_STRICT`
//! is set; otherwise failures are reported and the run continues.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use ks3d_core::assembly;
use ks3d_core::linalg;
use ks3d_core::mesh::builtin;
use ks3d_core::quadrature::rule_for_degree;
use ks3d_core::stability::{self, KornVariant};
use ks3d_core::study::{self, LevelReport};
use ks3d_core::{case_library, BoundaryLabel, ConvergenceTable, Mesh, VelocityKind, VelocitySpace};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::*;

const PROPOSED: [VelocityKind; 2] = [VelocityKind::KsP2, VelocityKind::KsBubble];
const ALL: [VelocityKind; 3] = [VelocityKind::KsP2, VelocityKind::KsBubble, VelocityKind::BernardiRaugel];

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Outcome {
        Outcome {
            pass: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.pass = false;
        }
        self.details.push(format!("{}{what}", if ok { "" } else { "!! " }));
    }
}

/// Every solve of criteria 4 and 5, reused by criteria 6 and 7.
struct SolveLog {
    reports: Vec<(String, LevelReport)>,
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let r = stability::counterexample_infsup().expect("counterexample runs");
    let secs = start.elapsed().as_secs_f64();
    o.check(r.residual_integral_shift <= 1e-13, format!("max |b_h(phi_i, q)| = {:.1e}", r.residual_integral_shift));
    o.check(r.residual_mean_shift <= 1e-13, format!("mean-shifted q: {:.1e}", r.residual_mean_shift));
    o.check(r.constant <= 1e-8, format!("inf-sup constant {:.1e}", r.constant));
    o.check(secs < 1.0, format!("{secs:.3} s"));
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let r = stability::counterexample_korn(KornVariant::Wedge, 1.0).expect("counterexample runs");
    let secs = start.elapsed().as_secs_f64();
    o.check(r.strain_norm.unwrap() <= 1e-12, format!("|eps_h(phi)| = {:.1e}", r.strain_norm.unwrap()));
    o.check(r.max_interior_jump.unwrap() <= 1e-13, format!("jumps {:.1e}", r.max_interior_jump.unwrap()));
    o.check(r.max_boundary_mean.unwrap() <= 1e-13, format!("boundary means {:.1e}", r.max_boundary_mean.unwrap()));
    o.check(r.grad_norm.unwrap() >= 1.0, format!("|grad_h phi| = {:.4}", r.grad_norm.unwrap()));
    o.check(r.constant <= 1e-10, format!("Korn constant {:.1e}", r.constant));
    o.check(secs < 1.0, format!("{secs:.3} s"));
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    let patch = builtin::octahedron_patch();
    for kind in PROPOSED {
        let s = VelocitySpace::build(&patch, kind);
        let k = stability::korn_constant(&patch, &s).expect("Korn constant").constant;
        let i = stability::infsup_constant(&patch, &s).expect("inf-sup constant").constant;
        o.check(k >= 1e-2 && i >= 1e-2, format!("patch {}: korn {k:.3} infsup {i:.3}", kind.name()));
    }
    let mut mesh = builtin::cube_grid([0.0; 3], 1.0, |_| Some(BoundaryLabel::Dirichlet));
    let mut prev: Vec<Option<(f64, f64)>> = vec![None; PROPOSED.len()];
    for level in 0..3 {
        if level > 0 {
            mesh = mesh.red_refine().expect("refinement");
        }
        for (j, kind) in PROPOSED.into_iter().enumerate() {
            let s = VelocitySpace::build(&mesh, kind);
            let k = stability::korn_constant(&mesh, &s).expect("Korn constant").constant;
            let i = stability::infsup_constant(&mesh, &s).expect("inf-sup constant").constant;
            o.check(k >= 1e-2 && i >= 1e-2, format!("cube L{level} {}: korn {k:.3} infsup {i:.3}", kind.name()));
            if let Some((pk, pi)) = prev[j] {
                let dk = (k - pk).abs() / pk;
                let di = (i - pi).abs() / pi;
                o.check(dk <= 0.25 && di <= 0.25, format!("drift L{}->L{level} {}: korn {:.0}% infsup {:.0}%", level - 1, kind.name(), 100.0 * dk, 100.0 * di));
            }
            prev[j] = Some((k, i));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    o.check(secs < 300.0, format!("{secs:.1} s"));
    o
}

fn convergence(case_name: &str, levels: usize, log: &mut SolveLog) -> Vec<(VelocityKind, ConvergenceTable, f64)> {
    let case = case_library(case_name).expect("built-in case");
    ALL.into_iter()
        .map(|kind| {
            let start = Instant::now();
            let (table, reports) = study::run_case(&case, kind, levels, |_, _| {}).expect("study runs");
            for r in reports {
                log.reports.push((format!("{case_name}/{}", kind.name()), r));
            }
            (kind, table, start.elapsed().as_secs_f64())
        })
        .collect()
}

fn criterion_4(log: &mut SolveLog) -> Outcome {
    let mut o = Outcome::new();
    for (case, l2_range) in [("cube1", (1.6, 2.4)), ("cube2", (1.5, 2.3)), ("cube3", (1.6, 2.4))] {
        for (kind, table, secs) in convergence(case, 3, log) {
            let last = table.last().expect("three levels");
            let (h1, l2) = (last.rate_h1.unwrap(), last.rate_l2.unwrap());
            let ok = (0.85..=1.15).contains(&h1) && (l2_range.0..=l2_range.1).contains(&l2) && secs < 600.0;
            o.check(ok, format!("{case} {}: H1 {h1:.2} L2 {l2:.2} ({secs:.0} s)", kind.name()));
        }
    }
    o
}

fn criterion_5(log: &mut SolveLog) -> Outcome {
    let mut o = Outcome::new();
    let start = Instant::now();
    for (kind, table, _) in convergence("lshape", 2, log) {
        let h1 = table.last().unwrap().rate_h1.unwrap();
        o.check(h1 >= 0.7, format!("lshape {}: H1 {h1:.3}", kind.name()));
    }
    let secs = start.elapsed().as_secs_f64();
    o.check(secs < 900.0, format!("{secs:.0} s"));
    o
}

fn criterion_6(log: &SolveLog) -> Outcome {
    let mut o = Outcome::new();
    let worst = log
        .reports
        .iter()
        .map(|(name, r)| (r.max_div_mean / (1.0 + r.grad_norm), name, r.level))
        .fold((0.0, None), |acc, (v, n, l)| if v >= acc.0 { (v, Some((n, l))) } else { acc });
    let (n, l) = worst.1.expect("solves were run");
    o.check(worst.0 <= 1e-10, format!("{} solves, worst scaled divergence mean {:.1e} ({n} L{l})", log.reports.len(), worst.0));
    o
}

fn criterion_7(log: &SolveLog) -> Outcome {
    let mut o = Outcome::new();

    let mut worst_quad: f64 = 0.0;
    for d in [1u32, 2, 3, 4, 5, 6, 8] {
        let rule = rule_for_degree(d).expect("supported degree");
        for a in 0..=d {
            for b in 0..=d - a {
                for c in 0..=d - a - b {
                    // reference vertices 0, e1, e2, e3: x = λ1, y = λ2, z = λ3
                    let got: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32) * l[3].powi(c as i32))
                        .sum::<f64>()
                        / 6.0;
                    worst_quad = worst_quad.max((got - reference_monomial(a, b, c)).abs());
                }
            }
        }
    }
    o.check(worst_quad <= 1e-12, format!("quadrature monomials {worst_quad:.1e}"));

    let mut runner = TestRunner::deterministic();
    let strategy = expr_strategy();
    let mut worst_jet: f64 = 0.0;
    for k in 0..50 {
        let e = strategy.new_tree(&mut runner).expect("expression").current();
        let x = [0.37 - 0.011 * k as f64, -0.52 + 0.017 * k as f64, 0.21 + 0.007 * k as f64];
        worst_jet = worst_jet.max(jet_fd_mismatch(&e, x));
    }
    o.check(worst_jet <= 1e-6, format!("jets vs differences, 50 expressions {worst_jet:.1e}"));

    let tet = builtin::reference_tet(BoundaryLabel::Neumann);
    for kind in ALL {
        let space = VelocitySpace::build(&tet, kind);
        let a = assembly::assemble_a(&tet, &space, 1.0).to_dense();
        let scale = a.abs().max();
        let kernel = a.clone().symmetric_eigen().eigenvalues.iter().filter(|x| x.abs() <= 1e-12 * scale).count();
        let motions: [fn([f64; 3]) -> [f64; 3]; 3] = [|_| [1.0, -2.0, 0.5], |x| [-x[1], x[0], 0.0], |x| [x[2], 0.3, -x[0]]];
        let residual = motions
            .iter()
            .map(|f| (&a * nalgebra::DVector::from_vec(space.interpolate(&tet, f))).amax())
            .fold(0.0, f64::max);
        o.check(kernel == 6 && residual <= 1e-12, format!("rigid kernel {}: dim {kernel}, residual {residual:.1e}", kind.name()));
    }

    let worst_saddle = log.reports.iter().map(|(_, r)| r.saddle_residual).fold(0.0, f64::max);
    o.check(worst_saddle <= 1e-10, format!("saddle residual over {} solves {worst_saddle:.1e}", log.reports.len()));

    let mut worst_eig: f64 = 0.0;
    for seed in 0..20 {
        let mut rng = StdRng::seed_from_u64(seed);
        let s = random_spd(20, 100.0, &mut rng);
        let m = random_spd(20, 10.0, &mut rng);
        let oracle = pencil_eigenvalues(&s, &m);
        let dense = linalg::smallest_generalized_eigenpair(&s, &m, &[]).expect("dense eigensolve");
        let minv_s = m.clone().try_inverse().expect("SPD") * &s;
        let mut op = |x: &[f64]| (&minv_s * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        let mapply = |x: &[f64]| (&m * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        let lz = linalg::lanczos_extreme(20, &mut op, &mapply, &[], &linalg::LanczosOptions::default()).expect("Lanczos");
        let scale = oracle[19];
        worst_eig = worst_eig.max((dense.value - oracle[0]).abs() / scale).max((lz.value - oracle[0]).abs() / scale);
    }
    o.check(worst_eig <= 1e-10, format!("eigensolvers vs dense oracle, 20 pencils {worst_eig:.1e}"));
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    // None: not part of the criterion (the island tet is also a single cell)
    let cases: [(&str, Mesh, Option<bool>, bool); 4] = [
        ("single tet", builtin::reference_tet(BoundaryLabel::Dirichlet), Some(true), false),
        ("Kuhn cube", builtin::kuhn_cube(BoundaryLabel::Dirichlet), Some(true), false),
        ("horizontal island", builtin::horizontal_island_tet(), None, true),
        ("octahedron patch", builtin::octahedron_patch(), Some(false), false),
    ];
    for (name, mesh, want_h2, want_h1) in cases {
        let (h1, h2) = (mesh.check_h1().len(), mesh.check_h2().len());
        let ok = want_h2.is_none_or(|w| (h2 > 0) == w) && (h1 > 0) == want_h1;
        o.check(ok, format!("{name}: {h1} (H1), {h2} (H2) violations"));
    }
    o
}

fn main() -> ExitCode {
    let mut log = SolveLog { reports: Vec::new() };
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut run = |n: usize, title: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        println!(
            "criterion {n} {}: {title} [{:.1} s]\n    {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.details.join("\n    ")
        );
        results.push((n, title, o));
    };
    run(1, "inf-sup counterexample", &mut criterion_1);
    run(2, "Korn counterexample", &mut criterion_2);
    run(8, "mesh assumption checkers", &mut criterion_8);
    run(3, "stability of the proposed elements", &mut criterion_3);
    run(4, "convergence rates on cubes", &mut || criterion_4(&mut log));
    run(5, "L-shape", &mut || criterion_5(&mut log));
    run(6, "discrete mass conservation", &mut || criterion_6(&log));
    run(7, "property suites", &mut || criterion_7(&log));

    results.sort_by_key(|r| r.0);
    println!("\nacceptance summary");
    for (n, title, o) in &results {
        println!("  criterion {n}: {} {title}", if o.pass { "PASS" } else { "FAIL" });
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("  {} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 && std::env::var_os("KS3D_ACCEPTANCE_STRICT").is_some() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
