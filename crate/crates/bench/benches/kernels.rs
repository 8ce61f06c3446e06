use criterion::{black_box, criterion_group, criterion_main, Criterion};

use ks3d_core::assembly::{self, Gram};
use ks3d_core::linalg::SpdSolver;
use ks3d_core::manufactured::jet::Jet3;
use ks3d_core::mesh::builtin;
use ks3d_core::{case_library, stability, BoundaryLabel, Mesh, VelocityKind, VelocitySpace};

fn cube(levels: usize) -> Mesh {
    let mut m = builtin::cube_grid([0.0; 3], 1.0, |_| Some(BoundaryLabel::Dirichlet));
    for _ in 0..levels {
        m = m.red_refine().unwrap();
    }
    m
}

fn mesh_benches(c: &mut Criterion) {
    let m = cube(1);
    c.bench_function("red_refine 768 cells", |b| b.iter(|| black_box(&m).red_refine().unwrap()));
}

fn assembly_benches(c: &mut Criterion) {
    let m = cube(1);
    for kind in [VelocityKind::KsP2, VelocityKind::KsBubble, VelocityKind::BernardiRaugel] {
        let s = VelocitySpace::build(&m, kind);
        c.bench_function(&format!("assemble_a {} 768 cells", kind.name()), |b| {
            b.iter(|| assembly::assemble_a(&m, &s, 1.0))
        });
    }
    let s = VelocitySpace::build(&m, VelocityKind::KsP2);
    let case = case_library("cube1").unwrap();
    c.bench_function("assemble_load ks-p2 768 cells", |b| b.iter(|| assembly::assemble_load(&m, &s, &case)));
}

fn solver_benches(c: &mut Criterion) {
    let m = cube(1);
    let s = VelocitySpace::build(&m, VelocityKind::KsP2);
    let free: Vec<usize> = (0..s.total_dofs()).filter(|&i| !s.dirichlet_mask()[i]).collect();
    let a = assembly::assemble_gram(&m, &s, Gram::Grad).submatrix(&free, &free);
    c.bench_function("sparse cholesky ks-p2 768 cells", |b| b.iter(|| SpdSolver::new(&a).unwrap()));
    let mut group = c.benchmark_group("stability");
    group.sample_size(10);
    group.bench_function("infsup ks-p2 768 cells", |b| b.iter(|| stability::infsup_constant(&m, &s).unwrap()));
    group.bench_function("korn ks-p2 768 cells", |b| b.iter(|| stability::korn_constant(&m, &s).unwrap()));
    group.finish();
}

fn jet_benches(c: &mut Criterion) {
    let case = case_library("lshape").unwrap();
    c.bench_function("lshape body force", |b| b.iter(|| case.body_force(black_box([-0.3, 0.4, 0.2])).unwrap()));
    c.bench_function("jet product chain", |b| {
        b.iter(|| {
            let [x, y, z] = Jet3::coordinates(black_box([0.3, 0.2, 0.1]));
            (x * y).sin() * z.exp() + y.powi(5)
        })
    });
}

criterion_group!(benches, mesh_benches, assembly_benches, solver_benches, jet_benches);
criterion_main!(benches);
