use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kcurv::geometry::InducedGeometry;
use kcurv::grid::{Resolution, ScalarField, SphereGrid};
use kcurv::par::Execution;
use kcurv::prescription::{HomotopyPrescription, ModelPrescription};
use kcurv::solver::DiscreteProblem;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn grids(exec: Execution) -> Vec<SphereGrid> {
    [(32, 64), (64, 128)]
        .into_iter()
        .map(|(nlat, nlon)| SphereGrid::new(Resolution::Sphere { nlat, nlon }).unwrap().with_execution(exec))
        .collect()
}

fn field(grid: &SphereGrid) -> ScalarField {
    ScalarField::from_fn(grid, |p| {
        let [x, y, z] = p.embedding();
        0.8 + 0.05 * x + 0.03 * y * z
    })
}

fn bench(c: &mut Criterion) {
    let psi = ModelPrescription::new(0.5, 0.1, 2.0).unwrap();
    let h = HomotopyPrescription::new(&psi, 2.0, 0.5).unwrap();
    for (what, run) in [
        ("residual", 0usize),
        ("jacobian", 1),
        ("geometry", 2),
    ] {
        let mut group = c.benchmark_group(what);
        group.sample_size(20);
        for (mode, exec) in MODES {
            for grid in grids(exec) {
                let u = field(&grid);
                let prob = DiscreteProblem::new(&grid, h, 2).unwrap();
                let id = BenchmarkId::new(mode, grid.len());
                group.bench_with_input(id, &u, |b, u| match run {
                    0 => b.iter(|| black_box(prob.residual(u).unwrap())),
                    1 => b.iter(|| black_box(prob.jacobian(u).unwrap())),
                    _ => b.iter(|| black_box(InducedGeometry::compute(u, &grid).unwrap())),
                });
            }
        }
        group.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);
