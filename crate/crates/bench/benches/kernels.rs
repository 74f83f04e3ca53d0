use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use maslov_bench::{robin_model, sigma2_point};
use maslov_core::assembly::morse_index;
use maslov_core::dtn::{dirichlet_to_neumann, upsilon_frame, DEFAULT_FALLBACK_TOL};
use maslov_core::symplectic::{eigenphases, souriau_eigenphases, souriau_unitary, LagrangianFrame};

fn pencil_eigen(c: &mut Criterion) {
    let mut group = c.benchmark_group("pencil_morse");
    for n in [9, 17] {
        let model = robin_model(n);
        let p = sigma2_point();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| morse_index(&model.pencil(black_box(&p)).unwrap(), None).unwrap().count));
    }
    group.finish();
}

fn trace_maps(c: &mut Criterion) {
    let mut group = c.benchmark_group("trace_maps");
    for n in [9, 17] {
        let model = robin_model(n);
        let p = sigma2_point();
        group.bench_with_input(BenchmarkId::new("dtn", n), &n, |b, _| b.iter(|| dirichlet_to_neumann(&model, black_box(&p), DEFAULT_FALLBACK_TOL).unwrap()));
        group.bench_with_input(BenchmarkId::new("upsilon", n), &n, |b, _| b.iter(|| upsilon_frame(&model, black_box(&p), DEFAULT_FALLBACK_TOL).unwrap()));
    }
    group.finish();
}

fn souriau(c: &mut Criterion) {
    let mut group = c.benchmark_group("souriau_phases");
    for n in [9, 17] {
        let model = robin_model(n);
        let f = upsilon_frame(&model, &sigma2_point(), DEFAULT_FALLBACK_TOL).unwrap().frame;
        let g = LagrangianFrame::neumann(f.half_dim());
        group.bench_with_input(BenchmarkId::new("real_joint", n), &n, |b, _| b.iter(|| souriau_eigenphases(black_box(&f), &g).unwrap()));
        group.bench_with_input(BenchmarkId::new("unitary", n), &n, |b, _| b.iter(|| eigenphases(&souriau_unitary(black_box(&f), &g).unwrap()).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, pencil_eigen, trace_maps, souriau);
criterion_main!(benches);
