use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use std::hint::black_box;

use spherepack_core::density::DensityProbe;
use spherepack_core::lp::{branch_and_bound, random_bounded_lp, simplex_max, SeparableConcave};
use spherepack_core::packing::{fcc_packing, saturate, Window};
use spherepack_core::stargraph::{canonical_form, local_star, star_graph};
use spherepack_core::voronoi::VoronoiBuilder;
use spherepack_core::{Packing, Point3};

fn geometry(c: &mut Criterion) {
    let fcc = fcc_packing(8.0).unwrap();
    let builder = VoronoiBuilder::new(&fcc);
    c.bench_function("voronoi_cell_fcc", |b| b.iter(|| builder.cell(black_box(0)).unwrap()));

    let big = fcc_packing(21.0).unwrap();
    let probe = DensityProbe::new(&big);
    c.bench_function("covered_volume_r20", |b| {
        b.iter(|| probe.covered_volume(black_box(Point3::ORIGIN), 20.0).unwrap())
    });

    let empty = Packing::empty("bench", Window::origin(6.0).unwrap());
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("saturate_r6", |b| b.iter(|| saturate(black_box(&empty), 1, 0.5).unwrap()));
    group.finish();
}

fn graphs(c: &mut Criterion) {
    let fcc = fcc_packing(6.0).unwrap();
    let star = local_star(&fcc, 0).unwrap();
    c.bench_function("star_graph_fcc", |b| b.iter(|| star_graph(black_box(&star)).unwrap()));
    let g = star_graph(&star).unwrap();
    c.bench_function("canonical_form_fcc", |b| b.iter(|| canonical_form(black_box(&g))));
}

fn linear_programming(c: &mut Criterion) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let lp = random_bounded_lp(&mut rng, 6, 10);
    c.bench_function("simplex_6x10", |b| b.iter(|| simplex_max(black_box(&lp)).unwrap()));
    let sines = SeparableConcave::sum_sines(2);
    c.bench_function("bnb_sum_sines_refute", |b| b.iter(|| branch_and_bound(&sines, 1.9, 1_000_000).unwrap()));
}

criterion_group!(benches, geometry, graphs, linear_programming);
criterion_main!(benches);
