use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use kahler_bench::{density_pair, flow_start, potential_and_tangent, sphere, torus2d, torus4d};
use kahler_core::density::{dtilde_v_distance, dv_distance, CalabiGeodesic};
use kahler_core::kahler::{calabi_inner, nabla11, potential_to_metric};
use kahler_core::krf::{krf_integrate, scalar_curvature, FlowControls};

fn kahler(c: &mut Criterion) {
    for (name, grid) in [("torus2d-64", torus2d()), ("torus4d-12", torus4d())] {
        let (phi, nu) = potential_and_tangent(&grid);
        c.bench_function(&format!("nabla11/{name}"), |b| b.iter(|| nabla11(black_box(&nu)).unwrap()));
        c.bench_function(&format!("potential_to_metric/{name}"), |b| {
            b.iter(|| potential_to_metric(black_box(phi.phi())).unwrap())
        });
        c.bench_function(&format!("calabi_inner/{name}"), |b| {
            b.iter(|| calabi_inner(black_box(&phi), &nu, &nu).unwrap())
        });
        c.bench_function(&format!("inverse_laplacian/{name}"), |b| {
            let f = phi.laplacian(&nu).unwrap();
            b.iter(|| phi.inverse_laplacian(black_box(&f)).unwrap())
        });
    }
}

fn density(c: &mut Criterion) {
    let grid = sphere(256);
    let (a, b) = density_pair(&grid);
    c.bench_function("dv_distance/sphere-256", |bn| bn.iter(|| dv_distance(black_box(&a), &b).unwrap()));
    c.bench_function("dtilde_v_distance/sphere-256", |bn| {
        bn.iter(|| dtilde_v_distance(black_box(&a), &b).unwrap())
    });
    let geo = CalabiGeodesic::new(&a, &b).unwrap();
    c.bench_function("geodesic_sample/sphere-256", |bn| bn.iter(|| geo.at(black_box(0.3 * geo.length()))));
}

fn flow(c: &mut Criterion) {
    let grid = sphere(256);
    let m = flow_start(&grid);
    c.bench_function("scalar_curvature/sphere-256", |b| b.iter(|| scalar_curvature(black_box(&m)).unwrap()));
    let controls = FlowControls {
        t_end: 0.1,
        records: 10,
        ..Default::default()
    };
    let mut g = c.benchmark_group("flow");
    g.sample_size(10);
    g.bench_function("krf_to_0.1/sphere-256", |b| b.iter(|| krf_integrate(black_box(&m), controls).unwrap()));
    g.finish();
}

criterion_group!(benches, kahler, density, flow);
criterion_main!(benches);
