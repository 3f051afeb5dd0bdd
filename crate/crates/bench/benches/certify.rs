use criterion::{criterion_group, criterion_main, Criterion};
use plateau_bench::disk_case;
use plateau_core::fixtures::moebius_fixture;
use plateau_core::linking::{gauss_linking, linking_number};
use plateau_core::spanning::certify_spanning;
use plateau_core::CertifyOptions;
use std::hint::black_box;

fn certify(c: &mut Criterion) {
    let mut g = c.benchmark_group("certify");
    g.sample_size(10);
    for (name, h) in [("disk_h1/16", 1.0 / 16.0), ("disk_h1/32", 1.0 / 32.0)] {
        let (m, _, x) = disk_case(h);
        g.bench_function(name, |b| b.iter(|| certify_spanning(black_box(&x), &m, &CertifyOptions::default()).unwrap()));
    }
    let (m, x) = moebius_fixture(1.0 / 16.0);
    let ell2 = CertifyOptions { ell: 2, ..Default::default() };
    g.bench_function("moebius_ell2", |b| b.iter(|| certify_spanning(black_box(&x), &m, &ell2).unwrap()));
    g.finish();
}

fn linking(c: &mut Criterion) {
    let (a, b) = plateau_core::fixtures::torus_link_24(256);
    c.bench_function("linking_number/torus24", |bn| bn.iter(|| linking_number(black_box(&a), &b).unwrap()));
    c.bench_function("gauss_linking/torus24", |bn| bn.iter(|| gauss_linking(black_box(&a), &b, 1e-4).unwrap()));
}

criterion_group!(benches, certify, linking);
criterion_main!(benches);
