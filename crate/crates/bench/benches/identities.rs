use criterion::{criterion_group, criterion_main, Criterion};
use plateau_core::identities::{run, IdentityConfig, Operators, Suite};
use std::hint::black_box;

fn suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("identities");
    g.sample_size(10);
    let cfg =
        IdentityConfig { chains: 100, cells: 20, norm_chains: 40, flat_pairs: 20, ..IdentityConfig::with_seed(42) };
    for s in Suite::ALL {
        g.bench_function(s.name(), |b| b.iter(|| run(black_box(&[s]), &cfg, &Operators::default())));
    }
    g.finish();
}

criterion_group!(benches, suites);
criterion_main!(benches);
