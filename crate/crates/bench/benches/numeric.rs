use criterion::{criterion_group, criterion_main, Criterion};
use symfind::verify::{random_scenarios, rk4_integrate};
use symfind_bench::corpus_model;

fn rk4(c: &mut Criterion) {
    for name in ["goodwin", "mammillary4"] {
        let m = corpus_model(name);
        let sc = random_scenarios(&m, 0, 1, None).remove(0);
        c.bench_function(&format!("rk4/{name}"), |b| b.iter(|| rk4_integrate(&m, &sc).unwrap()));
    }
}

criterion_group!(benches, rk4);
criterion_main!(benches);
