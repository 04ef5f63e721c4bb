use criterion::{criterion_group, criterion_main, Criterion};
use symfind::algsolve::{solve_system, Limits};
use symfind::analysis::{analyze, AnalysisConfig};
use symfind::ansatz::instantiate_finite;
use symfind::detsys::build_finite_detsys;
use symfind::model::AnalysisOptions;
use symfind_bench::corpus_model;

fn finite_solve(c: &mut Criterion) {
    let opts = AnalysisOptions::default();
    let mut group = c.benchmark_group("finite_solve");
    group.sample_size(10);
    for name in ["mammillary4", "goodwin", "goodwin3"] {
        let m = corpus_model(name);
        let sys = instantiate_finite(&build_finite_detsys(&m, &opts).unwrap(), &opts).unwrap();
        group.bench_function(name, |b| b.iter(|| solve_system(&sys, 0, &Limits::default()).unwrap()));
    }
    group.finish();
}

fn full_analysis(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    for name in ["toy_sign", "mammillary4", "llw1987"] {
        let m = corpus_model(name);
        group.bench_function(name, |b| b.iter(|| analyze(&m, &AnalysisConfig::default()).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, finite_solve, full_analysis);
criterion_main!(benches);
