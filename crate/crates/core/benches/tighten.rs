use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use freebdy::corpus::CorpusConfig;
use freebdy::scenario::SweepoutKind;
use freebdy::sweepout::{generate_scenario_sweepout, precondition_sweepout, tighten_sweepout, TightenConfig};
use freebdy::validation::psi_property_suite;
use freebdy::{ExecMode, PsiConfig, Scenario};
use std::hint::black_box;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn bench_sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("tighten_sweepout");
    group.sample_size(10);
    for (name, s, kind) in
        [("sphere", Scenario::sphere_equator(), SweepoutKind::Hemisphere), ("disk", Scenario::disk_circle(), SweepoutKind::Disk)]
    {
        let psi = PsiConfig::new(32).unwrap();
        let sw = generate_scenario_sweepout(kind, &s, 64, 512).unwrap();
        let sw = precondition_sweepout(&sw, &s, &psi, ExecMode::Parallel).unwrap();
        for (mode_name, mode) in MODES {
            let mut cfg = TightenConfig::new(psi);
            cfg.max_sweeps = 5;
            cfg.mode = mode;
            group.bench_with_input(BenchmarkId::new(name, mode_name), &cfg, |b, cfg| {
                b.iter(|| tighten_sweepout(black_box(&sw), &s, cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_psi_suite(c: &mut Criterion) {
    let mut group = c.benchmark_group("psi_property_suite");
    group.sample_size(10);
    let s = Scenario::sphere_equator();
    let cfg = CorpusConfig::default();
    for (mode_name, mode) in MODES {
        group.bench_function(BenchmarkId::new("sphere_200", mode_name), |b| {
            b.iter(|| psi_property_suite(&s, &cfg, black_box(200), 7, mode))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweeps, bench_psi_suite);
criterion_main!(benches);
