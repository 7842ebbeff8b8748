use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hstlink::correlation::build_r_hh;
use hstlink::montecarlo::{run, DetectorCsi, TrialConfig};
use hstlink::numerics::Cholesky;
use hstlink::tradeoff::sweep_grid;
use hstlink::{make_layout, AnalysisSettings, Execution, LinkBudget, ScenarioParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let cfg = TrialConfig {
        scenario: ScenarioParams::default(),
        layout: make_layout(16, 4).unwrap(),
        budget: LinkBudget::from_snr(10.0).unwrap(),
        num_trials: 500,
        base_seed: 1,
        detector_csi: DetectorCsi::Estimated,
    };
    let mut g = c.benchmark_group("montecarlo_500_trials");
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| run(black_box(&cfg), exec, false).unwrap()));
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let s = ScenarioParams::default();
    let settings = AnalysisSettings::default();
    let mut g = c.benchmark_group("sweep_grid_l_max_20");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| sweep_grid(black_box(&s), 10.0, 20, &settings, exec).unwrap()));
    }
    g.finish();
}

fn factor_and_trace(c: &mut Criterion) {
    let s = ScenarioParams::default();
    let mut g = c.benchmark_group("cholesky_trace_inverse");
    g.sample_size(10);
    for n in [256, 1024] {
        let mut a = build_r_hh(&s, &make_layout(n, 9).unwrap()).to_dense();
        a.add_diagonal(0.1);
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &a, |b, a| {
                b.iter(|| Cholesky::factor(a, exec).unwrap().trace_inverse(exec))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, sweep, factor_and_trace);
criterion_main!(benches);
