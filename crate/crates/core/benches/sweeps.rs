use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use rqdiff::bvp::PicardOptions;
use rqdiff::ivp::PurePowerParams;
use rqdiff::scan::{integrate_batch, scan_phase_diagram, AxisName, ExecMode, ScanAxis};
use rqdiff::{CoefficientSpec, ProblemParams};

fn phase_scan(c: &mut Criterion) {
    let base = ProblemParams::new(4.0, 2.0, 0.0, 0.0, 0.0, 2.0, 1.0);
    let opts = PicardOptions { n: 256, max_iter: 2000, ..Default::default() };
    let p = ScanAxis { name: AxisName::P, lo: 1.5, hi: 2.4, steps: 4 };
    let g = ScanAxis { name: AxisName::Gamma, lo: 0.0, hi: 0.3, steps: 3 };
    let coeffs = CoefficientSpec::default();
    let mut group = c.benchmark_group("phase_scan_4x3");
    group.sample_size(10);
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| scan_phase_diagram(black_box(&base), &coeffs, &opts, p, g, mode).unwrap())
        });
    }
    group.finish();
}

fn ivp_batch(c: &mut Criterion) {
    let params: Vec<PurePowerParams> = (0..32)
        .map(|i| PurePowerParams::from_origin(3.0, 2.0, 0.0, 0.0, 1.0, 1.0 + 3.0 * i as f64 / 32.0))
        .collect();
    let mut group = c.benchmark_group("ivp_batch_32");
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| integrate_batch(black_box(&params), 100.0, 1e-8, mode))
        });
    }
    group.finish();
}

criterion_group!(benches, phase_scan, ivp_batch);
criterion_main!(benches);
