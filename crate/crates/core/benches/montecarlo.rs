use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use homsim::hom::{simulate_histogram_with, HomExperimentConfig, Polarization, BLOCK_PULSES};
use homsim::overlap::{mwo_monte_carlo_average, SourcePair};
use homsim::parallel::Execution;
use homsim::units::{Frequency, Rate};
use homsim::wavepacket::EmitterParams;

fn pair() -> SourcePair {
    let mk = |t1, dw| EmitterParams {
        gamma_star: Rate::new(0.1).unwrap(),
        delta_omega: Rate::new(dw).unwrap(),
        tau_c_ns: 100.0,
        sideband_fraction: 0.05,
        ..EmitterParams::ideal(t1)
    };
    SourcePair {
        a: mk(162.0, 3.0),
        b: mk(128.0, 2.0),
        mean_detuning: Frequency::ZERO,
        s_classical: 0.986,
        filter: None,
    }
}

fn histogram(c: &mut Criterion) {
    let pair = pair();
    let cfg = HomExperimentConfig {
        n_pulses: 16 * BLOCK_PULSES,
        ..HomExperimentConfig::default()
    };
    let mut group = c.benchmark_group("simulate_histogram");
    group.sample_size(10);
    group.throughput(Throughput::Elements(cfg.n_pulses));
    for (name, exec) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { threads: None }),
    ] {
        group.bench_with_input(BenchmarkId::new(name, cfg.n_pulses), &exec, |b, &exec| {
            b.iter(|| simulate_histogram_with(&pair, &cfg, Polarization::Parallel, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn detuning_average(c: &mut Criterion) {
    let pair = pair();
    c.bench_function("mwo_monte_carlo_average/1e5", |b| {
        b.iter(|| mwo_monte_carlo_average(&pair, 100_000, 1).unwrap())
    });
}

criterion_group!(benches, histogram, detuning_average);
criterion_main!(benches);
