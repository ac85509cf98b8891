use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use speechaug::corpus::{generate_epoch, BatchPlan, SyntheticCorpus};
use speechaug::loss::{batch_loss, UtteranceLoss};
use speechaug::{evaluate, oracle_wiener_gain, stft, Exec, FrameConfig, LossConfig, MetricConfig, Normalization};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn corpus() -> SyntheticCorpus {
    SyntheticCorpus::generate(8, 4, 2.0, 1).unwrap()
}

fn bench_epoch(c: &mut Criterion) {
    let corpus = corpus();
    let plan = BatchPlan {
        global_seed: 7,
        examples_per_epoch: 64,
        ..BatchPlan::default()
    };
    let mut g = c.benchmark_group("generate_epoch");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| generate_epoch(&corpus.speech, &corpus.noise, &plan, 0, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_loss(c: &mut Criterion) {
    let corpus = corpus();
    let plan = BatchPlan {
        global_seed: 3,
        examples_per_epoch: 32,
        ..BatchPlan::default()
    };
    let frame = FrameConfig::default();
    let examples = generate_epoch(&corpus.speech, &corpus.noise, &plan, 0, Exec::Parallel)
        .unwrap()
        .into_mixed();
    let specs: Vec<_> = examples
        .iter()
        .map(|ex| {
            let s = stft(&ex.target, &frame).unwrap();
            let n = stft(&ex.noise, &frame).unwrap();
            let x = stft(&ex.mixture, &frame).unwrap();
            let g = oracle_wiener_gain(&s, &n).unwrap();
            (s, x, g, ex.sigma_s)
        })
        .collect();
    let batch: Vec<_> = specs
        .iter()
        .map(|(s, x, g, sigma)| UtteranceLoss {
            target: s,
            noisy: x,
            gain: g,
            normalization: Normalization::Sigma(*sigma),
        })
        .collect();
    let cfg = LossConfig::default();
    let mut g = c.benchmark_group("batch_loss");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| batch_loss(&batch, &cfg, exec).unwrap()));
    }
    g.finish();
}

fn bench_metrics(c: &mut Criterion) {
    let corpus = corpus();
    let plan = BatchPlan {
        global_seed: 9,
        examples_per_epoch: 32,
        ..BatchPlan::default()
    };
    let examples = generate_epoch(&corpus.speech, &corpus.noise, &plan, 0, Exec::Parallel)
        .unwrap()
        .into_mixed();
    let cfg = MetricConfig::default();
    let mut g = c.benchmark_group("metric_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(&examples, |ex| evaluate(&ex.target, &ex.mixture, &cfg).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_epoch, bench_loss, bench_metrics);
criterion_main!(benches);
