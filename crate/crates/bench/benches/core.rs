use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use tramdag::causal;
use tramdag::dgp::{DgpPreset, Intervention};
use tramdag::evalmetrics::ks_statistic;
use tramdag::model::{TrainConfig, TramDag};

fn setup(preset: &str, n: usize) -> (DgpPreset, tramdag::model::Dataset, TramDag) {
    let preset = DgpPreset::from_name(preset).unwrap();
    let data = preset.generate(n, 1, &Intervention::Observational).unwrap();
    let model = TramDag::init(&preset.model_dag(), &data, 0).unwrap();
    (preset, data, model)
}

fn bench_nll(c: &mut Criterion) {
    for name in ["cont_ls", "cont_cs", "vaca"] {
        let (_, data, model) = setup(name, 2_000);
        c.bench_function(&format!("mean_nll/{name}/2000"), |b| b.iter(|| model.mean_nll(black_box(&data)).unwrap()));
    }
}

fn bench_epoch(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    for name in ["cont_ls", "cont_cs", "mixed_ls"] {
        let (_, data, model) = setup(name, 2_048);
        let cfg = TrainConfig { epochs: 1, log_every: 0, ..TrainConfig::default() };
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut m = model.clone();
                m.train(black_box(&data), &cfg).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_sampling(c: &mut Criterion) {
    let (_, _, model) = setup("mixed_exp", 2_000);
    c.bench_function("sample_observational/mixed_exp/10000", |b| {
        b.iter(|| causal::sample_observational(&model, 10_000, black_box(3)).unwrap())
    });
}

fn bench_ks(c: &mut Criterion) {
    let preset = DgpPreset::from_name("cont_ls").unwrap();
    let a = preset.generate(10_000, 1, &Intervention::Observational).unwrap().column(2);
    let b = preset.generate(10_000, 2, &Intervention::Observational).unwrap().column(2);
    c.bench_function("ks_statistic/10000", |bch| bch.iter(|| ks_statistic(black_box(&a), black_box(&b)).unwrap()));
}

criterion_group!(benches, bench_nll, bench_epoch, bench_sampling, bench_ks);
criterion_main!(benches);
