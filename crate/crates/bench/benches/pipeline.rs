use criterion::{black_box, criterion_group, criterion_main, Criterion};

use scatfex_bench::{gradient_fixture, random_signal};
use scatfex_core::{
    build_filter_bank, dct_forward, dct_inverse, gen_cbf, kkt_residual, objective_eval,
    pink_noise, scatter2, scatter_batch, DeConfig, FitConfig, InitKind, ObjectiveSpec,
    ScatteringConfig,
};

fn bench_scattering(c: &mut Criterion) {
    let bank = build_filter_bank(&ScatteringConfig::synth_default()).unwrap();
    let signal = random_signal(128, 1);
    c.bench_function("scatter2_d128", |b| {
        b.iter(|| scatter2(black_box(&signal), &bank).unwrap())
    });
    let batch = gen_cbf(10, 3).unwrap();
    c.bench_function("scatter_batch_30", |b| {
        b.iter(|| scatter_batch(black_box(&batch), &bank).unwrap())
    });
}

fn bench_dct_and_pink(c: &mut Criterion) {
    let x: Vec<f64> = random_signal(128, 2).samples().to_vec();
    c.bench_function("dct_roundtrip_d128", |b| {
        b.iter(|| dct_inverse(&dct_forward(black_box(&x))))
    });
    c.bench_function("pink_noise_d128", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed = seed.wrapping_add(1);
            pink_noise(128, black_box(seed))
        })
    });
}

fn bench_de_sphere(c: &mut Criterion) {
    let config = DeConfig {
        pop_size: 40,
        f: 0.8,
        cr: 0.9,
        max_evals: 2000,
        seed: 9,
        init: InitKind::White,
        bounds: vec![5.0; 8],
    };
    c.bench_function("de_sphere_8d_2k_evals", |b| {
        b.iter(|| {
            scatfex_core::zoopt::minimize(
                |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>(),
                black_box(&config),
            )
            .unwrap()
        })
    });
}

fn bench_mlr_gradient(c: &mut Criterion) {
    let (features, labels, model) = gradient_fixture(300, 1078);
    c.bench_function("mlr_gradient_300x1078", |b| {
        b.iter(|| kkt_residual(&model, black_box(features.view()), &labels).unwrap())
    });
}

fn bench_objective(c: &mut Criterion) {
    let bank = build_filter_bank(&ScatteringConfig::synth_default()).unwrap();
    let train = gen_cbf(10, 4).unwrap();
    let features = scatter_batch(&train, &bank).unwrap();
    let config = FitConfig {
        lambda_grid: vec![1.0],
        ..FitConfig::default()
    };
    let model = scatfex_core::fit(features.view(), &train.labels, &config).unwrap();
    let spec = ObjectiveSpec {
        model,
        bank,
        target_class: 1,
        mu: 0.1,
        nu: 0.1,
    };
    let x: Vec<f64> = random_signal(128, 6).samples().to_vec();
    c.bench_function("objective_eval_d128", |b| {
        b.iter(|| objective_eval(black_box(&x), &spec).unwrap())
    });
}

criterion_group!(
    benches,
    bench_scattering,
    bench_dct_and_pink,
    bench_de_sphere,
    bench_mlr_gradient,
    bench_objective
);
criterion_main!(benches);
