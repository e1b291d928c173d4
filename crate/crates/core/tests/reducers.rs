mod common;

use rand::Rng as _;
use tripletreg_core::nn::{AeTrainConfig, TnnTrainConfig};
use tripletreg_core::reducers::{fit_random_projection, Reducer, ReducerSpec};
use tripletreg_core::triplets::MiningConfig;
use tripletreg_core::rng;

#[test]
fn random_projection_preserves_squared_norm_in_expectation() {
    let (d, k, trials) = (50, 10, 2000);
    let x = common::random_matrix(1, d, 1);
    let norm2: f64 = x.as_slice().iter().map(|v| v * v).sum();
    let samples: Vec<f64> = (0..trials)
        .map(|seed| {
            let p = fit_random_projection(d, k, seed).unwrap().transform(&x).unwrap();
            p.as_slice().iter().map(|v| v * v).sum()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    assert!((mean - norm2).abs() < 3.0 * se, "mean {mean} vs {norm2} (se {se})");
}

#[test]
fn transforms_are_stateless_across_batches() {
    let x = common::random_matrix(60, 8, 2);
    let mut r = rng::seeded(3);
    let labels: Vec<f64> = (0..60).map(|_| r.random_range(-1.0..1.0)).collect();
    let specs = [
        ReducerSpec::Pca { dims: 3 },
        ReducerSpec::Rp { dims: 3, seed: 50 },
        ReducerSpec::Tnn {
            mining: MiningConfig::default(),
            train: TnnTrainConfig {
                embedding_dim: 3,
                triplets_per_round: 100,
                epochs_per_round: 2,
                rounds: 2,
                batch_size: 32,
                learning_rate: 1e-3,
                ..TnnTrainConfig::default()
            },
        },
        ReducerSpec::Ae {
            train: AeTrainConfig { embedding_dim: 3, epochs: 5, batch_size: 16, ..AeTrainConfig::default() },
        },
    ];
    let a = x.select_rows(&(0..25).collect::<Vec<_>>());
    let b = x.select_rows(&(25..60).collect::<Vec<_>>());
    for spec in specs {
        let mut red = Reducer::new(spec);
        red.fit(&x, Some(&labels)).unwrap();
        let whole = red.transform(&a.vstack(&b).unwrap()).unwrap();
        let parts = red.transform(&a).unwrap().vstack(&red.transform(&b).unwrap()).unwrap();
        for (u, v) in whole.as_slice().iter().zip(parts.as_slice()) {
            assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()), "{:?}", red.kind());
        }
    }
}
