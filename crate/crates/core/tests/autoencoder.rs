mod common;

use common::{ae_central_difference, anomaly_fixture, auc, rel_err};
use ecgtda::autoencoder::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn memorize_cfg() -> TrainConfig {
    TrainConfig {
        batch_size: 32,
        seed: 4,
        ..Default::default()
    }
}

#[test]
fn memorizes_one_window() {
    let (normals, _) = anomaly_fixture(1, 0, 2);
    let copies = vec![normals[0].clone(); 200];
    let mut m = ae_init(5);
    let before = m.loss(&normals).unwrap();
    let trace = ae_train(&mut m, &copies, &memorize_cfg()).unwrap();
    assert_eq!(trace.epochs.len(), 150);
    assert_eq!(m.epoch(), 150);
    let after = m.loss(&normals).unwrap();
    assert!(after < 1e-4, "MSE {after}");
    assert!(after < before);
    assert!(trace.last().unwrap() < trace.first().unwrap());
    for e in &trace.epochs[100..] {
        assert_eq!(e.dropout_rate, 0.0);
    }
    assert_eq!(trace.epochs[0].dropout_rate, 0.5);
}

#[test]
fn gradient_spot_check_on_full_model() {
    let mut m = ae_init(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for p in m.params_mut() {
        *p += rng.gen_range(-0.01..0.01);
    }
    let x: Vec<Vec<f64>> = vec![(0..400).map(|_| rng.gen_range(-0.5..0.5)).collect()];
    let (_, grad) = m.loss_gradient(&x).unwrap();
    let n = grad.len();
    for k in 0..400 {
        let i = (k * 7919 * 13) % n;
        let fd = ae_central_difference(&mut m, &x, i, 3e-5);
        let e = rel_err(grad[i], fd);
        assert!(e < 1e-4, "{}: {} vs {fd}", m.param_name(i), grad[i]);
    }
}

#[test]
fn training_is_bit_reproducible() {
    let (normals, _) = anomaly_fixture(64, 0, 3);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 16,
        seed: 9,
        ..Default::default()
    };
    let mut a = ae_init(7);
    let mut b = ae_init(7);
    let ta = ae_train(&mut a, &normals, &cfg).unwrap();
    let tb = ae_train(&mut b, &normals, &cfg).unwrap();
    assert_eq!(ta, tb);
    assert!(a
        .params()
        .iter()
        .zip(b.params())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    let mut c = ae_init(7);
    ae_train(&mut c, &normals, &TrainConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(a.params(), c.params());
}

#[test]
fn training_resumes_across_saves() {
    let (normals, _) = anomaly_fixture(32, 0, 5);
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 8,
        ..Default::default()
    };
    let mut straight = ae_init(1);
    ae_train(
        &mut straight,
        &normals,
        &TrainConfig {
            epochs: 4,
            ..cfg.clone()
        },
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ae.json");
    let mut first = ae_init(1);
    ae_train(&mut first, &normals, &cfg).unwrap();
    first.save(&path).unwrap();
    let mut resumed = AEModel::load(&path).unwrap();
    assert_eq!(resumed, first);
    ae_train(&mut resumed, &normals, &cfg).unwrap();
    assert_eq!(resumed, straight);
}

#[test]
fn reconstruction_error_separates_distorted_beats() {
    let (train, _) = anomaly_fixture(256, 0, 10);
    let (normals, distorted) = anomaly_fixture(100, 100, 11);
    let mut m = ae_init(2);
    let cfg = TrainConfig {
        epochs: 40,
        batch_size: 32,
        dropout_epochs: 20,
        seed: 1,
        ..Default::default()
    };
    ae_train(&mut m, &train, &cfg).unwrap();
    let score = |w: &[Vec<f64>]| -> Vec<f64> {
        m.encode_batch(w)
            .unwrap()
            .into_iter()
            .map(|c| c.score)
            .collect()
    };
    let (sn, sd) = (score(&normals), score(&distorted));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&sd) > mean(&sn));
    let a = auc(&sn, &sd);
    assert!(a >= 0.9, "AUC {a}");
}
