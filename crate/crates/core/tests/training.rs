use cvqnn::dataio::Dataset;
use cvqnn::qnn::{evaluate, train, HybridModelConfig};

/// Eight 4-pixel images: class 0 lights the left half, class 1 the right.
fn toy() -> Dataset {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for k in 0..4 {
        let j = 0.1 * k as f64;
        images.push(vec![0.9 - j, 0.8 + j / 2.0, 0.1, j / 2.0]);
        labels.push(0);
        images.push(vec![j / 2.0, 0.1, 0.8 + j / 2.0, 0.9 - j]);
        labels.push(1);
    }
    Dataset::new(images, labels).unwrap()
}

fn toy_config(epochs: usize) -> HybridModelConfig {
    let mut config = HybridModelConfig::new(2, 2, 1, 2).with_encoder(4, &[4]);
    config.seed = 42;
    config.lr = 0.1;
    config.batch_size = 4;
    config.epochs = epochs;
    config
}

#[test]
fn separable_toy_set_is_learned() {
    let history = train(&toy_config(100), &toy()).unwrap();
    let first = history.epochs.iter().find(|r| r.accuracy == 1.0).map(|r| r.epoch);
    assert!(first.is_some(), "never reached 1.0: {:?}", history.epochs.last());
    assert!(history.epochs.iter().all(|r| r.norm_violations == 0));
}

#[test]
fn loss_drops_by_epoch_five() {
    let history = train(&toy_config(5), &toy()).unwrap();
    assert_eq!(history.epochs.len(), 5);
    assert!(history.epochs[4].loss < history.initial.loss);
}

#[test]
fn history_is_reproducible_and_final_params_score_as_recorded() {
    let config = toy_config(3);
    let a = train(&config, &toy()).unwrap();
    let b = train(&config, &toy()).unwrap();
    assert_eq!(a, b);
    let eval = evaluate(&config, &a.final_params, &toy()).unwrap();
    assert_eq!(eval.accuracy, a.final_accuracy());
    assert_eq!(eval.loss, a.epochs[2].loss);
}
