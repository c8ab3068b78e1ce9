use rand::Rng;
use stagegate_core::features::EmbeddedMessage;
use stagegate_core::models::*;
use stagegate_core::nncore::{Activation, Tensor};
use stagegate_core::{seed, StageLabel};

fn random_tensor(shape: &[usize], tag: &str) -> Tensor<f64> {
    let mut rng = seed::rng(21, tag);
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn tiny_cnn() -> CnnConfig {
    CnnConfig {
        rows: 12,
        conv1_maps: 2,
        conv1_kernel: (3, 1),
        conv1_stride: (1, 1),
        pool1: (2, 1),
        conv2_maps: 2,
        conv2_kernel: (3, 1),
        conv2_stride: (2, 1),
        pool2: (2, 1),
        dropout: 0.5,
        hidden: 5,
        batch_norm: true,
    }
}

#[test]
fn tiny_cnn_gradients_match_finite_differences() {
    let model = CnnModel::<f64>::build(&tiny_cnn(), 8, 4).unwrap();
    let x = random_tensor(&[3, 12, 8], "cnn-x");
    let err = network_gradient_check(&model, &x, &[0, 2, 3], 1e-5, 9).unwrap();
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn tiny_rnn_gradients_match_finite_differences() {
    for activation in [Activation::Relu, Activation::Tanh] {
        let cfg = RnnConfig {
            hidden: 3,
            activation,
            unroll: 5,
            update_bias: 0.0,
        };
        let model = RnnModel::<f64>::build(&cfg, 4, 2).unwrap();
        let x = random_tensor(&[2, 5, 4], "rnn-x");
        let err = network_gradient_check(&model, &x, &[1, 3], 1e-5, 0).unwrap();
        assert!(err < 1e-4, "{activation:?}: max relative error {err}");
    }
}

/// Random unit-ish vectors for `vocab` words; each message is filler plus
/// exactly one keyword of its class.
fn keyword_set(n: usize, rows: usize, width: usize, seed_value: u64) -> (Vec<EmbeddedMessage>, Vec<StageLabel>) {
    let mut rng = seed::rng(seed_value, "keyword-set");
    let vocab: Vec<Vec<f32>> = (0..24)
        .map(|_| (0..width).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
        .collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let label = StageLabel::ALL[i % 4];
        let len = rng.gen_range(4..rows.min(20));
        let key_pos = rng.gen_range(0..len);
        let mut data = vec![0.0f32; rows * width];
        for r in 0..len {
            let word = if r == key_pos { label.index() } else { rng.gen_range(4..vocab.len()) };
            data[r * width..(r + 1) * width].copy_from_slice(&vocab[word]);
        }
        xs.push(EmbeddedMessage {
            rows,
            width,
            true_length: len,
            data,
        });
        ys.push(label);
    }
    (xs, ys)
}

fn accuracy<N: Network<f32> + Sync>(m: &N, xs: &[EmbeddedMessage], ys: &[StageLabel]) -> f64 {
    let preds = predict_batch(m, xs, 1).unwrap();
    preds.iter().zip(ys).filter(|(p, y)| p.label == **y).count() as f64 / ys.len() as f64
}

#[test]
fn cnn_learns_keyword_rule() {
    let (xs, ys) = keyword_set(200, 100, 8, 1);
    let mut m = CnnModel::build(&CnnConfig::default(), 8, 3).unwrap();
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let history = train_model(&mut m, &xs, &ys, &cfg).unwrap();
    assert_eq!(history.loss.len(), 50);
    let acc = accuracy(&m, &xs, &ys);
    assert!(acc >= 0.95, "training accuracy {acc}");
}

#[test]
fn rnn_learns_keyword_rule() {
    let (xs, ys) = keyword_set(200, 100, 8, 2);
    let mut m = build_rnn(8, 16).unwrap();
    let cfg = TrainConfig {
        epochs: 40,
        lr: 0.005,
        ..TrainConfig::default()
    };
    train_model(&mut m, &xs, &ys, &cfg).unwrap();
    let acc = accuracy(&m, &xs, &ys);
    assert!(acc >= 0.9, "training accuracy {acc}");
}

#[test]
fn full_batch_memorization_loss_never_rises() {
    let (xs, ys) = keyword_set(10, 12, 6, 3);
    let cfg_cnn = CnnConfig {
        dropout: 0.0,
        ..tiny_cnn()
    };
    let mut cnn: CnnModel = CnnModel::build(&cfg_cnn, 6, 1).unwrap();
    let cfg = TrainConfig {
        batch: 10,
        epochs: 60,
        ..TrainConfig::default()
    };
    let h = train_model(&mut cnn, &xs, &ys, &cfg).unwrap();
    for w in h.loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{:?}", h.loss);
    }

    let mut rnn: RnnModel = RnnModel::build(&RnnConfig { hidden: 6, activation: Activation::Relu, unroll: 12, ..RnnConfig::default() }, 6, 1).unwrap();
    let h = train_model(&mut rnn, &xs, &ys, &cfg).unwrap();
    for w in h.loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{:?}", h.loss);
    }
}

#[test]
fn zero_weights_give_uniform_probabilities() {
    let mut m = NeuralModel::Cnn(CnnModel::build(&tiny_cnn(), 5, 0).unwrap());
    for t in m.state_mut() {
        t.fill(0.0);
    }
    let (xs, _) = keyword_set(1, 12, 5, 4);
    let p = predict_model(&m, &xs[0]).unwrap();
    for q in p.probabilities {
        assert!((q - 0.25).abs() < 1e-7);
    }
}

#[test]
fn prediction_is_deterministic_and_normalized() {
    let (xs, ys) = keyword_set(20, 12, 5, 5);
    let mut m = NeuralModel::Rnn(RnnModel::build(&RnnConfig { hidden: 4, activation: Activation::Relu, unroll: 12, ..RnnConfig::default() }, 5, 0).unwrap());
    train_model(&mut m, &xs, &ys, &TrainConfig { epochs: 2, ..TrainConfig::default() }).unwrap();
    for x in &xs {
        let a = predict_model(&m, x).unwrap();
        assert_eq!(a, predict_model(&m, x).unwrap());
        assert!((a.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
    assert_eq!(predict_batch(&m, &xs, 1).unwrap(), predict_batch(&m, &xs, 3).unwrap());
}

#[test]
fn model_files_round_trip() {
    let (xs, ys) = keyword_set(12, 12, 5, 6);
    for mut m in [
        NeuralModel::Cnn(CnnModel::build(&tiny_cnn(), 5, 0).unwrap()),
        NeuralModel::Rnn(RnnModel::build(&RnnConfig { hidden: 4, activation: Activation::Tanh, unroll: 12, ..RnnConfig::default() }, 5, 0).unwrap()),
    ] {
        train_model(&mut m, &xs, &ys, &TrainConfig { epochs: 2, batch: 4, ..TrainConfig::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.nn");
        m.save(&path).unwrap();
        let back = NeuralModel::load(&path).unwrap();
        assert_eq!(back.architecture(), m.architecture());
        assert_eq!(predict_batch(&back, &xs, 1).unwrap(), predict_batch(&m, &xs, 1).unwrap());
    }
}

#[test]
fn input_contract_is_enforced() {
    let m: RnnModel = RnnModel::build(&RnnConfig { hidden: 2, activation: Activation::Relu, unroll: 12, ..RnnConfig::default() }, 5, 0).unwrap();
    let (mut xs, ys) = keyword_set(2, 12, 5, 7);
    assert!(matches!(predict_model(&m, &keyword_set(1, 11, 5, 7).0[0]), Err(ModelError::InputShape { .. })));
    let last = xs[0].data.len() - 1;
    xs[0].data[last] = 1.0;
    assert!(matches!(predict_model(&m, &xs[0]), Err(ModelError::NonZeroPadding(0))));
    let mut m2 = m.clone();
    assert!(matches!(train_model(&mut m2, &[], &[], &TrainConfig::default()), Err(ModelError::EmptyData)));
    assert!(matches!(train_model(&mut m2, &xs[1..], &ys, &TrainConfig::default()), Err(ModelError::LengthMismatch { .. })));
}

#[test]
fn rnn_ignores_nothing_but_zero_padding() {
    let m = build_rnn(5, 4).unwrap();
    let (xs, _) = keyword_set(1, 100, 5, 8);
    let a = predict_model(&m, &xs[0]).unwrap();
    let mut twin = xs[0].clone();
    twin.data[(twin.true_length) * 5..].iter_mut().for_each(|v| *v = 0.0);
    assert_eq!(a, predict_model(&m, &twin).unwrap());
}

#[test]
fn random_search_finds_rigged_optimum() {
    let mut space = SearchSpace::new();
    space.insert("lr".into(), ParamRange::LogUniform { low: 1e-5, high: 1e-1 });
    space.insert("batch".into(), ParamRange::Fixed { value: 50.0 });
    space.insert("hidden".into(), ParamRange::Fixed { value: 128.0 });
    // Peak at lr = 1e-3 on the log scale.
    let objective = |p: &TrialParams| Ok(-(p["lr"].log10() + 3.0).powi(2));
    let (best, log) = random_search(&space, 50, 17, 1, objective).unwrap();
    assert_eq!(log.len(), 50);
    let mut scores: Vec<f64> = log.iter().map(|t| t.score).collect();
    scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
    assert!(objective(&best).unwrap() >= scores[4]);
    assert!((best["lr"].log10() + 3.0).abs() < 0.4, "{best:?}");
}

