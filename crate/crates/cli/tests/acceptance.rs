//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use stagegate_core::embeddings::{cosine, train_word2vec, training_sentences, EmbeddingTable, W2vConfig};
use stagegate_core::eval::weighted_f1;
use stagegate_core::features::{embed_matrix, SparseFeatureConfig, SparseFeaturizer, SparseVector, FeatureSpace, BowConfig, BowMode, MAX_WORDS};
use stagegate_core::models::{build_cnn, CnnConfig};
use stagegate_core::nncore::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, dense_backward, dense_forward,
    gradient_check, maxpool_backward, maxpool_forward, softmax_xent, Activation, GruCell, Sequential, Tensor,
};
use stagegate_core::pipeline::{Pipeline, PipelineSpec};
use stagegate_core::svm::{train_svm, SvmConfig};
use stagegate_core::synth::{self, CooccurrenceConfig, SynthConfig, SynthVocabulary};
use stagegate_core::textprep::{Preprocessor, ProcessedMessage};
use stagegate_core::{seed, Message, StageLabel};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn process(messages: &[Message]) -> Vec<ProcessedMessage> {
    Preprocessor::bundled().process_all(messages, 1).expect("preprocessing")
}

// ---------------------------------------------------------------- 1

const TOY_DOCS: [&str; 20] = [
    "flood warning for the river valley tonight",
    "the river is rising and the flood warning stays",
    "shelter open at the high school gym",
    "volunteers needed at the shelter tonight",
    "road closed near the river bridge",
    "road open again after the bridge check",
    "thank you volunteers for the cleanup",
    "cleanup continues in the valley",
    "power out across the valley",
    "power restored for most homes",
    "stock water and food before the storm",
    "storm warning for the coast",
    "the coast road is closed",
    "great job team great job",
    "sandbags available at the fire station",
    "fire station open for sandbags and water",
    "the storm passed and cleanup starts",
    "homes damaged by the flood",
    "report damaged homes to the county",
    "county offices open for flood reports",
];

/// Term counts of all 1..=3-grams, computed directly from the lemma list.
fn oracle_counts(lemmas: &[&str]) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for n in 1..=3 {
        if lemmas.len() < n {
            continue;
        }
        for start in 0..=lemmas.len() - n {
            *out.entry(lemmas[start..start + n].join(" ")).or_insert(0.0) += 1.0;
        }
    }
    out
}

fn tfidf_oracle() -> Outcome {
    let msgs: Vec<Message> = TOY_DOCS.iter().enumerate().map(|(i, t)| Message::new(i.to_string(), *t)).collect();
    let pms = process(&msgs);
    let mut worst = 0.0f64;
    for min_df in [1, 2] {
        let cfg = SparseFeatureConfig {
            bow: Some(BowConfig { orders: vec![1, 2, 3], min_df }),
            mode: BowMode::Tfidf,
            ..SparseFeatureConfig::default()
        };
        let fz = SparseFeaturizer::fit(&cfg, &pms).map_err(|e| e.to_string())?;
        let space = fz.space();

        let counts: Vec<BTreeMap<String, f64>> = pms.iter().map(|pm| oracle_counts(&pm.lemmas())).collect();
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &counts {
            for t in c.keys() {
                *df.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let kept: BTreeSet<&str> = df.iter().filter(|(_, &d)| d >= min_df).map(|(t, _)| *t).collect();
        let expected_names: Vec<&str> = space.names().iter().map(String::as_str).collect();
        check(kept.iter().copied().eq(expected_names.iter().copied()), || {
            format!("vocabulary differs from oracle at min_df {min_df}")
        })?;

        let n = pms.len() as f64;
        for (pm, c) in pms.iter().zip(&counts) {
            let mut w: BTreeMap<&str, f64> = c
                .iter()
                .filter(|(t, _)| kept.contains(t.as_str()))
                .map(|(t, &tf)| (t.as_str(), tf * (((1.0 + n) / (1.0 + df[t.as_str()] as f64)).ln() + 1.0)))
                .collect();
            let norm = w.values().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                w.values_mut().for_each(|x| *x /= norm);
            }
            let got = fz.transform(pm).map_err(|e| e.to_string())?.to_dense();
            for (i, name) in expected_names.iter().enumerate() {
                worst = worst.max((got[i] - w.get(name).copied().unwrap_or(0.0)).abs());
            }
        }
    }
    check(worst < 1e-9, || format!("max coordinate error {worst:e}"))?;
    Ok(format!("max coordinate error {worst:.1e}"))
}

// ---------------------------------------------------------------- 2

const EPS: f64 = 1e-5;

fn random(shape: &[usize], tag: &str) -> Tensor<f64> {
    let mut rng = seed::rng(17, tag);
    let n = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn project(y: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn with(t: &Tensor<f64>, v: &[f64]) -> Tensor<f64> {
    Tensor::from_vec(t.shape(), v.to_vec()).unwrap()
}

fn gradient_checks() -> Outcome {
    let mut errors: Vec<(String, f64)> = Vec::new();

    let (x, w, b) = (random(&[3, 4], "dx"), random(&[5, 4], "dw"), random(&[5], "db"));
    let r = random(&[3, 5], "dr");
    let (gx, gw, gb) = dense_backward(&x, &w, &r, true).unwrap();
    let f = |x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]| project(&dense_forward(x, w, b).unwrap(), &r);
    let e = gradient_check(x.data(), gx.unwrap().data(), EPS, |v| f(&with(&x, v), &w, b.data()))
        .max(gradient_check(w.data(), gw.data(), EPS, |v| f(&x, &with(&w, v), b.data())))
        .max(gradient_check(b.data(), &gb, EPS, |v| f(&x, &w, v)));
    errors.push(("dense".into(), e));

    for (k, s) in [((5, 1), (2, 1)), ((3, 1), (2, 1))] {
        let x = random(&[2, 2, 21, 6], "cx");
        let w = random(&[3, 2, k.0, k.1], "cw");
        let b = random(&[3], "cb");
        let y = conv2d_forward(&x, &w, b.data(), s).unwrap();
        let r = random(y.shape(), "cr");
        let (gx, gw, gb) = conv2d_backward(&x, &w, s, &r, true).unwrap();
        let f = |x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]| project(&conv2d_forward(x, w, b, s).unwrap(), &r);
        let e = gradient_check(x.data(), gx.unwrap().data(), EPS, |v| f(&with(&x, v), &w, b.data()))
            .max(gradient_check(w.data(), gw.data(), EPS, |v| f(&x, &with(&w, v), b.data())))
            .max(gradient_check(b.data(), &gb, EPS, |v| f(&x, &w, v)));
        errors.push((format!("conv2d {}x{} stride {}x{}", k.0, k.1, s.0, s.1), e));
    }

    // distinct values far apart relative to eps: no pooling ties
    let n = 2 * 2 * 15 * 3;
    let mut vals: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0) * 0.01).collect();
    let mut rng = seed::rng(17, "pool-perm");
    for i in (1..n).rev() {
        vals.swap(i, rng.gen_range(0..=i));
    }
    let x = Tensor::from_vec(&[2, 2, 15, 3], vals).unwrap();
    let (y, arg) = maxpool_forward(&x, (5, 1), (5, 1)).unwrap();
    let r = random(y.shape(), "pr");
    let gx = maxpool_backward(&r, &arg, x.shape()).unwrap();
    let e = gradient_check(x.data(), gx.data(), EPS, |v| project(&maxpool_forward(&with(&x, v), (5, 1), (5, 1)).unwrap().0, &r));
    errors.push(("maxpool".into(), e));

    let mut e = 0.0f64;
    for shape in [vec![6, 3], vec![3, 2, 4, 2]] {
        let c = shape[1];
        let x = random(&shape, "bx");
        let (g, b) = (random(&[c], "bg"), random(&[c], "bb"));
        let r = random(&shape, "br");
        let f = |x: &Tensor<f64>, g: &[f64], b: &[f64]| {
            let (mut m, mut v) = (vec![0.0; c], vec![1.0; c]);
            project(&batchnorm_forward(x, g, b, &mut m, &mut v, 0.1, 1e-5, true).unwrap().0, &r)
        };
        let (mut m, mut v) = (vec![0.0; c], vec![1.0; c]);
        let (_, cache) = batchnorm_forward(&x, g.data(), b.data(), &mut m, &mut v, 0.1, 1e-5, true).unwrap();
        let (gx, gg, gb) = batchnorm_backward(&r, g.data(), &cache.unwrap()).unwrap();
        e = e
            .max(gradient_check(x.data(), gx.data(), EPS, |v| f(&with(&x, v), g.data(), b.data())))
            .max(gradient_check(g.data(), &gg, EPS, |v| f(&x, v, b.data())))
            .max(gradient_check(b.data(), &gb, EPS, |v| f(&x, g.data(), v)));
    }
    errors.push(("batchnorm".into(), e));

    let x = random(&[5, 4], "sx");
    let gold = [0, 3, 1, 1, 2];
    let (_, g) = softmax_xent(&x, &gold).unwrap();
    errors.push((
        "softmax-xent".into(),
        gradient_check(x.data(), g.data(), EPS, |v| softmax_xent(&with(&x, v), &gold).unwrap().0),
    ));

    for act in [Activation::Relu, Activation::Tanh] {
        let mut cell = GruCell::<f64>::new(4, 3, act, &mut seed::rng(17, "gru")).unwrap();
        // keep pre-activations off the ReLU kink
        cell.b.value.data_mut().iter_mut().for_each(|v| *v = 0.3);
        let x = random(&[2, 5, 4], "gx");
        let r = random(&[2, 3], "gr");
        let (_, trace) = cell.forward_sequence(&x, true).unwrap();
        let gx = cell.backward(&trace.unwrap(), &r).unwrap();
        let loss = |c: &GruCell<f64>, x: &Tensor<f64>| project(&c.forward_sequence(x, false).unwrap().0, &r);
        let mut e = gradient_check(x.data(), gx.data(), EPS, |v| loss(&cell, &with(&x, v)));
        for k in 0..3 {
            let p = cell.params()[k];
            let grad = p.grad.as_ref().unwrap().data().to_vec();
            e = e.max(gradient_check(p.value.data(), &grad, EPS, |v| {
                let mut c = cell.clone();
                c.params_mut()[k].value.data_mut().copy_from_slice(v);
                loss(&c, &x)
            }));
        }
        errors.push((format!("gru {act:?}"), e));
    }

    let (name, worst) = errors
        .iter()
        .cloned()
        .fold((String::new(), 0.0f64), |acc, (n, e)| if e > acc.1 || e.is_nan() { (n, e) } else { acc });
    check(worst < 1e-4, || format!("{name}: relative error {worst:e}"))?;
    Ok(format!("{} checks, worst {worst:.1e} ({name})", errors.len()))
}

// ---------------------------------------------------------------- 3

fn shape_arithmetic() -> Outcome {
    let m = build_cnn(305).map_err(|e| e.to_string())?;
    check(m.input_length() == 30_500, || format!("input length {}", m.input_length()))?;
    let chain: Vec<Vec<usize>> = m.shape_chain().map_err(|e| e.to_string())?.into_iter().map(|(_, s)| s).collect();

    let net: Sequential<f32> = CnnConfig::default().network(305, 0).map_err(|e| e.to_string())?;
    let mut x = Tensor::<f32>::zeros(&[1, 1, 100, 305]);
    let mut runtime = Vec::new();
    for layer in &net.layers {
        x = layer.infer(x).map_err(|e| e.to_string())?;
        runtime.push(x.shape().to_vec());
    }
    check(chain == runtime, || format!("static {chain:?} vs runtime {runtime:?}"))?;

    let key: Vec<Vec<usize>> = net
        .layers
        .iter()
        .zip(&runtime)
        .filter(|(l, _)| matches!(l.name(), "conv2d" | "maxpool" | "flatten" | "dense"))
        .map(|(_, s)| s.clone())
        .collect();
    let expected = vec![
        vec![1, 100, 48, 305],
        vec![1, 100, 9, 305],
        vec![1, 200, 4, 305],
        vec![1, 200, 1, 305],
        vec![1, 61_000],
        vec![1, 200],
        vec![1, 4],
    ];
    check(key == expected, || format!("chain {key:?}"))?;
    Ok("30,500 input; 48x305 → 9x305 → 4x305 → 1x305 → 61,000 → 200 → 4".into())
}

// ---------------------------------------------------------------- 4

fn weighted_f1_consistency() -> Outcome {
    let supports = [266, 139, 389, 711];
    let tfidf = weighted_f1(&[0.668, 0.777, 0.787, 0.886], &supports).map_err(|e| e.to_string())?;
    let boolean = weighted_f1(&[0.429, 0.674, 0.709, 0.802], &supports).map_err(|e| e.to_string())?;
    check((tfidf - 0.810).abs() <= 0.005, || format!("Tfidf {tfidf:.4}"))?;
    check((boolean - 0.697).abs() <= 0.005, || format!("Bool {boolean:.4}"))?;
    Ok(format!("Tfidf {tfidf:.4} vs 0.810, Bool {boolean:.4} vs 0.697"))
}

// ---------------------------------------------------------------- 5

fn svm_geometry() -> Outcome {
    let mut rng = seed::rng(17, "separable");
    let corners = [(3.0, 3.0), (3.0, -3.0), (-3.0, 3.0), (-3.0, -3.0)];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..100 {
        let (cx, cy) = corners[i % 4];
        let x = [cx + rng.gen_range(-1.0..1.0), cy + rng.gen_range(-1.0..1.0)];
        xs.push(SparseVector::from_dense(&x));
        ys.push(StageLabel::ALL[i % 4]);
    }
    let cfg = SvmConfig { c: 1e4, max_epochs: 5000, ..SvmConfig::default() };
    let m = train_svm(&xs, &ys, FeatureSpace::default(), &cfg, 1).map_err(|e| e.to_string())?;
    let mut min_margin = f64::INFINITY;
    for (x, &y) in xs.iter().zip(&ys) {
        check(m.predict(x).unwrap() == y, || "training point misclassified".into())?;
        let f = m.decision_values(x).unwrap();
        for class in StageLabel::ALL {
            let t = if class == y { 1.0 } else { -1.0 };
            min_margin = min_margin.min(t * f[class.index()]);
        }
    }
    check(min_margin >= 1.0 - 1e-6, || format!("min functional margin {min_margin}"))?;
    let mut probe = seed::rng(17, "probe");
    for factor in [1e-3, 0.5, 7.0, 1e3] {
        let mut scaled = m.clone();
        scaled.rescale(factor);
        for _ in 0..200 {
            let x = SparseVector::from_dense(&[probe.gen_range(-6.0..6.0), probe.gen_range(-6.0..6.0)]);
            check(scaled.predict(&x).unwrap() == m.predict(&x).unwrap(), || {
                format!("prediction changed under rescale by {factor}")
            })?;
        }
    }
    Ok(format!("100/100 correct, min margin {min_margin:.6}"))
}

// ---------------------------------------------------------------- 6

const SVM_SPEC: &str = r#"
[features]
kind = "sparse"
[features.config]
mode = "Tfidf"
[features.config.bow]
orders = [1, 2, 3]
[classifier]
kind = "svm"
"#;

const RNN_SPEC: &str = r#"
[features]
kind = "matrix"
[classifier]
kind = "rnn"
[classifier.config]
hidden = 64
[classifier.train]
epochs = 20
"#;

const CNN_SPEC: &str = r#"
[features]
kind = "matrix"
[classifier]
kind = "cnn"
[classifier.train]
epochs = 2
"#;

fn end_to_end() -> Outcome {
    let (train, test) = synth::generate(&SynthConfig::default()).map_err(|e| e.to_string())?;
    let (train_pms, test_pms) = (process(train.messages()), process(test.messages()));
    let (train_y, test_y) = (train.labels().unwrap(), test.labels().unwrap());
    let w2v = W2vConfig {
        dim: 50,
        min_count: 1,
        seed: seed::derive(1, "acceptance/cw2v"),
        ..W2vConfig::default()
    };
    let cw2v = train_word2vec(&training_sentences(&train_pms), &w2v).map_err(|e| e.to_string())?;

    let mut scores = Vec::new();
    for (name, spec, emb, floor) in [
        ("svm", SVM_SPEC, None, 0.95),
        ("rnn", RNN_SPEC, Some(cw2v.clone()), 0.90),
        ("cnn", CNN_SPEC, Some(cw2v), 0.85),
    ] {
        let spec = PipelineSpec::from_toml(spec).map_err(|e| e.to_string())?;
        let (p, _) = Pipeline::fit(&spec, &train_pms, &train_y, emb, 1).map_err(|e| e.to_string())?;
        let f1 = p.evaluate(&test_pms, &test_y, 1).map_err(|e| e.to_string())?.weighted_f1;
        scores.push(format!("{name} {f1:.3}"));
        check(f1 >= floor, || format!("{name} weighted F1 {f1:.3} < {floor}"))?;
    }
    Ok(scores.join(", "))
}

// ---------------------------------------------------------------- 7

fn cooccurrence() -> Outcome {
    let corpus = synth::cooccurrence_corpus(&CooccurrenceConfig::default()).map_err(|e| e.to_string())?;
    let cfg = W2vConfig {
        dim: 50,
        min_count: 1,
        seed: seed::derive(1, "acceptance/cooccurrence"),
        ..W2vConfig::default()
    };
    let table = train_word2vec(&corpus.sentences, &cfg).map_err(|e| e.to_string())?;
    let mean = |pairs: &[(&str, &str)]| {
        pairs.iter().map(|(a, b)| cosine(table.get(a).unwrap(), table.get(b).unwrap())).sum::<f64>() / pairs.len() as f64
    };
    let co = mean(&corpus.cooccurring_pairs());
    let rand = mean(&corpus.random_pairs(2000, 5));
    check(co - rand >= 0.2, || format!("co-occurring {co:.3} vs random {rand:.3}"))?;
    Ok(format!("co-occurring {co:.3}, random {rand:.3}, gap {:.3}", co - rand))
}

// ---------------------------------------------------------------- 8

fn padding() -> Outcome {
    let words = SynthVocabulary::new(&SynthConfig::default()).filler;
    let mut rng = seed::rng(17, "padding");
    let dim = 6;
    let vectors: Vec<f32> = (0..words.len() * dim).map(|_| rng.gen_range(0.1f32..1.0)).collect();
    let table = EmbeddingTable::new(dim, words.clone(), vectors).map_err(|e| e.to_string())?;

    let mut raw = Vec::new();
    let msgs: Vec<Message> = (0..1000)
        .map(|i| {
            let len = if i % 5 == 0 { 150 } else { rng.gen_range(1..MAX_WORDS) };
            let ws: Vec<&str> = (0..len).map(|_| words[rng.gen_range(0..words.len())].as_str()).collect();
            let text = ws.join(" ");
            raw.push(ws);
            Message::new(i.to_string(), text)
        })
        .collect();
    let pms = process(&msgs);
    let mut long = 0;
    for (pm, ws) in pms.iter().zip(&raw) {
        let e = embed_matrix(pm, &table, false).map_err(|e| e.to_string())?;
        check(e.rows == MAX_WORDS && e.width == dim, || format!("matrix {}x{}", e.rows, e.width))?;
        check(e.true_length == ws.len().min(MAX_WORDS), || {
            format!("{}-word message has true_length {}", ws.len(), e.true_length)
        })?;
        check(e.padding_is_zero(), || "non-zero padding row".into())?;
        for (r, w) in ws.iter().take(MAX_WORDS).enumerate() {
            check(e.row(r) == table.get(w).unwrap(), || format!("row {r} is not the vector of {w:?}"))?;
        }
        if ws.len() > MAX_WORDS {
            long += 1;
        }
    }
    Ok(format!("1000 messages ({long} truncated from 150 words)"))
}

// ---------------------------------------------------------------- 9, 10

fn stagegate(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_stagegate"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!("stagegate {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim())
    })
}

const EXPERIMENT: &str = r#"
name = "tables"
seed = 3

[data]
train = "data/train.jsonl"
test = "data/test.jsonl"
generic_embeddings = "generic.bin"

[custom_embeddings]
dim = 20
min_count = 1

[[table]]
name = "table4"
kind = "svm_bow"

[[table]]
name = "table9"
kind = "svm_w2v"
c_grid = [0.1, 1.0, 10.0]
folds = 3

[[table]]
name = "table12"
kind = "cnn"
[table.train]
epochs = 1

[[table]]
name = "table13"
kind = "rnn"
[table.rnn]
hidden = 16
[table.train]
epochs = 3
"#;

fn csv_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn prepare_experiment(dir: &Path) -> Result<(), String> {
    stagegate(dir, &["synth", "--train", "600", "--test", "200", "--out", "data"])?;
    stagegate(dir, &["--seed", "99", "synth", "--train", "600", "--test", "50", "--out", "other"])?;
    stagegate(dir, &["--seed", "5", "train-embeddings", "--data", "other/train.jsonl", "--dim", "20", "--min-count", "1", "--out", "generic.bin"])?;
    std::fs::write(dir.join("experiment.toml"), EXPERIMENT).map_err(|e| e.to_string())
}

fn determinism(dir: &Path) -> Outcome {
    for run in ["run-a", "run-b"] {
        stagegate(dir, &["experiment", "--config", "experiment.toml", "--out", run])?;
    }
    let a = csv_files(&dir.join("run-a/tables"));
    let b = csv_files(&dir.join("run-b/tables"));
    check(a.len() >= 4 + 15, || format!("only {} CSV files", a.len()))?;
    check(a.keys().eq(b.keys()), || "runs wrote different CSV sets".into())?;
    for (path, bytes) in &a {
        check(&b[path] == bytes, || format!("{} differs between runs", path.display()))?;
    }
    Ok(format!("{} report CSVs byte-identical", a.len()))
}

fn table_shapes(dir: &Path) -> Outcome {
    let root = dir.join("run-a/tables");
    let mut shapes = String::new();
    for table in ["table4", "table9", "table12", "table13"] {
        let csv = std::fs::read_to_string(root.join(format!("{table}.csv"))).map_err(|e| format!("{table}.csv: {e}"))?;
        let mut lines = csv.lines();
        shapes.push_str(&format!("[{table}]\n{}\n", lines.next().unwrap_or("")));
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            check(cells.len() == 6 && cells[1..].iter().all(|c| c.parse::<f64>().is_ok()), || {
                format!("{table}: malformed row {line:?}")
            })?;
            shapes.push_str(cells[0]);
            shapes.push('\n');
        }
    }
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/table_shapes.txt");
    let golden = std::fs::read_to_string(&golden_path).map_err(|e| e.to_string())?;
    check(shapes == golden, || format!("shapes differ from golden file:\n{shapes}"))?;
    Ok("tables 4, 9, 12, 13 match the golden row/column structure".into())
}

// ----------------------------------------------------------------

fn run(n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let elapsed = t.elapsed();
    let outcome = outcome.and_then(|msg| {
        if elapsed <= budget {
            Ok(msg)
        } else {
            Err(format!("{msg}; over the {budget:?} budget"))
        }
    });
    let (tag, msg) = match &outcome {
        Ok(m) => ("PASS", m),
        Err(m) => ("FAIL", m),
    };
    println!("{tag} {n:>2} {name}: {msg} [{:.2}s]", elapsed.as_secs_f64());
    outcome.is_ok()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let secs = Duration::from_secs;
    let mut ok = true;
    ok &= run(1, "tf-idf oracle", secs(1), tfidf_oracle);
    ok &= run(2, "gradient checks", secs(30), gradient_checks);
    ok &= run(3, "CNN shape arithmetic", secs(1), shape_arithmetic);
    ok &= run(4, "weighted F1 consistency", secs(1), weighted_f1_consistency);
    ok &= run(5, "SVM geometry", secs(5), svm_geometry);
    let t6 = Instant::now();
    ok &= run(6, "end-to-end synthetic pipeline", secs(600), end_to_end);
    let c6 = t6.elapsed();
    ok &= run(7, "embedding co-occurrence", secs(120), cooccurrence);
    ok &= run(8, "padding contract", secs(5), padding);

    let tmp = tempfile::tempdir().expect("temp dir");
    let prepared = prepare_experiment(tmp.path());
    let budget9 = (2 * c6).max(secs(60));
    ok &= run(9, "experiment determinism", budget9, || {
        prepared.clone()?;
        determinism(tmp.path())
    });
    ok &= run(10, "table shapes", secs(1), || {
        prepared.clone()?;
        table_shapes(tmp.path())
    });
    if !ok {
        std::process::exit(1);
    }
}
