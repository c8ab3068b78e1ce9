use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use stagegate_core::corpus::{load_corpus, split, stats, CorpusFormat, Dataset, StageLabel};
use stagegate_core::embeddings::{load_embeddings, train_word2vec, training_sentences, VectorFormat, W2vConfig};
use stagegate_core::eval::{run_experiment, ExperimentSpec};
use stagegate_core::features::{write_feature_matrix, SparseFeatureConfig, SparseFeaturizer};
use stagegate_core::pipeline::{ClassifierModel, ClassifierSpec, Pipeline, PipelineSpec};
use stagegate_core::seed;
use stagegate_core::synth::{generate, SynthConfig};
use stagegate_core::textprep::Preprocessor;

use crate::manifest::Recorder;
use crate::output::{write_bytes, write_dir, write_file};
use crate::{Cli, CliError, Command};

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_SEED: u64 = 1;

fn sibling_manifest(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest(_) => "ingest",
        Command::Split(_) => "split",
        Command::Stats(_) => "stats",
        Command::Preprocess(_) => "preprocess",
        Command::TrainEmbeddings(_) => "train-embeddings",
        Command::Neighbors(_) => "neighbors",
        Command::Featurize(_) => "featurize",
        Command::Train(_) => "train",
        Command::Evaluate(_) => "evaluate",
        Command::Predict(_) => "predict",
        Command::Explain(_) => "explain",
        Command::Experiment(_) => "experiment",
        Command::Synth(_) => "synth",
        Command::Replay(_) => "replay",
    }
}

/// Runs one command and writes its manifest, also when it fails or panics.
pub fn dispatch(cli: &Cli, argv: Vec<String>) -> Result<()> {
    let master = cli.seed.unwrap_or(DEFAULT_SEED);
    let mut rec = Recorder::new(command_name(&cli.command), argv, master, cli.jobs.max(1));
    if let Some(p) = &cli.manifest {
        rec.set_path(p.clone());
    }
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run_command(cli, &mut rec)));
    let result = match outcome {
        Ok(r) => r,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(CliError::Internal(msg))
        }
    };
    rec.finish(&result);
    result
}

fn run_command(cli: &Cli, rec: &mut Recorder) -> Result<()> {
    let jobs = cli.jobs.max(1);
    let master = cli.seed.unwrap_or(DEFAULT_SEED);
    match &cli.command {
        Command::Ingest(a) => {
            rec.set_path(sibling_manifest(&a.out));
            let format = match &a.format {
                Some(f) => f.parse::<CorpusFormat>().map_err(CliError::Usage)?,
                None => CorpusFormat::from_path(&a.input),
            };
            rec.input(&a.input);
            let d = load_corpus(&a.input, format).map_err(stagegate_core::Error::from)?;
            write_dataset(&a.out, &d)?;
            rec.output(&a.out);
            let labeled = d.iter().filter(|m| m.label.is_some()).count();
            println!("ingested {} messages ({labeled} labeled) -> {}", d.len(), a.out.display());
        }
        Command::Split(a) => {
            rec.set_path(sibling_manifest(&a.train_out));
            let d = read_dataset(rec, &a.data)?;
            let s = rec.seed("split", seed::derive(master, "split"));
            let (train, test) =
                split(&d, a.train_fraction, s, !a.unstratified).map_err(stagegate_core::Error::from)?;
            write_dataset(&a.train_out, &train)?;
            write_dataset(&a.test_out, &test)?;
            rec.output(&a.train_out);
            rec.output(&a.test_out);
            println!("train {} / test {}", train.len(), test.len());
        }
        Command::Stats(a) => {
            let d = read_dataset(rec, &a.data)?;
            let s = stats(&d).map_err(stagegate_core::Error::from)?;
            let counts = d.class_counts();
            println!("messages: {}", d.len());
            for l in StageLabel::ALL {
                println!("  {:<16}{}", l.as_str(), counts[l.index()]);
            }
            print!("{}", s.render());
        }
        Command::Preprocess(a) => {
            rec.set_path(sibling_manifest(&a.out));
            let d = read_dataset(rec, &a.data)?;
            let pms = Preprocessor::bundled()
                .process_all(d.messages(), jobs)
                .map_err(stagegate_core::Error::from)?;
            write_file(&a.out, |w| {
                for pm in &pms {
                    serde_json::to_writer(&mut *w, pm).map_err(|e| CliError::Internal(e.to_string()))?;
                    w.write_all(b"\n").map_err(|e| CliError::io(&a.out, e))?;
                }
                Ok(())
            })?;
            rec.output(&a.out);
            println!("preprocessed {} messages -> {}", pms.len(), a.out.display());
        }
        Command::TrainEmbeddings(a) => {
            rec.set_path(sibling_manifest(&a.out));
            let mut cfg: W2vConfig = match &a.config {
                Some(p) => read_toml(rec, p)?,
                None => W2vConfig::default(),
            };
            cfg.dim = a.dim.unwrap_or(cfg.dim);
            cfg.window = a.window.unwrap_or(cfg.window);
            cfg.negatives = a.negatives.unwrap_or(cfg.negatives);
            cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
            cfg.min_count = a.min_count.unwrap_or(cfg.min_count);
            cfg.threads = jobs;
            cfg.seed = rec.seed("embeddings", seed::derive(master, "embeddings"));
            cfg.validate().map_err(stagegate_core::Error::from)?;
            rec.config(&cfg);
            let format = match &a.format {
                Some(f) => f.parse::<VectorFormat>().map_err(CliError::Usage)?,
                None => VectorFormat::from_path(&a.out),
            };
            let pre = Preprocessor::bundled();
            let mut sentences = Vec::new();
            for p in &a.data {
                let d = read_dataset(rec, p)?;
                let pms = pre.process_all(d.messages(), jobs).map_err(stagegate_core::Error::from)?;
                sentences.extend(training_sentences(&pms));
            }
            let table = train_word2vec(&sentences, &cfg).map_err(stagegate_core::Error::from)?;
            write_file(&a.out, |w| {
                match format {
                    VectorFormat::Text => table.write_text(&mut &mut *w),
                    VectorFormat::Binary => table.write_binary(&mut &mut *w),
                }
                .map_err(|e| CliError::io(&a.out, e))
            })?;
            rec.output(&a.out);
            println!("{} words x {} dims -> {}", table.len(), table.dim(), a.out.display());
        }
        Command::Neighbors(a) => {
            rec.input(&a.embeddings);
            let table = load_embeddings(&a.embeddings, VectorFormat::from_path(&a.embeddings))
                .map_err(stagegate_core::Error::from)?;
            let near = table.nearest(&a.word, a.top).map_err(stagegate_core::Error::from)?;
            for (w, sim) in near {
                println!("{w}\t{sim:.4}");
            }
        }
        Command::Featurize(a) => {
            rec.set_path(sibling_manifest(&a.out));
            let cfg: SparseFeatureConfig = read_toml(rec, &a.config)?;
            rec.config(&cfg);
            let pre = Preprocessor::bundled();
            let data = read_dataset(rec, &a.data)?;
            let pms = pre.process_all(data.messages(), jobs).map_err(stagegate_core::Error::from)?;
            let fitted = match &a.fit_on {
                Some(p) => {
                    let fit = read_dataset(rec, p)?;
                    let fit_pms = pre.process_all(fit.messages(), jobs).map_err(stagegate_core::Error::from)?;
                    SparseFeaturizer::fit(&cfg, &fit_pms)
                }
                None => SparseFeaturizer::fit(&cfg, &pms),
            }
            .map_err(stagegate_core::Error::from)?;
            let rows = fitted.transform_all(&pms, jobs).map_err(stagegate_core::Error::from)?;
            write_file(&a.out, |w| {
                write_feature_matrix(&mut &mut *w, &rows).map_err(|e| CliError::Core(e.into()))
            })?;
            rec.output(&a.out);
            println!("{} rows x {} features -> {}", rows.len(), fitted.dim(), a.out.display());
        }
        Command::Train(a) => {
            rec.set_path(sibling_manifest(&a.out));
            let text = read_text(rec, &a.config)?;
            let mut spec = PipelineSpec::from_toml(&text)?;
            match &mut spec.classifier {
                ClassifierSpec::Svm { config, .. } => config.seed = rec.seed("train/svm", seed::derive(master, "train/svm")),
                ClassifierSpec::Cnn { train, .. } | ClassifierSpec::Rnn { train, .. } => {
                    train.seed = rec.seed("train/nn", seed::derive(master, "train/nn"))
                }
            }
            rec.config(&spec);
            let d = read_dataset(rec, &a.train)?;
            let labels = d.labels().map_err(stagegate_core::Error::from)?;
            let pms = Preprocessor::bundled()
                .process_all(d.messages(), jobs)
                .map_err(stagegate_core::Error::from)?;
            let table = match &a.embeddings {
                Some(p) => {
                    rec.input(p);
                    Some(load_embeddings(p, VectorFormat::from_path(p)).map_err(stagegate_core::Error::from)?)
                }
                None => None,
            };
            let (pipeline, info) = Pipeline::fit(&spec, &pms, &labels, table, jobs)?;
            write_dir(&a.out, |dir| {
                pipeline.save(dir)?;
                let fit = serde_json::to_string_pretty(&info).map_err(|e| CliError::Internal(e.to_string()))?;
                write_bytes(&dir.join("fit.json"), (fit + "\n").as_bytes())
            })?;
            rec.output(&a.out);
            if let Some(c) = info.c {
                println!("trained {} on {} messages (C = {c})", pipeline.model().kind(), pms.len());
            } else if let Some(h) = &info.history {
                let last = h.loss.last().copied().unwrap_or(f64::NAN);
                println!("trained {} on {} messages (final loss {last:.4})", pipeline.model().kind(), pms.len());
            }
            println!("-> {}", a.out.display());
        }
        Command::Evaluate(a) => {
            if let Some(out) = &a.out {
                rec.set_path(sibling_manifest(out));
            }
            let pipeline = load_pipeline(rec, &a.model)?;
            let d = read_dataset(rec, &a.test)?;
            let labels = d.labels().map_err(stagegate_core::Error::from)?;
            let pms = Preprocessor::bundled()
                .process_all(d.messages(), jobs)
                .map_err(stagegate_core::Error::from)?;
            let report = pipeline.evaluate(&pms, &labels, jobs)?;
            print!("{}", report.render());
            if let Some(out) = &a.out {
                write_bytes(out, report.to_csv().as_bytes())?;
                rec.output(out);
            }
        }
        Command::Predict(a) => {
            if let Some(out) = &a.out {
                rec.set_path(sibling_manifest(out));
            }
            let pipeline = load_pipeline(rec, &a.model)?;
            let d = read_dataset(rec, &a.data)?;
            let outputs = pipeline.predict(d.messages(), jobs)?;
            #[derive(Serialize)]
            struct Line<'a> {
                id: &'a str,
                label: StageLabel,
                scores: [f64; 4],
            }
            let write = |w: &mut dyn Write| -> Result<()> {
                for (m, o) in d.iter().zip(&outputs) {
                    let line = Line {
                        id: &m.id,
                        label: o.label,
                        scores: o.scores,
                    };
                    serde_json::to_writer(&mut *w, &line).map_err(|e| CliError::Internal(e.to_string()))?;
                    w.write_all(b"\n").map_err(|e| CliError::io("<predictions>", e))?;
                }
                Ok(())
            };
            match &a.out {
                Some(out) => {
                    write_file(out, write)?;
                    rec.output(out);
                }
                None => write(&mut std::io::stdout().lock())?,
            }
        }
        Command::Explain(a) => {
            let class: StageLabel = a.class.parse().map_err(CliError::Usage)?;
            let pipeline = load_pipeline(rec, &a.model)?;
            let ClassifierModel::Svm(svm) = pipeline.model() else {
                return Err(CliError::Usage(format!(
                    "explain needs an SVM pipeline; {} holds a {}",
                    a.model.display(),
                    pipeline.model().kind()
                )));
            };
            for (name, w) in svm.top_features(class, a.top) {
                println!("{name}\t{w:.6}");
            }
        }
        Command::Experiment(a) => {
            rec.input(&a.config);
            let mut spec = ExperimentSpec::load(&a.config)?;
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            rec.seed("experiment", spec.seed);
            let out_root = match (&a.out, &spec.out) {
                (Some(o), _) => o.clone(),
                (None, Some(o)) => spec.base_dir.join(o),
                (None, None) => {
                    return Err(CliError::Usage("no output root: pass --out or set `out` in the config".into()))
                }
            };
            let out_dir = out_root.join(&spec.name);
            rec.set_path(sibling_manifest(&out_dir));
            rec.config(&spec);
            for p in spec.inputs() {
                rec.input(&p);
            }
            rec.output(&out_dir);
            let outcome = run_experiment(&spec, &out_root, jobs)?;
            for t in &outcome.tables {
                println!("{}", t.render());
            }
            println!("-> {}", outcome.dir.display());
        }
        Command::Synth(a) => {
            let out = &a.out;
            rec.set_path(sibling_manifest(out));
            let cfg = SynthConfig {
                classes: a.classes,
                train: a.train,
                test: a.test,
                noise: a.noise,
                seed: rec.seed("synth", cli.seed.unwrap_or(SynthConfig::default().seed)),
                ..SynthConfig::default()
            };
            rec.config(&cfg);
            let (train, test) = generate(&cfg)?;
            write_dir(out, |dir| {
                write_dataset(&dir.join("train.jsonl"), &train)?;
                write_dataset(&dir.join("test.jsonl"), &test)
            })?;
            rec.output(out);
            println!("train {} / test {} -> {}", train.len(), test.len(), out.display());
        }
        Command::Replay(_) => unreachable!("handled before dispatch"),
    }
    Ok(())
}

fn read_text(rec: &mut Recorder, path: &Path) -> Result<String> {
    rec.input(path);
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_toml<T: serde::de::DeserializeOwned>(rec: &mut Recorder, path: &Path) -> Result<T> {
    let text = read_text(rec, path)?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_dataset(rec: &mut Recorder, path: &Path) -> Result<Dataset> {
    rec.input(path);
    Ok(load_corpus(path, CorpusFormat::from_path(path)).map_err(stagegate_core::Error::from)?)
}

fn write_dataset(path: &Path, d: &Dataset) -> Result<()> {
    write_file(path, |w| d.write_jsonl(w).map_err(|e| CliError::io(path, e)))
}

fn load_pipeline(rec: &mut Recorder, dir: &Path) -> Result<Pipeline> {
    rec.input(dir);
    Ok(Pipeline::load(dir)?)
}
