use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use aspectforge_core::corpus::{
    compute_class_weights, filter_long_reviews, flatten_examples, parse_dataset, split, write_split_manifest,
    LabelDistribution, LabelMap, LengthPolicy, SplitConfig, NUM_CLASSES,
};
use aspectforge_core::eval::{render_report, MetricsReport};
use aspectforge_core::lexicon::{load_lexicon, Lexicon};
use aspectforge_core::model::{
    init_params, load_checkpoint, predict, save_checkpoint, Batch, Checkpoint, ModelConfig, Parameters,
};
use aspectforge_core::pipeline::{encode_examples, prepare_examples, vocab_corpus, Auxiliary, PreparedExample};
use aspectforge_core::tokenizer::{build_vocab, encode_pair_with_headword, load_vocab, tokenize, Vocabulary};
use aspectforge_core::train::{evaluate, train_loop_observed, LabeledPair, TrainConfig, TrainError};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{read, read_text, validation, write, CliError, Result};
use crate::layout::{read_prepared, write_prepared, RunLayout};

pub const META_VOCAB: &str = "vocab-sha256";

#[derive(Serialize)]
struct Stats {
    labels: Vec<i8>,
    counts: Vec<u64>,
    fractions: Vec<f64>,
    total_examples: u64,
    train_examples: usize,
    test_examples: usize,
    reviews_kept: usize,
    removed_reviews: usize,
    length_filter: String,
    enriched: bool,
    vocab_size: usize,
    vocab_sha256: String,
    categories: BTreeMap<String, usize>,
}

fn require_path(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.clone()
        .ok_or_else(|| CliError::Usage(format!("--{flag} is required (flag or config file)")))
}

fn lexicon_for(config: &RunConfig) -> Result<Option<Lexicon>> {
    if !config.enrich {
        return Ok(None);
    }
    let path = require_path(&config.lexicon, "lexicon")?;
    load_lexicon(&read(&path)?)
        .map(Some)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn auxiliary<'a>(lexicon: &'a Option<Lexicon>, config: &RunConfig) -> Auxiliary<'a> {
    match lexicon {
        Some(lexicon) => Auxiliary::Enriched {
            lexicon,
            max_tokens: config.max_aux_tokens,
        },
        None => Auxiliary::Raw,
    }
}

fn write_snapshot(layout: &RunLayout, config: &RunConfig) -> Result<()> {
    write(&layout.snapshot(), config.to_toml())
}

pub fn prepare(layout: &RunLayout, config: &RunConfig) -> Result<()> {
    let dataset = require_path(&config.dataset, "dataset")?;
    let policy: LengthPolicy = config.length_filter.parse().map_err(CliError::Config)?;
    let lexicon = lexicon_for(config)?;
    let reviews =
        parse_dataset(&read(&dataset)?).map_err(|e| CliError::Validation(format!("{}: {e}", dataset.display())))?;
    let categories = aspectforge_core::corpus::category_counts(&reviews)
        .into_iter()
        .collect();
    let (reviews, removed) = filter_long_reviews(reviews, policy);
    let label_map = LabelMap::default();
    let examples = flatten_examples(&reviews, &label_map).map_err(validation)?;
    let parts = split(
        &examples,
        &SplitConfig {
            train_fraction: config.train_fraction,
            seed: config.seed,
            group_by_review: config.group_by_review,
        },
    )
    .map_err(validation)?;
    let aux = auxiliary(&lexicon, config);
    let train = prepare_examples(&parts.train, aux).map_err(validation)?;
    let test = prepare_examples(&parts.test, aux).map_err(validation)?;

    let vocab = match &config.vocab {
        Some(path) => load_vocab(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        None => build_vocab(&vocab_corpus(&train), config.vocab_size).map_err(validation)?,
    };

    let dist = LabelDistribution::from_examples(&examples, &label_map);
    let stats = Stats {
        labels: label_map.order().to_vec(),
        counts: dist.counts.to_vec(),
        fractions: dist.fractions.to_vec(),
        total_examples: dist.total(),
        train_examples: train.len(),
        test_examples: test.len(),
        reviews_kept: reviews.len(),
        removed_reviews: removed,
        length_filter: policy.to_string(),
        enriched: config.enrich,
        vocab_size: vocab.len(),
        vocab_sha256: vocab.fingerprint(),
        categories,
    };
    let mut stats_json = serde_json::to_string_pretty(&stats).expect("stats serialize");
    stats_json.push('\n');

    write(&layout.prepared("train.tsv"), write_prepared(&train))?;
    write(&layout.prepared("test.tsv"), write_prepared(&test))?;
    write(&layout.prepared("split.tsv"), write_split_manifest(&parts))?;
    write(&layout.prepared("vocab.txt"), vocab.to_text())?;
    write(&layout.prepared("stats.json"), stats_json)?;
    write_snapshot(layout, config)?;
    println!(
        "examples={} train={} test={} removed_reviews={removed}",
        stats.total_examples, stats.train_examples, stats.test_examples
    );
    Ok(())
}

fn prepared_vocab(layout: &RunLayout) -> Result<Vocabulary> {
    let path = layout.prepared("vocab.txt");
    load_vocab(&read(&path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn encode(prepared: &[PreparedExample], vocab: &Vocabulary, config: &RunConfig) -> Result<Vec<LabeledPair>> {
    encode_examples(prepared, vocab, config.max_len, &LabelMap::default()).map_err(validation)
}

fn model_config(config: &RunConfig, vocab: &Vocabulary) -> Result<ModelConfig> {
    let model = ModelConfig::preset(&config.preset, vocab.len()).map_err(|e| CliError::Config(e.to_string()))?;
    if config.max_len > model.max_len {
        return Err(CliError::Config(format!(
            "max_len {} exceeds the {} preset's {} positions",
            config.max_len, config.preset, model.max_len
        )));
    }
    Ok(model)
}

fn parse_class_weights(spec: &str, train: &[PreparedExample]) -> Result<[f64; NUM_CLASSES]> {
    if spec == "balanced" {
        let examples: Vec<_> = train.iter().map(|p| p.example.clone()).collect();
        let dist = LabelDistribution::from_examples(&examples, &LabelMap::default());
        return compute_class_weights(&dist).map_err(validation);
    }
    let values: Vec<f64> = spec
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Config(format!("class weights {spec:?} must be `balanced` or 7 numbers")))?;
    let weights: [f64; NUM_CLASSES] = values
        .try_into()
        .map_err(|v: Vec<f64>| CliError::Config(format!("class weights need 7 values, got {}", v.len())))?;
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(CliError::Config(format!("class weights {spec:?} must be positive")));
    }
    Ok(weights)
}

pub fn train_config(config: &RunConfig, train: &[PreparedExample]) -> Result<TrainConfig> {
    let class_weights = match &config.class_weights {
        Some(spec) => Some(parse_class_weights(spec, train)?),
        None => None,
    };
    let tc = TrainConfig {
        learning_rate: config.lr,
        beta1: config.beta1,
        beta2: config.beta2,
        epsilon: config.epsilon,
        weight_decay: config.weight_decay,
        batch_size: config.batch,
        epochs: config.epochs,
        seed: config.seed,
        class_weights,
        eval_every: config.eval_every,
    };
    tc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(tc)
}

fn checkpoint_meta(config: &RunConfig, vocab: &Vocabulary, epoch: Option<usize>) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    meta.insert(META_VOCAB.to_string(), vocab.fingerprint());
    meta.insert("preset".to_string(), config.preset.clone());
    meta.insert("max-len".to_string(), config.max_len.to_string());
    meta.insert("seed".to_string(), config.seed.to_string());
    if let Some(epoch) = epoch {
        meta.insert("epoch".to_string(), epoch.to_string());
    }
    meta
}

fn save(path: &Path, params: &Parameters, meta: &BTreeMap<String, String>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    save_checkpoint(path, params, meta).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn report_for(params: &Parameters, examples: &[LabeledPair], batch: usize) -> Result<MetricsReport> {
    let eval = evaluate(params, examples, batch, None).map_err(validation)?;
    let actual: Vec<usize> = examples.iter().map(|e| e.class).collect();
    MetricsReport::build(&actual, &eval.predictions, &eval.probabilities, &LabelMap::default()).map_err(validation)
}

pub fn train(layout: &RunLayout, config: &RunConfig) -> Result<()> {
    let vocab = prepared_vocab(layout)?;
    let train_set = read_prepared(&layout.prepared("train.tsv"))?;
    let test_set = read_prepared(&layout.prepared("test.tsv"))?;
    let model = model_config(config, &vocab)?;
    let tc = train_config(config, &train_set)?;
    let train_pairs = encode(&train_set, &vocab, config)?;
    let test_pairs = encode(&test_set, &vocab, config)?;
    write_snapshot(layout, config)?;

    let params = init_params(&model, config.seed).map_err(|e| CliError::Config(e.to_string()))?;
    let last_path = layout.checkpoint("last.ckpt");
    let mut save_error = None;
    let result = train_loop_observed(&train_pairs, &test_pairs, params, &tc, &mut |record, params| {
        if save_error.is_none() {
            let meta = checkpoint_meta(config, &vocab, Some(record.epoch));
            save_error = save(&last_path, params, &meta).err();
        }
    });
    if let Some(e) = save_error {
        return Err(e);
    }
    match result {
        Ok(out) => {
            write(&layout.report("history.csv"), out.history.to_csv())?;
            save(
                &layout.checkpoint("best.ckpt"),
                &out.best,
                &checkpoint_meta(config, &vocab, None),
            )?;
            let report = report_for(&out.best, &test_pairs, config.batch)?;
            println!("accuracy={} macro_f1={}", report.accuracy, report.macro_avg.f1);
            Ok(())
        }
        Err(TrainError::Diverged(run)) => {
            write(&layout.report("history.csv"), run.history.to_csv())?;
            save(
                &last_path,
                &run.last_good,
                &checkpoint_meta(config, &vocab, Some(run.epoch)),
            )?;
            if let Some(best) = &run.best {
                save(
                    &layout.checkpoint("best.ckpt"),
                    best,
                    &checkpoint_meta(config, &vocab, None),
                )?;
            }
            Err(CliError::Diverged(format!(
                "non-finite loss at epoch {} step {}; last good parameters kept in {}",
                run.epoch,
                run.step,
                last_path.display()
            )))
        }
        Err(e) => Err(validation(e)),
    }
}

fn load_matching(path: &Path, vocab: &Vocabulary) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let stored = ckpt.meta.get(META_VOCAB).cloned().unwrap_or_else(|| "none".into());
    let prepared = vocab.fingerprint();
    if stored != prepared || ckpt.params.config().vocab_size != vocab.len() {
        return Err(CliError::VocabMismatch {
            checkpoint: stored,
            prepared,
        });
    }
    Ok(ckpt)
}

pub fn eval(layout: &RunLayout, config: &RunConfig, checkpoint: Option<&Path>, set: &str) -> Result<()> {
    let file = match set {
        "train" | "test" => format!("{set}.tsv"),
        other => return Err(CliError::Usage(format!("--set must be train or test, got {other:?}"))),
    };
    let vocab = prepared_vocab(layout)?;
    let path = checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| layout.checkpoint("best.ckpt"));
    let ckpt = load_matching(&path, &vocab)?;
    let examples = read_prepared(&layout.prepared(&file))?;
    let pairs = encode(&examples, &vocab, config)?;
    write_snapshot(layout, config)?;
    let report = report_for(&ckpt.params, &pairs, config.batch)?;
    write(&layout.report("report.json"), render_report(&report))?;
    let cm = report.confusion_matrix().map_err(validation)?;
    write(&layout.report("confusion.csv"), cm.to_csv())?;
    write(&layout.report("pr_curve.csv"), report.pr_curve().to_csv())?;
    println!("accuracy={} macro_f1={}", report.accuracy, report.macro_avg.f1);
    Ok(())
}

pub struct PredictInput<'a> {
    pub checkpoint: Option<&'a Path>,
    pub review: &'a str,
    pub aspect: &'a str,
    pub verbose: bool,
}

pub fn predict_one(layout: &RunLayout, config: &RunConfig, input: &PredictInput<'_>) -> Result<()> {
    if input.review.trim().is_empty() {
        return Err(CliError::Usage("--review must not be empty".into()));
    }
    if input.aspect.trim().is_empty() {
        return Err(CliError::Usage("--aspect must not be empty".into()));
    }
    let vocab = match &config.vocab {
        Some(path) => load_vocab(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        None => prepared_vocab(layout)?,
    };
    let path = input
        .checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| layout.checkpoint("best.ckpt"));
    let ckpt = load_matching(&path, &vocab)?;
    let lexicon = lexicon_for(config)?;
    let aux = auxiliary(&lexicon, config).render(input.aspect).map_err(validation)?;
    let pair = encode_pair_with_headword(input.review, &aux.rendered, &aux.headword, &vocab, config.max_len)
        .map_err(validation)?;
    let batch = Batch::from_pairs([&pair]).map_err(validation)?;
    let out = predict(&ckpt.params, &batch).map_err(validation)?;
    let class = out.predictions()[0];
    let label = LabelMap::default().label_of(class).expect("class in range");
    let probs: Vec<String> = out.probabilities.data().iter().map(|p| p.to_string()).collect();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = (|| {
        if input.verbose {
            writeln!(out, "auxiliary={}", aux.rendered)?;
        }
        writeln!(out, "label={}", label.raw())?;
        writeln!(out, "class={class}")?;
        writeln!(out, "probabilities={}", probs.join(","))
    })();
    result.map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

/// Line-oriented filter from stdin to stdout.
fn filter_lines(mut each: impl FnMut(usize, &str) -> Result<String>) -> Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (i, line) in stdin.lock().lines().enumerate() {
        let line = line.map_err(|e| CliError::io(Path::new("<stdin>"), e))?;
        let rendered = each(i + 1, &line)?;
        writeln!(out, "{rendered}").map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

pub fn enrich(lexicon: Option<&Path>, max_tokens: usize, enabled: bool) -> Result<()> {
    let lexicon = match (enabled, lexicon) {
        (false, _) => None,
        (true, Some(path)) => {
            Some(load_lexicon(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?)
        }
        (true, None) => return Err(CliError::Usage("--lexicon is required unless --no-enrich".into())),
    };
    let aux = match &lexicon {
        Some(lexicon) => Auxiliary::Enriched { lexicon, max_tokens },
        None => Auxiliary::Raw,
    };
    filter_lines(|n, line| {
        aux.render(line)
            .map(|a| a.rendered)
            .map_err(|e| CliError::Validation(format!("<stdin>:{n}: {e}")))
    })
}

pub fn tokenize_lines(vocab: &Path) -> Result<()> {
    let vocab = load_vocab(read_text(vocab)?.as_bytes())
        .map_err(|e| CliError::Validation(format!("{}: {e}", vocab.display())))?;
    filter_lines(|_, line| Ok(tokenize(line, &vocab).join(" ")))
}
