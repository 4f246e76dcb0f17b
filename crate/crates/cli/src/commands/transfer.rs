//! `relmark transfer-matrix`: evaluate every per-language checkpoint on
//! every language's test set and report transfer efficiency.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use relmark_core::corpus::load_schema;
use relmark_core::evaluation::{micro_scores, predict_corpus, TransferMatrix};
use relmark_core::tokenizer::Vocabulary;
use relmark_core::FullModel;

use crate::pipeline::{load_instances, write_manifest};

#[derive(Debug, clap::Args, Serialize)]
pub struct TransferMatrixArgs {
    /// Directory of per-language checkpoints named <lang>.ckpt
    #[arg(long)]
    pub ckpts: PathBuf,
    /// Directory of test corpora named <lang>.test.jsonl (or <lang>.jsonl)
    #[arg(long)]
    pub tests: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Encoding window in subword pieces
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

fn find_test_file(dir: &Path, lang: &str) -> Result<PathBuf> {
    for candidate in [format!("{lang}.test.jsonl"), format!("{lang}.jsonl")] {
        let path = dir.join(&candidate);
        if path.is_file() {
            return Ok(path);
        }
    }
    bail!("no test corpus for language {lang:?} in {}", dir.display())
}

pub fn run(args: &TransferMatrixArgs) -> Result<()> {
    let schema = load_schema(&args.schema)
        .with_context(|| format!("loading schema {}", args.schema.display()))?;
    let vocab = Vocabulary::from_file(&args.vocab)
        .with_context(|| format!("loading vocab {}", args.vocab.display()))?;
    let hash = vocab.content_hash();

    let mut languages: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(&args.ckpts)
        .with_context(|| format!("reading {}", args.ckpts.display()))?
    {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "ckpt") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                languages.push(stem.to_string());
            }
        }
    }
    languages.sort();
    ensure!(
        languages.len() >= 2,
        "found {} checkpoints in {}; need at least two languages",
        languages.len(),
        args.ckpts.display()
    );

    let mut test_sets = Vec::with_capacity(languages.len());
    for lang in &languages {
        let path = find_test_file(&args.tests, lang)?;
        let (instances, _) = load_instances(&[path], &schema)?;
        test_sets.push(instances);
    }

    let mut f1 = vec![vec![0.0; languages.len()]; languages.len()];
    for (s, source) in languages.iter().enumerate() {
        let model = FullModel::<f32>::load(&args.ckpts.join(format!("{source}.ckpt")), Some(&hash))
            .with_context(|| format!("loading checkpoint for {source}"))?;
        let max_len = args.max_len.min(model.config.max_positions);
        for (t, instances) in test_sets.iter().enumerate() {
            let records = predict_corpus(&model, instances, &schema, &vocab, max_len)?;
            let golds: Vec<usize> = records.iter().map(|r| r.gold).collect();
            let preds: Vec<usize> = records.iter().map(|r| r.pred).collect();
            f1[s][t] = micro_scores(&golds, &preds).2;
        }
    }

    let matrix = TransferMatrix::new(languages.clone(), f1);
    let csv = matrix.to_csv()?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("transfer_matrix.csv"), &csv)?;
    write_manifest(&args.out, "transfer-matrix", args)?;
    for (lang, rho) in languages.iter().zip(matrix.rho_all()?) {
        println!("rho({lang}) = {rho:.4}");
    }
    Ok(())
}
