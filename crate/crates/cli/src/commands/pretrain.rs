//! `relmark pretrain`: masked-language-model pretraining on raw text lines.

use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use serde::Serialize;

use relmark_core::model::save_encoder;
use relmark_core::tokenizer::{tokenize, Vocabulary};
use relmark_core::training::{pretrain_mlm, MaskingVocab, PretrainConfig};
use relmark_core::transformer::init_parameters;

use crate::pipeline::{resolve_model_config, write_file_manifest};

#[derive(Debug, clap::Args, Serialize)]
pub struct PretrainArgs {
    /// Raw text files, one sentence per line (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    pub text: Vec<PathBuf>,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Optional JSON overriding encoder dimensions
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output encoder checkpoint
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.15)]
    pub mask_fraction: f64,
}

pub fn run(args: &PretrainArgs) -> Result<()> {
    let vocab = Vocabulary::from_file(&args.vocab)
        .with_context(|| format!("loading vocab {}", args.vocab.display()))?;
    let config = resolve_model_config(args.model_config.as_deref(), vocab.len())?;

    let mut sequences: Vec<Vec<u32>> = Vec::new();
    for path in &args.text {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for line in text.lines() {
            let words: Vec<String> = line.split_whitespace().map(String::from).collect();
            if words.is_empty() {
                continue;
            }
            let tok = tokenize(&words, &vocab);
            let body = tok
                .piece_ids
                .iter()
                .take(config.max_positions - 2)
                .copied();
            let mut seq = Vec::with_capacity(config.max_positions);
            seq.push(vocab.cls_id());
            seq.extend(body);
            seq.push(vocab.sep_id());
            sequences.push(seq);
        }
    }
    ensure!(!sequences.is_empty(), "no non-empty lines in --text inputs");

    let mut params = init_parameters::<f32>(&config, args.seed)?;
    let mv = MaskingVocab {
        mask_id: vocab.mask_id(),
        n_special: vocab.num_special(),
        vocab_size: vocab.len(),
    };
    let pc = PretrainConfig {
        steps: args.steps,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        mask_fraction: args.mask_fraction,
        seed: args.seed,
    };
    let losses = pretrain_mlm(&mut params, &config, &sequences, &mv, &pc)?;

    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    save_encoder(&args.out, &config, &params, &vocab.content_hash())?;
    write_file_manifest(&args.out, "pretrain", args)?;
    let first = losses.first().copied().unwrap_or(f64::NAN);
    let last = losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "pretrained {} steps on {} sequences: loss {first:.4} -> {last:.4}",
        losses.len(),
        sequences.len()
    );
    Ok(())
}
