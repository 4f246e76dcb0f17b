//! `relmark build-vocab`: derive a subword vocabulary from labeled corpora.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

use relmark_core::corpus::{load_corpus, load_schema};
use relmark_core::tokenizer::build_vocabulary;

use crate::pipeline::write_file_manifest;

#[derive(Debug, clap::Args, Serialize)]
pub struct BuildVocabArgs {
    /// Labeled JSONL corpora (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    pub corpus: Vec<PathBuf>,
    /// Target vocabulary size
    #[arg(long)]
    pub size: usize,
    /// Relation schema JSON (entity types become marker tokens)
    #[arg(long)]
    pub schema: PathBuf,
    /// Output vocabulary file, one piece per line
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &BuildVocabArgs) -> Result<()> {
    let schema = load_schema(&args.schema)
        .with_context(|| format!("loading schema {}", args.schema.display()))?;
    let mut texts: Vec<Vec<String>> = Vec::new();
    for path in &args.corpus {
        let sentences =
            load_corpus(path, &schema).with_context(|| format!("loading {}", path.display()))?;
        texts.extend(sentences.into_iter().map(|s| s.words));
    }
    let vocab = build_vocabulary(texts.iter().map(|w| w.as_slice()), args.size, &schema)?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    vocab.to_file(&args.out)?;
    write_file_manifest(&args.out, "build-vocab", args)?;
    println!(
        "wrote {} pieces ({} special) to {}",
        vocab.len(),
        vocab.num_special(),
        args.out.display()
    );
    Ok(())
}
