//! `relmark eval`: score one checkpoint against one labeled test set.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

use relmark_core::corpus::load_schema;
use relmark_core::evaluation::{compute_metrics, metrics_csv, predict_corpus};
use relmark_core::tokenizer::Vocabulary;
use relmark_core::FullModel;

use crate::pipeline::{load_instances, write_manifest};

#[derive(Debug, clap::Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Labeled JSONL test corpus
    #[arg(long)]
    pub test: PathBuf,
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

pub fn run(args: &EvalArgs) -> Result<()> {
    let schema = load_schema(&args.schema)
        .with_context(|| format!("loading schema {}", args.schema.display()))?;
    let vocab = Vocabulary::from_file(&args.vocab)
        .with_context(|| format!("loading vocab {}", args.vocab.display()))?;
    let model = FullModel::<f32>::load(&args.ckpt, Some(&vocab.content_hash()))
        .with_context(|| format!("loading checkpoint {}", args.ckpt.display()))?;

    let (instances, _) = load_instances(&[args.test.clone()], &schema)?;
    let max_len = args.max_len.min(model.config.max_positions);
    let records = predict_corpus(&model, &instances, &schema, &vocab, max_len)?;
    let report = compute_metrics(&records, schema.num_classes())?;

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("metrics.csv"), metrics_csv(&report, &schema))?;

    let mut preds = String::from("sentence_id,e1,e2,gold,pred,skipped\n");
    for r in &records {
        preds.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.sentence_id,
            r.e1,
            r.e2,
            schema.class_name(r.gold),
            schema.class_name(r.pred),
            r.skipped
        ));
    }
    std::fs::write(args.out.join("predictions.csv"), preds)?;
    write_manifest(&args.out, "eval", args)?;
    println!(
        "micro P {:.4} / R {:.4} / F1 {:.4} over {} pairs ({} skipped)",
        report.micro_precision,
        report.micro_recall,
        report.micro_f1,
        report.n_instances,
        report.n_skipped
    );
    Ok(())
}
