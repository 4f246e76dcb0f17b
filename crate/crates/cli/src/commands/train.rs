//! `relmark train`: fine-tune the relation classifier, one run per seed.

use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use serde::Serialize;
use serde_json::json;

use relmark_core::corpus::load_schema;
use relmark_core::evaluation::aggregate_seeds;
use relmark_core::head::{SummaryKind, SummaryScheme};
use relmark_core::model::load_encoder;
use relmark_core::tokenizer::Vocabulary;
use relmark_core::training::{fine_tune, TrainConfig};
use relmark_core::{FullModel, HeadConfig, MarkerScheme};

use crate::pipeline::{
    encode_for_training, load_instances, resolve_model_config, write_manifest,
};

use super::{parse_marker_scheme, parse_summary_kind};

#[derive(Debug, clap::Args, Serialize)]
pub struct TrainArgs {
    /// Labeled training JSONL corpora (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    pub corpus: Vec<PathBuf>,
    /// Labeled dev corpora for model selection (optional)
    #[arg(long, value_delimiter = ',')]
    pub dev: Vec<PathBuf>,
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Marker scheme: um or etm
    #[arg(long, value_parser = parse_marker_scheme)]
    pub scheme: MarkerScheme,
    /// Summary: ss, es, or emp
    #[arg(long, value_parser = parse_summary_kind)]
    pub summary: SummaryKind,
    /// Append entity-type embeddings at the classifier
    #[arg(long)]
    pub append_type_emb: bool,
    /// Ablation: pool entity tokens only, excluding the markers
    #[arg(long)]
    pub mention_pool: bool,
    /// Ablation: prepend the sentence-start state to ES/EMP summaries
    #[arg(long)]
    pub concat_sentence: bool,
    /// Pretrained encoder checkpoint to start from
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Comma-separated training seeds; one model is saved per seed
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Optional JSON overriding encoder dimensions (ignored with --init)
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub learning_rate: f64,
    /// Early-stopping patience in epochs (off when absent)
    #[arg(long)]
    pub patience: Option<usize>,
    /// Encoding window in subword pieces (default: encoder positions, max 128)
    #[arg(long)]
    pub max_len: Option<usize>,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let schema = load_schema(&args.schema)
        .with_context(|| format!("loading schema {}", args.schema.display()))?;
    let vocab = Vocabulary::from_file(&args.vocab)
        .with_context(|| format!("loading vocab {}", args.vocab.display()))?;
    ensure!(
        vocab.num_markers() == schema.entity_types.len(),
        "vocabulary has {} marker tokens but the schema lists {} entity types",
        vocab.num_markers(),
        schema.entity_types.len()
    );
    let hash = vocab.content_hash();

    // the encoder shape (from --init or --model-config) bounds the window
    let init_encoder = match &args.init {
        Some(ckpt) => Some(
            load_encoder::<f32>(ckpt, Some(&hash))
                .with_context(|| format!("loading {}", ckpt.display()))?,
        ),
        None => None,
    };
    let config = match &init_encoder {
        Some((config, _)) => config.clone(),
        None => resolve_model_config(args.model_config.as_deref(), vocab.len())?,
    };
    let max_len = args.max_len.unwrap_or(config.max_positions.min(128));
    ensure!(
        max_len <= config.max_positions,
        "--max-len {max_len} exceeds the encoder's {} positions",
        config.max_positions
    );

    let (train_insts, _) = load_instances(&args.corpus, &schema)?;
    let (train_ex, train_dropped) =
        encode_for_training(&train_insts, &schema, &vocab, args.scheme, max_len)?;
    ensure!(!train_ex.is_empty(), "no encodable training instances");
    let (dev_insts, _) = load_instances(&args.dev, &schema)?;
    let (dev_ex, _) = encode_for_training(&dev_insts, &schema, &vocab, args.scheme, max_len)?;
    if train_dropped > 0 {
        eprintln!("dropped {train_dropped} training pairs that exceed the window");
    }

    let mut summary = SummaryScheme::new(args.summary);
    summary.pool_markers = !args.mention_pool;
    summary.concat_sentence = args.concat_sentence;
    summary.append_type_embedding = args.append_type_emb;
    let head_config = HeadConfig::new(
        args.scheme,
        summary,
        schema.num_classes(),
        schema.entity_types.len(),
    );

    std::fs::create_dir_all(&args.out)?;
    let mut best_f1s = Vec::new();
    for &seed in &args.seeds {
        let mut model = match &init_encoder {
            Some((_, params)) => FullModel::from_pretrained(
                config.clone(),
                head_config.clone(),
                params.clone(),
                seed,
            ),
            None => FullModel::init(config.clone(), head_config.clone(), seed)?,
        };
        let tc = TrainConfig {
            learning_rate: args.learning_rate,
            epochs: args.epochs,
            batch_size: args.batch_size,
            patience: args.patience,
            seed,
        };
        let result = fine_tune(&mut model, &train_ex, &dev_ex, &tc)?;
        model.save(&args.out.join(format!("seed{seed}.ckpt")), &hash)?;

        let history = json!({
            "seed": seed,
            "best_epoch": result.best_epoch,
            "best_dev_f1": result.best_dev_f1,
            "epochs": result.logs.iter().map(|l| json!({
                "epoch": l.epoch,
                "train_loss": l.train_loss,
                "dev_precision": l.dev_precision,
                "dev_recall": l.dev_recall,
                "dev_f1": l.dev_f1,
                "seconds": l.seconds,
            })).collect::<Vec<_>>(),
        });
        std::fs::write(
            args.out.join(format!("seed{seed}.history.json")),
            serde_json::to_string_pretty(&history)?,
        )?;
        println!(
            "seed {seed}: best dev F1 {:.4} at epoch {}",
            result.best_dev_f1, result.best_epoch
        );
        if result.best_dev_f1.is_finite() {
            best_f1s.push(result.best_dev_f1);
        }
    }

    if !best_f1s.is_empty() {
        let summary = aggregate_seeds(&best_f1s);
        std::fs::write(
            args.out.join("summary.json"),
            serde_json::to_string_pretty(&json!({
                "mean_dev_f1": summary.mean_f1,
                "std_dev_f1": summary.std_f1,
                "per_seed": summary.per_seed,
            }))?,
        )?;
        println!(
            "dev F1 over {} seeds: {:.4} ± {:.4}",
            best_f1s.len(),
            summary.mean_f1,
            summary.std_f1
        );
    }
    write_manifest(&args.out, "train", args)
}
