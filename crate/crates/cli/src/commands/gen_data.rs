//! `relmark gen-data`: synthesize a multilingual labeled corpus and split it.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use serde::Serialize;

use relmark_core::corpus::{generate_synthetic, load_language_specs, save_corpus, load_schema};

use crate::pipeline::write_manifest;

#[derive(Debug, clap::Args, Serialize)]
pub struct GenDataArgs {
    /// JSON array of synthetic language specs
    #[arg(long)]
    pub specs: PathBuf,
    /// Relation schema JSON
    #[arg(long)]
    pub schema: PathBuf,
    /// Sentences per language
    #[arg(long)]
    pub n: usize,
    /// Make relation labels predictable from entity-type pairs
    #[arg(long, action = clap::ArgAction::Set)]
    pub type_informative: bool,
    #[arg(long)]
    pub seed: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// train,dev,test fractions
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.1,0.1")]
    pub split: Vec<f64>,
}

pub fn run(args: &GenDataArgs) -> Result<()> {
    ensure!(args.split.len() == 3, "--split needs exactly three fractions");
    let specs = load_language_specs(&args.specs)
        .with_context(|| format!("loading specs {}", args.specs.display()))?;
    let schema = load_schema(&args.schema)
        .with_context(|| format!("loading schema {}", args.schema.display()))?;
    let corpus = generate_synthetic(&specs, &schema, args.n, args.type_informative, args.seed)?;

    std::fs::create_dir_all(&args.out)?;
    let ratios = (args.split[0], args.split[1], args.split[2]);
    for (li, lang) in corpus.per_language.iter().enumerate() {
        let name = &lang.spec.name;
        let sentences: Vec<_> = lang.sentences.iter().map(|s| (**s).clone()).collect();
        let (train, dev, test) =
            relmark_core::corpus::split_corpus(&sentences, ratios, args.seed ^ (li as u64))?;
        save_corpus(&args.out.join(format!("{name}.train.jsonl")), &train)?;
        save_corpus(&args.out.join(format!("{name}.dev.jsonl")), &dev)?;
        save_corpus(&args.out.join(format!("{name}.test.jsonl")), &test)?;

        let mut text =
            std::io::BufWriter::new(std::fs::File::create(args.out.join(format!("{name}.txt")))?);
        for line in &lang.raw_text {
            writeln!(text, "{line}")?;
        }
        println!(
            "{name}: {} train / {} dev / {} test sentences",
            train.len(),
            dev.len(),
            test.len()
        );
    }
    // copy of the resolved schema, so downstream steps can run off this dir
    std::fs::write(
        args.out.join("schema.json"),
        serde_json::to_string_pretty(&schema)?,
    )?;
    write_manifest(&args.out, "gen-data", args)
}
