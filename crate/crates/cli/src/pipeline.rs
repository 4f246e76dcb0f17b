//! Shared plumbing between subcommands: corpus -> candidates -> encoded
//! examples, config-file merging, and manifest emission.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use relmark_core::corpus::{generate_candidates, load_corpus, RelationInstance};
use relmark_core::encoding::encode_instance;
use relmark_core::tokenizer::Vocabulary;
use relmark_core::{EncodedExample, MarkerScheme, ModelConfig, RelationSchema};

pub const FORMAT_VERSION: u32 = 1;

/// Loads sentences from several JSONL files and expands them into candidate
/// pairs. Returns the instances plus the count of nested/overlapping pairs
/// that candidate generation skipped.
pub fn load_instances(
    paths: &[PathBuf],
    schema: &RelationSchema,
) -> Result<(Vec<RelationInstance>, usize)> {
    let mut instances = Vec::new();
    let mut skipped = 0;
    for path in paths {
        let sentences = load_corpus(path, schema)
            .with_context(|| format!("loading corpus {}", path.display()))?;
        for sentence in sentences {
            let set = generate_candidates(&Arc::new(sentence), schema);
            instances.extend(set.instances);
            skipped += set.skipped_pairs;
        }
    }
    Ok((instances, skipped))
}

/// Encodes candidates for training. Pairs whose marked span cannot fit the
/// window are dropped here (evaluation scores them as null instead).
pub fn encode_for_training(
    instances: &[RelationInstance],
    schema: &RelationSchema,
    vocab: &Vocabulary,
    scheme: MarkerScheme,
    max_len: usize,
) -> Result<(Vec<EncodedExample>, usize)> {
    let mut out = Vec::with_capacity(instances.len());
    let mut too_far = 0;
    for inst in instances {
        match encode_instance(inst, schema, vocab, scheme, max_len) {
            Ok(ex) => out.push(ex),
            Err(relmark_core::encoding::EncodeError::EntitiesTooFar { .. }) => too_far += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok((out, too_far))
}

/// Optional model-config file; omitted fields fall back to the desk-scale
/// defaults. `vocab_size` always comes from the vocabulary, never the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfigFile {
    pub n_layers: Option<usize>,
    pub hidden_size: Option<usize>,
    pub n_heads: Option<usize>,
    pub ffn_size: Option<usize>,
    pub max_positions: Option<usize>,
    pub dropout_rate: Option<f64>,
}

pub fn resolve_model_config(path: Option<&Path>, vocab_size: usize) -> Result<ModelConfig> {
    let file: ModelConfigFile = match path {
        Some(p) => serde_json::from_str(
            &std::fs::read_to_string(p)
                .with_context(|| format!("reading model config {}", p.display()))?,
        )
        .with_context(|| format!("parsing model config {}", p.display()))?,
        None => ModelConfigFile::default(),
    };
    let d = ModelConfig::default();
    let config = ModelConfig {
        n_layers: file.n_layers.unwrap_or(d.n_layers),
        hidden_size: file.hidden_size.unwrap_or(d.hidden_size),
        n_heads: file.n_heads.unwrap_or(d.n_heads),
        ffn_size: file.ffn_size.unwrap_or(d.ffn_size),
        max_positions: file.max_positions.unwrap_or(d.max_positions),
        vocab_size,
        dropout_rate: file.dropout_rate.unwrap_or(d.dropout_rate),
    };
    config.validate()?;
    Ok(config)
}

/// Every command writes one of these beside its outputs so a run can be
/// reproduced from the artifact directory alone.
#[derive(Debug, Serialize)]
pub struct Manifest<A: Serialize> {
    pub command: &'static str,
    pub format_version: u32,
    pub args: A,
}

/// Writes `manifest.json` into `dir` (creating the directory if needed).
pub fn write_manifest<A: Serialize>(dir: &Path, command: &'static str, args: &A) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        command,
        format_version: FORMAT_VERSION,
        args,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Manifest variant for commands whose output is a single file: written as
/// `<file>.manifest.json` next to it.
pub fn write_file_manifest<A: Serialize>(
    out_file: &Path,
    command: &'static str,
    args: &A,
) -> Result<()> {
    let manifest = Manifest {
        command,
        format_version: FORMAT_VERSION,
        args,
    };
    let mut name = out_file.as_os_str().to_owned();
    name.push(".manifest.json");
    std::fs::write(PathBuf::from(name), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}
