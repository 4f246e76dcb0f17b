//! The complete relation classifier: encoder + summary scheme + softmax
//! head, with checkpoint persistence that records the head configuration and
//! the vocabulary hash.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedExample, MarkerScheme};
use crate::head::{classify, summarize, HeadParams, SummaryScheme, SummaryTrace};
use crate::math::{Mat, Real};
use crate::transformer::{
    encode, read_checkpoint, write_checkpoint, ModelConfig, ModelError, ModelParameters,
    TensorCollection, TensorMut, TensorRef,
};

/// Default width of the optional entity-type embeddings.
pub const DEFAULT_TYPE_EMB_DIM: usize = 32;

/// Everything beyond the encoder shape that a checkpoint must reproduce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub marker_scheme: MarkerScheme,
    pub summary: SummaryScheme,
    pub n_classes: usize,
    pub n_entity_types: usize,
    pub type_emb_dim: usize,
}

impl HeadConfig {
    pub fn new(
        marker_scheme: MarkerScheme,
        summary: SummaryScheme,
        n_classes: usize,
        n_entity_types: usize,
    ) -> Self {
        Self {
            marker_scheme,
            summary,
            n_classes,
            n_entity_types,
            type_emb_dim: DEFAULT_TYPE_EMB_DIM,
        }
    }

    pub fn summary_dim(&self, hidden_size: usize) -> usize {
        self.summary.dim(hidden_size, self.type_emb_dim)
    }

    fn type_table(&self) -> Option<(usize, usize)> {
        self.summary
            .append_type_embedding
            .then_some((self.n_entity_types, self.type_emb_dim))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullModel<T> {
    pub config: ModelConfig,
    pub head_config: HeadConfig,
    pub params: ModelParameters<T>,
    pub head: HeadParams<T>,
}

impl<T: Real> FullModel<T> {
    /// Fresh model with truncated-normal weights, deterministic per seed.
    pub fn init(
        config: ModelConfig,
        head_config: HeadConfig,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let params = crate::transformer::init_parameters(&config, seed)?;
        let head = HeadParams::init(
            head_config.summary_dim(config.hidden_size),
            head_config.n_classes,
            head_config.type_table(),
            seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        );
        Ok(Self {
            config,
            head_config,
            params,
            head,
        })
    }

    /// Same shape, pretrained encoder weights, freshly initialized head.
    pub fn from_pretrained(
        config: ModelConfig,
        head_config: HeadConfig,
        params: ModelParameters<T>,
        seed: u64,
    ) -> Self {
        let head = HeadParams::init(
            head_config.summary_dim(config.hidden_size),
            head_config.n_classes,
            head_config.type_table(),
            seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        );
        Self {
            config,
            head_config,
            params,
            head,
        }
    }

    /// All-zero tensors with this model's shapes (a gradient accumulator).
    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            head_config: self.head_config.clone(),
            params: ModelParameters::zeros(&self.config),
            head: HeadParams::zeros(
                self.head_config.summary_dim(self.config.hidden_size),
                self.head_config.n_classes,
                self.head_config.type_table(),
            ),
        }
    }

    pub fn map_precision<U: Real>(&self) -> FullModel<U> {
        FullModel {
            config: self.config.clone(),
            head_config: self.head_config.clone(),
            params: self.params.map_precision(),
            head: self.head.map_precision(),
        }
    }

    /// Class probabilities and the summary trace for one encoded example,
    /// from already computed hidden states.
    pub fn classify_hidden(
        &self,
        hidden: &Mat<T>,
        example: &EncodedExample,
    ) -> Result<(Vec<T>, usize, Vec<T>, SummaryTrace), ModelError> {
        let (h_s, trace) = summarize(
            hidden,
            example,
            &self.head_config.summary,
            self.head.type_emb.as_ref(),
        );
        let (probs, pred) = classify(&self.head, &h_s)
            .map_err(|e| ModelError::ShapeMismatch(e.to_string()))?;
        Ok((probs, pred, h_s, trace))
    }

    /// Deterministic evaluation-mode prediction.
    pub fn predict(&self, example: &EncodedExample) -> Result<(Vec<T>, usize), ModelError> {
        let hidden = encode(&self.params, &self.config, &example.piece_ids, false, 0)?;
        let (probs, pred, _, _) = self.classify_hidden(&hidden, example)?;
        Ok((probs, pred))
    }

    pub fn save(&self, path: &Path, vocab_hash: &[u8; 32]) -> Result<(), ModelError> {
        let extra = serde_json::to_string(&self.head_config)
            .map_err(|e| ModelError::BadCheckpoint(e.to_string()))?;
        write_checkpoint(path, &self.config, vocab_hash, &extra, &self.tensors())
    }

    /// Loads a checkpoint, verifying the stored vocabulary hash when one is
    /// supplied.
    pub fn load(path: &Path, vocab_hash: Option<&[u8; 32]>) -> Result<Self, ModelError> {
        let (header, tensors) = read_checkpoint(path)?;
        if let Some(expected) = vocab_hash {
            if &header.vocab_hash != expected {
                return Err(ModelError::VocabHashMismatch);
            }
        }
        let head_config: HeadConfig = serde_json::from_str(&header.extra)
            .map_err(|e| ModelError::BadCheckpoint(format!("bad head config: {e}")))?;
        let config = header.config;
        config.validate()?;
        let mut model = Self {
            params: ModelParameters::zeros(&config),
            head: HeadParams::zeros(
                head_config.summary_dim(config.hidden_size),
                head_config.n_classes,
                head_config.type_table(),
            ),
            config,
            head_config,
        };
        let mut slots = model.tensors_mut();
        if slots.len() != tensors.len() {
            return Err(ModelError::BadCheckpoint(format!(
                "expected {} tensors, found {}",
                slots.len(),
                tensors.len()
            )));
        }
        for (slot, stored) in slots.iter_mut().zip(&tensors) {
            if slot.name != stored.name || slot.dims != stored.dims {
                return Err(ModelError::BadCheckpoint(format!(
                    "tensor mismatch: expected {} {:?}, found {} {:?}",
                    slot.name, slot.dims, stored.name, stored.dims
                )));
            }
            for (dst, &src) in slot.data.iter_mut().zip(&stored.data) {
                *dst = T::from_f32(src);
            }
        }
        Ok(model)
    }
}

/// Writes an encoder-only checkpoint (pretraining output; no head yet).
pub fn save_encoder<T: Real>(
    path: &Path,
    config: &ModelConfig,
    params: &ModelParameters<T>,
    vocab_hash: &[u8; 32],
) -> Result<(), ModelError> {
    write_checkpoint(path, config, vocab_hash, "{}", &params.tensors())
}

/// Loads an encoder-only checkpoint written by [`save_encoder`].
pub fn load_encoder<T: Real>(
    path: &Path,
    vocab_hash: Option<&[u8; 32]>,
) -> Result<(ModelConfig, ModelParameters<T>), ModelError> {
    let (header, tensors) = read_checkpoint(path)?;
    if let Some(expected) = vocab_hash {
        if &header.vocab_hash != expected {
            return Err(ModelError::VocabHashMismatch);
        }
    }
    let config = header.config;
    config.validate()?;
    let mut params = ModelParameters::zeros(&config);
    let mut slots = params.tensors_mut();
    if slots.len() != tensors.len() {
        return Err(ModelError::BadCheckpoint(format!(
            "expected {} encoder tensors, found {}",
            slots.len(),
            tensors.len()
        )));
    }
    for (slot, stored) in slots.iter_mut().zip(&tensors) {
        if slot.name != stored.name || slot.dims != stored.dims {
            return Err(ModelError::BadCheckpoint(format!(
                "tensor mismatch: expected {} {:?}, found {} {:?}",
                slot.name, slot.dims, stored.name, stored.dims
            )));
        }
        for (dst, &src) in slot.data.iter_mut().zip(&stored.data) {
            *dst = T::from_f32(src);
        }
    }
    drop(slots);
    Ok((config, params))
}

impl<T: Real> TensorCollection<T> for FullModel<T> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>> {
        let mut out = self.params.tensors();
        out.extend(self.head.tensors());
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>> {
        let mut out = self.params.tensors_mut();
        out.extend(self.head.tensors_mut());
        out
    }
}
