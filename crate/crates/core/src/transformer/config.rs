use serde::{Deserialize, Serialize};

use super::ModelError;

/// Encoder hyperparameters. Defaults are desk-scale: the architecture, not
/// the parameter count, is what this crate exercises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub hidden_size: usize,
    pub n_heads: usize,
    pub ffn_size: usize,
    pub max_positions: usize,
    pub vocab_size: usize,
    pub dropout_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_layers: 2,
            hidden_size: 64,
            n_heads: 4,
            ffn_size: 256,
            max_positions: 128,
            vocab_size: 0,
            dropout_rate: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.hidden_size == 0 || self.n_heads == 0 || self.n_layers == 0 {
            return Err(ModelError::BadConfig("zero-sized dimension".into()));
        }
        if self.hidden_size % self.n_heads != 0 {
            return Err(ModelError::BadConfig(format!(
                "hidden_size {} not divisible by n_heads {}",
                self.hidden_size, self.n_heads
            )));
        }
        if self.ffn_size < self.hidden_size {
            return Err(ModelError::BadConfig(format!(
                "ffn_size {} smaller than hidden_size {}",
                self.ffn_size, self.hidden_size
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::BadConfig(format!(
                "dropout_rate {} not in [0,1)",
                self.dropout_rate
            )));
        }
        if self.vocab_size == 0 {
            return Err(ModelError::BadConfig("vocab_size is zero".into()));
        }
        if self.max_positions == 0 {
            return Err(ModelError::BadConfig("max_positions is zero".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_size / self.n_heads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divisibility_enforced() {
        let cfg = ModelConfig {
            hidden_size: 6,
            n_heads: 4,
            ffn_size: 8,
            vocab_size: 10,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(ModelError::BadConfig(_))));
    }

    #[test]
    fn default_desk_scale_is_valid() {
        let cfg = ModelConfig {
            vocab_size: 100,
            ..Default::default()
        };
        cfg.validate().unwrap();
        assert_eq!(cfg.head_dim(), 16);
    }
}
