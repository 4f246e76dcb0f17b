use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math::{softmax_vec, Mat, Real};
use crate::transformer::{
    backward_from_hidden, forward, DropoutPlan, ModelConfig, ModelParameters,
};

use super::{AdamConfig, OptimizerState, TrainError};

/// The vocabulary facts masking needs: which ids are special (never masked,
/// never drawn as random replacements) and which id is [MASK].
#[derive(Debug, Clone, Copy)]
pub struct MaskingVocab {
    pub mask_id: u32,
    pub n_special: usize,
    pub vocab_size: usize,
}

#[derive(Debug, Clone)]
pub struct PretrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fraction of non-special positions selected for prediction.
    pub mask_fraction: f64,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            steps: 0,
            batch_size: 16,
            learning_rate: 1e-4,
            mask_fraction: 0.15,
            seed: 0,
        }
    }
}

/// One corrupted sequence: input ids plus (position, original id) targets.
fn corrupt(
    ids: &[u32],
    mv: &MaskingVocab,
    mask_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Option<(Vec<u32>, Vec<(usize, u32)>)> {
    let maskable: Vec<usize> = ids
        .iter()
        .enumerate()
        .filter(|(_, &id)| id as usize >= mv.n_special)
        .map(|(i, _)| i)
        .collect();
    if maskable.is_empty() {
        return None;
    }
    let mut selected: Vec<usize> = maskable
        .iter()
        .copied()
        .filter(|_| rng.gen_bool(mask_fraction))
        .collect();
    if selected.is_empty() {
        // always predict at least one position
        selected.push(*maskable.choose(rng).unwrap());
    }
    let mut input = ids.to_vec();
    let mut targets = Vec::with_capacity(selected.len());
    for pos in selected {
        targets.push((pos, ids[pos]));
        let r: f64 = rng.gen();
        input[pos] = if r < 0.8 {
            mv.mask_id
        } else if r < 0.9 {
            rng.gen_range(mv.n_special as u32..mv.vocab_size as u32)
        } else {
            ids[pos]
        };
    }
    Some((input, targets))
}

/// Masked-language-model pretraining over tokenized sequences (each already
/// framed with [CLS]/[SEP]). 80/10/10 corruption, cross-entropy at the
/// selected positions, Adam updates; returns the per-step mean loss.
pub fn pretrain_mlm<T: Real>(
    params: &mut ModelParameters<T>,
    cfg: &ModelConfig,
    sequences: &[Vec<u32>],
    mv: &MaskingVocab,
    pc: &PretrainConfig,
) -> Result<Vec<f64>, TrainError> {
    if pc.steps == 0 {
        return Ok(Vec::new());
    }
    if !(0.0..=1.0).contains(&pc.mask_fraction) || pc.batch_size == 0 {
        return Err(TrainError::BadConfig(
            "mask_fraction must be in [0,1] and batch_size nonzero".into(),
        ));
    }
    let usable: Vec<&Vec<u32>> = sequences
        .iter()
        .filter(|s| {
            !s.is_empty()
                && s.len() <= cfg.max_positions
                && s.iter().any(|&id| id as usize >= mv.n_special)
        })
        .collect();
    if usable.is_empty() {
        return Err(TrainError::EmptyText);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(pc.seed);
    let mut opt = OptimizerState::new(params);
    let adam = AdamConfig::with_lr(pc.learning_rate);
    let mut losses = Vec::with_capacity(pc.steps);

    for step in 0..pc.steps {
        let mut grads = ModelParameters::zeros(cfg);
        let mut loss_sum = 0.0;
        let mut n_targets = 0usize;

        let mut batch = Vec::with_capacity(pc.batch_size);
        while batch.len() < pc.batch_size {
            let seq = usable[rng.gen_range(0..usable.len())];
            if let Some(c) = corrupt(seq, mv, pc.mask_fraction, &mut rng) {
                batch.push(c);
            }
        }
        for (_, targets) in &batch {
            n_targets += targets.len();
        }
        let inv = T::from_f64(1.0 / n_targets as f64);

        for (b, (ids, targets)) in batch.iter().enumerate() {
            let plan = DropoutPlan {
                rate: cfg.dropout_rate,
                seed: pc
                    .seed
                    .wrapping_mul(0x100_0003)
                    .wrapping_add((step * pc.batch_size + b) as u64),
            };
            let dropout = (cfg.dropout_rate > 0.0).then_some(&plan);
            let trace = forward(params, cfg, ids, dropout)?;

            let mut d_hidden = Mat::zeros(ids.len(), cfg.hidden_size);
            for &(pos, gold) in targets {
                let hrow = trace.hidden.row(pos);
                // tied output head: logits = h . tok_emb^T + bias
                let mut logits = Vec::with_capacity(cfg.vocab_size);
                for v in 0..cfg.vocab_size {
                    let erow = params.tok_emb.row(v);
                    let mut acc = T::zero();
                    for (a, b) in hrow.iter().zip(erow) {
                        acc = acc + *a * *b;
                    }
                    logits.push(acc + params.mlm_bias[v]);
                }
                let probs = softmax_vec(&logits);
                loss_sum -= probs[gold as usize].to_f64().max(f64::MIN_POSITIVE).ln();

                let drow = d_hidden.row_mut(pos);
                for v in 0..cfg.vocab_size {
                    let mut dl = probs[v];
                    if v == gold as usize {
                        dl = dl - T::one();
                    }
                    dl = dl * inv;
                    if dl == T::zero() {
                        continue;
                    }
                    grads.mlm_bias[v] = grads.mlm_bias[v] + dl;
                    let erow = params.tok_emb.row(v);
                    for (d, &e) in drow.iter_mut().zip(erow) {
                        *d = *d + dl * e;
                    }
                    let gv = grads.tok_emb.row_mut(v);
                    for (g, &h) in gv.iter_mut().zip(hrow) {
                        *g = *g + dl * h;
                    }
                }
            }
            backward_from_hidden(params, cfg, &trace, &d_hidden, &mut grads);
        }

        opt.step(params, &grads, &adam)?;
        losses.push(loss_sum / n_targets as f64);
    }
    Ok(losses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transformer::init_parameters;

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_layers: 1,
            hidden_size: 8,
            n_heads: 2,
            ffn_size: 16,
            max_positions: 16,
            vocab_size: 14,
            dropout_rate: 0.0,
        }
    }

    fn mv() -> MaskingVocab {
        MaskingVocab {
            mask_id: 4,
            n_special: 9,
            vocab_size: 14,
        }
    }

    #[test]
    fn corrupt_always_selects_and_only_nonspecial() {
        let ids = vec![2u32, 9, 10, 11, 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let (input, targets) = corrupt(&ids, &mv(), 0.15, &mut rng).unwrap();
            assert!(!targets.is_empty());
            for &(pos, orig) in &targets {
                assert!(ids[pos] as usize >= 9);
                assert_eq!(orig, ids[pos]);
            }
            // special positions untouched
            assert_eq!(input[0], 2);
            assert_eq!(input[4], 3);
        }
    }

    #[test]
    fn all_special_sequence_unusable() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(corrupt(&[2, 3], &mv(), 0.5, &mut rng).is_none());
        let mut p = init_parameters::<f32>(&cfg(), 0).unwrap();
        let err = pretrain_mlm(
            &mut p,
            &cfg(),
            &[vec![2, 3]],
            &mv(),
            &PretrainConfig {
                steps: 1,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, TrainError::EmptyText));
    }

    #[test]
    fn zero_steps_is_a_noop() {
        let c = cfg();
        let mut p = init_parameters::<f32>(&c, 0).unwrap();
        let before = p.clone();
        let losses = pretrain_mlm(&mut p, &c, &[vec![2, 9, 3]], &mv(), &PretrainConfig::default())
            .unwrap();
        assert!(losses.is_empty());
        assert_eq!(p, before);
    }

    #[test]
    fn loss_decreases_on_tiny_corpus() {
        let c = cfg();
        let mut p = init_parameters::<f32>(&c, 7).unwrap();
        let seqs = vec![
            vec![2, 9, 10, 11, 3],
            vec![2, 11, 10, 9, 3],
            vec![2, 12, 13, 12, 3],
        ];
        let losses = pretrain_mlm(
            &mut p,
            &c,
            &seqs,
            &mv(),
            &PretrainConfig {
                steps: 60,
                batch_size: 4,
                learning_rate: 1e-3,
                mask_fraction: 0.3,
                seed: 1,
            },
        )
        .unwrap();
        let head: f64 = losses[..10].iter().sum::<f64>() / 10.0;
        let tail: f64 = losses[50..].iter().sum::<f64>() / 10.0;
        assert!(tail < head, "mlm loss should fall: {head} -> {tail}");
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg();
        let seqs = vec![vec![2, 9, 10, 11, 3], vec![2, 12, 13, 3]];
        let pc = PretrainConfig {
            steps: 5,
            batch_size: 2,
            learning_rate: 1e-3,
            mask_fraction: 0.3,
            seed: 42,
        };
        let mut a = init_parameters::<f32>(&c, 3).unwrap();
        let la = pretrain_mlm(&mut a, &c, &seqs, &mv(), &pc).unwrap();
        let mut b = init_parameters::<f32>(&c, 3).unwrap();
        let lb = pretrain_mlm(&mut b, &c, &seqs, &mv(), &pc).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }
}
