use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoding::EncodedExample;
use crate::evaluation::micro_scores;
use crate::head::{cross_entropy_loss, head_backward};
use crate::math::{Mat, Real};
use crate::model::FullModel;
use crate::transformer::{backward_from_hidden, forward, DropoutPlan};

use super::{AdamConfig, OptimizerState, TrainError};

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after this many epochs without dev-F1 improvement; `None`
    /// disables early stopping.
    pub patience: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            epochs: 10,
            batch_size: 16,
            patience: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_precision: f64,
    pub dev_recall: f64,
    pub dev_f1: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct FineTuneResult {
    pub logs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
}

fn dev_scores<T: Real>(
    model: &FullModel<T>,
    dev: &[EncodedExample],
) -> Result<(f64, f64, f64), TrainError> {
    let mut golds = Vec::with_capacity(dev.len());
    let mut preds = Vec::with_capacity(dev.len());
    for ex in dev {
        let (_, pred) = model.predict(ex)?;
        golds.push(ex.label);
        preds.push(pred);
    }
    Ok(micro_scores(&golds, &preds))
}

/// Supervised fine-tuning: shuffled minibatches, per-example dropout,
/// Adam, per-epoch dev evaluation, and best-epoch parameter restore. Logs
/// one line per epoch.
pub fn fine_tune<T: Real>(
    model: &mut FullModel<T>,
    train: &[EncodedExample],
    dev: &[EncodedExample],
    tc: &TrainConfig,
) -> Result<FineTuneResult, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if tc.batch_size == 0 || tc.epochs == 0 {
        return Err(TrainError::BadConfig("epochs and batch_size must be nonzero".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    let mut opt = OptimizerState::new(model);
    let adam = AdamConfig::with_lr(tc.learning_rate);

    let mut logs = Vec::with_capacity(tc.epochs);
    let mut best: Option<FullModel<T>> = None;
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0usize;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..tc.epochs {
        let started = std::time::Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;

        for (bi, batch) in order.chunks(tc.batch_size).enumerate() {
            let mut grads = model.zeros_like();
            let inv = T::from_f64(1.0 / batch.len() as f64);
            for (k, &idx) in batch.iter().enumerate() {
                let ex = &train[idx];
                let plan = DropoutPlan {
                    rate: model.config.dropout_rate,
                    seed: tc
                        .seed
                        .wrapping_mul(0x9e37_79b9)
                        .wrapping_add(((epoch * train.len() + bi * tc.batch_size + k) as u64) + 1),
                };
                let dropout = (model.config.dropout_rate > 0.0).then_some(&plan);
                let trace = forward(&model.params, &model.config, &ex.piece_ids, dropout)?;
                let (probs, _, h_s, strace) = model.classify_hidden(&trace.hidden, ex)?;
                let (loss, mut d_logits) = cross_entropy_loss(&probs, ex.label)
                    .map_err(|e| TrainError::BadConfig(e.to_string()))?;
                loss_sum += loss.to_f64();
                for d in &mut d_logits {
                    *d = *d * inv;
                }
                let mut d_hidden = Mat::zeros(trace.hidden.rows(), trace.hidden.cols());
                head_backward(
                    &model.head,
                    &h_s,
                    &strace,
                    &d_logits,
                    &mut d_hidden,
                    &mut grads.head,
                );
                backward_from_hidden(
                    &model.params,
                    &model.config,
                    &trace,
                    &d_hidden,
                    &mut grads.params,
                );
            }
            opt.step(model, &grads, &adam)?;
        }

        let (p, r, f1) = if dev.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            dev_scores(model, dev)?
        };
        let log = EpochLog {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            dev_precision: p,
            dev_recall: r,
            dev_f1: f1,
            seconds: started.elapsed().as_secs_f64(),
        };
        eprintln!(
            "epoch {} train_loss {:.4} dev_P {:.4} dev_R {:.4} dev_F1 {:.4} ({:.1}s)",
            log.epoch, log.train_loss, log.dev_precision, log.dev_recall, log.dev_f1, log.seconds
        );
        logs.push(log);

        if f1 > best_f1 {
            best_f1 = f1;
            best_epoch = epoch;
            best = Some(model.clone());
            stale = 0;
        } else {
            stale += 1;
            if let Some(patience) = tc.patience {
                if stale >= patience {
                    break;
                }
            }
        }
    }

    if !dev.is_empty() {
        if let Some(b) = best {
            *model = b;
        }
    }
    Ok(FineTuneResult {
        logs,
        best_epoch,
        best_dev_f1: if dev.is_empty() { f64::NAN } else { best_f1 },
    })
}
