use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelError, ModelParameters};
use crate::math::{Mat, Real};

pub(crate) const LN_EPS: f64 = 1e-12;

/// Dropout configuration for a training-mode forward pass. Masks are drawn
/// from a ChaCha stream seeded here, so a recorded forward is exactly
/// reproducible by its backward.
#[derive(Debug, Clone, Copy)]
pub struct DropoutPlan {
    pub rate: f64,
    pub seed: u64,
}

/// Cached activations of one layer, everything backward needs.
#[derive(Debug, Clone)]
pub struct LayerTrace<T> {
    pub x: Mat<T>,
    pub q: Mat<T>,
    pub k: Mat<T>,
    pub v: Mat<T>,
    /// Per-head attention weights, pre-dropout. Rows are stochastic.
    pub attn_probs: Vec<Mat<T>>,
    pub attn_prob_masks: Option<Vec<Mat<T>>>,
    /// Concatenated per-head context, before the output projection.
    pub ctx: Mat<T>,
    pub attn_out_mask: Option<Mat<T>>,
    pub r1: Mat<T>,
    pub ln1_mean: Vec<T>,
    pub ln1_rstd: Vec<T>,
    pub n1: Mat<T>,
    pub ff_pre: Mat<T>,
    pub ff_act: Mat<T>,
    pub ff_out_mask: Option<Mat<T>>,
    pub r2: Mat<T>,
    pub ln2_mean: Vec<T>,
    pub ln2_rstd: Vec<T>,
}

/// A full recorded forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    pub ids: Vec<u32>,
    pub layers: Vec<LayerTrace<T>>,
    /// Final-layer hidden states, one row per input position.
    pub hidden: Mat<T>,
}

/// GELU, tanh approximation. Smooth, with an exact analytic derivative.
pub(crate) fn gelu<T: Real>(x: T) -> T {
    let c = T::from_f64(0.797_884_560_802_865_4); // sqrt(2/pi)
    let a = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    let inner = c * (x + a * x * x * x);
    half * x * (T::one() + inner.tanh())
}

pub(crate) fn gelu_grad<T: Real>(x: T) -> T {
    let c = T::from_f64(0.797_884_560_802_865_4);
    let a = T::from_f64(0.044715);
    let half = T::from_f64(0.5);
    let three = T::from_f64(3.0);
    let inner = c * (x + a * x * x * x);
    let t = inner.tanh();
    let sech2 = T::one() - t * t;
    half * (T::one() + t) + half * x * sech2 * c * (T::one() + three * a * x * x)
}

/// Row-wise layer normalization; returns (normalized, mean, 1/std).
pub(crate) fn layer_norm<T: Real>(
    x: &Mat<T>,
    scale: &[T],
    shift: &[T],
) -> (Mat<T>, Vec<T>, Vec<T>) {
    let h = x.cols();
    let hf = T::from_f64(h as f64);
    let eps = T::from_f64(LN_EPS);
    let mut out = Mat::zeros(x.rows(), h);
    let mut means = Vec::with_capacity(x.rows());
    let mut rstds = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().cloned().sum::<T>() / hf;
        let var = row
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<T>()
            / hf;
        let rstd = T::one() / (var + eps).sqrt();
        let o = out.row_mut(r);
        for i in 0..h {
            o[i] = (row[i] - mean) * rstd * scale[i] + shift[i];
        }
        means.push(mean);
        rstds.push(rstd);
    }
    (out, means, rstds)
}

fn dropout_mask<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rate: f64) -> Mat<T> {
    let keep = T::from_f64(1.0 / (1.0 - rate));
    let mut m = Mat::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = if rng.gen_bool(rate) { T::zero() } else { keep };
    }
    m
}

fn apply_mask<T: Real>(x: &mut Mat<T>, mask: &Mat<T>) {
    for (v, &m) in x.as_mut_slice().iter_mut().zip(mask.as_slice()) {
        *v = *v * m;
    }
}

/// Full forward pass with recorded activations. `dropout: None` is the
/// deterministic evaluation mode.
pub fn forward<T: Real>(
    params: &ModelParameters<T>,
    cfg: &ModelConfig,
    ids: &[u32],
    dropout: Option<&DropoutPlan>,
) -> Result<ForwardTrace<T>, ModelError> {
    let s = ids.len();
    if s > cfg.max_positions {
        return Err(ModelError::SequenceTooLong {
            len: s,
            max: cfg.max_positions,
        });
    }
    for &id in ids {
        if id as usize >= cfg.vocab_size {
            return Err(ModelError::IdOutOfRange {
                id,
                vocab: cfg.vocab_size,
            });
        }
    }
    let h = cfg.hidden_size;
    let heads = cfg.n_heads;
    let d = cfg.head_dim();
    let scale = T::from_f64(1.0 / (d as f64).sqrt());

    let mut rng = dropout.map(|p| ChaCha8Rng::seed_from_u64(p.seed));
    let rate = dropout.map(|p| p.rate).unwrap_or(0.0);
    let active = rate > 0.0;

    // embeddings: token + position
    let mut x = Mat::zeros(s, h);
    for (r, &id) in ids.iter().enumerate() {
        let tok = params.tok_emb.row(id as usize);
        let pos = params.pos_emb.row(r);
        let row = x.row_mut(r);
        for i in 0..h {
            row[i] = tok[i] + pos[i];
        }
    }

    let mut layers = Vec::with_capacity(cfg.n_layers);
    for lp in &params.layers {
        let mut q = x.matmul(&lp.wq);
        q.add_bias(&lp.bq);
        let mut k = x.matmul(&lp.wk);
        k.add_bias(&lp.bk);
        let mut v = x.matmul(&lp.wv);
        v.add_bias(&lp.bv);

        let mut attn_probs = Vec::with_capacity(heads);
        let mut prob_masks = if active { Some(Vec::new()) } else { None };
        let mut ctx = Mat::zeros(s, h);
        for head in 0..heads {
            let cols = head * d..(head + 1) * d;
            // scores = Qh Kh^T * scale
            let mut scores = Mat::zeros(s, s);
            for i in 0..s {
                let qi = &q.row(i)[cols.clone()];
                for j in 0..s {
                    let kj = &k.row(j)[cols.clone()];
                    let mut acc = T::zero();
                    for (a, b) in qi.iter().zip(kj) {
                        acc = acc + *a * *b;
                    }
                    scores.set(i, j, acc * scale);
                }
            }
            scores.softmax_rows();
            let probs = scores;
            let mut effective = probs.clone();
            if active {
                let mask = dropout_mask::<T>(rng.as_mut().unwrap(), s, s, rate);
                apply_mask(&mut effective, &mask);
                prob_masks.as_mut().unwrap().push(mask);
            }
            // ctx_h = effective * Vh
            for i in 0..s {
                let pi = effective.row(i);
                let out_row = ctx.row_mut(i);
                for j in 0..s {
                    let p = pi[j];
                    if p == T::zero() {
                        continue;
                    }
                    let vj = &v.row(j)[cols.clone()];
                    let o = &mut out_row[cols.clone()];
                    for (ov, &vv) in o.iter_mut().zip(vj) {
                        *ov = *ov + p * vv;
                    }
                }
            }
            attn_probs.push(probs);
        }

        let mut attn_out = ctx.matmul(&lp.wo);
        attn_out.add_bias(&lp.bo);
        let attn_out_mask = if active {
            let mask = dropout_mask::<T>(rng.as_mut().unwrap(), s, h, rate);
            apply_mask(&mut attn_out, &mask);
            Some(mask)
        } else {
            None
        };

        let mut r1 = x.clone();
        r1.add_assign(&attn_out);
        let (n1, ln1_mean, ln1_rstd) = layer_norm(&r1, &lp.ln1_scale, &lp.ln1_shift);

        let mut ff_pre = n1.matmul(&lp.ff1_w);
        ff_pre.add_bias(&lp.ff1_b);
        let mut ff_act = ff_pre.clone();
        for vv in ff_act.as_mut_slice() {
            *vv = gelu(*vv);
        }
        let mut ff_out = ff_act.matmul(&lp.ff2_w);
        ff_out.add_bias(&lp.ff2_b);
        let ff_out_mask = if active {
            let mask = dropout_mask::<T>(rng.as_mut().unwrap(), s, h, rate);
            apply_mask(&mut ff_out, &mask);
            Some(mask)
        } else {
            None
        };

        let mut r2 = n1.clone();
        r2.add_assign(&ff_out);
        let (n2, ln2_mean, ln2_rstd) = layer_norm(&r2, &lp.ln2_scale, &lp.ln2_shift);

        layers.push(LayerTrace {
            x,
            q,
            k,
            v,
            attn_probs,
            attn_prob_masks: prob_masks,
            ctx,
            attn_out_mask,
            r1,
            ln1_mean,
            ln1_rstd,
            n1,
            ff_pre,
            ff_act,
            ff_out_mask,
            r2,
            ln2_mean,
            ln2_rstd,
        });
        x = n2;
    }

    Ok(ForwardTrace {
        ids: ids.to_vec(),
        layers,
        hidden: x,
    })
}

/// Final hidden states for a piece-id sequence. In train mode, dropout at
/// `cfg.dropout_rate` is applied with the given seed; eval mode is a pure
/// function of (params, ids).
pub fn encode<T: Real>(
    params: &ModelParameters<T>,
    cfg: &ModelConfig,
    ids: &[u32],
    train_mode: bool,
    seed: u64,
) -> Result<Mat<T>, ModelError> {
    let plan = DropoutPlan {
        rate: cfg.dropout_rate,
        seed,
    };
    let dropout = if train_mode && cfg.dropout_rate > 0.0 {
        Some(&plan)
    } else {
        None
    };
    Ok(forward(params, cfg, ids, dropout)?.hidden)
}

/// Vocabulary logits at the given positions: `hidden_row . tok_emb^T + bias`
/// (output projection tied to the token embedding table).
pub fn mlm_logits<T: Real>(
    params: &ModelParameters<T>,
    cfg: &ModelConfig,
    hidden: &Mat<T>,
    positions: &[usize],
) -> Result<Mat<T>, ModelError> {
    let mut out = Mat::zeros(positions.len(), cfg.vocab_size);
    for (r, &pos) in positions.iter().enumerate() {
        if pos >= hidden.rows() {
            return Err(ModelError::PositionOutOfRange(pos));
        }
        let hrow = hidden.row(pos);
        let orow = out.row_mut(r);
        for vocab_id in 0..cfg.vocab_size {
            let erow = params.tok_emb.row(vocab_id);
            let mut acc = T::zero();
            for (a, b) in hrow.iter().zip(erow) {
                acc = acc + *a * *b;
            }
            orow[vocab_id] = acc + params.mlm_bias[vocab_id];
        }
    }
    Ok(out)
}
