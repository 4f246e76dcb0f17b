use super::forward::{gelu_grad, ForwardTrace, LayerTrace};
use super::{ModelConfig, ModelParameters};
use crate::math::{Mat, Real};

/// Accumulates analytic gradients for every encoder parameter, given the
/// gradient of the loss w.r.t. the final hidden states. The trace must come
/// from a forward pass over the same parameters (with any dropout decisions
/// recorded in it).
pub fn backward_from_hidden<T: Real>(
    params: &ModelParameters<T>,
    cfg: &ModelConfig,
    trace: &ForwardTrace<T>,
    d_hidden: &Mat<T>,
    grads: &mut ModelParameters<T>,
) {
    assert_eq!(d_hidden.rows(), trace.hidden.rows());
    assert_eq!(d_hidden.cols(), cfg.hidden_size);

    let mut dy = d_hidden.clone();
    for (li, layer) in trace.layers.iter().enumerate().rev() {
        let lp = &params.layers[li];
        let lg = &mut grads.layers[li];
        dy = layer_backward(lp, lg, cfg, layer, &dy);
    }

    // embedding scatter: x0 = tok_emb[id] + pos_emb[pos]
    for (r, &id) in trace.ids.iter().enumerate() {
        let src = dy.row(r).to_vec();
        for (g, &d) in grads.tok_emb.row_mut(id as usize).iter_mut().zip(&src) {
            *g = *g + d;
        }
        for (g, &d) in grads.pos_emb.row_mut(r).iter_mut().zip(&src) {
            *g = *g + d;
        }
    }
}

/// Layer-norm backward for `y = scale .* (x - mean) * rstd + shift`.
/// Accumulates dscale/dshift, returns dx.
fn ln_backward<T: Real>(
    x: &Mat<T>,
    mean: &[T],
    rstd: &[T],
    scale: &[T],
    dy: &Mat<T>,
    dscale: &mut [T],
    dshift: &mut [T],
) -> Mat<T> {
    let h = x.cols();
    let hf = T::from_f64(h as f64);
    let mut dx = Mat::zeros(x.rows(), h);
    for r in 0..x.rows() {
        let xr = x.row(r);
        let dyr = dy.row(r);
        let m = mean[r];
        let rs = rstd[r];

        let mut sum_dxhat = T::zero();
        let mut sum_dxhat_xhat = T::zero();
        let mut dxhat = vec![T::zero(); h];
        for i in 0..h {
            let xhat = (xr[i] - m) * rs;
            dscale[i] = dscale[i] + dyr[i] * xhat;
            dshift[i] = dshift[i] + dyr[i];
            let d = dyr[i] * scale[i];
            dxhat[i] = d;
            sum_dxhat = sum_dxhat + d;
            sum_dxhat_xhat = sum_dxhat_xhat + d * xhat;
        }
        let mean_dxhat = sum_dxhat / hf;
        let mean_dxhat_xhat = sum_dxhat_xhat / hf;
        let dxr = dx.row_mut(r);
        for i in 0..h {
            let xhat = (xr[i] - m) * rs;
            dxr[i] = rs * (dxhat[i] - mean_dxhat - xhat * mean_dxhat_xhat);
        }
    }
    dx
}

fn colsum_into<T: Real>(m: &Mat<T>, out: &mut [T]) {
    for r in 0..m.rows() {
        for (o, &v) in out.iter_mut().zip(m.row(r)) {
            *o = *o + v;
        }
    }
}

fn apply_mask<T: Real>(x: &mut Mat<T>, mask: &Mat<T>) {
    for (v, &m) in x.as_mut_slice().iter_mut().zip(mask.as_slice()) {
        *v = *v * m;
    }
}

fn layer_backward<T: Real>(
    lp: &super::params::LayerParams<T>,
    lg: &mut super::params::LayerParams<T>,
    cfg: &ModelConfig,
    tr: &LayerTrace<T>,
    d_out: &Mat<T>,
) -> Mat<T> {
    let s = tr.x.rows();
    let heads = cfg.n_heads;
    let d = cfg.head_dim();
    let scale = T::from_f64(1.0 / (d as f64).sqrt());

    // LN2
    let d_r2 = ln_backward(
        &tr.r2,
        &tr.ln2_mean,
        &tr.ln2_rstd,
        &lp.ln2_scale,
        d_out,
        &mut lg.ln2_scale,
        &mut lg.ln2_shift,
    );

    // feed-forward branch
    let mut d_ffout = d_r2.clone();
    if let Some(mask) = &tr.ff_out_mask {
        apply_mask(&mut d_ffout, mask);
    }
    lg.ff2_w.add_assign(&tr.ff_act.matmul_at(&d_ffout));
    colsum_into(&d_ffout, &mut lg.ff2_b);
    let mut d_pre = d_ffout.matmul_bt(&lp.ff2_w);
    for (dp, &u) in d_pre.as_mut_slice().iter_mut().zip(tr.ff_pre.as_slice()) {
        *dp = *dp * gelu_grad(u);
    }
    lg.ff1_w.add_assign(&tr.n1.matmul_at(&d_pre));
    colsum_into(&d_pre, &mut lg.ff1_b);

    // residual into n1
    let mut d_n1 = d_r2;
    d_n1.add_assign(&d_pre.matmul_bt(&lp.ff1_w));

    // LN1
    let d_r1 = ln_backward(
        &tr.r1,
        &tr.ln1_mean,
        &tr.ln1_rstd,
        &lp.ln1_scale,
        &d_n1,
        &mut lg.ln1_scale,
        &mut lg.ln1_shift,
    );

    // attention branch
    let mut d_ao = d_r1.clone();
    if let Some(mask) = &tr.attn_out_mask {
        apply_mask(&mut d_ao, mask);
    }
    lg.wo.add_assign(&tr.ctx.matmul_at(&d_ao));
    colsum_into(&d_ao, &mut lg.bo);
    let d_ctx = d_ao.matmul_bt(&lp.wo);

    let mut dq = Mat::zeros(s, cfg.hidden_size);
    let mut dk = Mat::zeros(s, cfg.hidden_size);
    let mut dv = Mat::zeros(s, cfg.hidden_size);
    for head in 0..heads {
        let cols = head * d..(head + 1) * d;
        let probs = &tr.attn_probs[head];
        let mask = tr.attn_prob_masks.as_ref().map(|m| &m[head]);

        // effective attention weights actually used in the forward pass
        let eff = |i: usize, j: usize| {
            let p = probs.get(i, j);
            match mask {
                Some(m) => p * m.get(i, j),
                None => p,
            }
        };

        // dV and d_eff
        let mut d_eff = Mat::zeros(s, s);
        for i in 0..s {
            let dci = &d_ctx.row(i)[cols.clone()];
            for j in 0..s {
                let vj = &tr.v.row(j)[cols.clone()];
                let mut acc = T::zero();
                for (a, b) in dci.iter().zip(vj) {
                    acc = acc + *a * *b;
                }
                d_eff.set(i, j, acc);
                let e = eff(i, j);
                if e != T::zero() {
                    let dvj = &mut dv.row_mut(j)[cols.clone()];
                    for (o, &a) in dvj.iter_mut().zip(dci) {
                        *o = *o + e * a;
                    }
                }
            }
        }

        // through prob dropout, then softmax
        for i in 0..s {
            let mut row_dot = T::zero();
            let mut dprow = vec![T::zero(); s];
            for j in 0..s {
                let mut dp = d_eff.get(i, j);
                if let Some(m) = mask {
                    dp = dp * m.get(i, j);
                }
                dprow[j] = dp;
                row_dot = row_dot + dp * probs.get(i, j);
            }
            for j in 0..s {
                let ds = probs.get(i, j) * (dprow[j] - row_dot);
                if ds == T::zero() {
                    continue;
                }
                // dQ_i += ds * K_j * scale ; dK_j += ds * Q_i * scale
                let kj = tr.k.row(j)[cols.clone()].to_vec();
                let qi = tr.q.row(i)[cols.clone()].to_vec();
                let dqi = &mut dq.row_mut(i)[cols.clone()];
                for (o, &kv) in dqi.iter_mut().zip(&kj) {
                    *o = *o + ds * kv * scale;
                }
                let dkj = &mut dk.row_mut(j)[cols.clone()];
                for (o, &qv) in dkj.iter_mut().zip(&qi) {
                    *o = *o + ds * qv * scale;
                }
            }
        }
    }

    // projection parameter grads and input grad
    lg.wq.add_assign(&tr.x.matmul_at(&dq));
    colsum_into(&dq, &mut lg.bq);
    lg.wk.add_assign(&tr.x.matmul_at(&dk));
    colsum_into(&dk, &mut lg.bk);
    lg.wv.add_assign(&tr.x.matmul_at(&dv));
    colsum_into(&dv, &mut lg.bv);

    let mut d_x = d_r1;
    d_x.add_assign(&dq.matmul_bt(&lp.wq));
    d_x.add_assign(&dk.matmul_bt(&lp.wk));
    d_x.add_assign(&dv.matmul_bt(&lp.wv));
    d_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transformer::{forward, init_parameters};

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_layers: 1,
            hidden_size: 8,
            n_heads: 2,
            ffn_size: 16,
            max_positions: 8,
            vocab_size: 10,
            dropout_rate: 0.0,
        }
    }

    #[test]
    fn unused_vocab_rows_get_zero_gradient() {
        let c = cfg();
        let p = init_parameters::<f64>(&c, 1).unwrap();
        let ids = [1u32, 2, 3];
        let trace = forward(&p, &c, &ids, None).unwrap();
        let mut d_hidden = Mat::zeros(3, 8);
        d_hidden.set(0, 0, 1.0);
        let mut grads = ModelParameters::zeros(&c);
        backward_from_hidden(&p, &c, &trace, &d_hidden, &mut grads);
        for unused in [0usize, 4, 9] {
            assert!(grads.tok_emb.row(unused).iter().all(|&g| g == 0.0));
        }
        assert!(grads.tok_emb.row(1).iter().any(|&g| g != 0.0));
    }

    #[test]
    fn gradients_scale_linearly() {
        let c = cfg();
        let p = init_parameters::<f64>(&c, 2).unwrap();
        let ids = [5u32, 6];
        let trace = forward(&p, &c, &ids, None).unwrap();
        let mut d1 = Mat::zeros(2, 8);
        d1.set(1, 3, 0.7);
        d1.set(0, 0, -0.2);
        let mut d2 = d1.clone();
        d2.scale(2.0);

        let mut g1 = ModelParameters::zeros(&c);
        backward_from_hidden(&p, &c, &trace, &d1, &mut g1);
        let mut g2 = ModelParameters::zeros(&c);
        backward_from_hidden(&p, &c, &trace, &d2, &mut g2);

        use crate::transformer::TensorCollection;
        for (a, b) in g1.tensors().iter().zip(g2.tensors().iter()) {
            for (&x, &y) in a.data.iter().zip(b.data) {
                assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }
}
