use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelError};
use crate::math::{Mat, Real};

/// Read-only view of one named parameter tensor.
pub struct TensorRef<'a, T> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: &'a [T],
}

/// Mutable view of one named parameter tensor.
pub struct TensorMut<'a, T> {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: &'a mut [T],
}

/// Anything that exposes its trainable tensors in a fixed, documented order.
/// The order defines both the checkpoint layout and the optimizer state
/// layout.
pub trait TensorCollection<T: Real> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>>;
    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub wq: Mat<T>,
    pub bq: Vec<T>,
    pub wk: Mat<T>,
    pub bk: Vec<T>,
    pub wv: Mat<T>,
    pub bv: Vec<T>,
    pub wo: Mat<T>,
    pub bo: Vec<T>,
    pub ln1_scale: Vec<T>,
    pub ln1_shift: Vec<T>,
    pub ff1_w: Mat<T>,
    pub ff1_b: Vec<T>,
    pub ff2_w: Mat<T>,
    pub ff2_b: Vec<T>,
    pub ln2_scale: Vec<T>,
    pub ln2_shift: Vec<T>,
}

/// All trainable encoder tensors. The MLM output projection is tied to the
/// token embedding table; only its bias is separate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<T> {
    pub tok_emb: Mat<T>,
    pub pos_emb: Mat<T>,
    pub layers: Vec<LayerParams<T>>,
    pub mlm_bias: Vec<T>,
}

impl<T: Real> LayerParams<T> {
    fn zeros(cfg: &ModelConfig) -> Self {
        let h = cfg.hidden_size;
        let f = cfg.ffn_size;
        Self {
            wq: Mat::zeros(h, h),
            bq: vec![T::zero(); h],
            wk: Mat::zeros(h, h),
            bk: vec![T::zero(); h],
            wv: Mat::zeros(h, h),
            bv: vec![T::zero(); h],
            wo: Mat::zeros(h, h),
            bo: vec![T::zero(); h],
            ln1_scale: vec![T::zero(); h],
            ln1_shift: vec![T::zero(); h],
            ff1_w: Mat::zeros(h, f),
            ff1_b: vec![T::zero(); f],
            ff2_w: Mat::zeros(f, h),
            ff2_b: vec![T::zero(); h],
            ln2_scale: vec![T::zero(); h],
            ln2_shift: vec![T::zero(); h],
        }
    }
}

impl<T: Real> ModelParameters<T> {
    /// All-zero tensors with the shapes of `cfg` (gradient accumulators).
    pub fn zeros(cfg: &ModelConfig) -> Self {
        Self {
            tok_emb: Mat::zeros(cfg.vocab_size, cfg.hidden_size),
            pos_emb: Mat::zeros(cfg.max_positions, cfg.hidden_size),
            layers: (0..cfg.n_layers).map(|_| LayerParams::zeros(cfg)).collect(),
            mlm_bias: vec![T::zero(); cfg.vocab_size],
        }
    }

    pub fn map_precision<U: Real>(&self) -> ModelParameters<U> {
        let conv = |v: &Vec<T>| v.iter().map(|x| U::from_f64(x.to_f64())).collect();
        ModelParameters {
            tok_emb: self.tok_emb.map_precision(),
            pos_emb: self.pos_emb.map_precision(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    wq: l.wq.map_precision(),
                    bq: conv(&l.bq),
                    wk: l.wk.map_precision(),
                    bk: conv(&l.bk),
                    wv: l.wv.map_precision(),
                    bv: conv(&l.bv),
                    wo: l.wo.map_precision(),
                    bo: conv(&l.bo),
                    ln1_scale: conv(&l.ln1_scale),
                    ln1_shift: conv(&l.ln1_shift),
                    ff1_w: l.ff1_w.map_precision(),
                    ff1_b: conv(&l.ff1_b),
                    ff2_w: l.ff2_w.map_precision(),
                    ff2_b: conv(&l.ff2_b),
                    ln2_scale: conv(&l.ln2_scale),
                    ln2_shift: conv(&l.ln2_shift),
                })
                .collect(),
            mlm_bias: conv(&self.mlm_bias),
        }
    }
}

impl<T: Real> TensorCollection<T> for ModelParameters<T> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>> {
        let mut out = Vec::new();
        push_ref(&mut out, "tok_emb", &self.tok_emb);
        push_ref(&mut out, "pos_emb", &self.pos_emb);
        for (i, l) in self.layers.iter().enumerate() {
            let p = |s: &str| format!("layer{i}.{s}");
            push_ref_named(&mut out, p("wq"), &l.wq);
            push_vec_ref(&mut out, p("bq"), &l.bq);
            push_ref_named(&mut out, p("wk"), &l.wk);
            push_vec_ref(&mut out, p("bk"), &l.bk);
            push_ref_named(&mut out, p("wv"), &l.wv);
            push_vec_ref(&mut out, p("bv"), &l.bv);
            push_ref_named(&mut out, p("wo"), &l.wo);
            push_vec_ref(&mut out, p("bo"), &l.bo);
            push_vec_ref(&mut out, p("ln1_scale"), &l.ln1_scale);
            push_vec_ref(&mut out, p("ln1_shift"), &l.ln1_shift);
            push_ref_named(&mut out, p("ff1_w"), &l.ff1_w);
            push_vec_ref(&mut out, p("ff1_b"), &l.ff1_b);
            push_ref_named(&mut out, p("ff2_w"), &l.ff2_w);
            push_vec_ref(&mut out, p("ff2_b"), &l.ff2_b);
            push_vec_ref(&mut out, p("ln2_scale"), &l.ln2_scale);
            push_vec_ref(&mut out, p("ln2_shift"), &l.ln2_shift);
        }
        push_vec_ref(&mut out, "mlm_bias".to_string(), &self.mlm_bias);
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>> {
        let mut out = Vec::new();
        push_mut(&mut out, "tok_emb".to_string(), &mut self.tok_emb);
        push_mut(&mut out, "pos_emb".to_string(), &mut self.pos_emb);
        for (i, l) in self.layers.iter_mut().enumerate() {
            let p = |s: &str| format!("layer{i}.{s}");
            push_mut(&mut out, p("wq"), &mut l.wq);
            push_vec_mut(&mut out, p("bq"), &mut l.bq);
            push_mut(&mut out, p("wk"), &mut l.wk);
            push_vec_mut(&mut out, p("bk"), &mut l.bk);
            push_mut(&mut out, p("wv"), &mut l.wv);
            push_vec_mut(&mut out, p("bv"), &mut l.bv);
            push_mut(&mut out, p("wo"), &mut l.wo);
            push_vec_mut(&mut out, p("bo"), &mut l.bo);
            push_vec_mut(&mut out, p("ln1_scale"), &mut l.ln1_scale);
            push_vec_mut(&mut out, p("ln1_shift"), &mut l.ln1_shift);
            push_mut(&mut out, p("ff1_w"), &mut l.ff1_w);
            push_vec_mut(&mut out, p("ff1_b"), &mut l.ff1_b);
            push_mut(&mut out, p("ff2_w"), &mut l.ff2_w);
            push_vec_mut(&mut out, p("ff2_b"), &mut l.ff2_b);
            push_vec_mut(&mut out, p("ln2_scale"), &mut l.ln2_scale);
            push_vec_mut(&mut out, p("ln2_shift"), &mut l.ln2_shift);
        }
        push_vec_mut(&mut out, "mlm_bias".to_string(), &mut self.mlm_bias);
        out
    }
}

fn push_ref<'a, T: Real>(out: &mut Vec<TensorRef<'a, T>>, name: &str, m: &'a Mat<T>) {
    push_ref_named(out, name.to_string(), m);
}

fn push_ref_named<'a, T: Real>(out: &mut Vec<TensorRef<'a, T>>, name: String, m: &'a Mat<T>) {
    out.push(TensorRef {
        name,
        dims: vec![m.rows(), m.cols()],
        data: m.as_slice(),
    });
}

fn push_vec_ref<'a, T: Real>(out: &mut Vec<TensorRef<'a, T>>, name: String, v: &'a Vec<T>) {
    out.push(TensorRef {
        name,
        dims: vec![v.len()],
        data: v.as_slice(),
    });
}

fn push_mut<'a, T: Real>(out: &mut Vec<TensorMut<'a, T>>, name: String, m: &'a mut Mat<T>) {
    out.push(TensorMut {
        name,
        dims: vec![m.rows(), m.cols()],
        data: m.as_mut_slice(),
    });
}

fn push_vec_mut<'a, T: Real>(out: &mut Vec<TensorMut<'a, T>>, name: String, v: &'a mut Vec<T>) {
    out.push(TensorMut {
        name,
        dims: vec![v.len()],
        data: v.as_mut_slice(),
    });
}

/// Samples from a normal truncated at two standard deviations.
fn truncated_normal(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    loop {
        // Box-Muller from two uniforms, deterministic under ChaCha.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        if z.abs() <= 2.0 {
            return z * std;
        }
    }
}

/// Weights from a truncated normal (std 0.02), biases zero, layer-norm
/// scales one. Deterministic per seed.
pub fn init_parameters<T: Real>(cfg: &ModelConfig, seed: u64) -> Result<ModelParameters<T>, ModelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ModelParameters::<T>::zeros(cfg);
    for t in params.tensors_mut() {
        let is_weight = t.dims.len() == 2;
        let is_ln_scale = t.name.ends_with("ln1_scale") || t.name.ends_with("ln2_scale");
        for x in t.data.iter_mut() {
            *x = if is_weight {
                T::from_f64(truncated_normal(&mut rng, 0.02))
            } else if is_ln_scale {
                T::one()
            } else {
                T::zero()
            };
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_layers: 2,
            hidden_size: 8,
            n_heads: 2,
            ffn_size: 16,
            max_positions: 16,
            vocab_size: 20,
            dropout_rate: 0.0,
        }
    }

    #[test]
    fn init_deterministic() {
        let a: ModelParameters<f64> = init_parameters(&cfg(), 3).unwrap();
        let b: ModelParameters<f64> = init_parameters(&cfg(), 3).unwrap();
        assert_eq!(a, b);
        let c: ModelParameters<f64> = init_parameters(&cfg(), 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn layer_norm_scales_are_one_biases_zero() {
        let p: ModelParameters<f64> = init_parameters(&cfg(), 0).unwrap();
        for l in &p.layers {
            assert!(l.ln1_scale.iter().all(|&x| x == 1.0));
            assert!(l.ln2_scale.iter().all(|&x| x == 1.0));
            assert!(l.bq.iter().all(|&x| x == 0.0));
            assert!(l.ln1_shift.iter().all(|&x| x == 0.0));
        }
        assert!(p.mlm_bias.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bad_config_rejected() {
        let mut c = cfg();
        c.hidden_size = 6;
        c.n_heads = 4;
        assert!(init_parameters::<f64>(&c, 0).is_err());
    }

    #[test]
    fn tensor_order_stable_and_weights_truncated() {
        let p: ModelParameters<f32> = init_parameters(&cfg(), 1).unwrap();
        let names: Vec<String> = p.tensors().iter().map(|t| t.name.clone()).collect();
        assert_eq!(names[0], "tok_emb");
        assert_eq!(names[1], "pos_emb");
        assert_eq!(names[2], "layer0.wq");
        assert_eq!(names.last().unwrap(), "mlm_bias");
        for t in p.tensors() {
            if t.dims.len() != 2 {
                continue;
            }
            for &x in t.data {
                assert!(x.abs() <= 0.04 + 1e-6, "{} out of truncation", t.name);
            }
        }
    }
}
