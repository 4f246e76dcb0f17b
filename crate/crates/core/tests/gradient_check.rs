//! Finite-difference validation of every analytic gradient, in f64.

use relmark_core::encoding::{EncodedExample, MarkerScheme};
use relmark_core::head::{cross_entropy_loss, head_backward, SummaryKind, SummaryScheme};
use relmark_core::math::Mat;
use relmark_core::model::{FullModel, HeadConfig};
use relmark_core::transformer::{backward_from_hidden, forward, ModelConfig, TensorCollection};

const EPS: f64 = 1e-4;

fn config() -> ModelConfig {
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

fn example() -> EncodedExample {
    // [CLS] [T0] e e [T0] w [T1] e [T1] [SEP]
    EncodedExample {
        piece_ids: vec![2, 9, 11, 12, 9, 13, 10, 11, 10, 3],
        m1_start: 1,
        m1_end: 4,
        m2_start: 6,
        m2_end: 8,
        e1_range: 2..4,
        e2_range: 7..8,
        t1: 0,
        t2: 1,
        label: 2,
        max_len: 16,
    }
}

fn model(kind: SummaryKind, type_emb: bool, concat: bool) -> FullModel<f64> {
    let mut summary = SummaryScheme::new(kind);
    summary.append_type_embedding = type_emb;
    summary.concat_sentence = concat;
    let mut head = HeadConfig::new(MarkerScheme::EntityType, summary, 3, 2);
    head.type_emb_dim = 4;
    FullModel::init(config(), head, 17).unwrap()
}

fn loss_of(model: &FullModel<f64>, ex: &EncodedExample) -> f64 {
    let trace = forward(&model.params, &model.config, &ex.piece_ids, None).unwrap();
    let (probs, _, _, _) = model.classify_hidden(&trace.hidden, ex).unwrap();
    cross_entropy_loss(&probs, ex.label).unwrap().0
}

fn analytic_grads(model: &FullModel<f64>, ex: &EncodedExample) -> FullModel<f64> {
    let mut grads = model.zeros_like();
    let trace = forward(&model.params, &model.config, &ex.piece_ids, None).unwrap();
    let (probs, _, h_s, strace) = model.classify_hidden(&trace.hidden, ex).unwrap();
    let (_, d_logits) = cross_entropy_loss(&probs, ex.label).unwrap();
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
    grads
}

fn check_all(mut model: FullModel<f64>) {
    let ex = example();
    let grads = analytic_grads(&model, &ex);
    let analytic: Vec<(String, Vec<f64>)> = grads
        .tensors()
        .iter()
        .map(|t| (t.name.clone(), t.data.to_vec()))
        .collect();

    let n_tensors = analytic.len();
    let mut worst = 0.0f64;
    for ti in 0..n_tensors {
        let n = analytic[ti].1.len();
        for i in 0..n {
            let orig = {
                let mut slots = model.tensors_mut();
                let x = slots[ti].data[i];
                slots[ti].data[i] = x + EPS;
                x
            };
            let up = loss_of(&model, &ex);
            {
                let mut slots = model.tensors_mut();
                slots[ti].data[i] = orig - EPS;
            }
            let down = loss_of(&model, &ex);
            {
                let mut slots = model.tensors_mut();
                slots[ti].data[i] = orig;
            }
            let numeric = (up - down) / (2.0 * EPS);
            let a = analytic[ti].1[i];
            let rel = (a - numeric).abs() / (1.0 + a.abs() + numeric.abs());
            assert!(
                rel <= 1e-4,
                "{}[{}]: analytic {} vs numeric {} (rel {})",
                analytic[ti].0,
                i,
                a,
                numeric,
                rel
            );
            worst = worst.max(rel);
        }
    }
    assert!(worst <= 1e-4);
}

#[test]
fn entity_start_summary() {
    check_all(model(SummaryKind::EntityStart, false, false));
}

#[test]
fn entity_max_pool_summary() {
    check_all(model(SummaryKind::EntityMaxPool, false, false));
}

#[test]
fn sentence_start_summary() {
    check_all(model(SummaryKind::SentenceStart, false, false));
}

#[test]
fn type_embeddings_and_sentence_concat() {
    check_all(model(SummaryKind::EntityMaxPool, true, true));
}

#[test]
fn mention_pool_without_markers() {
    let mut m = model(SummaryKind::EntityMaxPool, false, false);
    m.head_config.summary.pool_markers = false;
    check_all(m);
}
