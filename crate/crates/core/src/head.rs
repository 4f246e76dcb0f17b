//! Summary representations (sentence start, entity start, entity max
//! pooling), optional entity-type embedding augmentation, the linear softmax
//! classifier, and cross-entropy loss.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::EncodedExample;
use crate::math::{softmax_vec, Mat, Real};
use crate::transformer::{TensorCollection, TensorMut, TensorRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SummaryKind {
    /// h_s = h_[CLS].
    #[serde(rename = "ss")]
    SentenceStart,
    /// h_s = [h at m1_start, h at m2_start].
    #[serde(rename = "es")]
    EntityStart,
    /// h_s = [maxpool over entity 1, maxpool over entity 2].
    #[serde(rename = "emp")]
    EntityMaxPool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryScheme {
    pub kind: SummaryKind,
    /// EMP pools start marker + entity tokens + end marker (inclusive).
    /// `false` is the mention-pooling ablation (entity tokens only).
    pub pool_markers: bool,
    /// Prepend h_[CLS] to ES/EMP (ablation, off by default).
    pub concat_sentence: bool,
    /// Append type embeddings for T1, T2 at the classifier.
    pub append_type_embedding: bool,
}

impl SummaryScheme {
    pub fn new(kind: SummaryKind) -> Self {
        Self {
            kind,
            pool_markers: true,
            concat_sentence: false,
            append_type_embedding: false,
        }
    }

    /// Dimension of h_s for hidden size `h` and type-embedding size `d_t`.
    pub fn dim(&self, h: usize, d_t: usize) -> usize {
        let base = match self.kind {
            SummaryKind::SentenceStart => h,
            SummaryKind::EntityStart | SummaryKind::EntityMaxPool => {
                let local = 2 * h;
                if self.concat_sentence {
                    local + h
                } else {
                    local
                }
            }
        };
        if self.append_type_embedding {
            base + 2 * d_t
        } else {
            base
        }
    }
}

#[derive(Debug, Error)]
pub enum HeadError {
    #[error("summary dimension {got} does not match classifier input {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("gold class {gold} out of range for {n_classes} classes")]
    BadClass { gold: usize, n_classes: usize },
}

/// Classifier parameters: W is stored `[dim(h_s)][n_classes]`, so
/// `logits = h_s * W + b`. The optional type-embedding table is
/// `[n_entity_types][d_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams<T> {
    pub w: Mat<T>,
    pub b: Vec<T>,
    pub type_emb: Option<Mat<T>>,
}

impl<T: Real> HeadParams<T> {
    pub fn zeros(dim: usize, n_classes: usize, type_table: Option<(usize, usize)>) -> Self {
        Self {
            w: Mat::zeros(dim, n_classes),
            b: vec![T::zero(); n_classes],
            type_emb: type_table.map(|(n, d)| Mat::zeros(n, d)),
        }
    }

    /// Truncated-normal init (std 0.02) matching the encoder's.
    pub fn init(
        dim: usize,
        n_classes: usize,
        type_table: Option<(usize, usize)>,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sample = || loop {
            let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            if z.abs() <= 2.0 {
                return T::from_f64(z * 0.02);
            }
        };
        let mut head = Self::zeros(dim, n_classes, type_table);
        for x in head.w.as_mut_slice() {
            *x = sample();
        }
        if let Some(te) = &mut head.type_emb {
            for x in te.as_mut_slice() {
                *x = sample();
            }
        }
        head
    }

    pub fn n_classes(&self) -> usize {
        self.b.len()
    }

    pub fn map_precision<U: Real>(&self) -> HeadParams<U> {
        HeadParams {
            w: self.w.map_precision(),
            b: self.b.iter().map(|x| U::from_f64(x.to_f64())).collect(),
            type_emb: self.type_emb.as_ref().map(|m| m.map_precision()),
        }
    }
}

impl<T: Real> TensorCollection<T> for HeadParams<T> {
    fn tensors(&self) -> Vec<TensorRef<'_, T>> {
        let mut out = vec![
            TensorRef {
                name: "head.w".into(),
                dims: vec![self.w.rows(), self.w.cols()],
                data: self.w.as_slice(),
            },
            TensorRef {
                name: "head.b".into(),
                dims: vec![self.b.len()],
                data: &self.b,
            },
        ];
        if let Some(te) = &self.type_emb {
            out.push(TensorRef {
                name: "head.type_emb".into(),
                dims: vec![te.rows(), te.cols()],
                data: te.as_slice(),
            });
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<TensorMut<'_, T>> {
        let mut out = vec![
            TensorMut {
                name: "head.w".into(),
                dims: vec![self.w.rows(), self.w.cols()],
                data: self.w.as_mut_slice(),
            },
            TensorMut {
                name: "head.b".into(),
                dims: vec![self.b.len()],
                data: &mut self.b,
            },
        ];
        if let Some(te) = &mut self.type_emb {
            out.push(TensorMut {
                name: "head.type_emb".into(),
                dims: vec![te.rows(), te.cols()],
                data: te.as_mut_slice(),
            });
        }
        out
    }
}

/// How each slice of h_s was produced; backward scatters through this.
#[derive(Debug, Clone)]
pub enum Segment {
    /// One hidden row copied verbatim.
    Row(usize),
    /// Element-wise max over rows; `argmax[k]` is the winning row for
    /// coordinate k (first maximum on ties).
    MaxPool { argmax: Vec<usize> },
    /// A type-embedding row.
    TypeEmb(usize),
}

#[derive(Debug, Clone)]
pub struct SummaryTrace {
    pub segments: Vec<Segment>,
}

fn pool_range(ex: &EncodedExample, scheme: &SummaryScheme, entity: usize) -> (usize, usize) {
    // inclusive row range
    if scheme.pool_markers {
        if entity == 0 {
            (ex.m1_start, ex.m1_end)
        } else {
            (ex.m2_start, ex.m2_end)
        }
    } else if entity == 0 {
        (ex.e1_range.start, ex.e1_range.end - 1)
    } else {
        (ex.e2_range.start, ex.e2_range.end - 1)
    }
}

/// Builds the summary vector h_s from the final hidden states.
pub fn summarize<T: Real>(
    hidden: &Mat<T>,
    example: &EncodedExample,
    scheme: &SummaryScheme,
    type_emb: Option<&Mat<T>>,
) -> (Vec<T>, SummaryTrace) {
    let mut h_s = Vec::new();
    let mut segments = Vec::new();
    let push_row = |h_s: &mut Vec<T>, segments: &mut Vec<Segment>, row: usize| {
        h_s.extend_from_slice(hidden.row(row));
        segments.push(Segment::Row(row));
    };

    match scheme.kind {
        SummaryKind::SentenceStart => push_row(&mut h_s, &mut segments, 0),
        SummaryKind::EntityStart => {
            if scheme.concat_sentence {
                push_row(&mut h_s, &mut segments, 0);
            }
            push_row(&mut h_s, &mut segments, example.m1_start);
            push_row(&mut h_s, &mut segments, example.m2_start);
        }
        SummaryKind::EntityMaxPool => {
            if scheme.concat_sentence {
                push_row(&mut h_s, &mut segments, 0);
            }
            for entity in 0..2 {
                let (lo, hi) = pool_range(example, scheme, entity);
                let h = hidden.cols();
                let mut best = hidden.row(lo).to_vec();
                let mut argmax = vec![lo; h];
                for row in lo + 1..=hi {
                    for (k, &v) in hidden.row(row).iter().enumerate() {
                        if v > best[k] {
                            best[k] = v;
                            argmax[k] = row;
                        }
                    }
                }
                h_s.extend_from_slice(&best);
                segments.push(Segment::MaxPool { argmax });
            }
        }
    }

    if scheme.append_type_embedding {
        let te = type_emb.expect("type embedding table required by scheme");
        for &t in &[example.t1, example.t2] {
            h_s.extend_from_slice(te.row(t));
            segments.push(Segment::TypeEmb(t));
        }
    }

    (h_s, SummaryTrace { segments })
}

/// `p = softmax(W h_s + b)`; prediction is the argmax with ties broken by
/// the lowest class index.
pub fn classify<T: Real>(head: &HeadParams<T>, h_s: &[T]) -> Result<(Vec<T>, usize), HeadError> {
    if h_s.len() != head.w.rows() {
        return Err(HeadError::DimensionMismatch {
            expected: head.w.rows(),
            got: h_s.len(),
        });
    }
    let n = head.n_classes();
    let mut logits = head.b.clone();
    for (i, &x) in h_s.iter().enumerate() {
        if x == T::zero() {
            continue;
        }
        for (l, &w) in logits.iter_mut().zip(head.w.row(i)) {
            *l = *l + x * w;
        }
    }
    let probs = softmax_vec(&logits);
    let mut pred = 0;
    for c in 1..n {
        if probs[c] > probs[pred] {
            pred = c;
        }
    }
    Ok((probs, pred))
}

/// `loss = -log p[gold]`; the returned gradient is w.r.t. the logits:
/// `p - one_hot(gold)`.
pub fn cross_entropy_loss<T: Real>(probs: &[T], gold: usize) -> Result<(T, Vec<T>), HeadError> {
    if gold >= probs.len() {
        return Err(HeadError::BadClass {
            gold,
            n_classes: probs.len(),
        });
    }
    let loss = -probs[gold].ln();
    let mut grad = probs.to_vec();
    grad[gold] = grad[gold] - T::one();
    Ok((loss, grad))
}

/// Backpropagates the logit gradient through the classifier and the summary
/// construction, accumulating into `grads` and the hidden-state gradient.
pub fn head_backward<T: Real>(
    head: &HeadParams<T>,
    h_s: &[T],
    trace: &SummaryTrace,
    d_logits: &[T],
    d_hidden: &mut Mat<T>,
    grads: &mut HeadParams<T>,
) {
    // dW = h_s^T d_logits ; db = d_logits ; d_hs = W d_logits
    let mut d_hs = vec![T::zero(); h_s.len()];
    for (i, &x) in h_s.iter().enumerate() {
        let wrow = head.w.row(i);
        let grow = grads.w.row_mut(i);
        let mut acc = T::zero();
        for c in 0..d_logits.len() {
            grow[c] = grow[c] + x * d_logits[c];
            acc = acc + wrow[c] * d_logits[c];
        }
        d_hs[i] = acc;
    }
    for (g, &d) in grads.b.iter_mut().zip(d_logits) {
        *g = *g + d;
    }

    // scatter d_hs through the summary segments
    let h = d_hidden.cols();
    let mut offset = 0;
    for segment in &trace.segments {
        match segment {
            Segment::Row(row) => {
                let dst = d_hidden.row_mut(*row);
                for k in 0..h {
                    dst[k] = dst[k] + d_hs[offset + k];
                }
                offset += h;
            }
            Segment::MaxPool { argmax } => {
                for k in 0..h {
                    let row = argmax[k];
                    let v = d_hidden.get(row, k) + d_hs[offset + k];
                    d_hidden.set(row, k, v);
                }
                offset += h;
            }
            Segment::TypeEmb(t) => {
                let te = grads
                    .type_emb
                    .as_mut()
                    .expect("gradient table mirrors parameters");
                let d_t = te.cols();
                let dst = te.row_mut(*t);
                for k in 0..d_t {
                    dst[k] = dst[k] + d_hs[offset + k];
                }
                offset += d_t;
            }
        }
    }
    debug_assert_eq!(offset, d_hs.len());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(len: usize) -> EncodedExample {
        // [CLS] M e1 M w M e2 e2 M [SEP] at len >= 10
        assert!(len >= 10);
        EncodedExample {
            piece_ids: vec![0; len],
            m1_start: 1,
            m1_end: 3,
            m2_start: 5,
            m2_end: 8,
            e1_range: 2..3,
            e2_range: 6..8,
            t1: 0,
            t2: 1,
            label: 0,
            max_len: len,
        }
    }

    #[test]
    fn ss_is_row_zero_bit_exact() {
        let hidden = Mat::from_vec(10, 2, (0..20).map(|i| i as f64 * 0.37).collect());
        let scheme = SummaryScheme::new(SummaryKind::SentenceStart);
        let (h_s, _) = summarize(&hidden, &example(10), &scheme, None);
        assert_eq!(h_s, hidden.row(0).to_vec());
    }

    #[test]
    fn es_concatenates_start_marker_rows() {
        let hidden = Mat::from_vec(10, 2, (0..20).map(|i| i as f64).collect());
        let scheme = SummaryScheme::new(SummaryKind::EntityStart);
        let ex = example(10);
        let (h_s, _) = summarize(&hidden, &ex, &scheme, None);
        let mut expected = hidden.row(ex.m1_start).to_vec();
        expected.extend_from_slice(hidden.row(ex.m2_start));
        assert_eq!(h_s, expected);
    }

    #[test]
    fn emp_matches_hand_example() {
        // rows {(1,0,2),(0,3,1),(2,1,0)} over entity 1's range -> (2,3,2)
        let mut hidden = Mat::zeros(10, 3);
        for (r, vals) in [(1, [1.0, 0.0, 2.0]), (2, [0.0, 3.0, 1.0]), (3, [2.0, 1.0, 0.0])] {
            for (c, v) in vals.into_iter().enumerate() {
                hidden.set(r, c, v);
            }
        }
        let scheme = SummaryScheme::new(SummaryKind::EntityMaxPool);
        let (h_s, _) = summarize(&hidden, &example(10), &scheme, None);
        assert_eq!(&h_s[..3], &[2.0, 3.0, 2.0]);
    }

    #[test]
    fn emp_of_identical_rows_is_that_row() {
        let mut hidden = Mat::zeros(10, 4);
        for r in 0..10 {
            for c in 0..4 {
                hidden.set(r, c, (c as f64) - 1.5);
            }
        }
        let scheme = SummaryScheme::new(SummaryKind::EntityMaxPool);
        let (h_s, _) = summarize(&hidden, &example(10), &scheme, None);
        assert_eq!(&h_s[..4], hidden.row(0));
    }

    #[test]
    fn classify_uniform_with_zero_head() {
        let head = HeadParams::<f64>::zeros(4, 3, None);
        let (p, pred) = classify(&head, &[1.0, -2.0, 0.5, 0.0]).unwrap();
        for &x in &p {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(pred, 0, "ties break to the lowest class");
    }

    #[test]
    fn classify_hand_softmax() {
        // logits (0, ln 2, 0) -> p = (0.25, 0.5, 0.25)
        let mut head = HeadParams::<f64>::zeros(1, 3, None);
        head.b = vec![0.0, (2.0f64).ln(), 0.0];
        let (p, pred) = classify(&head, &[0.0]).unwrap();
        assert!((p[0] - 0.25).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
        assert!((p[2] - 0.25).abs() < 1e-12);
        assert_eq!(pred, 1);
    }

    #[test]
    fn classify_shift_invariant() {
        let mut head = HeadParams::<f64>::zeros(1, 3, None);
        head.b = vec![0.3, -0.7, 1.1];
        let (p1, _) = classify(&head, &[0.0]).unwrap();
        for b in head.b.iter_mut() {
            *b += 5.0;
        }
        let (p2, _) = classify(&head, &[0.0]).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn classify_dimension_mismatch() {
        let head = HeadParams::<f64>::zeros(4, 3, None);
        assert!(matches!(
            classify(&head, &[1.0, 2.0]),
            Err(HeadError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn cross_entropy_hand_values() {
        let (loss, grad) = cross_entropy_loss(&[0.25, 0.5, 0.25], 2).unwrap();
        assert!((loss - 0.25f64.ln().abs()).abs() < 1e-4);
        assert!((loss - 1.3863).abs() < 1e-4);
        assert!((grad[0] - 0.25).abs() < 1e-12);
        assert!((grad[1] - 0.5).abs() < 1e-12);
        assert!((grad[2] + 0.75).abs() < 1e-12);

        let (loss, grad) = cross_entropy_loss(&[0.0, 1.0], 1).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g: &f64| g == 0.0));

        let (loss, _) = cross_entropy_loss(&[0.25; 4], 3).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);

        assert!(matches!(
            cross_entropy_loss(&[1.0], 1),
            Err(HeadError::BadClass { .. })
        ));
    }

    #[test]
    fn type_embedding_appended() {
        let hidden = Mat::zeros(10, 2);
        let mut scheme = SummaryScheme::new(SummaryKind::EntityStart);
        scheme.append_type_embedding = true;
        let te = Mat::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let (h_s, _) = summarize(&hidden, &example(10), &scheme, Some(&te));
        assert_eq!(h_s.len(), 2 * 2 + 2 * 3);
        assert_eq!(&h_s[4..7], &[1.0, 2.0, 3.0]);
        assert_eq!(&h_s[7..10], &[4.0, 5.0, 6.0]);
    }
}
