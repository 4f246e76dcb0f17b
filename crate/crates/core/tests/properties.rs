//! Randomized structural invariants.

use std::sync::Arc;

use proptest::prelude::*;

use relmark_core::corpus::{generate_candidates, EntityMention, RelationSchema, Sentence};
use relmark_core::encoding::{encode_example, MarkerScheme};
use relmark_core::head::{classify, summarize, HeadParams, SummaryKind, SummaryScheme};
use relmark_core::math::{softmax_vec, Mat};
use relmark_core::tokenizer::{build_vocabulary, tokenize};
use relmark_core::EncodedExample;

fn schema() -> RelationSchema {
    RelationSchema::new(
        vec!["PER".into(), "ORG".into(), "LOC".into()],
        vec!["R1".into(), "R2".into()],
        false,
    )
    .unwrap()
}

fn word_strategy() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('a'), Just('b'), Just('c'), Just('d')], 1..6)
        .prop_map(|cs| cs.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tokenization_partitions_and_detokenizes(
        corpus in proptest::collection::vec(word_strategy(), 1..20),
        query in proptest::collection::vec(word_strategy(), 1..10),
    ) {
        let vocab = build_vocabulary([corpus.as_slice()], 80, &schema()).unwrap();
        let tok = tokenize(&query, &vocab);

        // monotone partition
        let mut cursor = 0;
        for range in &tok.word_to_pieces {
            prop_assert_eq!(range.start, cursor);
            prop_assert!(range.end > range.start);
            cursor = range.end;
        }
        prop_assert_eq!(cursor, tok.piece_ids.len());

        // detokenization where no [UNK] was needed
        for (word, range) in query.iter().zip(&tok.word_to_pieces) {
            let ids = &tok.piece_ids[range.clone()];
            if ids.iter().any(|&id| id == vocab.unk_id()) {
                continue;
            }
            let mut rebuilt = String::new();
            for &id in ids {
                let piece = vocab.piece(id);
                rebuilt.push_str(piece.strip_prefix("##").unwrap_or(piece));
            }
            prop_assert_eq!(&rebuilt, word);
        }

        // specials never come out of plain text segmentation
        for &id in &tok.piece_ids {
            prop_assert!(!vocab.is_special(id) || id == vocab.unk_id());
        }
    }

    #[test]
    fn candidate_count_is_m_choose_2(spans in proptest::collection::vec(1usize..4, 0..6)) {
        // lay the mentions out back to back with one-word gaps
        let mut entities = Vec::new();
        let mut pos = 1;
        for (i, len) in spans.iter().enumerate() {
            entities.push(EntityMention {
                id: format!("e{i}"),
                start: pos,
                end: pos + len - 1,
                entity_type: ["PER", "ORG", "LOC"][i % 3].into(),
            });
            pos += len + 1;
        }
        let n_words = pos.max(2);
        let sentence = Arc::new(Sentence {
            id: "s".into(),
            language: "xx".into(),
            words: (0..n_words).map(|i| format!("w{i}")).collect(),
            entities,
            relations: vec![],
        });
        let m = spans.len();
        let set = generate_candidates(&sentence, &schema());
        prop_assert_eq!(set.instances.len(), m * (m.max(1) - 1) / 2);
        for inst in &set.instances {
            prop_assert!(inst.e1.end < inst.e2.start);
            prop_assert_eq!(inst.label, 0);
        }
    }

    #[test]
    fn marker_roundtrip_random_encodings(
        words in proptest::collection::vec(word_strategy(), 4..14),
        seed in 0u64..1000,
    ) {
        let vocab = build_vocabulary([words.as_slice()], 80, &schema()).unwrap();
        let tok = tokenize(&words, &vocab);
        let n = tok.piece_ids.len();
        prop_assume!(n >= 4);
        // derive two disjoint ranges from the seed
        let a = (seed as usize) % (n - 3);
        let b = a + 1 + (seed as usize / 7) % (n - a - 2);
        let e1 = a..a + 1;
        let e2 = b..b + 1;
        for scheme in [MarkerScheme::Uniform, MarkerScheme::EntityType] {
            let ex = encode_example(&tok, &e1, &e2, 0, 2, 1, scheme, &vocab, 256).unwrap();
            ex.check_invariants(&vocab);
            let markers = [ex.m1_start, ex.m1_end, ex.m2_start, ex.m2_end];
            let restored: Vec<u32> = ex
                .piece_ids
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    *i != 0 && *i != ex.piece_ids.len() - 1 && !markers.contains(i)
                })
                .map(|(_, &id)| id)
                .collect();
            prop_assert_eq!(&restored, &tok.piece_ids);
        }
    }

    #[test]
    fn emp_matches_bruteforce_max(
        values in proptest::collection::vec(-10.0f64..10.0, 60),
        lens in (1usize..4, 1usize..4),
    ) {
        let hidden = Mat::from_vec(12, 5, values);
        let (l1, l2) = lens;
        let ex = EncodedExample {
            piece_ids: vec![0; 12],
            m1_start: 1,
            m1_end: 2 + l1,
            m2_start: 6,
            m2_end: 7 + l2,
            e1_range: 2..2 + l1,
            e2_range: 7..7 + l2,
            t1: 0,
            t2: 1,
            label: 0,
            max_len: 12,
        };
        let scheme = SummaryScheme::new(SummaryKind::EntityMaxPool);
        let (h_s, _) = summarize(&hidden, &ex, &scheme, None);
        for (seg, (lo, hi)) in [(0, (ex.m1_start, ex.m1_end)), (1, (ex.m2_start, ex.m2_end))] {
            for c in 0..5 {
                let expect = (lo..=hi)
                    .map(|r| hidden.get(r, c))
                    .fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(h_s[seg * 5 + c], expect);
                for r in lo..=hi {
                    prop_assert!(h_s[seg * 5 + c] >= hidden.get(r, c));
                }
            }
        }
    }

    #[test]
    fn summaries_ignore_rows_outside_spans(
        values in proptest::collection::vec(-5.0f64..5.0, 48),
        noise in -100.0f64..100.0,
    ) {
        let hidden = Mat::from_vec(12, 4, values);
        let ex = EncodedExample {
            piece_ids: vec![0; 12],
            m1_start: 1,
            m1_end: 3,
            m2_start: 6,
            m2_end: 8,
            e1_range: 2..3,
            e2_range: 7..8,
            t1: 0,
            t2: 0,
            label: 0,
            max_len: 12,
        };
        for kind in [SummaryKind::EntityStart, SummaryKind::EntityMaxPool] {
            let scheme = SummaryScheme::new(kind);
            let (before, _) = summarize(&hidden, &ex, &scheme, None);
            let mut edited = hidden.clone();
            for row in [0usize, 4, 5, 9, 10, 11] {
                for c in 0..4 {
                    edited.set(row, c, noise + (row * 4 + c) as f64);
                }
            }
            let (after, _) = summarize(&edited, &ex, &scheme, None);
            prop_assert_eq!(&before, &after);
        }
    }

    #[test]
    fn argmax_invariant_to_constant_logit_shift(
        weights in proptest::collection::vec(-2.0f64..2.0, 12),
        bias in proptest::collection::vec(-2.0f64..2.0, 3),
        input in proptest::collection::vec(-2.0f64..2.0, 4),
        shift in -50.0f64..50.0,
    ) {
        let mut head = HeadParams::<f64>::zeros(4, 3, None);
        head.w = Mat::from_vec(4, 3, weights);
        head.b = bias;
        let (_, pred) = classify(&head, &input).unwrap();
        for b in head.b.iter_mut() {
            *b += shift;
        }
        let (probs, pred_shifted) = classify(&head, &input).unwrap();
        prop_assert_eq!(pred, pred_shifted);
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn softmax_sums_to_one(logits in proptest::collection::vec(-30.0f64..30.0, 1..10)) {
        let p = softmax_vec(&logits);
        let sum: f64 = p.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }
}
