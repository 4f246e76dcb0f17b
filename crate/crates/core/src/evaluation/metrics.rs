use crate::corpus::{RelationInstance, RelationSchema};
use crate::encoding::{encode_instance, EncodeError};
use crate::math::Real;
use crate::model::FullModel;
use crate::tokenizer::Vocabulary;

use super::EvalError;

/// One scored candidate pair. `skipped` marks pairs whose marked span could
/// not fit the model's window; they are scored as the null class.
#[derive(Debug, Clone)]
pub struct PredictionRecord {
    pub sentence_id: String,
    pub e1: String,
    pub e2: String,
    pub gold: usize,
    pub pred: usize,
    pub skipped: bool,
}

#[derive(Debug, Clone)]
pub struct ClassScores {
    pub class: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub per_class: Vec<ClassScores>,
    pub n_instances: usize,
    pub n_skipped: usize,
}

fn f1_of(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged precision/recall/F1 over the non-null classes: precision
/// counts correct non-null predictions among all non-null predictions,
/// recall among all non-null golds.
pub fn micro_scores(golds: &[usize], preds: &[usize]) -> (f64, f64, f64) {
    assert_eq!(golds.len(), preds.len());
    let mut correct = 0usize;
    let mut predicted = 0usize;
    let mut gold_pos = 0usize;
    for (&g, &p) in golds.iter().zip(preds) {
        if p != 0 {
            predicted += 1;
            if p == g {
                correct += 1;
            }
        }
        if g != 0 {
            gold_pos += 1;
        }
    }
    let p = ratio(correct, predicted);
    let r = ratio(correct, gold_pos);
    (p, r, f1_of(p, r))
}

/// Full report: micro scores plus a one-vs-rest breakdown for every class
/// (including the null class, for the record).
pub fn compute_metrics(
    records: &[PredictionRecord],
    n_classes: usize,
) -> Result<EvalReport, EvalError> {
    let golds: Vec<usize> = records.iter().map(|r| r.gold).collect();
    let preds: Vec<usize> = records.iter().map(|r| r.pred).collect();
    let (micro_precision, micro_recall, micro_f1) = micro_scores(&golds, &preds);

    let mut per_class = Vec::with_capacity(n_classes);
    for class in 0..n_classes {
        let tp = records
            .iter()
            .filter(|r| r.pred == class && r.gold == class)
            .count();
        let predicted = preds.iter().filter(|&&p| p == class).count();
        let support = golds.iter().filter(|&&g| g == class).count();
        let p = ratio(tp, predicted);
        let r = ratio(tp, support);
        per_class.push(ClassScores {
            class,
            precision: p,
            recall: r,
            f1: f1_of(p, r),
            support,
        });
    }
    Ok(EvalReport {
        micro_precision,
        micro_recall,
        micro_f1,
        per_class,
        n_instances: records.len(),
        n_skipped: records.iter().filter(|r| r.skipped).count(),
    })
}

/// Scores every candidate with the model. Pairs too far apart for the
/// window are recorded as null predictions and counted as skipped.
pub fn predict_corpus<T: Real>(
    model: &FullModel<T>,
    instances: &[RelationInstance],
    schema: &RelationSchema,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut out = Vec::with_capacity(instances.len());
    for inst in instances {
        let (pred, skipped) = match encode_instance(
            inst,
            schema,
            vocab,
            model.head_config.marker_scheme,
            max_len,
        ) {
            Ok(ex) => (model.predict(&ex)?.1, false),
            Err(EncodeError::EntitiesTooFar { .. }) => (0, true),
            Err(e) => return Err(e.into()),
        };
        out.push(PredictionRecord {
            sentence_id: inst.sentence.id.clone(),
            e1: inst.e1.id.clone(),
            e2: inst.e2.id.clone(),
            gold: inst.label,
            pred,
            skipped,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SeedSummary {
    pub mean_f1: f64,
    pub std_f1: f64,
    pub per_seed: Vec<f64>,
}

/// Mean of per-seed F1 scores (not F1 of pooled counts), with the
/// population standard deviation.
pub fn aggregate_seeds(per_seed: &[f64]) -> SeedSummary {
    let n = per_seed.len().max(1) as f64;
    let mean = per_seed.iter().sum::<f64>() / n;
    let var = per_seed.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
    SeedSummary {
        mean_f1: mean,
        std_f1: var.sqrt(),
        per_seed: per_seed.to_vec(),
    }
}

/// CSV breakdown: `class,precision,recall,f1,support`, one row per class,
/// named via the schema.
pub fn metrics_csv(report: &EvalReport, schema: &RelationSchema) -> String {
    let mut out = String::from("class,precision,recall,f1,support\n");
    for c in &report.per_class {
        out.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{}\n",
            schema.class_name(c.class),
            c.precision,
            c.recall,
            c.f1,
            c.support
        ));
    }
    out.push_str(&format!(
        "micro,{:.4},{:.4},{:.4},{}\n",
        report.micro_precision, report.micro_recall, report.micro_f1, report.n_instances
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(gold: usize, pred: usize) -> PredictionRecord {
        PredictionRecord {
            sentence_id: "s".into(),
            e1: "a".into(),
            e2: "b".into(),
            gold,
            pred,
            skipped: false,
        }
    }

    #[test]
    fn micro_hand_example() {
        // golds: 1 1 2 0 0 ; preds: 1 2 2 1 0
        // non-null preds: 4, correct: 2 -> P = 0.5
        // non-null golds: 3 -> R = 2/3 ; F1 = 2*0.5*(2/3)/(0.5+2/3) = 4/7
        let golds = [1, 1, 2, 0, 0];
        let preds = [1, 2, 2, 1, 0];
        let (p, r, f1) = micro_scores(&golds, &preds);
        assert!((p - 0.5).abs() < 1e-12);
        assert!((r - 2.0 / 3.0).abs() < 1e-12);
        assert!((f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn all_null_predictions_score_zero() {
        let (p, r, f1) = micro_scores(&[1, 2, 0], &[0, 0, 0]);
        assert_eq!((p, r, f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn perfect_predictions() {
        let (p, r, f1) = micro_scores(&[1, 2, 0, 1], &[1, 2, 0, 1]);
        assert_eq!((p, r, f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn per_class_breakdown() {
        let records = vec![rec(1, 1), rec(1, 2), rec(2, 2), rec(0, 0), rec(0, 2)];
        let report = compute_metrics(&records, 3).unwrap();
        // class 2: tp=1, predicted=3, support=1
        let c2 = &report.per_class[2];
        assert!((c2.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((c2.recall - 1.0).abs() < 1e-12);
        assert_eq!(c2.support, 1);
        // class 1: tp=1, predicted=1, support=2
        let c1 = &report.per_class[1];
        assert!((c1.precision - 1.0).abs() < 1e-12);
        assert!((c1.recall - 0.5).abs() < 1e-12);
        assert_eq!(report.n_instances, 5);
    }

    #[test]
    fn seed_aggregation_is_mean_of_f1() {
        let s = aggregate_seeds(&[0.6, 0.8]);
        assert!((s.mean_f1 - 0.7).abs() < 1e-12);
        assert!((s.std_f1 - 0.1).abs() < 1e-12);
    }

    #[test]
    fn csv_has_header_and_micro_row() {
        let schema = RelationSchema::new(
            vec!["A".into(), "B".into()],
            vec!["R1".into()],
            false,
        )
        .unwrap();
        let report = compute_metrics(&[rec(1, 1), rec(0, 0)], 2).unwrap();
        let csv = metrics_csv(&report, &schema);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "class,precision,recall,f1,support");
        assert!(lines[1].starts_with("NO_RELATION,"));
        assert!(lines[2].starts_with("R1,"));
        assert!(lines[3].starts_with("micro,1.0000,1.0000,1.0000,2"));
    }
}
