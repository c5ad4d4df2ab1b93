use serde::Serialize;

use super::EvalError;
use crate::corpus::AppraisalVector;

/// Precision, recall and F1 of one class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences.
    pub support: usize,
    /// Set when precision or recall had a zero denominator and was scored 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Counts {
    pub fn score(&self) -> ClassScore {
        let (precision, up) = ratio(self.tp, self.tp + self.fp);
        let (recall, ur) = ratio(self.tp, self.tp + self.fn_);
        ClassScore {
            precision,
            recall,
            f1: f1(precision, recall),
            support: self.tp + self.fn_,
            undefined: up || ur,
        }
    }
}

/// Per-class scores with macro (unweighted class mean) and micro (pooled
/// counts) averages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub per_class: Vec<ClassScore>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
}

impl Metrics {
    pub fn from_counts(counts: &[Counts]) -> Self {
        let per_class: Vec<ClassScore> = counts.iter().map(Counts::score).collect();
        let n = per_class.len().max(1) as f64;
        let pooled = counts.iter().fold(Counts::default(), |a, c| Counts {
            tp: a.tp + c.tp,
            fp: a.fp + c.fp,
            fn_: a.fn_ + c.fn_,
        });
        let micro = pooled.score();
        Metrics {
            macro_precision: per_class.iter().map(|c| c.precision).sum::<f64>() / n,
            macro_recall: per_class.iter().map(|c| c.recall).sum::<f64>() / n,
            macro_f1: per_class.iter().map(|c| c.f1).sum::<f64>() / n,
            micro_precision: micro.precision,
            micro_recall: micro.recall,
            micro_f1: micro.f1,
            per_class,
        }
    }

    /// Element-wise arithmetic mean. Support is summed; a class is flagged
    /// when any input flagged it.
    pub fn mean(items: &[Metrics]) -> Option<Metrics> {
        let first = items.first()?;
        let n = items.len() as f64;
        let avg = |f: &dyn Fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        let per_class = (0..first.per_class.len())
            .map(|c| ClassScore {
                precision: avg(&|m| m.per_class[c].precision),
                recall: avg(&|m| m.per_class[c].recall),
                f1: avg(&|m| m.per_class[c].f1),
                support: items.iter().map(|m| m.per_class[c].support).sum(),
                undefined: items.iter().any(|m| m.per_class[c].undefined),
            })
            .collect();
        Some(Metrics {
            per_class,
            macro_precision: avg(&|m| m.macro_precision),
            macro_recall: avg(&|m| m.macro_recall),
            macro_f1: avg(&|m| m.macro_f1),
            micro_precision: avg(&|m| m.micro_precision),
            micro_recall: avg(&|m| m.micro_recall),
            micro_f1: avg(&|m| m.micro_f1),
        })
    }

    pub fn undefined_classes(&self) -> Vec<usize> {
        (0..self.per_class.len()).filter(|&c| self.per_class[c].undefined).collect()
    }
}

/// Single-label metrics over classes `0..n_classes`.
pub fn compute_metrics(gold: &[usize], predicted: &[usize], n_classes: usize) -> Result<Metrics, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(gold.len(), predicted.len()));
    }
    let mut counts = vec![Counts::default(); n_classes];
    for (&g, &p) in gold.iter().zip(predicted) {
        if g == p {
            counts[g].tp += 1;
        } else {
            counts[p].fp += 1;
            counts[g].fn_ += 1;
        }
    }
    Ok(Metrics::from_counts(&counts))
}

/// Multi-label metrics with one class per appraisal dimension.
pub fn compute_multilabel_metrics(gold: &[AppraisalVector], predicted: &[AppraisalVector]) -> Result<Metrics, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(gold.len(), predicted.len()));
    }
    let mut counts = [Counts::default(); 7];
    for (g, p) in gold.iter().zip(predicted) {
        for (c, (gv, pv)) in counts.iter_mut().zip(g.flags().into_iter().zip(p.flags())) {
            match (gv, pv) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(Metrics::from_counts(&counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Rng;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let gold = [0, 1, 2, 3, 4, 5, 6, 0];
        let m = compute_metrics(&gold, &gold, 7).unwrap();
        assert_eq!(m.micro_f1, 1.0);
        assert_eq!(m.macro_f1, 1.0);
        assert!(m.per_class.iter().all(|c| c.precision == 1.0 && c.recall == 1.0));
    }

    #[test]
    fn hand_confusion_table() {
        // class 0: one hit, one false alarm, one miss
        let gold = [0, 0, 1, 1];
        let pred = [0, 1, 0, 1];
        let m = compute_metrics(&gold, &pred, 2).unwrap();
        assert_eq!(m.per_class[0].precision, 0.5);
        assert_eq!(m.per_class[0].recall, 0.5);
        assert_eq!(m.per_class[0].f1, 0.5);
    }

    #[test]
    fn absent_class_is_zero_and_flagged() {
        let m = compute_metrics(&[0, 1], &[0, 1], 3).unwrap();
        assert_eq!(m.per_class[2], ClassScore { undefined: true, ..ClassScore::default() });
        assert_eq!(m.undefined_classes(), [2]);
        assert!((m.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(compute_metrics(&[0], &[], 2), Err(EvalError::LengthMismatch(1, 0))));
    }

    #[test]
    fn multilabel_pools_dimensions() {
        let g = [AppraisalVector::from_code(0b011), AppraisalVector::from_code(0b100)];
        let p = [AppraisalVector::from_code(0b001), AppraisalVector::from_code(0b110)];
        let m = compute_multilabel_metrics(&g, &p).unwrap();
        // tp = 2, fp = 1, fn = 1
        assert!((m.micro_precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.micro_recall - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class[1].recall, 0.0);
        assert_eq!(m.per_class[1].precision, 0.0);
    }

    #[test]
    fn mean_of_cells() {
        let a = compute_metrics(&[0, 1], &[0, 1], 2).unwrap();
        let b = compute_metrics(&[0, 1], &[1, 0], 2).unwrap();
        let m = Metrics::mean(&[a, b]).unwrap();
        assert_eq!(m.micro_f1, 0.5);
        assert_eq!(m.per_class[0].support, 2);
        assert!(Metrics::mean(&[]).is_none());
    }

    #[test]
    fn micro_f1_equals_accuracy_on_random_predictions() {
        let mut rng = Rng::new(31);
        for _ in 0..200 {
            let n = 1 + rng.below(300);
            let gold: Vec<usize> = (0..n).map(|_| rng.below(7)).collect();
            let pred: Vec<usize> = (0..n).map(|_| rng.below(7)).collect();
            let acc = gold.iter().zip(&pred).filter(|(a, b)| a == b).count() as f64 / n as f64;
            let m = compute_metrics(&gold, &pred, 7).unwrap();
            assert!((m.micro_f1 - acc).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn scores_are_bounded_and_f1_is_harmonic(
            pairs in proptest::collection::vec((0usize..7, 0usize..7), 1..200),
        ) {
            let (gold, pred): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let m = compute_metrics(&gold, &pred, 7).unwrap();
            for c in &m.per_class {
                for v in [c.precision, c.recall, c.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                let expected = if c.precision + c.recall == 0.0 {
                    0.0
                } else {
                    2.0 * c.precision * c.recall / (c.precision + c.recall)
                };
                prop_assert!((c.f1 - expected).abs() < 1e-15);
            }
            for v in [m.macro_f1, m.micro_f1, m.macro_precision, m.micro_recall] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
