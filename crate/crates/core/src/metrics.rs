//! Continuous error metrics, rank-based ROC AUC and confusion-matrix metrics.
//!
//! Undefined quantities (a ratio with a zero denominator, AUC with a single
//! class) are reported as `None`/errors and never coerced to 0 or 1.

use crate::error::{Error, Result};

fn check_pairs(predicted: &[f64], actual: &[f64]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} predictions vs {} actuals",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InsufficientData("no pairs to score".into()));
    }
    Ok(())
}

pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_pairs(predicted, actual)?;
    Ok(predicted.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / predicted.len() as f64)
}

pub fn mse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check_pairs(predicted, actual)?;
    Ok(predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum::<f64>() / predicted.len() as f64)
}

pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    mse(predicted, actual).map(f64::sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredLabel {
    pub score: f64,
    pub label: bool,
}

impl ScoredLabel {
    pub fn new(score: f64, label: bool) -> Self {
        Self { score, label }
    }
}

/// Area under the ROC curve via the Mann-Whitney U statistic with midranks,
/// so tied scores count one half.
pub fn roc_auc(items: &[ScoredLabel]) -> Result<f64> {
    if let Some(bad) = items.iter().find(|i| !i.score.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {}", bad.score)));
    }
    let n_pos = items.iter().filter(|i| i.label).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedAuc(format!("{n_pos} positives and {n_neg} negatives")));
    }

    let mut order: Vec<&ScoredLabel> = items.iter().collect();
    order.sort_by(|a, b| a.score.total_cmp(&b.score));

    // Sum of positive ranks, using the average rank over each tie block.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && order[j + 1].score == order[i].score {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        let positives = order[i..=j].iter().filter(|s| s.label).count();
        rank_sum += mid_rank * positives as f64;
        i = j + 1;
    }

    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

pub fn confusion(predicted: &[bool], actual: &[bool]) -> Result<ConfusionCounts> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} predictions vs {} actuals",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InsufficientData("no pairs to count".into()));
    }
    let mut c = ConfusionCounts::default();
    for (p, a) in predicted.iter().zip(actual) {
        c.add(*p, *a);
    }
    Ok(c)
}

/// Single-threshold metrics. `None` marks an undefined value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassificationMetrics {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn classification_metrics(c: &ConfusionCounts) -> Result<ClassificationMetrics> {
    if c.total() == 0 {
        return Err(Error::InsufficientData("empty confusion matrix".into()));
    }
    let sensitivity = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(ClassificationMetrics {
        accuracy: ratio(c.tp + c.tn, c.total()),
        sensitivity,
        specificity: ratio(c.tn, c.tn + c.fp),
        precision,
        f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairwise_auc(items: &[ScoredLabel]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for p in items.iter().filter(|i| i.label) {
            for n in items.iter().filter(|i| !i.label) {
                pairs += 1.0;
                if p.score > n.score {
                    wins += 1.0;
                } else if p.score == n.score {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn mae_rmse_small() {
        let p = [1.0, 2.0, 4.0];
        let a = [1.0, 2.0, 3.0];
        assert!((mae(&p, &a).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((rmse(&p, &a).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert!(mae(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[]).is_err());
    }

    #[test]
    fn mae_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..100.0)).collect();
        let a: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..100.0)).collect();
        let mut total = 0.0;
        for i in 0..p.len() {
            total += (p[i] - a[i]).abs();
        }
        assert!((mae(&p, &a).unwrap() - total / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn auc_examples() {
        let sep: Vec<_> = [(1.0, false), (2.0, false), (3.0, true), (4.0, true)]
            .iter()
            .map(|&(s, l)| ScoredLabel::new(s, l))
            .collect();
        assert_eq!(roc_auc(&sep).unwrap(), 1.0);
        let ties: Vec<_> = [false, true, false, true, true].iter().map(|&l| ScoredLabel::new(3.0, l)).collect();
        assert_eq!(roc_auc(&ties).unwrap(), 0.5);
        let one_class: Vec<_> = (0..4).map(|i| ScoredLabel::new(i as f64, true)).collect();
        assert!(matches!(roc_auc(&one_class), Err(Error::UndefinedAuc(_))));
        assert!(roc_auc(&[ScoredLabel::new(f64::NAN, true), ScoredLabel::new(0.0, false)]).is_err());
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let items: Vec<_> =
            (0..200).map(|_| ScoredLabel::new(rng.random_range(0..40) as f64, rng.random_bool(0.3))).collect();
        assert!((roc_auc(&items).unwrap() - pairwise_auc(&items)).abs() < 1e-12);
    }

    #[test]
    fn confusion_examples() {
        let c = confusion(&[true, true, false, false], &[true, false, true, false]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 1, tn: 1, fn_: 1 });
        let c = confusion(&[true, false], &[true, false]).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 0, tn: 1, fn_: 0 });
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[true], &[]).is_err());
    }

    #[test]
    fn confusion_partitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p: Vec<bool> = (0..1000).map(|_| rng.random_bool(0.5)).collect();
        let a: Vec<bool> = (0..1000).map(|_| rng.random_bool(0.2)).collect();
        assert_eq!(confusion(&p, &a).unwrap().total(), 1000);
    }

    #[test]
    fn metric_examples() {
        let m = classification_metrics(&ConfusionCounts { tp: 1, fp: 1, tn: 1, fn_: 1 }).unwrap();
        assert_eq!((m.accuracy, m.sensitivity, m.specificity, m.f1), (Some(0.5), Some(0.5), Some(0.5), Some(0.5)));

        let m = classification_metrics(&ConfusionCounts { tp: 0, fp: 0, tn: 5, fn_: 5 }).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.specificity, Some(1.0));
        assert_eq!(m.sensitivity, Some(0.0));

        // precision 0.6, sensitivity 0.3
        let m = classification_metrics(&ConfusionCounts { tp: 3, fp: 2, tn: 0, fn_: 7 }).unwrap();
        assert!((m.precision.unwrap() - 0.6).abs() < 1e-15);
        assert!((m.sensitivity.unwrap() - 0.3).abs() < 1e-15);
        assert!((m.f1.unwrap() - 0.4).abs() < 1e-15);

        assert!(classification_metrics(&ConfusionCounts::default()).is_err());
    }

    fn arb_items() -> impl Strategy<Value = Vec<ScoredLabel>> {
        prop::collection::vec((-50i32..50, any::<bool>()), 2..120)
            .prop_map(|v| v.into_iter().map(|(s, l)| ScoredLabel::new(s as f64 * 0.5, l)).collect())
            .prop_filter("two classes", |v: &Vec<ScoredLabel>| v.iter().any(|i| i.label) && v.iter().any(|i| !i.label))
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_map(items in arb_items()) {
            let mapped: Vec<_> = items.iter().map(|i| ScoredLabel::new((i.score / 10.0).exp() + 3.0, i.label)).collect();
            prop_assert!((roc_auc(&items).unwrap() - roc_auc(&mapped).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn auc_symmetric_under_flip(items in arb_items()) {
            let flipped: Vec<_> = items.iter().map(|i| ScoredLabel::new(-i.score, !i.label)).collect();
            prop_assert!((roc_auc(&items).unwrap() - roc_auc(&flipped).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn rmse_dominates_mae(v in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..100)) {
            let (p, a): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(rmse(&p, &a).unwrap() >= mae(&p, &a).unwrap() - 1e-12);
        }

        #[test]
        fn rmse_equals_mae_for_equal_errors(e in 0.0f64..50.0, n in 1usize..50) {
            let a = vec![1.0; n];
            let p: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 + e } else { 1.0 - e }).collect();
            prop_assert!((rmse(&p, &a).unwrap() - mae(&p, &a).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn metrics_in_unit_interval(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let c = ConfusionCounts { tp, fp, tn, fn_ };
            prop_assume!(c.total() > 0);
            let m = classification_metrics(&c).unwrap();
            for v in [m.accuracy, m.sensitivity, m.specificity, m.precision, m.f1].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
