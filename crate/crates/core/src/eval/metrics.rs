//! Classification metrics.
//!
//! F1 conventions: precision (recall) of a class with no predictions (no
//! gold items) counts as 0; classes absent from both gold and predictions
//! are left out of the macro average.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    pub predicted: usize,
}

/// `K × K` counts, rows gold, columns predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn count(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold][pred]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn gold_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn predicted_totals(&self) -> Vec<u64> {
        let k = self.labels.len();
        (0..k).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Each row divided by its sum; rows without gold items stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|r| {
                let s: u64 = r.iter().sum();
                r.iter()
                    .map(|&c| if s == 0 { 0.0 } else { c as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn class_scores(&self) -> Vec<ClassScores> {
        let gold = self.gold_totals();
        let pred = self.predicted_totals();
        (0..self.labels.len())
            .map(|c| {
                let tp = self.counts[c][c] as f64;
                let precision = if pred[c] == 0 { 0.0 } else { tp / pred[c] as f64 };
                let recall = if gold[c] == 0 { 0.0 } else { tp / gold[c] as f64 };
                let f1 = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                ClassScores {
                    precision,
                    recall,
                    f1,
                    support: gold[c] as usize,
                    predicted: pred[c] as usize,
                }
            })
            .collect()
    }

    pub fn macro_f1(&self) -> f64 {
        let scores = self.class_scores();
        let active: Vec<f64> = scores
            .iter()
            .filter(|s| s.support > 0 || s.predicted > 0)
            .map(|s| s.f1)
            .collect();
        if active.is_empty() {
            return 0.0;
        }
        active.iter().sum::<f64>() / active.len() as f64
    }

    /// CSV grid: header `gold\pred,<labels>`, one row per gold label.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["gold\\pred".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()
    }
}

fn check(gold: &[usize], pred: &[usize], k: usize) -> Result<(), EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    if let Some(&l) = gold.iter().chain(pred).find(|&&l| l >= k) {
        return Err(EvalError::LabelOutOfRange { label: l, classes: k });
    }
    Ok(())
}

pub fn confusion_with_labels(
    gold: &[usize],
    pred: &[usize],
    labels: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    let k = labels.len();
    check(gold, pred, k)?;
    let mut counts = vec![vec![0u64; k]; k];
    for (&g, &p) in gold.iter().zip(pred) {
        counts[g][p] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

pub fn confusion(gold: &[usize], pred: &[usize], k: usize) -> Result<ConfusionMatrix, EvalError> {
    let labels: Vec<String> = (0..k).map(|i| i.to_string()).collect();
    confusion_with_labels(gold, pred, &labels)
}

pub fn macro_f1(gold: &[usize], pred: &[usize], k: usize) -> Result<f64, EvalError> {
    Ok(confusion(gold, pred, k)?.macro_f1())
}

/// Per-class scores, macro-F1 and confusion matrix of one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassScores>,
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn new(gold: &[usize], pred: &[usize], labels: &[String]) -> Result<Self, EvalError> {
        let confusion = confusion_with_labels(gold, pred, labels)?;
        Ok(Self {
            per_class: confusion.class_scores(),
            macro_f1: confusion.macro_f1(),
            confusion,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_inverted() {
        assert_eq!(macro_f1(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap(), 1.0);
        assert_eq!(macro_f1(&[0, 1], &[1, 0], 2).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_two_thirds() {
        let f = macro_f1(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn absent_classes_are_excluded_but_spurious_predictions_count() {
        // class 2 never appears: excluded, so a perfect run scores 1.
        assert_eq!(macro_f1(&[0, 1], &[0, 1], 3).unwrap(), 1.0);
        // class 2 predicted but absent: F1 0 enters the average.
        let f = macro_f1(&[0, 1, 1], &[0, 1, 2], 3).unwrap();
        let expected = (1.0 + 2.0 / 3.0 + 0.0) / 3.0;
        assert!((f - expected).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(macro_f1(&[0], &[0, 1], 2), Err(EvalError::LengthMismatch { .. })));
        assert!(matches!(macro_f1(&[], &[], 2), Err(EvalError::Empty)));
        assert!(matches!(confusion(&[0, 3], &[0, 0], 2), Err(EvalError::LabelOutOfRange { .. })));
    }

    #[test]
    fn confusion_cells() {
        let m = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.count(i, j), u64::from(i == j));
            }
        }
        let m = confusion(&[0, 0], &[1, 1], 2).unwrap();
        assert_eq!(m.counts(), &[vec![0, 2], vec![0, 0]]);
        assert_eq!(m.row_normalized()[0], vec![0.0, 1.0]);
    }

    #[test]
    fn confusion_csv() {
        let labels = vec!["hate".to_string(), "none".to_string()];
        let m = confusion_with_labels(&[0, 1, 1], &[1, 1, 0], &labels).unwrap();
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "gold\\pred,hate,none\nhate,0,1\nnone,1,1\n");
    }
}
