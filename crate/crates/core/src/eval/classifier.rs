use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::llm::DiscrepancyLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    /// Classes occurring in the gold labels or the predictions.
    pub per_class: BTreeMap<DiscrepancyLabel, ClassScores>,
    /// `confusion[gold][predicted]`, indexed by label order ND, CON, CD, NEI.
    pub confusion: [[usize; 4]; 4],
    pub accuracy: f64,
    pub macro_f1: f64,
}

impl ClassifierReport {
    pub fn write_confusion_csv<W: std::io::Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["gold\\predicted".to_string()];
        header.extend(DiscrepancyLabel::ALL.iter().map(|l| l.short().to_string()));
        w.write_record(&header)?;
        for g in DiscrepancyLabel::ALL {
            let mut row = vec![g.short().to_string()];
            row.extend(self.confusion[g.index()].iter().map(|c| c.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn score_classifier(
    predictions: &[DiscrepancyLabel],
    gold: &[DiscrepancyLabel],
) -> Result<ClassifierReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut confusion = [[0usize; 4]; 4];
    for (p, g) in predictions.iter().zip(gold) {
        confusion[g.index()][p.index()] += 1;
    }
    let mut per_class = BTreeMap::new();
    for l in DiscrepancyLabel::ALL {
        let i = l.index();
        let tp = confusion[i][i];
        let support: usize = confusion[i].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[i]).sum();
        if support == 0 && predicted == 0 {
            continue;
        }
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.insert(
            l,
            ClassScores {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let correct: usize = (0..4).map(|i| confusion[i][i]).sum();
    let macro_f1 = per_class.values().map(|s| s.f1).sum::<f64>() / per_class.len() as f64;
    Ok(ClassifierReport {
        per_class,
        confusion,
        accuracy: ratio(correct, gold.len()),
        macro_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use DiscrepancyLabel::*;

    #[test]
    fn perfect_predictions() {
        let gold = [
            NoDiscrepancy,
            Contradiction,
            CulturalDiscrepancy,
            NotEnoughInfo,
            Contradiction,
        ];
        let r = score_classifier(&gold, &gold).unwrap();
        assert!(r.per_class.values().all(|s| s.f1 == 1.0));
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion[1][1], 2);
    }

    #[test]
    fn constant_predictor_against_uniform_gold() {
        let gold = DiscrepancyLabel::ALL;
        let pred = [CulturalDiscrepancy; 4];
        let r = score_classifier(&pred, &gold).unwrap();
        assert_abs_diff_eq!(r.per_class[&CulturalDiscrepancy].f1, 0.4);
        for l in [NoDiscrepancy, Contradiction, NotEnoughInfo] {
            assert_eq!(r.per_class[&l].f1, 0.0);
        }
        let mut buf = Vec::new();
        r.write_confusion_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("ND,0,0,1,0"));
    }

    #[test]
    fn errors() {
        assert!(matches!(score_classifier(&[], &[]), Err(EvalError::EmptyInput)));
        assert!(matches!(
            score_classifier(&[Contradiction], &[]),
            Err(EvalError::LengthMismatch { .. })
        ));
    }
}
