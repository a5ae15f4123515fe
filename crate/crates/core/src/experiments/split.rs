//! Train/test split rules and the label-access-guarded test partition.

use crate::error::{CoreError, Result};
use crate::features::FeatureMatrix;
use crate::numeric::{Matrix, RngStream};
use std::cell::Cell;

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// Clips 1-9 are training data, every other clip is test data.
    SeedStyle,
    /// Random 90/10 row split; labels are ratings binarized at the
    /// threshold (rating > threshold -> high = 1, otherwise low = 0).
    DeapStyle { threshold: f64 },
}

impl SplitRule {
    pub fn deap_default() -> Self {
        SplitRule::DeapStyle { threshold: 5.0 }
    }
}

/// Row indices of the train and test partitions. Computed once from the
/// metadata so paired modalities always split identically.
pub fn split_indices(
    fm: &FeatureMatrix,
    rule: &SplitRule,
    rng: &mut RngStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    match rule {
        SplitRule::SeedStyle => {
            if fm.meta.iter().all(|m| m.clip == 0) {
                return Err(CoreError::Data(
                    "clip-based split needs clip metadata, all clips are 0".into(),
                ));
            }
            let (train, test): (Vec<usize>, Vec<usize>) =
                (0..fm.rows()).partition(|&r| (1..=9).contains(&fm.meta[r].clip));
            if train.is_empty() || test.is_empty() {
                return Err(CoreError::Data(format!(
                    "clip-based split is degenerate: {} train rows, {} test rows",
                    train.len(),
                    test.len()
                )));
            }
            Ok((train, test))
        }
        SplitRule::DeapStyle { .. } => {
            let n = fm.rows();
            if n < 10 {
                return Err(CoreError::Data(format!(
                    "random 90/10 split needs >= 10 rows, have {n}"
                )));
            }
            let mut idx: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut idx);
            let n_test = (n as f64 * 0.1).round() as usize;
            let test = idx.split_off(n - n_test);
            Ok((idx, test))
        }
    }
}

/// Applies a split rule, binarizing rating labels for the random-split
/// rule. Returns (train, test).
pub fn apply_split(
    fm: &FeatureMatrix,
    rule: &SplitRule,
    rng: &mut RngStream,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let fm = match rule {
        SplitRule::DeapStyle { threshold } => binarize_labels(fm, *threshold)?,
        SplitRule::SeedStyle => fm.clone(),
    };
    let (train, test) = split_indices(&fm, rule, rng)?;
    Ok((fm.select_rows(&train), fm.select_rows(&test)))
}

/// Rating > threshold becomes class 1 (high), otherwise class 0 (low).
pub fn binarize_labels(fm: &FeatureMatrix, threshold: f64) -> Result<FeatureMatrix> {
    let labels: Vec<f64> = fm
        .labels
        .iter()
        .map(|&r| if r > threshold { 1.0 } else { 0.0 })
        .collect();
    FeatureMatrix::new(fm.names.clone(), fm.values.clone(), labels, fm.meta.clone())
}

/// The evaluation result a [`TestPartition`] releases in exchange for a
/// full prediction list.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub accuracy: f64,
    pub classes: Vec<i64>,
    /// row-normalized: entry (i, j) is the fraction of true-class-i rows
    /// predicted as class j; rows for classes absent from the truth are
    /// all zero
    pub confusion: Matrix,
    /// fraction of test rows in each true class
    pub priors: Vec<f64>,
    pub predictions: Vec<i64>,
    pub truth: Vec<i64>,
}

/// Holds the test rows with the labels sealed off: the only way to read
/// them is to hand over a complete prediction list, and every such
/// exchange is counted. Fitting on test labels therefore cannot happen
/// silently.
#[derive(Debug)]
pub struct TestPartition {
    features: FeatureMatrix,
    truth: Vec<i64>,
    classes: Vec<i64>,
    evaluations: Cell<usize>,
}

impl TestPartition {
    /// `classes` is the class set seen in training; test labels outside
    /// it are an error at evaluation time.
    pub fn new(test: FeatureMatrix, classes: Vec<i64>) -> Self {
        let truth = test.class_labels();
        let features = FeatureMatrix {
            labels: vec![0.0; test.rows()],
            ..test
        };
        TestPartition {
            features,
            truth,
            classes,
            evaluations: Cell::new(0),
        }
    }

    /// Feature rows with labels blanked out.
    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    /// How many times the labels have been released.
    pub fn evaluations(&self) -> usize {
        self.evaluations.get()
    }

    pub fn evaluate(&self, predictions: &[i64]) -> Result<Evaluation> {
        if predictions.len() != self.truth.len() {
            return Err(CoreError::InvalidArgument(format!(
                "evaluate: {} predictions for {} test rows",
                predictions.len(),
                self.truth.len()
            )));
        }
        self.evaluations.set(self.evaluations.get() + 1);
        let confusion = confusion_matrix(predictions, &self.truth, &self.classes)?;
        let hits = predictions
            .iter()
            .zip(&self.truth)
            .filter(|(p, t)| p == t)
            .count();
        let priors: Vec<f64> = self
            .classes
            .iter()
            .map(|c| self.truth.iter().filter(|&t| t == c).count() as f64 / self.truth.len() as f64)
            .collect();
        Ok(Evaluation {
            accuracy: hits as f64 / self.truth.len() as f64,
            classes: self.classes.clone(),
            confusion,
            priors,
            predictions: predictions.to_vec(),
            truth: self.truth.clone(),
        })
    }
}

/// Row-normalized confusion matrix over the given class set: entry
/// (i, j) is the fraction of true-class-i rows predicted as class j.
pub fn confusion_matrix(predictions: &[i64], labels: &[i64], classes: &[i64]) -> Result<Matrix> {
    if predictions.len() != labels.len() {
        return Err(CoreError::InvalidArgument(
            "confusion: prediction/label length mismatch".into(),
        ));
    }
    let index = |l: i64| -> Result<usize> {
        classes
            .iter()
            .position(|&c| c == l)
            .ok_or_else(|| CoreError::Data(format!("label {l} outside the class set {classes:?}")))
    };
    let k = classes.len();
    let mut counts = vec![0usize; k * k];
    let mut row_totals = vec![0usize; k];
    for (&p, &t) in predictions.iter().zip(labels) {
        let (pi, ti) = (index(p)?, index(t)?);
        counts[ti * k + pi] += 1;
        row_totals[ti] += 1;
    }
    let mut m = Matrix::zeros(k, k);
    for i in 0..k {
        if row_totals[i] == 0 {
            continue;
        }
        for j in 0..k {
            m.set(i, j, counts[i * k + j] as f64 / row_totals[i] as f64)?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::synth::{generate_synthetic, SynthSpec};
    use crate::features::RowMeta;

    fn ratings_fm(n: usize) -> FeatureMatrix {
        FeatureMatrix::new(
            vec!["f0".into()],
            Matrix::from_vec(n, 1, (0..n).map(|i| i as f64 / n as f64).collect()).unwrap(),
            (0..n).map(|i| 1.0 + 8.0 * (i as f64 / n as f64)).collect(),
            (0..n)
                .map(|i| RowMeta {
                    id: format!("r{i}"),
                    subject: "s".into(),
                    clip: (i as u32 % 15) + 1,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn clip_split_takes_first_nine_clips() {
        let (eeg, _) = generate_synthetic(&SynthSpec::default()).unwrap();
        let mut rng = RngStream::new(0);
        let (train, test) = apply_split(&eeg, &SplitRule::SeedStyle, &mut rng).unwrap();
        assert!(train.meta.iter().all(|m| (1..=9).contains(&m.clip)));
        assert!(test.meta.iter().all(|m| (10..=15).contains(&m.clip)));
        assert_eq!(train.rows() + test.rows(), eeg.rows());
    }

    #[test]
    fn random_split_is_ninety_ten_and_disjoint() {
        let fm = ratings_fm(1000);
        let mut rng = RngStream::new(3);
        let (train, test) = split_indices(&fm, &SplitRule::deap_default(), &mut rng).unwrap();
        assert_eq!(train.len(), 900);
        assert_eq!(test.len(), 100);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 1000);
    }

    #[test]
    fn rating_boundary() {
        let fm = FeatureMatrix::new(
            vec!["f0".into()],
            Matrix::from_vec(2, 1, vec![0.0, 1.0]).unwrap(),
            vec![5.0, 5.1],
            vec![
                RowMeta {
                    id: "a".into(),
                    subject: "s".into(),
                    clip: 1,
                },
                RowMeta {
                    id: "b".into(),
                    subject: "s".into(),
                    clip: 2,
                },
            ],
        )
        .unwrap();
        let bin = binarize_labels(&fm, 5.0).unwrap();
        assert_eq!(bin.class_labels(), vec![0, 1]);
    }

    #[test]
    fn missing_clip_metadata_is_an_error() {
        let mut fm = ratings_fm(20);
        for m in &mut fm.meta {
            m.clip = 0;
        }
        let mut rng = RngStream::new(0);
        assert!(apply_split(&fm, &SplitRule::SeedStyle, &mut rng).is_err());
    }

    #[test]
    fn perfect_predictions_give_identity_confusion() {
        let labels = vec![0i64, 1, 2, 0, 1, 2];
        let m = confusion_matrix(&labels, &labels, &[0, 1, 2]).unwrap();
        assert_eq!(m, Matrix::identity(3));
    }

    #[test]
    fn single_class_truth_gives_one_nonzero_row() {
        let truth = vec![1i64; 4];
        let preds = vec![0i64, 1, 2, 1];
        let m = confusion_matrix(&preds, &truth, &[0, 1, 2]).unwrap();
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(m.row(1), &[0.25, 0.5, 0.25]);
        assert_eq!(m.row(2), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn unknown_label_is_an_error() {
        assert!(confusion_matrix(&[0, 7], &[0, 1], &[0, 1]).is_err());
    }

    #[test]
    fn partition_counts_label_releases_and_hides_labels() {
        let (eeg, _) = generate_synthetic(&SynthSpec::default()).unwrap();
        let truth = eeg.class_labels();
        let part = TestPartition::new(eeg, vec![0, 1, 2]);
        assert_eq!(part.evaluations(), 0);
        assert!(part.features().labels.iter().all(|&l| l == 0.0));
        let eval = part.evaluate(&truth).unwrap();
        assert_eq!(eval.accuracy, 1.0);
        assert_eq!(part.evaluations(), 1);
        // accuracy consistent with priors-weighted confusion diagonal
        let diag: f64 = (0..3)
            .map(|i| eval.priors[i] * eval.confusion.get(i, i))
            .sum();
        assert!((eval.accuracy - diag).abs() < 1e-12);
    }
}
