//! Train/test splitting, prediction attachment, and quality metrics.
//!
//! The split takes the head of the table without shuffling; that is valid
//! here because corruption placement is already uniformly random. Metrics
//! treat "bad" as the positive class. Metrics whose denominator is zero are
//! reported as absent rather than zero.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{Table, TabularError, BAD, GOOD};

/// Name of the column predictions are attached under.
pub const PREDICTION_COLUMN: &str = "prediction";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("{expected} predictions for {actual} rows")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("column {0:?} already exists")]
    ColumnExists(String),
    #[error("table has no label column")]
    MissingLabel,
    #[error("table has no {PREDICTION_COLUMN:?} column")]
    MissingPrediction,
    #[error("row {row}: {column} value {value:?} is neither \"good\" nor \"bad\"")]
    InvalidClass {
        row: usize,
        column: String,
        value: String,
    },
    #[error("cannot score an empty table")]
    EmptyTable,
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

/// Where to cut the head split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    /// First `n` rows train, the rest test.
    HeadCount(usize),
    /// First `floor(f * n_rows)` rows train, the rest test.
    HeadFraction(f64),
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::HeadCount(3300)
    }
}

impl SplitSpec {
    /// Number of training rows for a table of `n_rows`, validating that both
    /// sides of the split are non-empty.
    pub fn train_rows(&self, n_rows: usize) -> Result<usize, EvalError> {
        let n = match *self {
            SplitSpec::HeadCount(n) => n,
            SplitSpec::HeadFraction(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(EvalError::InvalidSplit(format!(
                        "fraction {f} must be in (0, 1)"
                    )));
                }
                (f * n_rows as f64).floor() as usize
            }
        };
        if n == 0 || n >= n_rows {
            return Err(EvalError::InvalidSplit(format!(
                "{n} training rows leaves no data on one side of a {n_rows}-row table"
            )));
        }
        Ok(n)
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::HeadCount(n) => write!(f, "head_count={n}"),
            SplitSpec::HeadFraction(x) => write!(f, "head_fraction={x}"),
        }
    }
}

/// Split a table into (train, test) at the head boundary, preserving row
/// order on both sides.
pub fn head_split(table: &Table, spec: SplitSpec) -> Result<(Table, Table), EvalError> {
    let n = spec.train_rows(table.n_rows())?;
    Ok((table.head(n), table.tail_from(n)))
}

/// Warnings about split sides whose label column carries a single class
/// (training on such a side will fail).
pub fn split_class_warnings(train: &Table, test: &Table) -> Vec<String> {
    let mut warnings = Vec::new();
    for (side, table) in [("train", train), ("test", test)] {
        let Some(label) = table.label_column() else {
            continue;
        };
        let Ok(cells) = table.text(label) else {
            continue;
        };
        let n_bad = cells.iter().filter(|c| *c == BAD).count();
        if n_bad == 0 || n_bad == cells.len() {
            let class = if n_bad == 0 { GOOD } else { BAD };
            warnings.push(format!(
                "{side} slice has a single-class label column (all {class:?})"
            ));
        }
    }
    warnings
}

/// Append the predicted labels as a trailing "prediction" text column.
pub fn attach_predictions(test: &Table, labels: &[String]) -> Result<Table, EvalError> {
    if labels.len() != test.n_rows() {
        return Err(EvalError::LengthMismatch {
            expected: labels.len(),
            actual: test.n_rows(),
        });
    }
    if test.has_column(PREDICTION_COLUMN) {
        return Err(EvalError::ColumnExists(PREDICTION_COLUMN.to_string()));
    }
    Ok(test.with_text_column(PREDICTION_COLUMN, labels.to_vec())?)
}

/// Confusion counts and derived metrics with "bad" as the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    pub n_test: usize,
    /// Training-side metadata, when the caller knows the split that
    /// produced this test slice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
}

impl EvalReport {
    /// Attach split metadata to a report scored from a bare test table.
    pub fn with_split(mut self, split: SplitSpec, n_train: Option<usize>) -> EvalReport {
        self.split = Some(split);
        self.n_train = n_train;
        self
    }
}

/// Score a test table carrying both its designated label column and a
/// "prediction" column.
pub fn score(test: &Table) -> Result<EvalReport, EvalError> {
    let label_column = test.label_column().ok_or(EvalError::MissingLabel)?;
    let labels = test.text(label_column)?;
    let predictions = match test.text(PREDICTION_COLUMN) {
        Ok(p) => p,
        Err(TabularError::UnknownColumn(_)) => return Err(EvalError::MissingPrediction),
        Err(e) => return Err(e.into()),
    };
    if test.n_rows() == 0 {
        return Err(EvalError::EmptyTable);
    }

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for (row, (label, prediction)) in labels.iter().zip(predictions).enumerate() {
        let actual_bad = class_is_bad(label, row, label_column)?;
        let predicted_bad = class_is_bad(prediction, row, PREDICTION_COLUMN)?;
        match (actual_bad, predicted_bad) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fn_ += 1,
        }
    }

    let n_test = test.n_rows();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(EvalReport {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        accuracy: (tp + tn) as f64 / n_test as f64,
        precision,
        recall,
        f1,
        n_test,
        n_train: None,
        split: None,
    })
}

fn class_is_bad(value: &str, row: usize, column: &str) -> Result<bool, EvalError> {
    match value {
        BAD => Ok(true),
        GOOD => Ok(false),
        other => Err(EvalError::InvalidClass {
            row,
            column: column.to_string(),
            value: other.to_string(),
        }),
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.4}"),
            None => "undefined".to_string(),
        };
        writeln!(f, "test rows:  {}", self.n_test)?;
        if let Some(n_train) = self.n_train {
            writeln!(f, "train rows: {n_train}")?;
        }
        if let Some(split) = self.split {
            writeln!(f, "split:      {split}")?;
        }
        writeln!(f, "accuracy:   {:.4}", self.accuracy)?;
        writeln!(f, "precision:  {}", opt(self.precision))?;
        writeln!(f, "recall:     {}", opt(self.recall))?;
        writeln!(f, "f1:         {}", opt(self.f1))?;
        writeln!(f, "confusion (positive = \"bad\"):")?;
        writeln!(
            f,
            "  tp {:>6}  fn {:>6}",
            self.true_positives, self.false_negatives
        )?;
        write!(
            f,
            "  fp {:>6}  tn {:>6}",
            self.false_positives, self.true_negatives
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;

    fn numbered_table(n: usize) -> Table {
        Table::from_columns(
            vec![(
                "x".to_string(),
                Column::Numeric((0..n).map(|i| Some(i as f64)).collect()),
            )],
            None,
        )
        .unwrap()
    }

    fn labelled_pairs(pairs: &[(&str, &str)]) -> Table {
        Table::from_columns(
            vec![
                (
                    "x".to_string(),
                    Column::Numeric((0..pairs.len()).map(|i| Some(i as f64)).collect()),
                ),
                (
                    "label".to_string(),
                    Column::Text(pairs.iter().map(|(l, _)| l.to_string()).collect()),
                ),
                (
                    "prediction".to_string(),
                    Column::Text(pairs.iter().map(|(_, p)| p.to_string()).collect()),
                ),
            ],
            Some("label"),
        )
        .unwrap()
    }

    #[test]
    fn head_count_splits_in_order() {
        let table = numbered_table(10);
        let (train, test) = head_split(&table, SplitSpec::HeadCount(3)).unwrap();
        assert_eq!(train.n_rows(), 3);
        assert_eq!(test.n_rows(), 7);
        assert_eq!(train.numeric("x").unwrap()[2], Some(2.0));
        assert_eq!(test.numeric("x").unwrap()[0], Some(3.0));
    }

    #[test]
    fn head_fraction_floors() {
        let table = numbered_table(11);
        let (train, test) = head_split(&table, SplitSpec::HeadFraction(0.5)).unwrap();
        assert_eq!(train.n_rows(), 5);
        assert_eq!(test.n_rows(), 6);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let table = numbered_table(10);
        for spec in [
            SplitSpec::HeadCount(0),
            SplitSpec::HeadCount(10),
            SplitSpec::HeadCount(11),
            SplitSpec::HeadFraction(0.0),
            SplitSpec::HeadFraction(1.0),
            SplitSpec::HeadFraction(0.01),
        ] {
            assert!(head_split(&table, spec).is_err(), "{spec:?} should fail");
        }
    }

    #[test]
    fn split_sides_concatenate_to_the_input() {
        let table = numbered_table(17);
        let (train, test) = head_split(&table, SplitSpec::HeadCount(5)).unwrap();
        let mut rebuilt: Vec<Option<f64>> = train.numeric("x").unwrap().to_vec();
        rebuilt.extend_from_slice(test.numeric("x").unwrap());
        assert_eq!(rebuilt, table.numeric("x").unwrap());
    }

    #[test]
    fn single_class_sides_are_warned_about() {
        let all_good = Table::from_columns(
            vec![
                ("x".to_string(), Column::Numeric(vec![Some(1.0), Some(2.0)])),
                (
                    "label".to_string(),
                    Column::Text(vec!["good".to_string(), "good".to_string()]),
                ),
            ],
            Some("label"),
        )
        .unwrap();
        let mixed = Table::from_columns(
            vec![
                ("x".to_string(), Column::Numeric(vec![Some(1.0), Some(2.0)])),
                (
                    "label".to_string(),
                    Column::Text(vec!["good".to_string(), "bad".to_string()]),
                ),
            ],
            Some("label"),
        )
        .unwrap();
        let warnings = split_class_warnings(&all_good, &mixed);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("train"));
        assert!(split_class_warnings(&mixed, &mixed).is_empty());
    }

    #[test]
    fn attach_appends_trailing_prediction_column() {
        let table = numbered_table(3);
        let labels: Vec<String> = ["bad", "good", "bad"].iter().map(|s| s.to_string()).collect();
        let out = attach_predictions(&table, &labels).unwrap();
        let names: Vec<&str> = out.column_names().collect();
        assert_eq!(names, vec!["x", "prediction"]);
        assert_eq!(out.text("prediction").unwrap(), labels.as_slice());
    }

    #[test]
    fn attach_empty_table_works() {
        let table = numbered_table(0);
        let out = attach_predictions(&table, &[]).unwrap();
        assert_eq!(out.n_rows(), 0);
        assert!(out.has_column("prediction"));
    }

    #[test]
    fn attach_rejects_mismatch_and_duplicates() {
        let table = numbered_table(3);
        assert!(matches!(
            attach_predictions(&table, &["bad".to_string()]),
            Err(EvalError::LengthMismatch { .. })
        ));
        let once = attach_predictions(&table, &vec!["good".to_string(); 3]).unwrap();
        assert!(matches!(
            attach_predictions(&once, &vec!["good".to_string(); 3]),
            Err(EvalError::ColumnExists(_))
        ));
    }

    #[test]
    fn scores_the_predicted_output_grid() {
        // The eleven (label, prediction) pairs of the predicted-output grid.
        let pairs = [
            ("bad", "bad"),
            ("bad", "bad"),
            ("bad", "bad"),
            ("bad", "bad"),
            ("good", "good"),
            ("good", "good"),
            ("good", "bad"),
            ("bad", "bad"),
            ("bad", "good"),
            ("good", "good"),
            ("good", "good"),
        ];
        let report = score(&labelled_pairs(&pairs)).unwrap();
        assert_eq!(report.true_positives, 5);
        assert_eq!(report.false_negatives, 1);
        assert_eq!(report.false_positives, 1);
        assert_eq!(report.true_negatives, 4);
        assert_eq!(report.accuracy, 9.0 / 11.0);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let pairs = [("bad", "bad"), ("good", "good"), ("bad", "bad")];
        let report = score(&labelled_pairs(&pairs)).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.false_positives, 0);
        assert_eq!(report.false_negatives, 0);
        assert_eq!(report.precision, Some(1.0));
        assert_eq!(report.recall, Some(1.0));
        assert_eq!(report.f1, Some(1.0));
    }

    #[test]
    fn inverted_predictions_on_balanced_set_score_zero() {
        let pairs: Vec<(&str, &str)> = (0..10)
            .map(|i| {
                if i < 5 {
                    ("good", "bad")
                } else {
                    ("bad", "good")
                }
            })
            .collect();
        let report = score(&labelled_pairs(&pairs)).unwrap();
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.precision, Some(0.0));
        assert_eq!(report.recall, Some(0.0));
        assert_eq!(report.f1, None);
    }

    #[test]
    fn degenerate_denominators_are_absent_not_zero() {
        // No positive predictions and no positive labels.
        let pairs = [("good", "good"), ("good", "good")];
        let report = score(&labelled_pairs(&pairs)).unwrap();
        assert_eq!(report.precision, None);
        assert_eq!(report.recall, None);
        assert_eq!(report.f1, None);
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn score_requires_label_and_prediction() {
        let bare = numbered_table(2);
        assert!(matches!(score(&bare), Err(EvalError::MissingLabel)));

        let labelled = Table::from_columns(
            vec![
                ("x".to_string(), Column::Numeric(vec![Some(1.0)])),
                ("label".to_string(), Column::Text(vec!["good".to_string()])),
            ],
            Some("label"),
        )
        .unwrap();
        assert!(matches!(score(&labelled), Err(EvalError::MissingPrediction)));
    }

    #[test]
    fn score_rejects_unknown_classes() {
        let table = Table::from_columns(
            vec![
                ("x".to_string(), Column::Numeric(vec![Some(1.0)])),
                ("label".to_string(), Column::Text(vec!["good".to_string()])),
                (
                    "prediction".to_string(),
                    Column::Text(vec!["meh".to_string()]),
                ),
            ],
            Some("label"),
        )
        .unwrap();
        assert!(matches!(score(&table), Err(EvalError::InvalidClass { .. })));
    }

    #[test]
    fn score_is_row_permutation_invariant() {
        let pairs = [
            ("bad", "bad"),
            ("good", "bad"),
            ("bad", "good"),
            ("good", "good"),
            ("bad", "bad"),
        ];
        let mut reversed = pairs;
        reversed.reverse();
        assert_eq!(
            score(&labelled_pairs(&pairs)).unwrap(),
            score(&labelled_pairs(&reversed)).unwrap()
        );
    }

    #[test]
    fn report_identities_hold_for_random_vectors() {
        use proptest::prelude::*;
        proptest!(|(pairs in proptest::collection::vec((0..2usize, 0..2usize), 1..60))| {
            let classes = ["good", "bad"];
            let named: Vec<(&str, &str)> =
                pairs.iter().map(|&(l, p)| (classes[l], classes[p])).collect();
            let report = score(&labelled_pairs(&named)).unwrap();
            let sum = report.true_positives
                + report.false_positives
                + report.true_negatives
                + report.false_negatives;
            prop_assert_eq!(sum, report.n_test);
            prop_assert!((0.0..=1.0).contains(&report.accuracy));
            let expected_accuracy = (report.true_positives + report.true_negatives) as f64
                / report.n_test as f64;
            prop_assert_eq!(report.accuracy, expected_accuracy);
            if let Some(p) = report.precision {
                let den = report.true_positives + report.false_positives;
                prop_assert!(den > 0);
                prop_assert_eq!(p, report.true_positives as f64 / den as f64);
            }
            if let Some(r) = report.recall {
                let den = report.true_positives + report.false_negatives;
                prop_assert!(den > 0);
                prop_assert_eq!(r, report.true_positives as f64 / den as f64);
            }
        });
    }

    #[test]
    fn report_serializes_without_null_metrics() {
        let pairs = [("good", "good")];
        let report = score(&labelled_pairs(&pairs)).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        assert!(!json.contains("precision"));
        assert!(!json.contains("null"));
        assert!(json.contains("\"accuracy\":1.0"));
    }
}
