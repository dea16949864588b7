//! Gradient-boosted decision trees for binary quality classification.
//!
//! The trainer minimizes the logistic loss on ±1 labels ("bad" is the
//! positive class): starting from the log-odds of the class prior, each
//! round fits one depth-limited regression tree to the per-row gradients
//! and hessians at the current scores and adds `learning_rate` times its
//! Newton leaf values. Split search is exact greedy with a fixed L2
//! regularizer of 1.0, no subsampling, and learned missing-value routing.
//! Training is a pure function of (table, config).

mod loss;
mod tree;

use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{Table, TabularError, BAD, GOOD};

pub use loss::logistic_grad_hess;
pub use tree::{best_split, Split, TreeNode};

use loss::{grad_hess, logistic_loss, sigmoid};
use tree::{grow_tree, BuiltNode};

/// Model file schema version accepted by [`load_model`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GbdtError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("table has no label column")]
    MissingLabel,
    #[error(
        "training labels are all {0:?}: gradient boosting needs examples of both classes \
         (single-class label column)"
    )]
    SingleClass(String),
    #[error("training needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("table has no numeric feature columns")]
    NoFeatures,
    #[error("score is not finite: {0}")]
    NonFiniteScore(f64),
    #[error("table is missing feature column {0:?}")]
    MissingFeature(String),
    #[error("threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("failed to access model file {path}: {source}")]
    ModelIo {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed model file {path}: {source}")]
    ModelFormat {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unsupported model file version {found} (expected {MODEL_FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of boosting rounds (one tree per round).
    pub iterations: usize,
    /// Shrinkage applied to every tree's contribution.
    pub learning_rate: f64,
    /// Maximum number of split levels per tree.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Reserved for sampling variants; the exact greedy trainer is
    /// deterministic and does not consume it.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 500,
            learning_rate: 0.1,
            max_depth: 6,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GbdtError> {
        if self.iterations < 1 {
            return Err(GbdtError::InvalidConfig("iterations must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(GbdtError::InvalidConfig(format!(
                "learning rate {} must be in (0, 1]",
                self.learning_rate
            )));
        }
        if self.max_depth < 1 {
            return Err(GbdtError::InvalidConfig("max depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trained ensemble: base score plus shrunken tree outputs, self-contained
/// after serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    /// Log-odds of the positive class prior on the training data.
    pub base_score: f64,
    pub trees: Vec<TreeNode>,
    pub learning_rate: f64,
    /// Numeric feature columns in training-table order.
    pub feature_names: Vec<String>,
    /// Label treated as the positive class ("bad").
    pub positive_label: String,
}

/// [`fit`] output plus the mean training loss trace: entry 0 is the loss at
/// the base score, entry i the loss after adding tree i.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: BoostedModel,
    pub train_loss: Vec<f64>,
}

/// Train a boosted model on the table's numeric columns against its label
/// column. See [`fit_detailed`] for the loss trace.
pub fn fit(table: &Table, config: &TrainConfig) -> Result<BoostedModel, GbdtError> {
    fit_detailed(table, config).map(|r| r.model)
}

/// Train a boosted model and record the per-iteration mean training loss.
pub fn fit_detailed(table: &Table, config: &TrainConfig) -> Result<FitResult, GbdtError> {
    config.validate()?;
    let label_column = table.label_column().ok_or(GbdtError::MissingLabel)?;
    let n_rows = table.n_rows();
    if n_rows < 2 {
        return Err(GbdtError::TooFewRows(n_rows));
    }
    let feature_names: Vec<String> = table
        .numeric_column_names()
        .into_iter()
        .map(str::to_string)
        .collect();
    if feature_names.is_empty() {
        return Err(GbdtError::NoFeatures);
    }
    let columns: Vec<&[Option<f64>]> = feature_names
        .iter()
        .map(|name| table.numeric(name).expect("numeric column"))
        .collect();

    let labels = table.text(label_column)?;
    let n_bad = labels.iter().filter(|l| *l == BAD).count();
    if n_bad == 0 {
        return Err(GbdtError::SingleClass(GOOD.to_string()));
    }
    if n_bad == n_rows {
        return Err(GbdtError::SingleClass(BAD.to_string()));
    }
    let targets: Vec<f64> = labels
        .iter()
        .map(|l| if l == BAD { 1.0 } else { -1.0 })
        .collect();

    let prior = n_bad as f64 / n_rows as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let mut scores = vec![base_score; n_rows];
    let mut grad = vec![0.0; n_rows];
    let mut hess = vec![0.0; n_rows];
    let mut trees = Vec::with_capacity(config.iterations);
    let mut train_loss = Vec::with_capacity(config.iterations + 1);
    train_loss.push(mean_loss(&targets, &scores));

    for _ in 0..config.iterations {
        for i in 0..n_rows {
            let (g, h) = grad_hess(targets[i], scores[i]);
            grad[i] = g;
            hess[i] = h;
        }
        let tree = grow_tree(
            (0..n_rows).collect(),
            &columns,
            &grad,
            &hess,
            config.max_depth,
            config.min_samples_leaf,
        );
        for (i, score) in scores.iter_mut().enumerate() {
            *score += config.learning_rate * tree.value_for_row(&columns, i);
        }
        train_loss.push(mean_loss(&targets, &scores));
        trees.push(tree.to_named(&feature_names));
    }

    Ok(FitResult {
        model: BoostedModel {
            base_score,
            trees,
            learning_rate: config.learning_rate,
            feature_names,
            positive_label: BAD.to_string(),
        },
        train_loss,
    })
}

fn mean_loss(targets: &[f64], scores: &[f64]) -> f64 {
    let total: f64 = targets
        .iter()
        .zip(scores)
        .map(|(&y, &f)| logistic_loss(y, f))
        .sum();
    total / targets.len() as f64
}

/// Per-row probability of the positive class:
/// `sigma(base_score + learning_rate * sum of tree outputs)`.
pub fn predict_proba(model: &BoostedModel, table: &Table) -> Result<Vec<f64>, GbdtError> {
    let columns: Vec<&[Option<f64>]> = model
        .feature_names
        .iter()
        .map(|name| {
            table
                .numeric(name)
                .map_err(|_| GbdtError::MissingFeature(name.clone()))
        })
        .collect::<Result<_, _>>()?;
    let built: Vec<BuiltNode> = model
        .trees
        .iter()
        .map(|t| {
            BuiltNode::from_named(t, &model.feature_names)
                .ok_or_else(|| GbdtError::MissingFeature(unknown_feature(t, &model.feature_names)))
        })
        .collect::<Result<_, _>>()?;

    let mut out = Vec::with_capacity(table.n_rows());
    for row in 0..table.n_rows() {
        let mut score = model.base_score;
        for tree in &built {
            score += model.learning_rate * tree.value_for_row(&columns, row);
        }
        out.push(sigmoid(score));
    }
    Ok(out)
}

fn unknown_feature(node: &TreeNode, names: &[String]) -> String {
    match node {
        TreeNode::Leaf { .. } => String::new(),
        TreeNode::Internal {
            feature,
            left,
            right,
            ..
        } => {
            if !names.contains(feature) {
                feature.clone()
            } else {
                let l = unknown_feature(left, names);
                if l.is_empty() {
                    unknown_feature(right, names)
                } else {
                    l
                }
            }
        }
    }
}

/// Hard labels: "bad" iff `P(bad) >= threshold`, else "good".
pub fn predict_label(
    model: &BoostedModel,
    table: &Table,
    threshold: f64,
) -> Result<Vec<String>, GbdtError> {
    let proba = predict_proba(model, table)?;
    labels_from_proba(&proba, threshold, &model.positive_label)
}

/// Map probabilities to hard labels with the `>=` boundary convention.
pub fn labels_from_proba(
    proba: &[f64],
    threshold: f64,
    positive_label: &str,
) -> Result<Vec<String>, GbdtError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(GbdtError::InvalidThreshold(threshold));
    }
    Ok(proba
        .iter()
        .map(|&p| {
            if p >= threshold {
                positive_label.to_string()
            } else {
                GOOD.to_string()
            }
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    base_score: f64,
    learning_rate: f64,
    positive_label: String,
    feature_names: Vec<String>,
    trees: Vec<TreeNode>,
}

/// Serialize a model to a versioned JSON document. Floats keep full
/// round-trip precision, so a reloaded model predicts bit-identically.
pub fn save_model(model: &BoostedModel, path: impl AsRef<Path>) -> Result<(), GbdtError> {
    let path = path.as_ref();
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        base_score: model.base_score,
        learning_rate: model.learning_rate,
        positive_label: model.positive_label.clone(),
        feature_names: model.feature_names.clone(),
        trees: model.trees.clone(),
    };
    let mut payload = serde_json::to_vec_pretty(&file).expect("model serializes");
    payload.push(b'\n');
    std::fs::write(path, payload).map_err(|source| GbdtError::ModelIo {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BoostedModel, GbdtError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let payload = std::fs::read(path).map_err(|source| GbdtError::ModelIo {
        path: display.clone(),
        source,
    })?;

    // Check the version before committing to the full schema so an
    // unsupported version is reported as such, not as a shape mismatch.
    #[derive(Deserialize)]
    struct VersionOnly {
        version: u32,
    }
    let version: VersionOnly =
        serde_json::from_slice(&payload).map_err(|source| GbdtError::ModelFormat {
            path: display.clone(),
            source,
        })?;
    if version.version != MODEL_FORMAT_VERSION {
        return Err(GbdtError::UnsupportedVersion {
            found: version.version,
        });
    }

    let file: ModelFile =
        serde_json::from_slice(&payload).map_err(|source| GbdtError::ModelFormat {
            path: display,
            source,
        })?;
    Ok(BoostedModel {
        base_score: file.base_score,
        trees: file.trees,
        learning_rate: file.learning_rate,
        feature_names: file.feature_names,
        positive_label: file.positive_label,
    })
}

impl fmt::Display for BoostedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} trees, lr {}, base {:.6}, features [{}]",
            self.trees.len(),
            self.learning_rate,
            self.base_score,
            self.feature_names.join(", ")
        )
    }
}
