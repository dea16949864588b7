//! Domain-agnostic tabular data quality evaluation.
//!
//! The pipeline: load or generate a numeric CSV dataset, freeze per-column
//! min/max statistics, inject labelled synthetic corruption by pushing
//! sampled cells past those bounds, train an in-repo gradient-boosted
//! decision-tree classifier on the labelled rows, predict good/bad for
//! held-out rows, and report accuracy with full confusion counts. Every
//! stage is seeded and deterministic.

pub mod chart;
pub mod corruptor;
pub mod evaluate;
pub mod gbdt;
pub mod synth;
pub mod tabular;

pub use corruptor::{
    corrupt, expected_bad_fraction, pushed_value, write_records_csv, CorruptError, Corrupted,
    CorruptionConfig, CorruptionRecord, Direction, LoopSpec, MagnitudePolicy,
};
pub use evaluate::{
    attach_predictions, head_split, score, split_class_warnings, EvalError, EvalReport, SplitSpec,
    PREDICTION_COLUMN,
};
pub use gbdt::{
    best_split, fit, fit_detailed, labels_from_proba, load_model, logistic_grad_hess,
    predict_label, predict_proba, save_model, BoostedModel, FitResult, GbdtError, Split,
    TrainConfig, TreeNode, MODEL_FORMAT_VERSION,
};
pub use synth::generate;
pub use tabular::{
    column_stats, load_csv, load_csv_with, to_csv_bytes, write_csv, Column, ColumnStats,
    ColumnStatsEntry, LoadOptions, LoadReport, Table, TabularError, BAD, DEFAULT_LABEL_COLUMN,
    GOOD,
};
