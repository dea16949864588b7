//! Implementations of the pipeline subcommands.
//!
//! Each command resolves its configuration (flags over config file over
//! defaults), validates it fully, computes, and only then writes output
//! files, so a failing run never leaves partial artifacts behind for
//! configuration mistakes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dataq_core::{
    attach_predictions, chart, column_stats, fit_detailed, head_split, labels_from_proba,
    load_csv, load_csv_with, load_model, predict_proba, save_model, score, split_class_warnings,
    to_csv_bytes, write_records_csv, EvalReport, FitResult, LoadOptions, LoadReport, SplitSpec,
    Table, TrainConfig, DEFAULT_LABEL_COLUMN,
};

use crate::config::{
    corruption_config, loops_entry, render_resolved, resolve, resolve_loops, resolve_magnitude,
    resolve_split, resolve_threshold, resolve_training, split_entry, CliError, FileConfig,
    DEFAULT_ROWS, DEFAULT_SEED,
};
use crate::{CorruptArgs, EvaluateArgs, GenerateArgs, PredictArgs, RunArgs, TrainArgs};

pub const PRISTINE_FILE: &str = "pristine.csv";
pub const CORRUPTED_FILE: &str = "corrupted.csv";
pub const RECORDS_FILE: &str = "corruption_records.csv";
pub const MODEL_FILE: &str = "model.json";
pub const TRAINING_LOG_FILE: &str = "training_log.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const CHART_DATA_FILE: &str = "chart.csv";
pub const CHART_SVG_FILE: &str = "chart.svg";
pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.txt";

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", dir.display())))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn report_load_warnings(report: &LoadReport) {
    for column in &report.dropped_columns {
        eprintln!("warning: dropped non-numeric column {column:?}");
    }
}

fn load_labelled(path: &Path) -> Result<Table, CliError> {
    let (table, report) = load_csv(path, Some(DEFAULT_LABEL_COLUMN))?;
    report_load_warnings(&report);
    Ok(table)
}

pub fn generate(args: &GenerateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve(args.common.seed, file.parse("seed")?, DEFAULT_SEED);
    let rows = resolve(args.rows, file.parse("rows")?, DEFAULT_ROWS);
    if rows < 1 {
        return Err(CliError::usage("--rows must be >= 1"));
    }
    ensure_out_dir(&args.common.out_dir)?;
    let table = dataq_core::generate(rows, seed);
    let path = args.common.out_dir.join(PRISTINE_FILE);
    write_bytes(&path, &to_csv_bytes(&table))?;
    println!("wrote {rows} rows to {}", path.display());
    Ok(())
}

pub fn corrupt(args: &CorruptArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve(args.common.seed, file.parse("seed")?, DEFAULT_SEED);
    let loops = resolve_loops(
        args.corruption.corruption_loops,
        args.corruption.corruption_fraction,
        &file,
    )?;
    let magnitude = resolve_magnitude(args.corruption.magnitude.as_deref(), &file)?;

    let (table, report) = load_csv(&args.input, Some(DEFAULT_LABEL_COLUMN))?;
    report_load_warnings(&report);
    let stats = column_stats(&table)?;
    let corrupted = dataq_core::corrupt(&table, &stats, &corruption_config(seed, loops, magnitude))?;

    ensure_out_dir(&args.common.out_dir)?;
    let corrupted_path = args.common.out_dir.join(CORRUPTED_FILE);
    write_bytes(&corrupted_path, &to_csv_bytes(&corrupted.table))?;
    write_records_csv(&corrupted.records, args.common.out_dir.join(RECORDS_FILE))?;

    let labels = corrupted.table.text(DEFAULT_LABEL_COLUMN)?;
    let bad = labels.iter().filter(|l| *l == "bad").count();
    println!(
        "corrupted {} of {} rows ({} rewrites) into {}",
        bad,
        corrupted.table.n_rows(),
        corrupted.records.len(),
        corrupted_path.display()
    );
    Ok(())
}

fn training_log_csv(train_loss: &[f64]) -> Vec<u8> {
    let mut out = String::from("iteration,loss\n");
    for (i, loss) in train_loss.iter().enumerate() {
        let _ = writeln!(out, "{i},{loss}");
    }
    out.into_bytes()
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let seed = resolve(args.common.seed, file.parse("seed")?, DEFAULT_SEED);
    let split = resolve_split(args.split.split_count, args.split.split_fraction, &file)?;
    let training = resolve_training(
        args.training.iterations,
        args.training.depth,
        args.training.learning_rate,
        seed,
        &file,
    )?;

    let table = load_labelled(&args.input)?;
    let (train, test) = head_split(&table, split)?;
    for warning in split_class_warnings(&train, &test) {
        eprintln!("warning: {warning}");
    }
    let FitResult { model, train_loss } = fit_detailed(&train, &training)?;

    ensure_out_dir(&args.common.out_dir)?;
    let model_path = args.common.out_dir.join(MODEL_FILE);
    save_model(&model, &model_path)?;
    write_bytes(
        &args.common.out_dir.join(TRAINING_LOG_FILE),
        &training_log_csv(&train_loss),
    )?;
    println!(
        "trained on {} rows: {model} -> {}",
        train.n_rows(),
        model_path.display()
    );
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let split = resolve_split(args.split.split_count, args.split.split_fraction, &file)?;
    let threshold = resolve_threshold(args.threshold, &file)?;
    let model_path = args
        .model
        .clone()
        .unwrap_or_else(|| args.common.out_dir.join(MODEL_FILE));

    let table = load_labelled(&args.input)?;
    let (_, test) = head_split(&table, split)?;
    let model = load_model(&model_path)?;
    let proba = predict_proba(&model, &test)?;
    let labels = labels_from_proba(&proba, threshold, &model.positive_label)?;
    let predictions = attach_predictions(&test, &labels)?;

    ensure_out_dir(&args.common.out_dir)?;
    let path = args.common.out_dir.join(PREDICTIONS_FILE);
    write_bytes(&path, &to_csv_bytes(&predictions))?;
    println!("predicted {} rows into {}", predictions.n_rows(), path.display());
    Ok(())
}

fn report_outputs(report: &EvalReport) -> (Vec<u8>, Vec<u8>) {
    let mut json = serde_json::to_vec_pretty(report).expect("report serializes");
    json.push(b'\n');
    let text = format!("{report}\n");
    (json, text.into_bytes())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.common.config.as_deref())?;
    let split = match (args.split.split_count, args.split.split_fraction) {
        (None, None) if file.raw("split-count").is_none() && file.raw("split-fraction").is_none() => {
            None
        }
        (count, fraction) => Some(resolve_split(count, fraction, &file)?),
    };

    let (table, load_report) = load_csv_with(
        &args.input,
        LoadOptions {
            label_column: Some(DEFAULT_LABEL_COLUMN),
            keep_text: &[dataq_core::PREDICTION_COLUMN],
        },
    )?;
    report_load_warnings(&load_report);
    let mut report = score(&table)?;
    if let Some(split) = split {
        let n_train = match split {
            SplitSpec::HeadCount(n) => Some(n),
            SplitSpec::HeadFraction(_) => None,
        };
        report = report.with_split(split, n_train);
    }

    ensure_out_dir(&args.common.out_dir)?;
    let (json, text) = report_outputs(&report);
    write_bytes(&args.common.out_dir.join(REPORT_JSON_FILE), &json)?;
    write_bytes(&args.common.out_dir.join(REPORT_TEXT_FILE), &text)?;
    println!("{report}");
    Ok(())
}

/// Fully-resolved `run` configuration.
pub struct RunSettings {
    pub input: Option<PathBuf>,
    pub rows: usize,
    pub seed: u64,
    pub loops: dataq_core::LoopSpec,
    pub magnitude: dataq_core::MagnitudePolicy,
    pub training: TrainConfig,
    pub split: SplitSpec,
    pub threshold: f64,
}

impl RunSettings {
    pub fn resolve(args: &RunArgs) -> Result<RunSettings, CliError> {
        let file = FileConfig::load(args.common.config.as_deref())?;
        let seed = resolve(args.common.seed, file.parse("seed")?, DEFAULT_SEED);
        let input = args
            .input
            .clone()
            .or_else(|| file.raw("input").map(PathBuf::from));
        let rows = resolve(args.rows, file.parse("rows")?, DEFAULT_ROWS);
        if input.is_none() && rows < 1 {
            return Err(CliError::usage("--rows must be >= 1"));
        }
        Ok(RunSettings {
            input,
            rows,
            seed,
            loops: resolve_loops(
                args.corruption.corruption_loops,
                args.corruption.corruption_fraction,
                &file,
            )?,
            magnitude: resolve_magnitude(args.corruption.magnitude.as_deref(), &file)?,
            training: resolve_training(
                args.training.iterations,
                args.training.depth,
                args.training.learning_rate,
                seed,
                &file,
            )?,
            split: resolve_split(args.split.split_count, args.split.split_fraction, &file)?,
            threshold: resolve_threshold(args.threshold, &file)?,
        })
    }

    fn resolved_config_text(&self) -> String {
        let mut entries: Vec<(&str, String)> = Vec::new();
        match &self.input {
            Some(path) => entries.push(("input", path.display().to_string())),
            None => entries.push(("rows", self.rows.to_string())),
        }
        entries.push(("seed", self.seed.to_string()));
        entries.push(loops_entry(self.loops));
        entries.push(("magnitude", self.magnitude.to_string()));
        entries.push(("iterations", self.training.iterations.to_string()));
        entries.push(("depth", self.training.max_depth.to_string()));
        entries.push(("learning-rate", self.training.learning_rate.to_string()));
        entries.push(split_entry(self.split));
        entries.push(("threshold", self.threshold.to_string()));
        render_resolved(&entries)
    }
}

fn chart_data_csv(start_row: usize, proba: &[f64], labels: &[String], predictions: &[String]) -> Vec<u8> {
    let mut out = String::from("row_index,p_bad,label,prediction\n");
    for (i, p) in proba.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", start_row + i, p, labels[i], predictions[i]);
    }
    out.into_bytes()
}

fn prediction_scatter(start_row: usize, proba: &[f64], predictions: &[String]) -> String {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for (i, (&p, label)) in proba.iter().zip(predictions).enumerate() {
        let point = ((start_row + i) as f64, p);
        if label == "bad" {
            bad.push(point);
        } else {
            good.push(point);
        }
    }
    let series = vec![
        chart::Series::new("predicted good", good),
        chart::Series::new("predicted bad", bad),
    ];
    chart::scatter_chart(
        "Predicted row quality",
        "row index",
        "P(bad)",
        &series,
    )
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let settings = RunSettings::resolve(args)?;
    ensure_out_dir(&args.common.out_dir)?;

    // Compute the whole pipeline before writing any artifact.
    let pristine = match &settings.input {
        Some(path) => {
            let (table, report) = load_csv(path, Some(DEFAULT_LABEL_COLUMN))?;
            report_load_warnings(&report);
            table
        }
        None => dataq_core::generate(settings.rows, settings.seed),
    };
    let stats = column_stats(&pristine)?;
    let corrupted = dataq_core::corrupt(
        &pristine,
        &stats,
        &corruption_config(settings.seed, settings.loops, settings.magnitude),
    )?;
    let (train, test) = head_split(&corrupted.table, settings.split)?;
    for warning in split_class_warnings(&train, &test) {
        eprintln!("warning: {warning}");
    }
    let FitResult { model, train_loss } = fit_detailed(&train, &settings.training)?;
    let proba = predict_proba(&model, &test)?;
    let labels = labels_from_proba(&proba, settings.threshold, &model.positive_label)?;
    let predictions = attach_predictions(&test, &labels)?;
    let actual = predictions.text(DEFAULT_LABEL_COLUMN)?.to_vec();
    let report = score(&predictions)?.with_split(settings.split, Some(train.n_rows()));

    let out = &args.common.out_dir;
    if settings.input.is_none() {
        write_bytes(&out.join(PRISTINE_FILE), &to_csv_bytes(&pristine))?;
    }
    write_bytes(&out.join(CORRUPTED_FILE), &to_csv_bytes(&corrupted.table))?;
    write_records_csv(&corrupted.records, out.join(RECORDS_FILE))?;
    save_model(&model, out.join(MODEL_FILE))?;
    write_bytes(&out.join(TRAINING_LOG_FILE), &training_log_csv(&train_loss))?;
    write_bytes(&out.join(PREDICTIONS_FILE), &to_csv_bytes(&predictions))?;
    let (json, text) = report_outputs(&report);
    write_bytes(&out.join(REPORT_JSON_FILE), &json)?;
    write_bytes(&out.join(REPORT_TEXT_FILE), &text)?;
    write_bytes(
        &out.join(CHART_DATA_FILE),
        &chart_data_csv(train.n_rows(), &proba, &actual, &labels),
    )?;
    write_bytes(
        &out.join(CHART_SVG_FILE),
        prediction_scatter(train.n_rows(), &proba, &labels).as_bytes(),
    )?;
    write_bytes(
        &out.join(RESOLVED_CONFIG_FILE),
        settings.resolved_config_text().as_bytes(),
    )?;

    println!("{report}");
    println!("artifacts in {}", out.display());
    Ok(())
}
