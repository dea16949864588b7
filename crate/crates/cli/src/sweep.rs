//! Parameter sweep: a seeded pipeline per grid cell, results as CSV plus
//! accuracy and scatter charts.
//!
//! Cells enumerate the cartesian product in the order loop fraction,
//! magnitude, iterations, depth; the seed of repetition `r` of cell `c` is
//! `base_seed + c * repetitions + r`. The sweep measures how accuracy moves
//! across corruption regimes; it asserts nothing about the curve.

use std::fmt::Write as _;

use dataq_core::{
    attach_predictions, chart, column_stats, corrupt, fit, generate, head_split,
    labels_from_proba, predict_proba, score, CorruptionConfig, LoopSpec, MagnitudePolicy,
    SplitSpec, TrainConfig, DEFAULT_LABEL_COLUMN,
};

use crate::commands::RESOLVED_CONFIG_FILE;
use crate::config::{render_resolved, resolve, CliError, FileConfig, DEFAULT_SEED};
use crate::SweepArgs;

pub const RESULTS_FILE: &str = "sweep_results.csv";
pub const ACCURACY_CHART_FILE: &str = "accuracy_vs_fraction.svg";
pub const SCATTER_CHART_FILE: &str = "scatter.svg";

const DEFAULT_SWEEP_ROWS: usize = 2000;
const DEFAULT_FRACTIONS: [f64; 4] = [0.05, 0.1, 0.25, 0.5];

struct SweepSettings {
    rows: usize,
    base_seed: u64,
    repetitions: usize,
    loop_fractions: Vec<f64>,
    magnitudes: Vec<MagnitudePolicy>,
    iterations: Vec<usize>,
    depths: Vec<usize>,
}

impl SweepSettings {
    fn resolve(args: &SweepArgs) -> Result<SweepSettings, CliError> {
        let file = FileConfig::load(args.common.config.as_deref())?;
        let magnitudes = match args
            .magnitudes
            .clone()
            .or(file.parse_list::<String>("magnitudes")?)
        {
            None => vec![MagnitudePolicy::PaperExact],
            Some(raw) => raw
                .iter()
                .map(|s| s.parse::<MagnitudePolicy>().map_err(CliError::Usage))
                .collect::<Result<_, _>>()?,
        };
        let settings = SweepSettings {
            rows: resolve(args.rows, file.parse("rows")?, DEFAULT_SWEEP_ROWS),
            base_seed: resolve(args.common.seed, file.parse("seed")?, DEFAULT_SEED),
            repetitions: resolve(args.repetitions, file.parse("repetitions")?, 1),
            loop_fractions: resolve(
                args.loop_fractions.clone(),
                file.parse_list("loop-fractions")?,
                DEFAULT_FRACTIONS.to_vec(),
            ),
            magnitudes,
            iterations: resolve(
                args.iterations.clone(),
                file.parse_list("iterations")?,
                vec![TrainConfig::default().iterations],
            ),
            depths: resolve(
                args.depths.clone(),
                file.parse_list("depths")?,
                vec![TrainConfig::default().max_depth],
            ),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.rows < 4 {
            return Err(CliError::usage("sweep needs --rows >= 4"));
        }
        if self.repetitions < 1 {
            return Err(CliError::usage("--repetitions must be >= 1"));
        }
        if self.loop_fractions.is_empty()
            || self.magnitudes.is_empty()
            || self.iterations.is_empty()
            || self.depths.is_empty()
        {
            return Err(CliError::usage("sweep grid must be non-empty on every axis"));
        }
        for &f in &self.loop_fractions {
            if !f.is_finite() || f < 0.0 {
                return Err(CliError::usage(format!(
                    "loop fraction {f} must be finite and >= 0"
                )));
            }
        }
        for &it in &self.iterations {
            if it < 1 {
                return Err(CliError::usage("iterations must be >= 1"));
            }
        }
        for &d in &self.depths {
            if d < 1 {
                return Err(CliError::usage("depth must be >= 1"));
            }
        }
        Ok(())
    }

    fn resolved_config_text(&self) -> String {
        let join = |items: &[String]| items.join(",");
        render_resolved(&[
            ("rows", self.rows.to_string()),
            ("seed", self.base_seed.to_string()),
            ("repetitions", self.repetitions.to_string()),
            (
                "loop-fractions",
                join(&self.loop_fractions.iter().map(f64::to_string).collect::<Vec<_>>()),
            ),
            (
                "magnitudes",
                join(&self.magnitudes.iter().map(|m| m.to_string()).collect::<Vec<_>>()),
            ),
            (
                "iterations",
                join(&self.iterations.iter().map(usize::to_string).collect::<Vec<_>>()),
            ),
            (
                "depths",
                join(&self.depths.iter().map(usize::to_string).collect::<Vec<_>>()),
            ),
        ])
    }
}

struct SweepRow {
    cell: usize,
    repetition: usize,
    seed: u64,
    fraction: f64,
    magnitude: MagnitudePolicy,
    iterations: usize,
    depth: usize,
    accuracy: f64,
    precision: Option<f64>,
    recall: Option<f64>,
}

fn results_csv(rows: &[SweepRow], n_rows: usize) -> Vec<u8> {
    let mut out =
        String::from("cell,repetition,seed,rows,loop_fraction,magnitude,iterations,depth,accuracy,precision,recall\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.repetition,
            r.seed,
            n_rows,
            r.fraction,
            r.magnitude,
            r.iterations,
            r.depth,
            r.accuracy,
            opt(r.precision),
            opt(r.recall)
        );
    }
    out.into_bytes()
}

fn accuracy_chart(rows: &[SweepRow], settings: &SweepSettings) -> String {
    // One series per (magnitude, iterations, depth) combination, averaging
    // repetitions within each cell.
    let mut series = Vec::new();
    for magnitude in &settings.magnitudes {
        for &iterations in &settings.iterations {
            for &depth in &settings.depths {
                let mut points = Vec::new();
                for &fraction in &settings.loop_fractions {
                    let accs: Vec<f64> = rows
                        .iter()
                        .filter(|r| {
                            r.magnitude == *magnitude
                                && r.iterations == iterations
                                && r.depth == depth
                                && r.fraction == fraction
                        })
                        .map(|r| r.accuracy)
                        .collect();
                    if !accs.is_empty() {
                        points.push((fraction, accs.iter().sum::<f64>() / accs.len() as f64));
                    }
                }
                series.push(chart::Series::new(
                    format!("{magnitude} it={iterations} d={depth}"),
                    points,
                ));
            }
        }
    }
    chart::line_chart(
        "Accuracy vs corruption fraction",
        "corruption fraction (per direction)",
        "test accuracy",
        &series,
    )
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let settings = SweepSettings::resolve(args)?;

    let mut rows = Vec::new();
    let mut scatter_svg: Option<String> = None;
    let mut cell = 0usize;
    for &fraction in &settings.loop_fractions {
        for magnitude in settings.magnitudes.clone() {
            for &iterations in &settings.iterations {
                for &depth in &settings.depths {
                    for rep in 0..settings.repetitions {
                        let seed =
                            settings.base_seed + (cell * settings.repetitions + rep) as u64;
                        let pristine = generate(settings.rows, seed);
                        let stats = column_stats(&pristine)?;
                        let corrupted = corrupt(
                            &pristine,
                            &stats,
                            &CorruptionConfig {
                                seed,
                                loops: LoopSpec::Fraction(fraction),
                                magnitude,
                                ..CorruptionConfig::default()
                            },
                        )?;
                        let (train, test) =
                            head_split(&corrupted.table, SplitSpec::HeadFraction(0.5))?;
                        let model = fit(
                            &train,
                            &TrainConfig {
                                iterations,
                                max_depth: depth,
                                seed,
                                ..TrainConfig::default()
                            },
                        )?;
                        let proba = predict_proba(&model, &test)?;
                        let labels = labels_from_proba(&proba, 0.5, &model.positive_label)?;
                        let predictions = attach_predictions(&test, &labels)?;
                        let report = score(&predictions)?;

                        if scatter_svg.is_none() {
                            let mut good = Vec::new();
                            let mut bad = Vec::new();
                            let actual = predictions.text(DEFAULT_LABEL_COLUMN)?;
                            for (i, (&p, label)) in proba.iter().zip(actual).enumerate() {
                                let point = ((train.n_rows() + i) as f64, p);
                                if label == "bad" {
                                    bad.push(point);
                                } else {
                                    good.push(point);
                                }
                            }
                            scatter_svg = Some(chart::scatter_chart(
                                "Predicted quality, first sweep cell",
                                "row index",
                                "P(bad)",
                                &[
                                    chart::Series::new("labelled good", good),
                                    chart::Series::new("labelled bad", bad),
                                ],
                            ));
                        }

                        println!(
                            "cell {cell} rep {rep} seed {seed}: fraction {fraction} {magnitude} \
                             it={iterations} d={depth} -> accuracy {:.4}",
                            report.accuracy
                        );
                        rows.push(SweepRow {
                            cell,
                            repetition: rep,
                            seed,
                            fraction,
                            magnitude,
                            iterations,
                            depth,
                            accuracy: report.accuracy,
                            precision: report.precision,
                            recall: report.recall,
                        });
                    }
                    cell += 1;
                }
            }
        }
    }

    std::fs::create_dir_all(&args.common.out_dir)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", args.common.out_dir.display())))?;
    let write = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        let path = args.common.out_dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
    };
    write(RESULTS_FILE, &results_csv(&rows, settings.rows))?;
    write(ACCURACY_CHART_FILE, accuracy_chart(&rows, &settings).as_bytes())?;
    if let Some(svg) = &scatter_svg {
        write(SCATTER_CHART_FILE, svg.as_bytes())?;
    }
    write(RESOLVED_CONFIG_FILE, settings.resolved_config_text().as_bytes())?;
    println!(
        "{} sweep rows in {}",
        rows.len(),
        args.common.out_dir.join(RESULTS_FILE).display()
    );
    Ok(())
}
