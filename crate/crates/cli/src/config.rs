//! Config-file parsing, flag/file/default resolution, and resolved-config
//! serialization.
//!
//! The config file is a flat key=value text file whose keys mirror the long
//! flag names; `#` starts a comment. Flags override file values, file values
//! override defaults. Pipeline runs write the fully-resolved configuration
//! back out so every artifact directory is self-describing and diffable.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use dataq_core::{
    CorruptError, CorruptionConfig, EvalError, GbdtError, LoopSpec, MagnitudePolicy, SplitSpec,
    TabularError, TrainConfig,
};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ROWS: usize = 6600;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "input",
    "rows",
    "corruption-loops",
    "corruption-fraction",
    "magnitude",
    "iterations",
    "depth",
    "learning-rate",
    "split-count",
    "split-fraction",
    "threshold",
    "loop-fractions",
    "magnitudes",
    "depths",
    "repetitions",
];

/// CLI failure with the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: bad flags, bad config values, invalid parameter domains.
    Usage(String),
    /// Exit 2: unreadable/invalid data, file I/O, model files, split-vs-data
    /// mismatches.
    Data(String),
    /// Exit 3: training or prediction failure.
    Train(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Train(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> CliError {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(m) => write!(f, "{m}"),
            CliError::Train(m) => write!(f, "{m}"),
        }
    }
}

impl From<TabularError> for CliError {
    fn from(e: TabularError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CorruptError> for CliError {
    fn from(e: CorruptError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<GbdtError> for CliError {
    fn from(e: GbdtError) -> Self {
        match e {
            GbdtError::ModelIo { .. }
            | GbdtError::ModelFormat { .. }
            | GbdtError::UnsupportedVersion { .. } => CliError::Data(e.to_string()),
            other => CliError::Train(other.to_string()),
        }
    }
}

/// Parsed config file contents.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    /// Load a config file; `None` yields an empty config.
    pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!(
                    "config {} line {}: expected key = value, got {raw:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::usage(format!(
                    "config {} line {}: unknown key {key:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parse a key's value, turning parse failures into usage errors.
    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::usage(format!("config key {key:?}: cannot parse {raw:?}: {e}"))
            }),
        }
    }

    /// Parse a comma-separated list value.
    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|item| {
                    item.trim().parse::<T>().map_err(|e| {
                        CliError::usage(format!(
                            "config key {key:?}: cannot parse item {item:?}: {e}"
                        ))
                    })
                })
                .collect::<Result<Vec<T>, CliError>>()
                .map(Some),
        }
    }
}

pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Resolve the corruption loop specification from the loops/fraction pair.
pub fn resolve_loops(
    flag_loops: Option<usize>,
    flag_fraction: Option<f64>,
    file: &FileConfig,
) -> Result<LoopSpec, CliError> {
    if flag_loops.is_some() && flag_fraction.is_some() {
        return Err(CliError::usage(
            "--corruption-loops and --corruption-fraction are mutually exclusive",
        ));
    }
    if let Some(k) = flag_loops {
        return Ok(LoopSpec::Count(k));
    }
    if let Some(f) = flag_fraction {
        return checked_fraction(f);
    }
    let file_loops = file.parse::<usize>("corruption-loops")?;
    let file_fraction = file.parse::<f64>("corruption-fraction")?;
    match (file_loops, file_fraction) {
        (Some(_), Some(_)) => Err(CliError::usage(
            "config sets both corruption-loops and corruption-fraction",
        )),
        (Some(k), None) => Ok(LoopSpec::Count(k)),
        (None, Some(f)) => checked_fraction(f),
        (None, None) => Ok(LoopSpec::default()),
    }
}

fn checked_fraction(f: f64) -> Result<LoopSpec, CliError> {
    if !f.is_finite() || f < 0.0 {
        return Err(CliError::usage(format!(
            "corruption fraction {f} must be finite and >= 0"
        )));
    }
    Ok(LoopSpec::Fraction(f))
}

/// Resolve the head split from the count/fraction pair.
pub fn resolve_split(
    flag_count: Option<usize>,
    flag_fraction: Option<f64>,
    file: &FileConfig,
) -> Result<SplitSpec, CliError> {
    if flag_count.is_some() && flag_fraction.is_some() {
        return Err(CliError::usage(
            "--split-count and --split-fraction are mutually exclusive",
        ));
    }
    if let Some(n) = flag_count {
        return checked_split_count(n);
    }
    if let Some(f) = flag_fraction {
        return checked_split_fraction(f);
    }
    let file_count = file.parse::<usize>("split-count")?;
    let file_fraction = file.parse::<f64>("split-fraction")?;
    match (file_count, file_fraction) {
        (Some(_), Some(_)) => Err(CliError::usage(
            "config sets both split-count and split-fraction",
        )),
        (Some(n), None) => checked_split_count(n),
        (None, Some(f)) => checked_split_fraction(f),
        (None, None) => Ok(SplitSpec::default()),
    }
}

fn checked_split_count(n: usize) -> Result<SplitSpec, CliError> {
    if n == 0 {
        return Err(CliError::usage("split count must be >= 1"));
    }
    Ok(SplitSpec::HeadCount(n))
}

fn checked_split_fraction(f: f64) -> Result<SplitSpec, CliError> {
    if !(f > 0.0 && f < 1.0) {
        return Err(CliError::usage(format!(
            "split fraction {f} must be in (0, 1)"
        )));
    }
    Ok(SplitSpec::HeadFraction(f))
}

pub fn resolve_magnitude(
    flag: Option<&str>,
    file: &FileConfig,
) -> Result<MagnitudePolicy, CliError> {
    let raw = flag.or_else(|| file.raw("magnitude"));
    match raw {
        None => Ok(MagnitudePolicy::default()),
        Some(raw) => raw
            .parse::<MagnitudePolicy>()
            .map_err(CliError::Usage),
    }
}

pub fn resolve_threshold(flag: Option<f64>, file: &FileConfig) -> Result<f64, CliError> {
    let t = resolve(flag, file.parse("threshold")?, DEFAULT_THRESHOLD);
    if !(t > 0.0 && t < 1.0) {
        return Err(CliError::usage(format!(
            "threshold {t} must be strictly inside (0, 1)"
        )));
    }
    Ok(t)
}

pub fn resolve_training(
    flag_iterations: Option<usize>,
    flag_depth: Option<usize>,
    flag_learning_rate: Option<f64>,
    seed: u64,
    file: &FileConfig,
) -> Result<TrainConfig, CliError> {
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        iterations: resolve(flag_iterations, file.parse("iterations")?, defaults.iterations),
        max_depth: resolve(flag_depth, file.parse("depth")?, defaults.max_depth),
        learning_rate: resolve(
            flag_learning_rate,
            file.parse("learning-rate")?,
            defaults.learning_rate,
        ),
        min_samples_leaf: defaults.min_samples_leaf,
        seed,
    };
    config
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    Ok(config)
}

/// Render the resolved key = value lines for a pipeline run. The output
/// directory is deliberately omitted: the file lives inside it, and leaving
/// it out keeps identically-configured runs byte-identical.
pub fn render_resolved(entries: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (key, value) in entries {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(value);
        out.push('\n');
    }
    out
}

pub fn loops_entry(loops: LoopSpec) -> (&'static str, String) {
    match loops {
        LoopSpec::Count(k) => ("corruption-loops", k.to_string()),
        LoopSpec::Fraction(f) => ("corruption-fraction", f.to_string()),
    }
}

pub fn split_entry(split: SplitSpec) -> (&'static str, String) {
    match split {
        SplitSpec::HeadCount(n) => ("split-count", n.to_string()),
        SplitSpec::HeadFraction(f) => ("split-fraction", f.to_string()),
    }
}

/// Corruption config sharing the master seed.
pub fn corruption_config(seed: u64, loops: LoopSpec, magnitude: MagnitudePolicy) -> CorruptionConfig {
    CorruptionConfig {
        seed,
        loops,
        magnitude,
        ..CorruptionConfig::default()
    }
}
