//! Seeded synthetic corruption of numeric tables.
//!
//! Cells are drawn with replacement and pushed beyond the frozen per-column
//! min/max: first `loop_count` max-side pushes, then `loop_count` min-side
//! pushes. Rows that were touched at least once are labelled "bad", untouched
//! rows "good". The sequential draw order per iteration is row, offset,
//! column, so the whole run is a pure function of (table, stats, config).
//!
//! Single-threaded by contract: the RNG stream defines the output.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::tabular::{Column, ColumnStats, Table, TabularError, BAD, DEFAULT_LABEL_COLUMN, GOOD};

#[derive(Debug, Error)]
pub enum CorruptError {
    #[error("table already has a label column {0:?}")]
    LabelAlreadyPresent(String),
    #[error("no frozen stats for column {0:?}")]
    MissingStats(String),
    #[error("cannot corrupt: table has {n_rows} rows and {n_columns} numeric columns")]
    NothingToCorrupt { n_rows: usize, n_columns: usize },
    #[error("invalid loop fraction {0} (must be finite and >= 0)")]
    InvalidFraction(f64),
    #[error("invalid offset range {lo}..={hi}")]
    InvalidOffsetRange { lo: i64, hi: i64 },
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

/// How many cells to push per direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoopSpec {
    /// Fixed number of draws per direction.
    Count(usize),
    /// `floor(fraction * n_rows)` draws per direction. The default 0.5
    /// reproduces the half-the-rows loop bound of the original procedure.
    Fraction(f64),
}

impl LoopSpec {
    pub fn resolve(&self, n_rows: usize) -> Result<usize, CorruptError> {
        match *self {
            LoopSpec::Count(k) => Ok(k),
            LoopSpec::Fraction(f) => {
                if !f.is_finite() || f < 0.0 {
                    return Err(CorruptError::InvalidFraction(f));
                }
                Ok((f * n_rows as f64).floor() as usize)
            }
        }
    }
}

impl Default for LoopSpec {
    fn default() -> Self {
        LoopSpec::Fraction(0.5)
    }
}

/// How far a selected cell is pushed past the frozen column range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagnitudePolicy {
    /// Replicates the original listing: an offset in [2, 10] is drawn and
    /// discarded, and the new value is `max + old` (max push) or
    /// `min - old` (min push).
    PaperExact,
    /// The evident intended variant: the drawn offset in [lo, hi] scales
    /// the perturbation, `max + offset*|old|` / `min - offset*|old|`.
    OffsetScaled { lo: i64, hi: i64 },
}

impl MagnitudePolicy {
    /// Inclusive range the per-iteration offset is drawn from. The draw
    /// happens under every policy to keep the RNG stream aligned.
    fn offset_range(&self) -> (i64, i64) {
        match *self {
            MagnitudePolicy::PaperExact => (2, 10),
            MagnitudePolicy::OffsetScaled { lo, hi } => (lo, hi),
        }
    }

    pub fn validate(&self) -> Result<(), CorruptError> {
        match *self {
            MagnitudePolicy::PaperExact => Ok(()),
            MagnitudePolicy::OffsetScaled { lo, hi } if lo <= hi => Ok(()),
            MagnitudePolicy::OffsetScaled { lo, hi } => {
                Err(CorruptError::InvalidOffsetRange { lo, hi })
            }
        }
    }
}

impl Default for MagnitudePolicy {
    fn default() -> Self {
        MagnitudePolicy::PaperExact
    }
}

impl fmt::Display for MagnitudePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MagnitudePolicy::PaperExact => write!(f, "paper"),
            MagnitudePolicy::OffsetScaled { lo, hi } => write!(f, "scaled:{lo}:{hi}"),
        }
    }
}

impl FromStr for MagnitudePolicy {
    type Err = String;

    /// Accepts `paper` or `scaled:LO:HI`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "paper" {
            return Ok(MagnitudePolicy::PaperExact);
        }
        if let Some(rest) = s.strip_prefix("scaled:") {
            let (lo, hi) = rest
                .split_once(':')
                .ok_or_else(|| format!("expected scaled:LO:HI, got {s:?}"))?;
            let lo: i64 = lo.parse().map_err(|_| format!("bad offset {lo:?}"))?;
            let hi: i64 = hi.parse().map_err(|_| format!("bad offset {hi:?}"))?;
            if lo > hi {
                return Err(format!("offset range {lo}..={hi} is empty"));
            }
            return Ok(MagnitudePolicy::OffsetScaled { lo, hi });
        }
        Err(format!("unknown magnitude policy {s:?} (use paper or scaled:LO:HI)"))
    }
}

/// Fully determines the corruption of a given table.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionConfig {
    pub seed: u64,
    pub loops: LoopSpec,
    pub magnitude: MagnitudePolicy,
    pub label_column: String,
}

impl Default for CorruptionConfig {
    fn default() -> Self {
        CorruptionConfig {
            seed: 0,
            loops: LoopSpec::default(),
            magnitude: MagnitudePolicy::default(),
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
        }
    }
}

/// Push direction relative to the frozen column range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    MaxPush,
    MinPush,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::MaxPush => write!(f, "MaxPush"),
            Direction::MinPush => write!(f, "MinPush"),
        }
    }
}

/// Audit record of one cell rewrite, in draw order.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionRecord {
    pub direction: Direction,
    pub row_index: usize,
    pub column: String,
    /// Cell value before the rewrite; `None` when the cell was missing.
    pub old_value: Option<f64>,
    pub new_value: f64,
}

/// Output of [`corrupt`]: the labelled table plus the audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted {
    pub table: Table,
    pub records: Vec<CorruptionRecord>,
}

/// The single-cell rewrite rule.
///
/// A missing cell is rewritten to the column max (max push) or min
/// (min push). Otherwise the new value is computed from the cell's current
/// value per the magnitude policy; the `offset` argument is the integer
/// drawn for this iteration and is ignored under [`MagnitudePolicy::PaperExact`].
pub fn pushed_value(
    direction: Direction,
    policy: MagnitudePolicy,
    column_min: f64,
    column_max: f64,
    old_value: Option<f64>,
    offset: i64,
) -> f64 {
    match (direction, old_value, policy) {
        (Direction::MaxPush, None, _) => column_max,
        (Direction::MinPush, None, _) => column_min,
        (Direction::MaxPush, Some(v), MagnitudePolicy::PaperExact) => column_max + v,
        (Direction::MinPush, Some(v), MagnitudePolicy::PaperExact) => column_min - v,
        (Direction::MaxPush, Some(v), MagnitudePolicy::OffsetScaled { .. }) => {
            column_max + offset as f64 * v.abs()
        }
        (Direction::MinPush, Some(v), MagnitudePolicy::OffsetScaled { .. }) => {
            column_min - offset as f64 * v.abs()
        }
    }
}

/// Inject labelled corruption into `table`.
///
/// `stats` must be the frozen statistics of this exact table, computed
/// before any corruption. The output table is the input plus a label column
/// (appended last) holding "bad" for every touched row and "good" elsewhere.
/// Rewrites read the cell's current value, so a twice-hit cell compounds.
pub fn corrupt(
    table: &Table,
    stats: &ColumnStats,
    config: &CorruptionConfig,
) -> Result<Corrupted, CorruptError> {
    if let Some(label) = table.label_column() {
        return Err(CorruptError::LabelAlreadyPresent(label.to_string()));
    }
    if table.has_column(&config.label_column) {
        return Err(CorruptError::LabelAlreadyPresent(config.label_column.clone()));
    }
    config.magnitude.validate()?;

    let names: Vec<String> = table
        .numeric_column_names()
        .into_iter()
        .map(str::to_string)
        .collect();
    let mut ranges = Vec::with_capacity(names.len());
    for name in &names {
        let entry = stats
            .get(name)
            .ok_or_else(|| CorruptError::MissingStats(name.clone()))?;
        ranges.push((entry.min, entry.max));
    }

    let n_rows = table.n_rows();
    let loop_count = config.loops.resolve(n_rows)?;
    if loop_count > 0 && (n_rows == 0 || names.is_empty()) {
        return Err(CorruptError::NothingToCorrupt {
            n_rows,
            n_columns: names.len(),
        });
    }

    let mut data: Vec<Vec<Option<f64>>> = names
        .iter()
        .map(|name| table.numeric(name).expect("numeric column").to_vec())
        .collect();
    let mut labels = vec![GOOD.to_string(); n_rows];
    let mut records = Vec::with_capacity(2 * loop_count);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (offset_lo, offset_hi) = config.magnitude.offset_range();
    for direction in [Direction::MaxPush, Direction::MinPush] {
        for _ in 0..loop_count {
            // Draw order matches the original listing: row, offset, column.
            let row = rng.random_range(0..n_rows);
            let offset = rng.random_range(offset_lo..=offset_hi);
            let col = rng.random_range(0..names.len());
            let (min, max) = ranges[col];
            let old_value = data[col][row];
            let new_value = pushed_value(direction, config.magnitude, min, max, old_value, offset);
            data[col][row] = Some(new_value);
            labels[row] = BAD.to_string();
            records.push(CorruptionRecord {
                direction,
                row_index: row,
                column: names[col].clone(),
                old_value,
                new_value,
            });
        }
    }

    let mut columns: Vec<(String, Column)> = names
        .into_iter()
        .zip(data)
        .map(|(name, cells)| (name, Column::Numeric(cells)))
        .collect();
    columns.push((config.label_column.clone(), Column::Text(labels)));
    let table = Table::from_columns(columns, Some(&config.label_column))?;
    Ok(Corrupted { table, records })
}

/// Expected fraction of rows labelled "bad" after `2 * loop_count` draws
/// with replacement over `n_rows` rows: `1 - (1 - 1/n)^(2k)`.
///
/// # Panics
/// Panics when `n_rows` is zero.
pub fn expected_bad_fraction(n_rows: usize, loop_count: usize) -> f64 {
    assert!(n_rows >= 1, "expected_bad_fraction requires n_rows >= 1");
    1.0 - (1.0 - 1.0 / n_rows as f64).powf(2.0 * loop_count as f64)
}

/// Export corruption records as an audit CSV
/// (`direction,row_index,column,old_value,new_value`).
pub fn write_records_csv(
    records: &[CorruptionRecord],
    path: impl AsRef<Path>,
) -> Result<(), TabularError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    std::fs::write(path, records_csv_bytes(records)).map_err(|source| TabularError::Write {
        path: display,
        source,
    })
}

fn records_csv_bytes(records: &[CorruptionRecord]) -> Vec<u8> {
    let mut out = String::from("direction,row_index,column,old_value,new_value\n");
    for r in records {
        use fmt::Write;
        let old = r.old_value.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.direction,
            r.row_index,
            escape_csv(&r.column),
            old,
            r.new_value
        )
        .expect("format record");
    }
    out.into_bytes()
}

fn escape_csv(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{column_stats, ColumnStatsEntry};

    fn single_cell_table(value: f64) -> Table {
        Table::from_columns(
            vec![("Total Bags".to_string(), Column::Numeric(vec![Some(value)]))],
            None,
        )
        .unwrap()
    }

    fn figure_stats() -> ColumnStats {
        ColumnStats::from_entries(vec![ColumnStatsEntry {
            name: "Total Bags".to_string(),
            min: 7.02,
            max: 9967538.34,
            n_missing: 0,
        }])
    }

    fn small_table(n_rows: usize) -> Table {
        Table::from_columns(
            vec![
                (
                    "a".to_string(),
                    Column::Numeric((0..n_rows).map(|i| Some(i as f64 + 1.0)).collect()),
                ),
                (
                    "b".to_string(),
                    Column::Numeric((0..n_rows).map(|i| Some(10.0 * i as f64 + 5.0)).collect()),
                ),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_loops_is_a_labelled_no_op() {
        let table = small_table(6);
        let stats = column_stats(&table).unwrap();
        let config = CorruptionConfig {
            loops: LoopSpec::Count(0),
            ..CorruptionConfig::default()
        };
        let out = corrupt(&table, &stats, &config).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.table.label_column(), Some("label"));
        assert_eq!(out.table.text("label").unwrap(), &vec!["good".to_string(); 6]);
        for name in table.numeric_column_names() {
            assert_eq!(out.table.numeric(name).unwrap(), table.numeric(name).unwrap());
        }
    }

    #[test]
    fn min_push_matches_changed_grid_arithmetic() {
        // 7.02 - 11432.09 == -11425.07 bit-exactly in f64.
        let v = pushed_value(
            Direction::MinPush,
            MagnitudePolicy::PaperExact,
            7.02,
            9967538.34,
            Some(11432.09),
            5,
        );
        assert_eq!(v, -11425.07);
    }

    #[test]
    fn max_push_matches_changed_grid_arithmetic() {
        let v = pushed_value(
            Direction::MaxPush,
            MagnitudePolicy::PaperExact,
            7.02,
            9967538.34,
            Some(11017.32),
            5,
        );
        assert_eq!(v, 9978555.66);
    }

    #[test]
    fn first_record_is_a_max_push_on_the_original_value() {
        let table = single_cell_table(11017.32);
        let config = CorruptionConfig {
            loops: LoopSpec::Count(1),
            ..CorruptionConfig::default()
        };
        let out = corrupt(&table, &figure_stats(), &config).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.records[0].direction, Direction::MaxPush);
        assert_eq!(out.records[0].old_value, Some(11017.32));
        assert_eq!(out.records[0].new_value, 9978555.66);
        assert_eq!(out.table.text("label").unwrap(), &["bad".to_string()]);
        // The min push then compounds on the rewritten value.
        assert_eq!(out.records[1].direction, Direction::MinPush);
        assert_eq!(out.records[1].old_value, Some(9978555.66));
        assert_eq!(out.records[1].new_value, 7.02 - 9978555.66);
    }

    #[test]
    fn same_config_gives_identical_output() {
        let table = small_table(40);
        let stats = column_stats(&table).unwrap();
        let config = CorruptionConfig {
            seed: 99,
            ..CorruptionConfig::default()
        };
        let a = corrupt(&table, &stats, &config).unwrap();
        let b = corrupt(&table, &stats, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn record_count_is_twice_loop_count() {
        let table = small_table(10);
        let stats = column_stats(&table).unwrap();
        let config = CorruptionConfig {
            loops: LoopSpec::Count(7),
            ..CorruptionConfig::default()
        };
        let out = corrupt(&table, &stats, &config).unwrap();
        assert_eq!(out.records.len(), 14);
        let max_pushes = out
            .records
            .iter()
            .filter(|r| r.direction == Direction::MaxPush)
            .count();
        assert_eq!(max_pushes, 7);
        assert!(out.records[..7].iter().all(|r| r.direction == Direction::MaxPush));
        assert!(out.records[7..].iter().all(|r| r.direction == Direction::MinPush));
    }

    #[test]
    fn bad_rows_are_exactly_the_recorded_rows() {
        for seed in 0..20 {
            let table = small_table(30);
            let stats = column_stats(&table).unwrap();
            let config = CorruptionConfig {
                seed,
                ..CorruptionConfig::default()
            };
            let out = corrupt(&table, &stats, &config).unwrap();
            let labels = out.table.text("label").unwrap();
            let recorded: std::collections::BTreeSet<usize> =
                out.records.iter().map(|r| r.row_index).collect();
            for (row, label) in labels.iter().enumerate() {
                assert_eq!(recorded.contains(&row), label == "bad", "seed {seed} row {row}");
            }
        }
    }

    #[test]
    fn single_hit_pushes_leave_the_frozen_range() {
        // Positive cells, single pass each way: max pushes land strictly
        // above the frozen max, min pushes strictly below the frozen min.
        for seed in 0..20 {
            let table = small_table(50);
            let stats = column_stats(&table).unwrap();
            let config = CorruptionConfig {
                seed,
                loops: LoopSpec::Count(10),
                ..CorruptionConfig::default()
            };
            let out = corrupt(&table, &stats, &config).unwrap();
            let mut touched = std::collections::BTreeSet::new();
            for r in &out.records {
                let entry = stats.get(&r.column).unwrap();
                let cell = (r.column.clone(), r.row_index);
                if touched.insert(cell) {
                    match r.direction {
                        Direction::MaxPush => {
                            assert!(r.new_value > entry.max, "seed {seed}: {r:?}")
                        }
                        Direction::MinPush => {
                            assert!(r.new_value < entry.min, "seed {seed}: {r:?}")
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn paper_and_scaled_policies_share_the_draw_stream() {
        let table = small_table(25);
        let stats = column_stats(&table).unwrap();
        let paper = corrupt(
            &table,
            &stats,
            &CorruptionConfig {
                seed: 5,
                ..CorruptionConfig::default()
            },
        )
        .unwrap();
        let scaled = corrupt(
            &table,
            &stats,
            &CorruptionConfig {
                seed: 5,
                magnitude: MagnitudePolicy::OffsetScaled { lo: 2, hi: 10 },
                ..CorruptionConfig::default()
            },
        )
        .unwrap();
        let cells = |records: &[CorruptionRecord]| {
            records
                .iter()
                .map(|r| (r.row_index, r.column.clone()))
                .collect::<Vec<_>>()
        };
        assert_eq!(cells(&paper.records), cells(&scaled.records));
        assert_ne!(paper.records[0].new_value, scaled.records[0].new_value);
    }

    #[test]
    fn scaled_policy_multiplies_the_offset() {
        let table = single_cell_table(-3.0);
        let stats = ColumnStats::from_entries(vec![ColumnStatsEntry {
            name: "Total Bags".to_string(),
            min: -3.0,
            max: 10.0,
            n_missing: 0,
        }]);
        let config = CorruptionConfig {
            loops: LoopSpec::Count(1),
            magnitude: MagnitudePolicy::OffsetScaled { lo: 4, hi: 4 },
            ..CorruptionConfig::default()
        };
        let out = corrupt(&table, &stats, &config).unwrap();
        assert_eq!(out.records[0].new_value, 10.0 + 4.0 * 3.0);
    }

    #[test]
    fn missing_cells_are_rewritten_to_the_frozen_bound() {
        let table = Table::from_columns(
            vec![("x".to_string(), Column::Numeric(vec![None]))],
            None,
        )
        .unwrap();
        let stats = ColumnStats::from_entries(vec![ColumnStatsEntry {
            name: "x".to_string(),
            min: -1.5,
            max: 8.25,
            n_missing: 1,
        }]);
        let config = CorruptionConfig {
            loops: LoopSpec::Count(1),
            ..CorruptionConfig::default()
        };
        let out = corrupt(&table, &stats, &config).unwrap();
        assert_eq!(out.records[0].old_value, None);
        assert_eq!(out.records[0].new_value, 8.25);
        assert_eq!(out.table.text("label").unwrap(), &["bad".to_string()]);
    }

    #[test]
    fn errors_on_existing_label_or_missing_stats() {
        let table = small_table(4);
        let stats = column_stats(&table).unwrap();
        let labelled = corrupt(&table, &stats, &CorruptionConfig::default())
            .unwrap()
            .table;
        assert!(matches!(
            corrupt(&labelled, &stats, &CorruptionConfig::default()),
            Err(CorruptError::LabelAlreadyPresent(_))
        ));

        let partial = ColumnStats::from_entries(vec![ColumnStatsEntry {
            name: "a".to_string(),
            min: 1.0,
            max: 4.0,
            n_missing: 0,
        }]);
        assert!(matches!(
            corrupt(&table, &partial, &CorruptionConfig::default()),
            Err(CorruptError::MissingStats(name)) if name == "b"
        ));
    }

    #[test]
    fn errors_on_empty_table_with_positive_loops() {
        let table = Table::from_columns(
            vec![("x".to_string(), Column::Numeric(vec![]))],
            None,
        )
        .unwrap();
        let stats = ColumnStats::from_entries(vec![ColumnStatsEntry {
            name: "x".to_string(),
            min: 0.0,
            max: 0.0,
            n_missing: 0,
        }]);
        let config = CorruptionConfig {
            loops: LoopSpec::Count(3),
            ..CorruptionConfig::default()
        };
        assert!(matches!(
            corrupt(&table, &stats, &config),
            Err(CorruptError::NothingToCorrupt { .. })
        ));
    }

    #[test]
    fn expected_bad_fraction_trivial_cases() {
        assert_eq!(expected_bad_fraction(1, 1), 1.0);
        assert_eq!(expected_bad_fraction(1000, 0), 0.0);
    }

    #[test]
    fn expected_bad_fraction_matches_frozen_reference() {
        // 1 - (1 - 1/1000)^1000, confirmed against the Monte-Carlo oracle
        // in the acceptance suite.
        let expected = 0.6323045752290363;
        assert!((expected_bad_fraction(1000, 500) - expected).abs() < 1e-12);
    }

    #[test]
    fn magnitude_policy_round_trips_through_strings() {
        for policy in [
            MagnitudePolicy::PaperExact,
            MagnitudePolicy::OffsetScaled { lo: 2, hi: 10 },
        ] {
            let parsed: MagnitudePolicy = policy.to_string().parse().unwrap();
            assert_eq!(parsed, policy);
        }
        assert!("scaled:10:2".parse::<MagnitudePolicy>().is_err());
        assert!("wild".parse::<MagnitudePolicy>().is_err());
    }

    #[test]
    fn loop_fraction_uses_floor() {
        assert_eq!(LoopSpec::Fraction(0.5).resolve(11).unwrap(), 5);
        assert_eq!(LoopSpec::Fraction(0.5).resolve(6600).unwrap(), 3300);
        assert_eq!(LoopSpec::Count(9).resolve(4).unwrap(), 9);
        assert!(LoopSpec::Fraction(-0.1).resolve(10).is_err());
    }

    #[test]
    fn records_csv_has_audit_layout() {
        let records = vec![CorruptionRecord {
            direction: Direction::MinPush,
            row_index: 3,
            column: "Total Bags".to_string(),
            old_value: Some(11432.09),
            new_value: -11425.07,
        }];
        let text = String::from_utf8(records_csv_bytes(&records)).unwrap();
        assert_eq!(
            text,
            "direction,row_index,column,old_value,new_value\nMinPush,3,Total Bags,11432.09,-11425.07\n"
        );
    }
}
