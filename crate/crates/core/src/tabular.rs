//! Columnar dataset model with CSV ingestion, serialization, and frozen
//! per-column statistics.
//!
//! A [`Table`] holds named columns of equal length. Numeric columns store
//! 64-bit floats with explicit missing cells; text columns carry quality
//! labels ("good"/"bad") or attached predictions. Tables are immutable after
//! construction and safe to share across threads read-only.

use std::fmt;
use std::io;
use std::path::Path;

use thiserror::Error;

/// Quality label for rows that were left untouched.
pub const GOOD: &str = "good";
/// Quality label for rows that received injected corruption.
pub const BAD: &str = "bad";
/// Column name used for quality labels unless configured otherwise.
pub const DEFAULT_LABEL_COLUMN: &str = "label";

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}: file is empty (no header row)")]
    EmptyFile(String),
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("column names must be non-empty")]
    EmptyColumnName,
    #[error("column {column:?} row {row}: label {value:?} is neither \"good\" nor \"bad\"")]
    InvalidLabel {
        column: String,
        row: usize,
        value: String,
    },
    #[error("column {name:?} has {len} cells, expected {expected}")]
    LengthMismatch {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("no such column {0:?}")]
    UnknownColumn(String),
    #[error("column {0:?} is not numeric")]
    NotNumeric(String),
    #[error("column {0:?} is not a text column")]
    NotText(String),
    #[error("column {0:?} has no non-missing values")]
    AllMissing(String),
    #[error("table has no numeric columns")]
    NoNumericColumns,
    #[error("column {0:?} already exists")]
    ColumnExists(String),
    #[error("label column {0:?} must be a text column")]
    LabelNotText(String),
}

/// One column of cells. Numeric cells may be missing; text cells are raw
/// strings.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Text(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slice(&self, start: usize, end: usize) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(v[start..end].to_vec()),
            Column::Text(v) => Column::Text(v[start..end].to_vec()),
        }
    }
}

/// In-memory columnar dataset: ordered named columns, equal row counts, at
/// most one designated label column whose cells are "good"/"bad".
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<(String, Column)>,
    label_column: Option<String>,
    n_rows: usize,
}

impl Table {
    /// Build a table from named columns, validating the structural
    /// invariants: unique non-empty names, equal lengths, and good/bad cells
    /// in the label column when one is designated.
    pub fn from_columns(
        columns: Vec<(String, Column)>,
        label_column: Option<&str>,
    ) -> Result<Table, TabularError> {
        let n_rows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
        for (name, col) in &columns {
            if name.is_empty() {
                return Err(TabularError::EmptyColumnName);
            }
            if col.len() != n_rows {
                return Err(TabularError::LengthMismatch {
                    name: name.clone(),
                    len: col.len(),
                    expected: n_rows,
                });
            }
        }
        for (i, (name, _)) in columns.iter().enumerate() {
            if columns[i + 1..].iter().any(|(other, _)| other == name) {
                return Err(TabularError::DuplicateColumn(name.clone()));
            }
        }
        if let Some(label) = label_column {
            let (name, col) = columns
                .iter()
                .find(|(name, _)| name == label)
                .ok_or_else(|| TabularError::UnknownColumn(label.to_string()))?;
            match col {
                Column::Text(cells) => {
                    for (row, value) in cells.iter().enumerate() {
                        if value != GOOD && value != BAD {
                            return Err(TabularError::InvalidLabel {
                                column: name.clone(),
                                row,
                                value: value.clone(),
                            });
                        }
                    }
                }
                Column::Numeric(_) => return Err(TabularError::LabelNotText(name.clone())),
            }
        }
        Ok(Table {
            columns,
            label_column: label_column.map(str::to_string),
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(name, _)| name.as_str())
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column(name).is_some()
    }

    /// Name of the designated label column, if any.
    pub fn label_column(&self) -> Option<&str> {
        self.label_column.as_deref()
    }

    /// Cells of a numeric column.
    pub fn numeric(&self, name: &str) -> Result<&[Option<f64>], TabularError> {
        match self.column(name) {
            Some(Column::Numeric(v)) => Ok(v),
            Some(Column::Text(_)) => Err(TabularError::NotNumeric(name.to_string())),
            None => Err(TabularError::UnknownColumn(name.to_string())),
        }
    }

    /// Cells of a text column.
    pub fn text(&self, name: &str) -> Result<&[String], TabularError> {
        match self.column(name) {
            Some(Column::Text(v)) => Ok(v),
            Some(Column::Numeric(_)) => Err(TabularError::NotText(name.to_string())),
            None => Err(TabularError::UnknownColumn(name.to_string())),
        }
    }

    /// Names of the numeric columns in table order. The label column is a
    /// text column and therefore never appears here.
    pub fn numeric_column_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter_map(|(name, col)| match col {
                Column::Numeric(_) => Some(name.as_str()),
                Column::Text(_) => None,
            })
            .collect()
    }

    /// New table with `column` appended after the existing columns.
    pub fn with_text_column(
        &self,
        name: &str,
        cells: Vec<String>,
    ) -> Result<Table, TabularError> {
        if self.has_column(name) {
            return Err(TabularError::ColumnExists(name.to_string()));
        }
        if cells.len() != self.n_rows {
            return Err(TabularError::LengthMismatch {
                name: name.to_string(),
                len: cells.len(),
                expected: self.n_rows,
            });
        }
        let mut columns = self.columns.clone();
        columns.push((name.to_string(), Column::Text(cells)));
        Table::from_columns(columns, self.label_column.as_deref())
    }

    /// First `n` rows as a new table.
    pub fn head(&self, n: usize) -> Table {
        self.row_slice(0, n.min(self.n_rows))
    }

    /// Rows from `start` to the end as a new table.
    pub fn tail_from(&self, start: usize) -> Table {
        self.row_slice(start.min(self.n_rows), self.n_rows)
    }

    fn row_slice(&self, start: usize, end: usize) -> Table {
        Table {
            columns: self
                .columns
                .iter()
                .map(|(name, col)| (name.clone(), col.slice(start, end)))
                .collect(),
            label_column: self.label_column.clone(),
            n_rows: end - start,
        }
    }
}

/// Frozen per-column min/max captured from pristine data. Computed once,
/// before any corruption, and immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    entries: Vec<ColumnStatsEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStatsEntry {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub n_missing: usize,
}

impl ColumnStats {
    pub fn entries(&self) -> &[ColumnStatsEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&ColumnStatsEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Hand-built stats, mainly for tests and audits.
    pub fn from_entries(entries: Vec<ColumnStatsEntry>) -> ColumnStats {
        ColumnStats { entries }
    }
}

impl fmt::Display for ColumnStatsEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: min={} max={} missing={}",
            self.name, self.min, self.max, self.n_missing
        )
    }
}

/// Min/max over non-missing cells of every numeric column. Errors if the
/// table has no numeric columns or if a numeric column is entirely missing.
pub fn column_stats(table: &Table) -> Result<ColumnStats, TabularError> {
    let names = table.numeric_column_names();
    if names.is_empty() {
        return Err(TabularError::NoNumericColumns);
    }
    let mut entries = Vec::with_capacity(names.len());
    for name in names {
        let cells = table.numeric(name)?;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut n_missing = 0usize;
        let mut seen = false;
        for cell in cells {
            match cell {
                Some(v) => {
                    min = min.min(*v);
                    max = max.max(*v);
                    seen = true;
                }
                None => n_missing += 1,
            }
        }
        if !seen {
            return Err(TabularError::AllMissing(name.to_string()));
        }
        entries.push(ColumnStatsEntry {
            name: name.to_string(),
            min,
            max,
            n_missing,
        });
    }
    Ok(ColumnStats { entries })
}

/// Diagnostics collected while loading a CSV file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    /// Columns dropped because they contained non-numeric, non-empty cells.
    pub dropped_columns: Vec<String>,
}

/// Column handling options for [`load_csv_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions<'a> {
    /// Column to designate as the quality label; validated as good/bad.
    pub label_column: Option<&'a str>,
    /// Columns kept verbatim as text instead of being parsed or dropped
    /// (e.g. an attached "prediction" column on reload).
    pub keep_text: &'a [&'a str],
}

/// Load a CSV file into a [`Table`].
///
/// Every non-label column whose cells all parse as finite decimal numbers
/// (or are empty) becomes a numeric column; empty cells become missing.
/// Columns with non-numeric, non-empty cells are dropped and recorded in
/// the returned [`LoadReport`].
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<&str>,
) -> Result<(Table, LoadReport), TabularError> {
    load_csv_with(
        path,
        LoadOptions {
            label_column,
            keep_text: &[],
        },
    )
}

/// [`load_csv`] with explicit column handling options.
pub fn load_csv_with(
    path: impl AsRef<Path>,
    options: LoadOptions<'_>,
) -> Result<(Table, LoadReport), TabularError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let wrap = |source: csv::Error| TabularError::Read {
        path: display.clone(),
        source,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(wrap)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(wrap)?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(TabularError::EmptyFile(display));
    }
    for name in &headers {
        if name.is_empty() {
            return Err(TabularError::EmptyColumnName);
        }
    }
    for (i, name) in headers.iter().enumerate() {
        if headers[i + 1..].contains(name) {
            return Err(TabularError::DuplicateColumn(name.clone()));
        }
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(wrap)?;
        for (j, field) in record.iter().enumerate() {
            cells[j].push(field.to_string());
        }
    }

    let label = options.label_column.filter(|l| headers.iter().any(|h| h == l));
    let mut columns = Vec::with_capacity(headers.len());
    let mut report = LoadReport::default();
    for (name, raw) in headers.into_iter().zip(cells) {
        if Some(name.as_str()) == label || options.keep_text.contains(&name.as_str()) {
            columns.push((name, Column::Text(raw)));
            continue;
        }
        match parse_numeric(&raw) {
            Some(parsed) => columns.push((name, Column::Numeric(parsed))),
            None => report.dropped_columns.push(name),
        }
    }

    let table = Table::from_columns(columns, label)?;
    Ok((table, report))
}

/// All cells as floats (empty → missing), or `None` when any non-empty cell
/// fails to parse as a finite number.
fn parse_numeric(raw: &[String]) -> Option<Vec<Option<f64>>> {
    let mut out = Vec::with_capacity(raw.len());
    for cell in raw {
        let trimmed = cell.trim();
        if trimmed.is_empty() {
            out.push(None);
        } else {
            match trimmed.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(Some(v)),
                _ => return None,
            }
        }
    }
    Some(out)
}

/// Write a table as RFC 4180 CSV: header row, LF line endings, missing
/// cells empty, floats in shortest round-trip form. Reloading the file
/// reproduces the table cell-for-cell.
pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<(), TabularError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let bytes = to_csv_bytes(table);
    std::fs::write(path, bytes).map_err(|source| TabularError::Write {
        path: display,
        source,
    })
}

/// CSV serialization of a table as an in-memory byte buffer.
pub fn to_csv_bytes(table: &Table) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let names: Vec<&str> = table.column_names().collect();
    writer.write_record(&names).expect("in-memory write");
    let mut field = String::new();
    for row in 0..table.n_rows() {
        let mut record = csv::StringRecord::new();
        for (_, col) in &table.columns {
            field.clear();
            match col {
                Column::Numeric(v) => {
                    if let Some(x) = v[row] {
                        use fmt::Write;
                        write!(field, "{x}").expect("format float");
                    }
                }
                Column::Text(v) => field.push_str(&v[row]),
            }
            record.push_field(&field);
        }
        writer.write_record(&record).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}
