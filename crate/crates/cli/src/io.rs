//! File output (atomic), tabular formats and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use spdc_core::montecarlo::{Channel, EventRecord};
use spdc_core::spectrometer::TimingHistogram;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Float)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Missing => Value::Null,
        }
    }
}

/// A rectangular table written either as CSV with a header or as a JSON
/// array of row objects.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(c, v)| (c.to_string(), v.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                to_json(&rows)
            }
        }
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("output types serialize to JSON");
    let mut s = serde_json::to_string_pretty(&v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn time_tags_table(records: &[EventRecord]) -> Table {
    let mut t = Table::new(&["channel", "time_ps"]);
    for r in records {
        t.push(vec![Cell::Text(r.channel.to_string()), Cell::Int(r.time_ps)]);
    }
    t
}

fn bad_line(path: &Path, line: usize, what: &str) -> CliError {
    CliError::Validation(format!("{}:{line}: {what}", path.display()))
}

/// Parse a `channel,time_ps` CSV (header required).
pub fn read_time_tags(path: &Path) -> CliResult<Vec<EventRecord>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "channel,time_ps")) => {}
        _ => return Err(bad_line(path, 1, "expected header 'channel,time_ps'")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            let (ch, t) = l.split_once(',').ok_or_else(|| bad_line(path, k + 1, "expected two fields"))?;
            let channel = match ch {
                "trigger" => Channel::Trigger,
                "gated" => Channel::Gated,
                other => return Err(bad_line(path, k + 1, &format!("unknown channel '{other}'"))),
            };
            let time_ps = t
                .trim()
                .parse::<i64>()
                .map_err(|e| bad_line(path, k + 1, &format!("time_ps: {e}")))?;
            Ok(EventRecord { time_ps, channel })
        })
        .collect()
}

pub fn histogram_table(h: &TimingHistogram) -> Table {
    let mut t = Table::new(&["bin_start_ps", "bin_center_ps", "count"]);
    for (k, &c) in h.counts.iter().enumerate() {
        t.push(vec![Cell::Int(h.bin_start(k)), Cell::Float(h.bin_center(k)), Cell::Int(c as i64)]);
    }
    t
}

/// Read a histogram written by `histogram`, as CSV or JSON. Files without
/// a `bin_center_ps` column are taken to hold delays on multiples of
/// `tick_ps`.
pub fn read_histogram(path: &Path, fallback_bin_ps: i64, tick_ps: i64) -> CliResult<TimingHistogram> {
    let text = read_text(path)?;
    let rows: Vec<(i64, Option<f64>, u64)> = if path.extension().is_some_and(|e| e == "json") {
        let v: Vec<Map<String, Value>> =
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        v.iter()
            .enumerate()
            .map(|(k, row)| {
                let start = row.get("bin_start_ps").and_then(Value::as_i64);
                let count = row.get("count").and_then(Value::as_u64);
                let center = row.get("bin_center_ps").and_then(Value::as_f64);
                start
                    .zip(count)
                    .map(|(s, c)| (s, center, c))
                    .ok_or_else(|| bad_line(path, k + 1, "row needs integer bin_start_ps and count"))
            })
            .collect::<CliResult<_>>()?
    } else {
        let mut lines = text.lines().enumerate();
        let with_center = match lines.next() {
            Some((_, "bin_start_ps,bin_center_ps,count")) => true,
            Some((_, "bin_start_ps,count")) => false,
            _ => {
                return Err(bad_line(
                    path,
                    1,
                    "expected header 'bin_start_ps,bin_center_ps,count' or 'bin_start_ps,count'",
                ))
            }
        };
        lines
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, l)| {
                let fields: Vec<&str> = l.split(',').map(str::trim).collect();
                let expected = if with_center { 3 } else { 2 };
                if fields.len() != expected {
                    return Err(bad_line(path, k + 1, &format!("expected {expected} fields")));
                }
                let start = fields[0].parse().map_err(|e| bad_line(path, k + 1, &format!("bin_start_ps: {e}")))?;
                let count = fields[expected - 1]
                    .parse()
                    .map_err(|e| bad_line(path, k + 1, &format!("count: {e}")))?;
                let center = if with_center {
                    Some(fields[1].parse().map_err(|e| bad_line(path, k + 1, &format!("bin_center_ps: {e}")))?)
                } else {
                    None
                };
                Ok((start, center, count))
            })
            .collect::<CliResult<_>>()?
    };
    if rows.is_empty() {
        return Err(CliError::Validation(format!("{}: histogram has no bins", path.display())));
    }
    let width = if rows.len() >= 2 { rows[1].0 - rows[0].0 } else { fallback_bin_ps };
    if width < 1 || rows.windows(2).any(|w| w[1].0 - w[0].0 != width) {
        return Err(CliError::Validation(format!(
            "{}: bins must be contiguous and of equal width",
            path.display()
        )));
    }
    let tick = match rows[0].1 {
        Some(center) => (width as f64 - 2.0 * (center - rows[0].0 as f64)).round() as i64,
        None => tick_ps,
    };
    if !(0..=width).contains(&tick) {
        return Err(CliError::Validation(format!(
            "{}: bin centres must lie inside their bins",
            path.display()
        )));
    }
    Ok(TimingHistogram {
        bin_width_ps: width,
        origin_ps: rows[0].0,
        counts: rows.iter().map(|r| r.2).collect(),
        tick_ps: tick,
    })
}

/// Everything needed to rerun a command bit-for-bit.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub config_path: String,
    pub config_sha256: String,
    /// Canonical configuration the run used, overrides applied.
    pub config: Value,
    pub seed: u64,
    pub execution: String,
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub outputs: Vec<String>,
}
