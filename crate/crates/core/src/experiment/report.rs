//! Report bundles and their JSON, CSV and Markdown renderings.
//!
//! Every file starts with the schema id `fair-unlearn/report/v1`: as the
//! `schema` field in JSON, as a `#` comment line in CSV and as an HTML
//! comment in Markdown. Wall-clock timings never enter these files; they
//! are written separately by [`Timings::write`].

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Variant};
use super::SeedRecord;
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "fair-unlearn/report/v1";

/// Mean and sample standard deviation over successful seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Aggregate { mean, std, n }
    }
}

/// Aggregates per metric name over `(metric, value)` rows.
pub fn aggregate<'a>(rows: impl IntoIterator<Item = Vec<(&'a str, f64)>>) -> BTreeMap<String, Aggregate> {
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in rows {
        for (name, value) in row {
            columns.entry(name.to_string()).or_default().push(value);
        }
    }
    columns
        .into_iter()
        .map(|(name, values)| (name, Aggregate::of(&values)))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub per_seed: Vec<(u64, f64)>,
}

impl Timings {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema: String,
    pub config: ExperimentConfig,
    pub records: Vec<SeedRecord>,
    pub aggregates: BTreeMap<String, Aggregate>,
    /// At least one seed failed.
    pub partial: bool,
    #[serde(skip)]
    pub timings: Timings,
}

impl ReportBundle {
    pub fn new(config: ExperimentConfig, records: Vec<SeedRecord>, timings: Timings) -> Self {
        let aggregates = aggregate(records.iter().filter_map(|r| r.metrics.as_ref()).map(|m| m.scalars()));
        let partial = records.iter().any(|r| r.metrics.is_none());
        ReportBundle {
            schema: REPORT_SCHEMA.to_string(),
            config,
            records,
            aggregates,
            partial,
            timings,
        }
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.aggregates.get(metric).map(|a| a.mean)
    }

    /// Per-seed values of one metric, skipping failed seeds.
    pub fn per_seed(&self, metric: &str) -> Vec<f64> {
        self.records
            .iter()
            .filter_map(|r| r.metrics.as_ref())
            .filter_map(|m| m.scalars().into_iter().find(|(k, _)| *k == metric).map(|(_, v)| v))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
        }
    }
}

pub fn render_json(bundle: &ReportBundle) -> Result<String> {
    Ok(serde_json::to_string_pretty(bundle)? + "\n")
}

const CSV_LEAD: [&str; 3] = ["seed", "variant", "status"];

/// One row per seed: seed, variant, status, then every scalar metric.
/// Failed seeds have empty metric cells.
pub fn render_csv(bundle: &ReportBundle) -> Result<String> {
    let names: Vec<&str> = match bundle.records.iter().find_map(|r| r.metrics.as_ref()) {
        Some(m) => m.scalars().into_iter().map(|(k, _)| k).collect(),
        None => Vec::new(),
    };
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_LEAD.iter().chain(&names))?;
    for r in &bundle.records {
        let mut row = vec![r.seed.to_string(), r.variant.to_string()];
        match &r.metrics {
            Some(m) => {
                row.push("ok".into());
                row.extend(m.scalars().into_iter().map(|(_, v)| v.to_string()));
            }
            None => {
                row.push(format!("failed: {}", r.error.as_deref().unwrap_or("unknown")));
                row.extend(names.iter().map(|_| String::new()));
            }
        }
        writer.write_record(&row)?;
    }
    let body = String::from_utf8(writer.into_inner().map_err(|e| Error::Format(e.to_string()))?)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(format!("# {REPORT_SCHEMA}\n{body}"))
}

fn cell(bundle: &ReportBundle, metric: &str) -> String {
    match bundle.aggregates.get(metric) {
        Some(a) => format!("{:.2} ± {:.2}", 100.0 * a.mean, 100.0 * a.std),
        None => "n/a".into(),
    }
}

/// One row per bundle with post-unlearning test metrics in percent.
pub fn render_markdown(bundles: &[ReportBundle]) -> String {
    let mut out = format!("<!-- {REPORT_SCHEMA} -->\n");
    out.push_str("| Variant | Seeds | ACC ↑ | ΔSP ↓ | ΔEO ↓ | MIA AUC forget | MIA AUC train |\n");
    out.push_str("|---|---|---|---|---|---|---|\n");
    for b in bundles {
        let ok = b.records.iter().filter(|r| r.metrics.is_some()).count();
        out.push_str(&format!(
            "| {} | {}/{} | {} | {} | {} | {} | {} |\n",
            b.variant(),
            ok,
            b.records.len(),
            cell(b, "post_accuracy"),
            cell(b, "post_delta_sp"),
            cell(b, "post_delta_eo"),
            cell(b, "mia_forget_post_auc"),
            cell(b, "mia_train_post_auc"),
        ));
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_report(bundle: &ReportBundle, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let text = match format {
        ReportFormat::Json => render_json(bundle)?,
        ReportFormat::Csv => render_csv(bundle)?,
        ReportFormat::Markdown => render_markdown(std::slice::from_ref(bundle)),
    };
    write(path.as_ref(), &text)
}

pub fn emit_markdown(bundles: &[ReportBundle], path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &render_markdown(bundles))
}

/// Parses a CSV written by [`render_csv`] back into per-seed metric rows of
/// the successful seeds, keyed by column name including `seed`.
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<BTreeMap<String, f64>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    if first.trim() != format!("# {REPORT_SCHEMA}") {
        return Err(Error::Format(format!(
            "{}: missing `{REPORT_SCHEMA}` header",
            path.display()
        )));
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.get(2) != Some("ok") {
            continue;
        }
        let mut row = BTreeMap::new();
        let seed = record.get(0).unwrap_or_default();
        let seed = seed.parse::<f64>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i as u64 + 3,
            message: format!("seed: {e}"),
        })?;
        row.insert("seed".to_string(), seed);
        for (name, value) in headers.iter().zip(record.iter()).skip(CSV_LEAD.len()) {
            let v = value.parse::<f64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 3,
                message: format!("{name}: {e}"),
            })?;
            row.insert(name.to_string(), v);
        }
        rows.push(row);
    }
    Ok(rows)
}
