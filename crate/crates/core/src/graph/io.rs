//! Dataset ingestion.
//!
//! Two plain-text files describe a dataset:
//!
//! * **edge list**: one undirected edge per line, two whitespace-separated
//!   node ids. Duplicate edges are ignored. Blank lines and lines starting
//!   with `#` are skipped.
//! * **node table**: comma-separated `node_id,label,sensitive,f_1,...,f_d`.
//!   An empty `label` or `sensitive` field means "unknown"; negative values
//!   are treated as unknown too. Labels above 1 are merged into class 1.
//!   Sensitive values must be 0 or 1. A first row whose first field is
//!   `node_id` is treated as a header.
//!
//! Node ids are arbitrary strings and are mapped to dense indices in
//! node-table order.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestSummary {
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub labeled: usize,
    pub sensitive_known: usize,
}

impl std::fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} nodes, {} edges, {} features ({} labeled, {} with sensitive attribute)",
            self.nodes, self.edges, self.features, self.labeled, self.sensitive_known
        )
    }
}

impl IngestSummary {
    pub fn of(graph: &Graph) -> Self {
        IngestSummary {
            nodes: graph.num_nodes(),
            edges: graph.num_edges(),
            features: graph.num_features(),
            labeled: graph.labels().iter().flatten().count(),
            sensitive_known: graph.sensitive().iter().flatten().count(),
        }
    }
}

struct NodeTable {
    ids: Vec<String>,
    labels: Vec<Option<u8>>,
    sensitive: Vec<Option<u8>>,
    features: Array2<f64>,
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_optional_int(field: &str) -> std::result::Result<Option<i64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    // tolerate "1.0" style integers
    let value: f64 = field
        .parse()
        .map_err(|_| format!("`{field}` is not a number"))?;
    if value.fract() != 0.0 {
        return Err(format!("`{field}` is not an integer"));
    }
    Ok(Some(value as i64))
}

fn read_node_table(path: &Path) -> Result<NodeTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut sensitive = Vec::new();
    let mut values = Vec::new();
    let mut width: Option<usize> = None;

    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(row as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if row == 0 && record.get(0) == Some("node_id") {
            continue;
        }
        if record.len() < 3 {
            return Err(parse_error(
                path,
                line,
                "expected node_id,label,sensitive[,features...]",
            ));
        }
        let d = record.len() - 3;
        match width {
            None => width = Some(d),
            Some(w) if w != d => {
                return Err(parse_error(
                    path,
                    line,
                    format!("expected {w} feature columns, found {d}"),
                ))
            }
            _ => {}
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_error(path, line, "empty node id"));
        }
        let label = parse_optional_int(&record[1])
            .map_err(|m| parse_error(path, line, format!("label: {m}")))?
            .filter(|&v| v >= 0)
            .map(|v| u8::from(v >= 1));
        let sens = match parse_optional_int(&record[2])
            .map_err(|m| parse_error(path, line, format!("sensitive: {m}")))?
        {
            None => None,
            Some(v) if v < 0 => None,
            Some(v @ (0 | 1)) => Some(v as u8),
            Some(v) => {
                return Err(parse_error(
                    path,
                    line,
                    format!("sensitive value {v} is not binary"),
                ))
            }
        };
        for k in 0..d {
            let field = &record[3 + k];
            let value: f64 = field.parse().map_err(|_| {
                parse_error(path, line, format!("feature {k}: `{field}` is not a number"))
            })?;
            values.push(value);
        }
        ids.push(id);
        labels.push(label);
        sensitive.push(sens);
    }

    let d = width.unwrap_or(0);
    let features = Array2::from_shape_vec((ids.len(), d), values)
        .expect("row widths were checked while parsing");
    Ok(NodeTable {
        ids,
        labels,
        sensitive,
        features,
    })
}

fn read_edge_list(path: &Path, graph_ids: &std::collections::HashMap<&str, usize>) -> Result<Vec<(usize, usize)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_error(path, line_no, "expected exactly two node ids"));
        };
        let lookup = |id: &str| {
            graph_ids
                .get(id)
                .copied()
                .ok_or_else(|| parse_error(path, line_no, format!("unknown node id `{id}`")))
        };
        edges.push((lookup(a)?, lookup(b)?));
    }
    Ok(edges)
}

/// Reads a dataset from an edge list and a node table.
pub fn ingest_dataset(edge_path: impl AsRef<Path>, node_path: impl AsRef<Path>) -> Result<Graph> {
    let node_path = node_path.as_ref();
    let table = read_node_table(node_path)?;

    let mut index = std::collections::HashMap::with_capacity(table.ids.len());
    for (i, id) in table.ids.iter().enumerate() {
        if index.insert(id.as_str(), i).is_some() {
            return Err(crate::error::GraphError::DuplicateNodeId(id.clone()).into());
        }
    }
    let edges = read_edge_list(edge_path.as_ref(), &index)?;

    let graph = Graph::new(
        table.ids,
        &edges,
        table.features,
        table.labels,
        table.sensitive,
    )?;
    log::info!("ingested {}", IngestSummary::of(&graph));
    Ok(graph)
}

/// Writes a graph in the ingestion format.
pub fn write_dataset(graph: &Graph, edge_path: impl AsRef<Path>, node_path: impl AsRef<Path>) -> Result<()> {
    use std::io::Write;
    let edge_path = edge_path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(edge_path).map_err(|e| Error::io(edge_path, e))?);
    for (u, v) in graph.edges() {
        writeln!(out, "{} {}", graph.node_id(u), graph.node_id(v)).map_err(|e| Error::io(edge_path, e))?;
    }
    out.flush().map_err(|e| Error::io(edge_path, e))?;

    let node_path = node_path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(node_path).map_err(|e| Error::io(node_path, e))?);
    let opt = |v: Option<u8>| v.map(|v| v.to_string()).unwrap_or_default();
    for v in 0..graph.num_nodes() {
        let mut line = format!(
            "{},{},{}",
            graph.node_id(v),
            opt(graph.label(v)),
            opt(graph.sensitive()[v])
        );
        for x in graph.features().row(v) {
            line.push(',');
            line.push_str(&x.to_string());
        }
        writeln!(out, "{line}").map_err(|e| Error::io(node_path, e))?;
    }
    out.flush().map_err(|e| Error::io(node_path, e))
}
