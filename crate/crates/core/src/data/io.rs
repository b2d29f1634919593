use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::hypergraph::Hypergraph;
use crate::models::TaskKind;
use crate::tensor::Tensor;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    num_nodes: usize,
    num_classes: usize,
    name: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    edges: Vec<Vec<usize>>,
    features: Vec<Vec<f64>>,
    label: usize,
}

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|e| DataError::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), DataError> {
    fs::write(path, contents).map_err(|e| DataError::io(path, e))
}

fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()))
}

/// Reads the directory layout written by [`save_node_dataset`]:
/// `hyperedges.txt`, `features.csv`, `labels.txt`, `meta.json` and an
/// optional `sensitive.txt`.
pub fn load_node_dataset(dir: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: Meta = serde_json::from_str(&read(&meta_path)?)
        .map_err(|e| DataError::parse(&meta_path, e.line(), e.to_string()))?;
    let n = meta.num_nodes;

    let feat_path = dir.join("features.csv");
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, text) in numbered(&read(&feat_path)?) {
        if text.is_empty() {
            continue;
        }
        let before = data.len();
        for field in text.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                DataError::parse(&feat_path, line, format!("non-numeric feature {:?}", field.trim()))
            })?;
            data.push(v);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(DataError::parse(&feat_path, line, format!("{width} columns, expected {c}")))
            }
            _ => {}
        }
        rows += 1;
    }
    if rows != n {
        return Err(DataError::Invalid(format!(
            "{}: {rows} feature rows but meta.json declares {n} nodes",
            feat_path.display()
        )));
    }
    let features =
        Tensor::from_vec(n, cols.unwrap_or(0), data).map_err(|e| DataError::Invalid(e.to_string()))?;

    let edge_path = dir.join("hyperedges.txt");
    let mut edges = Vec::new();
    for (line, text) in numbered(&read(&edge_path)?) {
        if text.is_empty() {
            continue;
        }
        let members = text
            .split_whitespace()
            .map(|t| {
                let v: usize = t
                    .parse()
                    .map_err(|_| DataError::parse(&edge_path, line, format!("bad node id {t:?}")))?;
                if v >= n {
                    return Err(DataError::parse(
                        &edge_path,
                        line,
                        format!("node id {v} out of range for {n} nodes"),
                    ));
                }
                Ok(v)
            })
            .collect::<Result<Vec<usize>, _>>()?;
        edges.push(members);
    }
    let hg = Hypergraph::new(&edges, n)?;

    let label_path = dir.join("labels.txt");
    let labels = read_column(&label_path, |v: usize| {
        if v < meta.num_classes {
            Ok(v)
        } else {
            Err(format!("label {v} outside {} classes", meta.num_classes))
        }
    })?;
    if labels.len() != n {
        return Err(DataError::Invalid(format!(
            "{}: {} labels for {n} nodes",
            label_path.display(),
            labels.len()
        )));
    }

    let sens_path = dir.join("sensitive.txt");
    let sensitive = if sens_path.exists() {
        let s = read_column(&sens_path, |v: u8| {
            if v <= 1 {
                Ok(v)
            } else {
                Err(format!("sensitive value {v} is not 0 or 1"))
            }
        })?;
        if s.len() != n {
            return Err(DataError::Invalid(format!(
                "{}: {} values for {n} nodes",
                sens_path.display(),
                s.len()
            )));
        }
        Some(s)
    } else {
        None
    };

    let ds = Dataset {
        name: meta.name,
        level: TaskKind::Node,
        hypergraphs: vec![hg],
        features: vec![features],
        labels,
        num_classes: meta.num_classes,
        sensitive,
    };
    ds.validate()?;
    Ok(ds)
}

fn read_column<T: std::str::FromStr>(
    path: &Path,
    check: impl Fn(T) -> Result<T, String>,
) -> Result<Vec<T>, DataError> {
    let mut out = Vec::new();
    for (line, text) in numbered(&read(path)?) {
        if text.is_empty() {
            continue;
        }
        let v: T =
            text.parse().map_err(|_| DataError::parse(path, line, format!("not an integer: {text:?}")))?;
        out.push(check(v).map_err(|m| DataError::parse(path, line, m))?);
    }
    Ok(out)
}

/// Writes node-level data in the format [`load_node_dataset`] reads.
pub fn save_node_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<(), DataError> {
    ds.validate()?;
    if ds.level == TaskKind::Graph {
        return Err(DataError::Invalid("graph-level data is saved as JSON lines".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
    let hg = ds.hypergraph();
    let mut text = String::new();
    for e in hg.edges() {
        let ids: Vec<String> = e.iter().map(usize::to_string).collect();
        text.push_str(&ids.join(" "));
        text.push('\n');
    }
    write(&dir.join("hyperedges.txt"), &text)?;

    text.clear();
    let x = &ds.features[0];
    for r in 0..x.rows() {
        for (c, v) in x.row(r).iter().enumerate() {
            if c > 0 {
                text.push(',');
            }
            write!(text, "{v}").expect("string write");
        }
        text.push('\n');
    }
    write(&dir.join("features.csv"), &text)?;

    let column = |values: &mut dyn Iterator<Item = String>| {
        let mut s = String::new();
        for v in values {
            s.push_str(&v);
            s.push('\n');
        }
        s
    };
    write(&dir.join("labels.txt"), &column(&mut ds.labels.iter().map(usize::to_string)))?;
    let sens_path = dir.join("sensitive.txt");
    match &ds.sensitive {
        Some(s) => write(&sens_path, &column(&mut s.iter().map(u8::to_string)))?,
        None if sens_path.exists() => {
            fs::remove_file(&sens_path).map_err(|e| DataError::io(&sens_path, e))?
        }
        None => {}
    }
    let meta = Meta { num_nodes: hg.num_nodes(), num_classes: ds.num_classes, name: ds.name.clone() };
    write(&dir.join("meta.json"), &(serde_json::to_string_pretty(&meta).expect("meta serialises") + "\n"))
}

/// Reads one hypergraph per line:
/// `{"edges": [[...]], "features": [[...]], "label": k}`.
/// The class count is one more than the largest label.
pub fn load_graph_dataset(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let mut hypergraphs = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut record = 0;
    for (line, text) in numbered(&read(path)?) {
        if text.is_empty() {
            continue;
        }
        let bad = |msg: String| DataError::parse(path, line, format!("record {record}: {msg}"));
        let r: GraphRecord = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let n = r.features.len();
        let width = r.features.first().map_or(0, Vec::len);
        if r.features.iter().any(|row| row.len() != width) {
            return Err(bad("ragged feature rows".into()));
        }
        let hg = Hypergraph::new(&r.edges, n).map_err(|e| bad(e.to_string()))?;
        let x = Tensor::from_vec(n, width, r.features.concat()).map_err(|e| bad(e.to_string()))?;
        if let Some(prev) = features.first().map(Tensor::cols) {
            if prev != width {
                return Err(bad(format!("feature width {width}, expected {prev}")));
            }
        }
        hypergraphs.push(hg);
        features.push(x);
        labels.push(r.label);
        record += 1;
    }
    if hypergraphs.is_empty() {
        return Err(DataError::Invalid(format!("{}: no records", path.display())));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ds =
        Dataset { name, level: TaskKind::Graph, hypergraphs, features, labels, num_classes, sensitive: None };
    ds.validate()?;
    Ok(ds)
}

/// Writes graph-level data in the format [`load_graph_dataset`] reads.
pub fn save_graph_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    ds.validate()?;
    if ds.level != TaskKind::Graph {
        return Err(DataError::Invalid("node-level data is saved as a directory".into()));
    }
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| DataError::io(parent, e))?;
    }
    let mut text = String::new();
    for ((hg, x), &label) in ds.hypergraphs.iter().zip(&ds.features).zip(&ds.labels) {
        let rec = GraphRecord { edges: hg.edge_lists(), features: x.to_rows(), label };
        text.push_str(&serde_json::to_string(&rec).expect("record serialises"));
        text.push('\n');
    }
    write(path, &text)
}

/// Saves a dataset in the format matching its level: a directory for node
/// data, a JSON-lines file for graph data.
pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    match ds.level {
        TaskKind::Graph => save_graph_dataset(ds, path),
        _ => save_node_dataset(ds, path),
    }
}
