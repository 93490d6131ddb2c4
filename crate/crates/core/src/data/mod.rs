//! Datasets on disk.
//!
//! The native layout is a directory of tab-separated files:
//!
//! * `nodes.tsv`: `id  type  label` with `?` for unlabelled nodes
//! * `edges.tsv`: `src  dst  edge_type`
//! * `features.tsv`: `id  v1,v2,...`
//! * `attributes.tsv` (optional): `id  attr_name  attr_value`
//!
//! Blank lines and lines starting with `#` are skipped. The LINQS citation
//! layout (`<name>.content`, `<name>.cites`) can be imported as well.

mod report;
mod split;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::construct::{AttributeTable, FeatureMatrix, SimpleGraph};
use crate::error::{Error, Result};

pub use report::{read_metrics, write_report, ReportPaths, RunReport, TimingReport};
pub use split::split_by_ratio;

pub const UNLABELLED: &str = "?";

/// Anomalies repaired while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadWarnings {
    /// Records repeating an already-seen directed edge.
    pub duplicate_edges: usize,
    /// Undirected edges listed in only one direction.
    pub symmetrized_edges: usize,
    pub self_loops: usize,
    /// Edges naming nodes absent from the node list (LINQS import only).
    pub dangling_edges: usize,
    pub empty_edge_file: bool,
}

impl LoadWarnings {
    pub fn messages(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.empty_edge_file {
            out.push("edge file holds no edges".to_string());
        }
        for (count, what) in [
            (self.duplicate_edges, "duplicate edge records dropped"),
            (self.symmetrized_edges, "one-directional edges symmetrized"),
            (self.self_loops, "self-loops dropped"),
            (self.dangling_edges, "edges with unknown endpoints dropped"),
        ] {
            if count > 0 {
                out.push(format!("{count} {what}"));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub node_ids: Vec<String>,
    pub graph: SimpleGraph,
    pub features: FeatureMatrix,
    pub labels: Vec<Option<usize>>,
    /// Sorted class names; labels index into this list.
    pub class_names: Vec<String>,
    pub attributes: AttributeTable,
    pub warnings: LoadWarnings,
}

impl PartialEq for Dataset {
    /// Content equality; the load warnings are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.node_ids == other.node_ids
            && self.graph == other.graph
            && self.features == other.features
            && self.labels == other.labels
            && self.class_names == other.class_names
            && self.attributes == other.attributes
    }
}

impl Dataset {
    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_labelled(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn records(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

fn fields<'a>(path: &Path, line: usize, text: &'a str, want: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = text.split('\t').collect();
    if f.len() != want {
        return Err(Error::parse(path, line, format!("expected {want} tab-separated fields, found {}", f.len())));
    }
    Ok(f)
}

fn lookup(index: &HashMap<String, usize>, path: &Path, line: usize, id: &str) -> Result<usize> {
    index.get(id).copied().ok_or_else(|| Error::UnknownNode {
        file: path.to_path_buf(),
        line,
        id: id.to_string(),
    })
}

/// Collapses directed edge records into an undirected edge list, counting
/// duplicates, one-directional records and self-loops.
fn undirected(records: Vec<(usize, usize, String)>, warnings: &mut LoadWarnings) -> Vec<(usize, usize, String)> {
    let mut seen = BTreeSet::new();
    let mut pairs: BTreeMap<(usize, usize), (String, [bool; 2])> = BTreeMap::new();
    for (u, v, t) in records {
        if u == v {
            warnings.self_loops += 1;
            continue;
        }
        if !seen.insert((u, v)) {
            warnings.duplicate_edges += 1;
            continue;
        }
        let key = (u.min(v), u.max(v));
        let entry = pairs.entry(key).or_insert_with(|| (t, [false; 2]));
        entry.1[usize::from(u > v)] = true;
    }
    pairs
        .into_iter()
        .map(|((u, v), (t, dirs))| {
            if !(dirs[0] && dirs[1]) {
                warnings.symmetrized_edges += 1;
            }
            (u, v, t)
        })
        .collect()
}

/// Loads a dataset in the native layout.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let nodes_path = dir.join("nodes.tsv");
    let mut node_ids = Vec::new();
    let mut node_types = Vec::new();
    let mut raw_labels = Vec::new();
    let mut index = HashMap::new();
    for (line, text) in records(&nodes_path)? {
        let f = fields(&nodes_path, line, &text, 3)?;
        if index.insert(f[0].to_string(), node_ids.len()).is_some() {
            return Err(Error::parse(&nodes_path, line, format!("duplicate node id `{}`", f[0])));
        }
        node_ids.push(f[0].to_string());
        node_types.push(f[1].to_string());
        raw_labels.push((f[2] != UNLABELLED).then(|| f[2].to_string()));
    }
    let n = node_ids.len();

    let edges_path = dir.join("edges.tsv");
    let mut directed = Vec::new();
    for (line, text) in records(&edges_path)? {
        let f = fields(&edges_path, line, &text, 3)?;
        let u = lookup(&index, &edges_path, line, f[0])?;
        let v = lookup(&index, &edges_path, line, f[1])?;
        directed.push((u, v, f[2].to_string()));
    }
    let mut warnings = LoadWarnings {
        empty_edge_file: directed.is_empty(),
        ..LoadWarnings::default()
    };
    let edges = undirected(directed, &mut warnings);

    let features_path = dir.join("features.tsv");
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut width = None;
    for (line, text) in records(&features_path)? {
        let f = fields(&features_path, line, &text, 2)?;
        let v = lookup(&index, &features_path, line, f[0])?;
        let values = f[1]
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::parse(&features_path, line, format!("bad feature value: {e}")))?;
        let expected = *width.get_or_insert(values.len());
        if values.len() != expected {
            return Err(Error::RaggedFeatures {
                file: features_path.clone(),
                line,
                expected,
                found: values.len(),
            });
        }
        if rows[v].replace(values).is_some() {
            return Err(Error::parse(&features_path, line, format!("second feature row for `{}`", f[0])));
        }
    }
    let width = width.unwrap_or(0);
    let mut x = Array2::zeros((n, width));
    for (v, row) in rows.into_iter().enumerate() {
        let row = row.ok_or_else(|| {
            Error::parse(&features_path, 0, format!("node `{}` has no feature row", node_ids[v]))
        })?;
        x.row_mut(v).assign(&ndarray::ArrayView1::from(&row));
    }
    let features = FeatureMatrix::new(x)?;

    let mut attributes = AttributeTable::new(n);
    let attr_path = dir.join("attributes.tsv");
    if attr_path.exists() {
        for (line, text) in records(&attr_path)? {
            let f = fields(&attr_path, line, &text, 3)?;
            let v = lookup(&index, &attr_path, line, f[0])?;
            attributes
                .set(v, f[1], f[2])
                .map_err(|e| Error::parse(&attr_path, line, e.to_string()))?;
        }
    }

    let name = dir.file_name().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
    build(name, node_ids, node_types, raw_labels, edges, features, attributes, warnings)
}

#[allow(clippy::too_many_arguments)]
fn build(
    name: String,
    node_ids: Vec<String>,
    node_types: Vec<String>,
    raw_labels: Vec<Option<String>>,
    edges: Vec<(usize, usize, String)>,
    features: FeatureMatrix,
    attributes: AttributeTable,
    warnings: LoadWarnings,
) -> Result<Dataset> {
    let class_names: Vec<String> = raw_labels.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw_labels
        .iter()
        .map(|l| l.as_ref().map(|l| class_names.binary_search(l).unwrap()))
        .collect();
    let graph = SimpleGraph::new(node_ids.len(), node_types, edges)?;
    Ok(Dataset {
        name,
        node_ids,
        graph,
        features,
        labels,
        class_names,
        attributes,
        warnings,
    })
}

/// Writes the native layout; every undirected edge is written in both directions.
pub fn save_dataset(d: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("nodes.tsv"))?);
    for (v, id) in d.node_ids.iter().enumerate() {
        let label = d.labels[v].map_or(UNLABELLED, |c| d.class_names[c].as_str());
        writeln!(w, "{id}\t{}\t{label}", d.graph.node_types()[v])?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("edges.tsv"))?);
    for (u, v, t) in d.graph.edges() {
        writeln!(w, "{}\t{}\t{t}", d.node_ids[*u], d.node_ids[*v])?;
        writeln!(w, "{}\t{}\t{t}", d.node_ids[*v], d.node_ids[*u])?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("features.tsv"))?);
    for (v, id) in d.node_ids.iter().enumerate() {
        let row: Vec<String> = d.features.view().row(v).iter().map(|x| x.to_string()).collect();
        writeln!(w, "{id}\t{}", row.join(","))?;
    }
    w.flush()?;
    let attr_path = dir.join("attributes.tsv");
    if !d.attributes.is_empty() {
        let mut w = BufWriter::new(File::create(&attr_path)?);
        for (v, a, val) in d.attributes.rows() {
            writeln!(w, "{}\t{a}\t{val}", d.node_ids[v])?;
        }
        w.flush()?;
    } else if attr_path.exists() {
        std::fs::remove_file(attr_path)?;
    }
    Ok(())
}

fn find_with_extension(dir: &Path, ext: &str) -> Result<Option<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut hits: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    hits.sort();
    Ok(hits.into_iter().next())
}

/// Imports the LINQS layout: `<name>.content` rows `id f1 … fC label` and
/// `<name>.cites` rows `cited citing`, both whitespace-separated. Nodes keep
/// the order of the content file, all with type `paper`; edges get type `cites`.
/// Citations naming unknown papers are dropped and counted.
pub fn import_linqs(dir: &Path) -> Result<Dataset> {
    let content = find_with_extension(dir, "content")?.ok_or_else(|| Error::MissingFile(dir.join("*.content")))?;
    let cites = content.with_extension("cites");
    let mut node_ids = Vec::new();
    let mut raw_labels = Vec::new();
    let mut values = Vec::new();
    let mut width = None;
    let mut index = HashMap::new();
    for (line, text) in records(&content)? {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() < 3 {
            return Err(Error::parse(&content, line, "expected id, features and label"));
        }
        let c = f.len() - 2;
        let expected = *width.get_or_insert(c);
        if c != expected {
            return Err(Error::RaggedFeatures {
                file: content.clone(),
                line,
                expected,
                found: c,
            });
        }
        if index.insert(f[0].to_string(), node_ids.len()).is_some() {
            return Err(Error::parse(&content, line, format!("duplicate paper id `{}`", f[0])));
        }
        for s in &f[1..=c] {
            values.push(
                s.parse::<f64>()
                    .map_err(|e| Error::parse(&content, line, format!("bad feature value: {e}")))?,
            );
        }
        node_ids.push(f[0].to_string());
        raw_labels.push(Some(f[c + 1].to_string()));
    }
    let n = node_ids.len();
    let features = FeatureMatrix::new(
        Array2::from_shape_vec((n, width.unwrap_or(0)), values).map_err(|e| Error::Shape(e.to_string()))?,
    )?;
    let mut warnings = LoadWarnings::default();
    let mut directed = Vec::new();
    for (line, text) in records(&cites)? {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 2 {
            return Err(Error::parse(&cites, line, "expected two paper ids"));
        }
        match (index.get(f[0]), index.get(f[1])) {
            (Some(&a), Some(&b)) => directed.push((b, a, "cites".to_string())),
            _ => warnings.dangling_edges += 1,
        }
    }
    warnings.empty_edge_file = directed.is_empty();
    // Citations are directed; a single record per pair is the norm, so it is
    // not reported as an asymmetry.
    let mut edges = undirected(directed, &mut warnings);
    edges.sort();
    warnings.symmetrized_edges = 0;
    let name = content.file_stem().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
    build(
        name,
        node_ids,
        vec!["paper".to_string(); n],
        raw_labels,
        edges,
        features,
        AttributeTable::new(n),
        warnings,
    )
}

/// Loads either layout: the native one when `nodes.tsv` is present, LINQS otherwise.
pub fn load_any(dir: &Path) -> Result<Dataset> {
    if dir.join("nodes.tsv").exists() {
        load_dataset(dir)
    } else {
        import_linqs(dir)
    }
}
