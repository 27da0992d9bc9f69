use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::random::seeded;
use crate::scalar::Scalar;

/// Train/validation/test node indices, each sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn is_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.train.iter().chain(&self.val).chain(&self.test).all(|&i| seen.insert(i))
    }
}

/// A node-classification graph: features, labels, symmetric 0/1 adjacency
/// and a split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T: Scalar> {
    pub features: DenseMatrix<T>,
    pub labels: Vec<usize>,
    /// Class names, sorted; `labels[i]` indexes into this.
    pub label_names: Vec<String>,
    /// Node identifiers as they appear in the content file, in row order.
    pub node_ids: Vec<String>,
    pub adjacency: SparseMatrix<T>,
    /// Number of non-empty lines in the edge file, before dedup and self-loop removal.
    pub edge_records: usize,
    pub split: Split,
}

impl<T: Scalar> Dataset<T> {
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn n_classes(&self) -> usize {
        self.label_names.len()
    }

    /// Unique undirected edges.
    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Scales every feature row to unit L1 norm. All-zero rows are left alone.
    pub fn normalize_rows(mut self) -> Self {
        let d = self.features.n_cols();
        for i in 0..self.features.n_rows() {
            let row = self.features.row_mut(i);
            let s: T = row.iter().map(|v| v.abs()).sum();
            if s > T::zero() {
                row.iter_mut().for_each(|v| *v /= s);
            }
            debug_assert_eq!(row.len(), d);
        }
        self
    }

    /// Replaces the split with one drawn by [`make_split`].
    pub fn with_split(self, per_class: usize, n_val: usize, n_test: usize, seed: u64) -> Result<Self> {
        make_split(self, per_class, n_val, n_test, seed)
    }

    /// Integer node count per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if !line.trim().is_empty() {
            out.push((idx + 1, line));
        }
    }
    Ok(out)
}

/// Reads a content file (`id  f_1 .. f_d  label` per line) and an edge file
/// (`id_a  id_b` per line). Either may be gzip-compressed (`.gz` suffix).
///
/// Edges are treated as undirected; duplicates and reversed duplicates collapse
/// and self-loops are dropped. Feature values are kept exactly as written.
pub fn load_dataset<T: Scalar>(content_path: impl AsRef<Path>, edges_path: impl AsRef<Path>) -> Result<Dataset<T>> {
    let content_path = content_path.as_ref();
    let edges_path = edges_path.as_ref();
    let parse_err = |path: &Path, line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut node_ids = Vec::new();
    let mut raw_labels = Vec::new();
    let mut values = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut n_features = None;
    for (line_no, line) in lines(content_path)? {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(parse_err(content_path, line_no, "expected `id features... label`".into()));
        }
        let d = tokens.len() - 2;
        match n_features {
            None => n_features = Some(d),
            Some(expected) if expected != d => {
                return Err(parse_err(
                    content_path,
                    line_no,
                    format!("expected {expected} features, found {d}"),
                ))
            }
            _ => {}
        }
        let id = tokens[0].to_string();
        if index.insert(id.clone(), node_ids.len()).is_some() {
            return Err(parse_err(content_path, line_no, format!("duplicate node id `{id}`")));
        }
        for tok in &tokens[1..=d] {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(content_path, line_no, format!("bad feature value `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(content_path, line_no, format!("non-finite feature `{tok}`")));
            }
            values.push(T::of(v));
        }
        node_ids.push(id);
        raw_labels.push(tokens[d + 1].to_string());
    }
    let n = node_ids.len();
    let d = n_features.unwrap_or(0);

    let label_names: Vec<String> = raw_labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw_labels
        .iter()
        .map(|l| label_names.binary_search(l).expect("label collected above"))
        .collect();

    let mut edges = BTreeSet::new();
    let mut edge_records = 0;
    for (line_no, line) in lines(edges_path)? {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(parse_err(edges_path, line_no, "expected `id_a id_b`".into()));
        }
        let lookup = |tok: &str| {
            index
                .get(tok)
                .copied()
                .ok_or_else(|| parse_err(edges_path, line_no, format!("unknown node id `{tok}`")))
        };
        let (a, b) = (lookup(tokens[0])?, lookup(tokens[1])?);
        edge_records += 1;
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let triplets = edges
        .iter()
        .flat_map(|&(a, b)| [(a, b, T::one()), (b, a, T::one())]);

    Ok(Dataset {
        features: DenseMatrix::new(n, d, values)?,
        labels,
        label_names,
        node_ids,
        adjacency: SparseMatrix::from_triplets(n, n, triplets)?,
        edge_records,
        split: Split::default(),
    })
}

/// Writes a dataset in the format read by [`load_dataset`]: one content line
/// per node in row order, one edge line per undirected edge with `a < b`.
pub fn write_dataset<T: Scalar>(
    ds: &Dataset<T>,
    content_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
) -> Result<()> {
    let io_err = |path: &Path, e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let content_path = content_path.as_ref();
    let mut out = BufWriter::new(File::create(content_path).map_err(|e| io_err(content_path, e))?);
    for i in 0..ds.n_nodes() {
        let mut line = ds.node_ids[i].clone();
        for v in ds.features.row(i) {
            line.push('\t');
            line.push_str(&v.to_string());
        }
        line.push('\t');
        line.push_str(&ds.label_names[ds.labels[i]]);
        writeln!(out, "{line}").map_err(|e| io_err(content_path, e))?;
    }
    out.flush().map_err(|e| io_err(content_path, e))?;

    let edges_path = edges_path.as_ref();
    let mut out = BufWriter::new(File::create(edges_path).map_err(|e| io_err(edges_path, e))?);
    for (a, b, _) in ds.adjacency.triplets().filter(|&(a, b, _)| a < b) {
        writeln!(out, "{}\t{}", ds.node_ids[a], ds.node_ids[b]).map_err(|e| io_err(edges_path, e))?;
    }
    out.flush().map_err(|e| io_err(edges_path, e))
}

/// Draws `per_class` training nodes from every class, then `n_val` validation
/// and `n_test` test nodes from the remainder. Deterministic in `seed`.
pub fn make_split<T: Scalar>(
    mut ds: Dataset<T>,
    per_class: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    let counts = ds.class_counts();
    if let Some((c, &have)) = counts.iter().enumerate().find(|&(_, &k)| k < per_class) {
        return Err(Error::Split(format!(
            "class `{}` has {have} nodes, {per_class} requested",
            ds.label_names[c]
        )));
    }
    let mut order: Vec<usize> = (0..ds.n_nodes()).collect();
    order.shuffle(&mut seeded(seed));

    let mut taken = vec![0; ds.n_classes()];
    let mut train = Vec::new();
    let mut rest = Vec::new();
    for &i in &order {
        let y = ds.labels[i];
        if taken[y] < per_class {
            taken[y] += 1;
            train.push(i);
        } else {
            rest.push(i);
        }
    }
    if rest.len() < n_val + n_test {
        return Err(Error::Split(format!(
            "{} nodes left after training selection, {} requested for validation and test",
            rest.len(),
            n_val + n_test
        )));
    }
    let mut val = rest[..n_val].to_vec();
    let mut test = rest[n_val..n_val + n_test].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    ds.split = Split { train, val, test };
    Ok(ds)
}
