//! Immutable undirected graphs in CSR form, plus the text formats they are
//! loaded from: edge lists, dense feature files and split directories.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// A node pair. Orientation is kept where it matters (negative sampling
/// corrupts the second endpoint) and ignored where it doesn't.
pub type Pair = (usize, usize);

/// Dense node-feature matrix, row `i` belongs to node `i`.
pub type FeatureMatrix = Array2<f64>;

/// Undirected graph in compressed sparse row form.
///
/// Rows are sorted and deduplicated, every arc has its reverse, and
/// self-loops are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    num_nodes: usize,
    row_offsets: Vec<usize>,
    col_targets: Vec<usize>,
}

impl SparseGraph {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_targets(&self) -> &[usize] {
        &self.col_targets
    }

    /// Number of stored arcs (twice the number of undirected edges).
    pub fn num_arcs(&self) -> usize {
        self.col_targets.len()
    }

    pub fn num_edges(&self) -> usize {
        self.col_targets.len() / 2
    }

    pub fn is_undirected(&self) -> bool {
        true
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.col_targets[self.row_offsets[u]..self.row_offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.row_offsets[u + 1] - self.row_offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes && v < self.num_nodes && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn check_node(&self, u: usize) -> Result<()> {
        if u >= self.num_nodes {
            return Err(Error::NodeOutOfRange {
                id: u,
                num_nodes: self.num_nodes,
            });
        }
        Ok(())
    }

    /// Every stored arc `(u, v)` in CSR order.
    pub fn arcs(&self) -> impl Iterator<Item = Pair> + '_ {
        (0..self.num_nodes).flat_map(move |u| self.neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in CSR order.
    pub fn edges(&self) -> Vec<Pair> {
        self.arcs().filter(|&(u, v)| u < v).collect()
    }
}

/// Builds a symmetric CSR graph. Each input pair is stored in both
/// directions; duplicates and self-loops are dropped.
pub fn build_csr(num_nodes: usize, edges: &[Pair]) -> Result<SparseGraph> {
    let mut degree = vec![0usize; num_nodes];
    for &(u, v) in edges {
        for id in [u, v] {
            if id >= num_nodes {
                return Err(Error::NodeOutOfRange { id, num_nodes });
            }
        }
        if u != v {
            degree[u] += 1;
            degree[v] += 1;
        }
    }

    let mut fill = vec![0usize; num_nodes + 1];
    for u in 0..num_nodes {
        fill[u + 1] = fill[u] + degree[u];
    }
    let mut raw = vec![0usize; fill[num_nodes]];
    let mut cursor = fill.clone();
    for &(u, v) in edges {
        if u != v {
            raw[cursor[u]] = v;
            cursor[u] += 1;
            raw[cursor[v]] = u;
            cursor[v] += 1;
        }
    }

    let mut row_offsets = Vec::with_capacity(num_nodes + 1);
    row_offsets.push(0);
    let mut col_targets = Vec::with_capacity(raw.len());
    for u in 0..num_nodes {
        let row = &mut raw[fill[u]..fill[u + 1]];
        row.sort_unstable();
        let mut last = None;
        for &v in row.iter() {
            if last != Some(v) {
                col_targets.push(v);
                last = Some(v);
            }
        }
        row_offsets.push(col_targets.len());
    }

    Ok(SparseGraph {
        num_nodes,
        row_offsets,
        col_targets,
    })
}

/// A parsed edge-list file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    /// Declared via `# nodes=N`, otherwise max id + 1.
    pub num_nodes: usize,
    pub declared_nodes: Option<usize>,
    pub edges: Vec<Pair>,
}

/// Reads a `src<TAB>dst` edge list.
///
/// `#` lines are comments, except an optional first line `# nodes=N`.
/// Self-loops and exact duplicate lines are dropped; first occurrence order
/// is kept.
pub fn ingest_edge_list(path: impl AsRef<Path>) -> Result<(usize, Vec<Pair>)> {
    let list = read_edge_list(path)?;
    Ok((list.num_nodes, list.edges))
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<EdgeList> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, path)
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<EdgeList> {
    let mut declared = None;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut max_id = None;
    let mut any_content = false;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if lineno == 1 {
                if let Some(n) = comment.trim().strip_prefix("nodes=") {
                    let n = n.trim().parse::<usize>().map_err(|_| Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno,
                        msg: format!("bad node-count header {trimmed:?}"),
                    })?;
                    declared = Some(n);
                    any_content = true;
                }
            }
            continue;
        }
        any_content = true;
        let (u, v) = parse_pair(trimmed).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            msg: format!("expected \"src<TAB>dst\", got {trimmed:?}"),
        })?;
        if let Some(n) = declared {
            if u >= n || v >= n {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    msg: format!("node id {} >= declared nodes={n}", u.max(v)),
                });
            }
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        if u != v && seen.insert((u, v)) {
            edges.push((u, v));
        }
    }

    if !any_content {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "empty edge list".into(),
        });
    }
    let num_nodes = declared.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    Ok(EdgeList {
        num_nodes,
        declared_nodes: declared,
        edges,
    })
}

fn parse_pair(line: &str) -> Option<Pair> {
    let mut it = line.split_whitespace();
    let u = it.next()?.parse().ok()?;
    let v = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((u, v))
}

/// Writes pairs in the edge-list format, with a `# nodes=N` header when given.
pub fn write_edge_list(path: impl AsRef<Path>, num_nodes: Option<usize>, pairs: &[Pair]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    if let Some(n) = num_nodes {
        out.push_str(&format!("# nodes={n}\n"));
    }
    for &(u, v) in pairs {
        out.push_str(&format!("{u}\t{v}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads a whitespace-separated dense feature file with one row per node.
pub fn load_features(path: impl AsRef<Path>, num_nodes: usize) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut data = Vec::new();
    let mut dim = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        };
        let row: Vec<f64> = trimmed
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(e.to_string()))?;
        if row.iter().any(|x| !x.is_finite()) {
            return Err(parse_err("non-finite feature value".into()));
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => return Err(parse_err(format!("row has {} values, expected {d}", row.len()))),
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    if rows != num_nodes {
        return Err(Error::Data(format!(
            "{}: {rows} feature rows for {num_nodes} nodes",
            path.display()
        )));
    }
    let dim = dim.unwrap_or(0);
    Array2::from_shape_vec((rows, dim), data).map_err(|e| Error::Shape(e.to_string()))
}

/// Train/valid/test positives plus optional fixed negative sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplits {
    pub num_nodes: usize,
    pub train_edges: Vec<Pair>,
    pub valid_edges: Vec<Pair>,
    pub test_edges: Vec<Pair>,
    pub valid_negatives: Option<Vec<Pair>>,
    pub test_negatives: Option<Vec<Pair>>,
}

fn unordered((u, v): Pair) -> Pair {
    (u.min(v), u.max(v))
}

impl DatasetSplits {
    /// Checks id ranges, positive-set disjointness and negative/positive
    /// disjointness, all on unordered pairs.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes;
        let named: [(&'static str, &[Pair]); 5] = [
            ("train", &self.train_edges),
            ("valid", &self.valid_edges),
            ("test", &self.test_edges),
            ("valid_neg", self.valid_negatives.as_deref().unwrap_or(&[])),
            ("test_neg", self.test_negatives.as_deref().unwrap_or(&[])),
        ];
        for (_, pairs) in &named {
            for &(u, v) in pairs.iter() {
                for id in [u, v] {
                    if id >= n {
                        return Err(Error::NodeOutOfRange { id, num_nodes: n });
                    }
                }
            }
        }

        let mut owner: std::collections::HashMap<Pair, &'static str> = Default::default();
        for (name, pairs) in &named[..3] {
            for &p in pairs.iter() {
                let key = unordered(p);
                if let Some(prev) = owner.get(&key) {
                    if prev != name {
                        return Err(Error::SplitOverlap(key.0, key.1, prev, name));
                    }
                } else {
                    owner.insert(key, name);
                }
            }
        }
        for (name, pairs) in &named[3..] {
            for &p in pairs.iter() {
                let key = unordered(p);
                if let Some(prev) = owner.get(&key) {
                    return Err(Error::SplitOverlap(key.0, key.1, prev, name));
                }
            }
        }
        Ok(())
    }

    /// Every positive pair from all three splits, unordered.
    pub fn all_positives(&self) -> HashSet<Pair> {
        self.train_edges
            .iter()
            .chain(&self.valid_edges)
            .chain(&self.test_edges)
            .map(|&p| unordered(p))
            .collect()
    }
}

/// Loads `train.tsv`, `valid.tsv`, `test.tsv` and the optional
/// `valid_neg.tsv` / `test_neg.tsv` from a directory.
///
/// The node count is the largest `# nodes=N` header found, else the largest
/// id seen plus one.
pub fn load_splits(dir: impl AsRef<Path>) -> Result<DatasetSplits> {
    load_splits_with_nodes(dir, None)
}

pub fn load_splits_with_nodes(dir: impl AsRef<Path>, num_nodes: Option<usize>) -> Result<DatasetSplits> {
    let dir = dir.as_ref();
    let mandatory = |name: &str| -> Result<EdgeList> {
        let path = dir.join(name);
        if !path.exists() {
            return Err(Error::Data(format!("missing split file {}", path.display())));
        }
        read_edge_list(path)
    };
    let optional = |name: &str| -> Result<Option<EdgeList>> {
        let path = dir.join(name);
        if path.exists() {
            read_edge_list(path).map(Some)
        } else {
            Ok(None)
        }
    };
    let train = mandatory("train.tsv")?;
    let valid = mandatory("valid.tsv")?;
    let test = mandatory("test.tsv")?;
    let valid_neg = optional("valid_neg.tsv")?;
    let test_neg = optional("test_neg.tsv")?;

    let lists: Vec<&EdgeList> = [
        Some(&train),
        Some(&valid),
        Some(&test),
        valid_neg.as_ref(),
        test_neg.as_ref(),
    ]
    .into_iter()
    .flatten()
    .collect();
    let declared = lists.iter().filter_map(|l| l.declared_nodes).max();
    let n = num_nodes
        .or(declared)
        .unwrap_or_else(|| lists.iter().map(|l| l.num_nodes).max().unwrap_or(0));

    let splits = DatasetSplits {
        num_nodes: n,
        train_edges: train.edges,
        valid_edges: valid.edges,
        test_edges: test.edges,
        valid_negatives: valid_neg.map(|l| l.edges),
        test_negatives: test_neg.map(|l| l.edges),
    };
    splits.validate()?;
    Ok(splits)
}

/// Writes a split directory readable by [`load_splits`].
pub fn write_splits(dir: impl AsRef<Path>, splits: &DatasetSplits) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = Some(splits.num_nodes);
    write_edge_list(dir.join("train.tsv"), n, &splits.train_edges)?;
    write_edge_list(dir.join("valid.tsv"), n, &splits.valid_edges)?;
    write_edge_list(dir.join("test.tsv"), n, &splits.test_edges)?;
    if let Some(neg) = &splits.valid_negatives {
        write_edge_list(dir.join("valid_neg.tsv"), n, neg)?;
    }
    if let Some(neg) = &splits.test_negatives {
        write_edge_list(dir.join("test_neg.tsv"), n, neg)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<EdgeList> {
        parse_edge_list(text, Path::new("mem.tsv"))
    }

    #[test]
    fn reads_plain_edge_list() {
        let l = parse("0\t1\n1\t2\n").unwrap();
        assert_eq!(l.num_nodes, 3);
        assert_eq!(l.edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn self_loop_only_file() {
        let l = parse("5\t5\n").unwrap();
        assert_eq!(l.num_nodes, 6);
        assert!(l.edges.is_empty());
    }

    #[test]
    fn duplicates_dropped_against_set_oracle() {
        let text = "0\t1\n0\t1\n2\t3\n0\t1\n3\t2\n";
        let l = parse(text).unwrap();
        let oracle: HashSet<Pair> = text.lines().map(|s| parse_pair(s).unwrap()).collect();
        assert_eq!(l.edges.len(), oracle.len());
        assert_eq!(l.edges.iter().copied().collect::<HashSet<_>>(), oracle);
    }

    #[test]
    fn header_and_errors() {
        let l = parse("# nodes=10\n0\t1\n").unwrap();
        assert_eq!(l.num_nodes, 10);
        let err = parse("# nodes=2\n0\t1\n1\t2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("0\t1\nfoo bar\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse("").is_err());
        assert!(parse("# just a comment\n").is_err());
    }

    #[test]
    fn csr_of_path() {
        let g = build_csr(3, &[(0, 1), (1, 2)]).unwrap();
        let degrees: Vec<_> = (0..3).map(|u| g.degree(u)).collect();
        assert_eq!(degrees, vec![1, 2, 1]);
        assert_eq!(g.num_arcs(), 4);
        assert_eq!(g.row_offsets(), &[0, 1, 3, 4]);
        assert_eq!(g.col_targets(), &[1, 0, 2, 1]);
    }

    #[test]
    fn csr_empty_and_symmetric_dedup() {
        let g = build_csr(2, &[]).unwrap();
        assert_eq!(g.row_offsets(), &[0, 0, 0]);
        let a = build_csr(3, &[(0, 1), (1, 0)]).unwrap();
        let b = build_csr(3, &[(0, 1)]).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            build_csr(2, &[(0, 2)]),
            Err(Error::NodeOutOfRange { id: 2, num_nodes: 2 })
        ));
    }

    #[test]
    fn csr_drops_self_loops() {
        let g = build_csr(2, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
    }

    fn split_dir(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in files {
            fs::write(dir.path().join(name), body).unwrap();
        }
        dir
    }

    #[test]
    fn splits_load() {
        let dir = split_dir(&[
            ("train.tsv", "0\t1\n"),
            ("valid.tsv", "1\t2\n"),
            ("test.tsv", "2\t3\n"),
            ("test_neg.tsv", "0\t3\n0\t2\n"),
        ]);
        let s = load_splits(dir.path()).unwrap();
        assert_eq!(s.num_nodes, 4);
        assert_eq!(s.test_negatives.as_deref(), Some(&[(0, 3), (0, 2)][..]));
        assert!(s.valid_negatives.is_none());
    }

    #[test]
    fn splits_overlap_rejected() {
        let dir = split_dir(&[("train.tsv", "0\t1\n"), ("valid.tsv", "1\t2\n"), ("test.tsv", "1\t0\n")]);
        let err = load_splits(dir.path()).unwrap_err();
        assert!(err.to_string().contains("split overlap"), "{err}");
    }

    #[test]
    fn splits_missing_file() {
        let dir = split_dir(&[("train.tsv", "0\t1\n"), ("valid.tsv", "1\t2\n")]);
        assert!(load_splits(dir.path()).unwrap_err().to_string().contains("test.tsv"));
    }

    #[test]
    fn negative_overlapping_positive_rejected() {
        let dir = split_dir(&[
            ("train.tsv", "0\t1\n"),
            ("valid.tsv", "1\t2\n"),
            ("test.tsv", "2\t3\n"),
            ("valid_neg.tsv", "1\t0\n"),
        ]);
        assert!(load_splits(dir.path()).is_err());
    }

    #[test]
    fn features_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.tsv");
        fs::write(&p, "1 2\n3 4\n").unwrap();
        let x = load_features(&p, 2).unwrap();
        assert_eq!(x[[1, 0]], 3.0);
        assert!(load_features(&p, 3).is_err());
        fs::write(&p, "1 2\n3\n").unwrap();
        assert!(load_features(&p, 2).is_err());
    }
}
