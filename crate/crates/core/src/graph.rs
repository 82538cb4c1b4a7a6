//! Undirected weighted graphs in compressed row storage.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Undirected, simple, weighted graph.
///
/// Edges are kept once as `(i, j, w)` with `i < j`, sorted lexicographically,
/// and a symmetric CSR view is built next to them so that both edge loops and
/// row loops are cheap. Explicit zero weights and self-loops are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
    /// For each CSR slot, the index of the undirected edge it belongs to.
    slot_edge: Vec<usize>,
}

impl WeightedGraph {
    /// Builds a graph from an arbitrary list of undirected edges.
    ///
    /// Endpoints may be given in either order; duplicates, self-loops,
    /// zero or non-finite weights are errors.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if w == 0.0 || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("edge ({a}, {b}) has weight {w}")));
            }
            list.push((a.min(b), a.max(b), w));
        }
        list.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        for pair in list.windows(2) {
            if pair[0].0 == pair[1].0 && pair[0].1 == pair[1].1 {
                return Err(Error::InvalidParameter(format!("duplicate edge ({}, {})", pair[0].0, pair[0].1)));
            }
        }
        Ok(Self::from_sorted_unchecked(n, list))
    }

    /// Builds from edges already sorted, deduplicated, with `i < j` and
    /// nonzero weights.
    pub(crate) fn from_sorted_unchecked(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut deg = vec![0usize; n];
        for &(i, j, _) in &edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + deg[i];
        }
        let nnz = row_ptr[n];
        let mut col = vec![0usize; nnz];
        let mut val = vec![0.0; nnz];
        let mut slot_edge = vec![0usize; nnz];
        let mut fill = row_ptr.clone();
        // Edges are sorted by (i, j), so filling the lower side first keeps
        // every row sorted by column.
        for (e, &(i, j, w)) in edges.iter().enumerate() {
            let s = fill[j];
            col[s] = i;
            val[s] = w;
            slot_edge[s] = e;
            fill[j] += 1;
        }
        for (e, &(i, j, w)) in edges.iter().enumerate() {
            let s = fill[i];
            col[s] = j;
            val[s] = w;
            slot_edge[s] = e;
            fill[i] += 1;
        }
        Self { n, edges, row_ptr, col, val, slot_edge }
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unchecked(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Undirected edges `(i, j, w)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Average degree `2|E| / n`.
    pub fn avg_degree(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.n as f64
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Neighbours of `i` with the weight of the connecting edge, sorted by id.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    /// Like [`neighbors`](Self::neighbors) but also yields the undirected edge index.
    pub fn neighbor_edges(&self, i: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()]
            .iter()
            .copied()
            .zip(self.val[r.clone()].iter().copied())
            .zip(self.slot_edge[r].iter().copied())
            .map(|((j, w), e)| (j, w, e))
    }

    /// Weight of edge `(i, j)`, if present.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].binary_search(&j).ok().map(|k| self.val[r.start + k])
    }

    /// Edge weights in edge order.
    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.2).collect()
    }

    pub fn max_abs_weight(&self) -> f64 {
        self.edges.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }

    /// CSR arrays `(row_ptr, col, val)` of the symmetric adjacency.
    pub fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.row_ptr, &self.col, &self.val)
    }

    /// Same topology with new weights, given in edge order.
    ///
    /// Fails if a new weight is zero or non-finite.
    pub fn with_weights(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::Dimension { expected: self.edges.len(), got: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| **w == 0.0 || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("replacement weight {w}")));
        }
        let mut g = self.clone();
        for (e, w) in g.edges.iter_mut().zip(weights) {
            e.2 = *w;
        }
        for (v, &e) in g.val.iter_mut().zip(&g.slot_edge) {
            *v = weights[e];
        }
        Ok(g)
    }

    /// Applies `f` to every weight, keeping the topology.
    pub fn map_weights(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let w: Vec<f64> = self.edges.iter().map(|e| f(e.2)).collect();
        self.with_weights(&w)
    }

    /// Unweighted copy (all weights 1).
    pub fn topology(&self) -> Self {
        self.map_weights(|_| 1.0).expect("unit weights are valid")
    }

    /// `y = J x` for the symmetric weighted adjacency.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[s] * x[self.col[s]];
            }
            y[i] = acc;
        }
    }

    /// Dense symmetric adjacency, row-major. Test and validation use only.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for &(i, j, w) in &self.edges {
            a[i * self.n + j] = w;
            a[j * self.n + i] = w;
        }
        a
    }

    /// Serializes to the edge-list text format: a `#n=<count>` header then
    /// one `i<TAB>j<TAB>w` line per edge.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = String::with_capacity(16 * self.edges.len() + 16);
        let _ = writeln!(s, "#n={}", self.n);
        for &(i, j, w) in &self.edges {
            let _ = writeln!(s, "{i}\t{j}\t{w}");
        }
        s
    }

    pub fn write_edge_list(&self, mut out: impl Write) -> Result<()> {
        out.write_all(self.to_edge_list_string().as_bytes())?;
        Ok(())
    }

    pub fn save_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_edge_list_string())?;
        Ok(())
    }

    /// Parses the edge-list format. Blank lines and `#` comments other than
    /// the header are ignored; without a header `n` is one past the largest id.
    pub fn read_edge_list(input: impl Read) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        let mut max_id = 0usize;
        for (k, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("n=") {
                    let parsed = v
                        .trim()
                        .parse::<usize>()
                        .map_err(|e| Error::Parse { line: k + 1, msg: format!("bad node count: {e}") })?;
                    n = Some(parsed);
                }
                continue;
            }
            let mut it = t.split_whitespace();
            let mut field =
                |name: &str| it.next().ok_or_else(|| Error::Parse { line: k + 1, msg: format!("missing {name}") });
            let i: usize = field("i")?.parse().map_err(|e| Error::Parse { line: k + 1, msg: format!("{e}") })?;
            let j: usize = field("j")?.parse().map_err(|e| Error::Parse { line: k + 1, msg: format!("{e}") })?;
            let w: f64 = field("w")?.parse().map_err(|e| Error::Parse { line: k + 1, msg: format!("{e}") })?;
            max_id = max_id.max(i).max(j);
            edges.push((i, j, w));
        }
        let n = n.unwrap_or(if edges.is_empty() { 0 } else { max_id + 1 });
        Self::from_edges(n, edges)
    }

    pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_edge_list(std::fs::File::open(path)?)
    }
}

/// Reads a `±1` per line label file.
pub fn read_labels(input: impl Read) -> Result<Vec<i8>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: i64 = t.parse().map_err(|e| Error::Parse { line: k + 1, msg: format!("{e}") })?;
        match v {
            1 => out.push(1),
            -1 => out.push(-1),
            _ => return Err(Error::Parse { line: k + 1, msg: format!("label {v} is not ±1") }),
        }
    }
    Ok(out)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<i8>> {
    read_labels(std::fs::File::open(path)?)
}

pub fn labels_to_string(labels: &[i8]) -> String {
    let mut s = String::with_capacity(3 * labels.len());
    for l in labels {
        let _ = writeln!(s, "{l}");
    }
    s
}
