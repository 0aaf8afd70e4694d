//! Homogeneity graphs: units are linked when their citation distributions
//! are not significantly different.

mod layout;

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::stats::PairwiseMatrix;

pub use layout::{kamada_kawai_layout, layout_csv, stress, Layout};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge {0}-{1} refers to a missing or identical node")]
    BadEdge(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogeneityGraph {
    nodes: Vec<String>,
    /// Index pairs with `a < b`.
    edges: BTreeSet<(usize, usize)>,
}

impl HomogeneityGraph {
    pub fn new(nodes: Vec<String>) -> Self {
        HomogeneityGraph { nodes, edges: BTreeSet::new() }
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<(), GraphError> {
        if a == b || a >= self.nodes.len() || b >= self.nodes.len() {
            return Err(GraphError::BadEdge(a, b));
        }
        self.edges.insert((a.min(b), a.max(b)));
        Ok(())
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Core number of every node, in node order.
    pub fn core_numbers(&self) -> Vec<usize> {
        core_numbers(&self.adjacency())
    }

    /// Core numbers keyed by label.
    pub fn core_map(&self) -> HashMap<String, usize> {
        self.nodes.iter().cloned().zip(self.core_numbers()).collect()
    }
}

/// Links every pair that the matrix does not flag as significant.
pub fn build_graph(matrix: &PairwiseMatrix) -> HomogeneityGraph {
    let mut g = HomogeneityGraph::new(matrix.labels.clone());
    for i in 0..matrix.len() {
        for j in i + 1..matrix.len() {
            if !matrix.significant[i][j] {
                g.edges.insert((i, j));
            }
        }
    }
    g
}

/// k-core peeling with bucketed degrees (Batagelj-Zaversnik).
pub fn core_numbers(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &degree {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[degree[v]];
        vert[pos[v]] = v;
        bin[degree[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;
    for i in 0..n {
        let v = vert[i];
        for &u in &adj[v] {
            if degree[u] > degree[v] {
                let du = degree[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    degree
}

fn pajek_label(label: &str) -> String {
    format!("\"{}\"", label.replace('"', "\"\""))
}

/// Pajek `.net`: 1-based vertices, then each edge once with `i < j`.
pub fn export_pajek(graph: &HomogeneityGraph) -> String {
    let mut out = format!("*Vertices {}\n", graph.nodes.len());
    for (i, label) in graph.nodes.iter().enumerate() {
        let _ = writeln!(out, "{} {}", i + 1, pajek_label(label));
    }
    out.push_str("*Edges\n");
    for &(a, b) in &graph.edges {
        let _ = writeln!(out, "{} {}", a + 1, b + 1);
    }
    out
}

/// Reads back what [`export_pajek`] writes.
pub fn parse_pajek(text: &str) -> Result<HomogeneityGraph, GraphError> {
    let err = |line: usize, message: &str| GraphError::Parse { line, message: message.into() };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    let count: usize = header
        .strip_prefix("*Vertices ")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| err(ln, "expected `*Vertices n`"))?;
    let mut nodes = Vec::with_capacity(count);
    for expected in 1..=count {
        let (ln, line) = lines.next().ok_or_else(|| err(ln, "missing vertex line"))?;
        let (idx, rest) = line.split_once(' ').ok_or_else(|| err(ln, "malformed vertex"))?;
        if idx.parse::<usize>().ok() != Some(expected) {
            return Err(err(ln, "vertex index out of order"));
        }
        let inner = rest
            .strip_prefix('"')
            .and_then(|r| r.strip_suffix('"'))
            .ok_or_else(|| err(ln, "vertex label must be quoted"))?;
        nodes.push(inner.replace("\"\"", "\""));
    }
    let (ln, marker) = lines.next().ok_or_else(|| err(ln, "missing *Edges"))?;
    if marker != "*Edges" {
        return Err(err(ln, "expected *Edges"));
    }
    let mut graph = HomogeneityGraph::new(nodes);
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace().map(str::parse::<usize>);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) if a >= 1 && b >= 1 => {
                graph.add_edge(a - 1, b - 1).map_err(|_| err(ln, "bad edge"))?
            }
            _ => return Err(err(ln, "malformed edge")),
        }
    }
    Ok(graph)
}

fn dot_id(label: &str) -> String {
    format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected DOT graph in node order.
pub fn export_dot(graph: &HomogeneityGraph) -> String {
    let mut out = String::from("graph homogeneity {\n");
    for label in &graph.nodes {
        let _ = writeln!(out, "  {};", dot_id(label));
    }
    for &(a, b) in &graph.edges {
        let _ = writeln!(out, "  {} -- {};", dot_id(&graph.nodes[a]), dot_id(&graph.nodes[b]));
    }
    out.push_str("}\n");
    out
}
