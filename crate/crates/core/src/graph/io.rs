use std::fmt::Write as _;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

/// Reads a tab-separated edge list. Blank lines and `#` comments are skipped.
/// When `num_nodes` is `None` the node count is one past the largest index.
pub fn read_edge_list(path: &Path, num_nodes: Option<usize>) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(['\t', ' ']).filter(|s| !s.is_empty());
        let mut field = || -> Result<usize> {
            let token = parts
                .next()
                .ok_or_else(|| Error::parse(path, format!("line {}: expected two indices", lineno + 1)))?;
            token
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: bad index `{token}`", lineno + 1)))
        };
        let u = field()?;
        let v = field()?;
        if parts.next().is_some() {
            return Err(Error::parse(path, format!("line {}: trailing fields", lineno + 1)));
        }
        edges.push((u, v));
    }
    let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = match num_nodes {
        Some(n) if n < inferred => {
            return Err(Error::parse(
                path,
                format!("edge references node {} but the graph has {n} nodes", inferred - 1),
            ))
        }
        Some(n) => n,
        None => inferred,
    };
    Graph::from_edges(n, &edges).map_err(|e| Error::parse(path, e.to_string()))
}

/// Writes each undirected edge once, ascending.
pub fn write_edge_list(graph: &Graph, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# nodes={} edges={}", graph.num_nodes(), graph.num_edges());
    for (u, v) in graph.edges() {
        let _ = writeln!(out, "{u}\t{v}");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
