//! Plain-text graph and label files.
//!
//! Graph: first line `n m`, then `m` lines `u v` (0-indexed). Lines starting
//! with `#` and blank lines are ignored. Labels: one integer per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Graph;
use crate::error::{Error, Result};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_pair(path: &Path, line: usize, text: &str) -> Result<(usize, usize)> {
    let mut it = text.split_whitespace();
    let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
        return Err(parse_err(path, line, "expected two integers"));
    };
    let a = a.parse().map_err(|_| parse_err(path, line, format!("bad integer {a:?}")))?;
    let b = b.parse().map_err(|_| parse_err(path, line, format!("bad integer {b:?}")))?;
    Ok((a, b))
}

pub fn parse_graph(path: &Path, text: &str) -> Result<Graph> {
    let mut lines = content_lines(text);
    let Some((hline, header)) = lines.next() else {
        return Err(parse_err(path, 1, "missing header line \"n m\""));
    };
    let (n, m) = parse_pair(path, hline, header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let (u, v) = parse_pair(path, line, l)?;
        if u >= n || v >= n {
            return Err(parse_err(path, line, format!("node out of range for n = {n}")));
        }
        if u == v {
            return Err(parse_err(path, line, format!("self-loop at node {u}")));
        }
        edges.push((u, v));
    }
    if edges.len() != m {
        return Err(parse_err(
            path,
            hline,
            format!("header declares {m} edges, found {}", edges.len()),
        ));
    }
    Graph::new(n, &edges)
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_graph(path, &text)
}

pub fn format_graph(g: &Graph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn write_graph(path: impl AsRef<Path>, g: &Graph) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_graph(g)).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    content_lines(&text)
        .map(|(line, l)| {
            l.parse()
                .map_err(|_| parse_err(path, line, format!("bad label {l:?}")))
        })
        .collect()
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
