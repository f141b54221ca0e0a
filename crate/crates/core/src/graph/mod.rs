//! Simple undirected graphs and the matrix views used throughout the crate.

mod clique;
mod io;
mod sbm;
mod trees;

pub use clique::{clique_number_complement, CliqueNumber, EXACT_CLIQUE_LIMIT};
pub use io::{read_graph, read_labels, write_graph, write_labels};
pub use sbm::{sbm_generate, Sbm};
pub use trees::{
    enumerate_spanning_trees, min_tree_cover, spanning_tree_count, RootedTree, SpanningTree,
    TreeCover, DEFAULT_TREE_CAP,
};

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::error::{Error, Result};

/// A simple undirected, unweighted graph on nodes `0..n`.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted; neighbour lists
/// are sorted as well, so iteration order is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, out-of-range endpoints and
    /// repeated edges (in either orientation).
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange { u, v, n });
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !set.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(u, v));
            }
        }
        Ok(Self::from_canonical(n, set.into_iter().collect()))
    }

    /// Builds a graph from arbitrary pairs, silently dropping self-loops and
    /// duplicates. Returns the graph and the number of pairs dropped.
    pub fn from_pairs_lossy(n: usize, pairs: &[(usize, usize)]) -> Result<(Self, usize)> {
        let mut set = BTreeSet::new();
        let mut dropped = 0;
        for &(u, v) in pairs {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange { u, v, n });
            }
            if u == v || !set.insert((u.min(v), u.max(v))) {
                dropped += 1;
            }
        }
        Ok((Self::from_canonical(n, set.into_iter().collect()), dropped))
    }

    fn from_canonical(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { n, edges, neighbors }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_canonical(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_canonical(n, edges)
    }

    pub fn path(n: usize) -> Self {
        Self::from_canonical(n, (1..n).map(|v| (v - 1, v)).collect())
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "cycle needs at least 3 nodes");
        let mut edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        edges.push((0, n - 1));
        edges.sort_unstable();
        Self::from_canonical(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Position of edge `{u, v}` in [`Graph::edges`].
    pub fn edge_index(&self, u: usize, v: usize) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    pub fn adjacency(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for &(u, v) in &self.edges {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
        a
    }

    /// Combinatorial Laplacian `D - A`.
    pub fn laplacian(&self) -> Array2<f64> {
        let mut l = -self.adjacency();
        for v in 0..self.n {
            l[[v, v]] = self.degree(v) as f64;
        }
        l
    }

    /// Renormalised GCN propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}`.
    pub fn normalized_adjacency(&self) -> Array2<f64> {
        let scale: Vec<f64> = (0..self.n)
            .map(|v| 1.0 / ((self.degree(v) + 1) as f64).sqrt())
            .collect();
        let mut a = Array2::zeros((self.n, self.n));
        for v in 0..self.n {
            a[[v, v]] = scale[v] * scale[v];
        }
        for &(u, v) in &self.edges {
            let w = scale[u] * scale[v];
            a[[u, v]] = w;
            a[[v, u]] = w;
        }
        a
    }

    pub fn complement(&self) -> Graph {
        let edges = (0..self.n)
            .flat_map(|u| (u + 1..self.n).map(move |v| (u, v)))
            .filter(|&(u, v)| !self.has_edge(u, v))
            .collect();
        Self::from_canonical(self.n, edges)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.connected_components().len() == 1
    }

    /// Subgraph induced on `nodes`; node `nodes[k]` becomes node `k`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Graph {
        let mut index = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            index[v] = k;
        }
        let mut edges: Vec<_> = self
            .edges
            .iter()
            .filter(|&&(u, v)| index[u] != usize::MAX && index[v] != usize::MAX)
            .map(|&(u, v)| (index[u].min(index[v]), index[u].max(index[v])))
            .collect();
        edges.sort_unstable();
        Self::from_canonical(nodes.len(), edges)
    }

    /// Largest connected component (ties to the one with the smallest node)
    /// as an induced subgraph, plus the original ids of its nodes.
    pub fn main_component(&self) -> (Graph, Vec<usize>) {
        let components = self.connected_components();
        let best = components
            .into_iter()
            .fold(Vec::new(), |best, c| if c.len() > best.len() { c } else { best });
        (self.induced_subgraph(&best), best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn triangle_and_path() {
        let t = Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(t.degrees(), vec![2, 2, 2]);
        let p = Graph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(p.degrees(), vec![1, 1]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(Graph::new(3, &[(0, 0)]), Err(Error::SelfLoop(0))));
        assert!(matches!(
            Graph::new(3, &[(0, 3)]),
            Err(Error::NodeOutOfRange { .. })
        ));
        assert!(matches!(
            Graph::new(3, &[(0, 1), (1, 0)]),
            Err(Error::DuplicateEdge(1, 0))
        ));
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(Graph::path(2).laplacian(), array![[1.0, -1.0], [-1.0, 1.0]]);
        assert_eq!(
            Graph::complete(3).laplacian(),
            array![[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]]
        );
        assert_eq!(Graph::empty(3).laplacian(), Array2::<f64>::zeros((3, 3)));
    }

    #[test]
    fn laplacian_rows_sum_to_zero_and_match_degrees() {
        let g = Graph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]).unwrap();
        let l = g.laplacian();
        for v in 0..5 {
            assert_eq!(l.row(v).sum(), 0.0);
            assert_eq!(g.adjacency().row(v).sum(), g.degree(v) as f64);
        }
        assert_eq!(l, l.t());
    }

    #[test]
    fn normalized_adjacency_examples() {
        assert_eq!(Graph::empty(1).normalized_adjacency(), array![[1.0]]);
        let p2 = Graph::path(2).normalized_adjacency();
        for x in p2.iter() {
            assert!((x - 0.5).abs() < 1e-15);
        }
        let k3 = Graph::complete(3).normalized_adjacency();
        for x in k3.iter() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn components_and_main_component() {
        let g = Graph::new(6, &[(0, 1), (2, 3), (3, 4), (2, 4)]).unwrap();
        assert_eq!(
            g.connected_components(),
            vec![vec![0, 1], vec![2, 3, 4], vec![5]]
        );
        let (main, ids) = g.main_component();
        assert_eq!(ids, vec![2, 3, 4]);
        assert_eq!(main, Graph::complete(3));
        assert!(!g.is_connected());
    }

    #[test]
    fn complement_of_path() {
        assert_eq!(Graph::path(3).complement().edges(), &[(0, 2)]);
    }
}
