//! Spanning trees, rooted views and spanning-tree covers.

use super::Graph;
use crate::error::{Error, Result};

/// Default cap on the number of enumerated spanning trees.
pub const DEFAULT_TREE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct SpanningTree {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// A spanning tree oriented away from `root`.
#[derive(Debug, Clone)]
pub struct RootedTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct TreeCover {
    pub trees: Vec<SpanningTree>,
}

struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.0[v] != v {
            self.0[v] = self.0[self.0[v]];
            v = self.0[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl SpanningTree {
    /// Validates `edges` as a spanning tree of `host`.
    pub fn new(host: &Graph, edges: &[(usize, usize)]) -> Result<Self> {
        let n = host.n();
        if edges.len() + 1 != n.max(1) {
            return Err(Error::InvalidTree(format!(
                "{} edges for {n} nodes",
                edges.len()
            )));
        }
        let mut canon: Vec<_> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        canon.sort_unstable();
        let mut dsu = Dsu::new(n);
        for &(u, v) in &canon {
            if !host.has_edge(u, v) {
                return Err(Error::InvalidTree(format!("edge ({u}, {v}) not in host graph")));
            }
            if !dsu.union(u, v) {
                return Err(Error::InvalidTree(format!("edge ({u}, {v}) closes a cycle")));
            }
        }
        Ok(Self { n, edges: canon })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn as_graph(&self) -> Graph {
        Graph::from_canonical(self.n, self.edges.clone())
    }

    /// Positions of this tree's edges in `host.edges()`.
    pub fn edge_indices(&self, host: &Graph) -> Vec<usize> {
        self.edges
            .iter()
            .map(|&(u, v)| host.edge_index(u, v).expect("tree edge belongs to host"))
            .collect()
    }

    pub fn rooted(&self, root: usize) -> RootedTree {
        assert!(root < self.n, "root {root} out of range");
        let tree = self.as_graph();
        let mut parent = vec![None; self.n];
        let mut depth = vec![0; self.n];
        let mut seen = vec![false; self.n];
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in tree.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        RootedTree { root, parent, depth }
    }
}

impl RootedTree {
    /// Lowest common ancestor of `a` and `b`.
    pub fn meet(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root has a parent");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root has a parent");
        }
        while a != b {
            a = self.parent[a].expect("non-root has a parent");
            b = self.parent[b].expect("non-root has a parent");
        }
        a
    }

    /// Nodes of the downward path from ancestor `top` to `v`, inclusive.
    pub fn path_down(&self, top: usize, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut cur = v;
        while cur != top {
            cur = self.parent[cur].expect("top is an ancestor of v");
            path.push(cur);
        }
        path.reverse();
        path
    }
}

impl TreeCover {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn covers(&self, host: &Graph) -> bool {
        let mut covered = vec![false; host.edge_count()];
        for t in &self.trees {
            for i in t.edge_indices(host) {
                covered[i] = true;
            }
        }
        covered.into_iter().all(|c| c)
    }
}

/// Number of spanning trees by the matrix-tree theorem (Bareiss elimination
/// on the reduced Laplacian; falls back to floating point on overflow).
pub fn spanning_tree_count(g: &Graph) -> u128 {
    let n = g.n();
    if n <= 1 {
        return 1;
    }
    let k = n - 1;
    let mut m: Vec<Vec<i128>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    if i == j {
                        g.degree(i) as i128
                    } else if g.has_edge(i, j) {
                        -1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    match bareiss_det(&mut m) {
        Some(d) => d.max(0) as u128,
        None => float_det(g).round().max(0.0) as u128,
    }
}

fn bareiss_det(m: &mut [Vec<i128>]) -> Option<i128> {
    let k = m.len();
    let mut sign = 1;
    let mut prev = 1i128;
    for p in 0..k {
        if m[p][p] == 0 {
            let Some(r) = (p + 1..k).find(|&r| m[r][p] != 0) else {
                return Some(0);
            };
            m.swap(p, r);
            sign = -sign;
        }
        for i in p + 1..k {
            for j in p + 1..k {
                let v = m[i][j]
                    .checked_mul(m[p][p])?
                    .checked_sub(m[i][p].checked_mul(m[p][j])?)?;
                m[i][j] = v / prev;
            }
        }
        prev = m[p][p];
    }
    Some(sign * m[k - 1][k - 1])
}

fn float_det(g: &Graph) -> f64 {
    let l = g.laplacian();
    let k = g.n() - 1;
    let mut a: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| l[[i, j]]).collect()).collect();
    let mut det = 1.0;
    for p in 0..k {
        let r = (p..k)
            .max_by(|&x, &y| a[x][p].abs().total_cmp(&a[y][p].abs()))
            .unwrap();
        if a[r][p] == 0.0 {
            return 0.0;
        }
        if r != p {
            a.swap(r, p);
            det = -det;
        }
        det *= a[p][p];
        for i in p + 1..k {
            let f = a[i][p] / a[p][p];
            for j in p..k {
                a[i][j] -= f * a[p][j];
            }
        }
    }
    det
}

/// All spanning trees of a connected graph, sorted canonically.
///
/// The Kirchhoff count is checked against `cap` before any enumeration.
pub fn enumerate_spanning_trees(g: &Graph, cap: usize) -> Result<Vec<SpanningTree>> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let count = spanning_tree_count(g);
    if count > cap as u128 {
        return Err(Error::TooManyTrees { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut chosen = Vec::with_capacity(g.n().saturating_sub(1));
    backtrack(g, 0, &mut chosen, &mut out);
    out.sort();
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}

fn backtrack(
    g: &Graph,
    idx: usize,
    chosen: &mut Vec<(usize, usize)>,
    out: &mut Vec<SpanningTree>,
) {
    let n = g.n();
    let need = n.saturating_sub(1);
    if chosen.len() == need {
        out.push(SpanningTree { n, edges: chosen.clone() });
        return;
    }
    let edges = g.edges();
    if edges.len() - idx < need - chosen.len() {
        return;
    }
    let (u, v) = edges[idx];

    let mut dsu = Dsu::new(n);
    for &(a, b) in chosen.iter() {
        dsu.union(a, b);
    }
    if dsu.find(u) != dsu.find(v) {
        chosen.push((u, v));
        backtrack(g, idx + 1, chosen, out);
        chosen.pop();
    }

    // skip edge idx only if the remaining edges can still span
    for &(a, b) in &edges[idx + 1..] {
        dsu.union(a, b);
    }
    let root = dsu.find(0);
    if (1..n).all(|w| dsu.find(w) == root) {
        backtrack(g, idx + 1, chosen, out);
    }
}

/// A cover of `g` by the fewest spanning trees, searching covers of at most
/// `size_cap` trees. Edgeless graphs are covered by their single spanning tree.
pub fn min_tree_cover(g: &Graph, size_cap: usize) -> Result<TreeCover> {
    let trees = enumerate_spanning_trees(g, DEFAULT_TREE_CAP)?;
    let m = g.edge_count();
    if m == 0 {
        return if size_cap == 0 {
            Err(Error::NoCover(size_cap))
        } else {
            Ok(TreeCover { trees: vec![trees[0].clone()] })
        };
    }
    if m > 128 {
        return Err(Error::EnumerationInfeasible(format!("{m} edges exceed 128-bit masks")));
    }
    let masks: Vec<u128> = trees
        .iter()
        .map(|t| t.edge_indices(g).iter().fold(0u128, |acc, &i| acc | 1 << i))
        .collect();
    let full = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
    let per_tree = g.n() - 1;
    for k in 1..=size_cap {
        let mut picked = Vec::with_capacity(k);
        if cover_dfs(&masks, full, 0, k, per_tree, &mut picked) {
            let cover = TreeCover { trees: picked.iter().map(|&i| trees[i].clone()).collect() };
            #[cfg(debug_assertions)]
            if let Ok(c) = super::clique_number_complement(g) {
                debug_assert!(c.c1 > size_cap || cover.len() <= c.c1);
            }
            return Ok(cover);
        }
    }
    Err(Error::NoCover(size_cap))
}

fn cover_dfs(
    masks: &[u128],
    full: u128,
    covered: u128,
    left: usize,
    per_tree: usize,
    picked: &mut Vec<usize>,
) -> bool {
    let missing = full & !covered;
    if missing == 0 {
        return true;
    }
    if left == 0 || (missing.count_ones() as usize) > left * per_tree {
        return false;
    }
    let edge = missing.trailing_zeros();
    for (i, &mask) in masks.iter().enumerate() {
        if mask & (1 << edge) == 0 {
            continue;
        }
        picked.push(i);
        if cover_dfs(masks, full, covered | mask, left - 1, per_tree, picked) {
            return true;
        }
        picked.pop();
    }
    false
}
