use super::Graph;
use crate::error::{Error, Result};

/// Largest graph for which the exact clique search runs.
pub const EXACT_CLIQUE_LIMIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CliqueNumber {
    /// Clique number of the complement graph.
    pub omega_complement: usize,
    /// `n - omega_complement`; a spanning-tree cover of this size exists.
    pub c1: usize,
}

/// Exact clique number of the complement of `g` (Bron–Kerbosch with
/// pivoting over 64-bit node sets).
pub fn clique_number_complement(g: &Graph) -> Result<CliqueNumber> {
    let n = g.n();
    if n > EXACT_CLIQUE_LIMIT {
        return Err(Error::CliqueLimit { n, limit: EXACT_CLIQUE_LIMIT });
    }
    let comp = g.complement();
    let nbr: Vec<u64> = (0..n)
        .map(|v| comp.neighbors(v).iter().fold(0u64, |m, &w| m | (1 << w)))
        .collect();
    let all = if n == 0 { 0 } else { u64::MAX >> (64 - n) };
    let mut best = 0;
    bron_kerbosch(&nbr, 0, all, 0, &mut best);
    Ok(CliqueNumber { omega_complement: best, c1: n - best })
}

fn bron_kerbosch(nbr: &[u64], size: usize, mut p: u64, mut x: u64, best: &mut usize) {
    if p == 0 {
        if x == 0 {
            *best = (*best).max(size);
        }
        return;
    }
    if size + p.count_ones() as usize <= *best {
        return;
    }
    let pivot = {
        let px = p | x;
        (0..nbr.len())
            .filter(|&u| px & (1 << u) != 0)
            .max_by_key(|&u| (p & nbr[u]).count_ones())
            .expect("p is non-empty")
    };
    let mut candidates = p & !nbr[pivot];
    while candidates != 0 {
        let v = candidates.trailing_zeros() as usize;
        candidates &= candidates - 1;
        bron_kerbosch(nbr, size + 1, p & nbr[v], x & nbr[v], best);
        p &= !(1 << v);
        x |= 1 << v;
    }
}
