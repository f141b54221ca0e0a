use rand::Rng as _;

use super::Graph;
use crate::error::{Error, Result};
use crate::rng;

/// A stochastic block model sample: the graph and each node's block.
#[derive(Debug, Clone)]
pub struct Sbm {
    pub graph: Graph,
    pub labels: Vec<usize>,
}

/// Samples a stochastic block model. Nodes are numbered block by block; each
/// pair `i < j` gets one Bernoulli draw, in lexicographic order, so a seed
/// fixes the graph bit for bit.
pub fn sbm_generate(block_sizes: &[usize], p_in: f64, p_out: f64, seed: u64) -> Result<Sbm> {
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=p_in).contains(&p_out) {
        return Err(Error::Config(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in = {p_in}, p_out = {p_out}"
        )));
    }
    let labels: Vec<usize> = block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let mut rng = rng::seeded(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Sbm { graph: Graph::new(n, &edges)?, labels })
}
