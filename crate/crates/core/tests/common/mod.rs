use distsig::gnn::{loss_and_grad, Dropout, GcnParams, Problem, RegNorm, TrainConfig, Variant};
use distsig::graph::Graph;
use distsig::rng;
use ndarray::Array2;

pub fn toy() -> (Graph, Array2<f64>, Vec<usize>) {
    let g = Graph::new(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (1, 4)]).unwrap();
    let f = Array2::from_shape_fn((6, 5), |(i, j)| (((i * 7 + j * 3) % 5) as f64 + 0.5) / 10.0);
    (g, f, vec![0, 0, 1, 1, 2, 2])
}

/// `‖analytic − numeric‖ / ‖numeric‖` over all parameters, central differences.
pub fn relative_error(variant: Variant, eta: f64, seed: u64) -> f64 {
    let (g, f, labels) = toy();
    let train = [0, 2, 5];
    let p = Problem::new(&g, &f, &labels, 3, &train);
    let cfg = TrainConfig { variant, eta, reg_norm: RegNorm::Sum, ..Default::default() };
    let params = GcnParams::glorot(5, 4, 3, &mut rng::seeded(seed));
    let loss = |q: &GcnParams| loss_and_grad(&p, q, &cfg, Dropout::Off).unwrap().loss;
    let analytic = loss_and_grad(&p, &params, &cfg, Dropout::Off).unwrap().grad;
    let h = 1e-5;
    let (mut num2, mut diff2) = (0.0, 0.0);
    for which in 0..2 {
        let shape = if which == 0 { params.w1.dim() } else { params.w2.dim() };
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let bump = |delta: f64| {
                    let mut q = params.clone();
                    let w = if which == 0 { &mut q.w1 } else { &mut q.w2 };
                    w[[i, j]] += delta;
                    loss(&q)
                };
                let numeric = (bump(h) - bump(-h)) / (2.0 * h);
                let a = if which == 0 { analytic.w1[[i, j]] } else { analytic.w2[[i, j]] };
                num2 += numeric * numeric;
                diff2 += (a - numeric) * (a - numeric);
            }
        }
    }
    (diff2 / num2).sqrt()
}
