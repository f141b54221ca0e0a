use distsig::dist::{
    coupling_lp_oracle, optimal_coupling, tv_exact, tv_l1_l2, tv_tree_rooted, wasserstein_sq,
    DiscreteDistribution, Marginals,
};
use distsig::graph::{enumerate_spanning_trees, min_tree_cover, Graph, SpanningTree};
use distsig::regularizer::{
    combined, grad_loss0, loss_components, softmax_backward, softmax_rows, uniformity_bound,
    ProbMatrix, WeightDiag,
};
use distsig::spectral::{eig_sym, gft, inverse_gft, quadratic_form, total_variation};
use ndarray::Array2;
use proptest::prelude::*;

fn graph_strategy(n_max: usize) -> impl Strategy<Value = Graph> {
    (2..=n_max).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |mask| {
            let pairs: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let edges: Vec<_> = pairs.into_iter().zip(mask).filter(|(_, k)| *k).map(|(e, _)| e).collect();
            Graph::new(n, &edges).unwrap()
        })
    })
}

fn connected_graph(n_max: usize) -> impl Strategy<Value = Graph> {
    graph_strategy(n_max).prop_filter("connected", Graph::is_connected)
}

fn dist_strategy(m: usize) -> impl Strategy<Value = DiscreteDistribution> {
    proptest::collection::vec(0.0f64..1.0, m).prop_filter_map("nonzero mass", |w| {
        let s: f64 = w.iter().sum();
        (s > 1e-3).then(|| DiscreteDistribution::new(w.iter().map(|v| v / s).collect()).unwrap())
    })
}

fn stochastic_rows(n: usize, m: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(0.001f64..1.0, n * m).prop_map(move |v| {
        let mut x = Array2::from_shape_vec((n, m), v).unwrap();
        for mut row in x.rows_mut() {
            let s = row.sum();
            row /= s;
        }
        x
    })
}

fn graph_and_rows(n_max: usize, m_max: usize) -> impl Strategy<Value = (Graph, Array2<f64>)> {
    (graph_strategy(n_max), 2..=m_max).prop_flat_map(|(g, m)| {
        let n = g.n();
        (Just(g), stochastic_rows(n, m))
    })
}

fn union_find_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    (0..n).all(|v| find(&mut parent, v) == find(&mut parent, 0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn laplacian_is_psd(g in graph_strategy(10), seed in any::<u64>()) {
        let l = g.laplacian();
        let mut rng = distsig::rng::seeded(seed);
        for _ in 0..20 {
            let x: Vec<f64> = (0..g.n()).map(|_| rand::Rng::random_range(&mut rng, -5.0..5.0)).collect();
            prop_assert!(quadratic_form(&l, &x).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn spanning_trees_are_trees(g in connected_graph(6)) {
        for t in enumerate_spanning_trees(&g, 100_000).unwrap() {
            prop_assert_eq!(t.edges().len(), g.n() - 1);
            prop_assert!(union_find_connected(g.n(), t.edges()));
            prop_assert!(t.edges().iter().all(|&(u, v)| g.has_edge(u, v)));
        }
    }

    #[test]
    fn tree_cover_union_is_edge_set(g in connected_graph(6)) {
        let cover = min_tree_cover(&g, 6).unwrap();
        let mut union: Vec<_> = cover.trees.iter().flat_map(|t| t.edges().iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        prop_assert_eq!(union, g.edges().to_vec());
    }

    #[test]
    fn gft_round_trip(g in graph_strategy(12), x in proptest::collection::vec(-3.0f64..3.0, 12)) {
        let s = eig_sym(&g.laplacian()).unwrap();
        let x = &x[..g.n()];
        let back = inverse_gft(&s, gft(&s, x).unwrap().as_slice().unwrap()).unwrap();
        for (a, b) in back.iter().zip(x) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenvector_variation_is_eigenvalue(g in graph_strategy(12)) {
        let s = eig_sym(&g.laplacian()).unwrap();
        for i in 0..g.n() {
            let u = s.eigenvector(i).to_vec();
            let tv = total_variation(&g, &u).unwrap();
            prop_assert!((tv - s.eigenvalues[i]).abs() < 1e-8, "{} vs {}", tv, s.eigenvalues[i]);
        }
    }

    #[test]
    fn wasserstein_matches_coupling_lp(
        (mu, nu) in (2usize..=5).prop_flat_map(|m| (dist_strategy(m), dist_strategy(m)))
    ) {
        let w = wasserstein_sq(&mu, &nu).unwrap();
        prop_assert!((w - coupling_lp_oracle(&mu, &nu).unwrap()).abs() <= 1e-9);
        let c = optimal_coupling(&mu, &nu).unwrap();
        for s in 0..mu.m() {
            prop_assert_eq!(c.plan[[s, s]], mu.weights()[s].min(nu.weights()[s]));
        }
        prop_assert!((c.cost() - w).abs() <= 1e-12);
        prop_assert!(c.constraint_error() <= 1e-12);
    }

    #[test]
    fn wasserstein_triangle_inequality(
        (a, b, c) in (2usize..=6).prop_flat_map(|m| (dist_strategy(m), dist_strategy(m), dist_strategy(m)))
    ) {
        let w = |p: &DiscreteDistribution, q: &DiscreteDistribution| wasserstein_sq(p, q).unwrap().sqrt();
        prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-9);
    }

    #[test]
    fn two_node_total_variation_is_wasserstein(
        (mu, nu) in (2usize..=4).prop_flat_map(|m| (dist_strategy(m), dist_strategy(m)))
    ) {
        let g = Graph::path(2);
        let nm = Marginals::from_distributions(&[mu.clone(), nu.clone()]).unwrap();
        prop_assert!((tv_exact(&g, &nm).unwrap() - wasserstein_sq(&mu, &nu).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn rooted_bound_on_trees_is_l1(
        (n, parents, x) in (2usize..=7).prop_flat_map(|n| (
            Just(n),
            proptest::collection::vec(any::<prop::sample::Index>(), n - 1),
            stochastic_rows(n, 3),
        ))
    ) {
        let edges: Vec<_> = (1..n).map(|v| (parents[v - 1].index(v), v)).collect();
        let g = Graph::new(n, &edges).unwrap();
        let h = SpanningTree::new(&g, g.edges()).unwrap();
        let nm = Marginals::new(x).unwrap();
        let l1 = tv_l1_l2(&g, &nm).unwrap().l1;
        for root in 0..n {
            prop_assert!((tv_tree_rooted(&g, &h, root, &nm).unwrap() - l1).abs() <= 1e-12);
        }
    }

    #[test]
    fn loss_decomposes((g, x) in graph_and_rows(10, 5)) {
        let d = WeightDiag::default_for(&g);
        let x = ProbMatrix::new(x).unwrap();
        let parts = loss_components(&x, &g, &d).unwrap();
        prop_assert!((parts.l0 - parts.l1 - parts.l2).abs() <= 1e-9);
        prop_assert!(parts.l1 >= 0.0 && parts.l2 <= 0.0);
        let nm = Marginals::new(x.matrix().clone()).unwrap();
        prop_assert!((parts.l1 - tv_l1_l2(&g, &nm).unwrap().l2).abs() <= 1e-9);
    }

    #[test]
    fn uniformity_bound_holds(
        (x, a) in (1usize..=8, 2usize..=6).prop_flat_map(|(n, m)| (
            stochastic_rows(n, m),
            proptest::collection::vec(-5.0f64..=0.0, n),
        ))
    ) {
        let r = uniformity_bound(&ProbMatrix::new(x).unwrap(), &WeightDiag::new(a).unwrap()).unwrap();
        prop_assert!(r.inequality_margin() >= -1e-9);
        prop_assert!(r.lower_margin() >= -1e-9 && r.upper_margin() >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn composed_loss_gradient_matches_differences(
        (g, o) in graph_strategy(7).prop_flat_map(|g| {
            let n = g.n();
            (Just(g), proptest::collection::vec(-2.0f64..2.0, n * 3))
        }),
        eta in 0.1f64..2.0,
    ) {
        let n = g.n();
        let o = Array2::from_shape_vec((n, 3), o).unwrap();
        let d = WeightDiag::default_for(&g);
        let f = |o: &Array2<f64>| eta * combined(&g, &d, softmax_rows(o).unwrap().matrix().view());
        let x = softmax_rows(&o).unwrap();
        let analytic = softmax_backward(x.matrix(), &(grad_loss0(&x, &g, &d).unwrap() * eta));
        let h = 1e-5;
        let mut numeric = Array2::zeros((n, 3));
        for i in 0..n {
            for j in 0..3 {
                let (mut p, mut q) = (o.clone(), o.clone());
                p[[i, j]] += h;
                q[[i, j]] -= h;
                numeric[[i, j]] = (f(&p) - f(&q)) / (2.0 * h);
            }
        }
        let diff = (&analytic - &numeric).mapv(|v| v * v).sum().sqrt();
        let scale = numeric.mapv(|v| v * v).sum().sqrt().max(analytic.mapv(|v| v * v).sum().sqrt());
        prop_assert!(diff <= 1e-4 * scale.max(1e-6), "diff {} scale {}", diff, scale);
    }
}
