#![allow(clippy::needless_range_loop)]

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wordpuzzle::consistency::{bottleneck_score, max_spanning_tree, widest_path_sim, WeightedGraph};

const K4: [[f64; 4]; 4] = [
    [1.0, 0.9, 0.2, 0.3],
    [0.9, 1.0, 0.8, 0.1],
    [0.2, 0.8, 1.0, 0.7],
    [0.3, 0.1, 0.7, 1.0],
];

#[test]
fn k4_against_all_spanning_trees() {
    let w: Vec<Vec<f64>> = K4.iter().map(|r| r.to_vec()).collect();
    let trees = common::all_spanning_trees(4);
    assert_eq!(trees.len(), 16);
    let total = |t: &Vec<(usize, usize)>| t.iter().map(|&(a, b)| w[a][b]).sum::<f64>();
    let best = trees.iter().max_by(|a, b| total(a).partial_cmp(&total(b)).unwrap()).unwrap();
    assert_eq!(best, &vec![(0, 1), (1, 2), (2, 3)]);

    let g = WeightedGraph::from_matrix(&w).unwrap();
    let tree = max_spanning_tree(&g).unwrap();
    let mut edges: Vec<(usize, usize)> = tree.edges.iter().map(|e| (e.0, e.1)).collect();
    edges.sort();
    assert_eq!(&edges, best);
    assert!((tree.total_weight() - 2.4).abs() < 1e-12);
    assert_eq!(bottleneck_score(&g).unwrap(), 0.7);
    assert_eq!(common::bottleneck_oracle(&w), 0.7);
}

#[test]
fn bottleneck_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n = rng.gen_range(2..=7);
        let w = common::random_weights(n, &mut rng);
        let g = WeightedGraph::from_matrix(&w).unwrap();
        assert_eq!(bottleneck_score(&g).unwrap(), common::bottleneck_oracle(&w));
        assert_eq!(max_spanning_tree(&g).unwrap().edges.len(), n - 1);
        let (i, j) = (0, n - 1);
        assert_eq!(widest_path_sim(&g, i, j).unwrap(), common::widest_path_oracle(&w, i, j));
    }
}

#[test]
fn every_max_tree_has_the_same_bottleneck() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.gen_range(3..=5);
        // Coarse weights produce many ties.
        let mut w = common::random_weights(n, &mut rng);
        for row in w.iter_mut() {
            for v in row.iter_mut() {
                *v = (*v * 4.0).round() / 4.0;
            }
        }
        for i in 0..n {
            w[i][i] = 1.0;
        }
        let trees = common::all_spanning_trees(n);
        let total = |t: &Vec<(usize, usize)>| t.iter().map(|&(a, b)| w[a][b]).sum::<f64>();
        let best = trees.iter().map(total).fold(f64::NEG_INFINITY, f64::max);
        let g = WeightedGraph::from_matrix(&w).unwrap();
        let score = bottleneck_score(&g).unwrap();
        for t in trees.iter().filter(|t| (total(t) - best).abs() < 1e-12) {
            let min = t.iter().map(|&(a, b)| w[a][b]).fold(f64::INFINITY, f64::min);
            assert_eq!(min, score);
        }
    }
}
