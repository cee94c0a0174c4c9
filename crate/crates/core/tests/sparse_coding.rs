mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::Penalty;
use wordpuzzle::topics::{sparse_code, ModelTag, Regularizer, TopicDictionary};

fn normalized_columns<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

#[test]
fn matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut done = 0;
    while done < 4 {
        let cols = normalized_columns(5, 3, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let kappa = rng.gen_range(0.05..0.5);
        let (reg, pen) = if done % 2 == 0 {
            (Regularizer::L1, Penalty::L1)
        } else {
            (Regularizer::GroupL2(vec![vec![0, 1], vec![2]]), Penalty::Groups(vec![vec![0, 1], vec![2]]))
        };
        let (a, oracle) = common::grid_oracle(&cols, &x, kappa, &pen);
        if a.iter().any(|v| v.abs() > 1.95) {
            continue;
        }
        let dict = TopicDictionary::from_columns(&cols, ModelTag::Dictlearn).unwrap();
        let ours = sparse_code(&x, &dict, kappa, &reg).unwrap();
        assert!((ours.objective - oracle).abs() < 1e-4, "{} vs {oracle}", ours.objective);
        let recomputed = common::lasso_objective(&cols, &x, &ours.coefficients, kappa, &pen);
        assert!((recomputed - ours.objective).abs() < 1e-12);
        done += 1;
    }
}

#[test]
fn orthonormal_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let q = common::random_orthonormal(7, 4, &mut rng);
        let dict = TopicDictionary::from_columns(&q, ModelTag::Dictlearn).unwrap();
        let x: Vec<f64> = (0..7).map(|_| rng.sample(StandardNormal)).collect();
        let kappa = rng.gen_range(0.05..1.0);
        let c: Vec<f64> = q.iter().map(|d| d.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();

        let lasso = sparse_code(&x, &dict, kappa, &Regularizer::L1).unwrap();
        for (a, ci) in lasso.coefficients.iter().zip(&c) {
            let want = ci.signum() * (ci.abs() - kappa).max(0.0);
            assert!((a - want).abs() < 1e-10, "{a} vs {want}");
        }

        let groups = vec![vec![0, 1], vec![2, 3]];
        let group = sparse_code(&x, &dict, kappa, &Regularizer::GroupL2(groups.clone())).unwrap();
        for g in &groups {
            let norm = g.iter().map(|&i| c[i] * c[i]).sum::<f64>().sqrt();
            let shrink = (1.0 - kappa / norm).max(0.0);
            for &i in g {
                assert!((group.coefficients[i] - shrink * c[i]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn objective_bounded_by_zero_code() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let cols = normalized_columns(6, 4, &mut rng);
        let dict = TopicDictionary::from_columns(&cols, ModelTag::Dictlearn).unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let half_norm = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        let code = sparse_code(&x, &dict, rng.gen_range(0.01..2.0), &Regularizer::L1).unwrap();
        assert!(code.objective <= half_norm);
    }
}
