use nalgebra::DMatrix;
use robust_ellipsoid::instance::{gen_planted_subspace, rng, unit_vector};
use robust_ellipsoid::subspace::{recover_subspace, subspace_distances, SubspaceConfig};
use robust_ellipsoid::PointSet;

fn config(eps: f64, alpha: f64, seed: u64) -> SubspaceConfig {
    let mut cfg = SubspaceConfig::new(1.0 / 3.0, eps, alpha, seed);
    cfg.eps_star_override = Some(0.05);
    cfg.ellipsoid_cfg.restarts = Some(2);
    cfg
}

#[test]
fn result_fields_agree() {
    for seed in 0..4 {
        let inst = gen_planted_subspace(5, 2, 150, 0.05, seed).unwrap();
        let cfg = config(0.1, 0.05, seed);
        let res = recover_subspace(&inst.points, &cfg).unwrap();

        let small = res.eigenvalues.iter().filter(|&&v| v < cfg.eps * cfg.eps).count();
        assert_eq!(res.dim + small, 5, "seed {seed}");
        assert_eq!(res.basis.nrows(), res.dim);
        assert!(res.eigenvalues.windows(2).all(|w| w[0] >= w[1]));

        let gram = &res.basis * res.basis.transpose();
        assert!((gram - DMatrix::identity(res.dim, res.dim)).amax() < 1e-9);

        let direct = subspace_distances(&inst.points, &res.basis);
        assert!(res.distances.iter().zip(&direct).all(|(a, b)| (a - b).abs() < 1e-12));
        let close = res.distances.iter().filter(|&&x| x <= cfg.eps).count();
        assert_eq!(res.close_count, close);
        assert!(res.coverage_count <= 2 * inst.points.len());
    }
}

#[test]
fn inliers_lie_near_the_recovered_subspace() {
    let inst = gen_planted_subspace(6, 2, 300, 0.05, 21).unwrap();
    let res = recover_subspace(&inst.points, &config(0.1, 0.05, 21)).unwrap();
    assert!(res.dim >= 2 && res.dim <= 4, "dim {}", res.dim);
    let near = inst
        .inlier_ids
        .iter()
        .filter(|&&id| res.distances[id] <= 0.1)
        .count();
    assert!(near as f64 >= 0.9 * inst.inlier_ids.len() as f64, "{near}/{}", inst.inlier_ids.len());
}

#[test]
fn rank_deficient_input_without_noise() {
    // Points span a line in R^3; with no perturbation at most one direction
    // survives and every point is at distance zero.
    let mut r = rng(8);
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let s = if unit_vector(1, &mut r)[0] > 0.0 { 1.0 } else { -1.0 };
            vec![0.6 * s, 0.0, 0.8 * s]
        })
        .collect();
    let pts = PointSet::new(3, &rows).unwrap();
    let mut cfg = config(0.1, 0.05, 3);
    cfg.eps_star_override = Some(0.0);
    let res = recover_subspace(&pts, &cfg).unwrap();
    assert!(res.dim <= 1);
    assert_eq!(res.close_count, 40);
}

#[test]
fn unnormalized_input_is_reported() {
    let inst = gen_planted_subspace(4, 2, 80, 0.0, 2).unwrap();
    let scaled: Vec<Vec<f64>> = inst
        .points
        .iter()
        .map(|(_, p)| p.iter().map(|x| 3.0 * x).collect())
        .collect();
    let pts = PointSet::new(4, &scaled).unwrap();
    let a = recover_subspace(&pts, &config(0.1, 0.05, 2)).unwrap();
    let b = recover_subspace(&inst.points, &config(0.1, 0.05, 2)).unwrap();
    assert!(a.warnings.iter().any(|w| w.contains("normalized")));
    assert_eq!(a.dim, b.dim);
    for (x, y) in a.distances.iter().zip(&b.distances) {
        assert!((x - y).abs() < 1e-9);
    }
}
