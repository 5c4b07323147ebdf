use nalgebra::{DMatrix, DVector};
use rand::Rng;
use robust_ellipsoid::geometry::lift;
use robust_ellipsoid::instance::{gaussian_vector, random_rotation, rng};
use robust_ellipsoid::linalg::logdet_spd;
use robust_ellipsoid::mvee::{
    brascamp_lieb_gap, extract_primal_origin, frame_from_dual, lifted_moment, slackness_residuals,
    solve_dual_free_center, weighted_center_scatter,
};
use robust_ellipsoid::oracle::high_precision_mvee;
use robust_ellipsoid::{solve_dual_origin, solve_mvee, PointSet, SolverConfig};

fn cloud(d: usize, n: usize, seed: u64) -> PointSet {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| gaussian_vector(d, &mut r).iter().copied().collect()).collect();
    PointSet::new(d, &rows).unwrap()
}

#[test]
fn origin_dual_matches_tight_solve() {
    let pts = cloud(2, 6, 42);
    let loose = solve_dual_origin(&pts, &SolverConfig::default()).unwrap();
    let tight = solve_dual_origin(&pts, &SolverConfig::with_eta(1e-12)).unwrap();
    assert!(tight.max_leverage <= 2.0 * (1.0 + 1e-12));
    assert!((loose.logdet - tight.logdet).abs() < 1e-5);
}

#[test]
fn origin_ellipsoid_contains_every_point() {
    let pts = cloud(2, 40, 8);
    let cfg = SolverConfig::default();
    let e = extract_primal_origin(&solve_dual_origin(&pts, &cfg).unwrap());
    let worst = pts.iter().map(|(_, p)| e.quadratic_form(p)).fold(0.0, f64::max);
    assert!(worst <= 1.0 + 2.0 * cfg.eta, "{worst}");
}

#[test]
fn free_center_matches_high_precision() {
    let pts = cloud(2, 8, 7);
    let (e, _) = solve_mvee(&pts, &SolverConfig::default()).unwrap();
    let reference = high_precision_mvee(&pts).unwrap();
    assert!((e.log_volume().unwrap() - reference.log_volume().unwrap()).abs() < 1e-6);
}

#[test]
fn slackness_residuals_are_small() {
    for seed in 0..100 {
        let pts = cloud(2 + seed as usize % 4, 25 + seed as usize % 30, 300 + seed);
        let sol = solve_dual_origin(&pts, &SolverConfig::default()).unwrap();
        let worst = slackness_residuals(&sol, &pts)
            .unwrap()
            .iter()
            .map(|r| r.residual.abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "seed {seed}: {worst}");
    }
}

#[test]
fn frames_from_optima_satisfy_brascamp_lieb() {
    let pts = lift(&cloud(3, 30, 5));
    let sol = solve_dual_origin(&pts, &SolverConfig::default()).unwrap();
    let frame = frame_from_dual(&sol, &pts).unwrap();
    let mut r = rng(99);
    for _ in 0..1000 {
        let g = DMatrix::from_fn(4, 4, |_, _| r.random_range(-1.0..1.0));
        let p = &g * g.transpose() + DMatrix::identity(4, 4) * 1e-6;
        assert!(brascamp_lieb_gap(&p, &frame).unwrap() >= -1e-9);
    }
}

#[test]
fn tightening_eta_moves_logdet_little() {
    for seed in 0..10 {
        let pts = cloud(3, 50, 40 + seed);
        let eta = 1e-5;
        let a = solve_dual_origin(&pts, &SolverConfig::with_eta(eta)).unwrap();
        let b = solve_dual_origin(&pts, &SolverConfig::with_eta(eta / 10.0)).unwrap();
        assert!(b.logdet >= a.logdet - 1e-12);
        assert!(b.logdet - a.logdet <= 10.0 * eta * 3.0, "{}", b.logdet - a.logdet);
        let sum: f64 = b.weights.iter().sum();
        assert!((sum - 3.0).abs() <= 1e-9);
        assert!(b.weights.iter().all(|&w| (0.0..=1.0 + 1e-9).contains(&w)));
    }
}

#[test]
fn affine_equivariance() {
    let cfg = SolverConfig::with_eta(1e-10);
    for seed in 0..5 {
        let pts = cloud(3, 20, 70 + seed);
        let mut r = rng(seed);
        let a = random_rotation(3, &mut r) * DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5, 1.7]));
        let b = gaussian_vector(3, &mut r);
        let moved = pts.map_affine(&a, &b).unwrap();
        let (e, _) = solve_mvee(&pts, &cfg).unwrap();
        let (f, _) = solve_mvee(&moved, &cfg).unwrap();
        let mapped = e.affine_image(&a, &b);
        assert!((mapped.center() - f.center()).amax() < 1e-6);
        let shift = a.determinant().abs().ln();
        assert!((f.log_volume().unwrap() - e.log_volume().unwrap() - shift).abs() < 1e-6);
    }
}

#[test]
fn lifted_and_direct_routes_agree() {
    let cfg = SolverConfig::with_eta(1e-10);
    for seed in 0..5 {
        let pts = cloud(2 + seed as usize % 3, 15, 500 + seed);
        let (e, _) = solve_mvee(&pts, &cfg).unwrap();
        let direct = solve_dual_free_center(&pts, &cfg).unwrap();
        let f = direct.ellipsoid();
        assert!((e.center() - f.center()).amax() < 1e-6);
        assert!((e.log_volume().unwrap() - f.log_volume().unwrap()).abs() < 1e-6);
    }
}

#[test]
fn schur_identity_for_arbitrary_weights() {
    let pts = cloud(3, 12, 3);
    let mut r = rng(4);
    for _ in 0..20 {
        let raw: Vec<f64> = (0..12).map(|_| r.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v * 4.0 / total).collect();
        let lifted = logdet_spd(&lifted_moment(&pts, &w)).unwrap();
        let (_, scatter) = weighted_center_scatter(&pts, &w, 4.0);
        let direct = logdet_spd(&scatter).unwrap();
        assert!((lifted - (4.0f64.ln() + direct)).abs() < 1e-8, "{lifted} vs {direct}");
    }
}

#[test]
fn deleting_points_never_grows_the_optimum() {
    let cfg = SolverConfig::with_eta(1e-9);
    let mut r = rng(12);
    for t in 0..50 {
        let pts = cloud(2, 20, 900 + t);
        let full = solve_dual_origin(&lift(&pts), &cfg).unwrap().logdet;
        let keep: Vec<usize> = (0..20).filter(|_| r.random_bool(0.7)).collect();
        if keep.len() < 4 {
            continue;
        }
        let sub = solve_dual_origin(&lift(&pts.select(&keep)), &cfg).unwrap().logdet;
        assert!(sub <= full + 1e-8, "trial {t}: {sub} > {full}");
    }
}
