//! Robust subspace recovery: perturb and renormalize the points, fit an
//! origin-centered coverage ellipsoid to the symmetrized set, and keep the
//! directions along which the ellipsoid is at least `ε` long.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coverage::{approximate_origin_coverage_ellipsoid, AlgoConfig};
use crate::error::{Error, Result};
use crate::geometry::{symmetrize, Ellipsoid, PointSet, DEFAULT_SLACK};
use crate::mvee::{enclosing_ellipsoid, Centering};

/// Stream reserved for the perturbation noise; branch streams of the
/// coverage pipeline are small integers.
const NOISE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceConfig {
    pub gamma: f64,
    /// Closeness `ε`: kept directions have semi-axis at least `ε`, and a
    /// point is close when its normalized distance to `Ŝ` is at most `ε`.
    pub eps: f64,
    /// Perturbation scale `ε★`; `None` means `ε^{4/γ}`.
    pub eps_star_override: Option<f64>,
    /// Expected outlier fraction, used only in reports.
    pub alpha_hint: Option<f64>,
    /// Coverage-ellipsoid settings; its seed is replaced by `seed`.
    pub ellipsoid_cfg: AlgoConfig,
    pub seed: u64,
}

impl SubspaceConfig {
    /// The coverage pipeline runs with miscoverage `alpha`, the expected
    /// outlier fraction.
    pub fn new(gamma: f64, eps: f64, alpha: f64, seed: u64) -> Self {
        Self {
            gamma,
            eps,
            eps_star_override: None,
            alpha_hint: Some(alpha),
            ellipsoid_cfg: AlgoConfig::new(alpha, gamma, seed),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0, 1)".into()));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidConfig("eps must lie in (0, 1)".into()));
        }
        if let Some(e) = self.eps_star_override {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::InvalidConfig("eps_star must be nonnegative".into()));
            }
        }
        self.ellipsoid_cfg.validate()
    }

    pub fn eps_star(&self) -> f64 {
        self.eps_star_override
            .unwrap_or_else(|| self.eps.powf(4.0 / self.gamma))
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceResult {
    /// Orthonormal rows spanning `Ŝ`.
    pub basis: DMatrix<f64>,
    pub dim: usize,
    /// `‖(I − Π)aᵢ‖ / ‖aᵢ‖` for every input point, in input order.
    pub distances: Vec<f64>,
    pub close_count: usize,
    /// The origin-centered coverage ellipsoid of the perturbed, symmetrized
    /// points.
    pub ellipsoid: Ellipsoid,
    /// Shape eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub eps_star: f64,
    /// Symmetrized points covered by the ellipsoid.
    pub coverage_count: usize,
    pub warnings: Vec<String>,
}

/// Rescales every point to unit length. Returns the warning text when some
/// input was not already normalized.
pub fn normalize_rows(points: &PointSet) -> Result<(PointSet, Option<String>)> {
    let d = points.dim();
    let mut coords = Vec::with_capacity(points.len() * d);
    let mut off = 0usize;
    for (id, p) in points.iter() {
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 1e-300) {
            return Err(Error::ZeroVector(id));
        }
        if (norm - 1.0).abs() > 1e-8 {
            off += 1;
        }
        coords.extend(p.iter().map(|x| x / norm));
    }
    let out = PointSet::from_flat(d, coords)?.with_ids(points.ids().to_vec())?;
    let warning = (off > 0).then(|| format!("{off} input points were not unit length and were normalized"));
    Ok((out, warning))
}

/// `a′ᵢ = (aᵢ + ζᵢ) / ‖aᵢ + ζᵢ‖` with `ζᵢ ~ N(0, ε★²/d · I)`. With `ε★ = 0`
/// the points are returned unchanged.
pub fn perturb_normalize<R: Rng + ?Sized>(points: &PointSet, eps_star: f64, rng: &mut R) -> Result<PointSet> {
    if eps_star == 0.0 {
        return Ok(points.clone());
    }
    let d = points.dim();
    let sigma = eps_star / (d as f64).sqrt();
    let mut coords = Vec::with_capacity(points.len() * d);
    for (id, p) in points.iter() {
        let v: Vec<f64> = p
            .iter()
            .map(|x| x + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm >= 1e-300) {
            return Err(Error::ZeroVector(id));
        }
        coords.extend(v.iter().map(|x| x / norm));
    }
    PointSet::from_flat(d, coords)?.with_ids(points.ids().to_vec())
}

pub fn noise_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

pub fn recover_subspace(points: &PointSet, cfg: &SubspaceConfig) -> Result<SubspaceResult> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    let d = points.dim();
    let n = points.len();
    let mut warnings = Vec::new();
    let (unit, warning) = normalize_rows(points)?;
    warnings.extend(warning);

    let eps_star = cfg.eps_star();
    if eps_star > 0.0 && (n as f64) < d as f64 * (d as f64 / eps_star).ln() {
        warnings.push(format!(
            "n = {n} is below d·ln(d/ε★) = {:.1}; the perturbation may not make the set fat",
            d as f64 * (d as f64 / eps_star).ln()
        ));
    }
    let perturbed = perturb_normalize(&unit, eps_star, &mut noise_rng(cfg.seed))?;
    let sym = symmetrize(&perturbed);
    let algo = AlgoConfig {
        seed: cfg.seed,
        ..cfg.ellipsoid_cfg.clone()
    };
    let run = approximate_origin_coverage_ellipsoid(&sym, &algo)?;
    let ellipsoid = run.best.ellipsoid.clone();

    let (vals, vecs) = ellipsoid.eigen();
    let threshold = cfg.eps * cfg.eps;
    let kept: Vec<usize> = (0..d).filter(|&i| vals[i] >= threshold).collect();
    let mut basis = DMatrix::zeros(kept.len(), d);
    for (r, &i) in kept.iter().enumerate() {
        basis.set_row(r, &vecs.column(i).transpose());
    }
    let distances = subspace_distances(&unit, &basis);
    let close_count = distances.iter().filter(|&&x| x <= cfg.eps).count();
    if let Some(alpha) = cfg.alpha_hint {
        let expected = ((1.0 - alpha) * n as f64).floor() as usize;
        if close_count < expected {
            warnings.push(format!(
                "close_count {close_count} is below the {expected} points expected for α = {alpha}"
            ));
        }
    }
    Ok(SubspaceResult {
        dim: kept.len(),
        basis,
        distances,
        close_count,
        eigenvalues: vals.iter().copied().collect(),
        ellipsoid,
        eps_star,
        coverage_count: run.best.coverage_count,
        warnings,
    })
}

/// `‖(I − BᵀB) a‖ / ‖a‖` for each point, `B` with orthonormal rows.
pub fn subspace_distances(points: &PointSet, basis: &DMatrix<f64>) -> Vec<f64> {
    points
        .iter()
        .map(|(_, p)| {
            let a = DVector::from_column_slice(p);
            let norm = a.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let resid = if basis.nrows() == 0 {
                a.clone()
            } else {
                &a - basis.transpose() * (basis * &a)
            };
            (resid.norm() / norm).min(1.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum FatnessCheck {
    Checked {
        lambda_min: f64,
        /// `ε★² / (256 d)`
        bound: f64,
        holds: bool,
    },
    /// The bound's preconditions are not met; `lambda_min` is still reported.
    NotApplicable { lambda_min: f64, reason: String },
}

/// Smallest shape eigenvalue of the origin-centered MVEE of a large subset of
/// perturbed points, against `ε★² / (256 d)`.
///
/// With `coverage_fraction ≥ 1` the subset is the whole set; otherwise the
/// coverage pipeline (`cfg`) picks it from the symmetrized points and the
/// check applies only if it covers at least `coverage_fraction` of them.
pub fn fatness_min_eigenvalue(
    perturbed: &PointSet,
    eps_star: f64,
    coverage_fraction: f64,
    cfg: &AlgoConfig,
) -> Result<FatnessCheck> {
    let d = perturbed.dim();
    let (subset, achieved) = if coverage_fraction >= 1.0 {
        (perturbed.clone(), 1.0)
    } else {
        let sym = symmetrize(perturbed);
        let run = approximate_origin_coverage_ellipsoid(&sym, cfg)?;
        let cov = run.best.ellipsoid.coverage(&sym, DEFAULT_SLACK)?;
        let positions: Vec<usize> = cov
            .member_ids
            .iter()
            .filter_map(|&id| sym.position_of(id))
            .collect();
        (sym.select(&positions), cov.fraction)
    };
    let fit = enclosing_ellipsoid(&subset, Centering::Origin, &cfg.solver, None)?;
    let (vals, _) = fit.ellipsoid.eigen();
    let lambda_min = vals[d - 1];
    let reason = if eps_star <= 0.0 {
        Some("no perturbation was applied".to_string())
    } else if fit.is_degenerate() {
        Some("the enclosing ellipsoid is degenerate".to_string())
    } else if coverage_fraction < 0.8 {
        Some(format!("coverage fraction {coverage_fraction} is below 4/5"))
    } else if achieved + 1e-12 < coverage_fraction {
        Some(format!("the subset covers only {achieved:.4} of the points"))
    } else {
        None
    };
    Ok(match reason {
        Some(reason) => FatnessCheck::NotApplicable { lambda_min, reason },
        None => {
            let bound = eps_star * eps_star / (256.0 * d as f64);
            FatnessCheck::Checked {
                lambda_min,
                bound,
                holds: lambda_min >= bound,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{unit_vector, rng};
    use crate::mvee::{solve_mvee, SolverConfig};

    fn unit_cloud(d: usize, n: usize, seed: u64) -> PointSet {
        let mut r = rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| unit_vector(d, &mut r).iter().copied().collect()).collect();
        PointSet::new(d, &rows).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let pts = unit_cloud(3, 20, 1);
        let out = perturb_normalize(&pts, 0.0, &mut noise_rng(5)).unwrap();
        assert_eq!(out, pts);
    }

    #[test]
    fn perturbation_moves_little_and_stays_unit() {
        let pts = unit_cloud(2, 1000, 3);
        let out = perturb_normalize(&pts, 0.1, &mut noise_rng(9)).unwrap();
        let mut total = 0.0;
        for i in 0..pts.len() {
            let diff: f64 = pts.point(i).iter().zip(out.point(i)).map(|(a, b)| (a - b).powi(2)).sum();
            total += diff.sqrt();
            let norm: f64 = out.point(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        assert!(total / 1000.0 <= 0.2);

        let single = PointSet::new(4, &[vec![0.0, 0.0, 1.0, 0.0]]).unwrap();
        let one = perturb_normalize(&single, 0.7, &mut noise_rng(0)).unwrap();
        let norm: f64 = one.point(0).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_rejected() {
        let pts = PointSet::new(2, &[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(normalize_rows(&pts), Err(Error::ZeroVector(1))));
    }

    #[test]
    fn coordinate_subspace_without_noise() {
        let mut r = rng(4);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                let v = unit_vector(2, &mut r);
                vec![v[0], 0.0, v[1], 0.0]
            })
            .collect();
        let pts = PointSet::new(4, &rows).unwrap();
        let mut cfg = SubspaceConfig::new(0.25, 0.1, 0.05, 1);
        cfg.eps_star_override = Some(0.0);
        cfg.ellipsoid_cfg.restarts = Some(2);
        let res = recover_subspace(&pts, &cfg).unwrap();
        assert!(res.dim <= 2);
        assert!(res.distances.iter().all(|&x| x < 1e-9));
        assert_eq!(res.close_count, 60);
        let (vals, _) = res.ellipsoid.eigen();
        assert_eq!(vals.iter().filter(|&&v| v == 0.0).count(), 2);
    }

    #[test]
    fn repeated_point() {
        let pts = PointSet::new(3, &vec![vec![1.0, 0.0, 0.0]; 12]).unwrap();
        let mut cfg = SubspaceConfig::new(0.25, 0.1, 0.1, 2);
        cfg.eps_star_override = Some(0.0);
        cfg.ellipsoid_cfg.restarts = Some(1);
        let res = recover_subspace(&pts, &cfg).unwrap();
        assert!(res.dim <= 1);
        assert!(res.distances[0] < 1e-9);
    }

    #[test]
    fn symmetric_set_free_center_is_origin() {
        for seed in 0..5 {
            let pts = symmetrize(&unit_cloud(3, 15, seed));
            let (free, _) = solve_mvee(&pts, &SolverConfig::with_eta(1e-10)).unwrap();
            assert!(free.center().norm() < 1e-6, "seed {seed}: {}", free.center().norm());
            let origin = enclosing_ellipsoid(&pts, Centering::Origin, &SolverConfig::with_eta(1e-10), None).unwrap();
            let gap = free.log_volume().unwrap() - origin.ellipsoid.log_volume().unwrap();
            assert!(gap.abs() < 1e-6, "seed {seed}: {gap}");
        }
    }

    #[test]
    fn fatness_of_signed_basis() {
        let rows: Vec<Vec<f64>> = (0..3)
            .flat_map(|i| {
                let mut e = vec![0.0; 3];
                e[i] = 1.0;
                [e.clone(), e.iter().map(|x| -x).collect()]
            })
            .collect();
        let pts = PointSet::new(3, &rows).unwrap();
        let cfg = AlgoConfig::new(0.1, 0.5, 0);
        match fatness_min_eigenvalue(&pts, 1.0, 1.0, &cfg).unwrap() {
            FatnessCheck::Checked { lambda_min, holds, .. } => {
                assert!((lambda_min - 1.0).abs() < 1e-6);
                assert!(holds);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fatness_not_applicable_without_noise() {
        let pts = PointSet::new(2, &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.5, 0.0]]).unwrap();
        let cfg = AlgoConfig::new(0.1, 0.5, 0);
        let check = fatness_min_eigenvalue(&pts, 0.0, 1.0, &cfg).unwrap();
        assert!(matches!(check, FatnessCheck::NotApplicable { lambda_min, .. } if lambda_min == 0.0));
    }

    #[test]
    fn fatness_of_perturbed_isotropic_points() {
        let pts = unit_cloud(3, 2000, 2);
        let pert = perturb_normalize(&pts, 0.05, &mut noise_rng(2)).unwrap();
        let cfg = AlgoConfig::new(0.1, 0.5, 0);
        match fatness_min_eigenvalue(&pert, 0.05, 1.0, &cfg).unwrap() {
            FatnessCheck::Checked { lambda_min, bound, holds } => {
                assert!(holds, "{lambda_min} < {bound}");
            }
            other => panic!("{other:?}"),
        }
    }
}
