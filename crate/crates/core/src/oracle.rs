//! Reference computations for tiny instances: exhaustive search over
//! k-subsets and high-precision enclosing ellipsoids.

use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, PointSet, DEFAULT_SLACK};
use crate::mvee::{enclosing_ellipsoid, solve_mvee, Centering, SolverConfig};

/// Limits for [`brute_force_min_k_ellipsoid`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBudget {
    pub max_subsets: u64,
    /// Solver tolerance per subset.
    pub tol: f64,
    /// Skip branches whose partial subset already has no smaller volume
    /// than the incumbent. Disable for audit runs.
    pub prune: bool,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_subsets: 200_000,
            tol: 1e-12,
            prune: true,
        }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_subsets < 1 {
            return Err(Error::InvalidConfig("max_subsets must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig("tol must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Exhaustive optimum over k-subsets.
#[derive(Debug, Clone)]
pub struct OracleOptimum {
    pub ellipsoid: Ellipsoid,
    /// `−∞` for a degenerate optimum.
    pub log_volume: f64,
    /// Ids of the subset whose enclosing ellipsoid is optimal.
    pub subset_ids: Vec<usize>,
    /// Ids of every point the optimum covers; a superset of `subset_ids`.
    pub covered_ids: Vec<usize>,
    /// Subsets whose ellipsoid was actually computed.
    pub evaluated: u64,
}

// A pruned branch must lose by more than the per-solve error, so pruning
// never changes the answer.
const PRUNE_MARGIN: f64 = 1e-8;

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn reference_config(tol: f64, k: usize, n: usize) -> SolverConfig {
    let mut cfg = SolverConfig::with_eta(tol);
    cfg.max_iters = Some(100 * cfg.iteration_cap(k, n.max(2)));
    cfg
}

/// Minimum-volume ellipsoid covering at least `k` of the points, as the best
/// minimum enclosing ellipsoid over all k-subsets.
///
/// Subsets are visited in colex order and the first of equal-volume optima
/// is kept, so degenerate (zero-volume) subsets win and the earliest one is
/// reported.
pub fn brute_force_min_k_ellipsoid(points: &PointSet, k: usize, budget: &OracleBudget) -> Result<OracleOptimum> {
    budget.validate()?;
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} must lie in 1..={n}")));
    }
    let total = binomial(n, k);
    if total > budget.max_subsets as u128 {
        return Err(Error::BudgetExceeded {
            subsets: total,
            budget: budget.max_subsets,
        });
    }
    let mut search = Search {
        points,
        k,
        cfg: reference_config(budget.tol, points.dim() + 1, k),
        prune: budget.prune,
        best: None,
        evaluated: 0,
    };
    let mut chosen = Vec::with_capacity(k);
    search.descend(n, &mut chosen)?;
    let (log_volume, positions, ellipsoid) = search.best.expect("at least one subset");
    let mut subset_ids: Vec<usize> = positions.iter().map(|&p| points.id(p)).collect();
    subset_ids.sort_unstable();
    let mut covered_ids = ellipsoid.coverage(points, DEFAULT_SLACK)?.member_ids;
    for &id in &subset_ids {
        if !covered_ids.contains(&id) {
            covered_ids.push(id);
        }
    }
    covered_ids.sort_unstable();
    Ok(OracleOptimum {
        ellipsoid,
        log_volume,
        subset_ids,
        covered_ids,
        evaluated: search.evaluated,
    })
}

struct Search<'a> {
    points: &'a PointSet,
    k: usize,
    cfg: SolverConfig,
    prune: bool,
    best: Option<(f64, Vec<usize>, Ellipsoid)>,
    evaluated: u64,
}

impl Search<'_> {
    fn fit(&self, positions: &[usize]) -> Result<Ellipsoid> {
        let sub = self.points.select(positions);
        Ok(enclosing_ellipsoid(&sub, Centering::Free, &self.cfg, None)?.ellipsoid)
    }

    fn incumbent(&self) -> f64 {
        self.best.as_ref().map_or(f64::INFINITY, |b| b.0)
    }

    /// `chosen` holds the largest positions picked so far, in decreasing
    /// order; the rest come from `0..limit`. Taking the largest element
    /// first walks the subsets in colex order.
    fn descend(&mut self, limit: usize, chosen: &mut Vec<usize>) -> Result<()> {
        let need = self.k - chosen.len();
        if need == 0 {
            let e = self.fit(chosen)?;
            self.evaluated += 1;
            let lv = e.log_volume_or_neg_inf();
            if self.best.is_none() || lv < self.incumbent() {
                self.best = Some((lv, chosen.clone(), e));
            }
            return Ok(());
        }
        for top in need - 1..limit {
            if self.incumbent() == f64::NEG_INFINITY {
                // nothing beats zero volume, and ties keep the earlier subset
                return Ok(());
            }
            chosen.push(top);
            // Enclosing more points never shrinks the minimum ellipsoid, so a
            // partial subset's volume bounds every completion from below.
            let skip = self.prune
                && need > 1
                && chosen.len() > self.points.dim()
                && self.fit(chosen)?.log_volume_or_neg_inf() >= self.incumbent() + PRUNE_MARGIN;
            if !skip {
                self.descend(top, chosen)?;
            }
            chosen.pop();
        }
        Ok(())
    }
}

/// Enclosing ellipsoid solved to a `1e-12` leverage certificate with a
/// hundredfold iteration allowance.
pub fn high_precision_mvee(points: &PointSet) -> Result<Ellipsoid> {
    let cfg = reference_config(1e-12, points.dim() + 1, points.len());
    Ok(solve_mvee(points, &cfg)?.0)
}
