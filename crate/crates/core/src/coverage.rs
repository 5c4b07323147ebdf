//! Approximate coverage ellipsoid: for every candidate bounding ball and
//! every restart, repeatedly solve the enclosing-ellipsoid dual on the
//! surviving points and drop each point independently with probability equal
//! to its dual weight. Every round's enclosing ellipsoid becomes a
//! candidate; the smallest candidate meeting the coverage floor wins.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{lift, Ellipsoid, PointSet, DEFAULT_SLACK};
use crate::mvee::{
    enclosing_ellipsoid, extract_free_center, extract_primal_origin, solve_dual_origin_from,
    Centering, DualSolution, SolverConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoConfig {
    /// Target miscoverage `α ∈ (0, 1)`.
    pub alpha: f64,
    /// Progress parameter `γ ∈ (0, 1)`.
    pub gamma: f64,
    /// Rounds per branch are `⌈c · αn / (γ k)⌉`, `k` the dual dimension.
    pub iter_const_c: f64,
    /// Candidates must cover at least `(1 − c₂ α/γ) n` points.
    pub coverage_const_c2: f64,
    /// Restarts per ball; `None` means `⌈log₂ n⌉`.
    pub restarts: Option<usize>,
    /// A branch aborts once it has removed more than this fraction of `n`;
    /// `None` means `c₂ α / γ`.
    pub removal_cap_factor: Option<f64>,
    /// Keep at most this many deduplicated balls, preferring those with the
    /// most members. `None` runs every ball.
    pub max_balls: Option<usize>,
    pub solver: SolverConfig,
    pub seed: u64,
    /// Record per-round survivor sets and dual weights in [`BranchRecord`].
    pub trace: bool,
}

impl AlgoConfig {
    pub fn new(alpha: f64, gamma: f64, seed: u64) -> Self {
        Self {
            alpha,
            gamma,
            iter_const_c: 56.0,
            coverage_const_c2: 4.0,
            restarts: None,
            removal_cap_factor: None,
            max_balls: None,
            solver: SolverConfig::default(),
            seed,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0, 1)".into()));
        }
        if self.restarts == Some(0) {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_balls == Some(0) {
            return Err(Error::InvalidConfig("max_balls must be at least 1".into()));
        }
        if !(self.iter_const_c > 0.0) || !(self.coverage_const_c2 >= 0.0) {
            return Err(Error::InvalidConfig("constants must be positive".into()));
        }
        self.solver.validate()
    }

    pub fn restart_count(&self, n: usize) -> usize {
        self.restarts
            .unwrap_or_else(|| ((n.max(2) as f64).log2().ceil() as usize).max(1))
    }

    /// `J = ⌈c · αn / (γ k)⌉` for a dual in dimension `k`.
    pub fn rounds(&self, n: usize, k: usize) -> usize {
        ((self.iter_const_c * self.alpha * n as f64 / (self.gamma * k as f64)).ceil() as usize)
            .max(1)
    }

    pub fn coverage_floor(&self, n: usize) -> f64 {
        (1.0 - self.coverage_const_c2 * self.alpha / self.gamma) * n as f64
    }

    pub fn removal_cap(&self, n: usize) -> f64 {
        self.removal_cap_factor
            .unwrap_or(self.coverage_const_c2 * self.alpha / self.gamma)
            * n as f64
    }
}

/// A ball `B(a_{center}, ‖a_{center} − a_{radius}‖)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBall {
    pub center_id: usize,
    pub radius_id: usize,
    pub radius: f64,
    /// Number of points in the closed ball.
    pub count: usize,
}

/// All balls centered at a point with radius reaching another point that
/// contain at least `(1 − α) n` points (closed-ball membership).
pub fn candidate_bounding_balls(points: &PointSet, alpha: f64) -> Vec<BoundingBall> {
    let n = points.len();
    let need = (1.0 - alpha) * n as f64 - 1e-9 * n as f64;
    let mut out = Vec::new();
    for i in 0..n {
        let mut dists: Vec<(f64, usize)> = (0..n).map(|j| (sq_dist(points, i, j), j)).collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(points.id(a.1).cmp(&points.id(b.1))));
        let mut t = 0;
        while t < n {
            let r2 = dists[t].0;
            let mut end = t;
            while end < n && dists[end].0 == r2 {
                end += 1;
            }
            if end as f64 >= need {
                for &(_, j) in &dists[t..end] {
                    out.push(BoundingBall {
                        center_id: points.id(i),
                        radius_id: points.id(j),
                        radius: r2.sqrt(),
                        count: end,
                    });
                }
            }
            t = end;
        }
    }
    out
}

/// A ball together with the positions of its members in the point set.
#[derive(Debug, Clone)]
pub struct BallBranchSeed {
    pub ball: BoundingBall,
    pub members: Vec<usize>,
}

/// Collapses balls with identical member sets (first occurrence kept) and
/// optionally keeps only the `max_balls` largest.
pub fn dedup_balls(
    points: &PointSet,
    balls: &[BoundingBall],
    max_balls: Option<usize>,
) -> Vec<BallBranchSeed> {
    let n = points.len();
    let words = n.div_ceil(64);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out = Vec::new();
    for ball in balls {
        let c = points.position_of(ball.center_id).expect("center in set");
        let r2 = ball.radius * ball.radius;
        let mut bits = vec![0u64; words];
        let mut members = Vec::with_capacity(ball.count);
        for j in 0..n {
            if sq_dist(points, c, j) <= r2 {
                bits[j / 64] |= 1 << (j % 64);
                members.push(j);
            }
        }
        if seen.insert(bits) {
            out.push(BallBranchSeed {
                ball: ball.clone(),
                members,
            });
        }
    }
    if let Some(limit) = max_balls {
        out.sort_by(|a, b| {
            b.members
                .len()
                .cmp(&a.members.len())
                .then(a.ball.radius.total_cmp(&b.ball.radius))
                .then(a.ball.center_id.cmp(&b.ball.center_id))
                .then(a.ball.radius_id.cmp(&b.ball.radius_id))
        });
        out.truncate(limit);
    }
    out
}

fn sq_dist(points: &PointSet, i: usize, j: usize) -> f64 {
    points
        .point(i)
        .iter()
        .zip(points.point(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Removes each listed point independently with probability `clamp(wᵢ, 0, 1)`.
pub fn remove_by_weights<R: Rng + ?Sized>(ids: &[usize], weights: &[f64], rng: &mut R) -> Vec<usize> {
    ids.iter()
        .zip(weights)
        .filter(|(_, &w)| {
            let p = w.clamp(0.0, 1.0);
            rng.random::<f64>() < p
        })
        .map(|(&id, _)| id)
        .collect()
}

/// One removal round on points already in the solver's space (lifted points
/// for free-center problems): solve the origin-centered dual, then remove
/// each point with probability equal to its clamped weight.
///
/// Returns [`Error::RankDeficient`] when the points lie on a hyperplane
/// through the origin; nothing is removed in that case.
pub fn removal_round<R: Rng + ?Sized>(
    points: &PointSet,
    cfg: &SolverConfig,
    rng: &mut R,
    init: Option<&[f64]>,
) -> Result<(Vec<usize>, DualSolution)> {
    let dual = solve_dual_origin_from(points, cfg, init)?;
    let removed = remove_by_weights(&dual.ids, &dual.clamped_weights(), rng);
    Ok((removed, dual))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub ellipsoid: Ellipsoid,
    /// Points of the full input covered, with the default slack.
    pub coverage_count: usize,
    /// `−∞` for degenerate ellipsoids.
    pub log_volume: f64,
    /// `(center id, radius id)` of the originating ball.
    pub ball_id: (usize, usize),
    /// 1-based; round `j` is the ellipsoid of the survivors entering round
    /// `j`, and round `J + 1` the survivors after the last round.
    pub round: usize,
    pub restart: usize,
    pub survivors: usize,
    /// Points removed by the branch before this candidate was formed.
    pub removed_before: usize,
}

/// Per-round diagnostics, recorded when [`AlgoConfig::trace`] is set.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub survivor_ids: Vec<usize>,
    /// Dual weights (summing to the dual dimension), aligned with
    /// `survivor_ids`; empty for a degenerate round.
    pub weights: Vec<f64>,
    pub removed_ids: Vec<usize>,
    /// `log det` of the candidate's shape in input coordinates.
    pub shape_logdet: f64,
    pub degenerate: bool,
    pub solver_converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchEnd {
    /// All `J` rounds ran.
    Completed,
    /// Cumulative removals exceeded the cap.
    CapExceeded,
    /// Survivors lost full (affine) rank; the flat was recorded.
    Degenerate,
    /// No survivors left.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub ball_index: usize,
    pub ball_id: (usize, usize),
    pub restart: usize,
    pub end: BranchEnd,
    /// Number of dual solves that drove removals.
    pub removal_solves: usize,
    pub total_removed: usize,
    pub rounds: Vec<RoundRecord>,
}

#[derive(Debug, Clone)]
pub struct CoverageRun {
    pub best: CandidateRecord,
    pub candidates: Vec<CandidateRecord>,
    pub branches: Vec<BranchRecord>,
    pub rounds_per_branch: usize,
    pub coverage_floor: f64,
    pub balls: usize,
}

struct BranchSetup<'a> {
    full: &'a PointSet,
    /// Points of the branch in normalized coordinates.
    local: PointSet,
    /// Normalized → input coordinates: `x ↦ scale · x + offset`.
    scale: f64,
    offset: DVector<f64>,
    ball_index: usize,
    ball_id: (usize, usize),
    restart: usize,
    centering: Centering,
    /// Round-1 dual, identical across restarts of the same ball.
    first: Option<&'a DualSolution>,
}

/// Round 1 of every restart of a ball solves the same problem; solve it once
/// per ball when there is more than one restart. Failures are left to the
/// branch to handle.
fn first_solves(solver_pts: &[PointSet], restarts: usize, cfg: &AlgoConfig) -> Vec<Option<DualSolution>> {
    solver_pts
        .iter()
        .map(|pts| if restarts > 1 { solve_dual_origin_from(pts, &cfg.solver, None).ok() } else { None })
        .collect()
}

struct BranchOutput {
    candidates: Vec<CandidateRecord>,
    record: BranchRecord,
}

/// Runs the full coverage-ellipsoid search with a free center.
pub fn approximate_coverage_ellipsoid(points: &PointSet, cfg: &AlgoConfig) -> Result<CoverageRun> {
    cfg.validate()?;
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    let d = points.dim();
    if cfg.gamma * d as f64 > cfg.alpha * n as f64 {
        log::warn!(
            "gamma·d = {:.3} exceeds alpha·n = {:.3}; the volume guarantee does not apply",
            cfg.gamma * d as f64,
            cfg.alpha * n as f64
        );
    }
    let floor = cfg.coverage_floor(n);

    if cfg.alpha * (n as f64) < 1.0 {
        // No outlier may be dropped: the answer is the plain MVEE.
        let fit = enclosing_ellipsoid(points, Centering::Free, &cfg.solver, None)?;
        let cand = candidate(points, fit.ellipsoid, (points.id(0), points.id(0)), 1, 0, n, 0)?;
        return select(vec![cand], Vec::new(), floor, 1, 1);
    }

    let balls = candidate_bounding_balls(points, cfg.alpha);
    let seeds = dedup_balls(points, &balls, cfg.max_balls);
    let restarts = cfg.restart_count(n);
    let rounds = cfg.rounds(n, d + 1);

    let locals = seeds
        .iter()
        .map(|seed| {
            let center = DVector::from_column_slice(points.position_of(seed.ball.center_id).map(|p| points.point(p)).expect("center"));
            let scale = if seed.ball.radius > 0.0 { seed.ball.radius } else { 1.0 };
            let local = points
                .select(&seed.members)
                .map_affine(&(DMatrix::identity(d, d) / scale), &(-&center / scale))?;
            Ok((local, scale, center))
        })
        .collect::<Result<Vec<_>>>()?;
    let firsts = first_solves(&locals.iter().map(|(l, _, _)| lift(l)).collect::<Vec<_>>(), restarts, cfg);

    let jobs: Vec<(usize, usize)> = (0..restarts)
        .flat_map(|r| (0..seeds.len()).map(move |b| (b, r)))
        .collect();
    let run_job = |&(b, r): &(usize, usize)| -> Result<BranchOutput> {
        let seed = &seeds[b];
        let (local, scale, center) = &locals[b];
        run_branch(
            BranchSetup {
                full: points,
                local: local.clone(),
                scale: *scale,
                offset: center.clone(),
                ball_index: b,
                ball_id: (seed.ball.center_id, seed.ball.radius_id),
                restart: r,
                centering: Centering::Free,
                first: firsts[b].as_ref(),
            },
            cfg,
            rounds,
        )
    };
    let outputs = map_jobs(&jobs, run_job)?;
    let (candidates, branches) = flatten(outputs);
    select(candidates, branches, floor, rounds, seeds.len())
}

/// Origin-centered variant: no bounding balls and no lift. Every restart
/// runs removal rounds on the whole set with the origin-centered dual in
/// `ℝ^d` (weights summing to `d`).
pub fn approximate_origin_coverage_ellipsoid(points: &PointSet, cfg: &AlgoConfig) -> Result<CoverageRun> {
    cfg.validate()?;
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty point set".into()));
    }
    let d = points.dim();
    let floor = cfg.coverage_floor(n);
    if cfg.alpha * (n as f64) < 1.0 {
        let fit = enclosing_ellipsoid(points, Centering::Origin, &cfg.solver, None)?;
        let cand = candidate(points, fit.ellipsoid, (points.id(0), points.id(0)), 1, 0, n, 0)?;
        return select(vec![cand], Vec::new(), floor, 1, 1);
    }
    let restarts = cfg.restart_count(n);
    let rounds = cfg.rounds(n, d);
    let firsts = first_solves(std::slice::from_ref(points), restarts, cfg);
    let jobs: Vec<(usize, usize)> = (0..restarts).map(|r| (0, r)).collect();
    let run_job = |&(_, r): &(usize, usize)| -> Result<BranchOutput> {
        run_branch(
            BranchSetup {
                full: points,
                local: points.clone(),
                scale: 1.0,
                offset: DVector::zeros(d),
                ball_index: 0,
                ball_id: (points.id(0), points.id(0)),
                restart: r,
                centering: Centering::Origin,
                first: firsts[0].as_ref(),
            },
            cfg,
            rounds,
        )
    };
    let outputs = map_jobs(&jobs, run_job)?;
    let (candidates, branches) = flatten(outputs);
    select(candidates, branches, floor, rounds, 1)
}

#[cfg(feature = "parallel")]
fn map_jobs<F>(jobs: &[(usize, usize)], f: F) -> Result<Vec<BranchOutput>>
where
    F: Fn(&(usize, usize)) -> Result<BranchOutput> + Sync + Send,
{
    use rayon::prelude::*;
    jobs.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_jobs<F>(jobs: &[(usize, usize)], f: F) -> Result<Vec<BranchOutput>>
where
    F: Fn(&(usize, usize)) -> Result<BranchOutput>,
{
    jobs.iter().map(f).collect()
}

fn flatten(outputs: Vec<BranchOutput>) -> (Vec<CandidateRecord>, Vec<BranchRecord>) {
    let mut candidates = Vec::new();
    let mut branches = Vec::with_capacity(outputs.len());
    for out in outputs {
        candidates.extend(out.candidates);
        branches.push(out.record);
    }
    (candidates, branches)
}

/// Private stream per (ball, restart), independent of scheduling.
fn branch_rng(seed: u64, ball_index: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((ball_index as u64) << 24) ^ restart as u64);
    rng
}

fn run_branch(setup: BranchSetup<'_>, cfg: &AlgoConfig, rounds: usize) -> Result<BranchOutput> {
    let n_full = setup.full.len();
    let cap = cfg.removal_cap(n_full);
    let mut rng = branch_rng(cfg.seed, setup.ball_index, setup.restart);
    let mut survivors: Vec<usize> = (0..setup.local.len()).collect();
    let mut warm: Option<Vec<f64>> = None;
    let mut total_removed = 0usize;
    let mut removal_solves = 0usize;
    let mut candidates = Vec::new();
    let mut round_log = Vec::new();
    let mut end = BranchEnd::Completed;

    let to_input = |e: &Ellipsoid| -> Ellipsoid {
        let s = setup.scale;
        Ellipsoid::from_parts_unchecked(e.center() * s + &setup.offset, e.shape() * (s * s))
    };

    for round in 1..=rounds + 1 {
        if survivors.is_empty() {
            end = BranchEnd::Exhausted;
            break;
        }
        let current = setup.local.select(&survivors);
        let last = round == rounds + 1;
        let init = warm.as_deref();
        let solver_pts = match setup.centering {
            Centering::Free => lift(&current),
            Centering::Origin => current.clone(),
        };
        let attempt = if last {
            solve_dual_origin_from(&solver_pts, &cfg.solver, init).map(|s| (Vec::new(), s))
        } else if let (1, Some(first)) = (round, setup.first) {
            let removed = remove_by_weights(&first.ids, &first.clamped_weights(), &mut rng);
            Ok((removed, first.clone()))
        } else {
            removal_round(&solver_pts, &cfg.solver, &mut rng, init)
        };
        match attempt {
            Ok((removed_ids, dual)) => {
                let local_e = match setup.centering {
                    Centering::Free => extract_free_center(&current, &dual)?,
                    Centering::Origin => extract_primal_origin(&dual),
                };
                let e = to_input(&local_e);
                let shape_logdet = crate::linalg::logdet_spd(e.shape()).unwrap_or(f64::NEG_INFINITY);
                let cand = candidate(
                    setup.full,
                    e,
                    setup.ball_id,
                    round,
                    setup.restart,
                    survivors.len(),
                    total_removed,
                )?;
                candidates.push(cand);
                if cfg.trace {
                    round_log.push(RoundRecord {
                        round,
                        survivor_ids: current.ids().to_vec(),
                        weights: dual.weights.clone(),
                        removed_ids: removed_ids.clone(),
                        shape_logdet,
                        degenerate: false,
                        solver_converged: dual.converged,
                    });
                }
                if last {
                    break;
                }
                removal_solves += 1;
                total_removed += removed_ids.len();
                if total_removed as f64 > cap {
                    end = BranchEnd::CapExceeded;
                    break;
                }
                let removed: HashSet<usize> = removed_ids.into_iter().collect();
                let mut next = Vec::with_capacity(survivors.len());
                let mut next_warm = Vec::with_capacity(survivors.len());
                for (pos, &s) in survivors.iter().enumerate() {
                    if !removed.contains(&current.id(pos)) {
                        next.push(s);
                        next_warm.push(dual.weights[pos]);
                    }
                }
                survivors = next;
                // every weighted point may have been removed; start cold then
                warm = next_warm.iter().any(|&w| w > 0.0).then_some(next_warm);
            }
            Err(Error::RankDeficient { .. }) => {
                let fit = enclosing_ellipsoid(&current, setup.centering, &cfg.solver, None)?;
                let e = to_input(&fit.ellipsoid);
                candidates.push(candidate(
                    setup.full,
                    e,
                    setup.ball_id,
                    round,
                    setup.restart,
                    survivors.len(),
                    total_removed,
                )?);
                if cfg.trace {
                    round_log.push(RoundRecord {
                        round,
                        survivor_ids: current.ids().to_vec(),
                        weights: Vec::new(),
                        removed_ids: Vec::new(),
                        shape_logdet: f64::NEG_INFINITY,
                        degenerate: true,
                        solver_converged: true,
                    });
                }
                if !last {
                    end = BranchEnd::Degenerate;
                }
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BranchOutput {
        candidates,
        record: BranchRecord {
            ball_index: setup.ball_index,
            ball_id: setup.ball_id,
            restart: setup.restart,
            end,
            removal_solves,
            total_removed,
            rounds: round_log,
        },
    })
}

fn candidate(
    full: &PointSet,
    ellipsoid: Ellipsoid,
    ball_id: (usize, usize),
    round: usize,
    restart: usize,
    survivors: usize,
    removed_before: usize,
) -> Result<CandidateRecord> {
    let coverage_count = ellipsoid.coverage(full, DEFAULT_SLACK)?.count;
    let log_volume = ellipsoid.log_volume_or_neg_inf();
    Ok(CandidateRecord {
        ellipsoid,
        coverage_count,
        log_volume,
        ball_id,
        round,
        restart,
        survivors,
        removed_before,
    })
}

fn select(
    mut candidates: Vec<CandidateRecord>,
    branches: Vec<BranchRecord>,
    floor: f64,
    rounds: usize,
    balls: usize,
) -> Result<CoverageRun> {
    candidates.sort_by(|a, b| {
        a.restart
            .cmp(&b.restart)
            .then(a.ball_id.cmp(&b.ball_id))
            .then(a.round.cmp(&b.round))
    });
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        if (c.coverage_count as f64) < floor {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if better(c.log_volume, candidates[b].log_volume) => Some(i),
            keep => keep,
        };
    }
    match best {
        Some(b) => Ok(CoverageRun {
            best: candidates[b].clone(),
            candidates,
            branches,
            rounds_per_branch: rounds,
            coverage_floor: floor,
            balls,
        }),
        None => Err(Error::NoFeasibleCandidate { floor, candidates }),
    }
}

/// Strictly smaller by more than the tie tolerance.
fn better(candidate: f64, incumbent: f64) -> bool {
    if candidate == f64::NEG_INFINITY {
        return incumbent != f64::NEG_INFINITY;
    }
    candidate < incumbent - 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::new(1, &xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn bounding_balls_on_a_line() {
        let pts = line(&[0.0, 1.0, 10.0]);
        let balls = candidate_bounding_balls(&pts, 1.0 / 3.0);
        let has = |c, r| balls.iter().any(|b| b.center_id == c && b.radius_id == r);
        assert!(has(0, 1));
        assert!(has(0, 2));
        assert!(!has(0, 0));
        assert!(balls.len() <= 9);
        assert!(balls.iter().all(|b| b.count as f64 > 2.0 - 1e-12));
    }

    #[test]
    fn single_point_ball() {
        let pts = line(&[4.0]);
        let balls = candidate_bounding_balls(&pts, 0.5);
        assert_eq!(balls, vec![BoundingBall { center_id: 0, radius_id: 0, radius: 0.0, count: 1 }]);
    }

    #[test]
    fn dedup_collapses_identical_member_sets() {
        let pts = line(&[0.0, 1.0, 2.0]);
        let balls = candidate_bounding_balls(&pts, 0.5);
        let seeds = dedup_balls(&pts, &balls, None);
        let mut sets: Vec<Vec<usize>> = seeds.iter().map(|s| s.members.clone()).collect();
        sets.sort();
        sets.dedup();
        assert_eq!(sets.len(), seeds.len());
        // {0,1,2} is reachable from every center but kept once
        assert_eq!(seeds.iter().filter(|s| s.members.len() == 3).count(), 1);
    }

    #[test]
    fn removal_by_extreme_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ids = [10, 11, 12];
        assert_eq!(remove_by_weights(&ids, &[0.0, 1.0, 0.0], &mut rng), vec![11]);
        assert!(remove_by_weights(&ids, &[0.0; 3], &mut rng).is_empty());
        assert_eq!(remove_by_weights(&ids, &[1.0 + 1e-9; 3], &mut rng), vec![10, 11, 12]);
    }

    #[test]
    fn zero_outlier_budget_is_plain_mvee() {
        let pts = PointSet::new(
            2,
            &[vec![1.0, 1.0], vec![-1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0]],
        )
        .unwrap();
        let run = approximate_coverage_ellipsoid(&pts, &AlgoConfig::new(0.01, 0.5, 1)).unwrap();
        assert_eq!(run.candidates.len(), 1);
        let e = &run.best.ellipsoid;
        assert!(e.center().norm() < 1e-6);
        assert!((e.shape() - DMatrix::identity(2, 2) * 2.0).norm() < 1e-5);
        assert_eq!(run.best.coverage_count, 4);
    }

    #[test]
    fn config_validation() {
        assert!(AlgoConfig::new(0.0, 0.5, 0).validate().is_err());
        assert!(AlgoConfig::new(0.1, 1.0, 0).validate().is_err());
        let mut c = AlgoConfig::new(0.1, 0.5, 0);
        c.restarts = Some(0);
        assert!(c.validate().is_err());
        let c = AlgoConfig::new(0.05, 0.25, 0);
        assert_eq!(c.rounds(1000, 11), (56.0f64 * 50.0 / (0.25 * 11.0)).ceil() as usize);
        assert!((c.coverage_floor(1000) - 200.0).abs() < 1e-9);
        assert_eq!(c.restart_count(1000), 10);
    }
}
