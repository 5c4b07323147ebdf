//! Minimum-volume enclosing ellipsoids through the D-optimal design dual.
//!
//! The origin-centered dual maximizes `log det Σ wᵢ aᵢaᵢᵀ` over `w ≥ 0`,
//! `Σ wᵢ = k`. It is solved by Frank–Wolfe coordinate ascent with Wolfe
//! away-steps (Todd–Yıldırım), keeping `M⁻¹` and all leverages current with
//! rank-one updates and re-factoring from a QR decomposition every few
//! iterations so that ill-conditioned moments stay accurate. Once the
//! support is small, projected Newton steps on the active set finish the
//! solve; plain first-order ascent crawls on point clouds whose optimal
//! support sits among many near-boundary points.
//!
//! Leverages are reported relative to the normalized moment `M / k`, i.e.
//! `leverageᵢ = k · aᵢᵀ M⁻¹ aᵢ`. At the optimum every support point has
//! leverage exactly `k`, and `max leverage ≤ (1 + η) k` certifies
//! `η`-optimality.
//!
//! Free-center ellipsoids come from lifting `a ↦ (a; 1)`, solving the
//! origin-centered dual in `ℝ^{d+1}` and taking the Schur complement.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{lift, Ellipsoid, PointSet};
use crate::linalg::{self, REL_ZERO};

/// Share of uniform weight blended into a warm start whose support does not
/// span.
const WARM_START_UNIFORM: f64 = 0.1;

/// Smallest eigenvalue below `RANK_TOL · trace(M)/k` means rank deficient.
const RANK_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative optimality tolerance on the leverage certificate.
    pub eta: f64,
    /// Iteration cap; `None` means `⌈100 · k · ln n⌉`.
    pub max_iters: Option<usize>,
    /// Weights above this count as support.
    pub support_threshold: f64,
    /// When positive, rank-deficient inputs are repaired by adding
    /// `ridge · trace(M)/k · I` to the moment of the span-restricted optimum
    /// instead of returning [`Error::RankDeficient`].
    pub ridge: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eta: 1e-7,
            max_iters: None,
            support_threshold: 1e-8,
            ridge: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn with_eta(eta: f64) -> Self {
        Self {
            eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig("eta must be positive".into()));
        }
        if self.max_iters == Some(0) {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::InvalidConfig("ridge must be nonnegative".into()));
        }
        Ok(())
    }

    pub(crate) fn iteration_cap(&self, k: usize, n: usize) -> usize {
        self.max_iters
            .unwrap_or_else(|| (100.0 * k as f64 * (n as f64).ln().max(1.0)).ceil() as usize)
    }
}

/// Solution of the origin-centered dual on a set of points in `ℝ^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Ambient dimension of the solved problem.
    pub dim: usize,
    /// Point ids, aligned with `weights` and `leverages`.
    pub ids: Vec<usize>,
    /// Weights summing to `dim`.
    pub weights: Vec<f64>,
    /// `dim · aᵢᵀ M⁻¹ aᵢ` for every point.
    pub leverages: Vec<f64>,
    /// `M = Σ wᵢ aᵢ aᵢᵀ`.
    pub moment: DMatrix<f64>,
    pub max_leverage: f64,
    pub logdet: f64,
    pub support_ids: Vec<usize>,
    pub iterations: usize,
    /// `false` when the iteration cap was hit before the certificate held.
    pub converged: bool,
    /// Set when the ridge repair was applied to a rank-deficient input.
    pub ridge_applied: bool,
}

impl DualSolution {
    /// Weights clamped to `[0, 1]`, as used for removal probabilities.
    pub fn clamped_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.clamp(0.0, 1.0)).collect()
    }

    pub fn weight_of(&self, id: usize) -> Option<f64> {
        self.ids.iter().position(|&i| i == id).map(|p| self.weights[p])
    }
}

/// Solves the origin-centered dual starting from uniform weights.
pub fn solve_dual_origin(points: &PointSet, cfg: &SolverConfig) -> Result<DualSolution> {
    solve_dual_origin_from(points, cfg, None)
}

/// Solves the origin-centered dual starting from `init` (normalized
/// internally; must put positive mass on a spanning subset).
pub fn solve_dual_origin_from(
    points: &PointSet,
    cfg: &SolverConfig,
    init: Option<&[f64]>,
) -> Result<DualSolution> {
    cfg.validate()?;
    let k = points.dim();
    let n = points.len();
    let basis = span_basis(points);
    if basis.nrows() < k {
        if cfg.ridge > 0.0 && basis.nrows() > 0 {
            return ridge_repair(points, cfg, &basis);
        }
        return Err(Error::RankDeficient {
            rank: basis.nrows(),
            dim: k,
            basis,
        });
    }

    let mut u: Vec<f64> = match init {
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.len(),
                });
            }
            let total: f64 = w.iter().map(|v| v.max(0.0)).sum();
            if !(total > 0.0) {
                return Err(Error::InvalidInput("initial weights sum to zero".into()));
            }
            w.iter().map(|v| v.max(0.0) / total).collect()
        }
        None => vec![1.0 / n as f64; n],
    };

    let mut fw = FrankWolfe::new(points, cfg.iteration_cap(k, n));
    if !fw.refresh(&u) && init.is_some() {
        // The warm start's support does not span: blend in uniform weight.
        let uniform = WARM_START_UNIFORM / n as f64;
        u.iter_mut().for_each(|x| *x = (1.0 - WARM_START_UNIFORM) * *x + uniform);
    }
    if !fw.refresh(&u) {
        u = vec![1.0 / n as f64; n];
        if !fw.refresh(&u) {
            return Err(Error::RankDeficient {
                rank: basis.nrows(),
                dim: k,
                basis,
            });
        }
    }
    fw.run(&mut u, cfg.eta);
    Ok(fw.into_solution(points, &u, cfg))
}

/// Orthonormal basis (rows) of the linear span of the points, using the
/// rank threshold `σ²_min < RANK_TOL · Σσ² / k`.
pub fn span_basis(points: &PointSet) -> DMatrix<f64> {
    let k = points.dim();
    if points.is_empty() {
        return DMatrix::zeros(0, k);
    }
    let a = points.to_matrix();
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return DMatrix::zeros(0, k);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i].powi(2) >= RANK_TOL * total / k as f64)
        .collect();
    let mut basis = DMatrix::zeros(keep.len(), k);
    for (r, &i) in keep.iter().enumerate() {
        basis.set_row(r, &v_t.row(i));
    }
    basis
}

/// Orthonormal basis (rows) of the direction space of the affine hull, plus
/// the mean used as the anchor point.
pub fn affine_hull(points: &PointSet) -> (DVector<f64>, DMatrix<f64>) {
    let d = points.dim();
    let n = points.len().max(1) as f64;
    let mut mean = DVector::zeros(d);
    for (_, p) in points.iter() {
        mean += DVector::from_column_slice(p);
    }
    mean /= n;
    let centered = points
        .map_affine(&DMatrix::identity(d, d), &(-&mean))
        .expect("square map");
    (mean, span_basis(&centered))
}

fn ridge_repair(points: &PointSet, cfg: &SolverConfig, basis: &DMatrix<f64>) -> Result<DualSolution> {
    let k = points.dim();
    let reduced = points.map_affine(basis, &DVector::zeros(basis.nrows()))?;
    let inner = solve_dual_origin(&reduced, &SolverConfig { ridge: 0.0, ..cfg.clone() })?;
    let embedded = basis.transpose() * &inner.moment * basis;
    let trace = embedded.trace();
    let moment = &embedded + DMatrix::identity(k, k) * (cfg.ridge * trace / k as f64);
    let logdet = linalg::logdet_spd(&moment)
        .ok_or_else(|| Error::InvalidInput("ridge-repaired moment is singular".into()))?;
    let inv = moment.clone().try_inverse().expect("positive definite");
    let leverages: Vec<f64> = points
        .iter()
        .map(|(_, p)| {
            let a = DVector::from_column_slice(p);
            k as f64 * a.dot(&(&inv * &a))
        })
        .collect();
    let max_leverage = leverages.iter().cloned().fold(0.0, f64::max);
    // Rescale weights to sum to the ambient dimension.
    let scale = k as f64 / basis.nrows() as f64;
    let weights: Vec<f64> = inner.weights.iter().map(|w| w * scale).collect();
    Ok(DualSolution {
        dim: k,
        ids: points.ids().to_vec(),
        support_ids: inner.support_ids.clone(),
        weights,
        leverages,
        moment,
        max_leverage,
        logdet,
        iterations: inner.iterations,
        converged: inner.converged,
        ridge_applied: true,
    })
}

/// `log det(I + Σ δᵣ yᵣyᵣᵀ)`: the change of `log det M` when the weights
/// move by `δ`, with `yᵣ = R⁻ᵀaᵣ` whitened by the current factor.
/// `None` if the new moment is not positive definite.
fn whitened_logdet_change(y: &DMatrix<f64>, delta: &[f64]) -> Option<f64> {
    let k = y.nrows();
    let mut s = DMatrix::identity(k, k);
    for (r, &dr) in delta.iter().enumerate() {
        if dr != 0.0 {
            let col = y.column(r);
            s.syger(dr, &col, &col, 1.0);
        }
    }
    let chol = s.cholesky()?;
    let l = chol.l_dirty();
    Some((0..k).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

/// Cholesky factor with pivot ratio above `1e-10`.
fn well_conditioned(l: &DMatrix<f64>) -> bool {
    let (lo, hi) = l.diagonal().iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x * x), hi.max(x * x)));
    lo > 1e-10 * hi
}

/// Row `r` of the factor `B` with `G ∘ G = B Bᵀ`: the symmetric
/// vectorization of `yᵣyᵣᵀ` (off-diagonal entries scaled by `√2`), where
/// `G = YᵀY`. Its `k(k+1)/2` columns bound the rank of the Hessian.
fn hessian_factor(y: &DMatrix<f64>) -> DMatrix<f64> {
    let k = y.nrows();
    let q = k * (k + 1) / 2;
    let mut b = DMatrix::zeros(y.ncols(), q);
    for (r, col) in y.column_iter().enumerate() {
        let mut c = 0;
        for i in 0..k {
            b[(r, c)] = col[i] * col[i];
            c += 1;
            for j in i + 1..k {
                b[(r, c)] = std::f64::consts::SQRT_2 * col[i] * col[j];
                c += 1;
            }
        }
    }
    b
}

/// Newton direction `d` of `max gᵀd − ½ ‖Bᵀd‖²` subject to `Σ d = c`, plus
/// the gradient component `f` (with `Σ f = 0`) lying in directions of
/// numerically zero curvature.
///
/// With more than `k(k+1)/2` active points the Hessian `BBᵀ` is necessarily
/// singular, and symmetric point sets reach that regime at the optimum;
/// ill-conditioned data can lose further rank. The problem is solved through
/// the spectrum of `ΠB`, `Π` the projector onto `Σ d = 0`. Along the flat
/// directions the objective is linear, so the caller follows `f` to the
/// boundary of the simplex.
fn newton_direction(b: &DMatrix<f64>, g: &DVector<f64>, c: f64) -> Option<(DVector<f64>, DVector<f64>)> {
    let f = b.nrows();
    let d0 = DVector::from_element(f, c / f as f64);
    let mut rhs = g - b * (b.transpose() * &d0);
    let mean = rhs.mean();
    rhs.add_scalar_mut(-mean);
    let mut pb = b.clone();
    for mut col in pb.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let gq = pb.transpose() * &pb;
    let proj = pb.transpose() * &rhs;
    if f > gq.nrows() {
        // Full column rank: d = ΠB G⁻² (ΠB)ᵀ rhs and f = rhs − ΠB G⁻¹ (ΠB)ᵀ rhs.
        if let Some(chol) = gq.clone().cholesky().filter(|ch| well_conditioned(ch.l_dirty())) {
            let z1 = chol.solve(&proj);
            let z2 = chol.solve(&z1);
            let flat = &rhs - &pb * z1;
            return Some((d0 + &pb * z2, flat));
        }
    }
    // Eigenpairs of the small Gram matrix (ΠB)ᵀ(ΠB) give the left singular
    // vectors ΠB vᵢ / σᵢ without an m×m factorization.
    let eig = gq.symmetric_eigen();
    let top = eig.eigenvalues.amax();
    if !(top > 0.0) {
        return None;
    }
    let mut newton = DVector::zeros(f);
    let mut flat = rhs.clone();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 1e-10 * top {
            let v = eig.eigenvectors.column(i);
            let ui = &pb * v / l.sqrt();
            let y = v.dot(&proj) / l.sqrt();
            newton.axpy(y / l, &ui, 1.0);
            flat.axpy(-y, &ui, 1.0);
        }
    }
    Some((d0 + newton, flat))
}

/// `ε` of the ε-active set used by the projected Newton step; shrinks with
/// the certificate gap `max g / k − 1` so that near the optimum only
/// negligible weights are forced out.
fn eps_active(m: usize, gap: f64) -> f64 {
    (0.1 / m as f64).min(gap / m as f64)
}

/// Projected Newton direction on the simplex for weights `w`, with the
/// Hessian `G ∘ G` and gradient `grad`.
///
/// ε-active coordinates (weight at most `eps`, gradient below `k`) go to zero
/// linearly instead of entering the Newton system; clipping tiny weights
/// with large negative components would otherwise turn the step into a
/// descent. Zero weights whose component comes out negative are held.
fn projected_direction(feat: &DMatrix<f64>, grad: &DVector<f64>, w: &[f64], k: usize, eps: f64) -> Option<(DVector<f64>, DVector<f64>)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Coord {
        Free,
        Held,
        Drop,
    }
    let m = w.len();
    let kf = k as f64;
    let mut state: Vec<Coord> = (0..m)
        .map(|r| if w[r] > 0.0 && w[r] <= eps && grad[r] < kf { Coord::Drop } else { Coord::Free })
        .collect();
    loop {
        let idx: Vec<usize> = (0..m).filter(|&r| state[r] == Coord::Free).collect();
        let drop: Vec<usize> = (0..m).filter(|&r| state[r] == Coord::Drop).collect();
        let f = idx.len();
        let mut dir = DVector::zeros(m);
        for &r in &drop {
            dir[r] = -w[r];
        }
        if f == 0 {
            return Some((dir, DVector::zeros(m)));
        }
        let bf = feat.select_rows(&idx);
        let moved = feat.transpose() * &dir;
        let gf = DVector::from_fn(f, |x, _| grad[idx[x]] - bf.row(x).dot(&moved.transpose()));
        let c = -drop.iter().map(|&q| dir[q]).sum::<f64>();
        let (d, flat_f) = newton_direction(&bf, &gf, c)?;
        let mut changed = false;
        for (x, &r) in idx.iter().enumerate() {
            if w[r] <= 0.0 && d[x] < 0.0 {
                state[r] = Coord::Held;
                changed = true;
            }
            dir[r] = d[x];
        }
        if !changed {
            // Flat moves only among positive weights.
            let mut flat = DVector::zeros(m);
            let pos: Vec<usize> = (0..f).filter(|&x| w[idx[x]] > 0.0).collect();
            if !pos.is_empty() {
                let mean = pos.iter().map(|&x| flat_f[x]).sum::<f64>() / pos.len() as f64;
                for &x in &pos {
                    flat[idx[x]] = flat_f[x] - mean;
                }
            }
            return Some((dir, flat));
        }
    }
}

/// Newton is abandoned for the rest of a solve after this many stalls.
const MAX_NEWTON_STALLS: u32 = 6;

/// Newton polishing is attempted once the support has at most this many
/// points (or `k(k+1)` if larger).
const NEWTON_MIN_SUPPORT: usize = 128;

#[derive(Debug)]
enum NewtonOutcome {
    Converged,
    OutOfIterations,
    /// No ascent step was found; fall back to Frank–Wolfe for a while.
    Stalled,
}

/// Working state of the away-step Frank–Wolfe ascent on probability weights
/// `u` (the dual weights are `k · u`).
struct FrankWolfe<'a> {
    a: &'a [f64],
    /// `Aᵀ` (`k × n`), kept for the leverage refresh.
    at: DMatrix<f64>,
    ids: &'a [usize],
    n: usize,
    k: usize,
    /// `(Σ uᵢ aᵢaᵢᵀ)⁻¹`, row-major
    inv: Vec<f64>,
    /// upper-triangular `R` with `RᵀR = M_u`, from the last refresh
    r: DMatrix<f64>,
    /// `aᵢᵀ M_u⁻¹ aᵢ`
    g: Vec<f64>,
    logdet_u: f64,
    iterations: usize,
    max_iters: usize,
    converged: bool,
    scratch_v: Vec<f64>,
}

impl<'a> FrankWolfe<'a> {
    fn new(points: &'a PointSet, max_iters: usize) -> Self {
        let k = points.dim();
        let n = points.len();
        Self {
            a: points.coords(),
            at: DMatrix::from_column_slice(k, n, points.coords()),
            ids: points.ids(),
            n,
            k,
            inv: vec![0.0; k * k],
            r: DMatrix::zeros(k, k),
            g: vec![0.0; n],
            logdet_u: 0.0,
            iterations: 0,
            max_iters,
            converged: false,
            scratch_v: vec![0.0; k],
        }
    }

    /// Recomputes `M⁻¹`, all leverages and `log det` from a QR factorization
    /// of `diag(√u) A`. Returns `false` if the weighted points do not span.
    fn refresh(&mut self, u: &[f64]) -> bool {
        let k = self.k;
        let support: Vec<usize> = (0..self.n).filter(|&i| u[i] > 0.0).collect();
        if support.len() < k {
            return false;
        }
        let mut w = DMatrix::zeros(support.len(), k);
        for (r, &i) in support.iter().enumerate() {
            let s = u[i].sqrt();
            for c in 0..k {
                w[(r, c)] = s * self.a[i * k + c];
            }
        }
        let r = w.qr().r();
        let mut logdet = 0.0;
        let mut top: f64 = 0.0;
        for i in 0..k {
            top = top.max(r[(i, i)].abs());
        }
        for i in 0..k {
            let v = r[(i, i)].abs();
            if !(v > REL_ZERO * top) {
                return false;
            }
            logdet += 2.0 * v.ln();
        }
        let rt = r.transpose();
        let Some(y) = rt.solve_lower_triangular(&self.at) else {
            return false;
        };
        for i in 0..self.n {
            self.g[i] = y.column(i).norm_squared();
        }
        let Some(r_inv) = r.clone().try_inverse() else {
            return false;
        };
        let inv = &r_inv * r_inv.transpose();
        for i in 0..k {
            for j in 0..k {
                self.inv[i * k + j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            }
        }
        self.logdet_u = logdet;
        self.r = r;
        true
    }

    fn argmax_g(&self) -> usize {
        let mut best = 0;
        for i in 1..self.n {
            if self.g[i] > self.g[best] || (self.g[i] == self.g[best] && self.ids[i] < self.ids[best]) {
                best = i;
            }
        }
        best
    }

    fn argmin_support_g(&self, u: &[f64]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..self.n {
            if u[i] <= 0.0 {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if self.g[i] < self.g[b] || (self.g[i] == self.g[b] && self.ids[i] < self.ids[b]) => Some(i),
                keep => keep,
            };
        }
        best
    }

    fn support_len(u: &[f64]) -> usize {
        u.iter().filter(|&&x| x > 0.0).count()
    }

    /// Away-step Frank–Wolfe until the support is small enough for Newton
    /// polishing, which then finishes the solve on the active set.
    fn run(&mut self, u: &mut [f64], eta: f64) {
        let k = self.k as f64;
        let refresh_every = (4 * self.k).max(32);
        // Symmetric sets carry their support in ± pairs, hence k(k+1).
        let newton_cap = (self.k * (self.k + 1)).max(NEWTON_MIN_SUPPORT);
        let mut since_refresh = 0usize;
        // Frank–Wolfe iterations to run before Newton is tried again.
        let mut newton_backoff = 0usize;
        let mut newton_stalls = 0u32;
        loop {
            if since_refresh >= refresh_every {
                if !self.refresh(u) {
                    break;
                }
                since_refresh = 0;
            }
            if since_refresh == 0 && self.screen(u) && !self.refresh(u) {
                break;
            }
            if since_refresh == 0 && newton_backoff == 0 && Self::support_len(u) <= newton_cap {
                match self.newton(u, eta, newton_cap) {
                    NewtonOutcome::Converged => {
                        self.converged = true;
                        break;
                    }
                    NewtonOutcome::OutOfIterations => break,
                    NewtonOutcome::Stalled => {
                        if !self.refresh(u) {
                            break;
                        }
                        // Back off exponentially; give up on Newton after
                        // repeated stalls (noise-limited, badly conditioned
                        // supports) and finish with Frank–Wolfe alone.
                        newton_stalls += 1;
                        newton_backoff = if newton_stalls >= MAX_NEWTON_STALLS {
                            usize::MAX
                        } else {
                            refresh_every << newton_stalls.min(6)
                        };
                    }
                }
            }
            let j = self.argmax_g();
            if self.g[j] <= (1.0 + eta) * k {
                if since_refresh == 0 {
                    self.converged = true;
                    break;
                }
                // Confirm against freshly factored leverages.
                if !self.refresh(u) {
                    break;
                }
                since_refresh = 0;
                continue;
            }
            if self.iterations >= self.max_iters {
                if since_refresh > 0 {
                    self.refresh(u);
                }
                let j = self.argmax_g();
                self.converged = self.g[j] <= (1.0 + eta) * k;
                break;
            }
            self.iterations += 1;
            since_refresh += 1;
            newton_backoff = newton_backoff.saturating_sub(1);

            let l = self.argmin_support_g(u).expect("nonempty support");
            let eps_plus = self.g[j] / k - 1.0;
            let eps_minus = 1.0 - self.g[l] / k;

            let (p, tau, drop) = if eps_plus >= eps_minus {
                (j, (self.g[j] - k) / (k * (self.g[j] - 1.0)), false)
            } else {
                let bound = -u[l] / (1.0 - u[l]);
                let tau = if self.g[l] > 1.0 {
                    ((self.g[l] - k) / (k * (self.g[l] - 1.0))).max(bound)
                } else {
                    bound
                };
                (l, tau, tau <= bound)
            };

            if !self.step(u, p, tau, drop) {
                if !self.refresh(u) {
                    break;
                }
                since_refresh = 0;
            }
        }
    }

    /// `u ← (1 − τ) u + τ e_p` (`τ < 0` for an away step; `drop` zeroes
    /// `u_p`). Returns `false` if the caller must refactor.
    fn step(&mut self, u: &mut [f64], p: usize, mut tau: f64, drop: bool) -> bool {
        let k = self.k as f64;
        if tau >= 1.0 - 1e-12 {
            u.iter_mut().for_each(|x| *x = 0.0);
            u[p] = 1.0;
            return false;
        }
        let gp = self.g[p];
        let mut f = tau / (1.0 - tau);
        let mut denom = 1.0 + f * gp;
        let mut dropping = drop;
        if denom <= 1e-10 {
            // Dropping this point would make the moment singular.
            tau *= 0.5;
            f = tau / (1.0 - tau);
            denom = 1.0 + f * gp;
            dropping = false;
        }
        // (1 − τ) M + τ a aᵀ = (1 − τ)(M + f a aᵀ)
        self.rank_one_update(p, f, denom);
        let scale = 1.0 / (1.0 - tau);
        self.g.iter_mut().for_each(|x| *x *= scale);
        self.inv.iter_mut().for_each(|x| *x *= scale);
        for x in u.iter_mut() {
            *x *= 1.0 - tau;
        }
        u[p] += tau;
        if dropping {
            u[p] = 0.0;
        }
        self.logdet_u += k * (1.0 - tau).ln() + denom.ln();
        true
    }

    /// Zeroes the weight of every point that provably lies outside the
    /// support of all optimal designs: with `ε = max g / k − 1`, a point
    /// with `g < k (1 + ε/2 − √(ε (4 + ε − 4/k)) / 2)` is screened out
    /// (Harman–Pronzato). Returns `true` if any weight changed; the caller
    /// must refresh.
    fn screen(&mut self, u: &mut [f64]) -> bool {
        let k = self.k as f64;
        let eps = self.g[self.argmax_g()] / k - 1.0;
        let disc = eps * (4.0 + eps - 4.0 / k);
        if !(eps > 0.0) || !(disc >= 0.0) {
            return false;
        }
        let h = k * (1.0 + eps / 2.0 - disc.sqrt() / 2.0);
        let mut removed = 0.0;
        let mut kept = 0usize;
        for i in 0..self.n {
            if u[i] > 0.0 {
                if self.g[i] < h {
                    removed += u[i];
                } else {
                    kept += 1;
                }
            }
        }
        if removed == 0.0 || kept < self.k {
            return false;
        }
        for i in 0..self.n {
            if u[i] > 0.0 && self.g[i] < h {
                u[i] = 0.0;
            }
        }
        let total = 1.0 - removed;
        u.iter_mut().for_each(|x| *x /= total);
        true
    }

    /// Damped Newton ascent on the active set: the support plus the worst
    /// violators. On that set the Hessian of `log det` is `−(G ∘ G)` with
    /// `G = A_S M⁻¹ A_Sᵀ`, and the simplex constraint enters through a single
    /// multiplier. Zero-weight points whose direction would go negative are
    /// held at zero. Leverages are refactored after every step, so the
    /// certificate is checked on the full point set each time.
    fn newton(&mut self, u: &mut [f64], eta: f64, cap: usize) -> NewtonOutcome {
        let k = self.k;
        let kf = k as f64;
        loop {
            let top = self.argmax_g();
            if self.g[top] <= (1.0 + eta) * kf {
                return NewtonOutcome::Converged;
            }
            if self.iterations >= self.max_iters {
                return NewtonOutcome::OutOfIterations;
            }
            self.iterations += 1;
            if u[top] <= 0.0 {
                // Bring the worst violator into the support first; the
                // Newton model alone may keep a zero weight pinned at zero.
                let tau = (self.g[top] - kf) / (kf * (self.g[top] - 1.0));
                if !self.step(u, top, tau, false) || !self.refresh(u) {
                    return NewtonOutcome::Stalled;
                }
            }

            let mut active: Vec<usize> = (0..self.n).filter(|&i| u[i] > 0.0).collect();
            let mut violators: Vec<usize> = (0..self.n)
                .filter(|&i| u[i] <= 0.0 && self.g[i] > (1.0 + eta) * kf)
                .collect();
            violators.sort_by(|&x, &y| self.g[y].total_cmp(&self.g[x]).then(self.ids[x].cmp(&self.ids[y])));
            violators.truncate(k);
            active.extend(violators);
            if active.len() > cap + k {
                return NewtonOutcome::Stalled;
            }
            let m = active.len();
            let rows = DMatrix::from_fn(m, k, |r, c| self.a[active[r] * k + c]);
            // Gram through the triangular factor rather than the explicit
            // inverse: keeps accuracy when M_u is badly conditioned.
            let Some(y) = self.r.transpose().solve_lower_triangular(&rows.transpose()) else {
                return NewtonOutcome::Stalled;
            };
            let grad = DVector::from_fn(m, |r, _| y.column(r).norm_squared());
            let feat = hessian_factor(&y);

            let w: Vec<f64> = active.iter().map(|&i| u[i]).collect();
            let (mut dir, mut flat) = match projected_direction(&feat, &grad, &w, k, eps_active(m, self.g[top] / kf - 1.0)) {
                Some(d) => d,
                None => return NewtonOutcome::Stalled,
            };
            if !(grad.dot(&dir) > 0.0) {
                // Sending the ε-active weights to zero can cost more than the
                // model gains; retry with all positive weights free.
                (dir, flat) = match projected_direction(&feat, &grad, &w, k, 0.0) {
                    Some(d) => d,
                    None => return NewtonOutcome::Stalled,
                };
            }

            // Along flat directions the objective is linear: go as far as the
            // first weight reaching zero and let the line search cut back.
            if flat.amax() > 1e-12 {
                let mut t = f64::INFINITY;
                for r in 0..m {
                    if flat[r] < 0.0 && w[r] + dir[r] > 0.0 {
                        t = t.min((w[r] + dir[r]) / -flat[r]);
                    }
                }
                if t.is_finite() {
                    dir.axpy(t, &flat, 1.0);
                }
            }

            let slope = grad.dot(&dir);
            if !(slope > 0.0) {
                return NewtonOutcome::Stalled;
            }
            // Projected step: weights driven negative are set to zero and
            // the rest renormalized, so many small weights can leave at once.
            // The change in log det is measured in whitened coordinates,
            // which resolves gains far below the accuracy of log det itself.
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let mut trial: Vec<f64> = (0..m).map(|r| (w[r] + step * dir[r]).max(0.0)).collect();
                let total: f64 = trial.iter().sum();
                trial.iter_mut().for_each(|x| *x /= total);
                let delta: Vec<f64> = (0..m).map(|r| trial[r] - w[r]).collect();
                let gain: f64 = (0..m).map(|r| grad[r] * delta[r]).sum();
                if let Some(change) = whitened_logdet_change(&y, &delta) {
                    if gain > 0.0 && change > 1e-4 * gain {
                        accepted = Some(trial);
                        break;
                    }
                }
                step *= 0.5;
            }
            let Some(trial) = accepted else {
                return NewtonOutcome::Stalled;
            };
            for (r, &i) in active.iter().enumerate() {
                u[i] = trial[r];
            }
            let total: f64 = u.iter().sum();
            u.iter_mut().for_each(|x| *x /= total);
            if !self.refresh(u) {
                return NewtonOutcome::Stalled;
            }
        }
    }

    /// Sherman–Morrison update of `M⁻¹` and the leverages for
    /// `M ← M + c a_p a_pᵀ`; `denom = 1 + c a_pᵀ M⁻¹ a_p`.
    fn rank_one_update(&mut self, p: usize, c: f64, denom: f64) {
        let k = self.k;
        let ap = &self.a[p * k..(p + 1) * k];
        for r in 0..k {
            let mut acc = 0.0;
            for cc in 0..k {
                acc += self.inv[r * k + cc] * ap[cc];
            }
            self.scratch_v[r] = acc;
        }
        let coef = c / denom;
        for i in 0..self.n {
            let row = &self.a[i * k..(i + 1) * k];
            let mut s = 0.0;
            for cc in 0..k {
                s += row[cc] * self.scratch_v[cc];
            }
            self.g[i] -= coef * s * s;
        }
        for r in 0..k {
            for cc in 0..k {
                self.inv[r * k + cc] -= coef * self.scratch_v[r] * self.scratch_v[cc];
            }
        }
    }

    fn into_solution(self, points: &PointSet, u: &[f64], cfg: &SolverConfig) -> DualSolution {
        let k = self.k;
        let kf = k as f64;
        let weights: Vec<f64> = u.iter().map(|x| x * kf).collect();
        let mut moment = DMatrix::zeros(k, k);
        for (i, (_, p)) in points.iter().enumerate() {
            if weights[i] == 0.0 {
                continue;
            }
            let a = DVector::from_column_slice(p);
            moment += (&a * a.transpose()) * weights[i];
        }
        let leverages = self.g.clone();
        let max_leverage = leverages.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let support_ids = points
            .ids()
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > cfg.support_threshold)
            .map(|(&id, _)| id)
            .collect();
        DualSolution {
            dim: k,
            ids: points.ids().to_vec(),
            weights,
            leverages,
            moment,
            max_leverage,
            logdet: self.logdet_u + kf * kf.ln(),
            support_ids,
            iterations: self.iterations,
            converged: self.converged,
            ridge_applied: false,
        }
    }
}

/// Origin-centered ellipsoid `{x : xᵀ M⁻¹ x ≤ 1}` from a dual solution, with
/// the shape inflated by `max(1, max_leverage / k)` so that every point of
/// the solved set is enclosed.
pub fn extract_primal_origin(sol: &DualSolution) -> Ellipsoid {
    let scale = (sol.max_leverage / sol.dim as f64).max(1.0);
    Ellipsoid::from_parts_unchecked(DVector::zeros(sol.dim), &sol.moment * scale)
}

/// Free-center ellipsoid read off a lifted dual solution (weights summing to
/// `d + 1` over the lifted points): center `c = Σ wᵢaᵢ/(d+1)`,
/// `M = Σ wᵢ (aᵢ − c)(aᵢ − c)ᵀ` and shape `d/(d+1) · M`, inflated just enough
/// to enclose every point.
pub fn extract_free_center(points: &PointSet, sol: &DualSolution) -> Result<Ellipsoid> {
    let d = points.dim();
    if sol.dim != d + 1 || sol.weights.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            found: sol.dim,
        });
    }
    let (center, scatter) = weighted_center_scatter(points, &sol.weights, (d + 1) as f64);
    let shape = scatter * (d as f64 / (d + 1) as f64);
    // (aᵢ − c)ᵀ M̄⁻¹ (aᵢ − c) = (leverageᵢ − 1) / d
    let worst = (sol.max_leverage - 1.0) / d as f64;
    Ok(Ellipsoid::from_parts_unchecked(center, shape * worst.max(1.0)))
}

/// `c = Σ wᵢaᵢ / divisor` and `Σ wᵢ (aᵢ − c)(aᵢ − c)ᵀ`.
pub fn weighted_center_scatter(
    points: &PointSet,
    weights: &[f64],
    divisor: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let d = points.dim();
    let mut center = DVector::zeros(d);
    for (w, (_, p)) in weights.iter().zip(points.iter()) {
        center += DVector::from_column_slice(p) * *w;
    }
    center /= divisor;
    let mut scatter = DMatrix::zeros(d, d);
    for (w, (_, p)) in weights.iter().zip(points.iter()) {
        if *w == 0.0 {
            continue;
        }
        let v = DVector::from_column_slice(p) - &center;
        scatter += (&v * v.transpose()) * *w;
    }
    (center, scatter)
}

/// `Σ wᵢ ãᵢ ãᵢᵀ` over the lifted points.
pub fn lifted_moment(points: &PointSet, weights: &[f64]) -> DMatrix<f64> {
    let lifted = lift(points);
    let k = lifted.dim();
    let mut m = DMatrix::zeros(k, k);
    for (w, (_, p)) in weights.iter().zip(lifted.iter()) {
        let a = DVector::from_column_slice(p);
        m += (&a * a.transpose()) * *w;
    }
    m
}

/// Free-center MVEE through the lift. Returns the ellipsoid in `ℝ^d` and the
/// dual solution over the lifted points.
pub fn solve_mvee(points: &PointSet, cfg: &SolverConfig) -> Result<(Ellipsoid, DualSolution)> {
    solve_mvee_from(points, cfg, None)
}

pub fn solve_mvee_from(
    points: &PointSet,
    cfg: &SolverConfig,
    init: Option<&[f64]>,
) -> Result<(Ellipsoid, DualSolution)> {
    let lifted = lift(points);
    match solve_dual_origin_from(&lifted, cfg, init) {
        Ok(sol) => {
            let e = extract_free_center(points, &sol)?;
            Ok((e, sol))
        }
        Err(Error::RankDeficient { .. }) => {
            let (_, basis) = affine_hull(points);
            Err(Error::RankDeficient {
                rank: basis.nrows(),
                dim: points.dim(),
                basis,
            })
        }
        Err(e) => Err(e),
    }
}

/// How the enclosing ellipsoid is centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Centering {
    /// Free center, solved through the lift.
    Free,
    /// Center fixed at the origin.
    Origin,
}

/// An enclosing ellipsoid, with the dual that produced it when the points
/// span their ambient space.
#[derive(Debug, Clone)]
pub struct EnclosingFit {
    pub ellipsoid: Ellipsoid,
    pub dual: Option<DualSolution>,
}

impl EnclosingFit {
    pub fn is_degenerate(&self) -> bool {
        self.dual.is_none()
    }
}

/// Minimum-volume enclosing ellipsoid that never fails on degenerate input:
/// when the points lie in a proper flat (affine for [`Centering::Free`],
/// linear for [`Centering::Origin`]) the problem is solved inside the flat
/// and the resulting zero-volume ellipsoid is embedded back.
pub fn enclosing_ellipsoid(
    points: &PointSet,
    centering: Centering,
    cfg: &SolverConfig,
    init: Option<&[f64]>,
) -> Result<EnclosingFit> {
    let d = points.dim();
    let attempt = match centering {
        Centering::Free => solve_mvee_from(points, cfg, init).map(|(e, s)| (e, s)),
        Centering::Origin => {
            solve_dual_origin_from(points, cfg, init).map(|s| (extract_primal_origin(&s), s))
        }
    };
    match attempt {
        Ok((ellipsoid, dual)) => Ok(EnclosingFit {
            ellipsoid,
            dual: Some(dual),
        }),
        Err(Error::RankDeficient { .. }) => {
            let (anchor, basis) = match centering {
                Centering::Free => affine_hull(points),
                Centering::Origin => (DVector::zeros(d), span_basis(points)),
            };
            let r = basis.nrows();
            if r == 0 {
                return Ok(EnclosingFit {
                    ellipsoid: Ellipsoid::from_parts_unchecked(anchor, DMatrix::zeros(d, d)),
                    dual: None,
                });
            }
            let reduced = points.map_affine(&basis, &(-(&basis * &anchor)))?;
            let inner = enclosing_ellipsoid(&reduced, centering, cfg, None)?;
            let center = &anchor + basis.transpose() * inner.ellipsoid.center();
            let shape = basis.transpose() * inner.ellipsoid.shape() * &basis;
            Ok(EnclosingFit {
                ellipsoid: Ellipsoid::from_parts_unchecked(center, shape),
                dual: None,
            })
        }
        Err(e) => Err(e),
    }
}

/// Complementary-slackness residual of one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlacknessResidual {
    pub id: usize,
    pub weight: f64,
    pub leverage: f64,
    /// `wᵢ · (leverageᵢ / k − 1)`
    pub residual: f64,
}

/// Recomputes each point's leverage against the solution's moment and
/// reports `wᵢ (leverageᵢ/k − 1)`, which vanishes at an exact optimum.
pub fn slackness_residuals(sol: &DualSolution, points: &PointSet) -> Result<Vec<SlacknessResidual>> {
    let k = sol.dim;
    if points.dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: points.dim(),
        });
    }
    if points.len() != sol.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: sol.weights.len(),
            found: points.len(),
        });
    }
    let chol = sol
        .moment
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("moment is not positive definite".into()))?;
    let kf = k as f64;
    Ok(points
        .iter()
        .zip(&sol.weights)
        .map(|((id, p), &w)| {
            let a = DVector::from_column_slice(p);
            let leverage = kf * a.dot(&chol.solve(&a));
            SlacknessResidual {
                id,
                weight: w,
                leverage,
                residual: w * (leverage / kf - 1.0),
            }
        })
        .collect())
}

/// `Σ wᵢ log(bᵢᵀ P bᵢ) − log det P`, which is nonnegative whenever the
/// `(wᵢ, bᵢ)` form a tight frame (`‖bᵢ‖ = 1`, `Σ wᵢ bᵢbᵢᵀ = I`).
pub fn brascamp_lieb_gap(p: &DMatrix<f64>, frame: &[(f64, DVector<f64>)]) -> Result<f64> {
    let k = p.nrows();
    if p.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: p.ncols(),
        });
    }
    let mut iso = DMatrix::<f64>::zeros(k, k);
    for (i, (w, b)) in frame.iter().enumerate() {
        if b.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: b.len(),
            });
        }
        if !(*w > 0.0) {
            return Err(Error::NotATightFrame(format!("weight {i} is not positive")));
        }
        if (b.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::NotATightFrame(format!("vector {i} is not unit length")));
        }
        iso += (b * b.transpose()) * *w;
    }
    let dev = (iso - DMatrix::identity(k, k)).norm();
    if dev > 1e-6 {
        return Err(Error::NotATightFrame(format!(
            "‖Σ wᵢbᵢbᵢᵀ − I‖_F = {dev:.3e}"
        )));
    }
    let logdet = linalg::logdet_spd(p)
        .ok_or_else(|| Error::InvalidInput("P is not positive definite".into()))?;
    let lhs: f64 = frame
        .iter()
        .map(|(w, b)| w * b.dot(&(p * b)).ln())
        .sum();
    Ok(lhs - logdet)
}

/// Tight frame `bᵢ = M^{-1/2} aᵢ` over the positive-weight points of a dual
/// solution, renormalized to unit length with weights `wᵢ ‖bᵢ‖²` so that
/// `Σ wᵢ bᵢbᵢᵀ = I` holds exactly even for an approximate optimum.
pub fn frame_from_dual(sol: &DualSolution, points: &PointSet) -> Result<Vec<(f64, DVector<f64>)>> {
    if points.dim() != sol.dim || points.len() != sol.weights.len() {
        return Err(Error::DimensionMismatch {
            expected: sol.dim,
            found: points.dim(),
        });
    }
    let root = linalg::pd_inv_sqrt(&sol.moment)
        .ok_or_else(|| Error::InvalidInput("moment is not positive definite".into()))?;
    Ok(points
        .iter()
        .zip(&sol.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|((_, p), &w)| {
            let b = &root * DVector::from_column_slice(p);
            let norm2 = b.norm_squared();
            (w * norm2, b / norm2.sqrt())
        })
        .collect())
}

/// Dual of the free-center problem solved directly: weights summing to `d`,
/// center the weighted mean.
#[derive(Debug, Clone)]
pub struct FreeCenterDual {
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
    pub center: DVector<f64>,
    /// `Σ wᵢ (aᵢ − c)(aᵢ − c)ᵀ` with `Σ wᵢ = d`.
    pub scatter: DMatrix<f64>,
    /// `maxᵢ (aᵢ − c)ᵀ (scatter/d)⁻¹ (aᵢ − c)`; at the optimum this equals `d`.
    pub max_distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FreeCenterDual {
    /// `{x : (x − c)ᵀ S⁻¹ (x − c) ≤ 1}` with `S` the scatter, inflated to
    /// enclose every point.
    pub fn ellipsoid(&self) -> Ellipsoid {
        let d = self.center.len() as f64;
        Ellipsoid::from_parts_unchecked(
            self.center.clone(),
            &self.scatter * (self.max_distance / d).max(1.0),
        )
    }

    pub fn logdet(&self) -> f64 {
        linalg::logdet_spd(&self.scatter).unwrap_or(f64::NEG_INFINITY)
    }
}

/// Frank–Wolfe ascent with away-steps on `log det Σ uᵢ (aᵢ − ū)(aᵢ − ū)ᵀ`
/// over probability weights `u`, without lifting. Every iteration is
/// refactored from scratch, so this route is meant for modest `n`.
pub fn solve_dual_free_center(points: &PointSet, cfg: &SolverConfig) -> Result<FreeCenterDual> {
    cfg.validate()?;
    let d = points.dim();
    let n = points.len();
    let (_, hull) = affine_hull(points);
    if hull.nrows() < d {
        return Err(Error::RankDeficient {
            rank: hull.nrows(),
            dim: d,
            basis: hull,
        });
    }
    let df = d as f64;
    let max_iters = cfg.iteration_cap(d + 1, n) * 10;
    let mut u = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = false;
    let (mut center, mut cov, mut dist);
    loop {
        let (c, s) = weighted_center_scatter(points, &u, 1.0);
        let chol = s
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("weighted covariance is singular".into()))?;
        dist = points
            .iter()
            .map(|(_, p)| {
                let v = DVector::from_column_slice(p) - &c;
                v.dot(&chol.solve(&v))
            })
            .collect::<Vec<f64>>();
        center = c;
        cov = s;
        let j = argmax_by_id(&dist, points.ids());
        if dist[j] <= (1.0 + cfg.eta) * df {
            converged = true;
            break;
        }
        if iterations >= max_iters {
            break;
        }
        iterations += 1;
        let l = (0..n)
            .filter(|&i| u[i] > 0.0)
            .min_by(|&x, &y| dist[x].total_cmp(&dist[y]).then(points.id(x).cmp(&points.id(y))))
            .expect("nonempty support");
        let eps_plus = dist[j] / df - 1.0;
        let eps_minus = 1.0 - dist[l] / df;
        let (p, tau, drop) = if eps_plus >= eps_minus {
            (j, (dist[j] - df) / (dist[j] * (df + 1.0)), false)
        } else {
            let bound = -u[l] / (1.0 - u[l]);
            let tau = if dist[l] > 0.0 {
                ((dist[l] - df) / (dist[l] * (df + 1.0))).max(bound)
            } else {
                bound
            };
            (l, tau, tau <= bound)
        };
        if drop && 1.0 + tau * dist[l] <= 1e-10 {
            // would collapse the covariance; take a half step instead
            for x in u.iter_mut() {
                *x *= 1.0 - 0.5 * tau;
            }
            u[p] += 0.5 * tau;
            continue;
        }
        for x in u.iter_mut() {
            *x *= 1.0 - tau;
        }
        u[p] += tau;
        if drop {
            u[p] = 0.0;
        }
    }
    let max_distance = dist.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FreeCenterDual {
        ids: points.ids().to_vec(),
        weights: u.iter().map(|x| x * df).collect(),
        center,
        scatter: cov * df,
        max_distance,
        iterations,
        converged,
    })
}

fn argmax_by_id(values: &[f64], ids: &[usize]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] || (values[i] == values[best] && ids[i] < ids[best]) {
            best = i;
        }
    }
    best
}
