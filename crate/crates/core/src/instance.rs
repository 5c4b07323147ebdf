//! Seeded instance generators: planted ellipsoids with outliers, planted
//! subspaces, and the edge-vector point sets built from regular graphs.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, PointSet};
use crate::linalg;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Uniformly random unit vector.
pub fn unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let g = gaussian_vector(d, rng);
        let norm = g.norm();
        if norm > 1e-12 {
            return g / norm;
        }
    }
}

/// Uniform sample from the unit ball.
pub fn unit_ball_sample<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    let r = rng.random::<f64>().powf(1.0 / d as f64);
    unit_vector(d, rng) * r
}

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..d {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEllipsoidSpec {
    pub dim: usize,
    pub n: usize,
    /// Condition number of the planted ellipsoid.
    pub beta: f64,
    /// Outlier fraction; exactly `⌊αn⌋` outliers are drawn.
    pub alpha: f64,
    /// Outliers lie on the sphere of radius `factor · β` around the center.
    pub outlier_radius_factor: f64,
    pub center: Vec<f64>,
    pub rotation_seed: u64,
    pub sample_seed: u64,
}

impl PlantedEllipsoidSpec {
    pub fn new(dim: usize, n: usize, beta: f64, alpha: f64, seed: u64) -> Self {
        Self {
            dim,
            n,
            beta,
            alpha,
            outlier_radius_factor: 2.0,
            center: vec![0.0; dim],
            rotation_seed: seed,
            sample_seed: seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.n == 0 {
            return Err(Error::InvalidConfig("dim and n must be positive".into()));
        }
        if !(self.beta >= 1.0) {
            return Err(Error::InvalidConfig("beta must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig("alpha must lie in [0, 1)".into()));
        }
        if !(self.outlier_radius_factor > 1.0) {
            return Err(Error::InvalidConfig("outlier radius factor must exceed 1".into()));
        }
        if self.center.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.center.len(),
            });
        }
        Ok(())
    }

    pub fn outlier_count(&self) -> usize {
        (self.alpha * self.n as f64).floor() as usize
    }
}

#[derive(Debug, Clone)]
pub struct PlantedEllipsoid {
    pub points: PointSet,
    pub truth: Ellipsoid,
    pub inlier_ids: Vec<usize>,
    pub outlier_ids: Vec<usize>,
}

/// Inliers uniform in an ellipsoid whose semi-axes are geometrically spaced
/// from `1` to `β` (randomly rotated); outliers uniform on a sphere of radius
/// `outlier_radius_factor · β` around the same center. Point order is
/// shuffled.
pub fn gen_planted_ellipsoid(spec: &PlantedEllipsoidSpec) -> Result<PlantedEllipsoid> {
    spec.validate()?;
    let d = spec.dim;
    let rotation = random_rotation(d, &mut rng(spec.rotation_seed));
    let axes: Vec<f64> = (0..d)
        .map(|i| {
            if d == 1 {
                1.0
            } else {
                spec.beta.powf(i as f64 / (d - 1) as f64)
            }
        })
        .collect();
    let root = &rotation * DMatrix::from_diagonal(&DVector::from_column_slice(&axes));
    let shape = &root * root.transpose();
    let center = DVector::from_column_slice(&spec.center);
    let truth = Ellipsoid::new(center.clone(), linalg::symmetrized(&shape))?;

    let mut rng = rng(spec.sample_seed);
    let n_out = spec.outlier_count();
    let n_in = spec.n - n_out;
    let mut rows: Vec<(bool, DVector<f64>)> = Vec::with_capacity(spec.n);
    for _ in 0..n_in {
        rows.push((true, &center + &root * unit_ball_sample(d, &mut rng)));
    }
    let shell = spec.outlier_radius_factor * spec.beta;
    for _ in 0..n_out {
        rows.push((false, &center + unit_vector(d, &mut rng) * shell));
    }
    // Fisher–Yates with the same stream.
    for i in (1..rows.len()).rev() {
        let j = rng.random_range(0..=i);
        rows.swap(i, j);
    }
    let mut coords = Vec::with_capacity(spec.n * d);
    let mut inlier_ids = Vec::new();
    let mut outlier_ids = Vec::new();
    for (id, (inlier, p)) in rows.iter().enumerate() {
        coords.extend(p.iter());
        if *inlier {
            inlier_ids.push(id);
        } else {
            outlier_ids.push(id);
        }
    }
    Ok(PlantedEllipsoid {
        points: PointSet::from_flat(d, coords)?,
        truth,
        inlier_ids,
        outlier_ids,
    })
}

#[derive(Debug, Clone)]
pub struct PlantedSubspace {
    pub points: PointSet,
    /// Orthonormal rows spanning the planted subspace.
    pub basis: DMatrix<f64>,
    pub inlier_ids: Vec<usize>,
}

/// Unit inliers drawn from a random `planted_dim`-dimensional subspace and
/// `⌊αn⌋` unit outliers uniform on the sphere. Point order is shuffled.
pub fn gen_planted_subspace(
    d: usize,
    planted_dim: usize,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<PlantedSubspace> {
    if planted_dim == 0 || planted_dim > d {
        return Err(Error::InvalidConfig("planted_dim must lie in 1..=d".into()));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidConfig("alpha must lie in [0, 1)".into()));
    }
    let mut rng = rng(seed);
    let rotation = random_rotation(d, &mut rng);
    let basis = rotation.columns(0, planted_dim).transpose();
    let n_out = (alpha * n as f64).floor() as usize;
    let mut rows: Vec<(bool, DVector<f64>)> = Vec::with_capacity(n);
    for _ in 0..n - n_out {
        let g = unit_vector(planted_dim, &mut rng);
        rows.push((true, basis.transpose() * g));
    }
    for _ in 0..n_out {
        rows.push((false, unit_vector(d, &mut rng)));
    }
    for i in (1..rows.len()).rev() {
        let j = rng.random_range(0..=i);
        rows.swap(i, j);
    }
    let mut coords = Vec::with_capacity(n * d);
    let mut inlier_ids = Vec::new();
    for (id, (inlier, p)) in rows.iter().enumerate() {
        coords.extend(p.iter());
        if *inlier {
            inlier_ids.push(id);
        }
    }
    Ok(PlantedSubspace {
        points: PointSet::from_flat(d, coords)?,
        basis,
        inlier_ids,
    })
}

/// Undirected graph on `vertices` vertices given by an edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        for &(i, j) in &edges {
            if i >= vertices || j >= vertices {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::InvalidInput(format!("self-loop at {i}")));
            }
        }
        Ok(Self { vertices, edges })
    }

    pub fn cycle(n: usize) -> Self {
        Self {
            vertices: n,
            edges: (0..n).map(|i| (i, (i + 1) % n)).collect(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Self { vertices: n, edges }
    }

    /// The `k`-dimensional hypercube graph on `2^k` vertices.
    pub fn hypercube(k: usize) -> Self {
        let n = 1usize << k;
        let mut edges = Vec::new();
        for v in 0..n {
            for b in 0..k {
                let u = v ^ (1 << b);
                if v < u {
                    edges.push((v, u));
                }
            }
        }
        Self { vertices: n, edges }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// The common degree, or [`Error::GraphNotRegular`].
    pub fn regular_degree(&self) -> Result<usize> {
        let deg = self.degrees();
        let first = *deg.first().ok_or_else(|| Error::GraphNotRegular("no vertices".into()))?;
        if let Some((v, &dv)) = deg.iter().enumerate().find(|(_, &x)| x != first) {
            return Err(Error::GraphNotRegular(format!(
                "vertex {v} has degree {dv}, vertex 0 has degree {first}"
            )));
        }
        Ok(first)
    }

    /// Parses `"d Δ"` followed by one `"i j"` edge per line (0-indexed).
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty graph file".into()))?;
        let nums = parse_pair(header, 1)?;
        let (vertices, degree) = (nums.0, nums.1);
        let mut edges = Vec::new();
        for (lineno, l) in lines {
            edges.push(parse_pair(l, lineno)?);
        }
        let g = Graph::new(vertices, edges)?;
        let actual = g.regular_degree()?;
        if actual != degree {
            return Err(Error::GraphNotRegular(format!(
                "header declares degree {degree}, edges give {actual}"
            )));
        }
        Ok(g)
    }

    pub fn to_text(&self) -> String {
        let degree = self.degrees().first().copied().unwrap_or(0);
        let mut s = format!("{} {}\n", self.vertices, degree);
        for &(i, j) in &self.edges {
            s.push_str(&format!("{i} {j}\n"));
        }
        s
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "line {lineno}: expected two integers"
        )));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("line {lineno}: bad integer {s:?}")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SseInstanceSpec {
    pub graph: Graph,
    /// Small-set size fraction `δ`.
    pub delta: f64,
    /// Origin padding ratio `η`; `T = round(η m / δ)` origin points are added.
    pub eta_pad: f64,
    /// Perturbation scale exponent: `ε̃ = d^{−C}`. `f64::INFINITY` disables
    /// the perturbation.
    pub cap_c: f64,
    pub seed: u64,
}

/// Origin padding ratio `η` solving `α = (δ − (1 − ε) δ²) / (δ + η)`.
pub fn eta_from_alpha(alpha: f64, delta: f64, eps: f64) -> f64 {
    (delta - (1.0 - eps) * delta * delta) / alpha - delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointOrigin {
    Edge(usize, usize),
    Origin,
}

#[derive(Debug, Clone)]
pub struct SseInstance {
    pub points: PointSet,
    /// What each point (by id) was built from.
    pub edge_map: Vec<PointOrigin>,
    /// Non-fatal notes, e.g. perturbation underflow.
    pub warnings: Vec<String>,
}

/// One point `(e_i + e_j)/√2` per edge, then `T` origin points; every point is
/// perturbed by `N(0, ε̃²/d · I)` and normalized unless the perturbation is
/// disabled.
pub fn gen_sse_instance(spec: &SseInstanceSpec) -> Result<SseInstance> {
    let d = spec.graph.vertices;
    spec.graph.regular_degree()?;
    if !(spec.delta > 0.0) || !(spec.eta_pad >= 0.0) {
        return Err(Error::InvalidConfig("delta must be positive and eta_pad nonnegative".into()));
    }
    let m = spec.graph.edges.len();
    let t = (spec.eta_pad * m as f64 / spec.delta).round() as usize;
    let perturb = spec.cap_c.is_finite();
    let eps_tilde = (d as f64).powf(-spec.cap_c);
    let sigma = eps_tilde / (d as f64).sqrt();
    let mut warnings = Vec::new();
    if perturb && eps_tilde * eps_tilde / (d as f64) < 1e-300 {
        warnings.push(format!(
            "perturbation variance ε̃²/d underflows (ε̃ = {eps_tilde:.3e})"
        ));
    }
    let mut rng = rng(spec.seed);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut coords = Vec::with_capacity((m + t) * d);
    let mut edge_map = Vec::with_capacity(m + t);
    let sources = spec
        .graph
        .edges
        .iter()
        .map(|&(i, j)| PointOrigin::Edge(i, j))
        .chain(std::iter::repeat_n(PointOrigin::Origin, t));
    for (id, src) in sources.enumerate() {
        let mut u = DVector::zeros(d);
        if let PointOrigin::Edge(i, j) = src {
            u[i] = inv_sqrt2;
            u[j] = inv_sqrt2;
        }
        if perturb {
            u += gaussian_vector(d, &mut rng) * sigma;
            let norm = u.norm();
            if !(norm > 1e-300) {
                return Err(Error::ZeroVector(id));
            }
            u /= norm;
        }
        coords.extend(u.iter());
        edge_map.push(src);
    }
    Ok(SseInstance {
        points: PointSet::from_flat(d, coords)?,
        edge_map,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpanBounds {
    pub dim_span: usize,
    /// `|N(F)| / 2`, rounded up
    pub lower: usize,
    /// `|N(F)|`, the number of vertices touched by `F`
    pub upper: usize,
    pub ok: bool,
}

/// Numerical rank of the unperturbed edge vectors of `subset` (indices into
/// `graph.edges`) against the vertex-neighborhood bounds
/// `|N(F)|/2 ≤ dim span ≤ |N(F)|`.
pub fn span_bounds_check(subset: &[usize], graph: &Graph) -> Result<SpanBounds> {
    let d = graph.vertices;
    let mut touched = BTreeSet::new();
    let mut rows = DMatrix::zeros(subset.len(), d);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for (r, &e) in subset.iter().enumerate() {
        let &(i, j) = graph
            .edges
            .get(e)
            .ok_or_else(|| Error::InvalidInput(format!("edge index {e} out of range")))?;
        rows[(r, i)] = inv_sqrt2;
        rows[(r, j)] = inv_sqrt2;
        touched.insert(i);
        touched.insert(j);
    }
    let dim_span = linalg::numerical_rank(&rows, 1e-9);
    let upper = touched.len();
    let lower = upper.div_ceil(2);
    Ok(SpanBounds {
        dim_span,
        lower,
        upper,
        ok: 2 * dim_span >= upper && dim_span <= upper,
    })
}
