//! Point sets, ellipsoids and the closed-form operations on them.
//!
//! An ellipsoid is stored as a center `c` and a symmetric positive
//! semidefinite shape `M`, describing `{x : (x − c)ᵀ M⁻¹ (x − c) ≤ 1}`.
//! Semi-axis lengths are `√λᵢ(M)`. A shape with a zero eigenvalue is a
//! degenerate (flat) ellipsoid: membership then also requires `x − c` to lie
//! in the range of `M`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, REL_ZERO};

/// Default quadratic-form slack used when counting covered points.
pub const DEFAULT_SLACK: f64 = 1e-9;

/// Relative tolerance for the off-flat component of a point tested against a
/// degenerate ellipsoid.
const FLAT_TOL: f64 = 1e-9;

/// Symmetry tolerance (relative Frobenius) accepted by [`Ellipsoid::new`].
const SYMMETRY_TOL: f64 = 1e-10;

/// An ordered list of points in `ℝ^dim`, each carrying a stable id.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    ids: Vec<usize>,
}

impl PointSet {
    /// Builds a point set from rows; ids are `0..n`.
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    /// Builds a point set from row-major coordinates; ids are `0..n`.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate in point {}",
                pos / dim
            )));
        }
        let n = coords.len() / dim;
        Ok(Self {
            dim,
            coords,
            ids: (0..n).collect(),
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
            ids: Vec::new(),
        }
    }

    /// Replaces the ids. They must be distinct and one per point.
    pub fn with_ids(mut self, ids: Vec<usize>) -> Result<Self> {
        if ids.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "{} ids for {} points",
                ids.len(),
                self.len()
            )));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate point ids".into()));
        }
        self.ids = ids;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn id(&self, i: usize) -> usize {
        self.ids[i]
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.ids.iter().copied().zip(self.coords.chunks_exact(self.dim))
    }

    /// Position of the point with the given id, if present.
    pub fn position_of(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    /// The points at the given positions, ids preserved.
    pub fn select(&self, positions: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(positions.len() * self.dim);
        let mut ids = Vec::with_capacity(positions.len());
        for &p in positions {
            coords.extend_from_slice(self.point(p));
            ids.push(self.ids[p]);
        }
        PointSet {
            dim: self.dim,
            coords,
            ids,
        }
    }

    /// Keeps the points whose id satisfies `keep`, ids preserved.
    pub fn retain_ids(&self, mut keep: impl FnMut(usize) -> bool) -> PointSet {
        let positions: Vec<usize> = (0..self.len()).filter(|&i| keep(self.ids[i])).collect();
        self.select(&positions)
    }

    /// `n × dim` matrix with one point per row.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.coords)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.coords.chunks_exact(self.dim).map(|c| c.to_vec()).collect()
    }

    /// Applies `x ↦ Ax + b` to every point, ids preserved.
    pub fn map_affine(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<PointSet> {
        if a.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.ncols(),
            });
        }
        let out_dim = a.nrows();
        let mut coords = Vec::with_capacity(self.len() * out_dim);
        for (_, p) in self.iter() {
            let y = a * DVector::from_column_slice(p) + b;
            coords.extend(y.iter());
        }
        Ok(PointSet {
            dim: out_dim,
            coords,
            ids: self.ids.clone(),
        })
    }
}

/// Appends a trailing coordinate `1` to every point: `a ↦ (a; 1)`.
pub fn lift(points: &PointSet) -> PointSet {
    let d = points.dim();
    let mut coords = Vec::with_capacity(points.len() * (d + 1));
    for (_, p) in points.iter() {
        coords.extend_from_slice(p);
        coords.push(1.0);
    }
    PointSet {
        dim: d + 1,
        coords,
        ids: points.ids.clone(),
    }
}

/// Returns `{a₁, …, aₙ, −a₁, …, −aₙ}`. The negated copy of the point with id
/// `i` gets id `i + n`, where `n` exceeds every input id.
pub fn symmetrize(points: &PointSet) -> PointSet {
    let offset = points
        .ids
        .iter()
        .max()
        .map_or(0, |&m| (m + 1).max(points.len()));
    let mut coords = points.coords.clone();
    coords.extend(points.coords.iter().map(|v| -v));
    let mut ids = points.ids.clone();
    ids.extend(points.ids.iter().map(|i| i + offset));
    PointSet {
        dim: points.dim,
        coords,
        ids,
    }
}

/// Result of counting the points of a set that lie in an ellipsoid.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    pub count: usize,
    pub fraction: f64,
    pub member_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
}

impl Ellipsoid {
    /// Validates symmetry and positive semidefiniteness of `shape`.
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let d = center.len();
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: shape.nrows(),
            });
        }
        if center.iter().chain(shape.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite ellipsoid entry".into()));
        }
        if linalg::asymmetry(&shape) > SYMMETRY_TOL {
            return Err(Error::InvalidInput("shape matrix is not symmetric".into()));
        }
        let shape = linalg::symmetrized(&shape);
        let (vals, _) = linalg::sorted_eigen(&shape);
        let top = vals.iter().cloned().fold(0.0, f64::max);
        if vals.iter().any(|&v| v < -1e-10 * top.max(f64::MIN_POSITIVE)) {
            return Err(Error::InvalidInput("shape matrix is not PSD".into()));
        }
        Ok(Self { center, shape })
    }

    /// Ball of radius `r` around `center`.
    pub fn ball(center: DVector<f64>, r: f64) -> Self {
        let d = center.len();
        Self {
            center,
            shape: DMatrix::identity(d, d) * (r * r),
        }
    }

    pub(crate) fn from_parts_unchecked(center: DVector<f64>, shape: DMatrix<f64>) -> Self {
        Self {
            center,
            shape: linalg::symmetrized(&shape),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// Eigenvalues of the shape, descending. Values within `REL_ZERO` of the
    /// largest are clamped to exactly zero.
    pub fn eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        let (mut vals, vecs) = linalg::sorted_eigen(&self.shape);
        let top = vals.iter().cloned().fold(0.0, f64::max);
        for v in vals.iter_mut() {
            if *v <= REL_ZERO * top {
                *v = 0.0;
            }
        }
        (vals, vecs)
    }

    pub fn is_degenerate(&self) -> bool {
        self.eigen().0.iter().any(|&v| v <= 0.0)
    }

    /// `log κ_d + ½ log det M`.
    pub fn log_volume(&self) -> Result<f64> {
        let (vals, _) = self.eigen();
        if vals.iter().any(|&v| v <= 0.0) {
            return Err(Error::DegenerateEllipsoid);
        }
        let half_logdet: f64 = vals.iter().map(|v| 0.5 * v.ln()).sum();
        Ok(linalg::log_unit_ball_volume(self.dim()) + half_logdet)
    }

    /// Log-volume with degenerate ellipsoids mapped to `−∞`.
    pub fn log_volume_or_neg_inf(&self) -> f64 {
        self.log_volume().unwrap_or(f64::NEG_INFINITY)
    }

    /// Ratio of the longest to the shortest semi-axis, `√(λ_max / λ_min)`.
    pub fn condition_number(&self) -> Result<f64> {
        let (vals, _) = self.eigen();
        let max = vals[0];
        let min = vals[vals.len() - 1];
        if min <= 0.0 {
            return Err(Error::DegenerateEllipsoid);
        }
        Ok((max / min).sqrt().max(1.0))
    }

    /// Length of the longest semi-axis.
    pub fn max_semi_axis(&self) -> f64 {
        self.eigen().0[0].max(0.0).sqrt()
    }

    /// Orthonormal rows spanning the directions along which the ellipsoid has
    /// positive extent. For a nondegenerate ellipsoid this is all of `ℝ^d`.
    pub fn flat_basis(&self) -> DMatrix<f64> {
        let (vals, vecs) = self.eigen();
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.0).collect();
        let mut basis = DMatrix::zeros(keep.len(), self.dim());
        for (r, &i) in keep.iter().enumerate() {
            basis.set_row(r, &vecs.column(i).transpose());
        }
        basis
    }

    pub fn membership(&self) -> Membership {
        Membership::new(self)
    }

    /// `(x − c)ᵀ M⁻¹ (x − c)`, or `+∞` for a point off a degenerate flat.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.membership().quadratic_form(x)
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        self.quadratic_form(x) <= 1.0 + slack
    }

    /// Counts points of `points` inside the closed ellipsoid with the given
    /// quadratic-form slack.
    pub fn coverage(&self, points: &PointSet, slack: f64) -> Result<Coverage> {
        if points.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: points.dim(),
            });
        }
        let m = self.membership();
        let member_ids: Vec<usize> = points
            .iter()
            .filter(|(_, p)| m.quadratic_form(p) <= 1.0 + slack)
            .map(|(id, _)| id)
            .collect();
        let count = member_ids.len();
        let fraction = if points.is_empty() {
            0.0
        } else {
            count as f64 / points.len() as f64
        };
        Ok(Coverage {
            count,
            fraction,
            member_ids,
        })
    }

    /// Image under `x ↦ Ax + b`: center `Ac + b`, shape `A M Aᵀ`.
    pub fn affine_image(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Ellipsoid {
        Ellipsoid::from_parts_unchecked(a * &self.center + b, a * &self.shape * a.transpose())
    }

    /// Same center, shape multiplied by `t` (semi-axes scaled by `√t`).
    pub fn scaled(&self, t: f64) -> Ellipsoid {
        Ellipsoid {
            center: self.center.clone(),
            shape: &self.shape * t,
        }
    }
}

/// Precomputed eigenbasis for repeated membership tests.
#[derive(Debug, Clone)]
pub struct Membership {
    center: DVector<f64>,
    // rows are eigenvectors
    axes: DMatrix<f64>,
    inv_vals: Vec<Option<f64>>,
    flat_tol: f64,
}

impl Membership {
    fn new(e: &Ellipsoid) -> Self {
        let (vals, vecs) = e.eigen();
        let top = vals[0].max(0.0);
        Self {
            center: e.center.clone(),
            axes: vecs.transpose(),
            inv_vals: vals
                .iter()
                .map(|&v| if v > 0.0 { Some(1.0 / v) } else { None })
                .collect(),
            flat_tol: FLAT_TOL * top.sqrt().max(1.0),
        }
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = self.center.len();
        let mut q = 0.0;
        for r in 0..d {
            let mut y = 0.0;
            for c in 0..d {
                y += self.axes[(r, c)] * (x[c] - self.center[c]);
            }
            match self.inv_vals[r] {
                Some(inv) => q += y * y * inv,
                None => {
                    if y.abs() > self.flat_tol {
                        return f64::INFINITY;
                    }
                }
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn log_volume_examples() {
        let disk = Ellipsoid::ball(DVector::zeros(2), 1.0);
        assert!((disk.log_volume().unwrap() - PI.ln()).abs() < 1e-14);

        let seg = Ellipsoid::new(DVector::zeros(1), diag(&[9.0])).unwrap();
        assert!((seg.log_volume().unwrap() - 6f64.ln()).abs() < 1e-14);

        let e = Ellipsoid::new(DVector::from_vec(vec![3.0, -1.0, 2.0]), diag(&[1.0, 4.0, 9.0]))
            .unwrap();
        let expected = (4.0 * PI / 3.0).ln() + 0.5 * 36f64.ln();
        assert!((e.log_volume().unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn degenerate_log_volume_errors() {
        let flat = Ellipsoid::new(DVector::zeros(2), diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(flat.log_volume(), Err(Error::DegenerateEllipsoid)));
        assert_eq!(flat.log_volume_or_neg_inf(), f64::NEG_INFINITY);
        assert!(matches!(
            flat.condition_number(),
            Err(Error::DegenerateEllipsoid)
        ));
    }

    #[test]
    fn condition_number_examples() {
        let ball = Ellipsoid::ball(DVector::zeros(4), 3.0);
        assert!((ball.condition_number().unwrap() - 1.0).abs() < 1e-12);
        let e = Ellipsoid::new(DVector::zeros(2), diag(&[4.0, 1.0])).unwrap();
        assert!((e.condition_number().unwrap() - 2.0).abs() < 1e-12);
        let e = Ellipsoid::new(DVector::zeros(3), diag(&[100.0, 1.0, 1.0])).unwrap();
        assert!((e.condition_number().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_examples() {
        let disk = Ellipsoid::ball(DVector::zeros(2), 1.0);
        let pts = PointSet::new(2, &[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let cov = disk.coverage(&pts, DEFAULT_SLACK).unwrap();
        assert_eq!(cov.count, 1);
        assert_eq!(cov.fraction, 0.5);
        assert_eq!(cov.member_ids, vec![0]);

        let cov = disk.coverage(&PointSet::empty(2), DEFAULT_SLACK).unwrap();
        assert_eq!((cov.count, cov.fraction), (0, 0.0));

        let seg = Ellipsoid::new(DVector::from_vec(vec![1.0]), diag(&[1.0])).unwrap();
        let pts = PointSet::new(1, &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(seg.coverage(&pts, DEFAULT_SLACK).unwrap().count, 3);

        let pts3 = PointSet::new(3, &[vec![0.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            disk.coverage(&pts3, DEFAULT_SLACK),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_membership_requires_flat() {
        let flat = Ellipsoid::new(DVector::zeros(2), diag(&[4.0, 0.0])).unwrap();
        assert!(flat.contains(&[1.5, 0.0], 0.0));
        assert!(!flat.contains(&[1.5, 1e-3], 0.0));
        assert!(!flat.contains(&[2.5, 0.0], 0.0));
    }

    #[test]
    fn lift_examples() {
        let p = PointSet::new(1, &[vec![3.0]]).unwrap();
        assert_eq!(lift(&p).point(0), &[3.0, 1.0]);
        let p = PointSet::new(2, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(lift(&p).point(0), &[0.0, 0.0, 1.0]);
        let l = lift(&PointSet::empty(4));
        assert_eq!((l.dim(), l.len()), (5, 0));
    }

    #[test]
    fn symmetrize_examples() {
        let p = PointSet::new(2, &[vec![1.0, 0.0]]).unwrap();
        let s = symmetrize(&p);
        assert_eq!(s.to_rows(), vec![vec![1.0, 0.0], vec![-1.0, 0.0]]);

        let p = PointSet::new(2, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(symmetrize(&p).len(), 2);

        let p = PointSet::new(1, &[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let s = symmetrize(&p);
        assert_eq!(s.ids(), &[0, 1, 2, 3, 4, 5]);
        assert_eq!(s.point(4), &[-2.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PointSet::new(2, &[vec![1.0]]).is_err());
        assert!(PointSet::new(1, &[vec![f64::NAN]]).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Ellipsoid::new(DVector::zeros(2), asym).is_err());
        assert!(Ellipsoid::new(DVector::zeros(2), diag(&[1.0, -1.0])).is_err());
        let p = PointSet::new(1, &[vec![1.0], vec![2.0]]).unwrap();
        assert!(p.with_ids(vec![3, 3]).is_err());
    }
}
