//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues below `REL_ZERO * max(|λ|)` are treated as exact zeros.
pub const REL_ZERO: f64 = 1e-14;

/// Natural log of the volume of the unit ball in `d` dimensions,
/// `κ_d = π^{d/2} / Γ(d/2 + 1)`.
pub fn log_unit_ball_volume(d: usize) -> f64 {
    0.5 * d as f64 * std::f64::consts::PI.ln() - ln_gamma_half_integer(d + 2)
}

/// `ln Γ(m / 2)` for a positive integer `m`, computed by the exact recurrence.
fn ln_gamma_half_integer(m: usize) -> f64 {
    debug_assert!(m >= 1);
    // Γ(1) = 1, Γ(1/2) = √π, Γ(x + 1) = x Γ(x).
    let (mut x, mut acc) = if m % 2 == 0 {
        (1.0, 0.0)
    } else {
        (0.5, 0.5 * std::f64::consts::PI.ln())
    };
    while 2.0 * x < m as f64 {
        acc += x.ln();
        x += 1.0;
    }
    acc
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
pub fn sorted_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = symmetrized(m);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative Frobenius asymmetry `‖M − Mᵀ‖_F / max(‖M‖_F, tiny)`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// `log det` of a symmetric positive definite matrix, `None` if the
/// Cholesky factorization fails.
pub fn logdet_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let v = l[(i, i)];
        if v <= 0.0 || !v.is_finite() {
            return None;
        }
        acc += v.ln();
    }
    Some(2.0 * acc)
}

/// Orthonormal basis (as rows) of the span of the rows of `rows`, using the
/// numerical-rank threshold `rel_tol * σ_max`.
pub fn row_span_basis(rows: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let k = rows.ncols();
    if rows.nrows() == 0 || k == 0 {
        return DMatrix::zeros(0, k);
    }
    // Right singular vectors of an n×k matrix = eigenvectors of the k×k Gram
    // matrix, but the SVD keeps precision for thin directions.
    let svd = rows.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return DMatrix::zeros(0, k);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * sigma_max)
        .collect();
    let mut basis = DMatrix::zeros(keep.len(), k);
    for (r, &i) in keep.iter().enumerate() {
        basis.set_row(r, &v_t.row(i));
    }
    basis
}

pub fn numerical_rank(rows: &DMatrix<f64>, rel_tol: f64) -> usize {
    row_span_basis(rows, rel_tol).nrows()
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sorted_eigen(m);
    let s = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.max(0.0).sqrt()));
    &vecs * DMatrix::from_diagonal(&s) * vecs.transpose()
}

/// Inverse symmetric square root of a positive definite matrix.
pub fn pd_inv_sqrt(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (vals, vecs) = sorted_eigen(m);
    if vals.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let s = DVector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.sqrt()));
    Some(&vecs * DMatrix::from_diagonal(&s) * vecs.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((log_unit_ball_volume(1) - 2f64.ln()).abs() < 1e-14);
        assert!((log_unit_ball_volume(2) - pi.ln()).abs() < 1e-14);
        assert!((log_unit_ball_volume(3) - (4.0 * pi / 3.0).ln()).abs() < 1e-14);
        assert!((log_unit_ball_volume(4) - (pi * pi / 2.0).ln()).abs() < 1e-14);
        assert!((log_unit_ball_volume(5) - (8.0 * pi * pi / 15.0).ln()).abs() < 1e-13);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 9.0, 4.0]));
        let (vals, _) = sorted_eigen(&m);
        assert_eq!(vals.as_slice(), &[9.0, 4.0, 1.0]);
    }

    #[test]
    fn span_basis_of_collinear_rows() {
        let rows = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]);
        assert_eq!(numerical_rank(&rows, 1e-9), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(4, 3), 1e-9), 0);
    }
}
