//! Regularised generalized symmetric eigenproblem
//! `(ZᵀΩZ + δI) p = θ (ZᵀHZ) p`, keeping the `k` smallest eigenpairs.
//!
//! The right-hand side is only positive semidefinite, so a small ridge is
//! added before the Cholesky reduction to a standard symmetric problem.

use serde::Serialize;

use crate::error::{CdemError, Result};
use crate::linalg::{fix_column_signs, Cholesky, Matrix, SymmetricEigen};
use crate::objectives::Hyperparams;
use crate::scalar::Scalar;

/// Relative ridge applied to the constraint matrix: `shift = 1e-9 · tr(B)/m`.
pub const B_SHIFT_RELATIVE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct TransformSolution<T> {
    /// `m × k` projection, columns B-orthonormal.
    #[serde(skip)]
    pub projection: Matrix<T>,
    /// Ascending generalized eigenvalues.
    pub eigenvalues: Vec<T>,
    /// Worst column residual `‖A p − θ B p‖ / (‖A‖_F + |θ| ‖B‖_F)`.
    pub residual: T,
    /// Ridge actually added to `B`.
    pub b_shift: T,
}

/// Solves `A p = θ (B + shift·I) p` for the `k` algebraically smallest `θ`.
///
/// Columns are normalised so that `Pᵀ(B + shift·I)P = I` and each column's
/// largest-magnitude entry is positive.
pub fn solve_generalized<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    k: usize,
    b_shift: T,
) -> Result<TransformSolution<T>> {
    let m = a.rows();
    if a.shape() != (m, m) || b.shape() != (m, m) {
        return Err(CdemError::Internal(format!(
            "generalized eigenproblem needs square matrices of equal size, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if k == 0 || k > m {
        return Err(CdemError::Config(format!(
            "subspace dimension {k} must lie in [1, {m}]"
        )));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(CdemError::Numeric("non-finite entry in eigenproblem".into()));
    }
    let mut a = a.clone();
    a.symmetrize();
    let mut b_shifted = b.clone();
    b_shifted.symmetrize();
    b_shifted.add_diag(b_shift);

    let chol = Cholesky::factor(&b_shifted).map_err(|fail| {
        let scale = b.trace().abs().to_f64_lossy() / m as f64;
        CdemError::NotPositiveDefinite {
            shift: b_shift.to_f64_lossy(),
            pivot: fail.pivot,
            index: fail.index,
            suggested: b_shift.to_f64_lossy() + 2.0 * fail.pivot.abs() + 1e-6 * scale.max(1e-300),
        }
    })?;

    // C = L⁻¹ A L⁻ᵀ
    let left = chol.solve_lower(&a);
    let mut c = chol.solve_lower(&left.transpose());
    c.symmetrize();
    let eig = SymmetricEigen::new(&c)?;

    let v_k = eig.vectors.first_columns(k);
    let mut projection = chol.solve_upper(&v_k);
    fix_column_signs(&mut projection);
    let eigenvalues: Vec<T> = eig.values[..k].to_vec();

    let residual = max_relative_residual(&a, &b_shifted, &projection, &eigenvalues)?;
    if !residual.is_finite() {
        return Err(CdemError::Numeric("non-finite eigen residual".into()));
    }
    Ok(TransformSolution {
        projection,
        eigenvalues,
        residual,
        b_shift,
    })
}

/// `max_i ‖A p_i − θ_i B p_i‖₂ / (‖A‖_F + |θ_i| ‖B‖_F)`.
pub fn max_relative_residual<T: Scalar>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    p: &Matrix<T>,
    theta: &[T],
) -> Result<T> {
    let ap = a.matmul(p)?;
    let bp = b.matmul(p)?;
    let na = a.frobenius_norm();
    let nb = b.frobenius_norm();
    let mut worst = T::zero();
    for (j, &t) in theta.iter().enumerate() {
        let mut sq = T::zero();
        for i in 0..p.rows() {
            let r = ap[(i, j)] - t * bp[(i, j)];
            sq += r * r;
        }
        let denom = na + t.abs() * nb;
        let rel = if denom > T::zero() { sq.sqrt() / denom } else { sq.sqrt() };
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// The two sides of the transformation eigenproblem.
#[derive(Debug, Clone)]
pub struct EigenSystem<T> {
    /// `ZᵀΩZ + δI`.
    pub lhs: Matrix<T>,
    /// `ZᵀHZ` (unshifted).
    pub rhs: Matrix<T>,
    pub b_shift: T,
}

/// Forms `A = ZᵀΩZ + δI`, `B = ZᵀHZ` and the default ridge for sample-row
/// features `Z` (n × m).
pub fn assemble<T: Scalar>(
    z: &Matrix<T>,
    omega: &Matrix<T>,
    centering: &Matrix<T>,
    delta: T,
) -> Result<EigenSystem<T>> {
    let n = z.rows();
    if omega.shape() != (n, n) || centering.shape() != (n, n) {
        return Err(CdemError::Internal(format!(
            "objective matrices must be {n}x{n}, got {:?} and {:?}",
            omega.shape(),
            centering.shape()
        )));
    }
    let mut lhs = z.congruence(omega)?;
    lhs.add_diag(delta);
    let rhs = z.congruence(centering)?;
    let m = T::from_usize_lossy(z.cols());
    let b_shift = T::lit(B_SHIFT_RELATIVE) * rhs.trace().abs() / m;
    Ok(EigenSystem { lhs, rhs, b_shift })
}

pub fn assemble_and_solve<T: Scalar>(
    z: &Matrix<T>,
    omega: &Matrix<T>,
    centering: &Matrix<T>,
    hp: &Hyperparams<T>,
    k: usize,
) -> Result<TransformSolution<T>> {
    hp.validate()?;
    let sys = assemble(z, omega, centering, hp.delta)?;
    solve_generalized(&sys.lhs, &sys.rhs, k, sys.b_shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_standard_problem() {
        let a = Matrix::<f64>::from_diag(&[3.0, 1.0, 2.0]);
        let b = Matrix::identity(3);
        let sol = solve_generalized(&a, &b, 2, 0.0).unwrap();
        assert_eq!(sol.eigenvalues.len(), 2);
        assert!((sol.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((sol.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert!((sol.projection[(1, 0)] - 1.0).abs() < 1e-14);
        assert!((sol.projection[(2, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn equal_sides_give_unit_eigenvalues() {
        let b = Matrix::<f64>::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let sol = solve_generalized(&b, &b, 3, 0.0).unwrap();
        assert!(sol.eigenvalues.iter().all(|t| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn k_too_large_is_config_error() {
        let a = Matrix::<f64>::identity(2);
        assert!(matches!(
            solve_generalized(&a, &a, 3, 0.0),
            Err(CdemError::Config(_))
        ));
    }

    #[test]
    fn singular_b_reports_suggested_shift() {
        let a = Matrix::<f64>::identity(2);
        let b = Matrix::<f64>::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        match solve_generalized(&a, &b, 1, 0.0) {
            Err(CdemError::NotPositiveDefinite { suggested, .. }) => {
                assert!(suggested > 0.0);
                assert!(solve_generalized(&a, &b, 1, suggested).is_ok());
            }
            other => panic!("expected NotPositiveDefinite, got {other:?}"),
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_diag(&[5.0, 2.0, 9.0]);
        let b = Matrix::<f32>::from_diag(&[1.0, 2.0, 3.0]);
        let sol = solve_generalized(&a, &b, 2, 0.0).unwrap();
        assert!((sol.eigenvalues[0] - 1.0).abs() < 1e-6);
        assert!((sol.eigenvalues[1] - 3.0).abs() < 1e-6);
    }
}
