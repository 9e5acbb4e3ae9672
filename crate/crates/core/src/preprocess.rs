//! PCA to `m` dimensions and unit-norm row scaling.

use crate::error::{CdemError, Result};
use crate::linalg::{fix_column_signs, Matrix, SymmetricEigen};
use crate::matio::{read_matrix, write_matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel<T> {
    mean: Vec<T>,
    /// `d × m`, orthonormal columns ordered by decreasing variance.
    basis: Matrix<T>,
    explained_variance: Vec<T>,
}

impl<T: Scalar> PcaModel<T> {
    pub fn mean(&self) -> &[T] {
        &self.mean
    }

    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    pub fn explained_variance(&self) -> &[T] {
        &self.explained_variance
    }

    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.cols()
    }

    /// Centres with the stored mean and projects onto the basis.
    pub fn transform(&self, features: &Matrix<T>) -> Result<Matrix<T>> {
        if features.cols() != self.input_dim() {
            return Err(CdemError::Config(format!(
                "PCA model expects {} features, got {}",
                self.input_dim(),
                features.cols()
            )));
        }
        let centered = center(features, &self.mean);
        centered.matmul(&self.basis)
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, projected: &Matrix<T>) -> Result<Matrix<T>> {
        let mut out = projected.matmul(&self.basis.transpose())?;
        for i in 0..out.rows() {
            for (v, &m) in out.row_mut(i).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(out)
    }
}

impl PcaModel<f64> {
    /// Writes `<prefix>.mean.cdm`, `<prefix>.basis.cdm`, `<prefix>.var.cdm`.
    pub fn save(&self, prefix: &str) -> Result<()> {
        write_matrix(
            &Matrix::from_vec(1, self.mean.len(), self.mean.clone())?,
            format!("{prefix}.mean.cdm"),
        )?;
        write_matrix(&self.basis, format!("{prefix}.basis.cdm"))?;
        write_matrix(
            &Matrix::from_vec(1, self.explained_variance.len(), self.explained_variance.clone())?,
            format!("{prefix}.var.cdm"),
        )
    }

    pub fn load(prefix: &str) -> Result<Self> {
        let mean = read_matrix(format!("{prefix}.mean.cdm"))?.into_vec();
        let basis = read_matrix(format!("{prefix}.basis.cdm"))?;
        let explained_variance = read_matrix(format!("{prefix}.var.cdm"))?.into_vec();
        if basis.rows() != mean.len() || basis.cols() != explained_variance.len() {
            return Err(CdemError::Format("inconsistent PCA blocks".into()));
        }
        Ok(PcaModel {
            mean,
            basis,
            explained_variance,
        })
    }
}

fn column_means<T: Scalar>(features: &Matrix<T>) -> Vec<T> {
    let n = T::from_usize_lossy(features.rows());
    let mut mean = vec![T::zero(); features.cols()];
    for i in 0..features.rows() {
        for (m, &v) in mean.iter_mut().zip(features.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

fn center<T: Scalar>(features: &Matrix<T>, mean: &[T]) -> Matrix<T> {
    let mut out = features.clone();
    for i in 0..out.rows() {
        for (v, &m) in out.row_mut(i).iter_mut().zip(mean) {
            *v -= m;
        }
    }
    out
}

/// Fits the top-`m` principal directions of `features` (rows are samples).
///
/// Uses the `d × d` covariance when `d ≤ n`, and the `n × n` Gram matrix
/// otherwise (falling back to the covariance if a kept Gram eigenvalue is
/// numerically zero). Each basis column has its largest-magnitude entry
/// positive.
pub fn fit_pca<T: Scalar>(features: &Matrix<T>, m: usize) -> Result<PcaModel<T>> {
    let (n, d) = features.shape();
    if m == 0 || m > n.min(d) {
        return Err(CdemError::Config(format!(
            "PCA dimension {m} must lie in [1, min(n={n}, d={d})]"
        )));
    }
    let mean = column_means(features);
    let centered = center(features, &mean);
    let denom = T::from_usize_lossy(n.saturating_sub(1).max(1));

    let total: T = centered.as_slice().iter().map(|&v| v * v).sum();
    if !(total > T::zero()) {
        return Err(CdemError::Degenerate("data has zero variance".into()));
    }

    let via_gram = if d > n {
        gram_basis(&centered, m, total)?
    } else {
        None
    };
    let (mut basis, variance) = match via_gram {
        Some(found) => found,
        None => covariance_basis(&centered, m)?,
    };
    fix_column_signs(&mut basis);
    let explained_variance = variance
        .into_iter()
        .map(|v| (v / denom).max(T::zero()))
        .collect();
    Ok(PcaModel {
        mean,
        basis,
        explained_variance,
    })
}

// Returns the basis and the (unnormalised) eigenvalues, largest first.
fn covariance_basis<T: Scalar>(centered: &Matrix<T>, m: usize) -> Result<(Matrix<T>, Vec<T>)> {
    let d = centered.cols();
    let scatter = centered.t_matmul(centered)?;
    let eig = SymmetricEigen::new(&scatter)?;
    let basis = Matrix::from_fn(d, m, |i, j| eig.vectors[(i, d - 1 - j)]);
    let values = (0..m).map(|j| eig.values[d - 1 - j]).collect();
    Ok((basis, values))
}

fn gram_basis<T: Scalar>(
    centered: &Matrix<T>,
    m: usize,
    total: T,
) -> Result<Option<(Matrix<T>, Vec<T>)>> {
    let n = centered.rows();
    let gram = centered.matmul(&centered.transpose())?;
    let eig = SymmetricEigen::new(&gram)?;
    let floor = total * T::lit(1e-12);
    let mut values = Vec::with_capacity(m);
    let mut coeffs = Matrix::zeros(n, m);
    for j in 0..m {
        let lam = eig.values[n - 1 - j];
        if lam <= floor {
            return Ok(None);
        }
        let s = lam.sqrt();
        for i in 0..n {
            coeffs[(i, j)] = eig.vectors[(i, n - 1 - j)] / s;
        }
        values.push(lam);
    }
    // v_j = Xcᵀ u_j / sqrt(λ_j)
    let basis = centered.t_matmul(&coeffs)?;
    Ok(Some((basis, values)))
}

/// Scales every row to unit Euclidean norm.
pub fn normalize_rows<T: Scalar>(features: &Matrix<T>) -> Result<Matrix<T>> {
    let mut out = features.clone();
    for i in 0..out.rows() {
        let norm = out.row(i).iter().map(|&v| v * v).sum::<T>().sqrt();
        if !(norm > T::zero()) {
            return Err(CdemError::Degenerate(format!("row {i} has zero norm")));
        }
        out.row_mut(i).iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}
