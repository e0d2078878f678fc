//! Design matrices, empirical norms and the Gram matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Empirical norm of a vector of function values at the design points:
/// `sqrt((1/n) * sum(v_i^2))`.
pub fn empirical_norm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("empirical_norm of an empty vector"));
    }
    let n = values.len() as f64;
    Ok((values.iter().map(|v| v * v).sum::<f64>() / n).sqrt())
}

/// The n x M matrix of dictionary evaluations, with cached per-column
/// empirical norms.
///
/// Invariants enforced at construction: n >= 1, M >= 2, and every column has
/// a strictly positive empirical norm.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
    column_norms: DVector<f64>,
}

impl DesignMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (n, m) = entries.shape();
        if n < 1 {
            return Err(Error::invalid("design matrix needs at least one row"));
        }
        if m < 2 {
            return Err(Error::invalid(format!(
                "design matrix needs at least two columns, got {m}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design matrix contains non-finite entries"));
        }
        let mut column_norms = DVector::zeros(m);
        for j in 0..m {
            let norm = (entries.column(j).norm_squared() / n as f64).sqrt();
            if norm <= 0.0 {
                return Err(Error::invalid(format!(
                    "column {j} has zero empirical norm"
                )));
            }
            column_norms[j] = norm;
        }
        Ok(DesignMatrix {
            entries,
            column_norms,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("design matrix needs at least one row"));
        }
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::invalid("design matrix rows have unequal lengths"));
        }
        let entries = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        Self::new(entries)
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of dictionary functions.
    pub fn m(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column_norms(&self) -> &DVector<f64> {
        &self.column_norms
    }

    pub fn f_max(&self) -> f64 {
        self.column_norms.max()
    }

    pub fn f_min(&self) -> f64 {
        self.column_norms.min()
    }

    /// True when every column has unit empirical norm within `tol`.
    pub fn has_unit_norms(&self, tol: f64) -> bool {
        self.column_norms.iter().all(|v| (v - 1.0).abs() <= tol)
    }

    /// `X * beta`.
    pub fn apply(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.entries * beta
    }

    /// `(1/n) X^T v` — the vector of correlations of `v` with the columns.
    pub fn correlations(&self, v: &DVector<f64>) -> DVector<f64> {
        (self.entries.transpose() * v) / self.n() as f64
    }

    /// The n x |J| submatrix keeping the columns listed in `support`.
    pub fn submatrix(&self, support: &[usize]) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, support.len());
        for (k, &j) in support.iter().enumerate() {
            out.set_column(k, &self.entries.column(j));
        }
        out
    }

    pub fn gram(&self) -> GramMatrix {
        let n = self.n() as f64;
        let psi = self.entries.transpose() * &self.entries / n;
        GramMatrix { psi }
    }

    /// FNV-1a hash of the raw entries; used to key per-design caches.
    pub fn content_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |bits: u64| {
            h ^= bits;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        mix(self.n() as u64);
        mix(self.m() as u64);
        for v in self.entries.iter() {
            mix(v.to_bits());
        }
        h
    }
}

/// The Gram matrix `Psi = X^T X / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    psi: DMatrix<f64>,
}

impl GramMatrix {
    /// Wraps an explicitly supplied Gram matrix, checking symmetry and the
    /// sign of the diagonal.
    pub fn from_matrix(psi: DMatrix<f64>) -> Result<Self> {
        if psi.nrows() != psi.ncols() {
            return Err(Error::invalid("gram matrix must be square"));
        }
        let sym_err = (&psi - psi.transpose()).abs().max();
        if sym_err > 1e-12 {
            return Err(Error::invalid(format!(
                "gram matrix is not symmetric (max asymmetry {sym_err:.3e})"
            )));
        }
        if (0..psi.nrows()).any(|j| psi[(j, j)] <= 0.0) {
            return Err(Error::invalid("gram matrix has a non-positive diagonal"));
        }
        Ok(GramMatrix { psi })
    }

    pub fn dim(&self) -> usize {
        self.psi.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// Maximal eigenvalue of `Psi`.
    pub fn phi_max(&self) -> f64 {
        self.psi
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The principal submatrix `Psi[J, J]`.
    pub fn principal_submatrix(&self, support: &[usize]) -> DMatrix<f64> {
        let k = support.len();
        DMatrix::from_fn(k, k, |a, b| self.psi[(support[a], support[b])])
    }

    /// The cross block `Psi[I1, I2]`, i.e. `X_{I1}^T X_{I2} / n`.
    pub fn cross_block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
            self.psi[(rows[a], cols[b])]
        })
    }

    /// True when `Psi` equals the identity within `tol` entrywise.
    pub fn is_identity(&self, tol: f64) -> bool {
        let m = self.dim();
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { 1.0 } else { 0.0 };
                if (self.psi[(i, j)] - target).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Largest entrywise deviation from another Gram matrix.
    pub fn max_entry_distance(&self, other: &GramMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::invalid("gram matrices have different dimensions"));
        }
        Ok((&self.psi - &other.psi).abs().max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empirical_norm_zero_vector() {
        assert_eq!(empirical_norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn empirical_norm_constant_vector_is_abs() {
        for c in [-2.5, 0.25, 7.0] {
            let v = vec![c; 9];
            assert_relative_eq!(empirical_norm(&v).unwrap(), c.abs(), epsilon = 1e-14);
        }
    }

    #[test]
    fn empirical_norm_two_point() {
        // sqrt((9 + 16)/2) = sqrt(12.5)
        assert_relative_eq!(
            empirical_norm(&[3.0, 4.0]).unwrap(),
            12.5f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn empirical_norm_rejects_empty() {
        assert!(empirical_norm(&[]).is_err());
    }

    #[test]
    fn design_rejects_zero_norm_column() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(DesignMatrix::new(x).is_err());
    }

    #[test]
    fn design_rejects_single_column() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(DesignMatrix::new(x).is_err());
    }

    #[test]
    fn gram_of_scaled_identity_is_identity() {
        let x = DMatrix::from_row_slice(2, 2, &[2f64.sqrt(), 0.0, 0.0, 2f64.sqrt()]);
        let design = DesignMatrix::new(x).unwrap();
        let gram = design.gram();
        assert!(gram.is_identity(1e-12));
        for j in 0..2 {
            assert_relative_eq!(
                gram.matrix()[(j, j)],
                design.column_norms()[j].powi(2),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn gram_of_orthogonal_unit_columns_is_identity() {
        // Two orthogonal columns in R^4, rescaled to unit empirical norm.
        let n = 4;
        let c1 = [1.0, 1.0, 1.0, 1.0];
        let c2 = [1.0, -1.0, 1.0, -1.0];
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { c1[i] } else { c2[i] });
        let design = DesignMatrix::new(x).unwrap();
        assert!(design.has_unit_norms(1e-12));
        assert!(design.gram().is_identity(1e-12));
    }

    #[test]
    fn gram_two_by_two_with_correlation() {
        // Unit-norm columns with sample correlation rho give [[1, rho], [rho, 1]].
        let a = DVector::from_vec(vec![1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0]);
        // Mix the columns so the correlation is rho = 0.6; both stay unit norm.
        let rho: f64 = 0.6;
        let c1 = a.clone();
        let c2 = rho * &a + (1.0 - rho * rho).sqrt() * &b;
        let x = DMatrix::from_fn(2, 2, |i, j| if j == 0 { c1[i] } else { c2[i] });
        let design = DesignMatrix::new(x).unwrap();
        let gram = design.gram();
        assert_relative_eq!(gram.matrix()[(0, 1)], rho, epsilon = 1e-12);
        assert_relative_eq!(gram.matrix()[(1, 0)], rho, epsilon = 1e-12);
        assert_relative_eq!(gram.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(gram.matrix()[(1, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_diagonal_matches_column_norms_on_random_matrix() {
        let x = DMatrix::from_fn(7, 5, |i, j| ((3 * i + 5 * j + 1) as f64).sin() + 0.2);
        let design = DesignMatrix::new(x).unwrap();
        let gram = design.gram();
        for j in 0..5 {
            assert_relative_eq!(
                gram.matrix()[(j, j)],
                design.column_norms()[j].powi(2),
                epsilon = 1e-12
            );
        }
        // PSD: Rayleigh quotients of the eigendecomposition are nonnegative.
        let min_eig = gram
            .matrix()
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .min();
        assert!(min_eig >= -1e-10);
    }

    #[test]
    fn content_hash_distinguishes_matrices() {
        let x1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let mut x2 = x1.clone();
        x2[(0, 0)] = 1.0 + 1e-15;
        let d1 = DesignMatrix::new(x1.clone()).unwrap();
        let d2 = DesignMatrix::new(x2).unwrap();
        assert_ne!(d1.content_hash(), d2.content_hash());
        assert_eq!(d1.content_hash(), DesignMatrix::new(x1).unwrap().content_hash());
    }
}
