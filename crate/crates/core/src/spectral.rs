//! Symmetric eigendecomposition of the weighted Gram matrix and stabilized
//! application of its inverse spectral expansion.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::kernel::{GramMatrix, KernelSpec};

/// How small eigenvalues are treated when inverting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameter", rename_all = "snake_case")]
pub enum Regularization {
    /// Keep eigenpairs with `lambda_h >= tau * lambda_1`.
    TruncatedSpectrum(f64),
    /// Replace `1/lambda` by `lambda / (lambda^2 + mu^2)`.
    Tikhonov(f64),
}

impl Regularization {
    pub fn truncated(tau: f64) -> Result<Self> {
        Self::TruncatedSpectrum(tau).validated()
    }

    pub fn tikhonov(mu: f64) -> Result<Self> {
        Self::Tikhonov(mu).validated()
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            Self::TruncatedSpectrum(p) | Self::Tikhonov(p) => p,
        }
    }

    pub fn validated(self) -> Result<Self> {
        let p = self.parameter();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::invalid(format!(
                "regularization parameter must be positive and finite, got {p}"
            )));
        }
        Ok(self)
    }

    /// Filtered reciprocal of one eigenvalue; `None` if the term is dropped.
    fn filter(&self, lambda: f64, lambda_max: f64) -> Option<f64> {
        match *self {
            Self::TruncatedSpectrum(tau) => (lambda >= tau * lambda_max && lambda > 0.0).then(|| 1.0 / lambda),
            Self::Tikhonov(mu) => {
                let d = lambda * lambda + mu * mu;
                (d > 0.0).then(|| lambda / d)
            }
        }
    }
}

impl Default for Regularization {
    fn default() -> Self {
        Self::TruncatedSpectrum(1e-8)
    }
}

/// Eigenpairs of `B = W^{1/2} H W^{1/2}`, sorted by descending eigenvalue.
///
/// Columns of `eigenvectors` are orthonormal in the Euclidean sense; as grid
/// functions, `v_h(rho_j) = eigenvectors[(j, h)] / sqrt(w_j)` are orthonormal
/// in the quadrature inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct GramDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub grid: RadialGrid,
    pub spec: KernelSpec,
}

impl GramDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `h`-th eigenfunction sampled on the grid.
    pub fn eigenfunction(&self, h: usize) -> Vec<f64> {
        self.eigenvectors
            .column(h)
            .iter()
            .zip(self.grid.weights())
            .map(|(b, w)| b / w.sqrt())
            .collect()
    }

    /// Number of eigenvalues at least `rel * lambda_1`.
    pub fn count_above(&self, rel: f64) -> usize {
        let cut = rel * self.largest();
        self.eigenvalues.iter().take_while(|&&l| l >= cut).count()
    }

    /// Number of terms the regularization keeps.
    pub fn terms_used(&self, reg: &Regularization) -> usize {
        let top = self.largest();
        self.eigenvalues
            .iter()
            .filter(|&&l| reg.filter(l, top).is_some())
            .count()
    }

    /// `max_{i,j} |B - V diag(lambda) V^T|`
    pub fn reconstruction_error(&self, matrix: &DMatrix<f64>) -> f64 {
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(&self.eigenvalues));
        let rebuilt = &self.eigenvectors * lam * self.eigenvectors.transpose();
        (matrix - rebuilt).amax()
    }

    /// `max_h ||B v_h - lambda_h v_h||`
    pub fn max_residual(&self, matrix: &DMatrix<f64>) -> f64 {
        (0..self.len())
            .map(|h| {
                let v = self.eigenvectors.column(h);
                (matrix * v - v * self.eigenvalues[h]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |V^T V - I|`
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.len();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n)).amax()
    }
}

/// Full symmetric eigendecomposition. Eigenvalues are sorted descending and
/// each eigenvector's first non-negligible component is made positive.
pub fn eig_sym(matrix: &GramMatrix) -> Result<GramDecomposition> {
    let (eigenvalues, eigenvectors) = eig_sym_values(&matrix.values)?;
    Ok(GramDecomposition {
        eigenvalues,
        eigenvectors,
        grid: matrix.grid.clone(),
        spec: matrix.spec,
    })
}

/// Eigenpairs of a bare symmetric matrix with the same ordering and sign
/// conventions as [`eig_sym`].
pub fn eig_sym_values(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !matrix.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix passed to the eigensolver"));
    }
    let n = matrix.nrows();
    let eig = SymmetricEigen::new(matrix.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (h, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        let scale = col.amax();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                col.neg_mut();
            }
        }
        vectors.set_column(h, &col);
    }
    Ok((values, vectors))
}

/// Stabilized solution `c` of `sum_j H(rho_i, rho_j) w_j c_j = g_i`:
/// `c = W^{-1/2} sum_h phi(lambda_h) b_h b_h^T W^{1/2} g`, with `phi` the
/// filtered reciprocal.
pub fn regularized_inverse_apply(
    dec: &GramDecomposition,
    g: &[f64],
    reg: &Regularization,
) -> Result<Vec<f64>> {
    if g.len() != dec.len() {
        return Err(Error::LengthMismatch {
            context: "right-hand side of the inverse",
            expected: dec.len(),
            found: g.len(),
        });
    }
    let reg = reg.validated()?;
    let w = dec.grid.weights();
    let rhs = DVector::from_iterator(g.len(), g.iter().zip(w).map(|(gi, wi)| gi * wi.sqrt()));
    let top = dec.largest();
    let mut x = DVector::zeros(g.len());
    let mut used = 0;
    for (h, &lambda) in dec.eigenvalues.iter().enumerate() {
        if let Some(phi) = reg.filter(lambda, top) {
            let b = dec.eigenvectors.column(h);
            x.axpy(phi * b.dot(&rhs), &b, 1.0);
            used += 1;
        }
    }
    if used == 0 {
        log::warn!("regularization {reg:?} dropped every spectral term; returning zero");
    }
    Ok(x.iter().zip(w).map(|(xi, wi)| xi / wi.sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::assemble_gram_matrix;
    use crate::model::DampingModel;
    use crate::specfun::ModeIndex;

    fn small_decomposition() -> (GramMatrix, GramDecomposition) {
        let spec = KernelSpec::new(
            DampingModel::strong(1.0).unwrap(),
            ModeIndex::new(3, 0, 0).unwrap(),
            1.5,
        )
        .unwrap();
        let grid = RadialGrid::composite(12.0, 4, 8).unwrap();
        let b = assemble_gram_matrix(&spec, &grid).unwrap();
        let dec = eig_sym(&b).unwrap();
        (b, dec)
    }

    #[test]
    fn small_analytic_cases() {
        let (vals, _) = eig_sym_values(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = eig_sym_values(&m).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let r = 0.5f64.sqrt();
        assert!((vecs[(0, 0)] - r).abs() < 1e-14 && (vecs[(1, 0)] - r).abs() < 1e-14);
        assert!((vecs[(0, 1)] - r).abs() < 1e-14 && (vecs[(1, 1)] + r).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(eig_sym_values(&m).is_err());
    }

    #[test]
    fn decomposition_contract() {
        let (b, dec) = small_decomposition();
        let top = dec.largest();
        assert!(dec.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
        assert!(dec.orthonormality_error() < 1e-10);
        assert!(dec.max_residual(&b.values) <= 1e-10 * top);
        assert!(dec.reconstruction_error(&b.values) <= 1e-9 * top);
        assert!(*dec.eigenvalues.last().unwrap() >= -1e-10 * top);
        assert!(dec.count_above(1e-12) < dec.len());
    }

    #[test]
    fn leading_eigenfunction_is_recovered() {
        let (_, dec) = small_decomposition();
        let v1 = dec.eigenfunction(0);
        let g: Vec<f64> = v1.iter().map(|v| dec.largest() * v).collect();
        let c = regularized_inverse_apply(&dec, &g, &Regularization::default()).unwrap();
        for (a, b) in c.iter().zip(&v1) {
            assert!((a - b).abs() < 1e-10 * v1.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
    }

    #[test]
    fn truncated_components_vanish() {
        let (_, dec) = small_decomposition();
        let reg = Regularization::truncated(1e-3).unwrap();
        let kept = dec.terms_used(&reg);
        assert!(kept < dec.len());
        let g = dec.eigenfunction(kept);
        let c = regularized_inverse_apply(&dec, &g, &reg).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-8), "{c:?}");
    }

    #[test]
    fn everything_truncated_gives_zero() {
        let (_, dec) = small_decomposition();
        let reg = Regularization::truncated(2.0).unwrap();
        assert_eq!(dec.terms_used(&reg), 0);
        let c = regularized_inverse_apply(&dec, &dec.eigenfunction(0), &reg).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tikhonov_filter_shrinks() {
        let (_, dec) = small_decomposition();
        let g: Vec<f64> = dec.eigenfunction(0).iter().map(|v| dec.largest() * v).collect();
        let mu = dec.largest();
        let c = regularized_inverse_apply(&dec, &g, &Regularization::tikhonov(mu).unwrap()).unwrap();
        let v1 = dec.eigenfunction(0);
        for (a, b) in c.iter().zip(&v1) {
            assert!((a - 0.5 * b).abs() < 1e-10 * v1.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        }
    }

    #[test]
    fn validation() {
        assert!(Regularization::truncated(0.0).is_err());
        assert!(Regularization::tikhonov(-1.0).is_err());
        let (_, dec) = small_decomposition();
        assert!(regularized_inverse_apply(&dec, &[1.0], &Regularization::default()).is_err());
    }
}
