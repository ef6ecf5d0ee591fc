//! Standard PCA, the zero-order reference and the optimizer's starting point.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dims, Error, Result};
use crate::graph::{apply_sign_convention, eigendecompose};
use crate::spectral::CenteredDataset;

/// Eigenvalue ratio below which the k-th principal direction is considered
/// unsupported by the data.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    basis: DMatrix<f64>,
    mean: DVector<f64>,
    variances: DVector<f64>,
    rank_deficient: bool,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.basis.ncols()
    }

    /// `D × k` orthonormal principal directions, variance-descending.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Top-k eigenvalues of the sample covariance `n⁻¹X̄X̄ᵀ`.
    pub fn variances(&self) -> &DVector<f64> {
        &self.variances
    }

    /// Set when the k-th variance is negligible relative to the first; the
    /// trailing basis vectors then complete an arbitrary orthonormal frame.
    pub fn is_rank_deficient(&self) -> bool {
        self.rank_deficient
    }

    /// Scores `basisᵀ X̄`.
    pub fn project(&self, ds: &CenteredDataset) -> Result<DMatrix<f64>> {
        self.check_dims(ds)?;
        Ok(self.basis.tr_mul(ds.centered()))
    }

    fn check_dims(&self, ds: &CenteredDataset) -> Result<()> {
        ensure_dims(ds.dim() == self.basis.nrows(), || {
            format!(
                "PCA basis has {} rows, data has {}",
                self.basis.nrows(),
                ds.dim()
            )
        })
    }
}

pub fn pca_fit(ds: &CenteredDataset, k: usize) -> Result<PcaModel> {
    let (d, n) = (ds.dim(), ds.len());
    if k == 0 || k > d.min(n) {
        return Err(Error::InvalidArgument(format!(
            "PCA dimension k = {k} must lie in 1..={}",
            d.min(n)
        )));
    }
    let xbar = ds.centered();

    let (mut basis, variances) = if d <= n {
        let cov = symmetrized(&((xbar * xbar.transpose()) / n as f64));
        let eig = eigendecompose(&cov)?;
        (
            eig.eigenvectors().columns(0, k).into_owned(),
            eig.eigenvalues().rows(0, k).into_owned(),
        )
    } else {
        // Same nonzero spectrum through the n×n Gram matrix: u = X̄v/√(nσ).
        let gram = symmetrized(&((xbar.transpose() * xbar) / n as f64));
        let eig = eigendecompose(&gram)?;
        let top = eig.eigenvalues()[0].max(0.0);
        let mut lifted = DMatrix::zeros(d, k);
        for c in 0..k {
            let sigma = eig.eigenvalues()[c];
            if sigma > RANK_TOLERANCE * top && sigma > 0.0 {
                let u = xbar * eig.eigenvectors().column(c) / (n as f64 * sigma).sqrt();
                lifted.set_column(c, &u);
            }
        }
        (
            orthonormalize_columns(&lifted),
            eig.eigenvalues().rows(0, k).into_owned(),
        )
    };
    apply_sign_convention(&mut basis);

    let rank_deficient = variances[k - 1] <= RANK_TOLERANCE * variances[0].max(0.0);
    if rank_deficient {
        log::warn!(
            "PCA: variance {} of component {k} is negligible; basis completed arbitrarily",
            variances[k - 1]
        );
    }
    Ok(PcaModel {
        basis,
        mean: ds.mean().clone(),
        variances,
        rank_deficient,
    })
}

/// `n⁻¹‖X̄ − B Bᵀ X̄‖²_F`.
pub fn pca_mse(ds: &CenteredDataset, model: &PcaModel) -> Result<f64> {
    model.check_dims(ds)?;
    let xbar = ds.centered();
    let scores = model.basis.tr_mul(xbar);
    let residual = xbar - &model.basis * scores;
    Ok(residual.norm_squared() / ds.len() as f64)
}

fn symmetrized(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |r, c| 0.5 * (a[(r, c)] + a[(c, r)]))
}

/// Modified Gram–Schmidt with reorthogonalization. Columns that vanish (or
/// were zero to begin with) are replaced by the first standard basis vector
/// that is not yet spanned.
pub(crate) fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (d, k) = m.shape();
    let scale = m.column_iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    let mut q = DMatrix::zeros(d, k);
    let mut next_unit = 0;
    for c in 0..k {
        let mut v = m.column(c).into_owned();
        let original = v.norm();
        project_out(&q, c, &mut v);
        let mut norm = v.norm();
        if !(norm > 1e-8 * original.max(scale)) || original == 0.0 {
            loop {
                assert!(next_unit < d, "cannot complete an orthonormal frame");
                v = DVector::zeros(d);
                v[next_unit] = 1.0;
                next_unit += 1;
                project_out(&q, c, &mut v);
                norm = v.norm();
                if norm > 1e-6 {
                    break;
                }
            }
        }
        q.set_column(c, &(v / norm));
    }
    q
}

fn project_out(q: &DMatrix<f64>, upto: usize, v: &mut DVector<f64>) {
    for _ in 0..2 {
        for j in 0..upto {
            let coef = q.column(j).dot(v);
            v.axpy(-coef, &q.column(j), 1.0);
        }
    }
}
