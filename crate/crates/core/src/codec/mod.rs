//! Applying trained filter banks: reduction, reconstruction, error, storage
//! cost, and model files.

mod format;
mod kron;

pub use format::{load_model, save_model, SavedModel, FORMAT_VERSION, MAGIC};
pub use kron::{kron_reconstruct, kron_reduce, matrix_power};

use nalgebra::DMatrix;

use crate::error::{ensure_dims, Result};
use crate::graph::GraphSpectrum;
use crate::optimizer::FilterModel;
use crate::spectral::{apply_response, CenteredDataset, SpectralCache};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Vertex,
    Spectral,
}

/// Reduced vectors, one `k`-vector per node (column).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedData {
    pub codes: DMatrix<f64>,
    pub domain: Domain,
}

impl ReducedData {
    pub fn k(&self) -> usize {
        self.codes.nrows()
    }

    pub fn to_vertex(&self, spectrum: &GraphSpectrum) -> Result<ReducedData> {
        Ok(match self.domain {
            Domain::Vertex => self.clone(),
            Domain::Spectral => ReducedData {
                codes: crate::spectral::igft(&self.codes, spectrum)?,
                domain: Domain::Vertex,
            },
        })
    }

    pub fn to_spectral(&self, spectrum: &GraphSpectrum) -> Result<ReducedData> {
        Ok(match self.domain {
            Domain::Spectral => self.clone(),
            Domain::Vertex => ReducedData {
                codes: crate::spectral::gft(&self.codes, spectrum)?,
                domain: Domain::Spectral,
            },
        })
    }
}

fn check_cache(model: &FilterModel, ds: &CenteredDataset, cache: &SpectralCache) -> Result<()> {
    ensure_dims(
        cache.order() == model.order() && cache.dim() == model.dim() && cache.n() == model.n(),
        || "spectral cache does not match the model".into(),
    )?;
    ensure_dims(ds.dim() == model.dim() && ds.len() == model.n(), || {
        format!(
            "dataset is {}x{}, model expects {}x{}",
            ds.dim(),
            ds.len(),
            model.dim(),
            model.n()
        )
    })
}

/// Reduced vectors in the vertex domain: `ỹᵢ = G·K_z(:,i)`, then `Y = ỸUᵀ`.
pub fn reduce(
    model: &FilterModel,
    ds: &CenteredDataset,
    spectrum: &GraphSpectrum,
    cache: &SpectralCache,
) -> Result<ReducedData> {
    model.check_spectrum(spectrum)?;
    check_cache(model, ds, cache)?;
    let spectral = ReducedData {
        codes: model.coefficients() * cache.kernel(),
        domain: Domain::Spectral,
    };
    spectral.to_vertex(spectrum)
}

fn power_table(spectrum: &GraphSpectrum, order: usize) -> DMatrix<f64> {
    let lambda = spectrum.eigenvalues();
    let mut table = DMatrix::zeros(spectrum.n(), order + 1);
    for i in 0..spectrum.n() {
        table[(i, 0)] = 1.0;
        for l in 1..=order {
            table[(i, l)] = table[(i, l - 1)] * lambda[i];
        }
    }
    table
}

/// Centered reconstruction `X̂ − mean`.
pub fn reconstruct_centered(
    model: &FilterModel,
    reduced: &ReducedData,
    spectrum: &GraphSpectrum,
) -> Result<DMatrix<f64>> {
    model.check_spectrum(spectrum)?;
    ensure_dims(
        reduced.k() == model.k() && reduced.codes.ncols() == spectrum.n(),
        || {
            format!(
                "reduced data is {:?}, model expects {}x{}",
                reduced.codes.shape(),
                model.k(),
                spectrum.n()
            )
        },
    )?;
    let spectral = reduced.to_spectral(spectrum)?;
    let table = power_table(spectrum, model.order());
    let rebuilt = apply_response(model.taps(), &spectral.codes, &table);
    crate::spectral::igft(&rebuilt, spectrum)
}

/// Reconstruction with the mean added back, comparable to the raw data.
pub fn reconstruct(
    model: &FilterModel,
    reduced: &ReducedData,
    spectrum: &GraphSpectrum,
) -> Result<DMatrix<f64>> {
    let mut out = reconstruct_centered(model, reduced, spectrum)?;
    for mut col in out.column_iter_mut() {
        col += model.mean();
    }
    Ok(out)
}

/// `n⁻¹‖X̄ − (X̂ − mean)‖²_F` through a full reduce / reconstruct cycle.
pub fn reconstruction_mse(
    model: &FilterModel,
    ds: &CenteredDataset,
    spectrum: &GraphSpectrum,
    cache: &SpectralCache,
) -> Result<f64> {
    let reduced = reduce(model, ds, spectrum, cache)?;
    let rebuilt = reconstruct_centered(model, &reduced, spectrum)?;
    Ok((ds.centered() - rebuilt).norm_squared() / ds.len() as f64)
}

/// Scalar counts for storing the graph-filter representation, the raw data,
/// and a PCA representation of the same data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StorageBudget {
    pub n: u64,
    pub dim: u64,
    pub k: u64,
    pub order: u64,
    /// `k(L+1)D + 2kn + n(n+1)/2`: taps, `G`, codes, and the upper triangle
    /// of the adjacency.
    pub stored_scalars: u64,
    pub raw_scalars: u64,
    pub pca_scalars: u64,
}

impl StorageBudget {
    pub fn new(n: usize, dim: usize, k: usize, order: usize) -> Self {
        let (n, dim, k, order) = (n as u64, dim as u64, k as u64, order as u64);
        Self {
            n,
            dim,
            k,
            order,
            stored_scalars: k * (order + 1) * dim + 2 * k * n + n * (n + 1) / 2,
            raw_scalars: n * dim,
            pca_scalars: k * dim + k * n,
        }
    }

    /// Strictly fewer scalars than the raw data.
    pub fn compresses(&self) -> bool {
        self.stored_scalars < self.raw_scalars
    }
}

/// Largest `k` for which the graph-filter representation takes strictly
/// fewer scalars than the raw `n × D` data, i.e. the largest integer below
/// `n[D − (n+1)/2] / (2n + (L+1)D)`. Zero when no `k ≥ 1` compresses.
pub fn compression_bound(n: usize, dim: usize, order: usize) -> usize {
    let (n, dim, order) = (n as i128, dim as i128, order as i128);
    let budget = n * dim - n * (n + 1) / 2;
    let per_k = 2 * n + (order + 1) * dim;
    if budget <= 0 || per_k <= 0 {
        return 0;
    }
    ((budget - 1) / per_k) as usize
}
