//! Similarity graphs over data vectors and the adjacency eigendecomposition.
//!
//! Nodes are the columns of a `D × n` data matrix. The adjacency `S` is built
//! from a pairwise kernel, sparsified with a k-nearest-neighbour rule, and
//! decomposed as `S = U Λ Uᵀ`. The eigenbasis `U` defines the graph Fourier
//! transform used by [`crate::spectral`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{ensure_dims, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `xᵢᵀxⱼ / (‖xᵢ‖‖xⱼ‖)`
    Cosine,
    /// `exp(−α‖xᵢ − xⱼ‖² / 2)`
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetrization {
    /// Keep an edge if either endpoint selected it.
    Union,
    /// Keep an edge only if both endpoints selected it.
    Mutual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityConfig {
    pub kernel: Kernel,
    /// Gaussian width; ignored by the cosine kernel.
    pub alpha: f64,
    pub knn: usize,
    pub symmetrization: Symmetrization,
    /// Divide the sparsified adjacency by its largest-magnitude eigenvalue.
    pub normalize_spectrum: bool,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Cosine,
            alpha: 0.01,
            knn: 12,
            symmetrization: Symmetrization::Union,
            normalize_spectrum: false,
        }
    }
}

impl SimilarityConfig {
    pub fn cosine(knn: usize) -> Self {
        Self {
            knn,
            ..Self::default()
        }
    }

    pub fn gaussian(alpha: f64, knn: usize) -> Self {
        Self {
            kernel: Kernel::Gaussian,
            alpha,
            knn,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel == Kernel::Gaussian && !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gaussian kernel needs alpha > 0, got {}",
                self.alpha
            )));
        }
        if self.knn == 0 {
            return Err(Error::InvalidArgument("knn must be at least 1".into()));
        }
        Ok(())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(Kernel::Cosine),
            "gaussian" => Ok(Kernel::Gaussian),
            other => Err(Error::Config(format!("unknown kernel `{other}`"))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Cosine => "cosine",
            Kernel::Gaussian => "gaussian",
        })
    }
}

impl FromStr for Symmetrization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "union" => Ok(Symmetrization::Union),
            "mutual" => Ok(Symmetrization::Mutual),
            other => Err(Error::Config(format!("unknown symmetrization `{other}`"))),
        }
    }
}

impl fmt::Display for Symmetrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetrization::Union => "union",
            Symmetrization::Mutual => "mutual",
        })
    }
}

/// Symmetric adjacency together with its full eigendecomposition.
///
/// Eigenvalues are sorted in descending algebraic order and column `i` of
/// the eigenvector matrix pairs with `eigenvalues[i]`. Within each
/// eigenvector the entry of largest magnitude (lowest index on ties) is
/// nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpectrum {
    adjacency: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl GraphSpectrum {
    /// Rebuilds a spectrum from a stored eigendecomposition. The adjacency is
    /// recomputed as `U Λ Uᵀ` and symmetrized exactly.
    pub fn from_eigen(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        ensure_dims(eigenvectors.shape() == (n, n), || {
            format!(
                "eigenvector matrix is {:?}, expected {n}x{n}",
                eigenvectors.shape()
            )
        })?;
        let scaled = DMatrix::from_fn(n, n, |r, c| eigenvectors[(r, c)] * eigenvalues[c]);
        let s = &scaled * eigenvectors.transpose();
        let adjacency = DMatrix::from_fn(n, n, |r, c| 0.5 * (s[(r, c)] + s[(c, r)]));
        Ok(Self {
            adjacency,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// CRC-32 over the bit patterns of `λ` and `U`; ties a trained model to
    /// the exact basis it was fitted in.
    pub fn fingerprint(&self) -> u32 {
        let mut hasher = crc32fast::Hasher::new();
        for v in self.eigenvalues.iter().chain(self.eigenvectors.iter()) {
            hasher.update(&v.to_le_bytes());
        }
        hasher.finalize()
    }
}

/// Dense pairwise similarity between the columns of `x`, zero diagonal.
pub fn similarity_dense(x: &DMatrix<f64>, cfg: &SimilarityConfig) -> Result<DMatrix<f64>> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::DimensionMismatch(format!(
            "similarity graph needs at least 2 columns, got {n}"
        )));
    }
    if cfg.kernel == Kernel::Gaussian {
        cfg.validate()?;
    }

    let mut s = DMatrix::zeros(n, n);
    match cfg.kernel {
        Kernel::Cosine => {
            let norms: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
            if let Some(i) = norms.iter().position(|&v| v == 0.0) {
                return Err(Error::ZeroColumn(i));
            }
            for j in 0..n {
                for i in 0..j {
                    let v = x.column(i).dot(&x.column(j)) / (norms[i] * norms[j]);
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
        }
        Kernel::Gaussian => {
            for j in 0..n {
                for i in 0..j {
                    let d2 = (x.column(i) - x.column(j)).norm_squared();
                    let v = (-0.5 * cfg.alpha * d2).exp();
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
        }
    }
    Ok(s)
}

/// Keeps, for each node, its `knn` most similar neighbours and symmetrizes
/// the resulting mask. Ties go to the lower column index.
pub fn knn_sparsify(full: &DMatrix<f64>, cfg: &SimilarityConfig) -> Result<DMatrix<f64>> {
    let n = full.nrows();
    ensure_dims(full.is_square(), || {
        format!("adjacency must be square, got {:?}", full.shape())
    })?;
    if cfg.knn == 0 || cfg.knn + 1 > n {
        return Err(Error::KnnTooLarge {
            knn: cfg.knn,
            max: n.saturating_sub(1),
        });
    }

    let mut marked = vec![false; n * n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| match full[(i, b)].total_cmp(&full[(i, a)]) {
            Ordering::Equal => a.cmp(&b),
            o => o,
        });
        for &j in &order[..cfg.knn] {
            marked[i * n + j] = true;
        }
    }

    let mut kept = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let keep = match cfg.symmetrization {
                Symmetrization::Union => marked[i * n + j] || marked[j * n + i],
                Symmetrization::Mutual => marked[i * n + j] && marked[j * n + i],
            };
            if keep {
                kept[(i, j)] = full[(i, j)];
                kept[(j, i)] = full[(i, j)];
            }
        }
    }

    if cfg.normalize_spectrum {
        let spectral_radius = eigendecompose(&kept)?
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if spectral_radius > 0.0 {
            kept /= spectral_radius;
        }
    }
    Ok(kept)
}

/// Full symmetric eigendecomposition, eigenvalues descending.
pub fn eigendecompose(s: &DMatrix<f64>) -> Result<GraphSpectrum> {
    let n = s.nrows();
    ensure_dims(s.is_square(), || {
        format!("adjacency must be square, got {:?}", s.shape())
    })?;
    let scale = s.amax();
    for j in 0..n {
        for i in 0..j {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "adjacency is not symmetric at ({i}, {j})"
                )));
            }
        }
    }

    let max_iters = 1000 * n.max(1);
    let eig = SymmetricEigen::try_new(s.clone(), f64::EPSILON, max_iters)
        .ok_or(Error::ConvergenceFailure(max_iters))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    apply_sign_convention(&mut eigenvectors);

    Ok(GraphSpectrum {
        adjacency: s.clone(),
        eigenvalues,
        eigenvectors,
    })
}

/// Similarity, sparsification and eigendecomposition in one call.
pub fn build_graph(x: &DMatrix<f64>, cfg: &SimilarityConfig) -> Result<GraphSpectrum> {
    cfg.validate()?;
    let full = similarity_dense(x, cfg)?;
    let sparse = knn_sparsify(&full, cfg)?;
    eigendecompose(&sparse)
}

/// Flips each column so its largest-magnitude entry (lowest index on ties)
/// is nonnegative.
pub(crate) fn apply_sign_convention(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut pivot = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
}
