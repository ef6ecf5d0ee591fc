//! Graph-filter dimensionality reduction and reconstruction.
//!
//! Data vectors are nodes of a similarity graph. Each node is compressed to
//! `k` scalars by a matrix graph filter of order `L` that mixes data from up
//! to `L` hops away, and rebuilt by a second filter bank. Both banks are fitted
//! by gradient descent with exact line search in the graph spectral domain,
//! starting from PCA, which is the `L = 0` special case.
//!
//! The pipeline, module by module:
//!
//! | step | module |
//! |------|--------|
//! | similarity graph and `S = UΛUᵀ` | [`graph`] |
//! | centering, graph Fourier transform, `K_z` | [`spectral`] |
//! | PCA baseline and initializer | [`pca`] |
//! | filter fitting | [`optimizer`] |
//! | reduce / reconstruct / persist | [`codec`] |
//! | datasets, sampling protocol, sweeps, reports | [`harness`] |

// NaN-rejecting guards are written as negated comparisons on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod error;
pub mod graph;
pub mod harness;
pub mod optimizer;
pub mod pca;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{build_graph, GraphSpectrum, Kernel, SimilarityConfig, Symmetrization};
pub use optimizer::{fit, FilterBank, FilterModel, FitOptions};
pub use pca::{pca_fit, pca_mse, PcaModel};
pub use spectral::{center, CenteredDataset, SpectralCache};
