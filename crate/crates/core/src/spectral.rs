//! Centering, graph Fourier transform, and the spectral quantities consumed
//! by the optimizer.
//!
//! With `X̃ = X̄U` the stacked spectral vector of node `i` is
//! `z̃ᵢ = (x̃ᵢ; λᵢx̃ᵢ; …; λᵢᴸx̃ᵢ)`. Its Gram matrix is never formed from the
//! stack: `K_z(i,j) = (x̃ᵢᵀx̃ⱼ)·Σₗ(λᵢλⱼ)ˡ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dims, Error, Result};
use crate::graph::GraphSpectrum;

/// Powers beyond this magnitude make the kernel numerically meaningless.
pub const POWER_OVERFLOW_LIMIT: f64 = 1e150;

#[derive(Debug, Clone, PartialEq)]
pub struct CenteredDataset {
    centered: DMatrix<f64>,
    mean: DVector<f64>,
}

impl CenteredDataset {
    /// Column `i` is `xᵢ − mean`.
    pub fn centered(&self) -> &DMatrix<f64> {
        &self.centered
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn dim(&self) -> usize {
        self.centered.nrows()
    }

    pub fn len(&self) -> usize {
        self.centered.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.ncols() == 0
    }

    /// Centers new data with this dataset's mean.
    pub fn recenter(&self, x: &DMatrix<f64>) -> Result<CenteredDataset> {
        Self::with_mean(x, self.mean.clone())
    }

    /// Centers `x` with a given mean, e.g. one stored alongside a model.
    pub fn with_mean(x: &DMatrix<f64>, mean: DVector<f64>) -> Result<CenteredDataset> {
        ensure_dims(x.nrows() == mean.len(), || {
            format!("data has {} rows, mean has {}", x.nrows(), mean.len())
        })?;
        let mut centered = x.clone();
        for mut col in centered.column_iter_mut() {
            col -= &mean;
        }
        Ok(CenteredDataset { centered, mean })
    }
}

/// Subtracts the column mean from every column.
pub fn center(x: &DMatrix<f64>) -> Result<CenteredDataset> {
    let n = x.ncols();
    if n == 0 {
        return Err(Error::DimensionMismatch(
            "cannot center an empty dataset".into(),
        ));
    }
    let mean = x.column_sum() / n as f64;
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    Ok(CenteredDataset { centered, mean })
}

/// `X̃ = X̄U`: column `i` is the data's component at graph frequency `λᵢ`.
pub fn gft(xbar: &DMatrix<f64>, spectrum: &GraphSpectrum) -> Result<DMatrix<f64>> {
    ensure_dims(xbar.ncols() == spectrum.n(), || {
        format!(
            "data has {} columns, graph has {} nodes",
            xbar.ncols(),
            spectrum.n()
        )
    })?;
    Ok(xbar * spectrum.eigenvectors())
}

/// `X̄ = X̃Uᵀ`.
pub fn igft(xtilde: &DMatrix<f64>, spectrum: &GraphSpectrum) -> Result<DMatrix<f64>> {
    ensure_dims(xtilde.ncols() == spectrum.n(), || {
        format!(
            "data has {} columns, graph has {} nodes",
            xtilde.ncols(),
            spectrum.n()
        )
    })?;
    Ok(xtilde * spectrum.eigenvectors().transpose())
}

/// Precomputed spectral-domain data for a fixed filter order.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    order: usize,
    transformed: DMatrix<f64>,
    lambda_pow: DMatrix<f64>,
    kernel: DMatrix<f64>,
    energy: f64,
}

impl SpectralCache {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.transformed.nrows()
    }

    pub fn n(&self) -> usize {
        self.transformed.ncols()
    }

    /// `X̃`, `D × n`.
    pub fn transformed(&self) -> &DMatrix<f64> {
        &self.transformed
    }

    /// `n × (L+1)` table with entry `(i, ℓ) = λᵢˡ`.
    pub fn lambda_pow(&self) -> &DMatrix<f64> {
        &self.lambda_pow
    }

    /// `K_z = Z̃ᵀZ̃`, `n × n`.
    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    /// `tr(Σ_x̃) = ‖X̃‖²_F / n`, the objective of the all-zero filter.
    pub fn energy(&self) -> f64 {
        self.energy
    }
}

pub fn build_cache(
    xbar: &DMatrix<f64>,
    spectrum: &GraphSpectrum,
    order: usize,
) -> Result<SpectralCache> {
    let transformed = gft(xbar, spectrum)?;
    let n = spectrum.n();
    let lambda = spectrum.eigenvalues();

    let mut lambda_pow = DMatrix::zeros(n, order + 1);
    for i in 0..n {
        lambda_pow[(i, 0)] = 1.0;
        for l in 1..=order {
            lambda_pow[(i, l)] = lambda_pow[(i, l - 1)] * lambda[i];
        }
        let top = lambda_pow[(i, order)].abs();
        if !(top <= POWER_OVERFLOW_LIMIT) {
            return Err(Error::SpectralOverflow { order, value: top });
        }
    }

    let gram = transformed.transpose() * &transformed;
    let mut kernel = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let ratio = lambda[i] * lambda[j];
            let mut term = 1.0;
            let mut series = 0.0;
            for _ in 0..=order {
                series += term;
                term *= ratio;
            }
            let v = gram[(i, j)] * series;
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }

    let energy = transformed.norm_squared() / n as f64;
    Ok(SpectralCache {
        order,
        transformed,
        lambda_pow,
        kernel,
        energy,
    })
}

/// `Σₗ λᵢˡ Bₗ` for one graph frequency, given row `i` of the power table.
pub fn spectral_response(taps: &[DMatrix<f64>], powers: &[f64]) -> DMatrix<f64> {
    assert_eq!(taps.len(), powers.len(), "one power per tap");
    let mut out = DMatrix::zeros(taps[0].nrows(), taps[0].ncols());
    for (tap, &p) in taps.iter().zip(powers) {
        out += tap * p;
    }
    out
}

/// Applies each node's spectral response to its column of `codes`:
/// column `i` of the result is `(Σₗ λᵢˡ Bₗ)·codesᵢ`.
pub fn apply_response(
    taps: &[DMatrix<f64>],
    codes: &DMatrix<f64>,
    lambda_pow: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(taps[0].nrows(), codes.ncols());
    let mut scaled = codes.clone();
    for (l, tap) in taps.iter().enumerate() {
        scale_columns(codes, lambda_pow.column(l).as_slice(), &mut scaled);
        out.gemm(1.0, tap, &scaled, 1.0);
    }
    out
}

/// Transposed counterpart of [`apply_response`]: column `i` is
/// `(Σₗ λᵢˡ Bₗ)ᵀ·residualᵢ`.
pub fn apply_response_transpose(
    taps: &[DMatrix<f64>],
    residual: &DMatrix<f64>,
    lambda_pow: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(taps[0].ncols(), residual.ncols());
    let mut scaled = residual.clone();
    for (l, tap) in taps.iter().enumerate() {
        scale_columns(residual, lambda_pow.column(l).as_slice(), &mut scaled);
        out.gemm_tr(1.0, tap, &scaled, 1.0);
    }
    out
}

pub(crate) fn scale_columns(src: &DMatrix<f64>, factors: &[f64], dst: &mut DMatrix<f64>) {
    for ((s, mut d), &f) in src.column_iter().zip(dst.column_iter_mut()).zip(factors) {
        d.copy_from(&(s * f));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::eigendecompose;
    use nalgebra::dmatrix;

    fn lcg_matrix(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed.wrapping_add(0x9E3779B97F4A7C15);
        DMatrix::from_fn(r, c, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn spectrum_of(n: usize, seed: u64) -> GraphSpectrum {
        let a = lcg_matrix(n, n, seed);
        eigendecompose(&(&a + a.transpose())).unwrap()
    }

    #[test]
    fn centering_two_points() {
        let ds = center(&dmatrix![1.0, 3.0]).unwrap();
        assert_eq!(ds.mean()[0], 2.0);
        assert_eq!(ds.centered(), &dmatrix![-1.0, 1.0]);
    }

    #[test]
    fn centering_identical_columns_gives_zero() {
        let x = dmatrix![1.5, 1.5, 1.5; -2.0, -2.0, -2.0];
        assert_eq!(center(&x).unwrap().centered(), &DMatrix::zeros(2, 3));
    }

    #[test]
    fn centered_rows_sum_to_zero() {
        let ds = center(&lcg_matrix(4, 7, 1)).unwrap();
        for row in ds.centered().row_iter() {
            assert!(row.sum().abs() <= 1e-12);
        }
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(center(&DMatrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn gft_identity_basis() {
        let spec = eigendecompose(&DMatrix::zeros(3, 3)).unwrap();
        let x = lcg_matrix(2, 3, 5);
        assert_eq!(gft(&x, &spec).unwrap(), x);
        assert_eq!(igft(&x, &spec).unwrap(), x);
    }

    #[test]
    fn gft_two_node_path() {
        let spec = eigendecompose(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let xt = gft(&dmatrix![1.0, 0.0], &spec).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((xt[(0, 0)] - h).abs() < 1e-15);
        assert!((xt[(0, 1)] - h).abs() < 1e-15);
    }

    #[test]
    fn gft_is_unitary() {
        let spec = spectrum_of(5, 2);
        let x = lcg_matrix(3, 5, 9);
        let xt = gft(&x, &spec).unwrap();
        assert!((xt.norm() - x.norm()).abs() <= 1e-12 * x.norm());
        let back = igft(&xt, &spec).unwrap();
        assert!((back - &x).norm() <= 1e-10 * x.norm());
    }

    #[test]
    fn gft_rejects_wrong_width() {
        let spec = spectrum_of(4, 1);
        assert!(matches!(
            gft(&lcg_matrix(2, 3, 0), &spec),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn order_zero_kernel_is_gram() {
        let spec = spectrum_of(4, 3);
        let x = lcg_matrix(3, 4, 4);
        let cache = build_cache(&x, &spec, 0).unwrap();
        let xt = cache.transformed();
        assert_eq!(cache.kernel(), &(xt.transpose() * xt));
    }

    #[test]
    fn kernel_vanishes_for_opposite_eigenvalues_at_order_one() {
        let spec = eigendecompose(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        let cache = build_cache(&dmatrix![1.0, 2.0; 0.5, -1.0], &spec, 1).unwrap();
        assert_eq!(cache.kernel()[(0, 1)], 0.0);
        assert_eq!(cache.kernel()[(1, 0)], 0.0);
    }

    #[test]
    fn power_table_recurrence() {
        let spec = spectrum_of(5, 7);
        let cache = build_cache(&lcg_matrix(2, 5, 1), &spec, 3).unwrap();
        let p = cache.lambda_pow();
        for i in 0..5 {
            assert_eq!(p[(i, 0)], 1.0);
            for l in 0..3 {
                assert_eq!(p[(i, l + 1)], p[(i, l)] * spec.eigenvalues()[i]);
            }
        }
    }

    #[test]
    fn kernel_overflow_is_reported() {
        let s = dmatrix![0.0, 1e40; 1e40, 0.0];
        let spec = eigendecompose(&s).unwrap();
        assert!(matches!(
            build_cache(&dmatrix![1.0, 2.0], &spec, 4),
            Err(Error::SpectralOverflow { .. })
        ));
    }

    #[test]
    fn energy_is_mean_squared_norm() {
        let spec = spectrum_of(4, 8);
        let x = lcg_matrix(3, 4, 8);
        let cache = build_cache(&x, &spec, 1).unwrap();
        assert!((cache.energy() - x.norm_squared() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_response_cases() {
        let b0 = DMatrix::<f64>::identity(3, 2);
        let b1 = DMatrix::<f64>::identity(3, 2);
        assert_eq!(spectral_response(std::slice::from_ref(&b0), &[1.0]), b0);
        assert_eq!(
            spectral_response(&[b0.clone(), b1.clone()], &[1.0, 2.0]),
            &b0 + &b1 * 2.0
        );
        let r = lcg_matrix(3, 2, 3);
        assert_eq!(
            spectral_response(&[b0.clone(), r.clone(), r], &[1.0, 0.0, 0.0]),
            b0
        );
    }

    #[test]
    fn apply_response_matches_per_node_loop() {
        let spec = spectrum_of(5, 4);
        let cache = build_cache(&lcg_matrix(3, 5, 2), &spec, 2).unwrap();
        let taps: Vec<_> = (0..3).map(|l| lcg_matrix(3, 2, 10 + l)).collect();
        let codes = lcg_matrix(2, 5, 77);
        let fast = apply_response(&taps, &codes, cache.lambda_pow());
        let fast_t = apply_response_transpose(&taps, &fast, cache.lambda_pow());
        for i in 0..5 {
            let row: Vec<f64> = cache.lambda_pow().row(i).iter().copied().collect();
            let resp = spectral_response(&taps, &row);
            let col = &resp * codes.column(i);
            assert!((fast.column(i) - &col).norm() < 1e-12);
            let back = resp.transpose() * fast.column(i);
            assert!((fast_t.column(i) - back).norm() < 1e-12);
        }
    }
}
