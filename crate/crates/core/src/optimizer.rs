//! Block gradient descent on the reconstruction filter taps `B₀…B_L` and the
//! reducing coefficients `G`, in the graph spectral domain.
//!
//! The reducing filter is parameterized as `C = G·Z̃ᵀ`, so the spectral code of
//! node `i` is `ỹᵢ = G·K_z(:,i)` and its reconstruction is `B̃ᵢ·ỹᵢ` with
//! `B̃ᵢ = Σₗ λᵢˡ Bₗ`. The objective is
//!
//! ```text
//! f(B, G) = n⁻¹ Σᵢ ‖x̃ᵢ − B̃ᵢ G K_z(:,i)‖²
//! ```
//!
//! which is quadratic in `B` for fixed `G` and quadratic in `G` for fixed `B`.
//! Each iteration takes an exact line-search step along `−∇_B f`, then along
//! `−∇_G f` evaluated at the updated taps.
//!
//! Gradients here are the true gradients of `f`, factor 2 included. Because
//! the step sizes come from exact line search the iterates do not depend on
//! that scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_dims, Error, Result};
use crate::graph::GraphSpectrum;
use crate::pca::pca_fit;
use crate::spectral::{
    apply_response, apply_response_transpose, build_cache, scale_columns, CenteredDataset,
    SpectralCache,
};

/// Quadratic coefficients at or below this are treated as a vanishing
/// search direction.
pub const DEGENERATE_CURVATURE: f64 = 1e-300;

/// Relative ridge added to `K_z` when solving for `G`.
pub const RIDGE_FACTOR: f64 = 1e-10;

pub const DEFAULT_MAX_ITERS: usize = 500;

/// Relative stopping threshold used when [`FitOptions::epsilon`] is unset.
pub const DEFAULT_RELATIVE_EPSILON: f64 = 1e-6;

/// Current values of the taps `B₀…B_L` (each `D × k`) and `G` (`k × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub taps: Vec<DMatrix<f64>>,
    pub coefficients: DMatrix<f64>,
}

impl FilterBank {
    pub fn zeros(dim: usize, k: usize, n: usize, order: usize) -> Self {
        Self {
            taps: vec![DMatrix::zeros(dim, k); order + 1],
            coefficients: DMatrix::zeros(k, n),
        }
    }

    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn k(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Finds `G` with `G·K_z ≈ codes` (ridge least squares) and pairs it with
    /// `taps`. Any `codes` whose rows lie in the row space of `K_z` are
    /// reproduced up to the ridge.
    pub fn from_codes(
        taps: Vec<DMatrix<f64>>,
        codes: &DMatrix<f64>,
        cache: &SpectralCache,
    ) -> Result<Self> {
        ensure_dims(taps.len() == cache.order() + 1, || {
            format!(
                "{} taps supplied for filter order {}",
                taps.len(),
                cache.order()
            )
        })?;
        ensure_dims(codes.ncols() == cache.n(), || {
            format!(
                "codes have {} columns, graph has {} nodes",
                codes.ncols(),
                cache.n()
            )
        })?;
        let coefficients = solve_ridge(cache.kernel(), codes);
        Ok(Self { taps, coefficients })
    }

    fn check(&self, cache: &SpectralCache) -> Result<()> {
        ensure_dims(self.taps.len() == cache.order() + 1, || {
            format!(
                "filter bank has {} taps, cache was built for order {}",
                self.taps.len(),
                cache.order()
            )
        })?;
        let (d, k) = self.taps[0].shape();
        ensure_dims(
            d == cache.dim() && self.taps.iter().all(|t| t.shape() == (d, k)),
            || format!("taps must all be {}x{k}", cache.dim()),
        )?;
        ensure_dims(self.coefficients.shape() == (k, cache.n()), || {
            format!(
                "G is {:?}, expected {k}x{}",
                self.coefficients.shape(),
                cache.n()
            )
        })
    }

    fn frobenius_distance(&self, other: &FilterBank) -> (f64, f64) {
        let db = self
            .taps
            .iter()
            .zip(&other.taps)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt();
        let dg = (&self.coefficients - &other.coefficients).norm();
        (db, dg)
    }

    fn norms(&self) -> (f64, f64) {
        (stack_norm(&self.taps), self.coefficients.norm())
    }
}

/// A trained filter bank bound to the graph basis it was fitted in.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterModel {
    bank: FilterBank,
    mean: DVector<f64>,
    fingerprint: u32,
}

impl FilterModel {
    pub fn new(bank: FilterBank, mean: DVector<f64>, fingerprint: u32) -> Result<Self> {
        ensure_dims(!bank.taps.is_empty(), || "filter bank has no taps".into())?;
        ensure_dims(bank.taps[0].nrows() == mean.len(), || {
            format!(
                "taps have {} rows, mean has {}",
                bank.taps[0].nrows(),
                mean.len()
            )
        })?;
        Ok(Self {
            bank,
            mean,
            fingerprint,
        })
    }

    pub fn order(&self) -> usize {
        self.bank.order()
    }

    pub fn k(&self) -> usize {
        self.bank.k()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n(&self) -> usize {
        self.bank.coefficients.ncols()
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    /// Reconstruction taps `B₀…B_L`.
    pub fn taps(&self) -> &[DMatrix<f64>] {
        &self.bank.taps
    }

    /// `G`, `k × n`.
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.bank.coefficients
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn fingerprint(&self) -> u32 {
        self.fingerprint
    }

    pub fn check_spectrum(&self, spectrum: &GraphSpectrum) -> Result<()> {
        let found = spectrum.fingerprint();
        if found != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.fingerprint,
                found,
            });
        }
        Ok(())
    }

    /// Materializes the reducing taps `C₀…C_L` (each `k × D`) from
    /// `C = G·Z̃ᵀ`, i.e. `Cₗ = G·diag(λˡ)·X̃ᵀ`.
    pub fn reducing_taps(&self, cache: &SpectralCache) -> Result<Vec<DMatrix<f64>>> {
        self.bank.check(cache)?;
        let xt = cache.transformed();
        let g = &self.bank.coefficients;
        let mut scaled = g.clone();
        Ok((0..=self.order())
            .map(|l| {
                scale_columns(g, cache.lambda_pow().column(l).as_slice(), &mut scaled);
                &scaled * xt.transpose()
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Stop once `‖ΔG‖_F + ‖ΔB‖_F` falls below this. `None` picks
    /// `1e-6·(‖B⁰‖_F + ‖G⁰‖_F)`.
    pub epsilon: Option<f64>,
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            epsilon: None,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// Reconstruction in the spectral domain and its residual.
struct Evaluation {
    codes: DMatrix<f64>,
    reconstruction: DMatrix<f64>,
    residual: DMatrix<f64>,
}

impl Evaluation {
    fn new(cache: &SpectralCache, bank: &FilterBank) -> Self {
        let codes = &bank.coefficients * cache.kernel();
        let reconstruction = apply_response(&bank.taps, &codes, cache.lambda_pow());
        let residual = cache.transformed() - &reconstruction;
        Self {
            codes,
            reconstruction,
            residual,
        }
    }

    fn objective(&self) -> f64 {
        self.residual.norm_squared() / self.residual.ncols() as f64
    }
}

/// `n⁻¹ Σᵢ ‖x̃ᵢ − B̃ᵢ G K_z(:,i)‖²`.
pub fn objective(cache: &SpectralCache, bank: &FilterBank) -> Result<f64> {
    bank.check(cache)?;
    Ok(Evaluation::new(cache, bank).objective())
}

fn grad_taps(cache: &SpectralCache, eval: &Evaluation, order: usize) -> Vec<DMatrix<f64>> {
    let n = cache.n() as f64;
    let mut scaled = eval.residual.clone();
    (0..=order)
        .map(|l| {
            scale_columns(
                &eval.residual,
                cache.lambda_pow().column(l).as_slice(),
                &mut scaled,
            );
            &scaled * eval.codes.transpose() * (-2.0 / n)
        })
        .collect()
}

fn grad_coefficients(cache: &SpectralCache, bank: &FilterBank, eval: &Evaluation) -> DMatrix<f64> {
    let n = cache.n() as f64;
    let back = apply_response_transpose(&bank.taps, &eval.residual, cache.lambda_pow());
    back * cache.kernel() * (-2.0 / n)
}

/// `∂f/∂Bₗ = −2n⁻¹ Σᵢ λᵢˡ (x̃ᵢ − B̃ᵢ G K_z(:,i)) K_z(:,i)ᵀ Gᵀ` for every tap.
pub fn grad_b(cache: &SpectralCache, bank: &FilterBank) -> Result<Vec<DMatrix<f64>>> {
    bank.check(cache)?;
    let eval = Evaluation::new(cache, bank);
    Ok(grad_taps(cache, &eval, bank.order()))
}

/// `∂f/∂G = −2n⁻¹ Σᵢ B̃ᵢᵀ (x̃ᵢ − B̃ᵢ G K_z(:,i)) K_z(:,i)ᵀ`.
pub fn grad_g(cache: &SpectralCache, bank: &FilterBank) -> Result<DMatrix<f64>> {
    bank.check(cache)?;
    let eval = Evaluation::new(cache, bank);
    Ok(grad_coefficients(cache, bank, &eval))
}

/// The objective along a search ray is `f(c) = f(0) − 2c·slope + c²·third`.
/// `first` pairs the data with the image of the direction, `second` pairs the
/// current reconstruction with it, and `third` is its squared norm, all
/// averaged over nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCoefficients {
    pub first: f64,
    pub second: f64,
    pub third: f64,
    /// `second − first`, evaluated directly from the residual to avoid
    /// cancellation near stationarity.
    pub slope: f64,
}

impl LineCoefficients {
    fn from_image(eval: &Evaluation, cache: &SpectralCache, image: &DMatrix<f64>) -> Self {
        let n = cache.n() as f64;
        Self {
            first: cache.transformed().dot(image) / n,
            second: eval.reconstruction.dot(image) / n,
            third: image.norm_squared() / n,
            slope: -eval.residual.dot(image) / n,
        }
    }

    /// Exact minimizer `(second − first)/third` of the quadratic along the ray.
    pub fn step(&self) -> Result<f64> {
        if !(self.third > DEGENERATE_CURVATURE) {
            return Err(Error::DegenerateDirection(self.third));
        }
        Ok(self.slope / self.third)
    }
}

/// Line-search sums for the ray `B − c·direction`.
pub fn line_coefficients_b(
    cache: &SpectralCache,
    bank: &FilterBank,
    direction: &[DMatrix<f64>],
) -> Result<LineCoefficients> {
    bank.check(cache)?;
    ensure_dims(direction.len() == bank.taps.len(), || {
        "direction must have one entry per tap".into()
    })?;
    let eval = Evaluation::new(cache, bank);
    Ok(b_coefficients(cache, &eval, direction))
}

fn b_coefficients(
    cache: &SpectralCache,
    eval: &Evaluation,
    direction: &[DMatrix<f64>],
) -> LineCoefficients {
    let image = apply_response(direction, &eval.codes, cache.lambda_pow());
    LineCoefficients::from_image(eval, cache, &image)
}

/// Line-search sums for the ray `G − c·direction` with the taps held fixed.
pub fn line_coefficients_g(
    cache: &SpectralCache,
    bank: &FilterBank,
    direction: &DMatrix<f64>,
) -> Result<LineCoefficients> {
    bank.check(cache)?;
    ensure_dims(direction.shape() == bank.coefficients.shape(), || {
        "direction must match G".into()
    })?;
    let eval = Evaluation::new(cache, bank);
    Ok(g_coefficients(cache, bank, &eval, direction))
}

fn g_coefficients(
    cache: &SpectralCache,
    bank: &FilterBank,
    eval: &Evaluation,
    direction: &DMatrix<f64>,
) -> LineCoefficients {
    let dcodes = direction * cache.kernel();
    let image = apply_response(&bank.taps, &dcodes, cache.lambda_pow());
    LineCoefficients::from_image(eval, cache, &image)
}

/// Exact line-search step for the taps.
pub fn step_size_b(
    cache: &SpectralCache,
    bank: &FilterBank,
    direction: &[DMatrix<f64>],
) -> Result<f64> {
    line_coefficients_b(cache, bank, direction)?.step()
}

/// Exact line-search step for `G`.
pub fn step_size_g(
    cache: &SpectralCache,
    bank: &FilterBank,
    direction: &DMatrix<f64>,
) -> Result<f64> {
    line_coefficients_g(cache, bank, direction)?.step()
}

/// PCA starting point: tap 0 is the principal basis, higher taps are zero,
/// and `G` reproduces the PCA scores `Ūᵀ X̃` as spectral codes.
///
/// At order 0 this is `G = ŪᵀX̃(X̃ᵀX̃ + μI)⁻¹`; at higher orders the same codes
/// are matched through `K_z`, so every order starts from the PCA error.
pub fn init(ds: &CenteredDataset, cache: &SpectralCache, k: usize) -> Result<FilterBank> {
    ensure_dims(ds.dim() == cache.dim() && ds.len() == cache.n(), || {
        "dataset does not match the spectral cache".into()
    })?;
    let pca = pca_fit(ds, k)?;
    let mut taps = vec![DMatrix::zeros(ds.dim(), k); cache.order() + 1];
    taps[0] = pca.basis().clone();
    let codes = pca.basis().tr_mul(cache.transformed());
    FilterBank::from_codes(taps, &codes, cache)
}

/// Starting point for a higher order from a solution at a lower one: the
/// extra taps are zero and `G` is re-solved so the spectral codes are kept.
pub fn warm_start(
    previous: &FilterBank,
    previous_cache: &SpectralCache,
    cache: &SpectralCache,
) -> Result<FilterBank> {
    previous.check(previous_cache)?;
    ensure_dims(cache.order() >= previous.order(), || {
        "warm start can only raise the filter order".into()
    })?;
    let codes = &previous.coefficients * previous_cache.kernel();
    let mut taps = previous.taps.clone();
    let (d, k) = taps[0].shape();
    taps.resize(cache.order() + 1, DMatrix::zeros(d, k));
    FilterBank::from_codes(taps, &codes, cache)
}

/// `‖∇_B f‖_F + ‖∇_G f‖_F`; zero exactly at first-order stationary points.
pub fn stationarity_residual(model: &FilterModel, cache: &SpectralCache) -> Result<f64> {
    let bank = model.bank();
    bank.check(cache)?;
    let eval = Evaluation::new(cache, bank);
    let gb = grad_taps(cache, &eval, bank.order());
    let gg = grad_coefficients(cache, bank, &eval);
    Ok(stack_norm(&gb) + gg.norm())
}

/// Objective values around one iteration. `candidate_*` are the values the
/// exact steps produced before the monotonicity guard; a candidate above the
/// preceding value is rejected and the block left unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iteration: usize,
    pub before: f64,
    pub step_b: f64,
    pub candidate_after_b: f64,
    pub after_b: f64,
    pub step_g: f64,
    pub candidate_after_g: f64,
    pub after_g: f64,
    pub change: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub bank: FilterBank,
    /// Objective at the start and after every completed iteration.
    pub trace: Vec<f64>,
    pub steps: Vec<StepReport>,
    pub iterations: usize,
    pub converged: bool,
    pub rejected_steps: usize,
}

impl FitOutcome {
    pub fn initial_objective(&self) -> f64 {
        self.trace[0]
    }

    pub fn final_objective(&self) -> f64 {
        *self.trace.last().expect("trace holds the initial value")
    }
}

/// Iteration state for one fit.
#[derive(Debug)]
pub struct OptimizerState<'a> {
    cache: &'a SpectralCache,
    bank: FilterBank,
    current: f64,
    iteration: usize,
    epsilon: f64,
    max_iters: usize,
    trace: Vec<f64>,
    steps: Vec<StepReport>,
    rejected_steps: usize,
}

impl<'a> OptimizerState<'a> {
    pub fn new(cache: &'a SpectralCache, start: FilterBank, opts: &FitOptions) -> Result<Self> {
        start.check(cache)?;
        let epsilon = match opts.epsilon {
            Some(e) if e > 0.0 => e,
            Some(e) => {
                return Err(Error::InvalidArgument(format!(
                    "epsilon must be positive, got {e}"
                )))
            }
            None => {
                let (nb, ng) = start.norms();
                DEFAULT_RELATIVE_EPSILON * (nb + ng)
            }
        };
        let current = objective(cache, &start)?;
        if !current.is_finite() {
            return Err(Error::NonFiniteValue {
                what: "initial objective",
                iteration: 0,
            });
        }
        Ok(Self {
            cache,
            bank: start,
            current,
            iteration: 0,
            epsilon,
            max_iters: opts.max_iters,
            trace: vec![current],
            steps: Vec::new(),
            rejected_steps: 0,
        })
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn objective(&self) -> f64 {
        self.current
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// One B-update followed by one G-update at the new taps.
    pub fn step(&mut self) -> Result<StepReport> {
        let cache = self.cache;
        let before = self.current;
        let previous = self.bank.clone();

        let eval = Evaluation::new(cache, &self.bank);
        let direction_b = grad_taps(cache, &eval, self.bank.order());
        let step_b = usable_step(b_coefficients(cache, &eval, &direction_b).step());
        let mut candidate_after_b = before;
        if step_b > 0.0 {
            let mut trial = self.bank.clone();
            for (tap, g) in trial.taps.iter_mut().zip(&direction_b) {
                *tap -= g * step_b;
            }
            candidate_after_b = self.accept(trial, "taps")?;
        }
        let after_b = self.current;

        let eval = Evaluation::new(cache, &self.bank);
        let direction_g = grad_coefficients(cache, &self.bank, &eval);
        let step_g = usable_step(g_coefficients(cache, &self.bank, &eval, &direction_g).step());
        let mut candidate_after_g = after_b;
        if step_g > 0.0 {
            let mut trial = self.bank.clone();
            trial.coefficients -= &direction_g * step_g;
            candidate_after_g = self.accept(trial, "coefficients")?;
        }

        self.iteration += 1;
        self.trace.push(self.current);
        let (db, dg) = self.bank.frobenius_distance(&previous);
        let report = StepReport {
            iteration: self.iteration,
            before,
            step_b,
            candidate_after_b,
            after_b,
            step_g,
            candidate_after_g,
            after_g: self.current,
            change: db + dg,
        };
        self.steps.push(report);
        Ok(report)
    }

    fn accept(&mut self, trial: FilterBank, what: &'static str) -> Result<f64> {
        let value = Evaluation::new(self.cache, &trial).objective();
        if !value.is_finite() || trial.taps.iter().any(|t| !t.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFiniteValue {
                what,
                iteration: self.iteration + 1,
            });
        }
        if value <= self.current {
            self.bank = trial;
            self.current = value;
        } else {
            self.rejected_steps += 1;
        }
        Ok(value)
    }

    /// Iterates until the change between successive iterates drops below
    /// epsilon or the iteration cap is reached.
    pub fn run(mut self) -> Result<FitOutcome> {
        let mut converged = false;
        while self.iteration < self.max_iters {
            let report = self.step()?;
            if report.change < self.epsilon {
                converged = true;
                break;
            }
        }
        Ok(FitOutcome {
            bank: self.bank,
            trace: self.trace,
            steps: self.steps,
            iterations: self.iteration,
            converged,
            rejected_steps: self.rejected_steps,
        })
    }
}

/// Nonpositive or undefined steps only arise at numerical stationarity.
fn usable_step(step: Result<f64>) -> f64 {
    match step {
        Ok(c) if c.is_finite() && c > 0.0 => c,
        _ => 0.0,
    }
}

/// Runs the optimizer from `start` on a prepared cache.
pub fn fit_from(cache: &SpectralCache, start: FilterBank, opts: &FitOptions) -> Result<FitOutcome> {
    OptimizerState::new(cache, start, opts)?.run()
}

/// Full fit
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: FilterModel,
    pub cache: SpectralCache,
    pub outcome: FitOutcome,
}

/// Builds the spectral cache, initializes from PCA, and descends.
pub fn fit(
    ds: &CenteredDataset,
    spectrum: &GraphSpectrum,
    k: usize,
    order: usize,
    opts: &FitOptions,
) -> Result<Fit> {
    let cache = build_cache(ds.centered(), spectrum, order)?;
    let start = init(ds, &cache, k)?;
    let outcome = fit_from(&cache, start, opts)?;
    let model = FilterModel::new(
        outcome.bank.clone(),
        ds.mean().clone(),
        spectrum.fingerprint(),
    )?;
    Ok(Fit {
        model,
        cache,
        outcome,
    })
}

fn stack_norm(stack: &[DMatrix<f64>]) -> f64 {
    stack.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

/// Solves `G·K = codes` for symmetric positive semidefinite `K` with a ridge
/// of `1e-10·tr(K)/n`, growing the ridge if the factorization still fails.
fn solve_ridge(kernel: &DMatrix<f64>, codes: &DMatrix<f64>) -> DMatrix<f64> {
    let n = kernel.nrows();
    let trace = kernel.trace();
    if !(trace > 0.0) {
        return DMatrix::zeros(codes.nrows(), n);
    }
    let mut mu = RIDGE_FACTOR * trace / n as f64;
    loop {
        let mut regularized = kernel.clone();
        for i in 0..n {
            regularized[(i, i)] += mu;
        }
        if let Some(chol) = regularized.cholesky() {
            return chol.solve(&codes.transpose()).transpose();
        }
        mu *= 10.0;
    }
}
