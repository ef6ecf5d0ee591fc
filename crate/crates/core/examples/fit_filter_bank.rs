//! Fits graph-filter banks of increasing order and traces the descent.

use gfred::harness::synthetic_digits;
use gfred::optimizer::{stationarity_residual, OptimizerState};
use gfred::spectral::build_cache;
use gfred::{build_graph, center, fit, optimizer, pca_fit, pca_mse, FitOptions, SimilarityConfig};

fn main() -> gfred::Result<()> {
    let digits = synthetic_digits(4, 10, 2);
    let ds = center(&digits.images)?;
    let spectrum = build_graph(&digits.images, &SimilarityConfig::cosine(12))?;
    let k = 10;
    let pca = pca_mse(&ds, &pca_fit(&ds, k)?)?;
    println!("PCA, k = {k}: {pca:.5}");

    let opts = FitOptions::default();
    for order in 0..=2 {
        let fitted = fit(&ds, &spectrum, k, order, &opts)?;
        let o = &fitted.outcome;
        println!(
            "L = {order}: {:.5} -> {:.5} in {} iterations (converged: {}, residual {:.2e})",
            o.initial_objective(),
            o.final_objective(),
            o.iterations,
            o.converged,
            stationarity_residual(&fitted.model, &fitted.cache)?
        );
    }

    // the same descent one block step at a time
    let cache = build_cache(ds.centered(), &spectrum, 1)?;
    let mut state = OptimizerState::new(&cache, optimizer::init(&ds, &cache, k)?, &opts)?;
    for _ in 0..5 {
        let r = state.step()?;
        println!(
            "step {}: B step {:.3e} -> {:.5}, G step {:.3e} -> {:.5}",
            r.iteration, r.step_b, r.after_b, r.step_g, r.after_g
        );
    }
    Ok(())
}
