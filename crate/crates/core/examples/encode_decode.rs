//! Reduce, save to a `.gfm` file, load back, and reconstruct.

use gfred::codec::{load_model, reconstruct, reduce, save_model};
use gfred::harness::synthetic_digits;
use gfred::{build_graph, center, fit, FitOptions, SimilarityConfig};

fn main() -> gfred::Result<()> {
    let digits = synthetic_digits(4, 10, 8);
    let x = &digits.images;
    let ds = center(x)?;
    let spectrum = build_graph(x, &SimilarityConfig::cosine(12))?;
    let fitted = fit(&ds, &spectrum, 5, 1, &FitOptions::default())?;
    let reduced = reduce(&fitted.model, &ds, &spectrum, &fitted.cache)?;
    println!("reduced {:?} -> {:?}", x.shape(), reduced.codes.shape());

    let path = std::env::temp_dir().join("digits.gfm");
    save_model(&path, &fitted.model, &spectrum, &reduced)?;
    let saved = load_model(&path)?;
    let b = &saved.budget;
    println!(
        "{}: {} bytes, {} stored scalars vs {} raw and {} for PCA",
        path.display(),
        std::fs::metadata(&path)?.len(),
        b.stored_scalars,
        b.raw_scalars,
        b.pca_scalars
    );

    let rebuilt = reconstruct(&saved.model, &saved.reduced, &saved.spectrum)?;
    let mse = (x - &rebuilt).norm_squared() / x.ncols() as f64;
    println!(
        "reconstruction mse {mse:.5} (fit objective {:.5})",
        fitted.outcome.final_objective()
    );
    std::fs::remove_file(&path)?;
    Ok(())
}
