//! Similarity graph and spectrum for a handful of synthetic digits.

use gfred::harness::synthetic_digits;
use gfred::{build_graph, Kernel, SimilarityConfig, Symmetrization};

fn main() -> gfred::Result<()> {
    let digits = synthetic_digits(3, 8, 11);
    for (name, cfg) in [
        ("cosine, union", SimilarityConfig::cosine(5)),
        (
            "gaussian, mutual",
            SimilarityConfig {
                kernel: Kernel::Gaussian,
                alpha: 0.01,
                knn: 5,
                symmetrization: Symmetrization::Mutual,
                normalize_spectrum: true,
            },
        ),
    ] {
        let spectrum = build_graph(&digits.images, &cfg)?;
        let s = spectrum.adjacency();
        let edges = s.iter().filter(|&&v| v != 0.0).count() / 2;

        // fraction of edge weight that stays inside a class
        let mut inside = 0.0;
        for i in 0..s.nrows() {
            for j in 0..s.ncols() {
                if digits.labels[i] == digits.labels[j] {
                    inside += s[(i, j)];
                }
            }
        }
        let lambda = spectrum.eigenvalues();
        println!(
            "{name}: {edges} edges, {:.1}% of weight within classes",
            100.0 * inside / s.sum()
        );
        println!(
            "  λ = [{:.4}, {:.4}, {:.4}, …, {:.4}]",
            lambda[0],
            lambda[1],
            lambda[2],
            lambda[lambda.len() - 1]
        );
        println!("  fingerprint {:08x}", spectrum.fingerprint());
    }
    Ok(())
}
