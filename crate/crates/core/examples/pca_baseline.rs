//! PCA reconstruction error as the reduced dimension grows.

use gfred::harness::synthetic_digits;
use gfred::{center, pca_fit, pca_mse};

fn main() -> gfred::Result<()> {
    let digits = synthetic_digits(4, 10, 5);
    let ds = center(&digits.images)?;
    let total = ds.centered().norm_squared() / ds.len() as f64;
    println!("{:>3} {:>12} {:>10}", "k", "mse", "kept %");
    for k in [1, 2, 5, 10, 20, 39] {
        let model = pca_fit(&ds, k)?;
        let mse = pca_mse(&ds, &model)?;
        println!("{k:>3} {mse:>12.5} {:>10.2}", 100.0 * (1.0 - mse / total));
    }
    Ok(())
}
