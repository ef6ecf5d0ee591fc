//! Sweep on MNIST when the IDX files are available.
//!
//! ```text
//! cargo run --release --example mnist_sweep -- /path/to/train-images-idx3-ubyte [trials]
//! ```
//!
//! Without a path the example exits quietly.

use gfred::harness::{load_dataset, run_sweep_on, DatasetFormat, ExperimentConfig};

fn main() -> gfred::Result<()> {
    let mut args = std::env::args().skip(1);
    let Some(images) = args.next() else {
        eprintln!("usage: mnist_sweep <train-images-idx3-ubyte> [trials]");
        return Ok(());
    };
    let trials = args.next().and_then(|t| t.parse().ok()).unwrap_or(5);
    let cfg = ExperimentConfig {
        dataset_path: Some(images.into()),
        dataset_format: DatasetFormat::Idx,
        trials,
        k_list: vec![5, 10, 20, 30, 40],
        l_list: vec![0, 1, 2],
        ..ExperimentConfig::default()
    };
    let data = load_dataset(&cfg)?;
    let report = run_sweep_on(&data.images, &data.labels, &cfg)?;
    for a in &report.aggregates {
        println!(
            "k {:>2} L {}: {:.5} ± {:.5} (PCA {:.5})",
            a.k, a.order, a.mean_final, a.std_final, a.mean_pca
        );
    }
    Ok(())
}
