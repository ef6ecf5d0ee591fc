//! Repeated-trial sweep on synthetic digits, written out as CSV and SVG.
//!
//! ```text
//! cargo run --example sweep_report [out_dir]
//! ```

use gfred::harness::{emit_csv, emit_svg, run_sweep, ExperimentConfig};
use gfred::SimilarityConfig;

fn main() -> gfred::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().display().to_string());
    let cfg = ExperimentConfig {
        classes_to_pick: 4,
        images_per_class: 10,
        trials: 5,
        k_list: vec![5, 10, 20],
        l_list: vec![0, 1, 2],
        similarity: SimilarityConfig::cosine(12),
        synthetic_pool: 30,
        ..ExperimentConfig::default()
    };
    let report = run_sweep(&cfg)?;

    println!(
        "{:>4} {:>3} {:>14} {:>14} {:>9}",
        "k", "L", "mean mse", "pca mse", "gain %"
    );
    for a in &report.aggregates {
        println!(
            "{:>4} {:>3} {:>14.6} {:>14.6} {:>9.2}",
            a.k,
            a.order,
            a.mean_final,
            a.mean_pca,
            100.0 * (1.0 - a.mean_final / a.mean_pca)
        );
    }
    for f in &report.failures {
        eprintln!("trial {} k {} L {}: {}", f.trial, f.k, f.order, f.message);
    }

    let dir = std::path::Path::new(&out);
    emit_csv(&report, dir.join("sweep.csv"))?;
    emit_svg(&report, dir.join("sweep.svg"))?;
    println!("wrote {}/sweep.csv and sweep.svg", dir.display());
    Ok(())
}
