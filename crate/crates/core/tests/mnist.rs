//! Runs only when `GFRED_MNIST_IMAGES` names an IDX image file whose label
//! file sits beside it under the usual name.

use gfred::harness::{load_dataset, run_sweep_on, DatasetFormat, ExperimentConfig};
use gfred::SimilarityConfig;

#[test]
fn desk_scale_mnist_trend() {
    let Some(path) = std::env::var_os("GFRED_MNIST_IMAGES") else {
        eprintln!("GFRED_MNIST_IMAGES unset; skipping");
        return;
    };
    let cfg = ExperimentConfig {
        dataset_path: Some(path.into()),
        dataset_format: DatasetFormat::Idx,
        classes_to_pick: 4,
        images_per_class: 10,
        trials: 5,
        k_list: vec![5, 10, 20],
        l_list: vec![0, 1, 2],
        similarity: SimilarityConfig::cosine(12),
        ..ExperimentConfig::default()
    };
    let data = load_dataset(&cfg).unwrap();
    assert_eq!(data.images.nrows(), 784);
    let report = run_sweep_on(&data.images, &data.labels, &cfg).unwrap();
    assert!(report.failures.is_empty());
    for &k in &cfg.k_list {
        let pca = report.aggregate(k, 0).unwrap().mean_pca;
        for order in [1, 2] {
            let a = report.aggregate(k, order).unwrap();
            println!("k {k} L {order}: {:.5} vs PCA {pca:.5}", a.mean_final);
            assert!(a.mean_final <= pca);
        }
    }
}
