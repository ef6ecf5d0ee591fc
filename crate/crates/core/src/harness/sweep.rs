//! Repeated-trial sweeps over reduced dimension `k` and filter order `L`.

use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{DatasetFormat, ExperimentConfig};
use super::data::{companion_labels_path, load_idx, load_labeled_csv, LabeledImages};
use super::sampling::sample_subset;
use super::synthetic::synthetic_digits;
use crate::error::{Error, Result};
use crate::graph::build_graph;
use crate::optimizer::{fit_from, init, warm_start, FilterBank, FitOptions, FitOutcome};
use crate::pca::{pca_fit, pca_mse};
use crate::spectral::{build_cache, center, CenteredDataset, SpectralCache};

/// One `(trial, k, L)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub trial: usize,
    pub k: usize,
    pub order: usize,
    pub iterations: usize,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub pca_mse: f64,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub trial: usize,
    pub k: usize,
    pub order: usize,
    pub message: String,
}

/// Mean and sample standard deviation over trials for one `(k, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub k: usize,
    pub order: usize,
    pub trials: usize,
    pub mean_final: f64,
    pub std_final: f64,
    pub mean_initial: f64,
    pub mean_pca: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub aggregates: Vec<Aggregate>,
    pub failures: Vec<CellFailure>,
}

impl SweepReport {
    /// Sorts rows by `(trial, k, L)` and recomputes the aggregates.
    pub fn from_rows(mut rows: Vec<SweepRow>, mut failures: Vec<CellFailure>) -> Self {
        rows.sort_by_key(|r| (r.trial, r.k, r.order));
        failures.sort_by_key(|f| (f.trial, f.k, f.order));

        let mut keys: Vec<(usize, usize)> = rows.iter().map(|r| (r.k, r.order)).collect();
        keys.sort_unstable();
        keys.dedup();
        let aggregates = keys
            .into_iter()
            .map(|(k, order)| {
                let cell: Vec<&SweepRow> = rows
                    .iter()
                    .filter(|r| r.k == k && r.order == order)
                    .collect();
                let m = cell.len() as f64;
                let mean = |f: fn(&SweepRow) -> f64| cell.iter().map(|r| f(r)).sum::<f64>() / m;
                let mean_final = mean(|r| r.final_mse);
                let var = if cell.len() > 1 {
                    cell.iter()
                        .map(|r| (r.final_mse - mean_final).powi(2))
                        .sum::<f64>()
                        / (m - 1.0)
                } else {
                    0.0
                };
                Aggregate {
                    k,
                    order,
                    trials: cell.len(),
                    mean_final,
                    std_final: var.sqrt(),
                    mean_initial: mean(|r| r.initial_mse),
                    mean_pca: mean(|r| r.pca_mse),
                }
            })
            .collect();
        Self {
            rows,
            aggregates,
            failures,
        }
    }

    pub fn aggregate(&self, k: usize, order: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.k == k && a.order == order)
    }
}

/// Loads the image pool named by the config.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<LabeledImages> {
    let path = || {
        cfg.dataset_path
            .clone()
            .ok_or_else(|| Error::Config("dataset-path is required".into()))
    };
    match cfg.dataset_format {
        DatasetFormat::Synthetic => Ok(synthetic_digits(10, cfg.synthetic_pool, cfg.seed)),
        DatasetFormat::Idx => {
            let images = path()?;
            let labels = cfg
                .labels_path
                .clone()
                .or_else(|| companion_labels_path(&images))
                .ok_or_else(|| Error::Config("labels-path is required for idx data".into()))?;
            load_idx(images, labels)
        }
        DatasetFormat::CsvMatrix => {
            let (images, labels) = load_labeled_csv(path()?)?;
            Ok(LabeledImages {
                rows: images.nrows(),
                cols: 1,
                images,
                labels,
            })
        }
    }
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    run_sweep_on(&data.images, &data.labels, cfg)
}

/// Runs every trial on an in-memory pool. Trials run on `cfg.threads`
/// workers when set; rows are merged in `(trial, k, L)` order either way.
pub fn run_sweep_on(
    images: &DMatrix<f64>,
    labels: &[u32],
    cfg: &ExperimentConfig,
) -> Result<SweepReport> {
    cfg.validate()?;
    let per_trial: Vec<(Vec<SweepRow>, Vec<CellFailure>)> = match cfg.threads {
        Some(threads) if threads > 1 && cfg.trials > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| run_trial(images, labels, cfg, t))
                    .collect()
            })
        }
        _ => (0..cfg.trials)
            .map(|t| run_trial(images, labels, cfg, t))
            .collect(),
    };
    let (rows, failures): (Vec<_>, Vec<_>) = per_trial.into_iter().unzip();
    Ok(SweepReport::from_rows(
        rows.into_iter().flatten().collect(),
        failures.into_iter().flatten().collect(),
    ))
}

fn sorted_orders(cfg: &ExperimentConfig) -> Vec<usize> {
    let mut orders = cfg.l_list.clone();
    orders.sort_unstable();
    orders.dedup();
    orders
}

fn run_trial(
    images: &DMatrix<f64>,
    labels: &[u32],
    cfg: &ExperimentConfig,
    trial: usize,
) -> (Vec<SweepRow>, Vec<CellFailure>) {
    let orders = sorted_orders(cfg);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let fail_all = |failures: &mut Vec<CellFailure>, k: usize, e: &Error| {
        for &order in &orders {
            failures.push(CellFailure {
                trial,
                k,
                order,
                message: e.to_string(),
            });
        }
    };

    let prepared = (|| -> Result<_> {
        let subset = sample_subset(
            images,
            labels,
            cfg.classes_to_pick,
            cfg.images_per_class,
            cfg.seed,
            trial as u64,
        )?;
        let spectrum = build_graph(&subset.data, &cfg.similarity)?;
        let ds = center(&subset.data)?;
        let caches = orders
            .iter()
            .map(|&l| build_cache(ds.centered(), &spectrum, l))
            .collect::<Result<Vec<_>>>()?;
        Ok((ds, caches))
    })();
    let (ds, caches) = match prepared {
        Ok(p) => p,
        Err(e) => {
            for &k in &cfg.k_list {
                fail_all(&mut failures, k, &e);
            }
            return (rows, failures);
        }
    };

    let opts = FitOptions {
        epsilon: cfg.epsilon,
        max_iters: cfg.max_iters,
    };
    for &k in &cfg.k_list {
        let pca = match pca_fit(&ds, k).and_then(|m| pca_mse(&ds, &m)) {
            Ok(v) => v,
            Err(e) => {
                fail_all(&mut failures, k, &e);
                continue;
            }
        };
        let mut previous: Option<(FilterBank, &SpectralCache)> = None;
        for (cache, &order) in caches.iter().zip(&orders) {
            let started = Instant::now();
            match fit_cell(&ds, cache, k, previous.as_ref(), cfg.warm_start, &opts) {
                Ok(outcome) => {
                    let wall_time_ms = if cfg.record_timing {
                        started.elapsed().as_millis() as u64
                    } else {
                        0
                    };
                    rows.push(SweepRow {
                        trial,
                        k,
                        order,
                        iterations: outcome.iterations,
                        initial_mse: outcome.initial_objective(),
                        final_mse: outcome.final_objective(),
                        pca_mse: pca,
                        wall_time_ms,
                    });
                    previous = Some((outcome.bank, cache));
                }
                Err(e) => {
                    failures.push(CellFailure {
                        trial,
                        k,
                        order,
                        message: e.to_string(),
                    });
                    previous = None;
                }
            }
        }
    }
    (rows, failures)
}

/// Fits one cell from the PCA start and, when a lower-order solution is
/// available, from that solution too; the lower final objective wins.
fn fit_cell(
    ds: &CenteredDataset,
    cache: &SpectralCache,
    k: usize,
    previous: Option<&(FilterBank, &SpectralCache)>,
    use_warm_start: bool,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    let cold = fit_from(cache, init(ds, cache, k)?, opts)?;
    let Some((bank, prev_cache)) = previous.filter(|_| use_warm_start) else {
        return Ok(cold);
    };
    let warm = fit_from(cache, warm_start(bank, prev_cache, cache)?, opts)?;
    Ok(if warm.final_objective() < cold.final_objective() {
        warm
    } else {
        cold
    })
}
