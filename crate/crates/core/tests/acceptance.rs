//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! run with `cargo test --test acceptance -- --nocapture` to see them.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gfred::codec::{
    compression_bound, kron_reconstruct, kron_reduce, load_model, reconstruct_centered,
    reconstruction_mse, reduce, save_model, StorageBudget,
};
use gfred::harness::{csv_string, run_sweep, ExperimentConfig};
use gfred::optimizer::{
    fit_from, grad_b, grad_g, objective, stationarity_residual, step_size_b, step_size_g,
};
use gfred::spectral::build_cache;
use gfred::{
    build_graph, center, fit, pca_fit, pca_mse, FilterBank, FitOptions, GraphSpectrum,
    SimilarityConfig, SpectralCache,
};

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_bank(rng: &mut ChaCha8Rng, d: usize, k: usize, n: usize, order: usize) -> FilterBank {
    FilterBank {
        taps: (0..=order).map(|_| random_matrix(rng, d, k)).collect(),
        coefficients: random_matrix(rng, k, n),
    }
}

/// Random data of size `d × n` with its cosine k-NN graph.
fn instance(rng: &mut ChaCha8Rng, d: usize, n: usize) -> (DMatrix<f64>, GraphSpectrum) {
    let x = random_matrix(rng, d, n);
    let knn = (n - 1).min(3);
    let spectrum = build_graph(&x, &SimilarityConfig::cosine(knn)).unwrap();
    (x, spectrum)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn pca_equivalence() -> Outcome {
    let mut r = rng(1);
    let (mut worst, mut worst_full, mut full_rank) = (0.0_f64, 0.0_f64, 0usize);
    let cases = 40;
    for _ in 0..cases {
        let d = r.gen_range(1..=12);
        let n = r.gen_range(3..=16);
        let k = r.gen_range(1..=4.min(d).min(n - 1));
        let (x, spectrum) = instance(&mut r, d, n);
        let ds = center(&x).unwrap();
        let fitted = fit(
            &ds,
            &spectrum,
            k,
            0,
            &FitOptions {
                epsilon: None,
                max_iters: 0,
            },
        )
        .unwrap();
        let gf = reconstruction_mse(&fitted.model, &ds, &spectrum, &fitted.cache).unwrap();
        let pca = pca_mse(&ds, &pca_fit(&ds, k).unwrap()).unwrap();
        // at full rank PCA's error is zero; measure against the data energy instead
        let energy = ds.centered().norm_squared() / n as f64;
        if pca <= 1e-12 * energy {
            full_rank += 1;
            worst_full = worst_full.max((gf - pca).abs() / energy);
        } else {
            worst = worst.max(relative(gf, pca));
        }
    }
    Outcome {
        name: "pca equivalence at L=0",
        pass: cases - full_rank >= 20 && worst <= 1e-8 && worst_full <= 1e-8,
        detail: format!(
            "{} instances, worst relative error {worst:.2e}; {full_rank} full-rank instances, worst error over energy {worst_full:.2e} (tol 1e-8)",
            cases - full_rank
        ),
    }
}

fn gradient_check() -> Outcome {
    let mut r = rng(2);
    let h = 1e-6;
    let cases = 60;
    let (mut worst_rel, mut worst_abs, mut entries) = (0.0_f64, 0.0_f64, 0usize);
    for _ in 0..cases {
        let n = r.gen_range(2..=6);
        let d = r.gen_range(1..=5);
        let k = r.gen_range(1..=3);
        let order = r.gen_range(0..=3);
        let (x, spectrum) = instance(&mut r, d, n);
        let ds = center(&x).unwrap();
        let cache = build_cache(ds.centered(), &spectrum, order).unwrap();
        let bank = random_bank(&mut r, d, k, n, order);
        let gb = grad_b(&cache, &bank).unwrap();
        let gg = grad_g(&cache, &bank).unwrap();

        let mut compare = |analytic: f64, numeric: f64| {
            entries += 1;
            if analytic.abs() < 1e-8 {
                worst_abs = worst_abs.max((analytic - numeric).abs());
            } else {
                worst_rel = worst_rel.max(relative(numeric, analytic));
            }
        };
        let central = |perturb: &dyn Fn(&mut FilterBank, f64)| {
            let (mut plus, mut minus) = (bank.clone(), bank.clone());
            perturb(&mut plus, h);
            perturb(&mut minus, -h);
            (objective(&cache, &plus).unwrap() - objective(&cache, &minus).unwrap()) / (2.0 * h)
        };
        for (l, g) in gb.iter().enumerate() {
            for (idx, &analytic) in g.iter().enumerate() {
                let fd = central(&|b, t| b.taps[l][idx] += t);
                compare(analytic, fd);
            }
        }
        for idx in 0..k * n {
            let fd = central(&|b, t| b.coefficients[idx] += t);
            compare(gg[idx], fd);
        }
    }
    Outcome {
        name: "gradient vs central differences",
        pass: worst_rel <= 1e-5 && worst_abs <= 1e-5,
        detail: format!(
            "{cases} instances, {entries} entries, worst relative {worst_rel:.2e}, worst absolute (small entries) {worst_abs:.2e} (tol 1e-5)"
        ),
    }
}

/// Index of the smallest objective on a 1001-point grid over `[0, 4c*]`.
fn scan(c_star: f64, eval: impl Fn(f64) -> f64) -> (f64, f64) {
    let cell = 4.0 * c_star / 1000.0;
    let best = (0..=1000)
        .map(|j| (j, eval(j as f64 * cell)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0;
    (best as f64 * cell, cell)
}

fn line_search() -> Outcome {
    let mut r = rng(3);
    let cases = 30;
    let mut worst_cells = 0.0_f64;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut updates = 0usize;
    for case in 0..cases {
        let n = r.gen_range(3..=8);
        let d = r.gen_range(2..=6);
        let k = r.gen_range(1..=3.min(d));
        let order = r.gen_range(0..=3);
        let (x, spectrum) = instance(&mut r, d, n);
        let ds = center(&x).unwrap();
        let cache = build_cache(ds.centered(), &spectrum, order).unwrap();
        let bank = random_bank(&mut r, d, k, n, order);

        let gb = grad_b(&cache, &bank).unwrap();
        let cb = step_size_b(&cache, &bank, &gb).unwrap();
        let (best, cell) = scan(cb, |c| {
            let mut b = bank.clone();
            for (t, g) in b.taps.iter_mut().zip(&gb) {
                *t -= g * c;
            }
            objective(&cache, &b).unwrap()
        });
        worst_cells = worst_cells.max((best - cb).abs() / cell);

        let gg = grad_g(&cache, &bank).unwrap();
        let cg = step_size_g(&cache, &bank, &gg).unwrap();
        let (best, cell) = scan(cg, |c| {
            let mut b = bank.clone();
            b.coefficients -= &gg * c;
            objective(&cache, &b).unwrap()
        });
        worst_cells = worst_cells.max((best - cg).abs() / cell);

        // every raw update of a full run, from a random start and from PCA
        let starts = if case % 2 == 0 {
            vec![bank.clone()]
        } else {
            vec![
                bank.clone(),
                gfred::optimizer::init(&ds, &cache, k).unwrap(),
            ]
        };
        for start in starts {
            let run = fit_from(
                &cache,
                start,
                &FitOptions {
                    epsilon: None,
                    max_iters: 200,
                },
            )
            .unwrap();
            for s in &run.steps {
                worst_rise = worst_rise
                    .max(s.candidate_after_b - s.before)
                    .max(s.candidate_after_g - s.after_b);
                updates += 2;
            }
            for w in run.trace.windows(2) {
                worst_rise = worst_rise.max(w[1] - w[0]);
            }
        }
    }
    Outcome {
        name: "exact line search",
        pass: worst_cells <= 1.0 && worst_rise <= 1e-12,
        detail: format!(
            "{cases} instances, step within {worst_cells:.3} grid cells of the scan minimum, {updates} updates with largest rise {worst_rise:.2e} (slack 1e-12)"
        ),
    }
}

fn duality() -> Outcome {
    let mut r = rng(4);
    let cases = 40;
    let (mut worst_reduce, mut worst_rebuild) = (0.0_f64, 0.0_f64);
    for _ in 0..cases {
        let n = r.gen_range(2..=8);
        let d = r.gen_range(1..=8);
        let k = r.gen_range(1..=d.min(n));
        let order = r.gen_range(0..=4);
        let (x, spectrum) = instance(&mut r, d, n);
        let ds = center(&x).unwrap();
        let cache: SpectralCache = build_cache(ds.centered(), &spectrum, order).unwrap();
        let bank = random_bank(&mut r, d, k, n, order);
        let model =
            gfred::FilterModel::new(bank, ds.mean().clone(), spectrum.fingerprint()).unwrap();

        let fast = reduce(&model, &ds, &spectrum, &cache).unwrap();
        let oracle = kron_reduce(
            spectrum.adjacency(),
            &model.reducing_taps(&cache).unwrap(),
            ds.centered(),
        );
        worst_reduce = worst_reduce.max((&fast.codes - &oracle).norm() / oracle.norm());

        let rebuilt = reconstruct_centered(&model, &fast, &spectrum).unwrap();
        let oracle = kron_reconstruct(spectrum.adjacency(), model.taps(), &fast.codes);
        worst_rebuild = worst_rebuild.max((&rebuilt - &oracle).norm() / oracle.norm());
    }
    Outcome {
        name: "spectral/vertex duality",
        pass: worst_reduce <= 1e-10 && worst_rebuild <= 1e-10,
        detail: format!(
            "{cases} instances, reduce {worst_reduce:.2e}, reconstruct {worst_rebuild:.2e} (tol 1e-10)"
        ),
    }
}

fn stationarity() -> Outcome {
    let mut r = rng(5);
    let cases = 60;
    let (mut converged, mut worst) = (0usize, 0.0_f64);
    for case in 0..cases {
        let (x, spectrum) = instance(&mut r, 5, 6);
        let ds = center(&x).unwrap();
        let k = 1 + case % 3;
        let order = case % 4;
        let opts = FitOptions {
            epsilon: Some(1e-8),
            max_iters: 2000,
        };
        let fitted = fit(&ds, &spectrum, k, order, &opts).unwrap();
        if !fitted.outcome.converged {
            continue;
        }
        converged += 1;
        let residual = stationarity_residual(&fitted.model, &fitted.cache).unwrap();
        worst = worst.max(residual / (1.0 + fitted.outcome.final_objective()));
    }
    Outcome {
        name: "stationarity at convergence",
        pass: converged >= 10 && worst <= 1e-6,
        detail: format!(
            "{converged}/{cases} runs converged, worst ‖∇B‖+‖∇G‖ over (1+objective) {worst:.2e} (tol 1e-6)"
        ),
    }
}

fn compression() -> Outcome {
    let headline = compression_bound(140, 784, 1);
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for n in 1..=30 {
        for d in 1..=40 {
            for order in 0..=3 {
                let bound = compression_bound(n, d, order);
                for k in 1..=(bound + 3).max(d.min(n) + 1) {
                    let b = StorageBudget::new(n, d, k, order);
                    let stored = (k * (order + 1) * d + 2 * k * n + n * (n + 1) / 2) as u64;
                    checked += 1;
                    if b.stored_scalars != stored || (stored < (n * d) as u64) != (k <= bound) {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    Outcome {
        name: "compression bound",
        pass: headline == 54 && mismatches == 0,
        detail: format!(
            "bound(140, 784, 1) = {headline} (expected 54), {checked} budgets checked, {mismatches} mismatches"
        ),
    }
}

fn figure_one() -> Outcome {
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
    let started = Instant::now();
    let report = run_sweep(&cfg).unwrap();
    let seconds = started.elapsed().as_secs_f64();

    let mut never_worse = report.failures.is_empty();
    let mut best_gain = f64::NEG_INFINITY;
    let mut gains = Vec::new();
    for &k in &cfg.k_list {
        let pca = report
            .aggregate(k, 0)
            .map(|a| a.mean_pca)
            .unwrap_or(f64::NAN);
        for order in [1, 2] {
            let Some(a) = report.aggregate(k, order) else {
                never_worse = false;
                continue;
            };
            never_worse &= a.mean_final <= pca;
            let gain = 1.0 - a.mean_final / pca;
            best_gain = best_gain.max(gain);
            gains.push(format!("k={k} L={order} {:.1}%", 100.0 * gain));
        }
    }
    Outcome {
        name: "figure-1 trend (synthetic digits, n=40, D=784)",
        pass: never_worse && best_gain >= 0.01 && seconds < 300.0,
        detail: format!("gain over PCA: {}; {seconds:.1}s serial", gains.join(", ")),
    }
}

fn determinism() -> Outcome {
    let cfg = ExperimentConfig {
        classes_to_pick: 3,
        images_per_class: 4,
        trials: 3,
        k_list: vec![2, 4],
        l_list: vec![0, 1, 2],
        similarity: SimilarityConfig::cosine(4),
        synthetic_pool: 8,
        max_iters: 60,
        ..ExperimentConfig::default()
    };
    let first = csv_string(&run_sweep(&cfg).unwrap());
    let second = csv_string(&run_sweep(&cfg).unwrap());
    let csv_same = first == second && first.lines().count() == 1 + 3 * 2 * 3;

    let mut r = rng(8);
    let (x, spectrum) = instance(&mut r, 7, 9);
    let ds = center(&x).unwrap();
    let fitted = fit(
        &ds,
        &spectrum,
        3,
        2,
        &FitOptions {
            epsilon: None,
            max_iters: 25,
        },
    )
    .unwrap();
    let reduced = reduce(&fitted.model, &ds, &spectrum, &fitted.cache).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.gfm"), dir.path().join("b.gfm"));
    save_model(&a, &fitted.model, &spectrum, &reduced).unwrap();
    let loaded = load_model(&a).unwrap();
    save_model(&b, &loaded.model, &loaded.spectrum, &loaded.reduced).unwrap();
    let bits = |m: &DMatrix<f64>| m.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let model_same = loaded.model == fitted.model
        && bits(&loaded.reduced.codes) == bits(&reduced.codes)
        && bits(loaded.spectrum.eigenvectors()) == bits(spectrum.eigenvectors())
        && std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap();

    Outcome {
        name: "determinism",
        pass: csv_same && model_same,
        detail: format!(
            "sweep CSV identical across runs: {csv_same}; .gfm round trip bit-exact: {model_same}"
        ),
    }
}

#[test]
fn acceptance() {
    let criteria: [fn() -> Outcome; 8] = [
        pca_equivalence,
        gradient_check,
        line_search,
        duality,
        stationarity,
        compression,
        figure_one,
        determinism,
    ];
    let mut failed = Vec::new();
    for criterion in criteria {
        let started = Instant::now();
        let o = criterion();
        println!(
            "{} {}: {} [{:.2}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            started.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(o.name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
