//! Command-line front end. Exit codes: 0 success, 2 config error, 3 data error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use gfred::codec::{
    compression_bound, load_model, reconstruct, reconstruction_mse, reduce, save_model, Domain,
    ReducedData, StorageBudget,
};
use gfred::harness::{
    emit_csv, emit_svg, load_csv_matrix, load_idx_images, run_sweep, write_csv_matrix,
    ExperimentConfig,
};
use gfred::spectral::build_cache;
use gfred::{
    build_graph, center, fit, pca_fit, pca_mse, CenteredDataset, Error, FitOptions, Kernel,
    Symmetrization,
};

#[derive(Parser)]
#[command(
    name = "gfred",
    version,
    about = "Graph-filter dimensionality reduction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the similarity graph and print its spectrum
    Graph {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        graph: GraphArgs,
        /// Write the sparsified similarity matrix as CSV
        #[arg(long)]
        adjacency_out: Option<PathBuf>,
    },
    /// Fit a filter bank and save it with the reduced data
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long = "l")]
        order: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Reduce data with a saved model and write the k x n codes as CSV
    Encode {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct D x n data from codes (or from the codes stored in the model)
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        codes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a saved model's reconstruction error with PCA
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Run a repeated-trial sweep over k and L
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_svg: Option<PathBuf>,
        /// Ignore GFRED_THREADS and run trials one after another
        #[arg(long)]
        serial: bool,
        /// Override a config entry, e.g. `--set trials=5`
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Largest k for which the filter representation beats raw storage
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: usize,
        /// Also report the storage check for this k
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Idx,
    Csv,
}

#[derive(Args)]
struct DataArgs {
    /// IDX image file or CSV matrix with one vector per column
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Keep only the first N vectors
    #[arg(long)]
    columns: Option<usize>,
    /// key=value file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    kernel: Option<Kernel>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    knn: Option<usize>,
    #[arg(long)]
    symmetrization: Option<Symmetrization>,
    #[arg(long)]
    normalize_spectrum: bool,
}

impl DataArgs {
    fn config(&self) -> gfred::Result<ExperimentConfig> {
        match &self.config {
            Some(p) => ExperimentConfig::from_file(p),
            None => Ok(ExperimentConfig::default()),
        }
    }

    fn load(&self, cfg: &ExperimentConfig) -> gfred::Result<DMatrix<f64>> {
        let path = self
            .data
            .clone()
            .or_else(|| cfg.dataset_path.clone())
            .ok_or_else(|| Error::Config("--data is required".into()))?;
        let m = match self.format {
            Format::Idx => load_idx_images(&path)?.0,
            Format::Csv => load_csv_matrix(&path)?,
        };
        Ok(match self.columns {
            Some(c) if c < m.ncols() => m.columns(0, c).into_owned(),
            _ => m,
        })
    }
}

impl GraphArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        let s = &mut cfg.similarity;
        if let Some(k) = self.kernel {
            s.kernel = k;
        }
        if let Some(a) = self.alpha {
            s.alpha = a;
        }
        if let Some(k) = self.knn {
            s.knn = k;
        }
        if let Some(m) = self.symmetrization {
            s.symmetrization = m;
        }
        s.normalize_spectrum |= self.normalize_spectrum;
    }
}

fn threads_from_env() -> gfred::Result<Option<usize>> {
    match std::env::var("GFRED_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let t: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("GFRED_THREADS=`{v}` is not a count")))?;
            Ok((t > 1).then_some(t))
        }
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> gfred::Result<()> {
    match cli.command {
        Command::Graph {
            data,
            graph,
            adjacency_out,
        } => {
            let mut cfg = data.config()?;
            graph.apply(&mut cfg);
            let x = data.load(&cfg)?;
            let spectrum = build_graph(&x, &cfg.similarity)?;
            let lambda = spectrum.eigenvalues();
            println!("nodes {}", spectrum.n());
            println!(
                "edges {}",
                spectrum.adjacency().iter().filter(|&&v| v != 0.0).count() / 2
            );
            println!("fingerprint {:08x}", spectrum.fingerprint());
            println!("lambda_max {:?}", lambda[0]);
            println!("lambda_min {:?}", lambda[lambda.len() - 1]);
            if let Some(path) = adjacency_out {
                write_csv_matrix(path, spectrum.adjacency())?;
            }
        }
        Command::Fit {
            data,
            graph,
            k,
            order,
            epsilon,
            max_iters,
            model_out,
        } => {
            let mut cfg = data.config()?;
            graph.apply(&mut cfg);
            let k = k
                .or_else(|| {
                    cfg.k_list
                        .first()
                        .copied()
                        .filter(|_| data.config.is_some())
                })
                .ok_or_else(|| Error::Config("--k is required".into()))?;
            let order = order
                .or_else(|| {
                    cfg.l_list
                        .first()
                        .copied()
                        .filter(|_| data.config.is_some())
                })
                .ok_or_else(|| Error::Config("--l is required".into()))?;
            let opts = FitOptions {
                epsilon: epsilon.or(cfg.epsilon),
                max_iters: max_iters.unwrap_or(cfg.max_iters),
            };
            let x = data.load(&cfg)?;
            let ds = center(&x)?;
            let spectrum = build_graph(&x, &cfg.similarity)?;
            let fitted = fit(&ds, &spectrum, k, order, &opts)?;
            let reduced = reduce(&fitted.model, &ds, &spectrum, &fitted.cache)?;
            save_model(&model_out, &fitted.model, &spectrum, &reduced)?;
            let o = &fitted.outcome;
            println!("iterations {}", o.iterations);
            println!("converged {}", o.converged);
            println!("initial_mse {:?}", o.initial_objective());
            println!("final_mse {:?}", o.final_objective());
            println!("pca_mse {:?}", pca_mse(&ds, &pca_fit(&ds, k)?)?);
            println!("model {}", model_out.display());
        }
        Command::Encode { model, data, out } => {
            let saved = load_model(&model)?;
            let x = data.load(&data.config()?)?;
            let ds = CenteredDataset::with_mean(&x, saved.model.mean().clone())?;
            let cache = build_cache(ds.centered(), &saved.spectrum, saved.model.order())?;
            let reduced = reduce(&saved.model, &ds, &saved.spectrum, &cache)?;
            write_csv_matrix(out, &reduced.codes)?;
        }
        Command::Decode { model, codes, out } => {
            let saved = load_model(&model)?;
            let reduced = match codes {
                Some(p) => ReducedData {
                    codes: load_csv_matrix(p)?,
                    domain: Domain::Vertex,
                },
                None => saved.reduced.clone(),
            };
            let x = reconstruct(&saved.model, &reduced, &saved.spectrum)?;
            write_csv_matrix(out, &x)?;
        }
        Command::Eval { model, data } => {
            let saved = load_model(&model)?;
            let x = data.load(&data.config()?)?;
            let ds = CenteredDataset::with_mean(&x, saved.model.mean().clone())?;
            let cache = build_cache(ds.centered(), &saved.spectrum, saved.model.order())?;
            let mse = reconstruction_mse(&saved.model, &ds, &saved.spectrum, &cache)?;
            let pca = pca_mse(&ds, &pca_fit(&ds, saved.model.k())?)?;
            let b = &saved.budget;
            println!("gf_mse {mse:?}");
            println!("pca_mse {pca:?}");
            println!("stored_scalars {}", b.stored_scalars);
            println!("raw_scalars {}", b.raw_scalars);
            println!("pca_scalars {}", b.pca_scalars);
        }
        Command::Sweep {
            config,
            out_csv,
            out_svg,
            serial,
            overrides,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            for o in &overrides {
                let (key, value) = o
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{o}`")))?;
                cfg.set(key.trim(), value.trim())?;
            }
            cfg.threads = if serial { None } else { threads_from_env()? };
            let report = run_sweep(&cfg)?;
            for f in &report.failures {
                eprintln!(
                    "failed trial {} k {} L {}: {}",
                    f.trial, f.k, f.order, f.message
                );
            }
            emit_csv(&report, &out_csv)?;
            if let Some(svg) = out_svg {
                emit_svg(&report, svg)?;
            }
            for a in &report.aggregates {
                println!(
                    "k {} L {} mean_mse {:?} std {:?} pca_mse {:?}",
                    a.k, a.order, a.mean_final, a.std_final, a.mean_pca
                );
            }
            if report.rows.is_empty() && !report.failures.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "all {} cells failed",
                    report.failures.len()
                )));
            }
        }
        Command::Bound { n, d, l, k } => {
            let bound = compression_bound(n, d, l);
            println!("{bound}");
            let k = k.unwrap_or(bound.max(1));
            let b = StorageBudget::new(n, d, k, l);
            println!(
                "k={k}: stored {} {} raw {}",
                b.stored_scalars,
                if b.compresses() { "<" } else { ">=" },
                b.raw_scalars
            );
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    if e.is_data_error() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
