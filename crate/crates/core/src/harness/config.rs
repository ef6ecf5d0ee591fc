//! Experiment configuration in flat `key = value` form.
//!
//! Keys are the kebab-case field names (`classes-to-pick`, `k-list`, ...).
//! Lists are comma separated, `#` starts a comment, and relative paths are
//! resolved against the config file's directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::SimilarityConfig;
use crate::optimizer::DEFAULT_MAX_ITERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// IDX image file plus its label file.
    Idx,
    /// Numeric CSV, one vector per column; the first row holds class labels.
    CsvMatrix,
    /// Generated digit look-alikes; no file needed.
    Synthetic,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "idx" => Ok(DatasetFormat::Idx),
            "csv" | "csv-matrix" | "csvmatrix" => Ok(DatasetFormat::CsvMatrix),
            "synthetic" => Ok(DatasetFormat::Synthetic),
            other => Err(Error::Config(format!("unknown dataset format `{other}`"))),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetFormat::Idx => "idx",
            DatasetFormat::CsvMatrix => "csv",
            DatasetFormat::Synthetic => "synthetic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset_path: Option<PathBuf>,
    /// IDX label file; defaults to the conventional companion of the image file.
    pub labels_path: Option<PathBuf>,
    pub dataset_format: DatasetFormat,
    pub classes_to_pick: usize,
    pub images_per_class: usize,
    pub trials: usize,
    pub seed: u64,
    pub similarity: SimilarityConfig,
    pub k_list: Vec<usize>,
    pub l_list: Vec<usize>,
    pub epsilon: Option<f64>,
    pub max_iters: usize,
    /// Also start each order from the previous order's solution and keep
    /// the better of the two runs.
    pub warm_start: bool,
    /// Record wall time per cell. Off by default so reports are reproducible
    /// byte for byte.
    pub record_timing: bool,
    /// Images per class generated for the synthetic format.
    pub synthetic_pool: usize,
    /// Worker threads for trials; `None` runs serially.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset_path: None,
            labels_path: None,
            dataset_format: DatasetFormat::Synthetic,
            classes_to_pick: 4,
            images_per_class: 35,
            trials: 50,
            seed: 0,
            similarity: SimilarityConfig::default(),
            k_list: vec![5, 10, 20, 30, 40],
            l_list: vec![0, 1, 2, 3, 4],
            epsilon: None,
            max_iters: DEFAULT_MAX_ITERS,
            warm_start: true,
            record_timing: false,
            synthetic_pool: 60,
            threads: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value `{value}` for `{key}`"
        ))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines on top of the defaults.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        if let Some(dir) = base_dir {
            for p in [&mut cfg.dataset_path, &mut cfg.labels_path]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Sets one field by its kebab-case key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('_', "-").to_ascii_lowercase();
        match key.as_str() {
            "dataset-path" => self.dataset_path = Some(PathBuf::from(value)),
            "labels-path" => self.labels_path = Some(PathBuf::from(value)),
            "dataset-format" => self.dataset_format = value.parse()?,
            "classes-to-pick" => self.classes_to_pick = parse(&key, value)?,
            "images-per-class" => self.images_per_class = parse(&key, value)?,
            "trials" => self.trials = parse(&key, value)?,
            "seed" => self.seed = parse(&key, value)?,
            "kernel" => self.similarity.kernel = value.parse()?,
            "alpha" => self.similarity.alpha = parse(&key, value)?,
            "knn" => self.similarity.knn = parse(&key, value)?,
            "symmetrization" => self.similarity.symmetrization = value.parse()?,
            "normalize-spectrum" => self.similarity.normalize_spectrum = parse_bool(&key, value)?,
            "k-list" => self.k_list = parse_list(&key, value)?,
            "l-list" => self.l_list = parse_list(&key, value)?,
            "epsilon" => {
                self.epsilon = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse(&key, value)?)
                }
            }
            "max-iters" => self.max_iters = parse(&key, value)?,
            "warm-start" => self.warm_start = parse_bool(&key, value)?,
            "record-timing" => self.record_timing = parse_bool(&key, value)?,
            "synthetic-pool" => self.synthetic_pool = parse(&key, value)?,
            "threads" => {
                let t: usize = parse(&key, value)?;
                self.threads = (t > 1).then_some(t);
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.classes_to_pick * self.images_per_class
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.classes_to_pick == 0 || self.images_per_class == 0 {
            return bad("classes-to-pick and images-per-class must be positive".into());
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return bad("k-list must hold positive dimensions".into());
        }
        if self.l_list.is_empty() {
            return bad("l-list must not be empty".into());
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        if self.similarity.knn + 1 > self.n() {
            return bad(format!(
                "knn = {} needs more than {} nodes",
                self.similarity.knn,
                self.n()
            ));
        }
        if self.dataset_format != DatasetFormat::Synthetic && self.dataset_path.is_none() {
            return bad(format!(
                "dataset-format {} needs dataset-path",
                self.dataset_format
            ));
        }
        self.similarity
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}
