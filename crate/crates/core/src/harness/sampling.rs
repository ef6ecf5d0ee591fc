//! Reproducible class-subset sampling.
//!
//! The generator is SplitMix64. For trial `t` under seed `s` the stream
//! starts from state `mix(s ⊕ mix(t + φ))` where `φ = 0x9E3779B97F4A7C15` and
//! `mix` is the SplitMix64 finalizer; each draw adds `φ` to the state and
//! returns `mix(state)`. A uniform index below `m` is `⌊draw·m / 2⁶⁴⌋`.
//!
//! Sampling: the distinct labels are sorted ascending and the first
//! `classes` of them are chosen by a partial Fisher–Yates shuffle (position
//! `i` swaps with `i + below(len − i)`). For each chosen class, in chosen
//! order, the image indices of that class (ascending) are partially shuffled
//! the same way and the first `per_class` kept.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    /// Independent stream for one `(seed, trial)` pair.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        Self::new(mix(seed ^ mix(trial.wrapping_add(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform in `0..bound` by multiply-shift.
    pub fn below(&mut self, bound: usize) -> usize {
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Shuffles the first `take` positions into a uniform sample.
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], take: usize) {
        for i in 0..take.min(items.len()) {
            let j = i + self.below(items.len() - i);
            items.swap(i, j);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub data: DMatrix<f64>,
    pub labels: Vec<u32>,
    /// Source column of each selected image.
    pub indices: Vec<usize>,
}

pub fn sample_subset(
    images: &DMatrix<f64>,
    labels: &[u32],
    classes: usize,
    per_class: usize,
    seed: u64,
    trial: u64,
) -> Result<Subset> {
    if labels.len() != images.ncols() {
        return Err(Error::CountMismatch {
            images: images.ncols(),
            labels: labels.len(),
        });
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if classes == 0 || per_class == 0 || classes > distinct.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {classes} classes x {per_class} images from {} classes",
            distinct.len()
        )));
    }

    let mut rng = SplitMix64::for_trial(seed, trial);
    rng.partial_shuffle(&mut distinct, classes);

    let mut indices = Vec::with_capacity(classes * per_class);
    for &class in &distinct[..classes] {
        let mut pool: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if pool.len() < per_class {
            return Err(Error::InsufficientImages {
                class,
                available: pool.len(),
                requested: per_class,
            });
        }
        rng.partial_shuffle(&mut pool, per_class);
        indices.extend_from_slice(&pool[..per_class]);
    }

    let data = images.select_columns(indices.iter());
    let labels = indices.iter().map(|&i| labels[i]).collect();
    Ok(Subset {
        data,
        labels,
        indices,
    })
}
