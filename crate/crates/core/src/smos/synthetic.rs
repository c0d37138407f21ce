//! Synthetic color-shifted classification data.
//!
//! Each sample is a 2-dim Gaussian blob point followed by an RGB tint. The
//! point carries the label; the tint is a per-domain style offset plus
//! per-sample jitter and carries no label information.

use super::train::LabeledSet;
use crate::seed::{hash_str, keyed_rng};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_classes: usize,
    pub per_class: usize,
    /// Class means sit on a circle of this radius.
    pub radius: f64,
    /// Standard deviation of each blob.
    pub spread: f64,
    /// Points closer than this to a rival mean than to their own are redrawn,
    /// which makes the classes separable by the nearest-mean rule.
    pub margin: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            n_classes: 2,
            per_class: 64,
            radius: 2.0,
            spread: 0.6,
            margin: 0.25,
        }
    }
}

pub fn class_means(n_classes: usize, radius: f64) -> Vec<[f64; 2]> {
    (0..n_classes)
        .map(|c| {
            let a = TAU * c as f64 / n_classes as f64;
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Labeled 2-dim blob points, classes interleaved.
pub fn blobs(spec: &BlobSpec, seed: u64, key: &str) -> LabeledSet {
    let means = class_means(spec.n_classes, spec.radius);
    let normal = Normal::new(0.0, spec.spread).expect("finite spread");
    let mut rng = keyed_rng(seed, &[hash_str("blobs"), hash_str(key)]);
    let mut inputs = Vec::with_capacity(spec.n_classes * spec.per_class);
    let mut labels = Vec::with_capacity(inputs.capacity());
    for _ in 0..spec.per_class {
        for (c, &mu) in means.iter().enumerate() {
            let z = loop {
                let z = [mu[0] + normal.sample(&mut rng), mu[1] + normal.sample(&mut rng)];
                let own = dist(z, mu);
                let rival = means
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != c)
                    .map(|(_, &m)| dist(z, m))
                    .fold(f64::INFINITY, f64::min);
                if rival - own >= spec.margin {
                    break z;
                }
            };
            inputs.push(z.to_vec());
            labels.push(c);
        }
    }
    LabeledSet {
        inputs,
        labels,
        n_classes: spec.n_classes,
    }
}

/// Appends `tint + jitter` to every input.
pub fn tinted(set: &LabeledSet, tint: [f64; 3], jitter: f64, seed: u64, key: &str) -> LabeledSet {
    let normal = Normal::new(0.0, jitter).expect("finite jitter");
    let mut rng = keyed_rng(seed, &[hash_str("tint"), hash_str(key)]);
    let inputs = set
        .inputs
        .iter()
        .map(|x| {
            let mut v = x.clone();
            v.extend(tint.iter().map(|t| t + normal.sample(&mut rng)));
            v
        })
        .collect();
    LabeledSet {
        inputs,
        labels: set.labels.clone(),
        n_classes: set.n_classes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftTaskSpec {
    pub blobs: BlobSpec,
    /// Number of styles pooled into the precursor data.
    pub precursor_domains: usize,
    /// Number of DG domains; the last one is held out.
    pub dg_domains: usize,
    /// Tints are drawn uniformly from `[-tint_scale, tint_scale]^3`.
    pub tint_scale: f64,
    pub jitter: f64,
}

impl Default for ShiftTaskSpec {
    fn default() -> Self {
        Self {
            blobs: BlobSpec::default(),
            precursor_domains: 8,
            dg_domains: 3,
            tint_scale: 2.0,
            jitter: 0.2,
        }
    }
}

/// Precursor data drawn from many styles, plus named DG domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftTask {
    pub precursor: LabeledSet,
    pub domains: Vec<(String, LabeledSet)>,
}

impl ShiftTask {
    pub fn train_domains(&self) -> Vec<LabeledSet> {
        let n = self.domains.len();
        self.domains[..n - 1].iter().map(|(_, s)| s.clone()).collect()
    }

    pub fn held_out(&self) -> &(String, LabeledSet) {
        self.domains.last().expect("at least one domain")
    }
}

pub fn shift_task(spec: &ShiftTaskSpec, seed: u64) -> ShiftTask {
    let mut rng = keyed_rng(seed, &[hash_str("tints")]);
    let mut tint = || -> [f64; 3] {
        std::array::from_fn(|_| rng.gen_range(-spec.tint_scale..=spec.tint_scale))
    };
    let precursor_sets: Vec<LabeledSet> = (0..spec.precursor_domains)
        .map(|i| {
            let key = format!("precursor-{i}");
            tinted(&blobs(&spec.blobs, seed, &key), tint(), spec.jitter, seed, &key)
        })
        .collect();
    let precursor = LabeledSet::concat(&precursor_sets).expect("shared label space");
    let domains = (0..spec.dg_domains)
        .map(|i| {
            let name = format!("domain-{i}");
            let set = tinted(&blobs(&spec.blobs, seed, &name), tint(), spec.jitter, seed, &name);
            (name, set)
        })
        .collect();
    ShiftTask { precursor, domains }
}
