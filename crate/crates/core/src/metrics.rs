//! Intra-class variation (ICV) and inter-domain dissimilarity (IDD).
//!
//! ICV of a domain is the mean over classes of the JS divergence between the
//! pooled color distributions of two equal random halves of the class. IDD
//! between two domains is the JS divergence of their pooled color
//! distributions. Representation IDD applies the same pairwise measure to
//! binned feature vectors produced by a featurizer.

use crate::corpus::{CorpusError, DomainSpec, ImageSource};
use crate::divergence::{compensated_sum, js_bits, DivergenceError, LOG_BASE};
use crate::histogram::{
    feature_histogram_in, min_max_ranges, pool_counts, ChannelCounts, ChannelDistribution,
    HistogramError, PoolMode, RangePolicy,
};
use crate::seed::{hash_str, keyed_rng};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_TRIALS: usize = 3;
pub const DEFAULT_FEATURE_BINS: usize = 32;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error("domain {0:?} has no class with at least 2 samples")]
    NoUsableClass(String),
    #[error("domain {0:?} has no samples")]
    EmptyDomain(String),
    #[error("no domains given")]
    NoDomains,
    #[error("trials must be at least 1")]
    InvalidTrials,
    #[error("featurizer failed on domain {domain:?}: {message}")]
    Featurizer { domain: String, message: String },
}

impl MetricsError {
    pub fn kind(&self) -> &'static str {
        match self {
            MetricsError::Corpus(e) => e.kind(),
            MetricsError::Histogram(HistogramError::DimensionMismatch { .. }) => "DimensionMismatch",
            MetricsError::Histogram(_) => "HistogramError",
            MetricsError::Divergence(_) => "DivergenceError",
            MetricsError::NoUsableClass(_) => "NoUsableClass",
            MetricsError::EmptyDomain(_) => "EmptyDomain",
            MetricsError::NoDomains => "NoDomains",
            MetricsError::InvalidTrials => "InvalidTrials",
            MetricsError::Featurizer { .. } => "DimensionMismatch",
        }
    }
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Anything that maps an input vector to a feature vector.
pub trait Featurize {
    fn featurize(&self, input: &[f64]) -> std::result::Result<Vec<f64>, String>;
}

/// Passes inputs through unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityFeatures;

impl Featurize for IdentityFeatures {
    fn featurize(&self, input: &[f64]) -> std::result::Result<Vec<f64>, String> {
        Ok(input.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcvOptions {
    pub trials: usize,
    pub seed: u64,
    /// Maximum images per class; `None` uses every image.
    pub sample_cap: Option<usize>,
    /// Draw a fresh capped subset every trial instead of re-splitting one subset.
    pub resample: bool,
    pub pool_mode: PoolMode,
}

impl Default for IcvOptions {
    fn default() -> Self {
        Self {
            trials: DEFAULT_TRIALS,
            seed: 0,
            sample_cap: None,
            resample: false,
            pool_mode: PoolMode::PixelWeighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcvReport {
    pub domain: String,
    /// Retained classes, in the column order of `per_trial`.
    pub classes: Vec<String>,
    pub per_class: BTreeMap<String, f64>,
    pub icv: f64,
    /// `trials x classes` matrix of class-wise divergences.
    pub per_trial: Vec<Vec<f64>>,
    pub trials: usize,
    pub seed: u64,
    pub sample_cap: Option<usize>,
    pub resample: bool,
    pub pool_mode: PoolMode,
    /// Classes with fewer than 2 samples, left out of the average.
    pub dropped_classes: Vec<String>,
    pub log_base: u32,
}

fn load_counts(source: &dyn ImageSource, paths: &[&str]) -> Result<Vec<ChannelCounts>> {
    paths
        .par_iter()
        .map(|p| Ok(ChannelCounts::from_grid(&source.load(p)?)))
        .collect()
}

fn capped_subset<'a>(paths: &[&'a str], cap: Option<usize>, seed: u64, key: &[u64]) -> Vec<&'a str> {
    match cap {
        Some(cap) if cap < paths.len() => {
            let mut order = paths.to_vec();
            order.shuffle(&mut keyed_rng(seed, key));
            order.truncate(cap);
            order
        }
        _ => paths.to_vec(),
    }
}

const CAP_TAG: &str = "sample-cap";

/// ICV of one domain, averaged over `opts.trials` random half splits.
///
/// Each trial shuffles every class with a generator keyed on
/// `(seed, trial, class)`; an odd class drops its last shuffled image so the
/// halves are equal.
pub fn intra_class_variation(
    domain: &DomainSpec,
    source: &dyn ImageSource,
    opts: &IcvOptions,
) -> Result<IcvReport> {
    if opts.trials == 0 {
        return Err(MetricsError::InvalidTrials);
    }
    let mut classes = Vec::new();
    let mut dropped = Vec::new();
    for (name, paths) in &domain.classes {
        let usable = opts.sample_cap.map_or(paths.len(), |c| c.min(paths.len()));
        if usable >= 2 {
            classes.push((name.as_str(), paths));
        } else {
            dropped.push(name.clone());
        }
    }
    if classes.is_empty() {
        return Err(MetricsError::NoUsableClass(domain.name.clone()));
    }

    let mut per_class_trials: Vec<Vec<f64>> = Vec::with_capacity(classes.len());
    for (class, paths) in &classes {
        let class_key = hash_str(class);
        let all: Vec<&str> = paths.iter().map(String::as_str).collect();
        // images that can appear in any trial; with a fixed subset only those are decoded
        let pool = if opts.resample {
            all.clone()
        } else {
            capped_subset(&all, opts.sample_cap, opts.seed, &[hash_str(CAP_TAG), class_key])
        };
        let counts = load_counts(source, &pool)?;
        let index: BTreeMap<&str, usize> = pool.iter().enumerate().map(|(i, p)| (*p, i)).collect();

        let mut row = Vec::with_capacity(opts.trials);
        for trial in 0..opts.trials {
            let candidates = if opts.resample {
                capped_subset(
                    &pool,
                    opts.sample_cap,
                    opts.seed,
                    &[hash_str(CAP_TAG), trial as u64, class_key],
                )
            } else {
                pool.clone()
            };
            let mut order: Vec<usize> = candidates.iter().map(|p| index[p]).collect();
            order.shuffle(&mut keyed_rng(opts.seed, &[trial as u64, class_key]));
            let half = order.len() / 2;
            let p = pool_counts(order[..half].iter().map(|&i| &counts[i]), opts.pool_mode)?;
            let q = pool_counts(order[half..2 * half].iter().map(|&i| &counts[i]), opts.pool_mode)?;
            row.push(js_bits(p.probs(), q.probs())?);
        }
        per_class_trials.push(row);
    }

    let per_trial: Vec<Vec<f64>> = (0..opts.trials)
        .map(|t| per_class_trials.iter().map(|row| row[t]).collect())
        .collect();
    let per_class: BTreeMap<String, f64> = classes
        .iter()
        .zip(&per_class_trials)
        .map(|((name, _), row)| {
            (name.to_string(), compensated_sum(row.iter().copied()) / row.len() as f64)
        })
        .collect();
    let icv = compensated_sum(classes.iter().map(|(name, _)| per_class[*name])) / classes.len() as f64;

    Ok(IcvReport {
        domain: domain.name.clone(),
        classes: classes.iter().map(|(n, _)| n.to_string()).collect(),
        per_class,
        icv,
        per_trial,
        trials: opts.trials,
        seed: opts.seed,
        sample_cap: opts.sample_cap,
        resample: opts.resample,
        pool_mode: opts.pool_mode,
        dropped_classes: dropped,
        log_base: LOG_BASE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IddOptions {
    /// Maximum images per domain; `None` uses every image.
    pub sample_cap: Option<usize>,
    pub seed: u64,
    pub pool_mode: PoolMode,
}

/// A domain's pooled color distribution with the amount of data behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledDomain {
    pub name: String,
    pub distribution: ChannelDistribution,
    pub images: usize,
    pub pixels: u64,
}

/// Pools a domain's (optionally capped) images into one distribution. The
/// capped subset is keyed on `(seed, domain name)`.
pub fn pooled_domain(
    domain: &DomainSpec,
    source: &dyn ImageSource,
    opts: &IddOptions,
) -> Result<PooledDomain> {
    let all: Vec<&str> = domain.samples().collect();
    if all.is_empty() {
        return Err(MetricsError::EmptyDomain(domain.name.clone()));
    }
    let chosen = capped_subset(
        &all,
        opts.sample_cap,
        opts.seed,
        &[hash_str(CAP_TAG), hash_str(&domain.name)],
    );
    let counts = load_counts(source, &chosen)?;
    let pixels = counts.iter().map(ChannelCounts::pixels).sum();
    let distribution = pool_counts(counts.iter(), opts.pool_mode)
        .map_err(|_| MetricsError::EmptyDomain(domain.name.clone()))?;
    Ok(PooledDomain {
        name: domain.name.clone(),
        distribution,
        images: chosen.len(),
        pixels,
    })
}

/// IDD between two domains, each read from its own image source.
pub fn inter_domain_dissimilarity(
    a: &DomainSpec,
    source_a: &dyn ImageSource,
    b: &DomainSpec,
    source_b: &dyn ImageSource,
    opts: &IddOptions,
) -> Result<f64> {
    let pa = pooled_domain(a, source_a, opts)?;
    let pb = pooled_domain(b, source_b, opts)?;
    Ok(js_bits(pa.distribution.probs(), pb.distribution.probs())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IddMatrix {
    pub domain_names: Vec<String>,
    /// Symmetric, zero diagonal, row-major in `domain_names` order.
    pub values: Vec<Vec<f64>>,
    /// Images (or feature samples) used per domain.
    pub sample_counts: Vec<usize>,
    /// Pixels used per domain; absent for representation matrices.
    pub pixel_counts: Option<Vec<u64>>,
    /// Name of the appended reference row/column, if any.
    pub reference: Option<String>,
    pub sample_cap: Option<usize>,
    pub seed: u64,
    pub log_base: u32,
}

impl IddMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.domain_names.iter().position(|n| n == a)?;
        let j = self.domain_names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

fn pairwise<T>(items: &[T], probs: impl Fn(&T) -> &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = items.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = js_bits(probs(&items[i]), probs(&items[j]))?;
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(values)
}

/// Pairwise IDD over every domain of a manifest, plus an optional reference
/// domain appended as the last row and column.
pub fn idd_matrix(
    domains: &[DomainSpec],
    source: &dyn ImageSource,
    reference: Option<(&DomainSpec, &dyn ImageSource)>,
    opts: &IddOptions,
) -> Result<IddMatrix> {
    if domains.is_empty() && reference.is_none() {
        return Err(MetricsError::NoDomains);
    }
    let mut pooled: Vec<PooledDomain> = domains
        .iter()
        .map(|d| pooled_domain(d, source, opts))
        .collect::<Result<_>>()?;
    if let Some((spec, src)) = reference {
        pooled.push(pooled_domain(spec, src, opts)?);
    }
    let values = pairwise(&pooled, |p| p.distribution.probs())?;
    Ok(IddMatrix {
        domain_names: pooled.iter().map(|p| p.name.clone()).collect(),
        values,
        sample_counts: pooled.iter().map(|p| p.images).collect(),
        pixel_counts: Some(pooled.iter().map(|p| p.pixels).collect()),
        reference: reference.map(|(spec, _)| spec.name.clone()),
        sample_cap: opts.sample_cap,
        seed: opts.seed,
        log_base: LOG_BASE,
    })
}

/// A named set of featurizer inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDomain {
    pub name: String,
    pub samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepIddOptions {
    pub bins: usize,
    /// `GlobalMinMax` resolves one range per dimension over all domains jointly.
    pub range: RangePolicy,
    pub sample_cap: Option<usize>,
    pub seed: u64,
}

impl Default for RepIddOptions {
    fn default() -> Self {
        Self {
            bins: DEFAULT_FEATURE_BINS,
            range: RangePolicy::GlobalMinMax,
            sample_cap: None,
            seed: 0,
        }
    }
}

/// Extracts features for every domain. Capped subsets are keyed on
/// `(seed, domain name)`.
pub fn extract_features(
    featurizer: &dyn Featurize,
    domains: &[SampleDomain],
    sample_cap: Option<usize>,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    domains
        .iter()
        .map(|d| {
            if d.samples.is_empty() {
                return Err(MetricsError::EmptyDomain(d.name.clone()));
            }
            let idx: Vec<usize> = (0..d.samples.len()).collect();
            let chosen = match sample_cap {
                Some(cap) if cap < idx.len() => {
                    let mut order = idx;
                    order.shuffle(&mut keyed_rng(seed, &[hash_str(CAP_TAG), hash_str(&d.name)]));
                    order.truncate(cap);
                    order
                }
                _ => idx,
            };
            chosen
                .into_iter()
                .map(|i| {
                    featurizer
                        .featurize(&d.samples[i])
                        .map_err(|message| MetricsError::Featurizer {
                            domain: d.name.clone(),
                            message,
                        })
                })
                .collect()
        })
        .collect()
}

/// Pairwise JS divergence between binned feature distributions of each domain.
pub fn representation_idd(
    featurizer: &dyn Featurize,
    domains: &[SampleDomain],
    opts: &RepIddOptions,
) -> Result<IddMatrix> {
    if domains.is_empty() {
        return Err(MetricsError::NoDomains);
    }
    let features = extract_features(featurizer, domains, opts.sample_cap, opts.seed)?;
    let dims = features[0][0].len();
    if let Some((d, bad)) = features
        .iter()
        .enumerate()
        .find_map(|(d, f)| f.iter().find(|v| v.len() != dims).map(|v| (d, v.len())))
    {
        return Err(MetricsError::Featurizer {
            domain: domains[d].name.clone(),
            message: format!("feature dimension {bad}, expected {dims}"),
        });
    }
    let ranges = match opts.range {
        RangePolicy::GlobalMinMax => min_max_ranges(features.iter().flatten(), dims),
        RangePolicy::Fixed { lo, hi } => {
            if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                return Err(HistogramError::InvalidRange { lo, hi }.into());
            }
            vec![(lo, hi); dims]
        }
    };
    let hists = features
        .iter()
        .map(|f| feature_histogram_in(f, opts.bins, &ranges))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let values = pairwise(&hists, |h| &h.probs)?;
    Ok(IddMatrix {
        domain_names: domains.iter().map(|d| d.name.clone()).collect(),
        values,
        sample_counts: features.iter().map(Vec::len).collect(),
        pixel_counts: None,
        reference: None,
        sample_cap: opts.sample_cap,
        seed: opts.seed,
        log_base: LOG_BASE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{MemorySource, PixelGrid};

    fn solid_domain(name: &str, class_images: &[(&str, Vec<[u8; 3]>)]) -> (DomainSpec, MemorySource) {
        let mut src = MemorySource::new();
        let mut classes = BTreeMap::new();
        for (class, colors) in class_images {
            let mut paths = Vec::new();
            for (i, c) in colors.iter().enumerate() {
                let p = format!("{name}/{class}/{i}.png");
                src.insert(p.clone(), PixelGrid::solid(2, 2, *c).unwrap());
                paths.push(p);
            }
            classes.insert(class.to_string(), paths);
        }
        (DomainSpec { name: name.into(), classes }, src)
    }

    #[test]
    fn icv_of_duplicates_is_zero() {
        let (d, src) = solid_domain("a", &[("x", vec![[10, 20, 30]; 5]), ("y", vec![[1, 1, 1]; 4])]);
        let r = intra_class_variation(&d, &src, &IcvOptions::default()).unwrap();
        assert_eq!(r.icv, 0.0);
        assert_eq!(r.per_trial.len(), 3);
        assert_eq!(r.classes, vec!["x", "y"]);
    }

    #[test]
    fn icv_black_white_pair_is_one() {
        let (d, src) = solid_domain("a", &[("x", vec![[0, 0, 0], [255, 255, 255]])]);
        let r = intra_class_variation(&d, &src, &IcvOptions::default()).unwrap();
        assert_eq!(r.icv, 1.0);
        assert!(r.per_trial.iter().all(|row| row == &vec![1.0]));
    }

    #[test]
    fn icv_drops_singleton_classes() {
        let (d, src) = solid_domain("a", &[("x", vec![[0, 0, 0]; 2]), ("y", vec![[9, 9, 9]])]);
        let r = intra_class_variation(&d, &src, &IcvOptions::default()).unwrap();
        assert_eq!(r.dropped_classes, vec!["y"]);
        assert_eq!(r.classes, vec!["x"]);
    }

    #[test]
    fn icv_errors() {
        let (d, src) = solid_domain("a", &[("y", vec![[9, 9, 9]])]);
        assert!(matches!(
            intra_class_variation(&d, &src, &IcvOptions::default()),
            Err(MetricsError::NoUsableClass(_))
        ));
        let (d, src) = solid_domain("a", &[("y", vec![[9, 9, 9]; 2])]);
        let opts = IcvOptions { trials: 0, ..Default::default() };
        assert!(matches!(
            intra_class_variation(&d, &src, &opts),
            Err(MetricsError::InvalidTrials)
        ));
    }

    #[test]
    fn icv_odd_class_uses_equal_halves() {
        // three images: two black, one white. Every split drops one image and
        // compares single-image halves, so each trial scores 0 or 1.
        let (d, src) = solid_domain("a", &[("x", vec![[0, 0, 0], [0, 0, 0], [255, 255, 255]])]);
        let opts = IcvOptions { trials: 16, seed: 3, ..Default::default() };
        let r = intra_class_variation(&d, &src, &opts).unwrap();
        assert!(r.per_trial.iter().all(|row| row[0] == 0.0 || row[0] == 1.0));
    }

    #[test]
    fn icv_resample_and_cap() {
        let colors: Vec<[u8; 3]> = (0..12).map(|i| [i * 20, 0, 0]).collect();
        let (d, src) = solid_domain("a", &[("x", colors)]);
        for resample in [false, true] {
            let opts = IcvOptions { sample_cap: Some(4), resample, seed: 5, ..Default::default() };
            let a = intra_class_variation(&d, &src, &opts).unwrap();
            assert_eq!(a, intra_class_variation(&d, &src, &opts).unwrap());
            assert!(a.icv > 0.0 && a.icv <= 1.0);
        }
        let opts = IcvOptions { sample_cap: Some(1), ..Default::default() };
        assert!(intra_class_variation(&d, &src, &opts).is_err());
    }

    #[test]
    fn idd_red_vs_blue() {
        let (r, src_r) = solid_domain("red", &[("x", vec![[255, 0, 0]; 3])]);
        let (b, src_b) = solid_domain("blue", &[("x", vec![[0, 0, 255]; 2])]);
        let v = inter_domain_dissimilarity(&r, &src_r, &b, &src_b, &IddOptions::default()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn idd_empty_domain() {
        let d = DomainSpec { name: "e".into(), classes: BTreeMap::new() };
        let src = MemorySource::new();
        assert!(matches!(
            inter_domain_dissimilarity(&d, &src, &d, &src, &IddOptions::default()),
            Err(MetricsError::EmptyDomain(_))
        ));
    }

    #[test]
    fn idd_matrix_single_domain() {
        let (r, src) = solid_domain("red", &[("x", vec![[255, 0, 0]; 3])]);
        let m = idd_matrix(&[r], &src, None, &IddOptions::default()).unwrap();
        assert_eq!(m.values, vec![vec![0.0]]);
        assert_eq!(m.sample_counts, vec![3]);
        assert_eq!(m.pixel_counts, Some(vec![12]));
    }

    #[test]
    fn idd_matrix_reference_column() {
        let (r, src) = solid_domain("red", &[("x", vec![[255, 0, 0], [200, 0, 0]])]);
        let (mut reference, ref_src) = solid_domain("red", &[("x", vec![[255, 0, 0], [200, 0, 0]])]);
        reference.name = "ref".into();
        let (g, src_g) = solid_domain("green", &[("x", vec![[0, 255, 0]])]);
        let mut all = src.clone();
        for p in g.samples() {
            all.insert(p, src_g.load(p).unwrap());
        }
        let m = idd_matrix(&[r, g], &all, Some((&reference, &ref_src)), &IddOptions::default())
            .unwrap();
        assert_eq!(m.domain_names, vec!["red", "green", "ref"]);
        assert_eq!(m.get("ref", "red"), Some(0.0));
        assert_eq!(m.reference.as_deref(), Some("ref"));
        assert!(m.get("ref", "green").unwrap() > 0.5);
    }

    #[test]
    fn idd_cap_at_least_size_matches_uncapped() {
        let colors: Vec<[u8; 3]> = (0..6).map(|i| [i * 40, 7, 200 - i * 10]).collect();
        let (a, src_a) = solid_domain("a", &[("x", colors.clone())]);
        let (b, src_b) = solid_domain("b", &[("x", colors.into_iter().rev().take(4).collect())]);
        let full = inter_domain_dissimilarity(&a, &src_a, &b, &src_b, &IddOptions::default()).unwrap();
        let capped = IddOptions { sample_cap: Some(6), seed: 9, ..Default::default() };
        assert_eq!(
            full,
            inter_domain_dissimilarity(&a, &src_a, &b, &src_b, &capped).unwrap()
        );
        let small = IddOptions { sample_cap: Some(2), seed: 9, ..Default::default() };
        let m = idd_matrix(&[a], &src_a, None, &small).unwrap();
        assert_eq!(m.sample_counts, vec![2]);
    }

    #[test]
    fn representation_identity_disjoint_bins() {
        let domains = vec![
            SampleDomain { name: "a".into(), samples: vec![vec![0.0]] },
            SampleDomain { name: "b".into(), samples: vec![vec![1.0]] },
        ];
        let opts = RepIddOptions { bins: 2, range: RangePolicy::Fixed { lo: 0.0, hi: 1.0 }, ..Default::default() };
        let m = representation_idd(&IdentityFeatures, &domains, &opts).unwrap();
        assert_eq!(m.values[0][1], 1.0);
        assert_eq!(m.values[1][0], 1.0);
    }

    #[test]
    fn representation_identical_sets() {
        let samples = vec![vec![0.1, 2.0], vec![0.7, -1.0], vec![0.3, 0.0]];
        let domains = vec![
            SampleDomain { name: "a".into(), samples: samples.clone() },
            SampleDomain { name: "b".into(), samples },
        ];
        let m = representation_idd(&IdentityFeatures, &domains, &RepIddOptions::default()).unwrap();
        assert_eq!(m.values, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn representation_errors() {
        let domains = vec![SampleDomain { name: "a".into(), samples: vec![] }];
        assert!(matches!(
            representation_idd(&IdentityFeatures, &domains, &RepIddOptions::default()),
            Err(MetricsError::EmptyDomain(_))
        ));
        let domains = vec![
            SampleDomain { name: "a".into(), samples: vec![vec![0.0]] },
            SampleDomain { name: "b".into(), samples: vec![vec![0.0, 1.0]] },
        ];
        let err = representation_idd(&IdentityFeatures, &domains, &RepIddOptions::default()).unwrap_err();
        assert_eq!(err.kind(), "DimensionMismatch");
    }
}
