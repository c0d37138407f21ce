//! Binned distributions over pixel values and feature vectors.
//!
//! A [`ChannelDistribution`] is the concatenation R‖G‖B of three 256-bin
//! channel histograms, each carrying a third of the mass, so the 768 entries
//! form a single probability vector. Histograms are built from raw 0..=255
//! values; any affine per-channel normalization maps bins one-to-one and
//! leaves them unchanged.

use crate::corpus::PixelGrid;
use crate::divergence::{compensated_sum, MASS_TOLERANCE};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHANNELS: usize = 3;
pub const BINS_PER_CHANNEL: usize = 256;
pub const CHANNEL_BINS: usize = CHANNELS * BINS_PER_CHANNEL;
pub const CHANNEL_WEIGHT: f64 = 1.0 / 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistogramError {
    #[error("cannot pool an empty set of images")]
    EmptyPool,
    #[error("no feature vectors given")]
    EmptyFeatures,
    #[error("feature vector {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("need at least 2 bins, got {0}")]
    InvalidBins(usize),
    #[error("invalid range ({lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("feature vector {index} holds a non-finite value")]
    NonFinite { index: usize },
    #[error("not a valid distribution: {0}")]
    NotADistribution(String),
}

pub type Result<T> = std::result::Result<T, HistogramError>;

/// Raw per-channel bin counts. Merging is plain addition, so counts from
/// many images can be combined in any order before normalizing once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelCounts {
    counts: Vec<u64>,
    pixels: u64,
}

impl Default for ChannelCounts {
    fn default() -> Self {
        Self {
            counts: vec![0; CHANNEL_BINS],
            pixels: 0,
        }
    }
}

impl ChannelCounts {
    pub fn from_grid(grid: &PixelGrid) -> Self {
        let mut out = Self::default();
        for px in grid.pixels() {
            for (c, &v) in px.iter().enumerate() {
                out.counts[c * BINS_PER_CHANNEL + v as usize] += 1;
            }
        }
        out.pixels = grid.pixel_count() as u64;
        out
    }

    pub fn merge(&mut self, other: &ChannelCounts) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.pixels += other.pixels;
    }

    pub fn pixels(&self) -> u64 {
        self.pixels
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Normalizes to a distribution. `None` when no pixels were counted.
    pub fn to_distribution(&self) -> Option<ChannelDistribution> {
        if self.pixels == 0 {
            return None;
        }
        let denom = CHANNELS as f64 * self.pixels as f64;
        Some(ChannelDistribution {
            probs: self.counts.iter().map(|&c| c as f64 / denom).collect(),
        })
    }
}

/// 768-bin color distribution: R bins, then G, then B.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDistribution {
    probs: Vec<f64>,
}

impl ChannelDistribution {
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.len() != CHANNEL_BINS {
            return Err(HistogramError::NotADistribution(format!(
                "expected {CHANNEL_BINS} components, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(HistogramError::NotADistribution(
                "components must be finite and non-negative".into(),
            ));
        }
        for (c, block) in probs.chunks(BINS_PER_CHANNEL).enumerate() {
            let mass = compensated_sum(block.iter().copied());
            if (mass - CHANNEL_WEIGHT).abs() > MASS_TOLERANCE {
                return Err(HistogramError::NotADistribution(format!(
                    "channel {c} carries mass {mass}, expected 1/3"
                )));
            }
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Bins of one channel (0 = R, 1 = G, 2 = B).
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.probs[c * BINS_PER_CHANNEL..(c + 1) * BINS_PER_CHANNEL]
    }

    pub fn bins_per_channel(&self) -> usize {
        BINS_PER_CHANNEL
    }
}

#[derive(Deserialize)]
struct ChannelDistributionRepr {
    bins_per_channel: usize,
    probs: Vec<f64>,
}

impl Serialize for ChannelDistribution {
    /// `{"bins_per_channel": 256, "probs": [...]}`
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("ChannelDistribution", 2)?;
        st.serialize_field("bins_per_channel", &BINS_PER_CHANNEL)?;
        st.serialize_field("probs", &self.probs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for ChannelDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ChannelDistributionRepr::deserialize(d)?;
        if repr.bins_per_channel != BINS_PER_CHANNEL {
            return Err(serde::de::Error::custom(format!(
                "bins_per_channel must be {BINS_PER_CHANNEL}"
            )));
        }
        ChannelDistribution::from_probs(repr.probs).map_err(serde::de::Error::custom)
    }
}

/// How several images combine into one distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolMode {
    /// Sum bin counts over every pixel of every image, then normalize.
    #[default]
    PixelWeighted,
    /// Average the per-image distributions, each image weighted equally.
    ImageAveraged,
}

/// Color distribution of a single image.
pub fn image_histogram(grid: &PixelGrid) -> ChannelDistribution {
    ChannelCounts::from_grid(grid)
        .to_distribution()
        .expect("pixel grids are never empty")
}

/// Pixel-weighted pooled distribution of several images.
pub fn pool_histogram(grids: &[PixelGrid]) -> Result<ChannelDistribution> {
    pool_histogram_with(grids, PoolMode::PixelWeighted)
}

pub fn pool_histogram_with(grids: &[PixelGrid], mode: PoolMode) -> Result<ChannelDistribution> {
    let counts: Vec<ChannelCounts> = grids.iter().map(ChannelCounts::from_grid).collect();
    pool_counts(counts.iter(), mode)
}

/// Pools precomputed per-image counts.
pub fn pool_counts<'a, I>(counts: I, mode: PoolMode) -> Result<ChannelDistribution>
where
    I: IntoIterator<Item = &'a ChannelCounts>,
{
    match mode {
        PoolMode::PixelWeighted => {
            let mut total = ChannelCounts::default();
            for c in counts {
                total.merge(c);
            }
            total.to_distribution().ok_or(HistogramError::EmptyPool)
        }
        PoolMode::ImageAveraged => {
            let mut sums = vec![0.0; CHANNEL_BINS];
            let mut n = 0usize;
            for c in counts {
                let denom = CHANNELS as f64 * c.pixels as f64;
                for (s, &k) in sums.iter_mut().zip(&c.counts) {
                    *s += k as f64 / denom;
                }
                n += 1;
            }
            if n == 0 {
                return Err(HistogramError::EmptyPool);
            }
            Ok(ChannelDistribution {
                probs: sums.into_iter().map(|s| s / n as f64).collect(),
            })
        }
    }
}

/// Range used to bin each feature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum RangePolicy {
    /// Per dimension, the min and max over all given vectors.
    #[default]
    GlobalMinMax,
    /// One fixed interval for every dimension; outside values clamp to the edge bins.
    Fixed { lo: f64, hi: f64 },
}

/// `dims` blocks of `bins` entries, each block holding mass `1/dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDistribution {
    pub probs: Vec<f64>,
    pub dims: usize,
    pub bins: usize,
    pub ranges: Vec<(f64, f64)>,
}

impl FeatureDistribution {
    pub fn block(&self, dim: usize) -> &[f64] {
        &self.probs[dim * self.bins..(dim + 1) * self.bins]
    }
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    let first = features.first().ok_or(HistogramError::EmptyFeatures)?;
    let d = first.len();
    if d == 0 {
        return Err(HistogramError::DimensionMismatch {
            index: 0,
            expected: 1,
            found: 0,
        });
    }
    for (index, v) in features.iter().enumerate() {
        if v.len() != d {
            return Err(HistogramError::DimensionMismatch {
                index,
                expected: d,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(HistogramError::NonFinite { index });
        }
    }
    Ok(d)
}

/// Per-dimension `(min, max)` over a set of vectors.
pub fn min_max_ranges<'a, I>(features: I, dims: usize) -> Vec<(f64, f64)>
where
    I: IntoIterator<Item = &'a Vec<f64>>,
{
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); dims];
    for v in features {
        for (r, &x) in ranges.iter_mut().zip(v) {
            r.0 = r.0.min(x);
            r.1 = r.1.max(x);
        }
    }
    ranges
}

/// Uniform bin of `x` in `[lo, hi]`: values at `hi` land in the last bin,
/// values outside clamp, and a zero-width range maps everything to bin 0.
pub fn bin_index(x: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = (x - lo) / (hi - lo) * bins as f64;
    if t <= 0.0 {
        0
    } else {
        (t.floor() as usize).min(bins - 1)
    }
}

/// Histogram of feature vectors over explicit per-dimension ranges.
pub fn feature_histogram_in(
    features: &[Vec<f64>],
    bins: usize,
    ranges: &[(f64, f64)],
) -> Result<FeatureDistribution> {
    if bins < 2 {
        return Err(HistogramError::InvalidBins(bins));
    }
    let d = check_features(features)?;
    if ranges.len() != d {
        return Err(HistogramError::DimensionMismatch {
            index: 0,
            expected: ranges.len(),
            found: d,
        });
    }
    if let Some(&(lo, hi)) = ranges
        .iter()
        .find(|(lo, hi)| !lo.is_finite() || !hi.is_finite() || hi < lo)
    {
        return Err(HistogramError::InvalidRange { lo, hi });
    }
    let mut counts = vec![0u64; d * bins];
    for v in features {
        for (k, (&x, &(lo, hi))) in v.iter().zip(ranges).enumerate() {
            counts[k * bins + bin_index(x, lo, hi, bins)] += 1;
        }
    }
    let denom = features.len() as f64 * d as f64;
    Ok(FeatureDistribution {
        probs: counts.into_iter().map(|c| c as f64 / denom).collect(),
        dims: d,
        bins,
        ranges: ranges.to_vec(),
    })
}

/// Histogram of feature vectors with `bins` uniform bins per dimension.
pub fn feature_histogram(
    features: &[Vec<f64>],
    bins: usize,
    policy: RangePolicy,
) -> Result<FeatureDistribution> {
    let d = check_features(features)?;
    let ranges = match policy {
        RangePolicy::GlobalMinMax => min_max_ranges(features, d),
        RangePolicy::Fixed { lo, hi } => {
            if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                return Err(HistogramError::InvalidRange { lo, hi });
            }
            vec![(lo, hi); d]
        }
    };
    feature_histogram_in(features, bins, &ranges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(w: u32, h: u32, px: &[[u8; 3]]) -> PixelGrid {
        PixelGrid::from_pixels(w, h, px).unwrap()
    }

    #[test]
    fn all_red_is_three_deltas() {
        let d = image_histogram(&PixelGrid::solid(2, 2, [255, 0, 0]).unwrap());
        for (i, &p) in d.probs().iter().enumerate() {
            let expected = if i == 255 || i == 256 || i == 512 { 1.0 / 3.0 } else { 0.0 };
            assert_eq!(p, expected, "bin {i}");
        }
    }

    #[test]
    fn black_and_white_pair_splits_each_channel() {
        let d = image_histogram(&grid(1, 2, &[[0, 0, 0], [255, 255, 255]]));
        for c in 0..3 {
            let ch = d.channel(c);
            assert_eq!(ch[0], 1.0 / 6.0);
            assert_eq!(ch[255], 1.0 / 6.0);
            assert_eq!(ch[1..255].iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn pool_of_one_equals_single() {
        let g = grid(2, 1, &[[1, 2, 3], [4, 5, 6]]);
        assert_eq!(pool_histogram(std::slice::from_ref(&g)).unwrap(), image_histogram(&g));
    }

    #[test]
    fn pool_black_white_mixture() {
        let d = pool_histogram(&[
            PixelGrid::solid(2, 2, [0, 0, 0]).unwrap(),
            PixelGrid::solid(2, 2, [255, 255, 255]).unwrap(),
        ])
        .unwrap();
        for c in 0..3 {
            assert_eq!(d.channel(c)[0], 1.0 / 6.0);
            assert_eq!(d.channel(c)[255], 1.0 / 6.0);
        }
    }

    #[test]
    fn pool_empty_is_error() {
        assert_eq!(pool_histogram(&[]), Err(HistogramError::EmptyPool));
        assert_eq!(
            pool_histogram_with(&[], PoolMode::ImageAveraged),
            Err(HistogramError::EmptyPool)
        );
    }

    #[test]
    fn image_averaged_weights_images_equally() {
        // 1x1 black and 1x3 white: equal image weight gives 1/6 at each end
        let d = pool_histogram_with(
            &[
                PixelGrid::solid(1, 1, [0, 0, 0]).unwrap(),
                PixelGrid::solid(1, 3, [255, 255, 255]).unwrap(),
            ],
            PoolMode::ImageAveraged,
        )
        .unwrap();
        assert!((d.channel(0)[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((d.channel(0)[255] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn distribution_json_shape() {
        let d = image_histogram(&PixelGrid::solid(1, 1, [9, 9, 9]).unwrap());
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["bins_per_channel"], 256);
        assert_eq!(v["probs"].as_array().unwrap().len(), 768);
        let back: ChannelDistribution = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);
        assert!(ChannelDistribution::from_probs(vec![0.0; 768]).is_err());
    }

    #[test]
    fn feature_single_vector_is_delta_per_dimension() {
        let d = feature_histogram(&[vec![0.3, -2.0, 7.0]], 5, RangePolicy::GlobalMinMax).unwrap();
        for k in 0..3 {
            let block = d.block(k);
            assert_eq!(block[0], 1.0 / 3.0);
            assert_eq!(block[1..].iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn feature_two_point_fixed_range() {
        let d = feature_histogram(&[vec![0.0], vec![1.0]], 2, RangePolicy::Fixed { lo: 0.0, hi: 1.0 })
            .unwrap();
        assert_eq!(d.probs, vec![0.5, 0.5]);
    }

    #[test]
    fn feature_outside_fixed_range_clamps() {
        let d = feature_histogram(&[vec![-5.0], vec![5.0]], 4, RangePolicy::Fixed { lo: 0.0, hi: 1.0 })
            .unwrap();
        assert_eq!(d.probs, vec![0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn feature_errors() {
        assert_eq!(
            feature_histogram(&[], 4, RangePolicy::GlobalMinMax),
            Err(HistogramError::EmptyFeatures)
        );
        assert!(matches!(
            feature_histogram(&[vec![1.0], vec![1.0, 2.0]], 4, RangePolicy::GlobalMinMax),
            Err(HistogramError::DimensionMismatch { index: 1, .. })
        ));
        assert_eq!(
            feature_histogram(&[vec![1.0]], 1, RangePolicy::GlobalMinMax),
            Err(HistogramError::InvalidBins(1))
        );
        assert!(matches!(
            feature_histogram(&[vec![1.0]], 2, RangePolicy::Fixed { lo: 1.0, hi: 1.0 }),
            Err(HistogramError::InvalidRange { .. })
        ));
        assert_eq!(
            feature_histogram(&[vec![f64::NAN]], 2, RangePolicy::GlobalMinMax),
            Err(HistogramError::NonFinite { index: 0 })
        );
    }

    #[test]
    fn degenerate_dimension_lands_in_bin_zero() {
        let d = feature_histogram(&[vec![2.0, 0.0], vec![2.0, 1.0]], 4, RangePolicy::GlobalMinMax)
            .unwrap();
        assert_eq!(d.block(0), &[0.5, 0.0, 0.0, 0.0]);
        assert_eq!(d.block(1), &[0.25, 0.0, 0.0, 0.25]);
    }

    fn arb_grid() -> impl Strategy<Value = PixelGrid> {
        (1u32..6, 1u32..6).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), (w * h * 3) as usize)
                .prop_map(move |data| PixelGrid::new(w, h, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn pooled_histograms_are_normalized(grids in proptest::collection::vec(arb_grid(), 1..5)) {
            for mode in [PoolMode::PixelWeighted, PoolMode::ImageAveraged] {
                let d = pool_histogram_with(&grids, mode).unwrap();
                prop_assert!((compensated_sum(d.probs().iter().copied()) - 1.0).abs() < 1e-9);
                prop_assert!(ChannelDistribution::from_probs(d.probs().to_vec()).is_ok());
            }
        }

        #[test]
        fn pooling_ignores_order(mut grids in proptest::collection::vec(arb_grid(), 1..5)) {
            let a = pool_histogram(&grids).unwrap();
            grids.reverse();
            prop_assert_eq!(a, pool_histogram(&grids).unwrap());
        }

        #[test]
        fn feature_histogram_normalized_and_order_free(
            mut feats in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 3), 1..40),
            bins in 2usize..16,
        ) {
            let a = feature_histogram(&feats, bins, RangePolicy::GlobalMinMax).unwrap();
            prop_assert!((a.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for k in 0..3 {
                prop_assert!((a.block(k).iter().sum::<f64>() - 1.0 / 3.0).abs() < 1e-9);
            }
            feats.reverse();
            prop_assert_eq!(a, feature_histogram(&feats, bins, RangePolicy::GlobalMinMax).unwrap());
        }

        #[test]
        fn affine_normalization_preserves_bins(g in arb_grid()) {
            // (v / 255 - 0.5) / 0.5 maps [0, 255] onto [-1, 1]
            let feats: Vec<Vec<f64>> = g
                .pixels()
                .map(|p| p.iter().map(|&v| (f64::from(v) / 255.0 - 0.5) / 0.5).collect())
                .collect();
            let fd = feature_histogram(&feats, 256, RangePolicy::Fixed { lo: -1.0, hi: 1.0 }).unwrap();
            let direct = image_histogram(&g);
            prop_assert_eq!(fd.probs.as_slice(), direct.probs());
        }
    }
}
