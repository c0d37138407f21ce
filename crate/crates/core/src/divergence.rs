//! Kullback-Leibler and Jensen-Shannon divergences over discrete distributions.
//!
//! All values are in bits (log base 2), which bounds the Jensen-Shannon
//! divergence by exactly 1. Sums are accumulated with Neumaier compensation
//! since histogram vectors carry hundreds of tiny terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Logarithm base used by every divergence in this crate.
pub const LOG_BASE: u32 = 2;

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Floating-point excess over the JS bounds that is silently clamped.
pub const JS_CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("not a distribution: {0}")]
    NotADistribution(String),
    #[error("smoothing must be finite and non-negative, got {0}")]
    InvalidSmoothing(f64),
    #[error("internal error: JS divergence {0} escaped [0, 1]")]
    OutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, DivergenceError>;

/// Running sum with Neumaier's compensation term.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of a sequence.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().total()
}

/// A validated probability vector: at least two non-negative finite
/// components summing to one within [`MASS_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate(&probs)?;
        Ok(Self(probs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl<'de> Deserialize<'de> for ProbVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        ProbVector::new(probs).map_err(serde::de::Error::custom)
    }
}

fn validate(probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(DivergenceError::NotADistribution(format!(
            "needs at least 2 outcomes, got {}",
            probs.len()
        )));
    }
    if let Some((i, x)) = probs
        .iter()
        .enumerate()
        .find(|(_, x)| !x.is_finite() || **x < 0.0)
    {
        return Err(DivergenceError::NotADistribution(format!(
            "component {i} is {x}"
        )));
    }
    let mass = compensated_sum(probs.iter().copied());
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(DivergenceError::NotADistribution(format!(
            "total mass {mass} differs from 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceKind {
    #[serde(rename = "KL")]
    Kl,
    #[serde(rename = "JS")]
    Js,
}

/// A divergence in bits. KL values may be `+inf` when smoothing is off and
/// `q` misses part of the support of `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub value: f64,
    pub kind: DivergenceKind,
}

impl DivergenceValue {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

fn check_lengths(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(DivergenceError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// `sum_x p(x) log2(p(x)/q(x))` with `0 log(0/q) = 0`. No validation.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = NeumaierSum::new();
    for (&px, &qx) in p.iter().zip(q) {
        if px > 0.0 {
            if qx <= 0.0 {
                return f64::INFINITY;
            }
            acc.add(px * (px / qx).log2());
        }
    }
    acc.total()
}

/// KL divergence in bits with optional additive smoothing.
///
/// With `smoothing = eps > 0` both vectors become `(p(x) + eps) / (1 + n eps)`
/// before evaluation, which makes the result finite.
pub fn kl_divergence(p: &ProbVector, q: &ProbVector, smoothing: f64) -> Result<DivergenceValue> {
    check_lengths(p.as_slice(), q.as_slice())?;
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(DivergenceError::InvalidSmoothing(smoothing));
    }
    let value = if smoothing == 0.0 {
        kl_bits(p.as_slice(), q.as_slice())
    } else {
        let norm = 1.0 + p.len() as f64 * smoothing;
        let smooth = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| (x + smoothing) / norm).collect() };
        kl_bits(&smooth(p.as_slice()), &smooth(q.as_slice()))
    };
    Ok(DivergenceValue {
        value,
        kind: DivergenceKind::Kl,
    })
}

/// JS divergence in bits on raw slices, without distribution validation.
///
/// The mixture is `0.5 p + 0.5 q`, so `m(x) = 0` only where both inputs are
/// zero and those terms vanish. Results within [`JS_CLAMP_TOLERANCE`] outside
/// `[0, 1]` are clamped; anything further out is an error.
pub fn js_bits(p: &[f64], q: &[f64]) -> Result<f64> {
    check_lengths(p, q)?;
    let mut acc = NeumaierSum::new();
    for (&px, &qx) in p.iter().zip(q) {
        let m = 0.5 * px + 0.5 * qx;
        let term = |a: f64| if a > 0.0 { a * (a / m).log2() } else { 0.0 };
        // one addition per bin keeps swapped arguments bit-identical
        acc.add(term(px) + term(qx));
    }
    let value = 0.5 * acc.total();
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if value < 0.0 && value > -JS_CLAMP_TOLERANCE {
        Ok(0.0)
    } else if value > 1.0 && value < 1.0 + JS_CLAMP_TOLERANCE {
        Ok(1.0)
    } else {
        Err(DivergenceError::OutOfRange(value))
    }
}

/// Jensen-Shannon divergence `0.5 (KL(p || m) + KL(q || m))`, `m = (p + q) / 2`.
pub fn js_divergence(p: &ProbVector, q: &ProbVector) -> Result<DivergenceValue> {
    Ok(DivergenceValue {
        value: js_bits(p.as_slice(), q.as_slice())?,
        kind: DivergenceKind::Js,
    })
}
