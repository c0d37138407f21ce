//! Stylistic domain shift measures for multi-domain image corpora, and a
//! small grounded trainer with checkable gradients.
//!
//! - [`corpus`]: manifests, directory scans, decoding, splits
//! - [`histogram`]: 768-bin color distributions and feature histograms
//! - [`divergence`]: KL and Jensen-Shannon divergences in bits
//! - [`metrics`]: intra-class variation and inter-domain dissimilarity
//! - [`smos`]: precursor training, grounded training, gradient checks

pub mod corpus;
pub mod divergence;
pub mod histogram;
pub mod json;
pub mod seed;
pub mod metrics;
pub mod smos;
