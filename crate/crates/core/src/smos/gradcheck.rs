//! Central finite-difference gradient checks.

use super::network::{Model, ParamBlock};
use super::train::{term_loss_and_grad, LabeledSet, LossTerm};
use super::{Result, SmosError};
use crate::seed::{hash_str, keyed_rng};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Denominator floor for the relative error, so coordinates whose true
/// gradient is zero are judged on absolute error.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    pub h: f64,
    pub tolerance: f64,
    /// Check at most this many randomly chosen coordinates per block.
    pub max_coords_per_block: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            h: 1e-5,
            tolerance: 1e-4,
            max_coords_per_block: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockReport>,
    pub max_rel_error: f64,
    pub h: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `|a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

/// Compares `analytic` against `(L(θ + h e_i) - L(θ - h e_i)) / 2h`.
///
/// `blocks` splits the parameter vector for reporting; an empty slice checks
/// everything as one block named `params`.
pub fn finite_diff_check<F>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    blocks: &[ParamBlock],
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(opts.h.is_finite() && opts.h > 0.0) {
        return Err(SmosError::InvalidConfig(format!(
            "finite-difference step must be positive, got {}",
            opts.h
        )));
    }
    if analytic.len() != params.len() {
        return Err(SmosError::ShapeMismatch(format!(
            "{} parameters but {} gradient entries",
            params.len(),
            analytic.len()
        )));
    }
    let whole = [ParamBlock {
        name: "params".into(),
        range: 0..params.len(),
    }];
    let blocks = if blocks.is_empty() { &whole[..] } else { blocks };

    let mut theta = params.to_vec();
    let mut reports = Vec::with_capacity(blocks.len());
    for (b, block) in blocks.iter().enumerate() {
        let len = block.range.len();
        let coords: Vec<usize> = match opts.max_coords_per_block {
            Some(k) if k < len => {
                let mut rng = keyed_rng(opts.seed, &[b as u64]);
                let mut picked = sample(&mut rng, len, k).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| block.range.start + i).collect()
            }
            _ => block.range.clone().collect(),
        };
        let mut worst = (0.0, None);
        for &i in &coords {
            let orig = theta[i];
            theta[i] = orig + opts.h;
            let up = loss(&theta);
            theta[i] = orig - opts.h;
            let down = loss(&theta);
            theta[i] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(SmosError::NonFiniteLoss { coordinate: i });
            }
            let numeric = (up - down) / (2.0 * opts.h);
            let err = relative_error(analytic[i], numeric);
            if err > worst.0 || worst.1.is_none() {
                worst = (err, Some(i));
            }
        }
        reports.push(BlockReport {
            name: block.name.clone(),
            checked: coords.len(),
            max_rel_error: worst.0,
            worst_index: worst.1,
        });
    }
    let max_rel_error = reports.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        blocks: reports,
        max_rel_error,
        h: opts.h,
        tolerance: opts.tolerance,
        passed: max_rel_error < opts.tolerance,
    })
}

/// Random networks and batch for checking every loss term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossCheckSetup {
    /// Featurizer layer widths, input first.
    pub dims: Vec<usize>,
    pub n_classes: usize,
    pub batch_size: usize,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for LossCheckSetup {
    fn default() -> Self {
        Self {
            dims: vec![4, 16, 8],
            n_classes: 3,
            batch_size: 4,
            temperature: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermCheck {
    pub loss: LossTerm,
    pub report: GradCheckReport,
}

/// Checks the analytic gradient of each loss term in the parameters it trains.
pub fn check_losses(setup: &LossCheckSetup, opts: &GradCheckOptions) -> Result<Vec<TermCheck>> {
    if setup.batch_size == 0 {
        return Err(SmosError::EmptyBatch);
    }
    let precursor = Model::kaiming(&setup.dims, setup.n_classes, setup.seed, hash_str("check-precursor"))?;
    let dg = Model::kaiming(&setup.dims, setup.n_classes, setup.seed, hash_str("check-dg"))?;
    let mut rng = keyed_rng(setup.seed, &[hash_str("check-batch")]);
    let batch = LabeledSet {
        inputs: (0..setup.batch_size)
            .map(|_| (0..setup.dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
        labels: (0..setup.batch_size).map(|_| rng.gen_range(0..setup.n_classes)).collect(),
        n_classes: setup.n_classes,
    };
    let mut out = Vec::with_capacity(LossTerm::ALL.len());
    for term in LossTerm::ALL {
        let (model, frozen) = match term {
            LossTerm::Source => (&precursor, None),
            _ => (&dg, Some(&precursor)),
        };
        let (_, analytic) = term_loss_and_grad(term, &batch, frozen, model, setup.temperature)?;
        let mut probe = model.clone();
        let mut failure = None;
        let loss = |theta: &[f64]| {
            let eval = probe
                .set_params(theta)
                .and_then(|_| term_loss_and_grad(term, &batch, frozen, &probe, setup.temperature));
            match eval {
                Ok((v, _)) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let report = finite_diff_check(loss, &model.params(), &analytic, &model.param_blocks(), opts);
        if let Some(e) = failure {
            return Err(e);
        }
        out.push(TermCheck { loss: term, report: report? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_loss_term_passes() {
        let checks = check_losses(&LossCheckSetup::default(), &GradCheckOptions::default()).unwrap();
        assert_eq!(checks.len(), 5);
        for c in &checks {
            assert!(c.report.passed, "{c:?}");
        }
    }

    #[test]
    fn quadratic_matches_tightly() {
        let theta = [0.7, -1.3, 2.2, -0.5, 1.9];
        let loss = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>() / 2.0;
        let opts = GradCheckOptions { tolerance: 1e-9, ..Default::default() };
        let r = finite_diff_check(loss, &theta, &theta, &[], &opts).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_rel_error < 1e-9);
        assert_eq!(r.blocks[0].checked, 5);
    }

    #[test]
    fn wrong_gradient_fails() {
        let theta = [1.0, 2.0];
        let loss = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>() / 2.0;
        let r = finite_diff_check(loss, &theta, &[1.0, 2.5], &[], &GradCheckOptions::default())
            .unwrap();
        assert!(!r.passed);
        assert_eq!(r.blocks[0].worst_index, Some(1));
    }

    #[test]
    fn zero_step_is_rejected() {
        let opts = GradCheckOptions { h: 0.0, ..Default::default() };
        assert!(matches!(
            finite_diff_check(|_| 0.0, &[1.0], &[0.0], &[], &opts),
            Err(SmosError::InvalidConfig(_))
        ));
    }

    #[test]
    fn non_finite_loss() {
        let r = finite_diff_check(|t| 1.0 / (t[0] - 1e-5), &[0.0], &[0.0], &[], &Default::default());
        assert!(matches!(r, Err(SmosError::NonFiniteLoss { coordinate: 0 })));
    }

    #[test]
    fn subsampling_is_seeded() {
        let theta: Vec<f64> = (0..50).map(|i| i as f64 * 0.1 + 0.5).collect();
        let blocks = [
            ParamBlock { name: "a".into(), range: 0..30 },
            ParamBlock { name: "b".into(), range: 30..50 },
        ];
        let opts = GradCheckOptions { max_coords_per_block: Some(4), seed: 3, ..Default::default() };
        let loss = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>() / 2.0;
        let r = finite_diff_check(loss, &theta, &theta, &blocks, &opts).unwrap();
        assert_eq!(r.blocks.iter().map(|b| b.checked).collect::<Vec<_>>(), vec![4, 4]);
        assert_eq!(r, finite_diff_check(loss, &theta, &theta, &blocks, &opts).unwrap());
    }
}
