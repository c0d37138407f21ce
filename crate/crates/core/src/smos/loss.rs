//! Differentiable losses: cross-entropy, the softmax-JS grounding term and
//! the last-layer KL regularizer.

use super::{Result, SmosError};
use crate::divergence::js_bits;
use std::f64::consts::LN_2;

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(SmosError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Max-subtracted log-softmax.
pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    z.iter().map(|v| v - lse).collect()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `-ln softmax(logits)[label]`.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    Ok(cross_entropy_with_grad(logits, label)?.0)
}

/// Cross-entropy and its gradient `softmax(logits) - onehot(label)`.
pub fn cross_entropy_with_grad(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if logits.len() < 2 {
        return Err(SmosError::ShapeMismatch(format!(
            "cross-entropy needs at least 2 classes, got {}",
            logits.len()
        )));
    }
    if label >= logits.len() {
        return Err(SmosError::LabelOutOfRange {
            label,
            n_classes: logits.len(),
        });
    }
    let ls = log_softmax(logits);
    let mut grad: Vec<f64> = ls.iter().map(|v| v.exp()).collect();
    grad[label] -= 1.0;
    Ok((-ls[label], grad))
}

/// JS divergence (bits) between temperature-1 softmaxes of two feature vectors.
pub fn grounding_js(fs_out: &[f64], f_out: &[f64]) -> Result<f64> {
    Ok(grounding_js_with_grad(fs_out, f_out, 1.0)?.0)
}

/// Grounding divergence at temperature `t` and its gradient with respect to
/// `f_out`. The precursor features `fs_out` are treated as constants.
///
/// With `q = softmax(f_out / t)`, `p = softmax(fs_out / t)`, `m = (p + q) / 2`,
/// the partial derivative in `q_k` is `ln(q_k / m_k) / (2 ln 2)`, which is
/// then pushed through the softmax Jacobian.
pub fn grounding_js_with_grad(fs_out: &[f64], f_out: &[f64], t: f64) -> Result<(f64, Vec<f64>)> {
    check_dims(fs_out, f_out)?;
    if fs_out.is_empty() {
        return Err(SmosError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(SmosError::InvalidConfig(format!("temperature must be positive, got {t}")));
    }
    let scale = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x / t).collect() };
    let p = softmax(&scale(fs_out));
    let q = softmax(&scale(f_out));
    let value = js_bits(&p, &q)?;
    let dq: Vec<f64> = p
        .iter()
        .zip(&q)
        .map(|(&pk, &qk)| {
            let m = 0.5 * pk + 0.5 * qk;
            if qk > 0.0 {
                (qk / m).ln() / (2.0 * LN_2)
            } else {
                0.0
            }
        })
        .collect();
    let mean: f64 = q.iter().zip(&dq).map(|(a, b)| a * b).sum();
    let grad = q.iter().zip(&dq).map(|(qk, gk)| qk * (gk - mean) / t).collect();
    Ok((value, grad))
}

/// `KL(softmax(precursor) || softmax(dg))` in nats.
pub fn kl_head_regularizer(precursor_logits: &[f64], dg_logits: &[f64]) -> Result<f64> {
    Ok(kl_head_with_grad(precursor_logits, dg_logits)?.0)
}

/// KL head regularizer and its gradient `softmax(dg) - softmax(precursor)`
/// with respect to `dg_logits`.
pub fn kl_head_with_grad(precursor_logits: &[f64], dg_logits: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_dims(precursor_logits, dg_logits)?;
    let lp = log_softmax(precursor_logits);
    let lq = log_softmax(dg_logits);
    let value = lp
        .iter()
        .zip(&lq)
        .map(|(a, b)| {
            let p = a.exp();
            if p > 0.0 {
                p * (a - b)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .max(0.0);
    let grad = lp.iter().zip(&lq).map(|(a, b)| b.exp() - a.exp()).collect();
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_n() {
        let v = cross_entropy(&[0.3; 4], 2).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-15);
        assert!((v - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn huge_logit_is_stable() {
        let v = cross_entropy(&[1000.0, 0.0, 0.0], 0).unwrap();
        assert!(v.is_finite() && v.abs() < 1e-12);
        let w = cross_entropy(&[1000.0, 0.0, 0.0], 1).unwrap();
        assert!((w - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_errors() {
        assert!(matches!(
            cross_entropy(&[0.0, 1.0], 2),
            Err(SmosError::LabelOutOfRange { label: 2, n_classes: 2 })
        ));
        assert!(cross_entropy(&[0.0], 0).is_err());
    }

    #[test]
    fn grounding_identical_is_zero_with_zero_grad() {
        let f = [0.3, -1.2, 2.0, 0.0];
        let (v, g) = grounding_js_with_grad(&f, &f, 1.0).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn grounding_mirror_pair() {
        // p = softmax(1, 0), q its mirror, m uniform; evaluated by hand
        let a = 1.0 / (1.0 + (-1.0f64).exp());
        let b = 1.0 - a;
        let kl = a * (a / 0.5).log2() + b * (b / 0.5).log2();
        let v = grounding_js(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - kl).abs() < 1e-15);
        assert!((v - 0.160058).abs() < 1e-6);
    }

    #[test]
    fn grounding_dimension_mismatch() {
        assert!(matches!(
            grounding_js(&[1.0, 0.0], &[1.0]),
            Err(SmosError::DimensionMismatch { .. })
        ));
        assert!(grounding_js_with_grad(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn kl_head_values() {
        assert_eq!(kl_head_regularizer(&[0.2, 0.9], &[0.2, 0.9]).unwrap(), 0.0);
        let expected = (2.0 / 3.0) * (4.0f64 / 3.0).ln() + (1.0 / 3.0) * (2.0f64 / 3.0).ln();
        let v = kl_head_regularizer(&[2f64.ln(), 0.0], &[0.0, 0.0]).unwrap();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.056633).abs() < 1e-6);
        assert!(kl_head_regularizer(&[0.0, 0.0], &[0.0]).is_err());
    }
}
