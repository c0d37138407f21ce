//! Two-phase grounded training.
//!
//! Phase one fits a precursor model on its own labeled data with plain
//! cross-entropy. Phase two freezes the precursor and fits the DG model on
//! the training domains with cross-entropy plus `lambda` times the grounding
//! divergence between precursor and DG features (and optionally `lambda_kl`
//! times a KL term between their logits). The precursor's own loss is still
//! evaluated every step so each history row carries all four components.

use super::adam::{adam_step, AdamConfig, AdamState};
use super::loss::{cross_entropy_with_grad, grounding_js_with_grad, kl_head_with_grad};
use super::network::{Checkpoint, InitMode, Model, ToyFeaturizer};
use super::{Result, SmosError};
use crate::seed::{hash_str, keyed_rng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Grounding coefficient used when none is given.
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_BATCH_SIZE: usize = 16;

/// Labeled input vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(SmosError::EmptyBatch);
        }
        if self.labels.len() != self.inputs.len() {
            return Err(SmosError::ShapeMismatch(format!(
                "{} inputs but {} labels",
                self.inputs.len(),
                self.labels.len()
            )));
        }
        if self.n_classes < 2 {
            return Err(SmosError::ShapeMismatch("need at least 2 classes".into()));
        }
        let d = self.input_dim();
        if let Some(v) = self.inputs.iter().find(|v| v.len() != d) {
            return Err(SmosError::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        if let Some(&label) = self.labels.iter().find(|&&l| l >= self.n_classes) {
            return Err(SmosError::LabelOutOfRange {
                label,
                n_classes: self.n_classes,
            });
        }
        Ok(())
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledSet {
        LabeledSet {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Concatenates sets that share a label space.
    pub fn concat(sets: &[LabeledSet]) -> Result<LabeledSet> {
        let first = sets.first().ok_or(SmosError::EmptyBatch)?;
        if let Some(s) = sets.iter().find(|s| s.n_classes != first.n_classes) {
            return Err(SmosError::ShapeMismatch(format!(
                "label spaces differ: {} vs {} classes",
                first.n_classes, s.n_classes
            )));
        }
        Ok(LabeledSet {
            inputs: sets.iter().flat_map(|s| s.inputs.iter().cloned()).collect(),
            labels: sets.iter().flat_map(|s| s.labels.iter().copied()).collect(),
            n_classes: first.n_classes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Weight of the grounding divergence.
    pub lambda: f64,
    /// Weight of the last-layer KL term; 0 disables it.
    pub lambda_kl: f64,
    /// Softmax temperature applied to features before the grounding divergence.
    pub temperature: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub init: InitMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            lambda_kl: 0.0,
            temperature: 1.0,
            lr: 1e-2,
            batch_size: DEFAULT_BATCH_SIZE,
            steps: 500,
            seed: 0,
            adam_betas: (0.9, 0.999),
            adam_eps: 1e-8,
            init: InitMode::Kaiming,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SmosError::InvalidConfig(m));
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        for (name, v) in [("lambda", self.lambda), ("lambda_kl", self.lambda_kl)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return bad(format!("temperature must be positive, got {}", self.temperature));
        }
        let (b1, b2) = self.adam_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return bad(format!("adam betas must lie in [0, 1), got ({b1}, {b2})"));
        }
        if !(self.adam_eps.is_finite() && self.adam_eps > 0.0) {
            return bad(format!("adam_eps must be positive, got {}", self.adam_eps));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.adam_betas.0,
            beta2: self.adam_betas.1,
            eps: self.adam_eps,
        }
    }

    pub fn loss_weights(&self) -> LossWeights {
        LossWeights {
            lambda: self.lambda,
            lambda_kl: self.lambda_kl,
            temperature: self.temperature,
        }
    }
}

/// Coefficients of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda: f64,
    pub lambda_kl: f64,
    pub temperature: f64,
}

/// One evaluation of `l_s + l_erm + lambda l_js + lambda_kl l_kl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_s: f64,
    pub l_erm: f64,
    pub l_js: f64,
    pub l_kl: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn compose(l_s: f64, l_erm: f64, l_js: f64, l_kl: f64, w: &LossWeights) -> Self {
        Self {
            l_s,
            l_erm,
            l_js,
            l_kl,
            total: l_s + l_erm + w.lambda * l_js + w.lambda_kl * l_kl,
        }
    }
}

/// Mean cross-entropy of a model over a set.
pub fn mean_cross_entropy(model: &Model, set: &LabeledSet) -> Result<f64> {
    set.validate()?;
    let mut total = 0.0;
    for (x, &y) in set.inputs.iter().zip(&set.labels) {
        total += cross_entropy_with_grad(&model.logits(x)?, y)?.0;
    }
    Ok(total / set.len() as f64)
}

fn check_grounding_shapes(precursor: &Model, dg: &Model) -> Result<()> {
    if precursor.featurizer.feat_dim() != dg.featurizer.feat_dim() {
        return Err(SmosError::ShapeMismatch(format!(
            "precursor yields {} features, DG featurizer {}",
            precursor.featurizer.feat_dim(),
            dg.featurizer.feat_dim()
        )));
    }
    if precursor.featurizer.in_dim() != dg.featurizer.in_dim() {
        return Err(SmosError::ShapeMismatch(format!(
            "precursor takes {} inputs, DG featurizer {}",
            precursor.featurizer.in_dim(),
            dg.featurizer.in_dim()
        )));
    }
    Ok(())
}

struct DgTerms {
    l_erm: f64,
    l_js: f64,
    l_kl: f64,
    grad: Vec<f64>,
}

/// Batch means of the DG-side terms and their gradient in the DG parameters.
/// Without a precursor only cross-entropy is evaluated.
fn dg_terms(
    batch: &LabeledSet,
    precursor: Option<&Model>,
    dg: &Model,
    w: &LossWeights,
    ce_weight: f64,
) -> Result<DgTerms> {
    batch.validate()?;
    let use_kl = match precursor {
        Some(p) => {
            check_grounding_shapes(p, dg)?;
            let same_head = p.n_classes() == dg.n_classes();
            if !same_head && w.lambda_kl > 0.0 {
                return Err(SmosError::DimensionMismatch {
                    expected: p.n_classes(),
                    found: dg.n_classes(),
                });
            }
            same_head
        }
        None => false,
    };
    let inv_n = 1.0 / batch.len() as f64;
    let mut out = DgTerms {
        l_erm: 0.0,
        l_js: 0.0,
        l_kl: 0.0,
        grad: vec![0.0; dg.param_count()],
    };
    for (x, &y) in batch.inputs.iter().zip(&batch.labels) {
        let cache = dg.featurizer.forward_cached(x)?;
        let logits = dg.head.forward(cache.output());
        let (ce, mut g_logits) = cross_entropy_with_grad(&logits, y)?;
        out.l_erm += ce * inv_n;
        for g in &mut g_logits {
            *g *= inv_n * ce_weight;
        }
        let mut g_feat = None;
        if let Some(p) = precursor {
            let fs = p.featurizer.forward(x)?;
            let (js, g_js) = grounding_js_with_grad(&fs, cache.output(), w.temperature)?;
            out.l_js += js * inv_n;
            g_feat = Some(g_js.into_iter().map(|g| g * w.lambda * inv_n).collect::<Vec<_>>());
            if use_kl {
                let (kl, g_kl) = kl_head_with_grad(&p.head.forward(&fs), &logits)?;
                out.l_kl += kl * inv_n;
                for (a, b) in g_logits.iter_mut().zip(g_kl) {
                    *a += w.lambda_kl * inv_n * b;
                }
            }
        }
        dg.backward(&cache, &g_logits, g_feat.as_deref(), &mut out.grad);
    }
    Ok(out)
}

/// Evaluates every term of the grounded objective.
///
/// `l_s` is the precursor's mean cross-entropy on `precursor_batch`; `l_erm`,
/// `l_js` and `l_kl` are means over `batch`. `l_kl` is 0 when the two heads
/// have different class counts and `lambda_kl` is 0.
pub fn smos_total_loss(
    batch: &LabeledSet,
    precursor_batch: &LabeledSet,
    precursor: &Model,
    dg: &Model,
    w: &LossWeights,
) -> Result<LossBreakdown> {
    Ok(smos_loss_and_grad(batch, precursor_batch, precursor, dg, w)?.0)
}

/// Loss breakdown plus the gradient of `total` in the DG model's flat
/// parameters. The precursor contributes no gradient.
pub fn smos_loss_and_grad(
    batch: &LabeledSet,
    precursor_batch: &LabeledSet,
    precursor: &Model,
    dg: &Model,
    w: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let l_s = mean_cross_entropy(precursor, precursor_batch)?;
    let t = dg_terms(batch, Some(precursor), dg, w, 1.0)?;
    Ok((LossBreakdown::compose(l_s, t.l_erm, t.l_js, t.l_kl, w), t.grad))
}

/// A single differentiable term of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossTerm {
    /// Precursor cross-entropy, differentiated in the precursor's parameters.
    #[serde(rename = "l_s")]
    Source,
    #[serde(rename = "l_erm")]
    Erm,
    #[serde(rename = "l_js")]
    Grounding,
    #[serde(rename = "l_kl")]
    HeadKl,
    /// The whole grounded objective with unit coefficients.
    #[serde(rename = "total")]
    Total,
}

impl LossTerm {
    pub const ALL: [LossTerm; 5] = [
        LossTerm::Source,
        LossTerm::Erm,
        LossTerm::Grounding,
        LossTerm::HeadKl,
        LossTerm::Total,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossTerm::Source => "l_s",
            LossTerm::Erm => "l_erm",
            LossTerm::Grounding => "l_js",
            LossTerm::HeadKl => "l_kl",
            LossTerm::Total => "total",
        }
    }
}

/// Batch mean of one unweighted term and its gradient.
///
/// `Source` reads `model` as the precursor and ignores `precursor`; the other
/// terms differentiate `model` as the DG model. `Grounding`, `HeadKl` and
/// `Total` need a precursor; `Total` evaluates the precursor's loss on
/// `batch` as well.
pub fn term_loss_and_grad(
    term: LossTerm,
    batch: &LabeledSet,
    precursor: Option<&Model>,
    model: &Model,
    temperature: f64,
) -> Result<(f64, Vec<f64>)> {
    let only = |lambda, lambda_kl| LossWeights { lambda, lambda_kl, temperature };
    let need = || {
        precursor.ok_or_else(|| SmosError::InvalidConfig(format!("{} needs a precursor", term.name())))
    };
    match term {
        LossTerm::Source | LossTerm::Erm => {
            let t = dg_terms(batch, None, model, &only(0.0, 0.0), 1.0)?;
            Ok((t.l_erm, t.grad))
        }
        LossTerm::Grounding => {
            let t = dg_terms(batch, Some(need()?), model, &only(1.0, 0.0), 0.0)?;
            Ok((t.l_js, t.grad))
        }
        LossTerm::HeadKl => {
            let t = dg_terms(batch, Some(need()?), model, &only(0.0, 1.0), 0.0)?;
            Ok((t.l_kl, t.grad))
        }
        LossTerm::Total => {
            let (b, grad) = smos_loss_and_grad(batch, batch, need()?, model, &only(1.0, 1.0))?;
            Ok((b.total, grad))
        }
    }
}

/// Mean grounding divergence between two featurizers over a set of inputs.
pub fn mean_grounding_js(
    precursor: &ToyFeaturizer,
    dg: &ToyFeaturizer,
    inputs: &[Vec<f64>],
    temperature: f64,
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(SmosError::EmptyBatch);
    }
    let mut total = 0.0;
    for x in inputs {
        let (v, _) = grounding_js_with_grad(&precursor.forward(x)?, &dg.forward(x)?, temperature)?;
        total += v;
    }
    Ok(total / inputs.len() as f64)
}

pub fn accuracy(model: &Model, set: &LabeledSet) -> Result<f64> {
    set.validate()?;
    let mut hits = 0usize;
    for (x, &y) in set.inputs.iter().zip(&set.labels) {
        if model.predict(x)? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / set.len() as f64)
}

/// Epoch-wise shuffled minibatches.
struct BatchSampler {
    order: Vec<usize>,
    pos: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, seed: u64, key: &str) -> Self {
        let mut rng = keyed_rng(seed, &[hash_str(key)]);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        Self { order, pos: 0, rng }
    }

    fn next(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// A trained model with its per-step loss history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<LossBreakdown>,
    pub optimizer_steps: u64,
}

const PRECURSOR_KEY: &str = "precursor";
const DG_KEY: &str = "dg";

fn init_model(dims: &[usize], n_classes: usize, cfg: &TrainConfig, role: &str) -> Result<Model> {
    let key = hash_str(role);
    let kaiming = Model::kaiming(dims, n_classes, cfg.seed, key)?;
    match &cfg.init {
        InitMode::Kaiming => Ok(kaiming),
        InitMode::FromWeights(path) => {
            let loaded = Checkpoint::load(Path::new(path))?.featurizer()?;
            if loaded.dims() != kaiming.featurizer.dims() {
                return Err(SmosError::ShapeMismatch(format!(
                    "checkpoint has dims {:?}, requested {:?}",
                    loaded.dims(),
                    kaiming.featurizer.dims()
                )));
            }
            Model::new(loaded, kaiming.head)
        }
    }
}

fn check_input_dim(model: &Model, set: &LabeledSet) -> Result<()> {
    if set.input_dim() != model.featurizer.in_dim() {
        return Err(SmosError::DimensionMismatch {
            expected: model.featurizer.in_dim(),
            found: set.input_dim(),
        });
    }
    Ok(())
}

/// Fits the precursor by minibatch Adam on mean cross-entropy. History rows
/// record the batch loss as `l_s` before each update.
pub fn train_precursor(data: &LabeledSet, dims: &[usize], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    data.validate()?;
    let mut model = init_model(dims, data.n_classes, cfg, PRECURSOR_KEY)?;
    check_input_dim(&model, data)?;
    let weights = cfg.loss_weights();
    let adam = cfg.adam();
    let mut params = model.params();
    let mut state = AdamState::new(params.len());
    let mut sampler = BatchSampler::new(data.len(), cfg.seed, PRECURSOR_KEY);
    let mut history = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let batch = data.subset(&sampler.next(cfg.batch_size));
        let t = dg_terms(&batch, None, &model, &weights, 1.0)?;
        history.push(LossBreakdown::compose(t.l_erm, 0.0, 0.0, 0.0, &weights));
        adam_step(&mut params, &t.grad, &mut state, &adam)?;
        model.set_params(&params)?;
    }
    Ok(TrainOutcome {
        model,
        history,
        optimizer_steps: state.step,
    })
}

fn fit_dg(
    domains: &[LabeledSet],
    grounding: Option<(&Model, &LabeledSet)>,
    dims: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = LabeledSet::concat(domains)?;
    data.validate()?;
    let mut model = init_model(dims, data.n_classes, cfg, DG_KEY)?;
    check_input_dim(&model, &data)?;
    if let Some((precursor, pdata)) = grounding {
        check_grounding_shapes(precursor, &model)?;
        pdata.validate()?;
        check_input_dim(precursor, pdata)?;
    }
    let weights = cfg.loss_weights();
    let adam = cfg.adam();
    let mut params = model.params();
    let mut state = AdamState::new(params.len());
    let mut sampler = BatchSampler::new(data.len(), cfg.seed, DG_KEY);
    let mut precursor_sampler =
        grounding.map(|(_, pdata)| BatchSampler::new(pdata.len(), cfg.seed, PRECURSOR_KEY));
    let mut history = Vec::with_capacity(cfg.steps);
    for _ in 0..cfg.steps {
        let batch = data.subset(&sampler.next(cfg.batch_size));
        let (row, grad) = match (grounding, precursor_sampler.as_mut()) {
            (Some((precursor, pdata)), Some(ps)) => {
                let pbatch = pdata.subset(&ps.next(cfg.batch_size));
                smos_loss_and_grad(&batch, &pbatch, precursor, &model, &weights)?
            }
            _ => {
                let t = dg_terms(&batch, None, &model, &weights, 1.0)?;
                (LossBreakdown::compose(0.0, t.l_erm, 0.0, 0.0, &weights), t.grad)
            }
        };
        history.push(row);
        adam_step(&mut params, &grad, &mut state, &adam)?;
        model.set_params(&params)?;
    }
    Ok(TrainOutcome {
        model,
        history,
        optimizer_steps: state.step,
    })
}

/// Plain ERM on the pooled training domains.
pub fn train_erm(domains: &[LabeledSet], dims: &[usize], cfg: &TrainConfig) -> Result<TrainOutcome> {
    fit_dg(domains, None, dims, cfg)
}

/// Grounded DG training against a frozen precursor. Uses the same
/// initialization and batch order as [`train_erm`] for a given seed.
pub fn train_grounded(
    domains: &[LabeledSet],
    precursor: &Model,
    precursor_data: &LabeledSet,
    dims: &[usize],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    fit_dg(domains, Some((precursor, precursor_data)), dims, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smos::gradcheck::{finite_diff_check, GradCheckOptions};

    fn toy_set(n: usize, seed: u64) -> LabeledSet {
        use rand::Rng;
        let mut rng = keyed_rng(seed, &[]);
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels = inputs.iter().map(|x| usize::from(x[0] + 0.5 * x[1] > 0.0)).collect();
        LabeledSet { inputs, labels, n_classes: 2 }
    }

    #[test]
    fn zero_coefficients_reduce_to_ce_sum() {
        let data = toy_set(4, 1);
        let p = Model::kaiming(&[3, 5, 4], 2, 1, 7).unwrap();
        let g = Model::kaiming(&[3, 5, 4], 2, 2, 7).unwrap();
        let w = LossWeights { lambda: 0.0, lambda_kl: 0.0, temperature: 1.0 };
        let b = smos_total_loss(&data, &data, &p, &g, &w).unwrap();
        assert_eq!(b.total, b.l_s + b.l_erm);
        assert!(b.l_js > 0.0 && b.l_kl > 0.0);
    }

    #[test]
    fn copy_of_precursor_has_zero_grounding() {
        let data = toy_set(5, 2);
        let p = Model::kaiming(&[3, 6, 4], 2, 3, 1).unwrap();
        let w = LossWeights { lambda: 1.0, lambda_kl: 1.0, temperature: 1.0 };
        let b = smos_total_loss(&data, &data, &p, &p.clone(), &w).unwrap();
        assert_eq!(b.l_js, 0.0);
        assert_eq!(b.l_kl, 0.0);
        assert!((b.total - (b.l_s + b.l_erm)).abs() < 1e-15);
    }

    #[test]
    fn full_gradient_matches_finite_differences() {
        let data = toy_set(2, 3);
        let p = Model::kaiming(&[3, 6, 4], 2, 4, 1).unwrap();
        let g = Model::kaiming(&[3, 6, 4], 2, 5, 1).unwrap();
        let w = LossWeights { lambda: 0.7, lambda_kl: 0.3, temperature: 1.0 };
        let (_, grad) = smos_loss_and_grad(&data, &data, &p, &g, &w).unwrap();
        let mut probe = g.clone();
        let loss = |theta: &[f64]| {
            probe.set_params(theta).unwrap();
            smos_total_loss(&data, &data, &p, &probe, &w).unwrap().total
        };
        let r = finite_diff_check(loss, &g.params(), &grad, &g.param_blocks(), &GradCheckOptions::default())
            .unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn mismatched_heads_only_fail_with_kl() {
        let data = toy_set(3, 4);
        let p = Model::kaiming(&[3, 4], 3, 1, 1).unwrap();
        let g = Model::kaiming(&[3, 4], 2, 1, 2).unwrap();
        let mut w = LossWeights { lambda: 0.1, lambda_kl: 0.0, temperature: 1.0 };
        let pdata = LabeledSet { n_classes: 3, ..data.clone() };
        assert_eq!(smos_total_loss(&data, &pdata, &p, &g, &w).unwrap().l_kl, 0.0);
        w.lambda_kl = 0.5;
        assert!(matches!(
            smos_total_loss(&data, &pdata, &p, &g, &w),
            Err(SmosError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            TrainConfig { lr: 0.0, ..ok.clone() },
            TrainConfig { batch_size: 0, ..ok.clone() },
            TrainConfig { steps: 0, ..ok.clone() },
            TrainConfig { lambda: -1.0, ..ok.clone() },
            TrainConfig { temperature: 0.0, ..ok.clone() },
            TrainConfig { adam_betas: (1.0, 0.9), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(SmosError::InvalidConfig(_))));
        }
    }

    #[test]
    fn single_step_is_counted() {
        let cfg = TrainConfig { steps: 1, ..Default::default() };
        let out = train_precursor(&toy_set(20, 5), &[3, 4], &cfg).unwrap();
        assert_eq!(out.optimizer_steps, 1);
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn sets_are_validated() {
        let mut s = toy_set(3, 6);
        s.labels[0] = 5;
        assert!(matches!(s.validate(), Err(SmosError::LabelOutOfRange { .. })));
        let mut s = toy_set(3, 6);
        s.inputs[1].push(0.0);
        assert!(matches!(s.validate(), Err(SmosError::DimensionMismatch { .. })));
        assert!(LabeledSet::concat(&[]).is_err());
        let a = toy_set(3, 1);
        let b = LabeledSet { n_classes: 4, ..toy_set(3, 2) };
        assert!(LabeledSet::concat(&[a, b]).is_err());
    }
}
