//! Dense featurizers and linear heads with hand-written backprop.

use super::{Result, SmosError};
use crate::json;
use crate::seed::keyed_rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::fs;
use std::ops::Range;
use std::path::Path;

/// Fully connected layer, `weight[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    #[serde(rename = "w")]
    pub weight: Vec<Vec<f64>>,
    #[serde(rename = "b")]
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: vec![vec![0.0; in_dim]; out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    /// Weights drawn from N(0, 2 / fan_in), zero bias.
    pub fn kaiming(in_dim: usize, out_dim: usize, seed: u64, key: &[u64]) -> Self {
        let normal = Normal::new(0.0, (2.0 / in_dim as f64).sqrt()).expect("positive std");
        let mut rng = keyed_rng(seed, key);
        Self {
            weight: (0..out_dim)
                .map(|_| (0..in_dim).map(|_| normal.sample(&mut rng)).collect())
                .collect(),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.first().map_or(0, Vec::len)
    }

    pub fn out_dim(&self) -> usize {
        self.bias.len()
    }

    pub fn param_count(&self) -> usize {
        self.in_dim() * self.out_dim() + self.out_dim()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weight
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Accumulates parameter gradients into `grad` (weights row-major, then
    /// bias) and returns the gradient with respect to the input.
    fn backward(&self, input: &[f64], grad_out: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let n_in = self.in_dim();
        let (gw, gb) = grad.split_at_mut(n_in * self.out_dim());
        let mut grad_in = vec![0.0; n_in];
        for (o, (row, &g)) in self.weight.iter().zip(grad_out).enumerate() {
            gb[o] += g;
            let gw_row = &mut gw[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                gw_row[i] += g * input[i];
                grad_in[i] += g * row[i];
            }
        }
        grad_in
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        for row in &self.weight {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.bias);
    }

    fn read_params(&mut self, src: &[f64]) {
        let n_in = self.in_dim();
        let n_out = self.out_dim();
        for (o, row) in self.weight.iter_mut().enumerate() {
            row.copy_from_slice(&src[o * n_in..(o + 1) * n_in]);
        }
        let off = n_in * n_out;
        self.bias.copy_from_slice(&src[off..off + n_out]);
    }

    fn check(&self, what: &str) -> Result<()> {
        let n_in = self.in_dim();
        if n_in == 0 || self.out_dim() == 0 || self.weight.len() != self.out_dim() {
            return Err(SmosError::ShapeMismatch(format!("{what}: empty or ragged layer")));
        }
        if self.weight.iter().any(|r| r.len() != n_in) {
            return Err(SmosError::ShapeMismatch(format!("{what}: ragged weight rows")));
        }
        if self.weight.iter().flatten().chain(&self.bias).any(|x| !x.is_finite()) {
            return Err(SmosError::ShapeMismatch(format!("{what}: non-finite parameter")));
        }
        Ok(())
    }
}

/// Stack of dense layers, ReLU between them and identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyFeaturizer {
    layers: Vec<Dense>,
}

/// Activations kept from a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the sample itself.
    pub inputs: Vec<Vec<f64>>,
    /// Pre-activation output of each layer.
    pub pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.pre.last().expect("at least one layer")
    }
}

/// Layer sizes `dims = [in, hidden.., feat]`. A single entry `[d]` means one
/// linear `d -> d` map.
pub fn layer_shapes(dims: &[usize]) -> Result<Vec<(usize, usize)>> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(SmosError::ShapeMismatch(format!(
            "layer sizes must be non-empty and positive, got {dims:?}"
        )));
    }
    if dims.len() == 1 {
        return Ok(vec![(dims[0], dims[0])]);
    }
    Ok(dims.windows(2).map(|w| (w[0], w[1])).collect())
}

impl ToyFeaturizer {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(SmosError::ShapeMismatch("featurizer needs a layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            l.check(&format!("layer {i}"))?;
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(SmosError::ShapeMismatch(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].out_dim(),
                    i + 1,
                    w[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Kaiming-initialized featurizer.
    pub fn kaiming(dims: &[usize], seed: u64, key: u64) -> Result<Self> {
        let layers = layer_shapes(dims)?
            .into_iter()
            .enumerate()
            .map(|(i, (a, b))| Dense::kaiming(a, b, seed, &[key, i as u64]))
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn feat_dim(&self) -> usize {
        self.layers.last().expect("non-empty").out_dim()
    }

    /// `[in, hidden.., feat]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(Dense::out_dim))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(SmosError::DimensionMismatch {
                expected: self.in_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(&h);
            if i < last {
                relu_in_place(&mut h);
            }
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&h);
            inputs.push(h);
            h = z.clone();
            if i < last {
                relu_in_place(&mut h);
            }
            pre.push(z);
        }
        Ok(ForwardCache { inputs, pre })
    }

    /// Backpropagates `grad_out` (gradient w.r.t. the features) through a
    /// cached pass, accumulating into `grad` laid out as [`Self::write_params`].
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64], grad: &mut [f64]) {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.param_count();
        }
        let last = self.layers.len() - 1;
        let mut g = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < last {
                for (gk, &z) in g.iter_mut().zip(&cache.pre[i]) {
                    if z <= 0.0 {
                        *gk = 0.0;
                    }
                }
            }
            let layer = &self.layers[i];
            let slot = &mut grad[offsets[i]..offsets[i] + layer.param_count()];
            g = layer.backward(&cache.inputs[i], &g, slot);
        }
    }

    pub fn write_params(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            l.write_params(out);
        }
    }

    fn read_params(&mut self, src: &[f64]) {
        let mut off = 0;
        for l in &mut self.layers {
            let n = l.param_count();
            l.read_params(&src[off..off + n]);
            off += n;
        }
    }
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

impl crate::metrics::Featurize for ToyFeaturizer {
    fn featurize(&self, input: &[f64]) -> std::result::Result<Vec<f64>, String> {
        self.forward(input).map_err(|e| e.to_string())
    }
}

/// Linear classifier over features, `weight[class][feature]`.
pub type LinearHead = Dense;

/// Featurizer followed by a linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub featurizer: ToyFeaturizer,
    pub head: LinearHead,
}

/// A named contiguous range of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBlock {
    pub name: String,
    pub range: Range<usize>,
}

impl Model {
    pub fn new(featurizer: ToyFeaturizer, head: LinearHead) -> Result<Self> {
        head.check("head")?;
        if head.in_dim() != featurizer.feat_dim() {
            return Err(SmosError::ShapeMismatch(format!(
                "head takes {} features, featurizer yields {}",
                head.in_dim(),
                featurizer.feat_dim()
            )));
        }
        if head.out_dim() < 2 {
            return Err(SmosError::ShapeMismatch("head needs at least 2 classes".into()));
        }
        Ok(Self { featurizer, head })
    }

    /// Kaiming featurizer and head.
    pub fn kaiming(dims: &[usize], n_classes: usize, seed: u64, key: u64) -> Result<Self> {
        let featurizer = ToyFeaturizer::kaiming(dims, seed, key)?;
        let head = Dense::kaiming(featurizer.feat_dim(), n_classes, seed, &[key, u64::MAX]);
        Self::new(featurizer, head)
    }

    pub fn n_classes(&self) -> usize {
        self.head.out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.featurizer.param_count() + self.head.param_count()
    }

    /// Featurizer layers in order, then the head; each as weights then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.featurizer.write_params(&mut out);
        self.head.write_params(&mut out);
        out
    }

    pub fn set_params(&mut self, src: &[f64]) -> Result<()> {
        if src.len() != self.param_count() {
            return Err(SmosError::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                src.len()
            )));
        }
        let nf = self.featurizer.param_count();
        self.featurizer.read_params(&src[..nf]);
        self.head.read_params(&src[nf..]);
        Ok(())
    }

    pub fn param_blocks(&self) -> Vec<ParamBlock> {
        let mut blocks = Vec::new();
        let mut off = 0;
        let mut push = |name: String, n: usize| {
            blocks.push(ParamBlock {
                name,
                range: off..off + n,
            });
            off += n;
        };
        for (i, l) in self.featurizer.layers.iter().enumerate() {
            push(format!("layer{i}.w"), l.in_dim() * l.out_dim());
            push(format!("layer{i}.b"), l.out_dim());
        }
        push("head.w".into(), self.head.in_dim() * self.head.out_dim());
        push("head.b".into(), self.head.out_dim());
        blocks
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.head.forward(&self.featurizer.forward(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let logits = self.logits(x)?;
        Ok(logits
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &z)| if z > best.1 { (i, z) } else { best })
            .0)
    }

    /// Backprop of logits and feature gradients into a flat gradient vector.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_logits: &[f64],
        extra_feature_grad: Option<&[f64]>,
        grad: &mut [f64],
    ) {
        let nf = self.featurizer.param_count();
        let (g_feat_params, g_head) = grad.split_at_mut(nf);
        let mut g_feat = self.head.backward(cache.output(), grad_logits, g_head);
        if let Some(extra) = extra_feature_grad {
            for (a, b) in g_feat.iter_mut().zip(extra) {
                *a += b;
            }
        }
        self.featurizer.backward(cache, &g_feat, g_feat_params);
    }
}

/// Serialized model: `{"dims": [...], "layers": [{"w", "b"}], "head": {"w", "b"} | null}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub dims: Vec<usize>,
    pub layers: Vec<Dense>,
    pub head: Option<Dense>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        Self {
            dims: model.featurizer.dims(),
            layers: model.featurizer.layers.clone(),
            head: Some(model.head.clone()),
        }
    }

    pub fn from_featurizer(f: &ToyFeaturizer) -> Self {
        Self {
            dims: f.dims(),
            layers: f.layers.clone(),
            head: None,
        }
    }

    pub fn featurizer(&self) -> Result<ToyFeaturizer> {
        let f = ToyFeaturizer::from_layers(self.layers.clone())?;
        if f.dims() != self.dims {
            return Err(SmosError::ShapeMismatch(format!(
                "checkpoint declares dims {:?} but layers give {:?}",
                self.dims,
                f.dims()
            )));
        }
        Ok(f)
    }

    pub fn model(&self) -> Result<Model> {
        let head = self
            .head
            .clone()
            .ok_or_else(|| SmosError::ShapeMismatch("checkpoint has no head".into()))?;
        Model::new(self.featurizer()?, head)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = json::to_canonical_string(self).expect("checkpoint serializes");
        fs::write(path, text).map_err(|e| SmosError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| SmosError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| SmosError::Parse(format!("{}: {e}", path.display())))
    }
}

/// How a featurizer starts out.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    #[default]
    Kaiming,
    /// Load the featurizer from a checkpoint file.
    FromWeights(String),
}

/// Builds a featurizer with layer sizes `dims`.
pub fn init_featurizer(dims: &[usize], mode: &InitMode, seed: u64) -> Result<ToyFeaturizer> {
    match mode {
        InitMode::Kaiming => ToyFeaturizer::kaiming(dims, seed, 0),
        InitMode::FromWeights(path) => {
            let f = Checkpoint::load(Path::new(path))?.featurizer()?;
            let expected: Vec<usize> = if dims.len() == 1 {
                vec![dims[0], dims[0]]
            } else {
                dims.to_vec()
            };
            if f.dims() != expected {
                return Err(SmosError::ShapeMismatch(format!(
                    "checkpoint has dims {:?}, requested {:?}",
                    f.dims(),
                    expected
                )));
            }
            Ok(f)
        }
    }
}
