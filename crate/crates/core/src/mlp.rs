//! Dense ReLU networks: weight files, Adam training, activation capture and
//! extraction of per-node distillation datasets.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{LabeledDataset, MinMaxScaler};
use crate::error::{Error, Result};
use crate::fixedpoint::{quantize, quantize_code, FixedPointFormat};
use crate::netlist::RescaleShift;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    /// `out x in`
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
    scaler: Option<MinMaxScaler>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>, scaler: Option<MinMaxScaler>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::structural("network has no layers"));
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.outputs() == 0 || layer.inputs() == 0 {
                return Err(Error::structural(format!("layer {l} is empty")));
            }
            if layer.bias.len() != layer.outputs() {
                return Err(Error::structural(format!("layer {l} bias length mismatch")));
            }
            if layer.weights.iter().any(|row| row.len() != layer.inputs()) {
                return Err(Error::structural(format!("layer {l} has ragged weights")));
            }
            if l > 0 && layers[l - 1].outputs() != layer.inputs() {
                return Err(Error::structural(format!(
                    "layer {l} expects {} inputs but layer {} has {} outputs",
                    layer.inputs(),
                    l - 1,
                    layers[l - 1].outputs()
                )));
            }
        }
        if let Some(s) = &scaler {
            if s.width() != layers[0].inputs() {
                return Err(Error::structural("scaler width does not match input width"));
            }
        }
        Ok(Self { layers, scaler })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn scaler(&self) -> Option<&MinMaxScaler> {
        self.scaler.as_ref()
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::outputs)
    }

    /// `[N_0, N_1, ..., N_L]`
    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(DenseLayer::outputs))
            .collect()
    }

    /// Applies the stored scaler, if any.
    pub fn scale_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_width() {
            return Err(Error::input(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.input_width()
            )));
        }
        Ok(match &self.scaler {
            Some(s) => s.transform(x),
            None => x.to_vec(),
        })
    }

    /// Post-activation values of every layer for a raw input row; the last
    /// entry is the identity output layer.
    pub fn forward_capture(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut current = self.scale_input(x)?;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            current = layer
                .pre_activation(&current)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
            out.push(current.clone());
        }
        Ok(out)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let acts = self.forward_capture(x)?;
        Ok(argmax(acts.last().expect("non-empty network")))
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::input("empty dataset"));
        }
        let mut correct = 0usize;
        for (row, label) in data.rows() {
            correct += usize::from(self.predict(row)? == label);
        }
        Ok(correct as f64 / data.len() as f64)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mlp {}", self.layers.len());
        for layer in &self.layers {
            let _ = writeln!(
                out,
                "layer {} {} {}",
                layer.inputs(),
                layer.outputs(),
                layer.activation.name()
            );
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let mut fields: Vec<String> = row.iter().map(f64::to_string).collect();
                fields.push(b.to_string());
                let _ = writeln!(out, "{}", fields.join(" "));
            }
        }
        if let Some(s) = &self.scaler {
            let pairs: Vec<String> = s
                .mins
                .iter()
                .zip(&s.maxs)
                .map(|(lo, hi)| format!("{lo} {hi}"))
                .collect();
            let _ = writeln!(out, "scaler {}", pairs.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (line, header) = lines.next().ok_or_else(|| Error::parse(1, "empty weights file"))?;
        let count = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["mlp", n] => n
                .parse::<usize>()
                .map_err(|_| Error::parse(line, format!("invalid layer count {n:?}")))?,
            _ => return Err(Error::parse(line, "expected `mlp <num_layers>`")),
        };
        if count == 0 {
            return Err(Error::structural("weights file declares no layers"));
        }
        let numbers = |line: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::parse(line, format!("invalid number {v:?}")))
                })
                .collect()
        };
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, layer_line) = lines
                .next()
                .ok_or_else(|| Error::structural("weights file ends before all layers"))?;
            let parts: Vec<&str> = layer_line.split_whitespace().collect();
            let (inputs, outputs, activation) = match parts.as_slice() {
                ["layer", i, o, a] => {
                    let i = i.parse::<usize>().map_err(|_| Error::parse(line, "invalid input width"))?;
                    let o = o.parse::<usize>().map_err(|_| Error::parse(line, "invalid output width"))?;
                    let a = match *a {
                        "relu" => Activation::Relu,
                        "identity" => Activation::Identity,
                        other => return Err(Error::parse(line, format!("unknown activation {other:?}"))),
                    };
                    (i, o, a)
                }
                _ => return Err(Error::parse(line, "expected `layer <in> <out> <activation>`")),
            };
            let mut weights = Vec::with_capacity(outputs);
            let mut bias = Vec::with_capacity(outputs);
            for _ in 0..outputs {
                let (line, row) = lines
                    .next()
                    .ok_or_else(|| Error::structural("weights file ends inside a layer"))?;
                let mut values = numbers(line, row)?;
                if values.len() != inputs + 1 {
                    return Err(Error::structural(format!(
                        "line {line}: expected {} values, found {}",
                        inputs + 1,
                        values.len()
                    )));
                }
                bias.push(values.pop().expect("non-empty"));
                weights.push(values);
            }
            layers.push(DenseLayer {
                weights,
                bias,
                activation,
            });
        }
        let mut scaler = None;
        if let Some((line, rest)) = lines.next() {
            let Some(values) = rest.strip_prefix("scaler") else {
                return Err(Error::parse(line, "expected `scaler` line"));
            };
            let values = numbers(line, values)?;
            if values.len() % 2 != 0 {
                return Err(Error::parse(line, "scaler needs min/max pairs"));
            }
            let (mins, maxs) = values.chunks(2).map(|p| (p[0], p[1])).unzip();
            scaler = Some(MinMaxScaler { mins, maxs });
        }
        if let Some((line, _)) = lines.next() {
            return Err(Error::parse(line, "unexpected trailing content"));
        }
        Self::new(layers, scaler)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Index of the largest value; ties go to the lower index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub hidden_nodes: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_nodes: 20,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// Gradients with the same shapes as the network's weights and biases.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net
                .layers
                .iter()
                .map(|l| vec![vec![0.0; l.inputs()]; l.outputs()])
                .collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.outputs()]).collect(),
        }
    }
}

/// Mean softmax cross-entropy over `(inputs, labels)` and its gradient.
/// Inputs are taken as already scaled; the softmax exists only here.
pub fn loss_and_gradients(net: &Mlp, inputs: &[Vec<f64>], labels: &[usize]) -> (f64, Gradients) {
    let mut grads = Gradients::zeros_like(net);
    let mut loss = 0.0;
    let n = inputs.len().max(1) as f64;
    for (x, &y) in inputs.iter().zip(labels) {
        let mut pre = Vec::with_capacity(net.layers.len());
        let mut post = vec![x.clone()];
        for layer in &net.layers {
            let z = layer.pre_activation(post.last().expect("input"));
            post.push(z.iter().map(|&v| layer.activation.apply(v)).collect());
            pre.push(z);
        }
        let logits = post.last().expect("output");
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        loss -= (exps[y] / total).ln();
        let mut delta: Vec<f64> = exps
            .iter()
            .enumerate()
            .map(|(k, e)| (e / total - if k == y { 1.0 } else { 0.0 }) / n)
            .collect();
        // the output layer is identity in training; its derivative is folded
        // into the softmax gradient above
        for l in (0..net.layers.len()).rev() {
            let layer = &net.layers[l];
            if l + 1 != net.layers.len() {
                for (d, &z) in delta.iter_mut().zip(&pre[l]) {
                    *d *= layer.activation.derivative(z);
                }
            }
            let prev = &post[l];
            for (o, &d) in delta.iter().enumerate() {
                grads.bias[l][o] += d;
                for (g, &a) in grads.weights[l][o].iter_mut().zip(prev) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let mut back = vec![0.0; layer.inputs()];
                for (row, &d) in layer.weights.iter().zip(&delta) {
                    for (b, &w) in back.iter_mut().zip(row) {
                        *b += w * d;
                    }
                }
                delta = back;
            }
        }
    }
    (loss / n, grads)
}

/// One hidden ReLU layer and a two-class identity output layer, trained
/// with Adam on minibatches of min-max scaled inputs.
pub fn train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<Mlp> {
    if data.is_empty() {
        return Err(Error::input("cannot train on an empty dataset"));
    }
    if let Some(&bad) = data.labels().iter().find(|&&l| l > 1) {
        return Err(Error::input(format!("labels must be binary, found {bad}")));
    }
    if cfg.hidden_nodes == 0 || cfg.batch_size == 0 {
        return Err(Error::input("hidden nodes and batch size must be positive"));
    }
    let positives = data.labels().iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == data.len() {
        log::warn!("training data contains a single class");
    }
    let scaler = MinMaxScaler::fit(data)?;
    let inputs: Vec<Vec<f64>> = data.features().iter().map(|r| scaler.transform(r)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut init = |fan_in: usize, fan_out: usize| -> Vec<Vec<f64>> {
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid std");
        (0..fan_out)
            .map(|_| (0..fan_in).map(|_| normal.sample(&mut rng)).collect())
            .collect()
    };
    let n_in = data.num_features();
    let layers = vec![
        DenseLayer {
            weights: init(n_in, cfg.hidden_nodes),
            bias: vec![0.0; cfg.hidden_nodes],
            activation: Activation::Relu,
        },
        DenseLayer {
            weights: init(cfg.hidden_nodes, 2),
            bias: vec![0.0; 2],
            activation: Activation::Identity,
        },
    ];
    let mut net = Mlp::new(layers, Some(scaler))?;
    let mut adam = Adam::new(&net, cfg.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<Vec<f64>> = batch.iter().map(|&k| inputs[k].clone()).collect();
            let ys: Vec<usize> = batch.iter().map(|&k| data.labels()[k]).collect();
            let (_, grads) = loss_and_gradients(&net, &xs, &ys);
            adam.step(&mut net, &grads);
        }
    }
    Ok(net)
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    fn new(net: &Mlp, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    fn step(&mut self, net: &mut Mlp, g: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        };
        for (l, layer) in net.layers.iter_mut().enumerate() {
            for (o, row) in layer.weights.iter_mut().enumerate() {
                for (k, w) in row.iter_mut().enumerate() {
                    update(w, g.weights[l][o][k], &mut self.m.weights[l][o][k], &mut self.v.weights[l][o][k]);
                }
                update(&mut layer.bias[o], g.bias[l][o], &mut self.m.bias[l][o], &mut self.v.bias[l][o]);
            }
        }
    }
}

/// Distillation dataset `Z_{l;n}`: quantized activations of layer `l - 1`
/// as features and the quantized activation of node `(l, n)` as label.
///
/// Feature rows concatenate the `m`-bit words of the previous layer, each
/// word most significant bit first. Label rows hold the `m` bits of the
/// node's word, most significant bit first.
#[derive(Clone, Debug)]
pub struct QuantizedActivationDataset {
    pub layer: usize,
    pub node: usize,
    pub fmt: FixedPointFormat,
    pub features: Arc<Vec<Vec<bool>>>,
    pub labels: Vec<Vec<bool>>,
}

impl QuantizedActivationDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Label bit `j` (0 = most significant) of every sample.
    pub fn label_column(&self, j: usize) -> Vec<bool> {
        self.labels.iter().map(|row| row[j]).collect()
    }
}

/// One dataset per node of every layer `1..=L`, in layer-major order.
pub fn extract_distillation_sets(
    net: &Mlp,
    data: &LabeledDataset,
    fmt: FixedPointFormat,
) -> Result<Vec<QuantizedActivationDataset>> {
    let words = |values: &[f64]| -> Result<Vec<Vec<bool>>> {
        values
            .iter()
            .map(|&v| quantize(v, fmt).map(|b| b.bits().to_vec()))
            .collect()
    };
    // per layer (0 = inputs), per sample, per node: bits
    let depth = net.layers().len();
    let mut per_layer: Vec<Vec<Vec<Vec<bool>>>> = vec![Vec::with_capacity(data.len()); depth + 1];
    for (row, _) in data.rows() {
        per_layer[0].push(words(&net.scale_input(row)?)?);
        for (l, acts) in net.forward_capture(row)?.iter().enumerate() {
            per_layer[l + 1].push(words(acts)?);
        }
    }
    let mut out = Vec::new();
    for l in 1..=depth {
        let features: Arc<Vec<Vec<bool>>> = Arc::new(
            per_layer[l - 1]
                .iter()
                .map(|sample| sample.concat())
                .collect(),
        );
        for n in 0..net.layers()[l - 1].outputs() {
            out.push(QuantizedActivationDataset {
                layer: l,
                node: n,
                fmt,
                features: Arc::clone(&features),
                labels: per_layer[l].iter().map(|sample| sample[n].clone()).collect(),
            });
        }
    }
    Ok(out)
}

/// Integer model of the directly lowered circuit for one raw input row.
///
/// Each neuron multiplies `m`-bit codes into `2m`-bit products, adds the
/// bias as an extra product with the quantized constant 1, accumulates in
/// `3m` bits (wrapping), applies ReLU on hidden layers, shifts right and
/// saturates back to `m` bits. Returns the output layer's codes.
pub fn fixed_point_forward(net: &Mlp, x: &[f64], fmt: FixedPointFormat, shift: RescaleShift) -> Result<Vec<i64>> {
    let m = fmt.total_bits();
    if 3 * m > 127 {
        return Err(Error::input("fixed-point model supports at most 42 total bits"));
    }
    let acc_bits = 3 * m;
    let wrap = |v: i128| -> i128 {
        let shift = 128 - acc_bits;
        (v << shift) >> shift
    };
    let one = quantize_code(1.0, fmt)? as i128;
    let mut current: Vec<i128> = net
        .scale_input(x)?
        .into_iter()
        .map(|v| quantize_code(v, fmt).map(i128::from))
        .collect::<Result<_>>()?;
    let amount = shift.amount(fmt);
    for layer in net.layers() {
        let mut next = Vec::with_capacity(layer.outputs());
        for (row, &b) in layer.weights.iter().zip(&layer.bias) {
            let mut acc: i128 = 0;
            for (&w, &v) in row.iter().zip(&current) {
                acc = wrap(acc + quantize_code(w, fmt)? as i128 * v);
            }
            acc = wrap(acc + quantize_code(b, fmt)? as i128 * one);
            if layer.activation == Activation::Relu && acc <= 0 {
                acc = 0;
            }
            let shifted = acc >> amount;
            next.push(shifted.clamp(fmt.min_code() as i128, fmt.max_code() as i128));
        }
        current = next;
    }
    Ok(current.into_iter().map(|v| v as i64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::{dequantize, BitString};

    fn layer(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> DenseLayer {
        DenseLayer {
            weights,
            bias,
            activation,
        }
    }

    fn random_net(sizes: &[usize], seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.7).unwrap();
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| DenseLayer {
                weights: (0..w[1]).map(|_| (0..w[0]).map(|_| normal.sample(&mut rng)).collect()).collect(),
                bias: (0..w[1]).map(|_| normal.sample(&mut rng)).collect(),
                activation: if k + 2 == sizes.len() { Activation::Identity } else { Activation::Relu },
            })
            .collect();
        Mlp::new(layers, None).unwrap()
    }

    #[test]
    fn empty_layer_file_is_structural() {
        assert!(matches!(Mlp::from_text("mlp 0\n"), Err(Error::Structural(_))));
        assert!(matches!(Mlp::from_text("mlp 1\nlayer 2 0 relu\n"), Err(Error::Structural(_))));
    }

    #[test]
    fn parse_errors_report_lines() {
        let err = Mlp::from_text("mlp 1\nlayer 2 1 identity\n1 x 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Mlp::from_text("mlp 2\nlayer 2 1 relu\n1 1 0\nlayer 3 1 identity\n1 1 1 0\n").unwrap_err();
        assert!(matches!(err, Error::Structural(_)), "{err}");
    }

    #[test]
    fn sum_network_from_text() {
        let net = Mlp::from_text("mlp 1\nlayer 2 1 identity\n1 1 0\n").unwrap();
        assert_eq!(net.forward_capture(&[2.5, -1.0]).unwrap(), vec![vec![1.5]]);
    }

    #[test]
    fn save_load_round_trip() {
        let mut net = random_net(&[27, 20, 2], 5);
        net.scaler = Some(MinMaxScaler {
            mins: (0..27).map(|k| -(k as f64) / 3.0).collect(),
            maxs: (0..27).map(|k| k as f64 * 1.7 + 0.1).collect(),
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        net.save(&path).unwrap();
        let back = Mlp::load(&path).unwrap();
        assert_eq!(back, net);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 3.0).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..27).map(|_| normal.sample(&mut rng)).collect();
            assert_eq!(net.forward_capture(&x).unwrap(), back.forward_capture(&x).unwrap());
        }
    }

    #[test]
    fn forward_examples() {
        let zero = Mlp::new(
            vec![
                layer(vec![vec![0.0; 3]; 2], vec![0.0; 2], Activation::Relu),
                layer(vec![vec![0.0; 2]; 2], vec![0.0; 2], Activation::Identity),
            ],
            None,
        )
        .unwrap();
        assert!(zero.forward_capture(&[1.0, -2.0, 3.0]).unwrap().iter().flatten().all(|&v| v == 0.0));

        let identity = Mlp::new(
            vec![layer(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 2], Activation::Identity)],
            None,
        )
        .unwrap();
        assert_eq!(identity.forward_capture(&[0.25, -4.0]).unwrap(), vec![vec![0.25, -4.0]]);

        let hand = Mlp::new(vec![layer(vec![vec![1.0, -1.0]], vec![0.0], Activation::Relu)], None).unwrap();
        assert_eq!(hand.forward_capture(&[2.0, 3.0]).unwrap(), vec![vec![0.0]]);
        assert!(hand.forward_capture(&[2.0]).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 1.0]), 0);
        assert_eq!(argmax(&[0.0, 1.0]), 1);
        assert_eq!(argmax(&[2.0, 1.0, 2.0]), 0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = random_net(&[3, 4, 2], 11);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<Vec<f64>> = (0..6).map(|_| (0..3).map(|_| normal.sample(&mut rng)).collect()).collect();
        let ys = vec![0, 1, 1, 0, 1, 0];
        let (_, grads) = loss_and_gradients(&net, &xs, &ys);
        let h = 1e-5;
        let check = |analytic: f64, perturb: &dyn Fn(&mut Mlp, f64)| {
            let mut plus = net.clone();
            perturb(&mut plus, h);
            let mut minus = net.clone();
            perturb(&mut minus, -h);
            let numeric = (loss_and_gradients(&plus, &xs, &ys).0 - loss_and_gradients(&minus, &xs, &ys).0) / (2.0 * h);
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
            assert!(rel < 1e-4 || (numeric - analytic).abs() < 1e-9, "numeric {numeric} analytic {analytic}");
        };
        for l in 0..2 {
            for o in 0..net.layers[l].outputs() {
                for k in 0..net.layers[l].inputs() {
                    check(grads.weights[l][o][k], &|n: &mut Mlp, d| n.layers[l].weights[o][k] += d);
                }
                check(grads.bias[l][o], &|n: &mut Mlp, d| n.layers[l].bias[o] += d);
            }
        }
    }

    fn blobs(n: usize, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.5).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for k in 0..n {
            let label = k % 2;
            let centre = if label == 1 { 2.0 } else { -2.0 };
            rows.push(vec![centre + normal.sample(&mut rng), centre + normal.sample(&mut rng)]);
            labels.push(label);
        }
        LabeledDataset::unnamed(rows, labels).unwrap()
    }

    #[test]
    fn trains_separable_blobs() {
        let data = blobs(200, 4);
        let cfg = TrainConfig { epochs: 30, learning_rate: 0.01, ..Default::default() };
        let net = train(&data, &cfg).unwrap();
        assert!(net.accuracy(&data).unwrap() >= 0.95);
        assert_eq!(net.layer_sizes(), vec![2, 20, 2]);
    }

    #[test]
    fn single_class_still_trains() {
        let data = LabeledDataset::unnamed(vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]], vec![1, 1, 1]).unwrap();
        let net = train(&data, &TrainConfig { epochs: 50, learning_rate: 0.01, ..Default::default() }).unwrap();
        assert_eq!(net.accuracy(&data).unwrap(), 1.0);
    }

    #[test]
    fn learns_xor() {
        let data = LabeledDataset::unnamed(
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
            vec![0, 1, 1, 0],
        )
        .unwrap();
        let cfg = TrainConfig { epochs: 2000, learning_rate: 0.01, batch_size: 4, ..Default::default() };
        let net = train(&data, &cfg).unwrap();
        assert_eq!(net.accuracy(&data).unwrap(), 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let data = blobs(60, 9);
        let cfg = TrainConfig { epochs: 5, seed: 42, ..Default::default() };
        assert_eq!(train(&data, &cfg).unwrap(), train(&data, &cfg).unwrap());
        let other = TrainConfig { seed: 43, ..cfg.clone() };
        assert_ne!(train(&data, &cfg).unwrap(), train(&data, &other).unwrap());
    }

    #[test]
    fn train_rejects_bad_input() {
        let empty = LabeledDataset::unnamed(vec![], vec![]).unwrap();
        assert!(train(&empty, &TrainConfig::default()).is_err());
        let multi = LabeledDataset::unnamed(vec![vec![0.0]], vec![2]).unwrap();
        assert!(train(&multi, &TrainConfig::default()).is_err());
    }

    #[test]
    fn distillation_set_shapes() {
        let net = random_net(&[5, 20, 2], 3);
        let data = LabeledDataset::unnamed(vec![vec![0.1, 0.2, -0.3, 0.4, 0.5]], vec![1]).unwrap();
        let fmt = FixedPointFormat::new(4, 2).unwrap();
        let sets = extract_distillation_sets(&net, &data, fmt).unwrap();
        assert_eq!(sets.len(), 22);
        assert!(sets.iter().all(|s| s.len() == 1 && s.labels[0].len() == 4));
        assert_eq!(sets[0].feature_width(), 5 * 4);
        assert_eq!(sets[21].feature_width(), 20 * 4);
        assert_eq!((sets[21].layer, sets[21].node), (2, 1));
    }

    #[test]
    fn distillation_of_zero_net_is_zero() {
        let zero = Mlp::new(
            vec![
                layer(vec![vec![0.0; 3]; 4], vec![0.0; 4], Activation::Relu),
                layer(vec![vec![0.0; 4]; 2], vec![0.0; 2], Activation::Identity),
            ],
            None,
        )
        .unwrap();
        let data = LabeledDataset::unnamed(vec![vec![0.3, -0.7, 0.9]; 5], vec![0; 5]).unwrap();
        let sets = extract_distillation_sets(&zero, &data, FixedPointFormat::new(8, 6).unwrap()).unwrap();
        assert!(sets.iter().flat_map(|s| s.labels.iter().flatten()).all(|&b| !b));
    }

    #[test]
    fn distillation_labels_requantize() {
        let net = random_net(&[4, 6, 2], 8);
        let fmt = FixedPointFormat::new(8, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| normal.sample(&mut rng)).collect()).collect();
        let data = LabeledDataset::unnamed(rows, vec![0; 30]).unwrap();
        for set in extract_distillation_sets(&net, &data, fmt).unwrap() {
            for label in &set.labels {
                let bits = BitString::new(label.clone()).unwrap();
                let back = quantize(dequantize(&bits, fmt).unwrap(), fmt).unwrap();
                assert_eq!(back, bits);
            }
        }
    }
}
