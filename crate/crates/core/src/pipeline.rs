//! End-to-end compilation of a trained network into an AIG through one of
//! three routes: direct arithmetic, per-bit random forests or per-bit
//! LogicNets.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::aig::{lower_netlist, AigGraph};
use crate::analysis::{evaluate, EvaluationReport};
use crate::dataset::{LabeledDataset, MinMaxScaler};
use crate::error::{Error, Result};
use crate::fixedpoint::FixedPointFormat;
use crate::forest::{forest_module, predict_forest, train_forest, ForestConfig, RandomForestModel};
use crate::lutnet::{eval_logicnet, logicnet_module, train_logicnet, LogicNetConfig, LutNetwork};
use crate::mlp::{extract_distillation_sets, fixed_point_forward, Mlp};
use crate::netlist::{build_network_direct, cascade_modules, Netlist, RescaleShift};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PipelineKind {
    Direct,
    RandomForest,
    LogicNet,
}

impl fmt::Display for PipelineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipelineKind::Direct => "direct",
            PipelineKind::RandomForest => "rf",
            PipelineKind::LogicNet => "logicnet",
        })
    }
}

impl FromStr for PipelineKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(PipelineKind::Direct),
            "rf" | "forest" => Ok(PipelineKind::RandomForest),
            "logicnet" | "lgn" => Ok(PipelineKind::LogicNet),
            _ => Err(Error::input(format!("unknown pipeline '{s}' (direct, rf, logicnet)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RfParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub feature_subsample: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_estimators: 3,
            max_depth: 5,
            bootstrap: true,
            feature_subsample: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LgnParams {
    pub depth: usize,
    pub width: usize,
    pub lut_size: usize,
    pub fallback: bool,
}

impl Default for LgnParams {
    fn default() -> Self {
        Self {
            depth: 2,
            width: 50,
            lut_size: 4,
            fallback: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PipelineSettings {
    Direct { shift: RescaleShift },
    RandomForest(RfParams),
    LogicNet(LgnParams),
}

impl PipelineSettings {
    pub fn kind(&self) -> PipelineKind {
        match self {
            PipelineSettings::Direct { .. } => PipelineKind::Direct,
            PipelineSettings::RandomForest(_) => PipelineKind::RandomForest,
            PipelineSettings::LogicNet(_) => PipelineKind::LogicNet,
        }
    }

    /// Short `key=value` description for tables.
    pub fn label(&self) -> String {
        match self {
            PipelineSettings::Direct { shift } => match shift {
                RescaleShift::TwiceFractional => "shift=2i".into(),
                RescaleShift::Fractional => "shift=i".into(),
            },
            PipelineSettings::RandomForest(p) => format!("depth={} estimators={}", p.max_depth, p.n_estimators),
            PipelineSettings::LogicNet(p) => format!("depth={} width={} lut={}", p.depth, p.width, p.lut_size),
        }
    }
}

/// Maximal tree depths and estimator counts of the forest grid.
pub const RF_DEPTHS: [usize; 3] = [5, 10, 15];
pub const RF_ESTIMATORS: [usize; 3] = [2, 3, 4];
/// Depths, widths and LUT sizes of the LogicNet grid.
pub const LGN_DEPTHS: [usize; 3] = [2, 3, 4];
pub const LGN_WIDTHS: [usize; 3] = [50, 100, 200];
pub const LGN_LUT_SIZES: [usize; 3] = [4, 6, 8];

pub fn rf_grid() -> Vec<PipelineSettings> {
    RF_DEPTHS
        .iter()
        .flat_map(|&max_depth| {
            RF_ESTIMATORS.iter().map(move |&n_estimators| {
                PipelineSettings::RandomForest(RfParams {
                    n_estimators,
                    max_depth,
                    ..RfParams::default()
                })
            })
        })
        .collect()
}

pub fn lgn_grid() -> Vec<PipelineSettings> {
    let mut out = Vec::new();
    for &depth in &LGN_DEPTHS {
        for &width in &LGN_WIDTHS {
            for &lut_size in &LGN_LUT_SIZES {
                out.push(PipelineSettings::LogicNet(LgnParams {
                    depth,
                    width,
                    lut_size,
                    fallback: false,
                }));
            }
        }
    }
    out
}

/// Deterministic per-model seed from a base seed and coordinates.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base ^ 0x243f_6a88_85a3_08d3;
    for &p in parts {
        h = splitmix(h ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub enum NodeModels {
    Forest(Vec<RandomForestModel>),
    LogicNet(Vec<LutNetwork>),
}

/// Per-node, per-bit models replacing every neuron.
#[derive(Clone, Debug)]
pub struct DistilledNetwork {
    pub fmt: FixedPointFormat,
    pub input_width: usize,
    /// `layers[l][n]` replaces node `n` of layer `l + 1`.
    pub layers: Vec<Vec<NodeModels>>,
}

impl DistilledNetwork {
    pub fn modules(&self) -> Result<Vec<Vec<Netlist>>> {
        let mut words = self.input_width;
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let modules = layer
                .iter()
                .map(|node| match node {
                    NodeModels::Forest(m) => forest_module(m, words, self.fmt),
                    NodeModels::LogicNet(m) => logicnet_module(m, words, self.fmt),
                })
                .collect::<Result<Vec<_>>>()?;
            words = layer.len();
            out.push(modules);
        }
        Ok(out)
    }

    /// Software model of the cascaded circuit for a scaled input row:
    /// returns the predicted class (ties go to 0).
    pub fn predict_scaled(&self, scaled: &[f64]) -> Result<usize> {
        let m = self.fmt.total_bits() as usize;
        let mut features = Vec::with_capacity(scaled.len() * m);
        for &v in scaled {
            let code = crate::fixedpoint::quantize_code(v, self.fmt)?;
            features.extend((0..m).rev().map(|b| (code >> b) & 1 == 1));
        }
        let mut words: Vec<i64> = Vec::new();
        for layer in &self.layers {
            let mut next_features = Vec::with_capacity(layer.len() * m);
            words.clear();
            for node in layer {
                let bits: Vec<bool> = match node {
                    NodeModels::Forest(ms) => ms.iter().map(|f| predict_forest(f, &features)).collect(),
                    NodeModels::LogicNet(ms) => ms.iter().map(|n| eval_logicnet(n, &features)).collect(),
                };
                let raw = bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b));
                let shift = 64 - m as u32;
                words.push(((raw << shift) as i64) >> shift);
                next_features.extend(bits);
            }
            features = next_features;
        }
        if words.len() != 2 {
            return Err(Error::structural("argmax needs exactly two output nodes"));
        }
        Ok(usize::from(words[1] > words[0]))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "distilled format={} inputs={} layers={}\n",
            self.fmt,
            self.input_width,
            self.layers.len()
        );
        for (l, layer) in self.layers.iter().enumerate() {
            for (n, node) in layer.iter().enumerate() {
                match node {
                    NodeModels::Forest(ms) => {
                        for (j, m) in ms.iter().enumerate() {
                            out.push_str(&format!("# layer {} node {n} bit {j}\n", l + 1));
                            out.push_str(&m.to_text());
                        }
                    }
                    NodeModels::LogicNet(ms) => {
                        for (j, m) in ms.iter().enumerate() {
                            out.push_str(&format!("# layer {} node {n} bit {j}\n", l + 1));
                            out.push_str(&m.to_text());
                        }
                    }
                }
            }
        }
        out
    }
}

/// Trains one model per (layer, node, bit) on the quantized activations
/// of `net` over `train`.
pub fn distill(net: &Mlp, train: &LabeledDataset, fmt: FixedPointFormat, settings: &PipelineSettings, seed: u64) -> Result<DistilledNetwork> {
    if train.is_empty() {
        return Err(Error::input("cannot distill on an empty dataset"));
    }
    let sets = extract_distillation_sets(net, train, fmt)?;
    let m = fmt.total_bits() as usize;
    let jobs: Vec<(usize, usize)> = (0..sets.len()).flat_map(|s| (0..m).map(move |j| (s, j))).collect();
    let trained: Vec<NodeModels> = match settings {
        PipelineSettings::Direct { .. } => return Err(Error::input("the direct pipeline has nothing to distill")),
        PipelineSettings::RandomForest(p) => {
            let models = jobs
                .par_iter()
                .map(|&(s, j)| {
                    let set = &sets[s];
                    let cfg = ForestConfig {
                        n_estimators: p.n_estimators,
                        max_depth: p.max_depth,
                        bootstrap: p.bootstrap,
                        feature_subsample: p.feature_subsample,
                        seed: derive_seed(seed, &[set.layer as u64, set.node as u64, j as u64]),
                    };
                    train_forest(&set.features, &set.label_column(j), &cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            models.chunks(m).map(|c| NodeModels::Forest(c.to_vec())).collect()
        }
        PipelineSettings::LogicNet(p) => {
            let models = jobs
                .par_iter()
                .map(|&(s, j)| {
                    let set = &sets[s];
                    let cfg = LogicNetConfig {
                        depth: p.depth,
                        width: p.width,
                        lut_size: p.lut_size,
                        fallback: p.fallback,
                        seed: derive_seed(seed, &[set.layer as u64, set.node as u64, j as u64]),
                    };
                    train_logicnet(&set.features, &set.label_column(j), &cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            models.chunks(m).map(|c| NodeModels::LogicNet(c.to_vec())).collect()
        }
    };
    let mut layers = Vec::new();
    let mut it = trained.into_iter();
    for size in net.layers().iter().map(|l| l.outputs()) {
        layers.push(it.by_ref().take(size).collect());
    }
    Ok(DistilledNetwork {
        fmt,
        input_width: net.input_width(),
        layers,
    })
}

#[derive(Clone, Debug)]
pub struct CompileOptions {
    pub fmt: FixedPointFormat,
    pub settings: PipelineSettings,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    pub aig: AigGraph,
    pub fmt: FixedPointFormat,
    pub settings: PipelineSettings,
    /// Distilled models for the forest and LogicNet routes.
    pub distilled: Option<DistilledNetwork>,
}

/// Metadata lines stored as AIGER comments.
pub const COMMENT_FORMAT: &str = "format";
pub const COMMENT_PIPELINE: &str = "pipeline";
pub const COMMENT_SCALER: &str = "scaler";

/// Compiles `net` into a swept AIG. Input bits are named after the
/// dataset's features; the last output bit is the predicted class.
pub fn compile(net: &Mlp, train: &LabeledDataset, opts: &CompileOptions) -> Result<CompiledCircuit> {
    if train.num_features() != net.input_width() {
        return Err(Error::structural(format!(
            "dataset has {} features, network expects {}",
            train.num_features(),
            net.input_width()
        )));
    }
    let names = train.feature_names();
    let (netlist, distilled) = match &opts.settings {
        PipelineSettings::Direct { shift } => (build_network_direct(net, opts.fmt, *shift, Some(names))?, None),
        settings => {
            let d = distill(net, train, opts.fmt, settings, opts.seed)?;
            let modules = d.modules()?;
            (cascade_modules(&modules, net.input_width(), opts.fmt, Some(names))?, Some(d))
        }
    };
    let lowered = lower_netlist(&netlist)?;
    drop(netlist);
    let mut aig = lowered.sweep();
    drop(lowered);
    aig.add_comment(format!(
        "{COMMENT_FORMAT} {} {}",
        opts.fmt.total_bits(),
        opts.fmt.fractional_bits()
    ));
    aig.add_comment(format!(
        "{COMMENT_PIPELINE} {} {}",
        opts.settings.kind(),
        opts.settings.label()
    ));
    if let Some(s) = net.scaler() {
        aig.add_comment(scaler_comment(s));
    }
    Ok(CompiledCircuit {
        aig,
        fmt: opts.fmt,
        settings: opts.settings.clone(),
        distilled,
    })
}

pub fn scaler_comment(s: &MinMaxScaler) -> String {
    let mut out = COMMENT_SCALER.to_string();
    for (lo, hi) in s.mins.iter().zip(&s.maxs) {
        out.push_str(&format!(" {lo} {hi}"));
    }
    out
}

/// Reads the format and scaler written by [`compile`] back from the
/// comments of a graph.
pub fn circuit_metadata(g: &AigGraph) -> Result<(Option<FixedPointFormat>, Option<MinMaxScaler>, Option<String>)> {
    let mut fmt = None;
    let mut scaler = None;
    let mut pipeline = None;
    for c in g.comments() {
        let mut parts = c.split_whitespace();
        match parts.next() {
            Some(COMMENT_FORMAT) => {
                let nums: Vec<u32> = parts
                    .map(|t| t.parse().map_err(|_| Error::input(format!("bad format comment '{c}'"))))
                    .collect::<Result<_>>()?;
                if nums.len() != 2 {
                    return Err(Error::input(format!("bad format comment '{c}'")));
                }
                fmt = Some(FixedPointFormat::new(nums[0], nums[1])?);
            }
            Some(COMMENT_SCALER) => {
                let nums: Vec<f64> = parts
                    .map(|t| t.parse().map_err(|_| Error::input(format!("bad scaler comment '{c}'"))))
                    .collect::<Result<_>>()?;
                if !nums.len().is_multiple_of(2) {
                    return Err(Error::input("scaler comment needs min/max pairs"));
                }
                scaler = Some(MinMaxScaler {
                    mins: nums.iter().step_by(2).copied().collect(),
                    maxs: nums.iter().skip(1).step_by(2).copied().collect(),
                });
            }
            Some(COMMENT_PIPELINE) => pipeline = Some(parts.collect::<Vec<_>>().join(" ")),
            _ => {}
        }
    }
    Ok((fmt, scaler, pipeline))
}

/// Accuracy of the direct route computed in software, bit-exact with the
/// lowered circuit.
pub fn direct_software_accuracy(net: &Mlp, data: &LabeledDataset, fmt: FixedPointFormat, shift: RescaleShift) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::input("empty dataset"));
    }
    let mut correct = 0;
    for (row, label) in data.rows() {
        let out = fixed_point_forward(net, row, fmt, shift)?;
        if out.len() != 2 {
            return Err(Error::structural("argmax needs exactly two output nodes"));
        }
        correct += usize::from(usize::from(out[1] > out[0]) == label);
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Accuracy of distilled models computed in software, bit-exact with the
/// compiled circuit.
pub fn distilled_software_accuracy(net: &Mlp, d: &DistilledNetwork, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::input("empty dataset"));
    }
    let mut correct = 0;
    for (row, label) in data.rows() {
        correct += usize::from(d.predict_scaled(&net.scale_input(row)?)? == label);
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Compiles and evaluates every settings entry at `fmt`.
pub fn sweep_experiments(
    net: &Mlp,
    train: &LabeledDataset,
    test: &LabeledDataset,
    fmt: FixedPointFormat,
    grid: &[PipelineSettings],
    seed: u64,
) -> Result<Vec<EvaluationReport>> {
    grid.iter()
        .map(|settings| {
            let opts = CompileOptions {
                fmt,
                settings: settings.clone(),
                seed,
            };
            let c = compile(net, train, &opts)?;
            let mut r = evaluate(&c.aig, test, fmt, net.scaler())?;
            r.pipeline = settings.kind().to_string();
            r.settings = settings.label();
            log::info!("{} {} -> {:.4} ({} nodes)", r.pipeline, r.settings, r.accuracy, r.aig_nodes);
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::predictions;
    use crate::dataset::{GaussianBlobs, SplitManifest};
    use crate::mlp::{train, TrainConfig};

    fn small_problem() -> (Mlp, LabeledDataset, LabeledDataset) {
        let data = GaussianBlobs {
            samples: 240,
            features: 4,
            informative: 3,
            separation: 2.5,
        }
        .generate(11)
        .unwrap();
        let split = SplitManifest::stratified(data.labels(), 0.25, 11).unwrap();
        let tr = data.subset(&split.train).unwrap();
        let te = data.subset(&split.test).unwrap();
        let cfg = TrainConfig {
            hidden_nodes: 3,
            epochs: 40,
            learning_rate: 0.01,
            ..TrainConfig::default()
        };
        (train(&tr, &cfg).unwrap(), tr, te)
    }

    #[test]
    fn kinds_parse_and_print() {
        for k in [PipelineKind::Direct, PipelineKind::RandomForest, PipelineKind::LogicNet] {
            assert_eq!(k.to_string().parse::<PipelineKind>().unwrap(), k);
        }
        assert!("nn".parse::<PipelineKind>().is_err());
        assert_eq!(rf_grid().len(), 9);
        assert_eq!(lgn_grid().len(), 27);
    }

    #[test]
    fn seeds_differ_by_coordinate() {
        let a = derive_seed(1, &[1, 0, 0]);
        assert_eq!(a, derive_seed(1, &[1, 0, 0]));
        assert_ne!(a, derive_seed(1, &[1, 0, 1]));
        assert_ne!(a, derive_seed(2, &[1, 0, 0]));
    }

    #[test]
    fn direct_circuit_matches_software() {
        let (net, _, test) = small_problem();
        let fmt = FixedPointFormat::new(6, 3).unwrap();
        for shift in [RescaleShift::TwiceFractional, RescaleShift::Fractional] {
            let opts = CompileOptions {
                fmt,
                settings: PipelineSettings::Direct { shift },
                seed: 0,
            };
            let c = compile(&net, &test, &opts).unwrap();
            let preds = predictions(&c.aig, &test, fmt, net.scaler()).unwrap();
            for ((row, _), p) in test.rows().zip(&preds) {
                let out = fixed_point_forward(&net, row, fmt, shift).unwrap();
                assert_eq!(*p, usize::from(out[1] > out[0]));
            }
            let r = evaluate(&c.aig, &test, fmt, net.scaler()).unwrap();
            assert_eq!(r.accuracy, direct_software_accuracy(&net, &test, fmt, shift).unwrap());
        }
    }

    #[test]
    fn distilled_circuits_match_software() {
        let (net, tr, te) = small_problem();
        let fmt = FixedPointFormat::new(4, 2).unwrap();
        let settings = [
            PipelineSettings::RandomForest(RfParams {
                n_estimators: 2,
                max_depth: 4,
                ..RfParams::default()
            }),
            PipelineSettings::LogicNet(LgnParams {
                depth: 2,
                width: 8,
                lut_size: 3,
                fallback: false,
            }),
        ];
        for s in settings {
            let opts = CompileOptions { fmt, settings: s, seed: 3 };
            let c = compile(&net, &tr, &opts).unwrap();
            let d = c.distilled.as_ref().unwrap();
            let preds = predictions(&c.aig, &te, fmt, net.scaler()).unwrap();
            for ((row, _), p) in te.rows().zip(&preds) {
                assert_eq!(*p, d.predict_scaled(&net.scale_input(row).unwrap()).unwrap());
            }
            let (f, sc, pipe) = circuit_metadata(&c.aig).unwrap();
            assert_eq!(f, Some(fmt));
            assert_eq!(sc.as_ref(), net.scaler());
            assert!(pipe.unwrap().starts_with(&opts.settings.kind().to_string()));
        }
    }

    #[test]
    fn compile_is_deterministic() {
        let (net, tr, _) = small_problem();
        let opts = CompileOptions {
            fmt: FixedPointFormat::new(4, 2).unwrap(),
            settings: PipelineSettings::RandomForest(RfParams::default()),
            seed: 9,
        };
        let a = compile(&net, &tr, &opts).unwrap();
        let b = compile(&net, &tr, &opts).unwrap();
        assert_eq!(a.aig, b.aig);
    }
}
