//! Random forests over binary features, one forest per activation bit.
//!
//! Trees are CART with Gini impurity. Because every feature is a single
//! bit, each split is a threshold at 0.5; the only thing a tree learns is
//! which features matter.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixedpoint::FixedPointFormat;
use crate::netlist::{emit_forest_bit, Netlist, LEAF_FRACTION_BITS};

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    /// Empirical class probabilities.
    Leaf { p0: f64, p1: f64 },
    /// `left` when the feature bit is 0, `right` when it is 1.
    Split { feature: usize, left: usize, right: usize },
}

/// Node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

/// Unsigned fixed-point code of a leaf probability.
pub fn leaf_code(p: f64) -> u32 {
    (p * f64::from(1u32 << LEAF_FRACTION_BITS)).round() as u32
}

impl DecisionTree {
    pub fn leaf(p0: f64, p1: f64) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf { p0, p1 }],
        }
    }

    /// Builds a tree from explicit nodes; node 0 is the root and children
    /// must be listed after their parent.
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::structural("tree has no nodes"));
        }
        for (k, node) in nodes.iter().enumerate() {
            match *node {
                TreeNode::Split { left, right, .. } => {
                    if left <= k || right <= k || left >= nodes.len() || right >= nodes.len() {
                        return Err(Error::structural(format!("node {k} has invalid children")));
                    }
                }
                TreeNode::Leaf { p0, p1 } => {
                    if !(0.0..=1.0).contains(&p0) || !(0.0..=1.0).contains(&p1) || (p0 + p1 - 1.0).abs() > 1e-9 {
                        return Err(Error::input(format!("leaf {k} probabilities ({p0}, {p1}) invalid")));
                    }
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    /// Quantized `(p0, p1)` of leaf `node`.
    pub fn leaf_codes(&self, node: usize) -> (u32, u32) {
        match self.nodes[node] {
            TreeNode::Leaf { p0, p1 } => (leaf_code(p0), leaf_code(p1)),
            TreeNode::Split { .. } => panic!("node {node} is not a leaf"),
        }
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_for(&self, row: &[bool]) -> usize {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                TreeNode::Leaf { .. } => return k,
                TreeNode::Split { feature, left, right } => k = if row[feature] { right } else { left },
            }
        }
    }

    pub fn probabilities(&self, row: &[bool]) -> (f64, f64) {
        match self.nodes[self.leaf_for(row)] {
            TreeNode::Leaf { p0, p1 } => (p0, p1),
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], k: usize) -> usize {
            match nodes[k] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Split { .. })).count()
    }

    fn write_text(&self, out: &mut String, k: usize, indent: usize) {
        let pad = "  ".repeat(indent);
        match self.nodes[k] {
            TreeNode::Leaf { p0, p1 } => {
                let _ = writeln!(out, "{pad}leaf {p0} {p1}");
            }
            TreeNode::Split { feature, left, right } => {
                let _ = writeln!(out, "{pad}split {feature}");
                self.write_text(out, left, indent + 1);
                self.write_text(out, right, indent + 1);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    /// Train each tree on a bootstrap resample of the rows.
    pub bootstrap: bool,
    /// Consider `ceil(sqrt(F))` random features per split instead of all.
    pub feature_subsample: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 3,
            max_depth: 5,
            bootstrap: true,
            feature_subsample: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomForestModel {
    trees: Vec<DecisionTree>,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl RandomForestModel {
    pub fn from_trees(trees: Vec<DecisionTree>, max_depth: usize, seed: u64) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::input("forest needs at least one tree"));
        }
        Ok(Self {
            n_estimators: trees.len(),
            trees,
            max_depth,
            seed,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Pre-order listing of every tree.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "forest estimators={} max_depth={} seed={}\n",
            self.n_estimators, self.max_depth, self.seed
        );
        for (t, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(out, "tree {t}");
            tree.write_text(&mut out, 0, 1);
        }
        out
    }
}

/// Trains a forest on binary `features` (rows) and binary `labels`.
pub fn train_forest(features: &[Vec<bool>], labels: &[bool], cfg: &ForestConfig) -> Result<RandomForestModel> {
    if features.is_empty() {
        return Err(Error::input("cannot train a forest on an empty dataset"));
    }
    if features.len() != labels.len() {
        return Err(Error::structural("feature and label counts differ"));
    }
    if cfg.n_estimators == 0 {
        return Err(Error::input("a forest needs at least one estimator"));
    }
    let width = features[0].len();
    if features.iter().any(|r| r.len() != width) {
        return Err(Error::structural("ragged feature rows"));
    }
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trees = (0..cfg.n_estimators)
        .map(|_| {
            let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
            let rows: Vec<usize> = if cfg.bootstrap {
                (0..features.len()).map(|_| rng.random_range(0..features.len())).collect()
            } else {
                (0..features.len()).collect()
            };
            let mut builder = TreeBuilder {
                features,
                labels,
                width,
                max_depth: cfg.max_depth,
                subsample: cfg.feature_subsample,
                rng,
                nodes: Vec::new(),
            };
            builder.grow(rows, 0);
            DecisionTree { nodes: builder.nodes }
        })
        .collect();
    RandomForestModel::from_trees(trees, cfg.max_depth, cfg.seed)
}

struct TreeBuilder<'a> {
    features: &'a [Vec<bool>],
    labels: &'a [bool],
    width: usize,
    max_depth: usize,
    subsample: bool,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

fn gini(c0: usize, c1: usize) -> f64 {
    let n = (c0 + c1) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (c0 as f64 / n, c1 as f64 / n);
    1.0 - p0 * p0 - p1 * p1
}

impl TreeBuilder<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let c1 = rows.iter().filter(|&&r| self.labels[r]).count();
        let c0 = rows.len() - c1;
        let total = rows.len() as f64;
        let leaf = TreeNode::Leaf {
            p0: c0 as f64 / total,
            p1: c1 as f64 / total,
        };
        self.nodes.push(leaf);
        if depth >= self.max_depth || c0 == 0 || c1 == 0 {
            return id;
        }

        let candidates: Vec<usize> = if self.subsample && self.width > 0 {
            let k = (self.width as f64).sqrt().ceil() as usize;
            let mut picked = sample(&mut self.rng, self.width, k.min(self.width)).into_vec();
            picked.sort_unstable();
            picked
        } else {
            (0..self.width).collect()
        };

        // Zero-gain splits are allowed on impure nodes so parity-like
        // targets (XOR) can still be separated one level down.
        let parent = gini(c0, c1);
        let mut best: Option<(f64, usize)> = None;
        for f in candidates {
            let (mut on0, mut on1) = (0usize, 0usize);
            for &r in &rows {
                if self.features[r][f] {
                    if self.labels[r] {
                        on1 += 1;
                    } else {
                        on0 += 1;
                    }
                }
            }
            let on = on0 + on1;
            if on == 0 || on == rows.len() {
                continue;
            }
            let (off0, off1) = (c0 - on0, c1 - on1);
            let weighted = (on as f64 * gini(on0, on1) + (rows.len() - on) as f64 * gini(off0, off1)) / total;
            if weighted > parent + 1e-12 {
                continue;
            }
            if best.is_none_or(|(b, _)| weighted < b - 1e-12) {
                best = Some((weighted, f));
            }
        }
        let Some((_, feature)) = best else { return id };
        let (right_rows, left_rows): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| self.features[r][feature]);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = TreeNode::Split { feature, left, right };
        id
    }
}

/// Sums the quantized leaf probabilities over all trees and returns
/// `sum1 > sum0`; ties give 0. This is exactly what the lowered circuit
/// computes.
pub fn predict_forest(model: &RandomForestModel, row: &[bool]) -> bool {
    let (s0, s1) = model.trees.iter().fold((0u64, 0u64), |(a, b), t| {
        let (c0, c1) = t.leaf_codes(t.leaf_for(row));
        (a + u64::from(c0), b + u64::from(c1))
    });
    s1 > s0
}

/// Real-valued vote: `sum p1 > sum p0`.
pub fn predict_forest_exact(model: &RandomForestModel, row: &[bool]) -> bool {
    let (s0, s1) = model.trees.iter().fold((0.0, 0.0), |(a, b), t| {
        let (p0, p1) = t.probabilities(row);
        (a + p0, b + p1)
    });
    s1 > s0
}

/// Module for one node: `input_words` inputs of `m` bits, one `m`-bit
/// output. `models[j]` predicts label bit `j` (0 = most significant) from
/// the concatenated input bits, each word most significant bit first.
pub fn forest_module(models: &[RandomForestModel], input_words: usize, fmt: FixedPointFormat) -> Result<Netlist> {
    let m = fmt.total_bits() as usize;
    if models.len() != m {
        return Err(Error::structural(format!("{} forests for a {m}-bit word", models.len())));
    }
    let mut nl = Netlist::new();
    let words = (0..input_words)
        .map(|k| nl.add_input(m as u32, format!("x{k}")))
        .collect::<Result<Vec<_>>>()?;
    let features = feature_bits(&mut nl, &words, m)?;
    let mut bits = Vec::with_capacity(m);
    for b in 0..m {
        bits.push(emit_forest_bit(&mut nl, &models[m - 1 - b], &features)?);
    }
    let out = nl.concat(&bits)?;
    nl.add_output(out)?;
    Ok(nl)
}

/// One 1-bit signal per feature column, in distillation-set order.
pub(crate) fn feature_bits(
    nl: &mut Netlist,
    words: &[crate::netlist::SignalId],
    m: usize,
) -> Result<Vec<crate::netlist::SignalId>> {
    let mut out = Vec::with_capacity(words.len() * m);
    for &w in words {
        for j in 0..m {
            out.push(nl.bit(w, (m - 1 - j) as u32)?);
        }
    }
    Ok(out)
}
