//! Circuit builders: neurons, decision trees, forests, LUTs and the
//! cascade that wires per-node modules into a whole network.

use crate::error::{Error, Result};
use crate::fixedpoint::{quantize, quantize_code, BitString, FixedPointFormat};
use crate::forest::{DecisionTree, RandomForestModel, TreeNode};
use crate::mlp::{Activation, Mlp};

use super::{Netlist, RescaleShift, SignalId, MAX_WIDTH};

/// Fractional bits of the unsigned leaf probabilities.
pub const LEAF_FRACTION_BITS: u32 = 8;
/// Width of one leaf probability word; 1.0 needs the ninth bit.
pub const LEAF_WIDTH: u32 = LEAF_FRACTION_BITS + 1;

fn word(code: &BitString) -> u128 {
    u128::from(code.to_unsigned())
}

/// Appends one neuron reading the `m`-bit words `inputs`.
///
/// Products are `2m` bits wide and accumulate at `3m` bits; the bias is one
/// more product against the quantized constant 1. With `relu`, a signed
/// comparison against zero selects the sum or zero. The result is shifted
/// right (logically after ReLU, arithmetically otherwise) and saturated to
/// `m` bits.
pub fn emit_neuron(
    nl: &mut Netlist,
    inputs: &[SignalId],
    weights: &[BitString],
    bias: Option<&BitString>,
    relu: bool,
    fmt: FixedPointFormat,
    shift: RescaleShift,
) -> Result<SignalId> {
    let m = fmt.total_bits();
    if weights.is_empty() {
        return Err(Error::input("neuron needs at least one weight"));
    }
    if weights.len() != inputs.len() {
        return Err(Error::structural(format!(
            "{} weights for {} inputs",
            weights.len(),
            inputs.len()
        )));
    }
    if 3 * m > MAX_WIDTH {
        return Err(Error::input(format!("accumulator of 3*{m} bits exceeds {MAX_WIDTH}")));
    }
    let acc_width = 3 * m;
    for w in weights.iter().chain(bias) {
        if w.width() != m as usize {
            return Err(Error::structural(format!("weight {w} is not {m} bits wide")));
        }
    }
    for &x in inputs {
        if nl.width(x) != m {
            return Err(Error::structural(format!("neuron input {x} is not {m} bits wide")));
        }
    }

    let mut terms = Vec::with_capacity(inputs.len() + 1);
    for (&x, w) in inputs.iter().zip(weights) {
        let c = nl.constant(m, word(w))?;
        let product = nl.mul(x, c)?;
        terms.push(nl.sign_extend(product, acc_width)?);
    }
    if let Some(b) = bias {
        let one = nl.constant(m, quantize_code(1.0, fmt)? as u64 as u128)?;
        let c = nl.constant(m, word(b))?;
        let product = nl.mul(one, c)?;
        terms.push(nl.sign_extend(product, acc_width)?);
    }
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = nl.add(acc, t)?;
    }
    let activated = if relu {
        let zero = nl.constant(acc_width, 0)?;
        let positive = nl.compare_gt(acc, zero)?;
        nl.mux(positive, acc, zero)?
    } else {
        acc
    };
    let shifted = nl.shr(activated, shift.amount(fmt), !relu)?;
    nl.clip(shifted, m)
}

/// Stand-alone neuron module: inputs `x0..`, one `m`-bit output.
pub fn build_neuron(
    weights: &[BitString],
    bias: Option<&BitString>,
    relu: bool,
    fmt: FixedPointFormat,
    shift: RescaleShift,
) -> Result<Netlist> {
    let mut nl = Netlist::new();
    let inputs = (0..weights.len())
        .map(|k| nl.add_input(fmt.total_bits(), format!("x{k}")))
        .collect::<Result<Vec<_>>>()?;
    let out = emit_neuron(&mut nl, &inputs, weights, bias, relu, fmt, shift)?;
    nl.add_output(out)?;
    Ok(nl)
}

/// One neuron module per node, layer-major.
pub fn direct_modules(net: &Mlp, fmt: FixedPointFormat, shift: RescaleShift) -> Result<Vec<Vec<Netlist>>> {
    net.layers()
        .iter()
        .map(|layer| {
            layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(row, &b)| {
                    let weights = row.iter().map(|&w| quantize(w, fmt)).collect::<Result<Vec<_>>>()?;
                    let bias = quantize(b, fmt)?;
                    build_neuron(&weights, Some(&bias), layer.activation == Activation::Relu, fmt, shift)
                })
                .collect()
        })
        .collect()
}

/// Direct arithmetic lowering of the whole network.
pub fn build_network_direct(
    net: &Mlp,
    fmt: FixedPointFormat,
    shift: RescaleShift,
    input_names: Option<&[String]>,
) -> Result<Netlist> {
    let modules = direct_modules(net, fmt, shift)?;
    cascade_modules(&modules, net.input_width(), fmt, input_names)
}

/// Wires `modules[l][n]` (each taking the `m`-bit words of layer `l - 1`
/// and producing one `m`-bit word) into a network over `input_count`
/// primary input words. Outputs are the last layer's words followed by the
/// 1-bit argmax `out1 > out0` (ties go to class 0).
pub fn cascade_modules(
    modules: &[Vec<Netlist>],
    input_count: usize,
    fmt: FixedPointFormat,
    input_names: Option<&[String]>,
) -> Result<Netlist> {
    let m = fmt.total_bits();
    if modules.is_empty() {
        return Err(Error::structural("no layers to cascade"));
    }
    if let Some(names) = input_names {
        if names.len() != input_count {
            return Err(Error::structural("input name count does not match input count"));
        }
    }
    let mut nl = Netlist::new();
    let mut current = (0..input_count)
        .map(|k| {
            let name = input_names.map_or_else(|| format!("x{k}"), |n| n[k].clone());
            nl.add_input(m, name)
        })
        .collect::<Result<Vec<_>>>()?;
    for (l, layer) in modules.iter().enumerate() {
        if layer.is_empty() {
            return Err(Error::structural(format!("layer {l} has no modules")));
        }
        let mut next = Vec::with_capacity(layer.len());
        for (n, module) in layer.iter().enumerate() {
            let outs = nl.instantiate(module, &current)?;
            if outs.len() != 1 || nl.width(outs[0]) != m {
                return Err(Error::structural(format!(
                    "module ({}, {n}) must produce a single {m}-bit word",
                    l + 1
                )));
            }
            nl.set_name(outs[0], format!("l{}n{n}", l + 1));
            next.push(outs[0]);
        }
        current = next;
    }
    if current.len() != 2 {
        return Err(Error::structural(format!(
            "argmax output needs exactly two classes, found {}",
            current.len()
        )));
    }
    for &o in &current {
        nl.add_output(o)?;
    }
    let decision = nl.compare_gt(current[1], current[0])?;
    nl.set_name(decision, "argmax");
    nl.add_output(decision)?;
    Ok(nl)
}

/// Appends a decision tree over 1-bit features. Each split compares its
/// feature (as an unsigned value with one fractional bit) against 0.5 and
/// selects the right subtree when greater. Returns the `(p0, p1)` words.
pub fn emit_tree(nl: &mut Netlist, tree: &DecisionTree, features: &[SignalId]) -> Result<(SignalId, SignalId)> {
    let zero = nl.constant(1, 0)?;
    let half = nl.constant(2, 0b01)?;
    emit_tree_node(nl, tree, 0, features, zero, half)
}

fn emit_tree_node(
    nl: &mut Netlist,
    tree: &DecisionTree,
    node: usize,
    features: &[SignalId],
    zero: SignalId,
    half: SignalId,
) -> Result<(SignalId, SignalId)> {
    match tree.nodes()[node] {
        TreeNode::Leaf { .. } => {
            let (c0, c1) = tree.leaf_codes(node);
            Ok((
                nl.constant(LEAF_WIDTH, u128::from(c0))?,
                nl.constant(LEAF_WIDTH, u128::from(c1))?,
            ))
        }
        TreeNode::Split { feature, left, right } => {
            let &bit = features
                .get(feature)
                .ok_or_else(|| Error::structural(format!("tree reads feature {feature} of {}", features.len())))?;
            let value = nl.concat(&[zero, bit])?;
            let go_right = nl.compare_gt_unsigned(value, half)?;
            let (l0, l1) = emit_tree_node(nl, tree, left, features, zero, half)?;
            let (r0, r1) = emit_tree_node(nl, tree, right, features, zero, half)?;
            Ok((nl.mux(go_right, r0, l0)?, nl.mux(go_right, r1, l1)?))
        }
    }
}

/// Tree module over `n_features` 1-bit inputs; outputs `p0`, `p1`.
pub fn build_tree(tree: &DecisionTree, n_features: usize) -> Result<Netlist> {
    let mut nl = Netlist::new();
    let features = (0..n_features)
        .map(|k| nl.add_input(1, format!("f{k}")))
        .collect::<Result<Vec<_>>>()?;
    let (p0, p1) = emit_tree(&mut nl, tree, &features)?;
    nl.add_output(p0)?;
    nl.add_output(p1)?;
    Ok(nl)
}

/// Appends a forest: per-class leaf probabilities summed with unsigned
/// adders, then `sum1 > sum0`.
pub fn emit_forest_bit(nl: &mut Netlist, model: &RandomForestModel, features: &[SignalId]) -> Result<SignalId> {
    let trees = model.trees();
    if trees.is_empty() {
        return Err(Error::structural("forest has no trees"));
    }
    let growth = usize::BITS - (trees.len() - 1).leading_zeros();
    let sum_width = LEAF_WIDTH + growth;
    let mut sums: Option<(SignalId, SignalId)> = None;
    for tree in trees {
        let (p0, p1) = emit_tree(nl, tree, features)?;
        let p0 = nl.zero_extend(p0, sum_width)?;
        let p1 = nl.zero_extend(p1, sum_width)?;
        sums = Some(match sums {
            None => (p0, p1),
            Some((s0, s1)) => (nl.add(s0, p0)?, nl.add(s1, p1)?),
        });
    }
    let (s0, s1) = sums.expect("at least one tree");
    nl.compare_gt_unsigned(s1, s0)
}

/// Forest module over `n_features` 1-bit inputs; one 1-bit output.
pub fn build_forest_bit(model: &RandomForestModel, n_features: usize) -> Result<Netlist> {
    let mut nl = Netlist::new();
    let features = (0..n_features)
        .map(|k| nl.add_input(1, format!("f{k}")))
        .collect::<Result<Vec<_>>>()?;
    let out = emit_forest_bit(&mut nl, model, &features)?;
    nl.add_output(out)?;
    Ok(nl)
}

/// Appends a LUT as a multiplexer tree over constant entries. `selects[k]`
/// drives bit `k` of the entry index; the least significant select sits at
/// the leaves of the tree.
pub fn emit_lut(nl: &mut Netlist, entries: &[bool], selects: &[SignalId]) -> Result<SignalId> {
    if entries.len() != 1usize << selects.len() {
        return Err(Error::structural(format!(
            "{} entries for a {}-input LUT",
            entries.len(),
            selects.len()
        )));
    }
    let mut level = entries
        .iter()
        .map(|&e| nl.constant(1, u128::from(e)))
        .collect::<Result<Vec<_>>>()?;
    for &sel in selects {
        if nl.width(sel) != 1 {
            return Err(Error::structural("LUT selects must be 1 bit"));
        }
        level = level
            .chunks(2)
            .map(|pair| nl.mux(sel, pair[1], pair[0]))
            .collect::<Result<Vec<_>>>()?;
    }
    Ok(level[0])
}

/// LUT module with `k` 1-bit inputs.
pub fn build_lut(entries: &[bool], k: usize) -> Result<Netlist> {
    let mut nl = Netlist::new();
    let selects = (0..k)
        .map(|j| nl.add_input(1, format!("s{j}")))
        .collect::<Result<Vec<_>>>()?;
    let out = emit_lut(&mut nl, entries, &selects)?;
    nl.add_output(out)?;
    Ok(nl)
}
