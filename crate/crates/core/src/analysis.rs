//! Accuracy of compiled circuits, equation reports, structural support,
//! controlling inputs and result tables.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fmt::Write as _;

use crate::aig::{AigGraph, AigStats, Lit};
use crate::dataset::{LabeledDataset, MinMaxScaler};
use crate::error::{Error, Result};
use crate::fixedpoint::{quantize_code, FixedPointFormat};

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub aig_nodes: usize,
    pub aig_levels: usize,
    pub fmt: FixedPointFormat,
    /// `direct`, `rf` or `logicnet`; empty when unknown.
    pub pipeline: String,
    /// Hyperparameters, e.g. `depth=5 estimators=2`.
    pub settings: String,
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pipeline: {}", if self.pipeline.is_empty() { "unknown" } else { &self.pipeline })?;
        writeln!(f, "format: {} total bits, {} fractional", self.fmt.total_bits(), self.fmt.fractional_bits())?;
        if !self.settings.is_empty() {
            writeln!(f, "settings: {}", self.settings)?;
        }
        writeln!(f, "aig nodes: {}", self.aig_nodes)?;
        writeln!(f, "aig levels: {}", self.aig_levels)?;
        write!(
            f,
            "accuracy: {:.4} ({}/{})",
            self.accuracy, self.correct, self.total
        )
    }
}

/// Circuit input bits for one raw feature row: optional scaling, then each
/// feature quantized to an `m`-bit word, least significant bit first.
pub fn encode_row(row: &[f64], fmt: FixedPointFormat, scaler: Option<&MinMaxScaler>) -> Result<Vec<bool>> {
    let scaled = match scaler {
        Some(s) => {
            if s.width() != row.len() {
                return Err(Error::structural(format!(
                    "scaler covers {} features, row has {}",
                    s.width(),
                    row.len()
                )));
            }
            s.transform(row)
        }
        None => row.to_vec(),
    };
    let m = fmt.total_bits();
    let mut bits = Vec::with_capacity(row.len() * m as usize);
    for v in scaled {
        let code = quantize_code(v, fmt)?;
        bits.extend((0..m).map(|b| (code >> b) & 1 == 1));
    }
    Ok(bits)
}

/// Predicted class per sample, read from the circuit's last output bit.
pub fn predictions(
    g: &AigGraph,
    data: &LabeledDataset,
    fmt: FixedPointFormat,
    scaler: Option<&MinMaxScaler>,
) -> Result<Vec<usize>> {
    if data.is_empty() {
        return Err(Error::input("cannot evaluate on an empty dataset"));
    }
    let expected = data.num_features() * fmt.total_bits() as usize;
    if g.num_inputs() != expected {
        return Err(Error::structural(format!(
            "circuit has {} input bits, dataset needs {expected}",
            g.num_inputs()
        )));
    }
    if g.outputs().is_empty() {
        return Err(Error::structural("circuit has no outputs"));
    }
    let mut out = Vec::with_capacity(data.len());
    let rows: Vec<&[f64]> = data.features().iter().map(Vec::as_slice).collect();
    for chunk in rows.chunks(64) {
        let encoded = chunk
            .iter()
            .map(|r| encode_row(r, fmt, scaler))
            .collect::<Result<Vec<_>>>()?;
        for res in g.simulate_rows(&encoded) {
            out.push(usize::from(*res.last().expect("has outputs")));
        }
    }
    Ok(out)
}

pub fn evaluate(
    g: &AigGraph,
    data: &LabeledDataset,
    fmt: FixedPointFormat,
    scaler: Option<&MinMaxScaler>,
) -> Result<EvaluationReport> {
    let preds = predictions(g, data, fmt, scaler)?;
    let correct = preds.iter().zip(data.labels()).filter(|(p, l)| p == l).count();
    let AigStats { ands, levels } = g.stats();
    Ok(EvaluationReport {
        accuracy: correct as f64 / data.len() as f64,
        correct,
        total: data.len(),
        aig_nodes: ands,
        aig_levels: levels,
        fmt,
        pipeline: String::new(),
        settings: String::new(),
    })
}

/// Splits `word[bit]` into its parts.
fn split_bit_name(name: &str) -> Option<(&str, usize)> {
    let open = name.rfind('[')?;
    let idx = name[open + 1..].strip_suffix(']')?.parse().ok()?;
    Some((&name[..open], idx))
}

fn bit_name(names: &[Option<String>], k: usize, fallback: &str) -> String {
    names[k].clone().unwrap_or_else(|| format!("{fallback}[{k}]"))
}

/// Distinct word names in order of first appearance.
fn word_names(names: &[String]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for n in names {
        let word = split_bit_name(n).map_or(n.as_str(), |(w, _)| w).to_string();
        if seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationReport {
    pub name: String,
    /// Input word names.
    pub inputs: Vec<String>,
    /// Output word names.
    pub outputs: Vec<String>,
    /// Equation lines in definition order, outputs last.
    pub equations: Vec<String>,
}

impl fmt::Display for EquationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Logic Report: {}", self.name)?;
        writeln!(f)?;
        writeln!(f, "Inputs:")?;
        for (k, n) in self.inputs.iter().enumerate() {
            writeln!(f, "Input {k}:\t{n}")?;
        }
        writeln!(f)?;
        writeln!(f, "Outputs:")?;
        for n in &self.outputs {
            writeln!(f, "Output:\t{n}")?;
        }
        writeln!(f)?;
        writeln!(f, "Equations:")?;
        for e in &self.equations {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

/// Default number of the first internal net: one past the input bits and
/// output bits, counted from 1.
pub fn default_first_net(g: &AigGraph) -> usize {
    1 + g.num_inputs() + g.outputs().len()
}

/// One `nK = [NOT] a AND [NOT] b;` line per live AND node, then one line
/// per output bit. An output driven by an uncomplemented AND that nothing
/// else reads is written inline as `out[k] = a AND b;`.
pub fn emit_equations(g: &AigGraph, name: &str, first_net: Option<usize>) -> EquationReport {
    let first = first_net.unwrap_or_else(|| default_first_net(g));
    let inputs: Vec<String> = (0..g.num_inputs()).map(|k| bit_name(g.input_names(), k, "pi")).collect();
    let outputs: Vec<String> = (0..g.outputs().len()).map(|k| bit_name(g.output_names(), k, "po")).collect();
    let live = g.cone(g.outputs());

    let mut fanout = vec![0usize; g.node_count()];
    for node in 0..g.node_count() {
        if let (true, Some((a, b))) = (live[node], g.fanins(node)) {
            fanout[a.node()] += 1;
            fanout[b.node()] += 1;
        }
    }
    for o in g.outputs() {
        fanout[o.node()] += 1;
    }
    let inline = |o: Lit| !o.is_complemented() && g.fanins(o.node()).is_some() && fanout[o.node()] == 1;

    let mut net_name: HashMap<usize, String> = HashMap::new();
    let mut equations = Vec::new();
    let mut next = first;
    let render = |net_name: &HashMap<usize, String>, l: Lit| -> String {
        let atom = if l.node() == 0 {
            return if l.is_complemented() { "1".into() } else { "0".into() };
        } else if let Some(k) = g.input_index(l.node()) {
            inputs[k].clone()
        } else {
            net_name[&l.node()].clone()
        };
        if l.is_complemented() {
            format!("NOT {atom}")
        } else {
            atom
        }
    };
    let inlined: BTreeSet<usize> = g.outputs().iter().filter(|&&o| inline(o)).map(|o| o.node()).collect();
    for node in 0..g.node_count() {
        let Some((a, b)) = g.fanins(node) else { continue };
        if !live[node] || inlined.contains(&node) {
            continue;
        }
        let n = format!("n{next}");
        next += 1;
        equations.push(format!("{n} = {} AND {};", render(&net_name, a), render(&net_name, b)));
        net_name.insert(node, n);
    }
    for (k, &o) in g.outputs().iter().enumerate() {
        let rhs = match g.fanins(o.node()) {
            Some((a, b)) if inline(o) => format!("{} AND {}", render(&net_name, a), render(&net_name, b)),
            _ => render(&net_name, o),
        };
        equations.push(format!("{} = {rhs};", outputs[k]));
    }
    EquationReport {
        name: name.to_string(),
        inputs: word_names(&inputs),
        outputs: word_names(&outputs),
        equations,
    }
}

/// Parses a report back into a graph. `input_bits` fixes the input order
/// (names as they appear in equations, e.g. `systolic[0]`); outputs follow
/// the order of their assignment lines.
pub fn parse_equations(text: &str, input_bits: &[String]) -> Result<AigGraph> {
    let mut g = AigGraph::new(input_bits.len());
    let mut atoms: HashMap<String, Lit> = HashMap::new();
    for (k, n) in input_bits.iter().enumerate() {
        g.set_input_name(k, n.clone());
        atoms.insert(n.clone(), g.input(k));
    }
    let mut section = "";
    let mut saw_header = false;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = k + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Logic Report:") {
            if rest.trim().is_empty() {
                return Err(Error::parse(lineno, "report has no name"));
            }
            saw_header = true;
            continue;
        }
        match line {
            "Inputs:" | "Outputs:" | "Equations:" => {
                section = line;
                continue;
            }
            _ => {}
        }
        match section {
            "Inputs:" => {
                if !(line.starts_with("Input ") && line.contains(':')) {
                    return Err(Error::parse(lineno, "expected 'Input k:<tab>name'"));
                }
            }
            "Outputs:" => {
                if !line.starts_with("Output:") {
                    return Err(Error::parse(lineno, "expected 'Output:<tab>name'"));
                }
            }
            "Equations:" => {
                let body = line
                    .strip_suffix(';')
                    .ok_or_else(|| Error::parse(lineno, "equation must end with ';'"))?;
                let (lhs, rhs) = body
                    .split_once(" = ")
                    .ok_or_else(|| Error::parse(lineno, "expected '<net> = <expr>;'"))?;
                let operand = |text: &str, atoms: &HashMap<String, Lit>| -> Result<Lit> {
                    let (neg, atom) = match text.strip_prefix("NOT ") {
                        Some(a) => (true, a),
                        None => (false, text),
                    };
                    let lit = match atom {
                        "0" => Lit::FALSE,
                        "1" => Lit::TRUE,
                        _ => *atoms
                            .get(atom)
                            .ok_or_else(|| Error::parse(lineno, format!("'{atom}' used before definition")))?,
                    };
                    Ok(lit.xor_compl(neg))
                };
                let value = match rhs.split_once(" AND ") {
                    Some((a, b)) => {
                        let (a, b) = (operand(a, &atoms)?, operand(b, &atoms)?);
                        g.and(a, b)
                    }
                    None => operand(rhs, &atoms)?,
                };
                let is_net = lhs.strip_prefix('n').is_some_and(|d| !d.is_empty() && d.bytes().all(|c| c.is_ascii_digit()));
                if is_net {
                    if atoms.insert(lhs.to_string(), value).is_some() {
                        return Err(Error::parse(lineno, format!("'{lhs}' defined twice")));
                    }
                } else if split_bit_name(lhs).is_some() {
                    g.add_output(value, Some(lhs.to_string()));
                } else {
                    return Err(Error::parse(lineno, format!("invalid net name '{lhs}'")));
                }
            }
            _ => return Err(Error::parse(lineno, "text outside a report section")),
        }
    }
    if !saw_header {
        return Err(Error::parse(1, "missing 'Logic Report:' header"));
    }
    Ok(g)
}

/// Inputs in the cone of influence of one output; all others are
/// structural don't-cares for it.
pub fn structural_support(g: &AigGraph, output_index: usize) -> Result<BTreeSet<usize>> {
    let &o = g
        .outputs()
        .get(output_index)
        .ok_or_else(|| Error::input(format!("output {output_index} does not exist")))?;
    let live = g.cone(&[o]);
    Ok((0..g.num_inputs()).filter(|&k| live[k + 1]).collect())
}

/// Input words (bit names with the `[bit]` suffix removed) that any output
/// depends on.
pub fn supported_words(g: &AigGraph) -> BTreeSet<String> {
    let live = g.cone(g.outputs());
    (0..g.num_inputs())
        .filter(|&k| live[k + 1])
        .map(|k| {
            let n = bit_name(g.input_names(), k, "pi");
            split_bit_name(&n).map_or(n.clone(), |(w, _)| w.to_string())
        })
        .collect()
}

/// Input positions whose single flip changes the output at `vector`.
pub fn controlling_inputs(g: &AigGraph, vector: &[bool], output_index: usize) -> Result<BTreeSet<usize>> {
    if vector.len() != g.num_inputs() {
        return Err(Error::input(format!(
            "vector has {} bits, circuit has {} inputs",
            vector.len(),
            g.num_inputs()
        )));
    }
    if output_index >= g.outputs().len() {
        return Err(Error::input(format!("output {output_index} does not exist")));
    }
    // pattern 0 is the vector itself; pattern p > 0 flips input p - 1
    let mut out = BTreeSet::new();
    let n = g.num_inputs();
    let mut start = 0;
    while start < n {
        let batch = (n - start).min(63);
        let words: Vec<u64> = (0..n)
            .map(|k| {
                let base = if vector[k] { u64::MAX } else { 0 };
                if (start..start + batch).contains(&k) {
                    base ^ (1u64 << (k - start + 1))
                } else {
                    base
                }
            })
            .collect();
        let res = g.simulate_words(&words)[output_index];
        let reference = res & 1;
        for p in 0..batch {
            if (res >> (p + 1)) & 1 != reference {
                out.insert(start + p);
            }
        }
        start += batch;
    }
    Ok(out)
}

pub const SWEEP_HEADER: &str = "pipeline,total_bits,fractional_bits,settings,aig_nodes,aig_levels,accuracy";

/// Comma-separated table with [`SWEEP_HEADER`]; settings are quoted.
pub fn sweep_table(reports: &[EvaluationReport]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},\"{}\",{},{},{:.4}",
            r.pipeline,
            r.fmt.total_bits(),
            r.fmt.fractional_bits(),
            r.settings,
            r.aig_nodes,
            r.aig_levels,
            r.accuracy
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fmt42() -> FixedPointFormat {
        FixedPointFormat::new(4, 2).unwrap()
    }

    #[test]
    fn constant_circuit_on_balanced_data() {
        let data = LabeledDataset::unnamed(vec![vec![0.1, 0.2]; 4], vec![0, 1, 0, 1]).unwrap();
        let mut g = AigGraph::new(8);
        g.add_output(Lit::FALSE, None);
        let r = evaluate(&g, &data, fmt42(), None).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!((r.correct, r.total, r.aig_nodes, r.aig_levels), (2, 4, 0, 0));

        let empty = LabeledDataset::unnamed(vec![], vec![]).unwrap();
        assert!(evaluate(&g, &empty, fmt42(), None).is_err());
        assert!(evaluate(&AigGraph::new(3), &data, fmt42(), None).is_err());
    }

    #[test]
    fn evaluation_ignores_sample_order() {
        let mut g = AigGraph::new(8);
        // predicts 1 when the sign bit of feature 0 is clear and bit 1 set
        let o = g.and(!g.input(3), g.input(1));
        g.add_output(o, None);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let feats: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-2.0..2.0), 0.0]).collect();
        let labels: Vec<usize> = (0..50).map(|_| rng.random_range(0..2)).collect();
        let data = LabeledDataset::unnamed(feats.clone(), labels.clone()).unwrap();
        let rev = LabeledDataset::unnamed(feats.into_iter().rev().collect(), labels.into_iter().rev().collect()).unwrap();
        assert_eq!(
            evaluate(&g, &data, fmt42(), None).unwrap().correct,
            evaluate(&g, &rev, fmt42(), None).unwrap().correct
        );
    }

    fn named_graph() -> AigGraph {
        let mut g = AigGraph::new(4);
        for (k, n) in ["a[0]", "a[1]", "b[0]", "b[1]"].iter().enumerate() {
            g.set_input_name(k, *n);
        }
        let (a0, a1, b0, b1) = (g.input(0), g.input(1), g.input(2), g.input(3));
        let x = g.xor(a0, b0);
        let y = g.and(a1, b1);
        let z = g.and(x, y);
        g.add_output(z, Some("o[0]".into()));
        g.add_output(!x, Some("o[1]".into()));
        g.add_output(Lit::TRUE, Some("o[2]".into()));
        g
    }

    #[test]
    fn report_format() {
        let g = named_graph();
        let r = emit_equations(&g, "demo", None);
        let text = r.to_string();
        let expect = "Logic Report: demo\n\nInputs:\nInput 0:\ta\nInput 1:\tb\n\nOutputs:\nOutput:\to\n\nEquations:\n\
n8 = a[0] AND NOT b[0];\n\
n9 = NOT a[0] AND b[0];\n\
n10 = NOT n8 AND NOT n9;\n\
n11 = a[1] AND b[1];\n\
o[0] = NOT n10 AND n11;\n\
o[1] = n10;\n\
o[2] = 1;\n";
        assert_eq!(text, expect);
        let r = emit_equations(&g, "demo", Some(21));
        assert!(r.equations[0].starts_with("n21 = "));
    }

    #[test]
    fn report_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g = AigGraph::new(6);
        for k in 0..6 {
            g.set_input_name(k, format!("x[{k}]"));
        }
        let mut pool: Vec<Lit> = (0..6).map(|k| g.input(k)).collect();
        for _ in 0..40 {
            let a = pool[rng.random_range(0..pool.len())].xor_compl(rng.random());
            let b = pool[rng.random_range(0..pool.len())].xor_compl(rng.random());
            let c = g.and(a, b);
            pool.push(c);
        }
        for k in 0..4 {
            let l = pool[pool.len() - 1 - k].xor_compl(k % 2 == 1);
            g.add_output(l, Some(format!("y[{k}]")));
        }
        let text = emit_equations(&g, "rand", None).to_string();
        let names: Vec<String> = (0..6).map(|k| format!("x[{k}]")).collect();
        let h = parse_equations(&text, &names).unwrap();
        for v in 0..64u32 {
            let bits: Vec<bool> = (0..6).map(|k| (v >> k) & 1 == 1).collect();
            assert_eq!(h.simulate(&bits), g.simulate(&bits));
        }
        assert!(parse_equations("Logic Report: x\nEquations:\nn1 = q[0];\n", &names).is_err());
        assert!(parse_equations("Equations:\n", &names).is_err());
    }

    #[test]
    fn support_examples() {
        let mut g = AigGraph::new(3);
        g.add_output(g.input(0), None);
        g.add_output(Lit::TRUE, None);
        assert_eq!(structural_support(&g, 0).unwrap(), BTreeSet::from([0]));
        assert!(structural_support(&g, 1).unwrap().is_empty());
        assert!(structural_support(&g, 2).is_err());
        let g = named_graph();
        assert_eq!(structural_support(&g, 1).unwrap(), BTreeSet::from([0, 2]));
        assert_eq!(supported_words(&g), BTreeSet::from(["a".to_string(), "b".to_string()]));
    }

    #[test]
    fn controlling_examples() {
        let mut g = AigGraph::new(2);
        let a = g.and(g.input(0), g.input(1));
        let o = g.or(g.input(0), g.input(1));
        g.add_output(a, None);
        g.add_output(o, None);
        g.add_output(Lit::FALSE, None);
        assert_eq!(controlling_inputs(&g, &[true, true], 0).unwrap(), BTreeSet::from([0, 1]));
        assert!(controlling_inputs(&g, &[true, true], 1).unwrap().is_empty());
        assert_eq!(controlling_inputs(&g, &[false, false], 1).unwrap(), BTreeSet::from([0, 1]));
        for v in 0..4u32 {
            let bits = [(v & 1) == 1, (v & 2) == 2];
            assert!(controlling_inputs(&g, &bits, 2).unwrap().is_empty());
        }
    }

    #[test]
    fn controlling_inside_support_on_wide_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 150;
        let mut g = AigGraph::new(n);
        let mut pool: Vec<Lit> = (0..n).map(|k| g.input(k)).collect();
        for _ in 0..300 {
            let a = pool[rng.random_range(0..pool.len())].xor_compl(rng.random());
            let b = pool[rng.random_range(0..pool.len())].xor_compl(rng.random());
            let c = g.and(a, b);
            pool.push(c);
        }
        g.add_output(*pool.last().unwrap(), None);
        let support = structural_support(&g, 0).unwrap();
        for _ in 0..20 {
            let v: Vec<bool> = (0..n).map(|_| rng.random()).collect();
            let ctrl = controlling_inputs(&g, &v, 0).unwrap();
            assert!(ctrl.is_subset(&support));
            for k in 0..n {
                let mut w = v.clone();
                w[k] = !w[k];
                assert_eq!(ctrl.contains(&k), g.simulate(&w)[0] != g.simulate(&v)[0]);
            }
        }
    }

    #[test]
    fn table_layout() {
        let r = EvaluationReport {
            accuracy: 0.8125,
            correct: 13,
            total: 16,
            aig_nodes: 120,
            aig_levels: 9,
            fmt: FixedPointFormat::new(8, 6).unwrap(),
            pipeline: "rf".into(),
            settings: "depth=5 estimators=2".into(),
        };
        assert_eq!(
            sweep_table(&[r]),
            format!("{SWEEP_HEADER}\nrf,8,6,\"depth=5 estimators=2\",120,9,0.8125\n")
        );
    }
}
