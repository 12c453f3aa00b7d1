//! Word-level combinational netlists.
//!
//! Every signal has a fixed width of at most 128 bits. Gates are appended in
//! topological order; a gate may only read signals that already exist, so a
//! netlist is acyclic by construction. Simulation treats words as
//! two's-complement integers where the gate kind calls for it.

mod build;

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::fixedpoint::FixedPointFormat;

pub use build::{
    build_forest_bit, build_lut, build_network_direct, build_neuron, build_tree, cascade_modules,
    direct_modules, emit_forest_bit, emit_lut, emit_neuron, emit_tree, LEAF_FRACTION_BITS, LEAF_WIDTH,
};

pub const MAX_WIDTH: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignalId(usize);

impl SignalId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for SignalId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signal {
    pub width: u32,
    pub name: Option<String>,
}

/// Right shift applied after accumulation to return to `m` bits.
///
/// The product of two codes with `i` fractional bits carries `2i`
/// fractional bits. `TwiceFractional` shifts all of them out, leaving the
/// integer part of the sum in the low bits (the behaviour the direct
/// pipeline is specified with). `Fractional` shifts by `i` and keeps the
/// result in the input format.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RescaleShift {
    #[default]
    TwiceFractional,
    Fractional,
}

impl RescaleShift {
    pub fn amount(self, fmt: FixedPointFormat) -> u32 {
        match self {
            RescaleShift::TwiceFractional => 2 * fmt.fractional_bits(),
            RescaleShift::Fractional => fmt.fractional_bits(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GateKind {
    Const(u128),
    /// Signed `w x w -> 2w`.
    Mul,
    Add,
    Sub,
    /// Signed `a > b`.
    CompareGt,
    /// Unsigned `a > b`.
    CompareGtU,
    /// Operands `[select, when_one, when_zero]`.
    Mux,
    Shr { amount: u32, arithmetic: bool },
    SignExtend(u32),
    ZeroExtend(u32),
    /// Bits `lo..hi`.
    Slice { lo: u32, hi: u32 },
    /// First operand ends up in the least significant bits.
    Concat,
    /// Signed saturation to the given width.
    Clip(u32),
    /// Operand `k` drives bit `k` of the table index.
    Lut(Vec<bool>),
    Not,
    And,
    Or,
    Xor,
}

impl GateKind {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            GateKind::Const(_) => "CONST",
            GateKind::Mul => "MUL",
            GateKind::Add => "ADD",
            GateKind::Sub => "SUB",
            GateKind::CompareGt => "COMPARE_GT",
            GateKind::CompareGtU => "COMPARE_GT_U",
            GateKind::Mux => "MUX",
            GateKind::Shr { .. } => "SHR",
            GateKind::SignExtend(_) => "SIGN_EXTEND",
            GateKind::ZeroExtend(_) => "ZERO_EXTEND",
            GateKind::Slice { .. } => "SLICE",
            GateKind::Concat => "CONCAT",
            GateKind::Clip(_) => "CLIP",
            GateKind::Lut(_) => "LUT",
            GateKind::Not => "NOT",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Xor => "XOR",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub operands: Vec<SignalId>,
    pub output: SignalId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Netlist {
    signals: Vec<Signal>,
    gates: Vec<Gate>,
    inputs: Vec<SignalId>,
    outputs: Vec<SignalId>,
}

pub(crate) fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

pub(crate) fn to_signed(value: u128, width: u32) -> i128 {
    let shift = 128 - width;
    ((value << shift) as i128) >> shift
}

fn check_width(width: u32) -> Result<()> {
    if (1..=MAX_WIDTH).contains(&width) {
        Ok(())
    } else {
        Err(Error::structural(format!("signal width {width} outside 1..={MAX_WIDTH}")))
    }
}

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn signals(&self) -> &[Signal] {
        &self.signals
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn inputs(&self) -> &[SignalId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[SignalId] {
        &self.outputs
    }

    pub fn width(&self, s: SignalId) -> u32 {
        self.signals[s.0].width
    }

    pub fn name(&self, s: SignalId) -> Option<&str> {
        self.signals[s.0].name.as_deref()
    }

    pub fn input_bits(&self) -> usize {
        self.inputs.iter().map(|&s| self.width(s) as usize).sum()
    }

    pub fn output_bits(&self) -> usize {
        self.outputs.iter().map(|&s| self.width(s) as usize).sum()
    }

    fn new_signal(&mut self, width: u32, name: Option<String>) -> SignalId {
        self.signals.push(Signal { width, name });
        SignalId(self.signals.len() - 1)
    }

    pub fn add_input(&mut self, width: u32, name: impl Into<String>) -> Result<SignalId> {
        check_width(width)?;
        let s = self.new_signal(width, Some(name.into()));
        self.inputs.push(s);
        Ok(s)
    }

    pub fn add_output(&mut self, s: SignalId) -> Result<()> {
        self.check_signal(s)?;
        self.outputs.push(s);
        Ok(())
    }

    pub fn set_name(&mut self, s: SignalId, name: impl Into<String>) {
        self.signals[s.0].name = Some(name.into());
    }

    fn check_signal(&self, s: SignalId) -> Result<()> {
        if s.0 < self.signals.len() {
            Ok(())
        } else {
            Err(Error::structural(format!("unknown signal {s}")))
        }
    }

    fn push(&mut self, kind: GateKind, operands: Vec<SignalId>, width: u32) -> Result<SignalId> {
        check_width(width)?;
        for &op in &operands {
            self.check_signal(op)?;
        }
        let output = self.new_signal(width, None);
        self.gates.push(Gate {
            kind,
            operands,
            output,
        });
        Ok(output)
    }

    fn same_width(&self, a: SignalId, b: SignalId, what: &str) -> Result<u32> {
        self.check_signal(a)?;
        self.check_signal(b)?;
        let (wa, wb) = (self.width(a), self.width(b));
        if wa != wb {
            return Err(Error::structural(format!("{what} operands differ in width ({wa} vs {wb})")));
        }
        Ok(wa)
    }

    pub fn constant(&mut self, width: u32, value: u128) -> Result<SignalId> {
        check_width(width)?;
        self.push(GateKind::Const(value & mask(width)), vec![], width)
    }

    pub fn mul(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        let w = self.same_width(a, b, "MUL")?;
        self.push(GateKind::Mul, vec![a, b], 2 * w)
    }

    pub fn add(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        let w = self.same_width(a, b, "ADD")?;
        self.push(GateKind::Add, vec![a, b], w)
    }

    pub fn sub(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        let w = self.same_width(a, b, "SUB")?;
        self.push(GateKind::Sub, vec![a, b], w)
    }

    pub fn compare_gt(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        self.same_width(a, b, "COMPARE_GT")?;
        self.push(GateKind::CompareGt, vec![a, b], 1)
    }

    pub fn compare_gt_unsigned(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        self.same_width(a, b, "COMPARE_GT_U")?;
        self.push(GateKind::CompareGtU, vec![a, b], 1)
    }

    pub fn mux(&mut self, select: SignalId, when_one: SignalId, when_zero: SignalId) -> Result<SignalId> {
        self.check_signal(select)?;
        if self.width(select) != 1 {
            return Err(Error::structural("MUX select must be 1 bit"));
        }
        let w = self.same_width(when_one, when_zero, "MUX")?;
        self.push(GateKind::Mux, vec![select, when_one, when_zero], w)
    }

    pub fn shr(&mut self, a: SignalId, amount: u32, arithmetic: bool) -> Result<SignalId> {
        self.check_signal(a)?;
        let w = self.width(a);
        self.push(GateKind::Shr { amount, arithmetic }, vec![a], w)
    }

    pub fn sign_extend(&mut self, a: SignalId, width: u32) -> Result<SignalId> {
        self.check_signal(a)?;
        if width < self.width(a) {
            return Err(Error::structural("SIGN_EXTEND cannot narrow"));
        }
        self.push(GateKind::SignExtend(width), vec![a], width)
    }

    pub fn zero_extend(&mut self, a: SignalId, width: u32) -> Result<SignalId> {
        self.check_signal(a)?;
        if width < self.width(a) {
            return Err(Error::structural("ZERO_EXTEND cannot narrow"));
        }
        self.push(GateKind::ZeroExtend(width), vec![a], width)
    }

    pub fn slice(&mut self, a: SignalId, lo: u32, hi: u32) -> Result<SignalId> {
        self.check_signal(a)?;
        if lo >= hi || hi > self.width(a) {
            return Err(Error::structural(format!(
                "SLICE {lo}..{hi} invalid for width {}",
                self.width(a)
            )));
        }
        self.push(GateKind::Slice { lo, hi }, vec![a], hi - lo)
    }

    pub fn bit(&mut self, a: SignalId, index: u32) -> Result<SignalId> {
        self.slice(a, index, index + 1)
    }

    pub fn concat(&mut self, parts: &[SignalId]) -> Result<SignalId> {
        if parts.is_empty() {
            return Err(Error::structural("CONCAT needs operands"));
        }
        let mut width = 0;
        for &p in parts {
            self.check_signal(p)?;
            width += self.width(p);
        }
        self.push(GateKind::Concat, parts.to_vec(), width)
    }

    pub fn clip(&mut self, a: SignalId, width: u32) -> Result<SignalId> {
        self.check_signal(a)?;
        if width > self.width(a) || width == 0 {
            return Err(Error::structural("CLIP target must be within 1..=operand width"));
        }
        self.push(GateKind::Clip(width), vec![a], width)
    }

    pub fn lut(&mut self, table: Vec<bool>, selects: &[SignalId]) -> Result<SignalId> {
        if table.len() != 1usize << selects.len() {
            return Err(Error::structural(format!(
                "LUT with {} selects needs {} entries, got {}",
                selects.len(),
                1usize << selects.len(),
                table.len()
            )));
        }
        for &s in selects {
            self.check_signal(s)?;
            if self.width(s) != 1 {
                return Err(Error::structural("LUT selects must be 1 bit"));
            }
        }
        self.push(GateKind::Lut(table), selects.to_vec(), 1)
    }

    pub fn not(&mut self, a: SignalId) -> Result<SignalId> {
        self.check_signal(a)?;
        let w = self.width(a);
        self.push(GateKind::Not, vec![a], w)
    }

    pub fn and(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        let w = self.same_width(a, b, "AND")?;
        self.push(GateKind::And, vec![a, b], w)
    }

    pub fn or(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        let w = self.same_width(a, b, "OR")?;
        self.push(GateKind::Or, vec![a, b], w)
    }

    pub fn xor(&mut self, a: SignalId, b: SignalId) -> Result<SignalId> {
        let w = self.same_width(a, b, "XOR")?;
        self.push(GateKind::Xor, vec![a, b], w)
    }

    /// Copies `module` into `self`, binding its inputs to `inputs`.
    /// Returns the signals corresponding to the module's outputs.
    pub fn instantiate(&mut self, module: &Netlist, inputs: &[SignalId]) -> Result<Vec<SignalId>> {
        if inputs.len() != module.inputs.len() {
            return Err(Error::structural(format!(
                "module takes {} inputs, {} given",
                module.inputs.len(),
                inputs.len()
            )));
        }
        let mut map: Vec<Option<SignalId>> = vec![None; module.signals.len()];
        for (&formal, &actual) in module.inputs.iter().zip(inputs) {
            self.check_signal(actual)?;
            if module.width(formal) != self.width(actual) {
                return Err(Error::structural(format!(
                    "module input {formal} is {} bits, bound signal {actual} is {}",
                    module.width(formal),
                    self.width(actual)
                )));
            }
            map[formal.0] = Some(actual);
        }
        for gate in &module.gates {
            let operands = gate
                .operands
                .iter()
                .map(|o| map[o.0].ok_or_else(|| Error::structural(format!("module signal {o} undriven"))))
                .collect::<Result<Vec<_>>>()?;
            let out = self.push(gate.kind.clone(), operands, module.width(gate.output))?;
            map[gate.output.0] = Some(out);
        }
        module
            .outputs
            .iter()
            .map(|o| map[o.0].ok_or_else(|| Error::structural(format!("module output {o} undriven"))))
            .collect()
    }

    /// Evaluates the netlist on one word per input; returns one word per
    /// output.
    pub fn simulate(&self, inputs: &[u128]) -> Result<Vec<u128>> {
        if inputs.len() != self.inputs.len() {
            return Err(Error::input(format!(
                "netlist has {} inputs, {} values given",
                self.inputs.len(),
                inputs.len()
            )));
        }
        let mut values = vec![0u128; self.signals.len()];
        for (&s, &v) in self.inputs.iter().zip(inputs) {
            values[s.0] = v & mask(self.width(s));
        }
        for gate in &self.gates {
            values[gate.output.0] = self.eval_gate(gate, &values);
        }
        Ok(self.outputs.iter().map(|o| values[o.0]).collect())
    }

    /// Bit-level view of [`simulate`](Self::simulate): inputs and outputs
    /// are concatenated words, each least significant bit first.
    pub fn simulate_bits(&self, bits: &[bool]) -> Result<Vec<bool>> {
        if bits.len() != self.input_bits() {
            return Err(Error::input(format!(
                "netlist has {} input bits, {} given",
                self.input_bits(),
                bits.len()
            )));
        }
        let mut words = Vec::with_capacity(self.inputs.len());
        let mut offset = 0;
        for &s in &self.inputs {
            let w = self.width(s) as usize;
            let word = bits[offset..offset + w]
                .iter()
                .enumerate()
                .fold(0u128, |acc, (k, &b)| acc | (u128::from(b) << k));
            words.push(word);
            offset += w;
        }
        let outs = self.simulate(&words)?;
        Ok(self
            .outputs
            .iter()
            .zip(outs)
            .flat_map(|(&s, v)| (0..self.width(s)).map(move |k| (v >> k) & 1 == 1))
            .collect())
    }

    fn eval_gate(&self, gate: &Gate, values: &[u128]) -> u128 {
        let op = |k: usize| values[gate.operands[k].0];
        let op_width = |k: usize| self.width(gate.operands[k]);
        let out_width = self.width(gate.output);
        let m = mask(out_width);
        match &gate.kind {
            GateKind::Const(v) => *v,
            GateKind::Mul => {
                let w = op_width(0);
                let product = to_signed(op(0), w).wrapping_mul(to_signed(op(1), w));
                product as u128 & m
            }
            GateKind::Add => op(0).wrapping_add(op(1)) & m,
            GateKind::Sub => op(0).wrapping_sub(op(1)) & m,
            GateKind::CompareGt => {
                let w = op_width(0);
                u128::from(to_signed(op(0), w) > to_signed(op(1), w))
            }
            GateKind::CompareGtU => u128::from(op(0) > op(1)),
            GateKind::Mux => {
                if op(0) & 1 == 1 {
                    op(1)
                } else {
                    op(2)
                }
            }
            GateKind::Shr { amount, arithmetic } => {
                let w = op_width(0);
                if *arithmetic {
                    let v = to_signed(op(0), w);
                    (v >> (*amount).min(127)) as u128 & m
                } else if *amount >= w {
                    0
                } else {
                    op(0) >> amount
                }
            }
            GateKind::SignExtend(_) => to_signed(op(0), op_width(0)) as u128 & m,
            GateKind::ZeroExtend(_) => op(0),
            GateKind::Slice { lo, .. } => (op(0) >> lo) & m,
            GateKind::Concat => {
                let mut acc = 0u128;
                let mut offset = 0;
                for k in 0..gate.operands.len() {
                    acc |= op(k) << offset;
                    offset += op_width(k);
                }
                acc & m
            }
            GateKind::Clip(to) => {
                let v = to_signed(op(0), op_width(0));
                let hi = (1i128 << (to - 1)) - 1;
                let lo = -(1i128 << (to - 1));
                v.clamp(lo, hi) as u128 & m
            }
            GateKind::Lut(table) => {
                let index = (0..gate.operands.len()).fold(0usize, |acc, k| acc | (((op(k) & 1) as usize) << k));
                u128::from(table[index])
            }
            GateKind::Not => !op(0) & m,
            GateKind::And => op(0) & op(1),
            GateKind::Or => op(0) | op(1),
            GateKind::Xor => op(0) ^ op(1),
        }
    }

    /// One line per gate, `<out> = <KIND>(<args>)`, in construction order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &s in &self.inputs {
            let _ = writeln!(
                out,
                "{s} = INPUT({}, {})",
                self.width(s),
                self.name(s).unwrap_or("")
            );
        }
        for gate in &self.gates {
            let mut args: Vec<String> = gate.operands.iter().map(SignalId::to_string).collect();
            let w = self.width(gate.output);
            match &gate.kind {
                GateKind::Const(v) => args.push(bits_msb_first(*v, w)),
                GateKind::Shr { amount, arithmetic } => {
                    args.push(amount.to_string());
                    args.push(if *arithmetic { "arithmetic" } else { "logical" }.into());
                }
                GateKind::SignExtend(to) | GateKind::ZeroExtend(to) | GateKind::Clip(to) => {
                    args.push(to.to_string())
                }
                GateKind::Slice { lo, hi } => {
                    args.push(lo.to_string());
                    args.push(hi.to_string());
                }
                GateKind::Lut(table) => args.push(table.iter().map(|&b| if b { '1' } else { '0' }).collect()),
                _ => {}
            }
            let _ = writeln!(out, "{} = {}({})", gate.output, gate.kind.mnemonic(), args.join(", "));
        }
        let outs: Vec<String> = self.outputs.iter().map(SignalId::to_string).collect();
        let _ = writeln!(out, "OUTPUT({})", outs.join(", "));
        out
    }
}

fn bits_msb_first(v: u128, width: u32) -> String {
    (0..width).rev().map(|k| if (v >> k) & 1 == 1 { '1' } else { '0' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every gate kind against its arithmetic definition, exhaustively at
    /// width 3 (and 4 where cheap).
    #[test]
    fn gate_semantics_exhaustive() {
        for w in 1..=4u32 {
            let n = 1u128 << w;
            let s = |v: u128| to_signed(v, w);
            let mut nl = Netlist::new();
            let a = nl.add_input(w, "a").unwrap();
            let b = nl.add_input(w, "b").unwrap();
            let sel = nl.add_input(1, "sel").unwrap();
            let outs = [
                nl.mul(a, b).unwrap(),
                nl.add(a, b).unwrap(),
                nl.sub(a, b).unwrap(),
                nl.compare_gt(a, b).unwrap(),
                nl.compare_gt_unsigned(a, b).unwrap(),
                nl.mux(sel, a, b).unwrap(),
                nl.shr(a, 1, false).unwrap(),
                nl.shr(a, 1, true).unwrap(),
                nl.sign_extend(a, w + 2).unwrap(),
                nl.zero_extend(a, w + 2).unwrap(),
                nl.concat(&[a, b]).unwrap(),
                nl.clip(a, 1.max(w - 1)).unwrap(),
                nl.not(a).unwrap(),
                nl.and(a, b).unwrap(),
                nl.or(a, b).unwrap(),
                nl.xor(a, b).unwrap(),
            ];
            for &o in &outs {
                nl.add_output(o).unwrap();
            }
            let cw = 1.max(w - 1);
            for va in 0..n {
                for vb in 0..n {
                    for vs in 0..2 {
                        let got = nl.simulate(&[va, vb, vs]).unwrap();
                        let expect = [
                            ((s(va) * s(vb)) as u128) & mask(2 * w),
                            (va + vb) & mask(w),
                            (va + n - vb) & mask(w),
                            u128::from(s(va) > s(vb)),
                            u128::from(va > vb),
                            if vs == 1 { va } else { vb },
                            va >> 1,
                            (s(va) >> 1) as u128 & mask(w),
                            s(va) as u128 & mask(w + 2),
                            va,
                            va | (vb << w),
                            s(va).clamp(-(1 << (cw - 1)), (1 << (cw - 1)) - 1) as u128 & mask(cw),
                            !va & mask(w),
                            va & vb,
                            va | vb,
                            va ^ vb,
                        ];
                        assert_eq!(got, expect, "w={w} a={va} b={vb} sel={vs}");
                    }
                }
            }
        }
    }

    #[test]
    fn slice_and_lut() {
        let mut nl = Netlist::new();
        let a = nl.add_input(4, "a").unwrap();
        let hi = nl.slice(a, 2, 4).unwrap();
        let b0 = nl.bit(a, 0).unwrap();
        let b1 = nl.bit(a, 1).unwrap();
        let l = nl.lut(vec![false, true, true, false], &[b0, b1]).unwrap();
        nl.add_output(hi).unwrap();
        nl.add_output(l).unwrap();
        for v in 0..16u128 {
            let out = nl.simulate(&[v]).unwrap();
            assert_eq!(out[0], v >> 2);
            assert_eq!(out[1], (v & 1) ^ ((v >> 1) & 1));
        }
    }

    #[test]
    fn width_rules_enforced() {
        let mut nl = Netlist::new();
        let a = nl.add_input(4, "a").unwrap();
        let b = nl.add_input(3, "b").unwrap();
        assert!(nl.add(a, b).is_err());
        assert!(nl.mul(a, b).is_err());
        assert!(nl.compare_gt(a, b).is_err());
        assert!(nl.mux(a, a, a).is_err());
        assert!(nl.slice(a, 2, 5).is_err());
        assert!(nl.sign_extend(a, 3).is_err());
        assert!(nl.lut(vec![false; 3], &[]).is_err());
        assert!(nl.add_input(0, "z").is_err());
        assert!(nl.add_input(129, "z").is_err());
    }

    #[test]
    fn constant_netlist_and_dump() {
        let mut nl = Netlist::new();
        let c = nl.constant(4, 0b0100).unwrap();
        nl.add_output(c).unwrap();
        assert_eq!(nl.simulate(&[]).unwrap(), vec![4]);
        assert_eq!(nl.to_text(), "s0 = CONST(0100)\nOUTPUT(s0)\n");
    }

    #[test]
    fn dump_is_stable() {
        let mut nl = Netlist::new();
        let a = nl.add_input(4, "x0").unwrap();
        let w = nl.constant(4, 0b1110).unwrap();
        let p = nl.mul(a, w).unwrap();
        let e = nl.sign_extend(p, 12).unwrap();
        let s = nl.shr(e, 4, false).unwrap();
        let c = nl.clip(s, 4).unwrap();
        nl.add_output(c).unwrap();
        let expect = "s0 = INPUT(4, x0)\n\
                      s1 = CONST(1110)\n\
                      s2 = MUL(s0, s1)\n\
                      s3 = SIGN_EXTEND(s2, 12)\n\
                      s4 = SHR(s3, 4, logical)\n\
                      s5 = CLIP(s4, 4)\n\
                      OUTPUT(s5)\n";
        assert_eq!(nl.to_text(), expect);
    }

    #[test]
    fn instantiate_composes() {
        let mut inc = Netlist::new();
        let x = inc.add_input(4, "x").unwrap();
        let one = inc.constant(4, 1).unwrap();
        let y = inc.add(x, one).unwrap();
        inc.add_output(y).unwrap();

        let mut top = Netlist::new();
        let a = top.add_input(4, "a").unwrap();
        let first = top.instantiate(&inc, &[a]).unwrap();
        let second = top.instantiate(&inc, &first).unwrap();
        top.add_output(second[0]).unwrap();
        for v in 0..16 {
            assert_eq!(top.simulate(&[v]).unwrap(), vec![(v + 2) & 15]);
        }
        let narrow = top.add_input(3, "n").unwrap();
        assert!(top.instantiate(&inc, &[narrow]).is_err());
    }

    #[test]
    fn bit_level_view() {
        let mut nl = Netlist::new();
        let a = nl.add_input(2, "a").unwrap();
        let b = nl.add_input(2, "b").unwrap();
        let s = nl.concat(&[b, a]).unwrap();
        nl.add_output(s).unwrap();
        // a = 0b01, b = 0b10 -> concat(b, a) = 0b0110
        let out = nl.simulate_bits(&[true, false, false, true]).unwrap();
        assert_eq!(out, vec![false, true, true, false]);
    }
}
