//! And-inverter graphs with complemented edges and structural hashing.
//!
//! Node 0 is constant false, nodes `1..=I` are the primary inputs and every
//! later node is a two-input AND whose fanins are strictly older. A
//! [`Lit`] is `node << 1 | complement`, the same encoding AIGER uses.

mod aiger;
mod lower;

use std::ops::Not;

use rustc_hash::FxHashMap;

pub use aiger::{read_aiger, read_aiger_file, write_aiger, write_aiger_file};
pub use lower::{lower_into, lower_netlist};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub const FALSE: Lit = Lit(0);
    pub const TRUE: Lit = Lit(1);

    pub fn new(node: usize, complemented: bool) -> Self {
        let node = u32::try_from(node).expect("AIG node index overflows u32");
        Lit(node << 1 | u32::from(complemented))
    }

    pub fn from_raw(raw: u32) -> Self {
        Lit(raw)
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    pub fn node(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_const(self) -> bool {
        self.node() == 0
    }

    /// Flips the complement when `c` is set.
    pub fn xor_compl(self, c: bool) -> Self {
        Lit(self.0 ^ u32::from(c))
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AigStats {
    /// AND nodes; inputs and the constant are not counted.
    pub ands: usize,
    /// Longest input-to-output path, in AND nodes.
    pub levels: usize,
}

#[derive(Clone, Debug, Default)]
pub struct AigGraph {
    num_inputs: usize,
    ands: Vec<(Lit, Lit)>,
    outputs: Vec<Lit>,
    input_names: Vec<Option<String>>,
    output_names: Vec<Option<String>>,
    comments: Vec<String>,
    strash: FxHashMap<(Lit, Lit), u32>,
}

impl PartialEq for AigGraph {
    fn eq(&self, other: &Self) -> bool {
        self.num_inputs == other.num_inputs
            && self.ands == other.ands
            && self.outputs == other.outputs
            && self.input_names == other.input_names
            && self.output_names == other.output_names
    }
}

impl AigGraph {
    pub fn new(num_inputs: usize) -> Self {
        Self {
            num_inputs,
            input_names: vec![None; num_inputs],
            ..Self::default()
        }
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_ands(&self) -> usize {
        self.ands.len()
    }

    /// Constant, inputs and ANDs.
    pub fn node_count(&self) -> usize {
        1 + self.num_inputs + self.ands.len()
    }

    pub fn input(&self, k: usize) -> Lit {
        assert!(k < self.num_inputs, "input {k} out of range");
        Lit::new(k + 1, false)
    }

    pub fn is_input(&self, node: usize) -> bool {
        (1..=self.num_inputs).contains(&node)
    }

    /// Input position of an input node.
    pub fn input_index(&self, node: usize) -> Option<usize> {
        self.is_input(node).then(|| node - 1)
    }

    pub fn fanins(&self, node: usize) -> Option<(Lit, Lit)> {
        node.checked_sub(self.num_inputs + 1).and_then(|k| self.ands.get(k).copied())
    }

    pub fn outputs(&self) -> &[Lit] {
        &self.outputs
    }

    pub fn input_names(&self) -> &[Option<String>] {
        &self.input_names
    }

    pub fn output_names(&self) -> &[Option<String>] {
        &self.output_names
    }

    pub fn set_input_name(&mut self, k: usize, name: impl Into<String>) {
        self.input_names[k] = Some(name.into());
    }

    pub fn set_output_name(&mut self, k: usize, name: impl Into<String>) {
        self.output_names[k] = Some(name.into());
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn add_comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn add_output(&mut self, lit: Lit, name: Option<String>) -> usize {
        assert!(lit.node() < self.node_count(), "output literal refers to a missing node");
        self.outputs.push(lit);
        self.output_names.push(name);
        self.outputs.len() - 1
    }

    pub fn set_output(&mut self, k: usize, lit: Lit) {
        assert!(lit.node() < self.node_count(), "output literal refers to a missing node");
        self.outputs[k] = lit;
    }

    /// Hashed AND with constant and trivial-pair folding.
    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        if a == Lit::FALSE || b == Lit::FALSE || a == !b {
            return Lit::FALSE;
        }
        if a == Lit::TRUE || a == b {
            return b;
        }
        if b == Lit::TRUE {
            return a;
        }
        let key = if a <= b { (a, b) } else { (b, a) };
        if let Some(&node) = self.strash.get(&key) {
            return Lit::new(node as usize, false);
        }
        let node = self.node_count();
        self.ands.push(key);
        self.strash.insert(key, node as u32);
        Lit::new(node, false)
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let x = self.and(a, !b);
        let y = self.and(!a, b);
        self.or(x, y)
    }

    pub fn xnor(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor(a, b)
    }

    /// `s ? t : e` in three ANDs.
    pub fn mux(&mut self, s: Lit, t: Lit, e: Lit) -> Lit {
        if t == e {
            return t;
        }
        let x = self.and(s, t);
        let y = self.and(!s, e);
        self.or(x, y)
    }

    pub fn and_all(&mut self, lits: &[Lit]) -> Lit {
        self.reduce(lits, Lit::TRUE, Self::and)
    }

    pub fn or_all(&mut self, lits: &[Lit]) -> Lit {
        self.reduce(lits, Lit::FALSE, Self::or)
    }

    /// Balanced reduction, so a tree of `n` leaves has `ceil(log2 n)` levels.
    fn reduce(&mut self, lits: &[Lit], empty: Lit, op: fn(&mut Self, Lit, Lit) -> Lit) -> Lit {
        if lits.is_empty() {
            return empty;
        }
        let mut level = lits.to_vec();
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|p| if p.len() == 2 { op(self, p[0], p[1]) } else { p[0] })
                .collect();
        }
        level[0]
    }

    /// Copies `other`'s logic into `self` with its inputs bound to
    /// `inputs`; returns literals for `other`'s outputs.
    pub fn append(&mut self, other: &AigGraph, inputs: &[Lit]) -> Vec<Lit> {
        assert_eq!(inputs.len(), other.num_inputs, "input count mismatch");
        let mut map = Vec::with_capacity(other.node_count());
        map.push(Lit::FALSE);
        map.extend_from_slice(inputs);
        let tr = |map: &[Lit], l: Lit| map[l.node()].xor_compl(l.is_complemented());
        for &(a, b) in &other.ands {
            let (a, b) = (tr(&map, a), tr(&map, b));
            map.push(self.and(a, b));
        }
        other.outputs.iter().map(|&o| tr(&map, o)).collect()
    }

    /// Simulates 64 patterns at once: bit `p` of `inputs[k]` is input `k`
    /// in pattern `p`.
    pub fn simulate_words(&self, inputs: &[u64]) -> Vec<u64> {
        assert_eq!(inputs.len(), self.num_inputs, "input count mismatch");
        let mut values = Vec::with_capacity(self.node_count());
        values.push(0u64);
        values.extend_from_slice(inputs);
        let val = |values: &[u64], l: Lit| {
            let v = values[l.node()];
            if l.is_complemented() {
                !v
            } else {
                v
            }
        };
        for &(a, b) in &self.ands {
            let v = val(&values, a) & val(&values, b);
            values.push(v);
        }
        self.outputs.iter().map(|&o| val(&values, o)).collect()
    }

    pub fn simulate(&self, inputs: &[bool]) -> Vec<bool> {
        let words: Vec<u64> = inputs.iter().map(|&b| u64::from(b)).collect();
        self.simulate_words(&words).into_iter().map(|w| w & 1 == 1).collect()
    }

    /// Simulates many rows, 64 at a time. Returns one output row per input row.
    pub fn simulate_rows(&self, rows: &[Vec<bool>]) -> Vec<Vec<bool>> {
        let mut out = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(64) {
            let mut words = vec![0u64; self.num_inputs];
            for (p, row) in chunk.iter().enumerate() {
                assert_eq!(row.len(), self.num_inputs, "input row width mismatch");
                for (w, &b) in words.iter_mut().zip(row) {
                    *w |= u64::from(b) << p;
                }
            }
            let res = self.simulate_words(&words);
            for p in 0..chunk.len() {
                out.push(res.iter().map(|w| (w >> p) & 1 == 1).collect());
            }
        }
        out
    }

    /// Per-node AND depth.
    pub fn node_levels(&self) -> Vec<u32> {
        let mut level = vec![0u32; self.node_count()];
        let base = self.num_inputs + 1;
        for (k, &(a, b)) in self.ands.iter().enumerate() {
            level[base + k] = 1 + level[a.node()].max(level[b.node()]);
        }
        level
    }

    pub fn stats(&self) -> AigStats {
        let level = self.node_levels();
        AigStats {
            ands: self.ands.len(),
            levels: self.outputs.iter().map(|o| level[o.node()] as usize).max().unwrap_or(0),
        }
    }

    /// Nodes reachable from `roots`, as a membership mask.
    pub fn cone(&self, roots: &[Lit]) -> Vec<bool> {
        let mut live = vec![false; self.node_count()];
        for r in roots {
            live[r.node()] = true;
        }
        let base = self.num_inputs + 1;
        for node in (base..self.node_count()).rev() {
            if live[node] {
                let (a, b) = self.ands[node - base];
                live[a.node()] = true;
                live[b.node()] = true;
            }
        }
        live
    }

    /// Drops ANDs that no output depends on; inputs, names and comments are
    /// kept.
    pub fn sweep(&self) -> AigGraph {
        let live = self.cone(&self.outputs);
        let mut g = AigGraph::new(self.num_inputs);
        g.input_names = self.input_names.clone();
        g.comments = self.comments.clone();
        let mut map = Vec::with_capacity(self.node_count());
        map.push(Lit::FALSE);
        map.extend((0..self.num_inputs).map(|k| g.input(k)));
        let tr = |map: &[Lit], l: Lit| map[l.node()].xor_compl(l.is_complemented());
        let base = self.num_inputs + 1;
        for (k, &(a, b)) in self.ands.iter().enumerate() {
            let lit = if live[base + k] {
                let (a, b) = (tr(&map, a), tr(&map, b));
                g.and(a, b)
            } else {
                Lit::FALSE
            };
            map.push(lit);
        }
        for (o, name) in self.outputs.iter().zip(&self.output_names) {
            let lit = tr(&map, *o);
            g.add_output(lit, name.clone());
        }
        g
    }
}
