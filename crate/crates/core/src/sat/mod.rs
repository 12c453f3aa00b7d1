//! CNF formulas, a CDCL solver, Tseitin encoding of AIGs, onset vector
//! search and miter-based equivalence checking.

mod solver;

use std::fmt::Write as _;

use crate::aig::{AigGraph, Lit};
use crate::error::{Error, Result};

/// Clauses over variables `1..=num_vars`, literals signed as in DIMACS.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            clauses: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn add_clause(&mut self, lits: &[i32]) -> Result<()> {
        for &l in lits {
            if l == 0 || l.unsigned_abs() as usize > self.num_vars {
                return Err(Error::input(format!("literal {l} outside 1..={}", self.num_vars)));
            }
        }
        self.clauses.push(lits.to_vec());
        Ok(())
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.clauses.iter().all(|c| c.iter().any(|&l| a.literal(l)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut f: Option<CnfFormula> = None;
        let mut pending = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p cnf") {
                let nums: Vec<usize> = rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| Error::parse(k + 1, "bad problem line")))
                    .collect::<Result<_>>()?;
                if nums.len() != 2 || f.is_some() {
                    return Err(Error::parse(k + 1, "bad problem line"));
                }
                f = Some(CnfFormula::new(nums[0]));
                continue;
            }
            let cnf = f.as_mut().ok_or_else(|| Error::parse(k + 1, "clause before 'p cnf' line"))?;
            for t in line.split_whitespace() {
                let l: i32 = t.parse().map_err(|_| Error::parse(k + 1, format!("bad literal '{t}'")))?;
                if l == 0 {
                    cnf.add_clause(&pending).map_err(|e| Error::parse(k + 1, e.to_string()))?;
                    pending.clear();
                } else {
                    pending.push(l);
                }
            }
        }
        if !pending.is_empty() {
            return Err(Error::parse(text.lines().count(), "last clause is not terminated by 0"));
        }
        f.ok_or_else(|| Error::parse(1, "missing 'p cnf' line"))
    }
}

/// Total assignment; index `v - 1` holds variable `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Self(values)
    }

    pub fn value(&self, var: usize) -> bool {
        self.0[var - 1]
    }

    pub fn literal(&self, lit: i32) -> bool {
        self.value(lit.unsigned_abs() as usize) == (lit > 0)
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }
}

/// Complete and deterministic.
pub fn solve(f: &CnfFormula) -> SolveResult {
    solver::Solver::new(f).solve()
}

/// CNF variable of AIG node `n` is `n + 1`.
fn cnf_lit(l: Lit) -> i32 {
    let v = l.node() as i32 + 1;
    if l.is_complemented() {
        -v
    } else {
        v
    }
}

/// Encodes the cone of `g.outputs()[output_index]` and asserts the output.
/// Returns the formula and the CNF variable of each primary input.
pub fn tseitin(g: &AigGraph, output_index: usize) -> Result<(CnfFormula, Vec<i32>)> {
    let &out = g
        .outputs()
        .get(output_index)
        .ok_or_else(|| Error::input(format!("output {output_index} does not exist")))?;
    let mut f = CnfFormula::new(g.node_count());
    f.add_clause(&[-1])?;
    let live = g.cone(&[out]);
    for (node, &alive) in live.iter().enumerate() {
        if let (true, Some((a, b))) = (alive, g.fanins(node)) {
            let n = node as i32 + 1;
            let (a, b) = (cnf_lit(a), cnf_lit(b));
            f.add_clause(&[-n, a])?;
            f.add_clause(&[-n, b])?;
            f.add_clause(&[n, -a, -b])?;
        }
    }
    f.add_clause(&[cnf_lit(out)])?;
    let inputs = (0..g.num_inputs()).map(|k| k as i32 + 2).collect();
    Ok((f, inputs))
}

/// An input vector driving the output to 1, or `None` when the output is
/// constant 0. The vector is re-simulated before it is returned.
pub fn find_onset_vector(g: &AigGraph, output_index: usize) -> Result<Option<Vec<bool>>> {
    let (f, inputs) = tseitin(g, output_index)?;
    match solve(&f) {
        SolveResult::Unsat => Ok(None),
        SolveResult::Sat(a) => {
            let vector: Vec<bool> = inputs.iter().map(|&v| a.value(v as usize)).collect();
            if !g.simulate(&vector)[output_index] {
                return Err(Error::structural("solver model does not drive the output to 1"));
            }
            Ok(Some(vector))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// Input vector on which some output differs.
    Counterexample(Vec<bool>),
}

/// Miter check: both graphs are copied over shared inputs, corresponding
/// outputs are XORed and the XORs ORed together.
pub fn check_equivalence(g1: &AigGraph, g2: &AigGraph) -> Result<Equivalence> {
    if g1.num_inputs() != g2.num_inputs() || g1.outputs().len() != g2.outputs().len() {
        return Err(Error::structural(format!(
            "interfaces differ: {}/{} vs {}/{} inputs/outputs",
            g1.num_inputs(),
            g1.outputs().len(),
            g2.num_inputs(),
            g2.outputs().len()
        )));
    }
    let mut m = AigGraph::new(g1.num_inputs());
    let inputs: Vec<Lit> = (0..g1.num_inputs()).map(|k| m.input(k)).collect();
    let o1 = m.append(g1, &inputs);
    let o2 = m.append(g2, &inputs);
    let diffs: Vec<Lit> = o1.iter().zip(&o2).map(|(&a, &b)| m.xor(a, b)).collect();
    let any = m.or_all(&diffs);
    if any == Lit::FALSE {
        return Ok(Equivalence::Equivalent);
    }
    m.add_output(any, None);
    match find_onset_vector(&m, 0)? {
        None => Ok(Equivalence::Equivalent),
        Some(v) => {
            if g1.simulate(&v) == g2.simulate(&v) {
                return Err(Error::structural("counterexample does not separate the graphs"));
            }
            Ok(Equivalence::Counterexample(v))
        }
    }
}
