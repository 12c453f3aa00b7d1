//! Two-level logic: memorizing sum-of-products covers, adjacent-cube
//! merging, don't-care expansion and a classifier built from an onset and
//! an offset cover.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aig::{AigGraph, Lit};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tri {
    Zero,
    One,
    DontCare,
}

impl Tri {
    fn matches(self, b: bool) -> bool {
        match self {
            Tri::Zero => !b,
            Tri::One => b,
            Tri::DontCare => true,
        }
    }
}

/// Product term; position `k` constrains variable `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube(Vec<Tri>);

impl Cube {
    pub fn new(lits: Vec<Tri>) -> Self {
        Self(lits)
    }

    pub fn from_row(row: &[bool]) -> Self {
        Self(row.iter().map(|&b| if b { Tri::One } else { Tri::Zero }).collect())
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn lits(&self) -> &[Tri] {
        &self.0
    }

    pub fn matches(&self, row: &[bool]) -> bool {
        self.0.iter().zip(row).all(|(t, &b)| t.matches(b))
    }

    pub fn specified(&self) -> usize {
        self.0.iter().filter(|&&t| t != Tri::DontCare).count()
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.0 {
            f.write_str(match t {
                Tri::Zero => "0",
                Tri::One => "1",
                Tri::DontCare => "-",
            })?;
        }
        Ok(())
    }
}

impl FromStr for Cube {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(Tri::Zero),
                '1' => Ok(Tri::One),
                '-' => Ok(Tri::DontCare),
                _ => Err(Error::input(format!("invalid cube character '{c}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Cube)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SopCover {
    n: usize,
    cubes: BTreeSet<Cube>,
}

impl SopCover {
    pub fn new(n: usize) -> Self {
        Self { n, cubes: BTreeSet::new() }
    }

    pub fn insert(&mut self, cube: Cube) -> Result<()> {
        if cube.width() != self.n {
            return Err(Error::structural(format!("cube {cube} is not {} wide", self.n)));
        }
        self.cubes.insert(cube);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.cubes.iter()
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// One cube per line, `0`/`1`/`-` per variable.
    pub fn to_pla(&self) -> String {
        self.cubes.iter().map(|c| format!("{c}\n")).collect()
    }

    pub fn from_pla(n: usize, text: &str) -> Result<Self> {
        let mut c = SopCover::new(n);
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cube: Cube = line.parse().map_err(|e: Error| Error::parse(k + 1, e.to_string()))?;
            c.insert(cube).map_err(|e| Error::parse(k + 1, e.to_string()))?;
        }
        Ok(c)
    }
}

fn check_rows(n: usize, rows: &[Vec<bool>]) -> Result<()> {
    match rows.iter().position(|r| r.len() != n) {
        Some(k) => Err(Error::structural(format!("row {k} is not {n} wide"))),
        None => Ok(()),
    }
}

/// One full-width cube per distinct row.
pub fn sop_from_samples(n: usize, positive_rows: &[Vec<bool>]) -> Result<SopCover> {
    check_rows(n, positive_rows)?;
    let mut c = SopCover::new(n);
    for r in positive_rows {
        c.insert(Cube::from_row(r))?;
    }
    Ok(c)
}

pub fn eval_sop(c: &SopCover, row: &[bool]) -> bool {
    c.cubes.iter().any(|cube| cube.matches(row))
}

/// Replaces pairs of cubes that differ in exactly one specified variable
/// (`ab + a!b = a`) until no such pair is left. The function is unchanged.
pub fn merge_adjacent(c: &SopCover) -> SopCover {
    let mut set: HashSet<Cube> = c.cubes.iter().cloned().collect();
    loop {
        let mut merged = None;
        'search: for cube in &set {
            for k in 0..cube.width() {
                let flipped = match cube.0[k] {
                    Tri::Zero => Tri::One,
                    Tri::One => Tri::Zero,
                    Tri::DontCare => continue,
                };
                let mut partner = cube.clone();
                partner.0[k] = flipped;
                if set.contains(&partner) {
                    merged = Some((cube.clone(), partner, k));
                    break 'search;
                }
            }
        }
        let Some((a, b, k)) = merged else { break };
        set.remove(&a);
        set.remove(&b);
        let mut m = a;
        m.0[k] = Tri::DontCare;
        set.insert(m);
    }
    SopCover {
        n: c.n,
        cubes: set.into_iter().collect(),
    }
}

/// Widens every cube by dropping its specified variables one at a time in a
/// seeded random order, keeping a drop only if the widened cube still
/// covers no row of `offset_rows`.
pub fn dontcare_expand(c: &SopCover, offset_rows: &[Vec<bool>], seed: u64) -> Result<SopCover> {
    check_rows(c.n, offset_rows)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SopCover::new(c.n);
    for cube in &c.cubes {
        let mut cube = cube.clone();
        let mut order: Vec<usize> = (0..c.n).filter(|&k| cube.0[k] != Tri::DontCare).collect();
        order.shuffle(&mut rng);
        for k in order {
            let saved = cube.0[k];
            cube.0[k] = Tri::DontCare;
            if offset_rows.iter().any(|r| cube.matches(r)) {
                cube.0[k] = saved;
            }
        }
        out.cubes.insert(cube);
    }
    Ok(out)
}

/// Onset cover `c1` and offset cover `c2` learned from labeled rows.
#[derive(Clone, Debug)]
pub struct C1C2Classifier {
    pub c1: SopCover,
    pub c2: SopCover,
    seed: u64,
}

impl C1C2Classifier {
    pub fn fit(rows: &[Vec<bool>], labels: &[bool], expand: bool, seed: u64) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::structural("row and label counts differ"));
        }
        let n = rows.first().map_or(0, Vec::len);
        check_rows(n, rows)?;
        let (pos, neg): (Vec<_>, Vec<_>) = rows.iter().zip(labels).partition(|(_, &l)| l);
        let pos: Vec<Vec<bool>> = pos.into_iter().map(|(r, _)| r.clone()).collect();
        let neg: Vec<Vec<bool>> = neg.into_iter().map(|(r, _)| r.clone()).collect();
        let mut c1 = sop_from_samples(n, &pos)?;
        let mut c2 = sop_from_samples(n, &neg)?;
        if expand {
            c1 = dontcare_expand(&c1, &neg, seed)?;
            c2 = dontcare_expand(&c2, &pos, seed.wrapping_add(1))?;
        }
        Ok(Self { c1, c2, seed })
    }

    /// 1 if only the onset cover matches, 0 if only the offset cover does,
    /// otherwise a coin flip seeded by the classifier seed and the row.
    pub fn predict(&self, row: &[bool]) -> bool {
        match (eval_sop(&self.c1, row), eval_sop(&self.c2, row)) {
            (true, false) => true,
            (false, true) => false,
            _ => {
                let key = row.iter().fold(self.seed ^ 0x9e37_79b9_7f4a_7c15, |h, &b| {
                    (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3).rotate_left(7)
                });
                ChaCha8Rng::seed_from_u64(key).random()
            }
        }
    }
}

pub fn c1c2_classify(rows: &[Vec<bool>], labels: &[bool], expand: bool, test_row: &[bool], seed: u64) -> Result<bool> {
    Ok(C1C2Classifier::fit(rows, labels, expand, seed)?.predict(test_row))
}

/// Single-output graph; inputs are the cover's variables, named `x[k]`.
pub fn sop_to_aig(c: &SopCover) -> AigGraph {
    let mut g = AigGraph::new(c.n);
    for k in 0..c.n {
        g.set_input_name(k, format!("x[{k}]"));
    }
    let terms: Vec<Lit> = c
        .cubes
        .iter()
        .map(|cube| {
            let lits: Vec<Lit> = cube
                .0
                .iter()
                .enumerate()
                .filter_map(|(k, t)| match t {
                    Tri::Zero => Some(!g.input(k)),
                    Tri::One => Some(g.input(k)),
                    Tri::DontCare => None,
                })
                .collect();
            g.and_all(&lits)
        })
        .collect();
    let out = g.or_all(&terms);
    g.add_output(out, Some("f".into()));
    g
}

/// Accuracy of the expanded and the plain classifier on the one-bit-flip
/// neighbours of a random training sample, for a linear threshold function
/// of `n` variables (nearby inputs mostly share a label). Returns
/// `(expanded, plain)`.
pub fn flip_neighbourhood_trial(n: usize, train_size: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let threshold = weights.iter().sum::<f64>() / 2.0;
    let f = |r: &[bool]| r.iter().zip(&weights).filter(|(&b, _)| b).map(|(_, w)| w).sum::<f64>() > threshold;
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    while rows.len() < train_size.min(1 << n) {
        let r: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        if seen.insert(r.clone()) {
            rows.push(r);
        }
    }
    let labels: Vec<bool> = rows.iter().map(|r| f(r)).collect();
    let mut tests = BTreeSet::new();
    for r in &rows {
        for k in 0..n {
            let mut t = r.clone();
            t[k] = !t[k];
            if !seen.contains(&t) {
                tests.insert(t);
            }
        }
    }
    if tests.is_empty() {
        return Err(Error::input("training sample leaves no unseen neighbours"));
    }
    let expanded = C1C2Classifier::fit(&rows, &labels, true, seed)?;
    let plain = C1C2Classifier::fit(&rows, &labels, false, seed)?;
    let score = |c: &C1C2Classifier| tests.iter().filter(|t| c.predict(t) == f(t)).count() as f64 / tests.len() as f64;
    Ok((score(&expanded), score(&plain)))
}
