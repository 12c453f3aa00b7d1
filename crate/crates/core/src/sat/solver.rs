//! Conflict-driven clause learning: two watched literals, first-UIP
//! learning, activity-ordered branching with phase saving, geometric
//! restarts and activity-based learnt clause deletion.

use super::{Assignment, CnfFormula, SolveResult};

const UNDEF: u8 = 2;

/// Internal literal: `2 * var + negated`, variables 0-based.
type L = u32;

fn lit_of(dimacs: i32) -> L {
    let v = dimacs.unsigned_abs() - 1;
    2 * v + u32::from(dimacs < 0)
}

fn var(l: L) -> usize {
    (l >> 1) as usize
}

struct Clause {
    lits: Vec<L>,
    learnt: bool,
    activity: f64,
    deleted: bool,
}

pub(super) struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<usize>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<L>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    polarity: Vec<bool>,
    heap: Vec<u32>,
    heap_pos: Vec<i32>,
    seen: Vec<bool>,
    unsat: bool,
    num_learnts: usize,
}

impl Solver {
    pub(super) fn new(f: &CnfFormula) -> Self {
        let n = f.num_vars();
        let mut s = Solver {
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            polarity: vec![false; n],
            heap: Vec::with_capacity(n),
            heap_pos: vec![-1; n],
            seen: vec![false; n],
            unsat: false,
            num_learnts: 0,
        };
        for v in 0..n as u32 {
            s.heap_insert(v);
        }
        for c in f.clauses() {
            s.add_input_clause(c);
            if s.unsat {
                break;
            }
        }
        s
    }

    fn value(&self, l: L) -> u8 {
        let a = self.assigns[var(l)];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (l & 1) as u8
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn add_input_clause(&mut self, c: &[i32]) {
        let mut lits: Vec<L> = c.iter().map(|&d| lit_of(d)).collect();
        lits.sort_unstable();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return;
        }
        match lits.len() {
            0 => self.unsat = true,
            1 => match self.value(lits[0]) {
                1 => {}
                0 => self.unsat = true,
                _ => {
                    self.enqueue(lits[0], None);
                    if self.propagate().is_some() {
                        self.unsat = true;
                    }
                }
            },
            _ => {
                self.attach(lits, false);
            }
        }
    }

    fn attach(&mut self, lits: Vec<L>, learnt: bool) -> usize {
        let idx = self.clauses.len();
        self.watches[lits[0] as usize].push(idx);
        self.watches[lits[1] as usize].push(idx);
        self.clauses.push(Clause {
            lits,
            learnt,
            activity: 0.0,
            deleted: false,
        });
        if learnt {
            self.num_learnts += 1;
        }
        idx
    }

    fn enqueue(&mut self, l: L, reason: Option<usize>) {
        let v = var(l);
        self.assigns[v] = u8::from(l & 1 == 0);
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Returns a conflicting clause, if any.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                if self.clauses[ci].deleted {
                    continue;
                }
                let lits = &mut self.clauses[ci].lits;
                if lits[0] == false_lit {
                    lits.swap(0, 1);
                }
                let first = lits[0];
                if self.value(first) == 1 {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..self.clauses[ci].lits.len() {
                    let l = self.clauses[ci].lits[k];
                    if self.value(l) != 0 {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[l as usize].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci;
                j += 1;
                if self.value(first) == 0 {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(ci));
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        if self.heap_pos[v] >= 0 {
            self.sift_up(self.heap_pos[v] as usize);
        }
    }

    fn bump_clause(&mut self, ci: usize) {
        let c = &mut self.clauses[ci];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP analysis; returns the learnt clause (asserting literal
    /// first) and the backjump level.
    fn analyze(&mut self, mut confl: usize) -> (Vec<L>, u32) {
        let mut learnt: Vec<L> = vec![0];
        let mut counter = 0;
        let mut p: Option<L> = None;
        let mut index = self.trail.len();
        loop {
            self.bump_clause(confl);
            let start = usize::from(p.is_some());
            for k in start..self.clauses[confl].lits.len() {
                let q = self.clauses[confl].lits[k];
                let v = var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[var(self.trail[index])] {
                    break;
                }
            }
            let lit = self.trail[index];
            self.seen[var(lit)] = false;
            counter -= 1;
            p = Some(lit);
            if counter == 0 {
                break;
            }
            confl = self.reason[var(lit)].expect("implied literal has a reason");
        }
        learnt[0] = p.expect("UIP") ^ 1;
        for &l in &learnt[1..] {
            self.seen[var(l)] = false;
        }
        let back = if learnt.len() == 1 {
            0
        } else {
            let (k, _) = learnt
                .iter()
                .enumerate()
                .skip(1)
                .max_by_key(|&(k, &l)| (self.level[var(l)], std::cmp::Reverse(k)))
                .expect("non-empty");
            learnt.swap(1, k);
            self.level[var(learnt[1])]
        };
        (learnt, back)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = var(l);
            self.polarity[v] = l & 1 == 0;
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            if self.heap_pos[v] < 0 {
                self.heap_insert(v as u32);
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn locked(&self, ci: usize) -> bool {
        let l = self.clauses[ci].lits[0];
        self.value(l) == 1 && self.reason[var(l)] == Some(ci)
    }

    /// Drops the less active half of the learnt clauses longer than two.
    fn reduce_db(&mut self) {
        let mut cands: Vec<usize> = (0..self.clauses.len())
            .filter(|&ci| {
                let c = &self.clauses[ci];
                c.learnt && !c.deleted && c.lits.len() > 2 && !self.locked(ci)
            })
            .collect();
        cands.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .total_cmp(&self.clauses[b].activity)
                .then(a.cmp(&b))
        });
        for &ci in &cands[..cands.len() / 2] {
            self.clauses[ci].deleted = true;
            self.clauses[ci].lits = Vec::new();
            self.num_learnts -= 1;
        }
    }

    fn pick_branch(&mut self) -> Option<L> {
        while let Some(v) = self.heap_pop() {
            if self.assigns[v as usize] == UNDEF {
                let positive = self.polarity[v as usize];
                return Some(2 * v + u32::from(!positive));
            }
        }
        None
    }

    pub(super) fn solve(mut self) -> SolveResult {
        if self.unsat || self.propagate().is_some() {
            return SolveResult::Unsat;
        }
        let mut restart_limit = 100.0f64;
        let mut max_learnts = (self.clauses.len() as f64 / 3.0).max(2000.0);
        loop {
            let mut conflicts = 0u64;
            loop {
                if let Some(confl) = self.propagate() {
                    conflicts += 1;
                    if self.decision_level() == 0 {
                        return SolveResult::Unsat;
                    }
                    let (learnt, back) = self.analyze(confl);
                    self.cancel_until(back);
                    if learnt.len() == 1 {
                        self.enqueue(learnt[0], None);
                    } else {
                        let asserting = learnt[0];
                        let ci = self.attach(learnt, true);
                        self.bump_clause(ci);
                        self.enqueue(asserting, Some(ci));
                    }
                    self.var_inc /= 0.95;
                    self.cla_inc /= 0.999;
                } else {
                    if conflicts as f64 >= restart_limit {
                        self.cancel_until(0);
                        break;
                    }
                    if self.num_learnts as f64 - self.trail.len() as f64 >= max_learnts {
                        self.reduce_db();
                    }
                    match self.pick_branch() {
                        None => {
                            let values = self.assigns.iter().map(|&a| a == 1).collect();
                            return SolveResult::Sat(Assignment::new(values));
                        }
                        Some(l) => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(l, None);
                        }
                    }
                }
            }
            restart_limit *= 1.5;
            max_learnts *= 1.1;
        }
    }

    // binary max-heap on (activity, lower index first)

    fn better(&self, a: u32, b: u32) -> bool {
        let (x, y) = (self.activity[a as usize], self.activity[b as usize]);
        x > y || (x == y && a < b)
    }

    fn heap_insert(&mut self, v: u32) {
        self.heap_pos[v as usize] = self.heap.len() as i32;
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1);
    }

    fn heap_pop(&mut self) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap.swap_remove(0);
        self.heap_pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap_pos[self.heap[0] as usize] = 0;
            self.sift_down(0);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !self.better(v, self.heap[parent]) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.heap_pos[self.heap[i] as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.heap_pos[v as usize] = i as i32;
    }

    fn sift_down(&mut self, mut i: usize) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let mut child = 2 * i + 1;
            if child >= n {
                break;
            }
            if child + 1 < n && self.better(self.heap[child + 1], self.heap[child]) {
                child += 1;
            }
            if !self.better(self.heap[child], v) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.heap_pos[self.heap[i] as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.heap_pos[v as usize] = i as i32;
    }
}
