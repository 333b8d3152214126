//! Satisfiability oracle for CNF plus XOR constraints.
//!
//! The engine is a small conflict-driven clause-learning solver: two watched
//! literals, first-UIP learning, Luby restarts and periodic learnt-clause
//! reduction. Decisions follow variable index order with the false phase
//! first, so every run is reproducible.
//!
//! XOR constraints are cut into width-3 pieces chained through fresh
//! auxiliary variables and expanded into CNF (see [`encode_xor`]).

use crate::formula::{evaluate, CnfFormula, Lit, ProjectedWitness, SolutionSet, Var, Witness};

/// Parity constraint: the XOR of `vars` equals `parity`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct XorConstraint {
    vars: Vec<Var>,
    parity: bool,
}

impl XorConstraint {
    /// Builds the constraint. Repeated variables cancel pairwise.
    pub fn new<I: IntoIterator<Item = Var>>(vars: I, parity: bool) -> XorConstraint {
        let mut vs: Vec<Var> = vars.into_iter().collect();
        vs.sort();
        let mut out: Vec<Var> = Vec::with_capacity(vs.len());
        for v in vs {
            if out.last() == Some(&v) {
                out.pop();
            } else {
                out.push(v);
            }
        }
        XorConstraint { vars: out, parity }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn parity(&self) -> bool {
        self.parity
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }

    /// Evaluates the constraint under a per-variable value function.
    pub fn is_satisfied<F: Fn(Var) -> bool>(&self, value: F) -> bool {
        self.vars.iter().fold(false, |acc, &v| acc ^ value(v)) == self.parity
    }

    pub fn satisfied_by(&self, w: &Witness) -> bool {
        self.is_satisfied(|v| w.value(v).unwrap_or(false))
    }
}

/// Forbidden-parity clauses of `vars[0] ^ ... ^ vars[k-1] = parity`.
fn parity_clauses(vars: &[Var], parity: bool, out: &mut Vec<Vec<Lit>>) {
    let k = vars.len();
    for bits in 0u32..(1 << k) {
        // `bits` is an assignment; block it when its parity is wrong.
        if ((bits.count_ones() & 1) == 1) != parity {
            out.push(
                vars.iter()
                    .enumerate()
                    .map(|(i, &v)| Lit::new(v, bits >> i & 1 == 0))
                    .collect(),
            );
        }
    }
}

/// Encodes an XOR constraint as CNF.
///
/// Constraints of width at most 3 are expanded directly. Wider ones are
/// chained: `x1 ^ x2 ^ t1 = 0`, `t1 ^ x3 ^ t2 = 0`, ..., `t_j ^ x_{k-1} ^ x_k
/// = parity`, which needs `k - 3` auxiliaries numbered from `fresh_start`.
/// Every solution of the constraint extends uniquely to the auxiliaries.
pub fn encode_xor(x: &XorConstraint, fresh_start: Var) -> (Vec<Vec<Lit>>, Vec<Var>) {
    let mut clauses = Vec::new();
    let vars = &x.vars;
    let k = vars.len();
    if k == 0 {
        if x.parity {
            clauses.push(Vec::new());
        }
        return (clauses, Vec::new());
    }
    if k <= 3 {
        parity_clauses(vars, x.parity, &mut clauses);
        return (clauses, Vec::new());
    }
    let aux: Vec<Var> = (0..k - 3).map(|i| Var::new(fresh_start.get() + i as u32)).collect();
    parity_clauses(&[vars[0], vars[1], aux[0]], false, &mut clauses);
    for i in 1..aux.len() {
        parity_clauses(&[aux[i - 1], vars[i + 1], aux[i]], false, &mut clauses);
    }
    parity_clauses(&[*aux.last().unwrap(), vars[k - 2], vars[k - 1]], x.parity, &mut clauses);
    (clauses, aux)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
    /// The conflict budget ran out before an answer was found.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Model over the formula's own variables, present iff `Sat`.
    pub witness: Option<Witness>,
}

const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;
const RESTART_BASE: u64 = 100;

#[derive(Debug, Clone, Copy)]
struct Watcher {
    clause: u32,
    blocker: Lit,
}

#[derive(Debug, Clone)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
}

/// Incremental CDCL solver. Clauses may be added between `solve` calls.
#[derive(Debug, Clone)]
pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    order_head: usize,
    ok: bool,
    model: Vec<bool>,
    num_learnts: usize,
    max_learnts: usize,
    conflict_budget: Option<u64>,
    conflicts: u64,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            order_head: 0,
            ok: true,
            model: Vec::new(),
            num_learnts: 0,
            max_learnts: 2000,
            conflict_budget: None,
            conflicts: 0,
        }
    }

    /// A solver loaded with the clauses of `f`.
    pub fn from_formula(f: &CnfFormula) -> Solver {
        let mut s = Solver::new();
        s.add_formula(f);
        s
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn new_var(&mut self) -> Var {
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        Var::from_index(self.assigns.len() - 1)
    }

    /// Makes sure variables `1..=n` exist.
    pub fn ensure_vars(&mut self, n: usize) {
        while self.num_vars() < n {
            self.new_var();
        }
    }

    /// Limits each subsequent `solve` call to this many conflicts.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    /// False once the clause set is known to be unsatisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    pub fn add_formula(&mut self, f: &CnfFormula) {
        self.ensure_vars(f.num_vars() as usize);
        for c in f.clauses() {
            self.add_clause(c);
        }
    }

    /// Adds an XOR constraint through [`encode_xor`]; returns the auxiliaries.
    pub fn add_xor(&mut self, x: &XorConstraint) -> Vec<Var> {
        if let Some(max) = x.vars().last() {
            self.ensure_vars(max.get() as usize);
        }
        let fresh = Var::from_index(self.num_vars());
        let (clauses, aux) = encode_xor(x, fresh);
        for _ in &aux {
            self.new_var();
        }
        for c in &clauses {
            self.add_clause(c);
        }
        aux
    }

    #[inline]
    fn lit_value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (!l.is_positive()) as u8
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    /// Adds a clause at decision level 0. Returns false if the clause set
    /// became unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        if let Some(max) = lits.iter().map(|l| l.var().get()).max() {
            self.ensure_vars(max as usize);
        }
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort();
        c.dedup();
        let mut out = Vec::with_capacity(c.len());
        for (i, &l) in c.iter().enumerate() {
            if i + 1 < c.len() && c[i + 1] == !l {
                return true; // tautology
            }
            match self.lit_value(l) {
                1 => return true,
                0 => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(out, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let idx = self.clauses.len() as u32;
        self.watches[lits[0].code()].push(Watcher {
            clause: idx,
            blocker: lits[1],
        });
        self.watches[lits[1].code()].push(Watcher {
            clause: idx,
            blocker: lits[0],
        });
        if learnt {
            self.num_learnts += 1;
        }
        self.clauses.push(Clause { lits, learnt });
        idx
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().index();
        self.assigns[v] = l.is_positive() as u8;
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a conflicting clause if one is found.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.lit_value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let ci = w.clause as usize;
                {
                    let lits = &mut self.clauses[ci].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[ci].lits[0];
                let nw = Watcher {
                    clause: w.clause,
                    blocker: first,
                };
                if first != w.blocker && self.lit_value(first) == 1 {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[ci].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[ci].lits[k];
                    if self.lit_value(l) != 0 {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[l.code()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.lit_value(first) == 0 {
                    conflict = Some(w.clause);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, w.clause);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit::from_code(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level() as u32;
        loop {
            let lits = &self.clauses[confl as usize].lits;
            let start = if p.is_some() { 1 } else { 0 };
            for &q in &lits[start..] {
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            let v = pl.var().index();
            self.seen[v] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[v];
        }
        learnt[0] = !p.unwrap();

        // Drop literals implied by the rest of the clause through their reason.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if i == 0 {
                    return true;
                }
                let r = self.reason[l.var().index()];
                if r == NO_REASON {
                    return true;
                }
                self.clauses[r as usize].lits[1..].iter().any(|q| {
                    let qv = q.var().index();
                    !self.seen[qv] && self.level[qv] > 0
                })
            })
            .collect();
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter_map(|(l, k)| k.then_some(l))
            .collect();

        let mut bt = 0usize;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()] as usize;
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level];
        for i in (lim..self.trail.len()).rev() {
            let v = self.trail[i].var().index();
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            if v < self.order_head {
                self.order_head = v;
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while self.order_head < self.assigns.len() {
            if self.assigns[self.order_head] == UNDEF {
                return Some(Var::from_index(self.order_head).neg());
            }
            self.order_head += 1;
        }
        None
    }

    /// Deletes the longer half of the learnt clauses. Called at level 0.
    fn reduce_learnts(&mut self) {
        debug_assert_eq!(self.decision_level(), 0);
        let mut lens: Vec<usize> = self
            .clauses
            .iter()
            .filter(|c| c.learnt)
            .map(|c| c.lits.len())
            .collect();
        lens.sort_unstable();
        let cutoff = lens[lens.len() / 2];
        let mut kept_long = 0usize;
        let budget = lens.len() / 2 - lens.iter().take_while(|&&l| l < cutoff).count();
        let old = std::mem::take(&mut self.clauses);
        self.num_learnts = 0;
        for w in self.watches.iter_mut() {
            w.clear();
        }
        for v in 0..self.reason.len() {
            self.reason[v] = NO_REASON;
        }
        for c in old {
            if c.learnt {
                if c.lits.len() > cutoff {
                    continue;
                }
                if c.lits.len() == cutoff {
                    if kept_long >= budget {
                        continue;
                    }
                    kept_long += 1;
                }
            }
            // Level-0 facts may have satisfied or shortened this clause.
            if c.lits.iter().any(|&l| self.lit_value(l) == 1) {
                continue;
            }
            let lits: Vec<Lit> = c.lits.into_iter().filter(|&l| self.lit_value(l) != 0).collect();
            debug_assert!(lits.len() >= 2);
            self.attach(lits, c.learnt);
        }
        self.max_learnts += self.max_learnts / 10;
    }

    pub fn solve(&mut self) -> SolveStatus {
        self.solve_with(&[])
    }

    /// Solves under assumptions. Assumptions do not persist.
    pub fn solve_with(&mut self, assumptions: &[Lit]) -> SolveStatus {
        self.model.clear();
        if !self.ok {
            return SolveStatus::Unsat;
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().get()).max() {
            self.ensure_vars(max as usize);
        }
        let start_conflicts = self.conflicts;
        let mut luby_index = 0u32;
        let mut restart_at = self.conflicts + luby(luby_index) * RESTART_BASE;

        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveStatus::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let ci = self.attach(learnt, true);
                    self.enqueue(first, ci);
                }
                if let Some(b) = self.conflict_budget {
                    if self.conflicts - start_conflicts >= b {
                        self.cancel_until(0);
                        return SolveStatus::Unknown;
                    }
                }
                if self.conflicts >= restart_at {
                    self.cancel_until(0);
                    luby_index += 1;
                    restart_at = self.conflicts + luby(luby_index) * RESTART_BASE;
                }
                continue;
            }

            let dl = self.decision_level();
            if dl == 0 && self.num_learnts > self.max_learnts {
                self.reduce_learnts();
            }
            if dl < assumptions.len() {
                let a = assumptions[dl];
                match self.lit_value(a) {
                    1 => self.trail_lim.push(self.trail.len()),
                    0 => {
                        self.cancel_until(0);
                        return SolveStatus::Unsat;
                    }
                    _ => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, NO_REASON);
                    }
                }
                continue;
            }

            match self.pick_branch() {
                Some(l) => {
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(l, NO_REASON);
                }
                None => {
                    self.model = self.assigns.iter().map(|&a| a == 1).collect();
                    self.cancel_until(0);
                    return SolveStatus::Sat;
                }
            }
        }
    }

    /// Model of the last successful `solve`, over all solver variables.
    pub fn model(&self) -> Option<&[bool]> {
        if self.model.is_empty() && self.num_vars() > 0 {
            None
        } else {
            Some(&self.model)
        }
    }

    pub fn model_value(&self, v: Var) -> Option<bool> {
        self.model.get(v.index()).copied()
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }
}

/// The Luby restart sequence 1, 1, 2, 1, 1, 2, 4, ...
fn luby(mut i: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != i as u64 {
        size = (size - 1) >> 1;
        seq -= 1;
        i %= size as u32;
    }
    1 << seq
}

/// Decides `f ∧ xors ∧ assumptions`.
pub fn solve(f: &CnfFormula, xors: &[XorConstraint], assumptions: &[Lit]) -> SolveResult {
    let mut s = Solver::from_formula(f);
    for x in xors {
        s.add_xor(x);
    }
    match s.solve_with(assumptions) {
        SolveStatus::Sat => {
            let n = f.num_vars() as usize;
            let w = Witness::new(s.model[..n].to_vec());
            debug_assert!(evaluate(f, &w).unwrap());
            SolveResult {
                status: SolveStatus::Sat,
                witness: Some(w),
            }
        }
        status => SolveResult { status, witness: None },
    }
}

/// Enumerates distinct projections of solutions onto `vars` by adding
/// blocking clauses, stopping after `cutoff` of them.
pub fn enumerate_projections(solver: &mut Solver, vars: &[Var], cutoff: usize, out: &mut SolutionSet) {
    while out.len() < cutoff {
        if solver.solve() != SolveStatus::Sat {
            return;
        }
        let lits: Vec<Lit> = vars.iter().map(|&v| v.lit(solver.model[v.index()])).collect();
        let blocking: Vec<Lit> = lits.iter().map(|&l| !l).collect();
        let fresh = out.insert(ProjectedWitness::from_lits(lits));
        debug_assert!(fresh, "blocking clauses guarantee distinct projections");
        if !solver.add_clause(&blocking) {
            return;
        }
    }
}

/// Like [`enumerate_projections`] but only counts, up to `cutoff`.
pub fn count_projections(solver: &mut Solver, vars: &[Var], cutoff: usize) -> usize {
    let mut found = 0;
    let mut blocking = Vec::with_capacity(vars.len());
    while found < cutoff {
        if solver.solve() != SolveStatus::Sat {
            break;
        }
        found += 1;
        blocking.clear();
        blocking.extend(vars.iter().map(|&v| v.lit(!solver.model[v.index()])));
        if !solver.add_clause(&blocking) {
            break;
        }
    }
    found
}

/// Returns `min(cutoff, |R(f ∧ xors)↓vars|)` distinct projections. A result
/// smaller than `cutoff` is the exact projected solution set.
pub fn bounded_enumerate(f: &CnfFormula, xors: &[XorConstraint], vars: &[Var], cutoff: usize) -> SolutionSet {
    let mut s = Solver::from_formula(f);
    for x in xors {
        s.add_xor(x);
    }
    let mut out = SolutionSet::new(Some(vars.to_vec()));
    enumerate_projections(&mut s, vars, cutoff, &mut out);
    out
}

/// Extends a projection to a full model of `f`, if one exists.
pub fn extend_witness(f: &CnfFormula, partial: &ProjectedWitness) -> Option<Witness> {
    solve(f, &[], partial.lits()).witness
}
