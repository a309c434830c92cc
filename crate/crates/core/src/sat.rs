//! CDCL engine with first-UIP learning, proof logging and a lazy theory
//! interface.
//!
//! Theory implications carry opaque [`ReasonHandle`]s. Their clauses are
//! only requested from the theory when conflict analysis needs them (or
//! immediately at decision level 0, so that level-0 facts stay derivable by
//! unit propagation). Each materialized clause is added to the database and,
//! when logging, recorded as a theory-lemma proof record.

use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::BinaryHeap;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Lit, Propagator, Var};
use crate::drat::{ProofCertificate, ProofRecord};
use crate::kernel::TheoryLemma;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReasonHandle {
    pub generation: u32,
    pub index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryResponse {
    Consistent,
    Implied(Vec<(Lit, ReasonHandle)>),
    Conflict(ReasonHandle),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error("stale reason handle {0:?}")]
    StaleHandle(ReasonHandle),
    #[error("{0}")]
    Other(String),
}

/// Read-only view of the solver state handed to the theory.
pub struct SolverView<'a> {
    values: &'a [i8],
    levels: &'a [u32],
    trail: &'a [Lit],
    decision_level: u32,
}

impl SolverView<'_> {
    pub fn value(&self, var: Var) -> Option<bool> {
        match self.values.get(var as usize).copied().unwrap_or(0) {
            0 => None,
            v => Some(v > 0),
        }
    }

    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.value(lit.var()).map(|b| b == lit.is_positive())
    }

    pub fn level(&self, var: Var) -> u32 {
        self.levels[var as usize]
    }

    pub fn trail(&self) -> &[Lit] {
        self.trail
    }

    pub fn decision_level(&self) -> u32 {
        self.decision_level
    }
}

pub trait TheoryHooks {
    /// Highest variable the theory may mention.
    fn num_vars(&self) -> u32 {
        0
    }

    /// Called at each unit-propagation fixpoint.
    fn propagate(&mut self, view: &SolverView<'_>) -> TheoryResponse;

    /// Resolves a handle produced during the current solve.
    fn explain(&mut self, handle: ReasonHandle) -> Result<TheoryLemma, TheoryError>;

    /// Called on a total assignment before answering SAT.
    fn final_check(&mut self, view: &SolverView<'_>) -> TheoryResponse {
        self.propagate(view)
    }

    /// Called once before search starts.
    fn begin(&mut self) {}
}

/// The empty theory: pure propositional solving.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoTheory;

impl TheoryHooks for NoTheory {
    fn propagate(&mut self, _view: &SolverView<'_>) -> TheoryResponse {
        TheoryResponse::Consistent
    }

    fn explain(&mut self, handle: ReasonHandle) -> Result<TheoryLemma, TheoryError> {
        Err(TheoryError::StaleHandle(handle))
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub log_proof: bool,
    /// Give up with `Unknown` after this many conflicts.
    pub conflict_budget: Option<u64>,
    /// `0` keeps all initial activities at zero (pure lowest-index order).
    pub seed: u64,
    /// RUP-check every learned clause against the database (slow).
    pub verify_learned: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            log_proof: true,
            conflict_budget: None,
            seed: 0,
            verify_learned: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    /// `model[var]` for `var ≥ 1`; index 0 is unused.
    Sat(Vec<bool>),
    Unsat(Option<ProofCertificate>),
    Unknown,
}

impl SolveOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveOutcome::Unsat(_))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("theory failure: {0}")]
    Theory(#[from] TheoryError),
    #[error("theory explanation {0:?} does not justify its literal")]
    BadExplanation(Clause),
    #[error("learned clause {0:?} is not RUP")]
    LearnedNotRup(Clause),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learned: u64,
    pub theory_lemmas: u64,
    /// Hash of the decision sequence; equal hashes mean equal search.
    pub trace_hash: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reason {
    Decision,
    Clause(u32),
    Theory(ReasonHandle),
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    activity: f64,
    var: Var,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.activity
            .total_cmp(&other.activity)
            .then_with(|| other.var.cmp(&self.var))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Luby sequence 1,1,2,1,1,2,4,... (0-based index).
pub fn luby(mut x: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

const RESTART_UNIT: u64 = 64;
const VAR_DECAY: f64 = 0.95;

pub struct Solver {
    num_vars: u32,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    values: Vec<i8>,
    levels: Vec<u32>,
    reasons: Vec<Reason>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    heap: BinaryHeap<HeapEntry>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    proof: Option<ProofCertificate>,
    config: SolverConfig,
    stats: SolverStats,
    hasher: DefaultHasher,
    /// Set when the input already contains an empty or contradictory unit.
    trivially_unsat: bool,
}

impl Solver {
    pub fn new(f: &CnfFormula, config: SolverConfig) -> Solver {
        Solver::with_vars(f, f.num_vars(), config)
    }

    pub fn with_vars(f: &CnfFormula, num_vars: u32, config: SolverConfig) -> Solver {
        let n = num_vars.max(f.num_vars()) as usize;
        let mut s = Solver {
            num_vars: n as u32,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            values: vec![0; n + 1],
            levels: vec![0; n + 1],
            reasons: vec![Reason::Decision; n + 1],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n + 1],
            var_inc: 1.0,
            heap: BinaryHeap::new(),
            phase: vec![false; n + 1],
            seen: vec![false; n + 1],
            proof: config.log_proof.then(ProofCertificate::new),
            stats: SolverStats::default(),
            hasher: DefaultHasher::new(),
            trivially_unsat: false,
            config,
        };
        if s.config.seed != 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(s.config.seed);
            for a in s.activity.iter_mut().skip(1) {
                *a = rng.gen::<f64>() * 1e-5;
            }
        }
        for v in 1..=s.num_vars {
            s.heap.push(HeapEntry {
                activity: s.activity[v as usize],
                var: v,
            });
        }
        for c in f.clauses() {
            if c.is_tautology() {
                continue;
            }
            s.add_input_clause(c.lits());
        }
        s
    }

    fn add_input_clause(&mut self, lits: &[Lit]) {
        if self.trivially_unsat {
            return;
        }
        match lits.len() {
            0 => self.trivially_unsat = true,
            1 => {
                let id = self.push_clause(lits.to_vec(), false);
                match self.lit_value(lits[0]) {
                    Some(true) => {}
                    Some(false) => self.trivially_unsat = true,
                    None => self.assign(lits[0], Reason::Clause(id)),
                }
            }
            _ => {
                self.push_clause(lits.to_vec(), true);
            }
        }
    }

    fn push_clause(&mut self, lits: Vec<Lit>, watch: bool) -> u32 {
        let id = self.clauses.len() as u32;
        if watch && lits.len() >= 2 {
            self.watches[lits[0].index()].push(id);
            self.watches[lits[1].index()].push(id);
        }
        self.clauses.push(lits);
        id
    }

    pub fn stats(&self) -> &SolverStats {
        &self.stats
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    fn lit_value(&self, lit: Lit) -> Option<bool> {
        match self.values[lit.var() as usize] {
            0 => None,
            v => Some((v > 0) == lit.is_positive()),
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn assign(&mut self, lit: Lit, reason: Reason) {
        let v = lit.var() as usize;
        debug_assert_eq!(self.values[v], 0);
        self.values[v] = if lit.is_positive() { 1 } else { -1 };
        self.levels[v] = self.decision_level();
        self.reasons[v] = reason;
        self.trail.push(lit);
    }

    fn view(&self) -> SolverView<'_> {
        SolverView {
            values: &self.values,
            levels: &self.levels,
            trail: &self.trail,
            decision_level: self.decision_level(),
        }
    }

    fn backtrack(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.phase[v] = l.is_positive();
            self.values[v] = 0;
            self.reasons[v] = Reason::Decision;
            self.heap.push(HeapEntry {
                activity: self.activity[v],
                var: v as Var,
            });
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = self.qhead.min(lim);
    }

    /// Boolean constraint propagation; returns a falsified clause id.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let id = ws[i];
                i += 1;
                let clause = &mut self.clauses[id as usize];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                let first_val = val(&self.values, first);
                if first_val == 1 {
                    ws[j] = id;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    if val(&self.values, clause[k]) != -1 {
                        clause.swap(1, k);
                        self.watches[clause[1].index()].push(id);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = id;
                j += 1;
                if first_val == -1 {
                    conflict = Some(id);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                    break;
                }
                self.assign(first, Reason::Clause(id));
            }
            ws.truncate(j);
            self.watches[false_lit.index()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    /// Adds a clause derived mid-search, ordering literals so that the
    /// watches respect the current assignment: true literals first, then
    /// unassigned, then false ones by decreasing level.
    fn add_derived_clause(&mut self, lits: &[Lit]) -> u32 {
        let mut lits = lits.to_vec();
        let rank = |l: Lit| -> (u8, i64) {
            match self.lit_value(l) {
                Some(true) => (0, self.levels[l.var() as usize] as i64),
                None => (1, 0),
                Some(false) => (2, -(self.levels[l.var() as usize] as i64)),
            }
        };
        lits.sort_by_key(|&l| rank(l));
        self.push_clause(lits, true)
    }

    fn log(&mut self, record: ProofRecord) {
        if let Some(p) = self.proof.as_mut() {
            p.push(record);
        }
    }

    fn materialize(
        &mut self,
        theory: &mut dyn TheoryHooks,
        handle: ReasonHandle,
        implied: Option<Lit>,
    ) -> Result<u32, SolveError> {
        let lemma = theory.explain(handle)?;
        let ok = lemma.clause.lits().iter().all(|&l| {
            if Some(l) == implied {
                true
            } else {
                self.lit_value(l) == Some(false)
            }
        }) && implied.is_none_or(|l| lemma.clause.contains(l));
        if !ok {
            return Err(SolveError::BadExplanation(lemma.clause));
        }
        self.stats.theory_lemmas += 1;
        let id = self.add_derived_clause(lemma.clause.lits());
        self.log(ProofRecord::theory_lemma(
            lemma.clause,
            lemma.predicate_var,
            lemma.witness,
        ));
        Ok(id)
    }

    fn reason_clause(
        &mut self,
        theory: &mut dyn TheoryHooks,
        lit: Lit,
    ) -> Result<u32, SolveError> {
        let v = lit.var() as usize;
        match self.reasons[v] {
            Reason::Clause(id) => Ok(id),
            Reason::Theory(h) => {
                let id = self.materialize(theory, h, Some(lit))?;
                self.reasons[v] = Reason::Clause(id);
                Ok(id)
            }
            Reason::Decision => unreachable!("decisions have no reason clause"),
        }
    }

    fn bump(&mut self, v: Var) {
        let a = &mut self.activity[v as usize];
        *a += self.var_inc;
        if *a > 1e100 {
            for x in self.activity.iter_mut() {
                *x *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.heap = (1..=self.num_vars)
                .filter(|&u| self.values[u as usize] == 0)
                .map(|u| HeapEntry {
                    activity: self.activity[u as usize],
                    var: u,
                })
                .collect();
        } else if self.values[v as usize] == 0 {
            self.heap.push(HeapEntry {
                activity: *a,
                var: v,
            });
        }
    }

    /// First-UIP analysis of a clause falsified at the current level.
    /// Returns the learned clause (asserting literal first) and the
    /// backjump level.
    fn analyze(
        &mut self,
        theory: &mut dyn TheoryHooks,
        conflict: u32,
    ) -> Result<(Vec<Lit>, u32), SolveError> {
        let level = self.decision_level();
        let mut learnt: Vec<Lit> = vec![Lit::pos(1)];
        let mut counter = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut clause_id = conflict;
        loop {
            let lits = self.clauses[clause_id as usize].clone();
            for q in lits {
                if Some(q) == p {
                    continue;
                }
                let v = q.var() as usize;
                if !self.seen[v] && self.levels[v] > 0 {
                    self.seen[v] = true;
                    self.bump(v as Var);
                    if self.levels[v] == level {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var() as usize] = false;
            counter -= 1;
            if counter == 0 {
                break;
            }
            clause_id = self.reason_clause(theory, lit)?;
        }
        learnt[0] = !p.expect("conflict has a literal at the current level");
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.levels[learnt[i].var() as usize] > self.levels[learnt[best].var() as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            bt = self.levels[learnt[1].var() as usize];
        }
        self.var_inc /= VAR_DECAY;
        Ok((learnt, bt))
    }

    fn check_rup(&self, clause: &Clause) -> bool {
        let f = CnfFormula::from_clauses(
            self.num_vars,
            self.clauses.iter().map(|c| Clause::new(c.iter().copied())),
        );
        Propagator::from_formula(&f).rup(clause)
    }

    /// Handles a falsified clause. Returns `true` when the formula is
    /// refuted.
    fn resolve_conflict(
        &mut self,
        theory: &mut dyn TheoryHooks,
        conflict: u32,
    ) -> Result<bool, SolveError> {
        self.stats.conflicts += 1;
        let max_level = self.clauses[conflict as usize]
            .iter()
            .map(|l| self.levels[l.var() as usize])
            .max()
            .unwrap_or(0);
        if max_level == 0 {
            self.log(ProofRecord::learned(Clause::empty()));
            return Ok(true);
        }
        self.backtrack(max_level);
        let (learnt, bt) = self.analyze(theory, conflict)?;
        let clause = Clause::new(learnt.iter().copied());
        if self.config.verify_learned && !self.check_rup(&clause) {
            return Err(SolveError::LearnedNotRup(clause));
        }
        self.stats.learned += 1;
        self.log(ProofRecord::learned(clause));
        self.backtrack(bt);
        let id = self.push_clause(learnt.clone(), true);
        self.assign(learnt[0], Reason::Clause(id));
        Ok(false)
    }

    fn pick_branch(&mut self) -> Option<Var> {
        while let Some(e) = self.heap.pop() {
            let v = e.var as usize;
            if self.values[v] == 0 && e.activity == self.activity[v] {
                return Some(e.var);
            }
        }
        (1..=self.num_vars).find(|&v| self.values[v as usize] == 0)
    }

    /// Applies a theory response. Returns a conflicting clause id, if any.
    fn apply_theory(
        &mut self,
        theory: &mut dyn TheoryHooks,
        response: TheoryResponse,
    ) -> Result<(Option<u32>, bool), SolveError> {
        match response {
            TheoryResponse::Consistent => Ok((None, false)),
            TheoryResponse::Conflict(h) => Ok((Some(self.materialize(theory, h, None)?), false)),
            TheoryResponse::Implied(list) => {
                let mut progressed = false;
                for (lit, h) in list {
                    match self.lit_value(lit) {
                        Some(true) => {}
                        Some(false) => {
                            return Ok((Some(self.materialize(theory, h, None)?), progressed));
                        }
                        None => {
                            progressed = true;
                            if self.decision_level() == 0 {
                                let id = self.materialize(theory, h, Some(lit))?;
                                self.assign(lit, Reason::Clause(id));
                            } else {
                                self.assign(lit, Reason::Theory(h));
                            }
                        }
                    }
                }
                Ok((None, progressed))
            }
        }
    }

    pub fn solve(&mut self, theory: &mut dyn TheoryHooks) -> Result<SolveOutcome, SolveError> {
        theory.begin();
        if self.trivially_unsat {
            self.log(ProofRecord::learned(Clause::empty()));
            return Ok(SolveOutcome::Unsat(self.proof.take()));
        }
        let mut restart_idx = 0u64;
        let mut conflicts_since_restart = 0u64;
        loop {
            let mut conflict = self.propagate();
            if conflict.is_none() {
                let response = theory.propagate(&self.view());
                let (c, progressed) = self.apply_theory(theory, response)?;
                conflict = c;
                if conflict.is_none() && progressed {
                    continue;
                }
            }
            if let Some(c) = conflict {
                conflicts_since_restart += 1;
                if self.resolve_conflict(theory, c)? {
                    return Ok(SolveOutcome::Unsat(self.proof.take()));
                }
                if let Some(budget) = self.config.conflict_budget {
                    if self.stats.conflicts >= budget {
                        return Ok(SolveOutcome::Unknown);
                    }
                }
                if conflicts_since_restart >= RESTART_UNIT * luby(restart_idx) {
                    restart_idx += 1;
                    conflicts_since_restart = 0;
                    self.stats.restarts += 1;
                    self.backtrack(0);
                }
                continue;
            }
            match self.pick_branch() {
                Some(v) => {
                    self.stats.decisions += 1;
                    let lit = Lit::new(v, self.phase[v as usize]);
                    lit.to_dimacs().hash(&mut self.hasher);
                    self.stats.trace_hash = self.hasher.finish();
                    self.trail_lim.push(self.trail.len());
                    self.assign(lit, Reason::Decision);
                }
                None => {
                    let response = theory.final_check(&self.view());
                    let (c, progressed) = self.apply_theory(theory, response)?;
                    if let Some(c) = c {
                        conflicts_since_restart += 1;
                        if self.resolve_conflict(theory, c)? {
                            return Ok(SolveOutcome::Unsat(self.proof.take()));
                        }
                        continue;
                    }
                    if progressed {
                        continue;
                    }
                    let model = self.values.iter().map(|&v| v > 0).collect();
                    return Ok(SolveOutcome::Sat(model));
                }
            }
        }
    }
}

fn val(values: &[i8], lit: Lit) -> i8 {
    let v = values[lit.var() as usize];
    if lit.is_positive() {
        v
    } else {
        -v
    }
}

/// Solves `f` modulo `theory`.
pub fn solve(
    f: &CnfFormula,
    theory: &mut dyn TheoryHooks,
    config: SolverConfig,
) -> Result<(SolveOutcome, SolverStats), SolveError> {
    let mut solver = Solver::with_vars(f, theory.num_vars(), config);
    let outcome = solver.solve(theory)?;
    Ok((outcome, solver.stats().clone()))
}

/// Pure SAT convenience wrapper.
pub fn solve_cnf(f: &CnfFormula, config: SolverConfig) -> SolveOutcome {
    solve(f, &mut NoTheory, config)
        .expect("pure SAT solving cannot fail")
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drat::check_drat;

    fn f(cs: &[&[i32]]) -> CnfFormula {
        CnfFormula::from_dimacs(cs)
    }

    fn strict() -> SolverConfig {
        SolverConfig {
            verify_learned: true,
            ..Default::default()
        }
    }

    #[test]
    fn luby_prefix() {
        let got: Vec<u64> = (0..15).map(luby).collect();
        assert_eq!(got, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn contradictory_units() {
        let cnf = f(&[&[1], &[-1]]);
        match solve_cnf(&cnf, strict()) {
            SolveOutcome::Unsat(Some(p)) => {
                assert_eq!(p.records, vec![ProofRecord::learned(Clause::empty())]);
            }
            o => panic!("{:?}", o),
        }
    }

    #[test]
    fn simple_sat() {
        let cnf = f(&[&[1, 2]]);
        match solve_cnf(&cnf, strict()) {
            SolveOutcome::Sat(m) => assert!(m[1] || m[2]),
            o => panic!("{:?}", o),
        }
    }

    #[test]
    fn single_decision_learns_unit() {
        // Deciding x1=false conflicts; with default phase false the first
        // decision is ¬1. Clauses force 1.
        let cnf = f(&[&[1, 2], &[1, -2]]);
        let mut s = Solver::new(&cnf, strict());
        let out = s.solve(&mut NoTheory).unwrap();
        assert!(out.is_sat());
        assert_eq!(s.stats().learned, 1);
    }

    #[test]
    fn first_uip_clause_has_one_literal_at_conflict_level() {
        // Two decisions; the second triggers a conflict through an
        // implication chain with a unique implication point at 4.
        // d1: ¬1 → 5 (via 1∨5). d2: ¬2 → 3 (via 2∨3), 3 → 4, 4∧5 → 6, 4∧5 → ¬6.
        let cnf = f(&[
            &[1, 5],
            &[2, 3],
            &[-3, 4],
            &[-4, -5, 6],
            &[-4, -5, -6],
            &[1, 2, 7],
        ]);
        let mut s = Solver::new(&cnf, strict());
        s.trail_lim.push(s.trail.len());
        s.assign(Lit::neg(1), Reason::Decision);
        assert_eq!(s.propagate(), None);
        s.trail_lim.push(s.trail.len());
        s.assign(Lit::neg(2), Reason::Decision);
        let conflict = s.propagate().expect("conflict");
        let (learnt, bt) = s.analyze(&mut NoTheory, conflict).unwrap();
        // Resolution by hand: (¬4 ∨ ¬5 ∨ ¬6) with (¬4 ∨ ¬5 ∨ 6) gives (¬4 ∨ ¬5);
        // 4 is the first UIP.
        assert_eq!(learnt[0], Lit::neg(4));
        assert_eq!(Clause::new(learnt.iter().copied()).key(), Clause::from_dimacs(&[-4, -5]).key());
        assert_eq!(bt, 1);
        let at_level: Vec<_> = learnt
            .iter()
            .filter(|l| s.levels[l.var() as usize] == 2)
            .collect();
        assert_eq!(at_level.len(), 1);
    }

    #[test]
    fn pigeonhole_refutation_verifies() {
        // 4 pigeons, 3 holes; var p*3+h+1.
        let var = |p: i32, h: i32| p * 3 + h + 1;
        let mut cs: Vec<Vec<i32>> = Vec::new();
        for p in 0..4 {
            cs.push((0..3).map(|h| var(p, h)).collect());
        }
        for h in 0..3 {
            for p in 0..4 {
                for q in p + 1..4 {
                    cs.push(vec![-var(p, h), -var(q, h)]);
                }
            }
        }
        let refs: Vec<&[i32]> = cs.iter().map(|c| c.as_slice()).collect();
        let cnf = f(&refs);
        match solve_cnf(&cnf, strict()) {
            SolveOutcome::Unsat(Some(p)) => assert!(check_drat(&cnf, &p).is_verified()),
            o => panic!("{:?}", o),
        }
    }

    #[test]
    fn logging_does_not_change_search() {
        let cnf = f(&[&[1, 2, 3], &[-1, -2], &[-2, -3], &[-1, -3], &[1, 2], &[2, 3, -1]]);
        let run = |log| {
            let mut s = Solver::new(
                &cnf,
                SolverConfig {
                    log_proof: log,
                    ..Default::default()
                },
            );
            let out = s.solve(&mut NoTheory).unwrap();
            (out.is_sat(), s.stats().clone())
        };
        assert_eq!(run(true), run(false));
    }

    #[test]
    fn conflict_budget_yields_unknown() {
        let var = |p: i32, h: i32| p * 4 + h + 1;
        let mut cs: Vec<Vec<i32>> = Vec::new();
        for p in 0..5 {
            cs.push((0..4).map(|h| var(p, h)).collect());
        }
        for h in 0..4 {
            for p in 0..5 {
                for q in p + 1..5 {
                    cs.push(vec![-var(p, h), -var(q, h)]);
                }
            }
        }
        let refs: Vec<&[i32]> = cs.iter().map(|c| c.as_slice()).collect();
        let out = solve_cnf(
            &f(&refs),
            SolverConfig {
                conflict_budget: Some(2),
                ..Default::default()
            },
        );
        assert_eq!(out, SolveOutcome::Unknown);
    }
}
