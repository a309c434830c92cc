//! Literals, clauses, formulas, assignments and unit propagation.
//!
//! Literals use the DIMACS convention: a nonzero signed integer whose
//! absolute value is the variable and whose sign is the polarity. Variable
//! `0` is reserved.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::ops::{Not, Range};

use thiserror::Error;

/// A propositional variable, numbered from 1.
pub type Var = u32;

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        assert!(var > 0 && var <= i32::MAX as u32, "variable out of range");
        if positive {
            Lit(var as i32)
        } else {
            Lit(-(var as i32))
        }
    }

    pub fn pos(var: Var) -> Lit {
        Lit::new(var, true)
    }

    pub fn neg(var: Var) -> Lit {
        Lit::new(var, false)
    }

    /// Returns `None` for `0`.
    pub fn from_dimacs(value: i32) -> Option<Lit> {
        if value == 0 || value == i32::MIN {
            None
        } else {
            Some(Lit(value))
        }
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn var(self) -> Var {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negate(self) -> Lit {
        Lit(-self.0)
    }

    /// Dense index: `2 * (var - 1) + (negative as usize)`.
    pub fn index(self) -> usize {
        ((self.var() as usize - 1) << 1) | (self.0 < 0) as usize
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        self.negate()
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A disjunction of literals.
///
/// Construction removes duplicate literals (keeping first occurrences in
/// order) and flags clauses containing a complementary pair.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Clause {
    lits: Vec<Lit>,
    tautology: bool,
}

impl Clause {
    pub fn new<I: IntoIterator<Item = Lit>>(lits: I) -> Clause {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut tautology = false;
        for lit in lits {
            if seen.insert(lit) {
                if seen.contains(&!lit) {
                    tautology = true;
                }
                out.push(lit);
            }
        }
        Clause {
            lits: out,
            tautology,
        }
    }

    pub fn empty() -> Clause {
        Clause::default()
    }

    /// Builds a clause from DIMACS integers; panics on `0`.
    pub fn from_dimacs(values: &[i32]) -> Clause {
        Clause::new(
            values
                .iter()
                .map(|&v| Lit::from_dimacs(v).expect("0 is not a literal")),
        )
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn is_tautology(&self) -> bool {
        self.tautology
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.contains(&lit)
    }

    pub fn positive_count(&self) -> usize {
        self.lits.iter().filter(|l| l.is_positive()).count()
    }

    pub fn negative_count(&self) -> usize {
        self.lits.len() - self.positive_count()
    }

    pub fn max_var(&self) -> Var {
        self.lits.iter().map(|l| l.var()).max().unwrap_or(0)
    }

    /// Sorted literal list; two clauses with equal keys are the same set.
    pub fn key(&self) -> Vec<Lit> {
        let mut k = self.lits.clone();
        k.sort();
        k
    }

    pub fn to_dimacs(&self) -> Vec<i32> {
        self.lits.iter().map(|l| l.to_dimacs()).collect()
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", l)?;
        }
        write!(f, ")")
    }
}

impl FromIterator<Lit> for Clause {
    fn from_iter<I: IntoIterator<Item = Lit>>(iter: I) -> Self {
        Clause::new(iter)
    }
}

/// A growable clause database with a deletion set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: u32,
    clauses: Vec<Clause>,
    deleted: BTreeSet<usize>,
}

impl CnfFormula {
    pub fn new(num_vars: u32) -> CnfFormula {
        CnfFormula {
            num_vars,
            ..Default::default()
        }
    }

    pub fn from_clauses<I: IntoIterator<Item = Clause>>(num_vars: u32, clauses: I) -> CnfFormula {
        let mut f = CnfFormula::new(num_vars);
        for c in clauses {
            f.add_clause(c);
        }
        f
    }

    /// Convenience constructor from DIMACS integer lists.
    pub fn from_dimacs(clauses: &[&[i32]]) -> CnfFormula {
        CnfFormula::from_clauses(0, clauses.iter().map(|c| Clause::from_dimacs(c)))
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn set_num_vars(&mut self, n: u32) {
        self.num_vars = self.num_vars.max(n);
    }

    /// Adds a clause, growing the variable count if needed. Returns its index.
    pub fn add_clause(&mut self, clause: Clause) -> usize {
        self.num_vars = self.num_vars.max(clause.max_var());
        self.clauses.push(clause);
        self.clauses.len() - 1
    }

    pub fn extend<I: IntoIterator<Item = Clause>>(&mut self, clauses: I) {
        for c in clauses {
            self.add_clause(c);
        }
    }

    pub fn delete(&mut self, index: usize) -> bool {
        index < self.clauses.len() && self.deleted.insert(index)
    }

    pub fn is_deleted(&self, index: usize) -> bool {
        self.deleted.contains(&index)
    }

    /// All clauses, including deleted ones, by index.
    pub fn all_clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Live clauses with their indices.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &Clause)> + '_ {
        self.clauses
            .iter()
            .enumerate()
            .filter(move |(i, _)| !self.deleted.contains(i))
    }

    /// Live clauses.
    pub fn clauses(&self) -> impl Iterator<Item = &Clause> + '_ {
        self.iter().map(|(_, c)| c)
    }

    pub fn len(&self) -> usize {
        self.clauses.len() - self.deleted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn has_empty_clause(&self) -> bool {
        self.clauses().any(|c| c.is_empty())
    }

    /// Evaluates the formula under a total assignment `values[var]`.
    pub fn eval(&self, values: &[bool]) -> bool {
        self.clauses().all(|c| {
            c.is_tautology()
                || c
                    .lits()
                    .iter()
                    .any(|l| values[l.var() as usize] == l.is_positive())
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignError {
    #[error("literal {0} conflicts with the current assignment")]
    Conflict(Lit),
}

/// A partial assignment kept both as a value map and an ordered trail.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    values: Vec<Option<bool>>,
    trail: Vec<Lit>,
}

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn from_lits<I: IntoIterator<Item = Lit>>(lits: I) -> Result<Assignment, AssignError> {
        let mut a = Assignment::new();
        for l in lits {
            a.assign(l)?;
        }
        Ok(a)
    }

    /// Assigns `lit`; re-asserting an existing literal is a no-op.
    pub fn assign(&mut self, lit: Lit) -> Result<(), AssignError> {
        let v = lit.var() as usize;
        if self.values.len() <= v {
            self.values.resize(v + 1, None);
        }
        match self.values[v] {
            Some(b) if b == lit.is_positive() => Ok(()),
            Some(_) => Err(AssignError::Conflict(lit)),
            None => {
                self.values[v] = Some(lit.is_positive());
                self.trail.push(lit);
                Ok(())
            }
        }
    }

    pub fn var_value(&self, var: Var) -> Option<bool> {
        self.values.get(var as usize).copied().flatten()
    }

    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.var_value(lit.var()).map(|b| b == lit.is_positive())
    }

    pub fn is_true(&self, lit: Lit) -> bool {
        self.lit_value(lit) == Some(true)
    }

    pub fn is_false(&self, lit: Lit) -> bool {
        self.lit_value(lit) == Some(false)
    }

    pub fn trail(&self) -> &[Lit] {
        &self.trail
    }

    pub fn len(&self) -> usize {
        self.trail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trail.is_empty()
    }

    /// The trail as a set, for order-insensitive comparisons.
    pub fn lit_set(&self) -> BTreeSet<Lit> {
        self.trail.iter().copied().collect()
    }
}

/// Removes satisfied clauses and falsified literals.
///
/// An empty clause in the result marks the formula falsified; an empty
/// result is `⊤`. Tautological clauses count as satisfied.
pub fn reduce(f: &CnfFormula, m: &Assignment) -> CnfFormula {
    let mut out = CnfFormula::new(f.num_vars());
    for (_, reduced) in reduce_indexed(f, m) {
        out.add_clause(reduced);
    }
    out
}

/// Like [`reduce`], but keeps the index of the source clause.
pub fn reduce_indexed(f: &CnfFormula, m: &Assignment) -> Vec<(usize, Clause)> {
    f.iter()
        .filter(|(_, c)| !c.is_tautology() && !c.lits().iter().any(|&l| m.is_true(l)))
        .map(|(i, c)| {
            (
                i,
                Clause::new(c.lits().iter().copied().filter(|&l| !m.is_false(l))),
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropagationResult {
    Fixpoint(Assignment),
    /// `clause` indexes into the propagated formula.
    Conflict { clause: usize, assignment: Assignment },
}

impl PropagationResult {
    pub fn is_conflict(&self) -> bool {
        matches!(self, PropagationResult::Conflict { .. })
    }
}

/// Unit propagation to a fixpoint, starting from `m`.
///
/// The queue is FIFO: literals of `m` in trail order, then unit clauses in
/// index order, then implied literals as they are found.
pub fn unit_propagate(f: &CnfFormula, m: &Assignment) -> PropagationResult {
    let mut prop = Propagator::from_formula(f);
    let conflict = prop.propagate(m.trail());
    let mut assignment = Assignment::new();
    for &l in prop.trail() {
        assignment.assign(l).expect("propagator trail is consistent");
    }
    match conflict {
        None => PropagationResult::Fixpoint(assignment),
        Some(Conflict::Clause(id)) => PropagationResult::Conflict {
            clause: id as usize,
            assignment,
        },
        Some(Conflict::Assumption(_)) => unreachable!("assignment is non-conflicting"),
    }
}

/// Reverse unit propagation: does `f ∧ ¬c` propagate to a conflict?
pub fn rup_check(f: &CnfFormula, c: &Clause) -> bool {
    Propagator::from_formula(f).rup(c)
}

pub fn is_horn(f: &CnfFormula) -> bool {
    f.clauses().all(|c| c.positive_count() <= 1)
}

pub fn is_dual_horn(f: &CnfFormula) -> bool {
    f.clauses().all(|c| c.negative_count() <= 1)
}

/// Checks Horn shape after flipping the polarity of the variables in `flip`.
pub fn is_horn_under(f: &CnfFormula, flip: &HashSet<Var>) -> bool {
    f.clauses().all(|c| {
        c.lits()
            .iter()
            .filter(|l| l.is_positive() != flip.contains(&l.var()))
            .count()
            <= 1
    })
}

/// Checks dual-Horn shape after flipping the polarity of the variables in `flip`.
pub fn is_dual_horn_under(f: &CnfFormula, flip: &HashSet<Var>) -> bool {
    f.clauses().all(|c| {
        c.lits()
            .iter()
            .filter(|l| l.is_positive() == flip.contains(&l.var()))
            .count()
            <= 1
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("antecedent mentions the head variable {0}")]
    HeadInAntecedent(Var),
}

/// Linear-size CNF for `(∧ antecedent) ⇒ head`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Implication {
    pub clauses: Vec<Clause>,
    /// Selector variables, one per non-tautological antecedent clause.
    pub fresh: Range<Var>,
}

/// Encodes `(∧ C_i) ⇒ head` with one selector `l_i` per clause:
/// `¬c_ij ∨ ¬l_i` for every literal of `C_i`, plus `l_1 ∨ … ∨ l_n ∨ head`.
/// Selectors are numbered from `fresh_var_base + 1`. Tautological clauses
/// are skipped.
pub fn encode_implication<'a, I>(
    antecedent: I,
    head: Lit,
    fresh_var_base: Var,
) -> Result<Implication, EncodeError>
where
    I: IntoIterator<Item = &'a Clause>,
{
    let mut clauses = Vec::new();
    let mut selectors = Vec::new();
    let mut next = fresh_var_base;
    for c in antecedent {
        if c.lits().iter().any(|l| l.var() == head.var()) {
            return Err(EncodeError::HeadInAntecedent(head.var()));
        }
        if c.is_tautology() {
            continue;
        }
        next += 1;
        let sel = Lit::pos(next);
        for &l in c.lits() {
            clauses.push(Clause::new([!l, !sel]));
        }
        selectors.push(sel);
    }
    selectors.push(head);
    clauses.push(Clause::new(selectors));
    Ok(Implication {
        clauses,
        fresh: fresh_var_base + 1..next + 1,
    })
}

/// Hands out fresh variables in increasing order.
#[derive(Clone, Debug)]
pub struct VarAllocator {
    last: Var,
}

impl VarAllocator {
    /// The first allocated variable is `base + 1`.
    pub fn new(base: Var) -> VarAllocator {
        VarAllocator { last: base }
    }

    pub fn fresh(&mut self) -> Var {
        self.last += 1;
        self.last
    }

    pub fn fresh_vec(&mut self, n: usize) -> Vec<Var> {
        (0..n).map(|_| self.fresh()).collect()
    }

    /// Highest variable handed out so far (or the base).
    pub fn last(&self) -> Var {
        self.last
    }
}

const NO_REASON: u32 = u32::MAX;

/// Why propagation stopped early.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conflict {
    /// The clause with this id is falsified.
    Clause(u32),
    /// An assumption was already false.
    Assumption(Lit),
}

/// A reusable two-watched-literal propagation engine over a clause store.
///
/// Clause ids are stable; deleted clauses stay in the store but are
/// ignored. Each [`Propagator::propagate`] call starts from an empty
/// assignment and leaves the result in place until [`Propagator::reset`].
/// RUP checks instead keep the root (assumption-free) closure between calls
/// and extend it as clauses are added.
#[derive(Clone, Debug, Default)]
pub struct Propagator {
    clauses: Vec<Vec<Lit>>,
    active: Vec<bool>,
    tautology: Vec<bool>,
    watches: Vec<Vec<u32>>,
    units: Vec<u32>,
    empties: Vec<u32>,
    values: Vec<i8>,
    reasons: Vec<u32>,
    trail: Vec<Lit>,
    root: Option<Root>,
    pending_unit: Option<Lit>,
}

#[derive(Clone, Copy, Debug)]
struct Root {
    len: usize,
    conflict: Option<Conflict>,
}

impl Propagator {
    pub fn new() -> Propagator {
        Propagator::default()
    }

    /// Clause ids equal formula indices; deleted clauses are inactive.
    pub fn from_formula(f: &CnfFormula) -> Propagator {
        let mut p = Propagator::new();
        p.ensure_var(f.num_vars());
        for (i, c) in f.all_clauses().iter().enumerate() {
            let id = p.add_clause(c);
            if f.is_deleted(i) {
                p.delete(id);
            }
        }
        p
    }

    fn ensure_var(&mut self, var: Var) {
        let need = var as usize + 1;
        if self.values.len() < need {
            self.values.resize(need, 0);
            self.reasons.resize(need, NO_REASON);
            self.watches.resize(2 * need, Vec::new());
        }
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clause(&self, id: u32) -> &[Lit] {
        &self.clauses[id as usize]
    }

    pub fn is_active(&self, id: u32) -> bool {
        self.active[id as usize]
    }

    /// Adds a clause. Any propagation result other than the cached root
    /// closure is discarded.
    pub fn add_clause(&mut self, clause: &Clause) -> u32 {
        let id = self.clauses.len() as u32;
        let mut lits = clause.lits().to_vec();
        self.ensure_var(clause.max_var());
        self.tautology.push(clause.is_tautology());
        self.active.push(true);
        let taut = clause.is_tautology();
        match self.root {
            Some(root) if root.conflict.is_none() && !taut => {
                self.backtrack(root.len);
                self.add_under_root(id, &mut lits);
            }
            Some(_) => self.backtrack(self.root_len()),
            None => self.clear(),
        }
        if !taut {
            match lits.len() {
                0 => self.empties.push(id),
                1 => self.units.push(id),
                _ => {
                    self.watches[lits[0].index()].push(id);
                    self.watches[lits[1].index()].push(id);
                }
            }
        }
        self.clauses.push(lits);
        if let Some(Root { conflict: None, .. }) = self.root {
            if let Some(&l) = self.pending_unit.as_ref() {
                self.pending_unit = None;
                self.assign(l, id);
                let from = self.trail.len() - 1;
                let conflict = self.run_from(from);
                self.root = Some(Root {
                    len: self.trail.len(),
                    conflict,
                });
            }
        }
        id
    }

    /// Arranges the watches of a clause added while the root closure is
    /// held, so that the closure stays exact.
    fn add_under_root(&mut self, id: u32, lits: &mut [Lit]) {
        if lits.iter().any(|&l| self.value(l) == 1) {
            let t = lits.iter().position(|&l| self.value(l) == 1).unwrap_or(0);
            lits.swap(0, t);
            return;
        }
        let mut open = 0;
        for k in 0..lits.len() {
            if self.value(lits[k]) == 0 {
                lits.swap(open, k);
                open += 1;
            }
        }
        match open {
            0 => {
                self.root = Some(Root {
                    len: self.trail.len(),
                    conflict: Some(Conflict::Clause(id)),
                })
            }
            1 => self.pending_unit = Some(lits[0]),
            _ => {}
        }
    }

    fn root_len(&self) -> usize {
        self.root.map_or(0, |r| r.len)
    }

    fn backtrack(&mut self, len: usize) {
        while self.trail.len() > len {
            let l = self.trail.pop().expect("trail is longer than len");
            let v = l.var() as usize;
            self.values[v] = 0;
            self.reasons[v] = NO_REASON;
        }
    }

    fn clear(&mut self) {
        self.backtrack(0);
        self.root = None;
    }

    pub fn delete(&mut self, id: u32) {
        self.active[id as usize] = false;
        if let Some(root) = self.root {
            self.backtrack(root.len);
            let is_reason = self.clauses[id as usize]
                .iter()
                .any(|l| self.reasons[l.var() as usize] == id);
            if is_reason || root.conflict == Some(Conflict::Clause(id)) {
                self.clear();
            }
        }
    }

    fn value(&self, lit: Lit) -> i8 {
        let v = self.values[lit.var() as usize];
        if lit.is_positive() {
            v
        } else {
            -v
        }
    }

    /// Value of `lit` under the held propagation result.
    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        if lit.var() as usize >= self.values.len() {
            return None;
        }
        match self.value(lit) {
            0 => None,
            v => Some(v > 0),
        }
    }

    fn assign(&mut self, lit: Lit, reason: u32) {
        let v = lit.var() as usize;
        self.values[v] = if lit.is_positive() { 1 } else { -1 };
        self.reasons[v] = reason;
        self.trail.push(lit);
    }

    pub fn trail(&self) -> &[Lit] {
        &self.trail
    }

    /// Id of the clause that implied `var`, if it was not an assumption.
    pub fn reason(&self, var: Var) -> Option<u32> {
        match self.reasons.get(var as usize) {
            Some(&r) if r != NO_REASON => Some(r),
            _ => None,
        }
    }

    pub fn reset(&mut self) {
        self.clear();
    }

    /// Propagates from scratch: assumptions in order, then active unit
    /// clauses in id order, then watched-literal propagation.
    pub fn propagate(&mut self, assumptions: &[Lit]) -> Option<Conflict> {
        self.clear();
        for &a in assumptions {
            self.ensure_var(a.var());
            match self.value(a) {
                1 => {}
                -1 => return Some(Conflict::Assumption(a)),
                _ => self.assign(a, NO_REASON),
            }
        }
        self.propagate_units().or_else(|| self.run_from(0))
    }

    fn propagate_units(&mut self) -> Option<Conflict> {
        if let Some(&id) = self.empties.iter().find(|&&id| self.active[id as usize]) {
            return Some(Conflict::Clause(id));
        }
        for i in 0..self.units.len() {
            let id = self.units[i];
            if !self.active[id as usize] {
                continue;
            }
            let l = self.clauses[id as usize][0];
            match self.value(l) {
                1 => {}
                -1 => return Some(Conflict::Clause(id)),
                _ => self.assign(l, id),
            }
        }
        None
    }

    fn run_from(&mut self, mut head: usize) -> Option<Conflict> {
        while head < self.trail.len() {
            let p = self.trail[head];
            head += 1;
            if let Some(c) = self.propagate_lit(!p) {
                return Some(c);
            }
        }
        None
    }

    fn ensure_root(&mut self) -> Root {
        if let Some(root) = self.root {
            self.backtrack(root.len);
            return root;
        }
        self.clear();
        let conflict = self.propagate_units().or_else(|| self.run_from(0));
        let root = Root {
            len: self.trail.len(),
            conflict,
        };
        self.root = Some(root);
        root
    }

    fn propagate_lit(&mut self, false_lit: Lit) -> Option<Conflict> {
        let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
        let mut i = 0;
        let mut j = 0;
        let mut conflict = None;
        while i < ws.len() {
            let id = ws[i];
            i += 1;
            if !self.active[id as usize] {
                continue;
            }
            let clause = &mut self.clauses[id as usize];
            if clause[0] == false_lit {
                clause.swap(0, 1);
            }
            let first = clause[0];
            let first_val = {
                let v = self.values[first.var() as usize];
                if first.is_positive() {
                    v
                } else {
                    -v
                }
            };
            if first_val == 1 {
                ws[j] = id;
                j += 1;
                continue;
            }
            let mut moved = false;
            for k in 2..clause.len() {
                let l = clause[k];
                let v = self.values[l.var() as usize];
                let lv = if l.is_positive() { v } else { -v };
                if lv != -1 {
                    clause.swap(1, k);
                    let new_watch = clause[1];
                    self.watches[new_watch.index()].push(id);
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
                conflict = Some(Conflict::Clause(id));
                while i < ws.len() {
                    ws[j] = ws[i];
                    i += 1;
                    j += 1;
                }
                break;
            }
            self.assign(first, id);
        }
        ws.truncate(j);
        self.watches[false_lit.index()] = ws;
        conflict
    }

    /// Clause ids that took part in deriving `conflict`: the conflicting
    /// clause plus the transitive reasons of its literals.
    pub fn participants(&self, conflict: Conflict) -> BTreeSet<u32> {
        let mut used = BTreeSet::new();
        let mut stack: Vec<Var> = Vec::new();
        let mut seen: HashSet<Var> = HashSet::new();
        match conflict {
            Conflict::Clause(id) => {
                used.insert(id);
                stack.extend(self.clauses[id as usize].iter().map(|l| l.var()));
            }
            Conflict::Assumption(l) => stack.push(l.var()),
        }
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            if let Some(r) = self.reason(v) {
                if used.insert(r) {
                    stack.extend(
                        self.clauses[r as usize]
                            .iter()
                            .map(|l| l.var())
                            .filter(|&w| w != v),
                    );
                }
            }
        }
        used
    }

    /// RUP check of `clause` against the active clauses.
    pub fn rup(&mut self, clause: &Clause) -> bool {
        self.rup_with_participants(clause).is_some()
    }

    /// Like [`Propagator::rup`], returning the participating clause ids.
    pub fn rup_with_participants(&mut self, clause: &Clause) -> Option<BTreeSet<u32>> {
        if clause.is_tautology() {
            return Some(BTreeSet::new());
        }
        let root = self.ensure_root();
        if let Some(c) = root.conflict {
            return Some(self.participants(c));
        }
        let mut conflict = None;
        for &l in clause.lits() {
            self.ensure_var(l.var());
            match self.value(!l) {
                1 => {}
                -1 => {
                    conflict = Some(Conflict::Assumption(!l));
                    break;
                }
                _ => self.assign(!l, NO_REASON),
            }
        }
        let conflict = conflict.or_else(|| self.run_from(root.len));
        let result = conflict.map(|c| self.participants(c));
        self.backtrack(root.len);
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(v: &[i32]) -> Vec<Lit> {
        v.iter().map(|&x| Lit::from_dimacs(x).unwrap()).collect()
    }

    fn assignment(v: &[i32]) -> Assignment {
        Assignment::from_lits(lits(v)).unwrap()
    }

    #[test]
    fn literal_basics() {
        let l = Lit::neg(3);
        assert_eq!(l.var(), 3);
        assert!(!l.is_positive());
        assert_eq!(!!l, l);
        assert_eq!(Lit::from_dimacs(0), None);
        assert_eq!(Lit::pos(1).index(), 0);
        assert_eq!(Lit::neg(1).index(), 1);
    }

    #[test]
    fn clause_normalization() {
        let c = Clause::from_dimacs(&[1, 2, 1, -3]);
        assert_eq!(c.to_dimacs(), vec![1, 2, -3]);
        assert!(!c.is_tautology());
        assert!(Clause::from_dimacs(&[1, -1]).is_tautology());
    }

    #[test]
    fn reduce_examples() {
        // a=1 b=2 c=3
        let f = CnfFormula::from_dimacs(&[&[1, 2], &[-1, 3]]);
        let r = reduce(&f, &assignment(&[1]));
        assert_eq!(r.clauses().cloned().collect::<Vec<_>>(), vec![Clause::from_dimacs(&[3])]);

        let f = CnfFormula::from_dimacs(&[&[1]]);
        let r = reduce(&f, &assignment(&[-1]));
        assert!(r.has_empty_clause());
        assert_eq!(r.len(), 1);

        let r = reduce(&f, &assignment(&[1]));
        assert!(r.is_empty());
    }

    #[test]
    fn reduce_treats_tautologies_as_satisfied() {
        let f = CnfFormula::from_dimacs(&[&[1, -1, 2]]);
        assert!(reduce(&f, &Assignment::new()).is_empty());
    }

    #[test]
    fn unit_propagate_examples() {
        let f = CnfFormula::from_dimacs(&[&[1], &[-1, 2]]);
        match unit_propagate(&f, &Assignment::new()) {
            PropagationResult::Fixpoint(a) => assert_eq!(a.trail(), &lits(&[1, 2])[..]),
            r => panic!("unexpected {:?}", r),
        }
        let f = CnfFormula::from_dimacs(&[&[1, 2]]);
        match unit_propagate(&f, &Assignment::new()) {
            PropagationResult::Fixpoint(a) => assert!(a.is_empty()),
            r => panic!("unexpected {:?}", r),
        }
        let f = CnfFormula::from_dimacs(&[&[1], &[-1, 2], &[-2]]);
        assert_eq!(
            unit_propagate(&f, &Assignment::new()),
            PropagationResult::Conflict {
                clause: 1,
                assignment: assignment(&[1, -2])
            }
        );
    }

    #[test]
    fn rup_examples() {
        let f = CnfFormula::from_dimacs(&[&[1]]);
        assert!(rup_check(&f, &Clause::from_dimacs(&[1])));
        // f ∧ ¬a has the model {¬a, b}
        let f = CnfFormula::from_dimacs(&[&[1, 2]]);
        assert!(!rup_check(&f, &Clause::from_dimacs(&[1])));
        assert!(rup_check(&f, &Clause::from_dimacs(&[1, 2, 3])));
    }

    #[test]
    fn deleted_clauses_do_not_propagate() {
        let mut f = CnfFormula::from_dimacs(&[&[1], &[-1]]);
        assert!(rup_check(&f, &Clause::empty()));
        f.delete(1);
        assert!(!rup_check(&f, &Clause::empty()));
    }

    #[test]
    fn horn_classification() {
        assert!(!is_horn(&CnfFormula::from_dimacs(&[&[1, 2, -3]])));
        assert!(is_horn(&CnfFormula::from_dimacs(&[&[-1, -2, 3], &[-4]])));
        let f = CnfFormula::from_dimacs(&[&[3, -1], &[4, -2], &[1, 2, -5]]);
        assert!(is_dual_horn(&f));
        assert!(!is_horn(&f));
        let flip: HashSet<Var> = [1, 2, 3, 4].into_iter().collect();
        assert!(is_horn_under(&f, &flip));
    }

    #[test]
    fn encode_implication_examples() {
        // c=1 d=2 reach=3
        let ante = [Clause::from_dimacs(&[-1]), Clause::from_dimacs(&[-2])];
        let imp = encode_implication(&ante, Lit::neg(3), 10).unwrap();
        let got: Vec<Vec<i32>> = imp.clauses.iter().map(|c| c.to_dimacs()).collect();
        assert_eq!(got, vec![vec![1, -11], vec![2, -12], vec![11, 12, -3]]);
        assert_eq!(imp.fresh, 11..13);

        let imp = encode_implication(&[], Lit::pos(5), 7).unwrap();
        assert_eq!(imp.clauses, vec![Clause::from_dimacs(&[5])]);
        assert!(imp.fresh.is_empty());

        // x=1 y=2 p=3
        let imp = encode_implication(&[Clause::from_dimacs(&[-1, -2])], Lit::neg(3), 3).unwrap();
        let got: Vec<Vec<i32>> = imp.clauses.iter().map(|c| c.to_dimacs()).collect();
        assert_eq!(got, vec![vec![1, -4], vec![2, -4], vec![4, -3]]);

        assert_eq!(
            encode_implication(&[Clause::from_dimacs(&[3, 1])], Lit::pos(3), 5),
            Err(EncodeError::HeadInAntecedent(3))
        );
    }

    #[test]
    fn encode_implication_skips_tautologies() {
        let ante = [Clause::from_dimacs(&[1, -1]), Clause::from_dimacs(&[2])];
        let imp = encode_implication(&ante, Lit::pos(3), 3).unwrap();
        assert_eq!(imp.fresh, 4..5);
        assert_eq!(imp.clauses.len(), 2);
    }

    #[test]
    fn participants_follow_reasons() {
        // 1; -1 ∨ 2; -2 ∨ 3; 4 ∨ 5 (unused); -3
        let f = CnfFormula::from_dimacs(&[&[1], &[-1, 2], &[-2, 3], &[4, 5], &[-3]]);
        let mut p = Propagator::from_formula(&f);
        let used = p.rup_with_participants(&Clause::empty()).unwrap();
        assert!(!used.contains(&3));
        assert!(used.contains(&0) && used.contains(&4));
    }

    mod incremental {
        use super::*;
        use proptest::prelude::*;

        fn clause() -> impl Strategy<Value = Vec<i32>> {
            prop::collection::vec((1..=6i32, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v }), 0..4)
        }

        proptest! {
            // Interleaved additions, deletions and RUP queries agree with a
            // fresh propagator built from the surviving clauses.
            #[test]
            fn root_cache_matches_fresh_checks(
                ops in prop::collection::vec((0..3u8, clause(), any::<prop::sample::Index>()), 1..40)
            ) {
                let mut p = Propagator::new();
                let mut live: Vec<(u32, Clause)> = Vec::new();
                for (op, lits, pick) in ops {
                    let c = Clause::from_dimacs(&lits);
                    match op {
                        0 => {
                            let id = p.add_clause(&c);
                            live.push((id, c));
                        }
                        1 if !live.is_empty() => {
                            let (id, _) = live.remove(pick.index(live.len()));
                            p.delete(id);
                        }
                        _ => {
                            let f = CnfFormula::from_clauses(6, live.iter().map(|(_, c)| c.clone()));
                            prop_assert_eq!(p.rup(&c), rup_check(&f, &c));
                        }
                    }
                }
            }
        }
    }
}
