//! Theory lemmas and the monotonic-theory propagation layer.

use std::collections::{HashMap, HashSet};

use crate::cnf::{Clause, Lit, Var, VarAllocator};
use crate::horn::complete_witness;
use crate::sat::{ReasonHandle, SolverView, TheoryError, TheoryHooks, TheoryResponse};
use crate::theory::graph::{crossing_edges, path_witness};
use crate::theory::{PredicateEncoding, PredicateError, TheoryPredicate};

/// A theory-justified clause `M_A ⇒ head`, plus the auxiliary assignment
/// that lets a Horn upper bound discharge it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TheoryLemma {
    pub clause: Clause,
    pub predicate_var: Var,
    pub head: Lit,
    pub witness: Vec<Lit>,
}

impl TheoryLemma {
    pub fn new(clause: Clause, head: Lit, witness: Vec<Lit>) -> TheoryLemma {
        debug_assert!(clause.contains(head));
        TheoryLemma {
            clause,
            predicate_var: head.var(),
            head,
            witness,
        }
    }

    pub fn head_is_positive(&self) -> bool {
        self.head.is_positive()
    }

    /// Literals of the antecedent `M_A`: the negated body of the clause.
    pub fn antecedent(&self) -> Vec<Lit> {
        self.clause
            .lits()
            .iter()
            .filter(|&&l| l != self.head)
            .map(|&l| !l)
            .collect()
    }
}

/// Direction in which an input moves a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Setting the input true can only make the predicate true.
    Positive,
    /// Setting the input true can only make the predicate false.
    Negative,
}

impl Polarity {
    /// The literal of `var` that pushes the predicate toward `head`.
    pub fn push_literal(self, var: Var, head: Lit) -> Lit {
        Lit::new(var, (self == Polarity::Positive) == head.is_positive())
    }
}

/// A theory predicate together with the definitions used to discharge its
/// lemmas.
#[derive(Clone, Debug)]
pub struct PredicateBinding {
    pub predicate: TheoryPredicate,
    pub encoding: PredicateEncoding,
    inputs: Vec<(Var, Polarity)>,
}

impl PredicateBinding {
    pub fn new(predicate: TheoryPredicate, alloc: &mut VarAllocator) -> Result<PredicateBinding, PredicateError> {
        let encoding = predicate.encode(alloc)?;
        let inputs = predicate.inputs();
        Ok(PredicateBinding {
            predicate,
            encoding,
            inputs,
        })
    }

    pub fn predicate_var(&self) -> Var {
        self.predicate.predicate_var()
    }

    pub fn inputs(&self) -> &[(Var, Polarity)] {
        &self.inputs
    }

    /// Does fixing `antecedent` (and completing every other input against
    /// `head`) still force `head`?
    pub fn implies(&self, antecedent: &[Lit], head: Lit) -> bool {
        let values = completion(&self.inputs, antecedent, !head);
        self.predicate.eval(&|v| values.get(&v).copied().unwrap_or(false)) == head.is_positive()
    }
}

/// Total input values: `fixed` literals where given, every other input
/// pushed toward `toward`.
pub fn completion(inputs: &[(Var, Polarity)], fixed: &[Lit], toward: Lit) -> HashMap<Var, bool> {
    let mut values: HashMap<Var, bool> = inputs
        .iter()
        .map(|&(v, p)| (v, p.push_literal(v, toward).is_positive()))
        .collect();
    for l in fixed {
        values.insert(l.var(), l.is_positive());
    }
    values
}

/// The under- and over-approximating completions `(M⁻, M⁺)` of a partial
/// assignment, as literals in input order.
pub fn approximate(known: &dyn Fn(Var) -> Option<bool>, inputs: &[(Var, Polarity)]) -> (Vec<Lit>, Vec<Lit>) {
    inputs
        .iter()
        .map(|&(v, p)| match known(v) {
            Some(b) => (Lit::new(v, b), Lit::new(v, b)),
            None => (
                Lit::new(v, p == Polarity::Negative),
                Lit::new(v, p == Polarity::Positive),
            ),
        })
        .unzip()
}

fn eval_lits(p: &TheoryPredicate, lits: &[Lit]) -> bool {
    let values: HashMap<Var, bool> = lits.iter().map(|l| (l.var(), l.is_positive())).collect();
    p.eval(&|v| values.get(&v).copied().unwrap_or(false))
}

/// The unstrengthened clause `M_s ⇒ head`.
pub fn weak_clause(antecedent: &[Lit], head: Lit) -> Clause {
    Clause::new(antecedent.iter().map(|&l| !l).chain(std::iter::once(head)))
}

struct Pending {
    binding: usize,
    head: Lit,
    /// Assigned inputs pushing toward `head` when the implication was made.
    snapshot: Vec<Lit>,
    lemma: Option<TheoryLemma>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KernelStats {
    pub implications: u64,
    pub conflicts: u64,
    pub explanations: u64,
}

/// Theory propagation over a set of predicate bindings.
pub struct Kernel {
    bindings: Vec<PredicateBinding>,
    pending: Vec<Pending>,
    generation: u32,
    witnesses: bool,
    max_var: Var,
    stats: KernelStats,
}

impl Kernel {
    pub fn new(bindings: Vec<PredicateBinding>) -> Kernel {
        let max_var = bindings
            .iter()
            .flat_map(|b| b.inputs.iter().map(|i| i.0).chain(std::iter::once(b.predicate_var())))
            .max()
            .unwrap_or(0);
        Kernel {
            bindings,
            pending: Vec::new(),
            generation: 0,
            witnesses: true,
            max_var,
            stats: KernelStats::default(),
        }
    }

    /// Witnesses are only needed when the proof is kept.
    pub fn set_witnesses(&mut self, on: bool) {
        self.witnesses = on;
    }

    pub fn bindings(&self) -> &[PredicateBinding] {
        &self.bindings
    }

    pub fn stats(&self) -> &KernelStats {
        &self.stats
    }

    fn handle(&mut self, binding: usize, head: Lit, known: &dyn Fn(Var) -> Option<bool>) -> ReasonHandle {
        let snapshot = self.bindings[binding]
            .inputs
            .iter()
            .map(|&(v, p)| p.push_literal(v, head))
            .filter(|&l| known(l.var()) == Some(l.is_positive()))
            .collect();
        self.pending.push(Pending {
            binding,
            head,
            snapshot,
            lemma: None,
        });
        ReasonHandle {
            generation: self.generation,
            index: (self.pending.len() - 1) as u32,
        }
    }

    /// One round of theory propagation against a partial assignment.
    pub fn propagate_with(&mut self, known: &dyn Fn(Var) -> Option<bool>) -> TheoryResponse {
        let mut implied = Vec::new();
        for bi in 0..self.bindings.len() {
            let b = &self.bindings[bi];
            let p = b.predicate_var();
            let current = known(p);
            let (under, over) = approximate(known, &b.inputs);
            let head = if current != Some(true) && eval_lits(&b.predicate, &under) {
                Lit::pos(p)
            } else if current != Some(false) && !eval_lits(&b.predicate, &over) {
                Lit::neg(p)
            } else {
                continue;
            };
            let h = self.handle(bi, head, known);
            if current.is_some() {
                self.stats.conflicts += 1;
                return TheoryResponse::Conflict(h);
            }
            self.stats.implications += 1;
            implied.push((head, h));
        }
        if implied.is_empty() {
            TheoryResponse::Consistent
        } else {
            TheoryResponse::Implied(implied)
        }
    }

    /// Shrinks `snapshot` to a smaller antecedent that still forces `head`.
    fn strengthen(&self, binding: usize, head: Lit, snapshot: &[Lit]) -> Vec<Lit> {
        let b = &self.bindings[binding];
        let candidate = match &b.predicate {
            TheoryPredicate::Reach(r) if head.is_positive() => {
                let on: HashSet<Var> = snapshot.iter().map(|l| l.var()).collect();
                path_witness(&r.graph, r.source, r.target, &|v| on.contains(&v))
                    .ok()
                    .map(|path| path.into_iter().map(Lit::pos).collect())
            }
            TheoryPredicate::Reach(r) => {
                let off: HashSet<Var> = snapshot.iter().map(|l| l.var()).collect();
                let status = r.graph.reachable_from(r.source, &|v| !off.contains(&v));
                let mut cut: Vec<Lit> = crossing_edges(&r.graph, &status).into_iter().map(Lit::neg).collect();
                cut.dedup();
                Some(cut)
            }
            _ => {
                let mut kept = snapshot.to_vec();
                let mut i = 0;
                while i < kept.len() {
                    let mut trial = kept.clone();
                    trial.remove(i);
                    if b.implies(&trial, head) {
                        kept = trial;
                    } else {
                        i += 1;
                    }
                }
                Some(kept)
            }
        };
        match candidate {
            Some(c) if b.implies(&c, head) => c,
            _ => snapshot.to_vec(),
        }
    }

    /// An auxiliary assignment for the definition opposite to `head`, or
    /// nothing when `head`'s own definition is Horn.
    pub fn witness(&self, binding: usize, head: Lit, antecedent: &[Lit]) -> Result<Vec<Lit>, TheoryError> {
        let b = &self.bindings[binding];
        let pair = &b.encoding.pair;
        if pair.direct(head) {
            return Ok(Vec::new());
        }
        let def = pair
            .for_head(!head)
            .ok_or_else(|| TheoryError::Other(format!("no definition for {}", !head)))?;
        let values = completion(&b.inputs, antecedent, !head);
        let value = |v: Var| values.get(&v).copied().unwrap_or(false);
        let seed = b.predicate.witness_seed(&b.encoding.hints, head, &value);
        let total: Vec<Lit> = b.inputs.iter().map(|&(v, _)| Lit::new(v, value(v))).collect();
        complete_witness(def, head, &total, &seed).map_err(|e| TheoryError::Other(e.to_string()))
    }

    pub fn explain_handle(&mut self, handle: ReasonHandle) -> Result<TheoryLemma, TheoryError> {
        if handle.generation != self.generation || handle.index as usize >= self.pending.len() {
            return Err(TheoryError::StaleHandle(handle));
        }
        let i = handle.index as usize;
        if let Some(l) = &self.pending[i].lemma {
            return Ok(l.clone());
        }
        let (binding, head) = (self.pending[i].binding, self.pending[i].head);
        let antecedent = self.strengthen(binding, head, &self.pending[i].snapshot);
        let witness = if self.witnesses {
            self.witness(binding, head, &antecedent)?
        } else {
            Vec::new()
        };
        let lemma = TheoryLemma::new(weak_clause(&antecedent, head), head, witness);
        self.stats.explanations += 1;
        self.pending[i].lemma = Some(lemma.clone());
        Ok(lemma)
    }
}

impl TheoryHooks for Kernel {
    fn num_vars(&self) -> u32 {
        self.max_var
    }

    fn propagate(&mut self, view: &SolverView<'_>) -> TheoryResponse {
        self.propagate_with(&|v| view.value(v))
    }

    fn explain(&mut self, handle: ReasonHandle) -> Result<TheoryLemma, TheoryError> {
        self.explain_handle(handle)
    }

    fn begin(&mut self) {
        self.generation += 1;
        self.pending.clear();
    }
}
