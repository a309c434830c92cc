//! Monotonic definitions, the input/head renaming transform, and Horn
//! upper bounds built by instantiating a definition with a witness.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;

use thiserror::Error;

use crate::cnf::{
    encode_implication, is_dual_horn, is_dual_horn_under, is_horn, is_horn_under, reduce,
    rup_check, unit_propagate, Assignment, Clause, CnfFormula, EncodeError, Lit, Propagator, Var,
    VarAllocator,
};
use crate::kernel::{Polarity, TheoryLemma};
use crate::sat::{solve_cnf, SolveOutcome, SolverConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HornError {
    #[error("fresh variable base {base} collides with variable {var}")]
    FreshCollision { base: Var, var: Var },
    #[error("definition violates monotonic shape: {0}")]
    Lint(#[from] LintError),
    #[error("definition head {def_head} cannot discharge a lemma with head {lemma_head}")]
    WrongDefinition { def_head: Lit, lemma_head: Lit },
    #[error("witness literal {0} is not an auxiliary variable")]
    WitnessOutsideAux(Lit),
    #[error("witness is inconsistent with the lemma")]
    ConditionOneViolated,
    #[error("residual clause {0:?} is not over negated monotone inputs")]
    NonHornResidual(Clause),
    #[error("no witness exists: the lemma is not valid for this definition")]
    NoWitness,
    #[error("lemma {index} ({clause:?}) failed verification")]
    VerificationFailed { index: usize, clause: Clause },
    #[error("no definition for predicate variable {0}")]
    UnknownPredicate(Var),
    #[error("no definition with head {0}")]
    MissingDefinition(Lit),
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LintError {
    #[error("input literal {0} occurs in the monotone direction")]
    MonotoneInput(Lit),
    #[error("complement of the head occurs")]
    ComplementHead,
    #[error("head occurs in non-Horn clause {0:?}")]
    NonHornHeadClause(Clause),
    #[error("variable {0} is used as more than one of head, input and auxiliary")]
    Overlap(Var),
}

/// A CNF definition of `head` over inputs and auxiliaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotonicDefinition {
    pub clauses: CnfFormula,
    pub head: Lit,
    pub inputs: Vec<(Var, Polarity)>,
    pub aux: Vec<Var>,
}

impl MonotonicDefinition {
    /// Collects auxiliaries as every variable that is neither input nor head.
    pub fn new(clauses: CnfFormula, head: Lit, inputs: Vec<(Var, Polarity)>) -> MonotonicDefinition {
        let known: HashSet<Var> = inputs
            .iter()
            .map(|&(v, _)| v)
            .chain(std::iter::once(head.var()))
            .collect();
        let aux: BTreeSet<Var> = clauses
            .clauses()
            .flat_map(|c| c.lits().iter().map(|l| l.var()))
            .filter(|v| !known.contains(v))
            .collect();
        MonotonicDefinition {
            clauses,
            head,
            inputs,
            aux: aux.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn polarity(&self, var: Var) -> Option<Polarity> {
        self.inputs.iter().find(|&&(v, _)| v == var).map(|&(_, p)| p)
    }

    /// Input literals pushing the predicate toward the head.
    pub fn push_literals(&self) -> Vec<Lit> {
        self.inputs
            .iter()
            .map(|&(v, p)| p.push_literal(v, self.head))
            .collect()
    }

    /// Variables flipped so that the head and the push literals read positive.
    pub fn orientation(&self) -> HashSet<Var> {
        self.push_literals()
            .into_iter()
            .chain(std::iter::once(self.head))
            .filter(|l| !l.is_positive())
            .map(|l| l.var())
            .collect()
    }

    /// Horn after orientation; such definitions discharge their lemmas by
    /// unit propagation alone.
    pub fn is_oriented_horn(&self) -> bool {
        is_horn_under(&self.clauses, &self.orientation())
    }

    /// Checks the structural restrictions of a monotonic definition.
    pub fn lint(&self) -> Result<(), LintError> {
        let mut seen = HashSet::new();
        for v in self
            .inputs
            .iter()
            .map(|&(v, _)| v)
            .chain(self.aux.iter().copied())
            .chain(std::iter::once(self.head.var()))
        {
            if !seen.insert(v) {
                return Err(LintError::Overlap(v));
            }
        }
        let push: HashSet<Lit> = self.push_literals().into_iter().collect();
        let flip = self.orientation();
        for c in self.clauses.clauses() {
            for &l in c.lits() {
                if push.contains(&l) {
                    return Err(LintError::MonotoneInput(l));
                }
                if l == !self.head {
                    return Err(LintError::ComplementHead);
                }
            }
            if c.contains(self.head) {
                let positives = c
                    .lits()
                    .iter()
                    .filter(|l| l.is_positive() != flip.contains(&l.var()))
                    .count();
                if positives > 1 {
                    return Err(LintError::NonHornHeadClause(c.clone()));
                }
            }
        }
        Ok(())
    }
}

/// Renames inputs and the head apart and links them back with one clause
/// each: `π(a) ⇒ π(a′)` for every input (π the push literal) and `h′ ⇒ h`.
/// The result has exactly `n + |A| + 1` clauses.
pub fn mono_transform(
    def: &CnfFormula,
    head: Lit,
    inputs: &[(Var, Polarity)],
    fresh_var_base: Var,
) -> Result<MonotonicDefinition, HornError> {
    let max_used = def
        .num_vars()
        .max(head.var())
        .max(inputs.iter().map(|&(v, _)| v).max().unwrap_or(0));
    if fresh_var_base < max_used {
        return Err(HornError::FreshCollision {
            base: fresh_var_base,
            var: max_used,
        });
    }
    let mut alloc = VarAllocator::new(fresh_var_base);
    let mut rename: HashMap<Var, Var> = HashMap::new();
    for &(v, _) in inputs {
        rename.insert(v, alloc.fresh());
    }
    // The renamed head is always the positive literal of its fresh variable.
    let head_prime = alloc.fresh();
    let map = |l: Lit| {
        if l.var() == head.var() {
            return Lit::new(head_prime, l == head);
        }
        match rename.get(&l.var()) {
            Some(&v) => Lit::new(v, l.is_positive()),
            None => l,
        }
    };
    let mut out = CnfFormula::new(alloc.last());
    for c in def.clauses() {
        out.add_clause(Clause::new(c.lits().iter().map(|&l| map(l))));
    }
    for &(v, p) in inputs {
        let push = p.push_literal(v, head);
        out.add_clause(Clause::new([!push, map(push)]));
    }
    out.add_clause(Clause::new([!map(head), head]));
    let result = MonotonicDefinition::new(out, head, inputs.to_vec());
    result.lint()?;
    Ok(result)
}

/// Finds an assignment to the auxiliaries of `def` consistent with `hl`
/// (the complement of the definition head) and the given total input
/// values. `seed` pre-assigns auxiliaries; an inconsistent seed is dropped.
pub fn complete_witness(
    def: &MonotonicDefinition,
    hl: Lit,
    inputs: &[Lit],
    seed: &[Lit],
) -> Result<Vec<Lit>, HornError> {
    let attempt = |seed: &[Lit]| -> Option<Vec<Lit>> {
        let units: Vec<Lit> = [hl].iter().chain(inputs).chain(seed).copied().collect();
        let mut prop = Propagator::from_formula(&def.clauses);
        if prop.propagate(&units).is_some() {
            return None;
        }
        // Seeds usually pin down every auxiliary, or leave the rest free to
        // take one uniform value; search only when neither works.
        for default in [false, true] {
            let value = |l: Lit| prop.lit_value(l).unwrap_or(l.is_positive() == default);
            if def.clauses.clauses().all(|c| c.lits().iter().any(|&l| value(l))) {
                return Some(
                    def.aux
                        .iter()
                        .map(|&v| Lit::new(v, prop.lit_value(Lit::pos(v)).unwrap_or(default)))
                        .collect(),
                );
            }
        }
        let mut f = def.clauses.clone();
        for &l in &units {
            f.add_clause(Clause::new([l]));
        }
        match solve_cnf(
            &f,
            SolverConfig {
                log_proof: false,
                ..Default::default()
            },
        ) {
            SolveOutcome::Sat(model) => Some(
                def.aux
                    .iter()
                    .map(|&v| Lit::new(v, model[v as usize]))
                    .collect(),
            ),
            _ => None,
        }
    };
    if !seed.is_empty() {
        if let Some(w) = attempt(seed) {
            return Ok(w);
        }
    }
    attempt(&[]).ok_or(HornError::NoWitness)
}

/// The reduced definition `R` for one lemma, before fresh selectors are
/// assigned.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instantiation {
    pub residual: Vec<Clause>,
    pub head: Lit,
}

impl Instantiation {
    /// Number of selector variables the encoding will need.
    pub fn selectors(&self) -> usize {
        self.residual.iter().filter(|c| !c.is_tautology()).count()
    }

    pub fn encode(&self, fresh_var_base: Var) -> Result<(Vec<Clause>, Range<Var>), HornError> {
        let imp = encode_implication(&self.residual, self.head, fresh_var_base)?;
        Ok((imp.clauses, imp.fresh))
    }
}

/// Reduces `def` (a definition of `¬head`) under the lemma head and its
/// witness, and checks that the residue is over negated monotone inputs
/// and consistent with the lemma's antecedent.
pub fn instantiate(def: &MonotonicDefinition, lemma: &TheoryLemma) -> Result<Instantiation, HornError> {
    if def.head != !lemma.head {
        return Err(HornError::WrongDefinition {
            def_head: def.head,
            lemma_head: lemma.head,
        });
    }
    let aux: HashSet<Var> = def.aux.iter().copied().collect();
    let mut m = Assignment::new();
    m.assign(lemma.head).map_err(|_| HornError::ConditionOneViolated)?;
    for &w in &lemma.witness {
        if !aux.contains(&w.var()) {
            return Err(HornError::WitnessOutsideAux(w));
        }
        m.assign(w).map_err(|_| HornError::ConditionOneViolated)?;
    }
    let residual: Vec<Clause> = reduce(&def.clauses, &m).clauses().cloned().collect();
    let push: HashSet<Lit> = def.push_literals().into_iter().collect();
    for c in &residual {
        if c.lits().iter().any(|l| !push.contains(&!*l)) {
            return Err(HornError::NonHornResidual(c.clone()));
        }
    }
    let antecedent = Assignment::from_lits(lemma.antecedent())
        .map_err(|_| HornError::ConditionOneViolated)?;
    let r = CnfFormula::from_clauses(def.clauses.num_vars(), residual.iter().cloned());
    if reduce(&r, &antecedent).has_empty_clause() || unit_propagate(&r, &antecedent).is_conflict() {
        return Err(HornError::ConditionOneViolated);
    }
    Ok(Instantiation {
        residual,
        head: lemma.head,
    })
}

/// A Horn-shaped set of clauses implied by a definition, specific to one
/// lemma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HornUpperBound {
    pub clauses: CnfFormula,
    pub lemma: Clause,
    pub witness: Vec<Lit>,
    pub fresh: Range<Var>,
    /// Variables flipped to read the bound as dual-Horn.
    pub orientation: HashSet<Var>,
}

impl HornUpperBound {
    pub fn is_horn_shaped(&self) -> bool {
        is_horn(&self.clauses)
            || is_dual_horn(&self.clauses)
            || is_dual_horn_under(&self.clauses, &self.orientation)
    }
}

pub fn lemma_specific_horn(
    def: &MonotonicDefinition,
    lemma: &TheoryLemma,
    fresh_var_base: Var,
) -> Result<HornUpperBound, HornError> {
    let inst = instantiate(def, lemma)?;
    let (clauses, fresh) = inst.encode(fresh_var_base)?;
    let mut orientation = def.orientation();
    // The bound concludes the lemma head, the complement of the definition head.
    if !orientation.remove(&lemma.head.var()) {
        orientation.insert(lemma.head.var());
    }
    Ok(HornUpperBound {
        clauses: CnfFormula::from_clauses(fresh.end.saturating_sub(1), clauses),
        lemma: lemma.clause.clone(),
        witness: lemma.witness.clone(),
        fresh,
        orientation,
    })
}

pub fn verify_lemma(bound: &HornUpperBound, lemma: &TheoryLemma) -> bool {
    rup_check(&bound.clauses, &lemma.clause)
}

/// The one-sided definitions of a predicate. Reachability only has a
/// positive side; its negative lemmas are discharged by instantiation.
#[derive(Clone, Debug)]
pub struct DefinitionPair {
    pub positive: MonotonicDefinition,
    pub negative: Option<MonotonicDefinition>,
}

impl DefinitionPair {
    pub fn predicate_var(&self) -> Var {
        self.positive.head.var()
    }

    /// The definition whose head is `head`.
    pub fn for_head(&self, head: Lit) -> Option<&MonotonicDefinition> {
        if head.is_positive() {
            Some(&self.positive)
        } else {
            self.negative.as_ref()
        }
    }

    /// A lemma concluding `head` is checked directly against the
    /// definition of `head` when that definition is Horn.
    pub fn direct(&self, head: Lit) -> bool {
        self.for_head(head).is_some_and(|d| d.is_oriented_horn())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Unit propagation on a Horn definition.
    DirectHorn,
    /// Witness instantiation of the opposite definition.
    Instantiation { selectors: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaReport {
    pub clause: Clause,
    pub predicate_var: Var,
    pub route: Route,
}

/// The union of Horn definitions and per-lemma bounds that makes every
/// lemma RUP.
#[derive(Clone, Debug)]
pub struct ProofSpecificDefinition {
    pub clauses: CnfFormula,
    pub reports: Vec<LemmaReport>,
    /// Highest variable used, including selectors.
    pub max_var: Var,
}

/// Builds the proof-specific definition. `jobs > 1` instantiates lemmas on
/// worker threads; selector ranges are assigned afterwards in lemma order,
/// so the result does not depend on `jobs`.
pub fn proof_specific_definition(
    defs: &[DefinitionPair],
    lemmas: &[TheoryLemma],
    fresh_var_base: Var,
    jobs: usize,
) -> Result<ProofSpecificDefinition, HornError> {
    let by_var: HashMap<Var, &DefinitionPair> =
        defs.iter().map(|d| (d.predicate_var(), d)).collect();
    for l in lemmas {
        if !by_var.contains_key(&l.predicate_var) {
            return Err(HornError::UnknownPredicate(l.predicate_var));
        }
    }
    let work = |lemma: &TheoryLemma| -> Result<Option<Instantiation>, HornError> {
        let pair = by_var[&lemma.predicate_var];
        if pair.direct(lemma.head) {
            Ok(None)
        } else {
            let def = pair
                .for_head(!lemma.head)
                .ok_or(HornError::MissingDefinition(!lemma.head))?;
            instantiate(def, lemma).map(Some)
        }
    };
    let results: Vec<Result<Option<Instantiation>, HornError>> = if jobs <= 1 || lemmas.len() < 2 {
        lemmas.iter().map(work).collect()
    } else {
        let chunk = lemmas.len().div_ceil(jobs);
        std::thread::scope(|s| {
            let handles: Vec<_> = lemmas
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(work).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("discharge worker panicked"))
                .collect()
        })
    };

    let mut clauses = CnfFormula::new(fresh_var_base);
    let mut included: HashSet<Lit> = HashSet::new();
    let mut reports = Vec::new();
    let mut next = fresh_var_base;
    for (index, (lemma, result)) in lemmas.iter().zip(results).enumerate() {
        let fail = || HornError::VerificationFailed {
            index,
            clause: lemma.clause.clone(),
        };
        let pair = by_var[&lemma.predicate_var];
        let route = match result.map_err(|_| fail())? {
            None => {
                let def = pair.for_head(lemma.head).expect("direct route has a definition");
                if !rup_check(&def.clauses, &lemma.clause) {
                    return Err(fail());
                }
                if included.insert(lemma.head) {
                    clauses.extend(def.clauses.clauses().cloned());
                }
                Route::DirectHorn
            }
            Some(inst) => {
                let (bound, fresh) = inst.encode(next)?;
                next = next.max(fresh.end.saturating_sub(1));
                let f = CnfFormula::from_clauses(next, bound.iter().cloned());
                if !rup_check(&f, &lemma.clause) {
                    return Err(fail());
                }
                clauses.extend(bound);
                Route::Instantiation {
                    selectors: inst.selectors(),
                }
            }
        };
        reports.push(LemmaReport {
            clause: lemma.clause.clone(),
            predicate_var: lemma.predicate_var,
            route,
        });
    }
    clauses.set_num_vars(next);
    Ok(ProofSpecificDefinition {
        max_var: clauses.num_vars(),
        clauses,
        reports,
    })
}
