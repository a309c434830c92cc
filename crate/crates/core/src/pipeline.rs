//! End to end: solve with a theory-annotated certificate, trim it, turn
//! theory lemmas into Horn definitions, and emit a plain DRAT proof checked
//! against the extended formula.

use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::cnf::{CnfFormula, Var, VarAllocator};
use crate::drat::{self, DratError, ProofCertificate, ProofRecord, RecordKind, Verdict};
use crate::horn::{proof_specific_definition, DefinitionPair, HornError, Route};
use crate::instance::{Instance, InstanceError};
use crate::kernel::{Kernel, PredicateBinding, TheoryLemma};
use crate::sat::{self, SolveError, SolveOutcome, SolverConfig, SolverStats};
use crate::theory::PredicateError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error("solver: {0}")]
    Solve(#[from] SolveError),
    #[error("trimming: {0}")]
    Drat(#[from] DratError),
    #[error("lemma discharge: {0}")]
    Discharge(#[from] HornError),
    #[error("theory lemma record {0} lacks a predicate variable")]
    MalformedLemma(usize),
    #[error("final proof rejected: {0:?}")]
    Rejected(Verdict),
}

#[derive(Clone, Debug)]
pub struct ProveConfig {
    pub backward_check: bool,
    /// Additionally drop records greedily after trimming (slow).
    pub minimize: bool,
    pub seed: u64,
    pub conflict_budget: Option<u64>,
    /// Worker threads for lemma discharge.
    pub jobs: usize,
    /// Whether [`solve_instance`] records a certificate; [`prove`] always
    /// does.
    pub log_proof: bool,
}

impl Default for ProveConfig {
    fn default() -> Self {
        ProveConfig {
            backward_check: true,
            minimize: false,
            seed: 0,
            conflict_budget: None,
            jobs: 1,
            log_proof: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProveReport {
    pub emitted_theory_lemmas: usize,
    pub core_theory_lemmas: usize,
    pub distinct_core_lemmas: usize,
    pub emitted_learned: usize,
    pub core_learned: usize,
    pub direct_horn: usize,
    pub instantiated: usize,
    pub selectors: usize,
    pub definition_clauses: usize,
    pub final_clauses: usize,
    pub final_vars: Var,
    pub proof_records: usize,
    pub solver: SolverStats,
    pub solve_time: Duration,
    pub trim_time: Duration,
    pub discharge_time: Duration,
    pub check_time: Duration,
}

impl ProveReport {
    /// Fraction of emitted theory lemmas kept by trimming.
    pub fn core_fraction(&self) -> f64 {
        if self.emitted_theory_lemmas == 0 {
            1.0
        } else {
            self.core_theory_lemmas as f64 / self.emitted_theory_lemmas as f64
        }
    }
}

impl fmt::Display for ProveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        writeln!(f, "emitted_theory_lemmas = {}", self.emitted_theory_lemmas)?;
        writeln!(f, "core_theory_lemmas = {}", self.core_theory_lemmas)?;
        writeln!(f, "distinct_core_lemmas = {}", self.distinct_core_lemmas)?;
        writeln!(f, "core_fraction = {:.4}", self.core_fraction())?;
        writeln!(f, "emitted_learned = {}", self.emitted_learned)?;
        writeln!(f, "core_learned = {}", self.core_learned)?;
        writeln!(f, "direct_horn = {}", self.direct_horn)?;
        writeln!(f, "instantiated = {}", self.instantiated)?;
        writeln!(f, "selectors = {}", self.selectors)?;
        writeln!(f, "definition_clauses = {}", self.definition_clauses)?;
        writeln!(f, "final_clauses = {}", self.final_clauses)?;
        writeln!(f, "final_vars = {}", self.final_vars)?;
        writeln!(f, "proof_records = {}", self.proof_records)?;
        writeln!(f, "decisions = {}", self.solver.decisions)?;
        writeln!(f, "conflicts = {}", self.solver.conflicts)?;
        writeln!(f, "solve_ms = {:.3}", ms(self.solve_time))?;
        writeln!(f, "trim_ms = {:.3}", ms(self.trim_time))?;
        writeln!(f, "discharge_ms = {:.3}", ms(self.discharge_time))?;
        write!(f, "check_ms = {:.3}", ms(self.check_time))
    }
}

#[derive(Clone, Debug)]
pub struct UnsatProof {
    /// Instance clauses followed by the proof-specific definitions.
    pub final_cnf: CnfFormula,
    /// Plain DRAT: no theory records.
    pub drat: ProofCertificate,
    /// The solver's certificate, theory records included.
    pub certificate: ProofCertificate,
    pub report: ProveReport,
}

#[derive(Clone, Debug)]
pub enum ProveOutcome {
    Sat(Vec<bool>),
    Unsat(Box<UnsatProof>),
    Unknown,
}

/// Binds every predicate of `inst`, allocating definition variables above
/// the instance universe.
pub fn bind(inst: &Instance) -> Result<(Vec<PredicateBinding>, VarAllocator), PipelineError> {
    let mut alloc = VarAllocator::new(inst.num_vars());
    let bindings = inst
        .predicates()?
        .into_iter()
        .map(|p| PredicateBinding::new(p, &mut alloc))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((bindings, alloc))
}

fn solver_config(config: &ProveConfig, log_proof: bool) -> SolverConfig {
    SolverConfig {
        log_proof,
        conflict_budget: config.conflict_budget,
        seed: config.seed,
        verify_learned: false,
    }
}

/// Solves modulo theories. With `log_proof` set, an UNSAT outcome carries
/// the raw certificate (learned clauses and witnessed theory lemmas).
pub fn solve_instance(inst: &Instance, config: &ProveConfig) -> Result<(SolveOutcome, SolverStats), PipelineError> {
    let (bindings, _) = bind(inst)?;
    let mut kernel = Kernel::new(bindings);
    kernel.set_witnesses(config.log_proof);
    Ok(sat::solve(&inst.cnf, &mut kernel, solver_config(config, config.log_proof))?)
}

fn lemma_of(index: usize, r: &ProofRecord) -> Result<TheoryLemma, PipelineError> {
    let p = r.predicate_var.ok_or(PipelineError::MalformedLemma(index))?;
    let head = *r
        .clause
        .lits()
        .iter()
        .find(|l| l.var() == p)
        .ok_or(PipelineError::MalformedLemma(index))?;
    Ok(TheoryLemma::new(
        r.clause.clone(),
        head,
        r.witness.clone().unwrap_or_default(),
    ))
}

pub fn prove(inst: &Instance, config: &ProveConfig) -> Result<ProveOutcome, PipelineError> {
    let (bindings, alloc) = bind(inst)?;
    let pairs: Vec<DefinitionPair> = bindings.iter().map(|b| b.encoding.pair.clone()).collect();
    let mut kernel = Kernel::new(bindings);

    let start = Instant::now();
    let (outcome, stats) = sat::solve(&inst.cnf, &mut kernel, solver_config(config, true))?;
    let solve_time = start.elapsed();
    let certificate = match outcome {
        SolveOutcome::Sat(model) => return Ok(ProveOutcome::Sat(model)),
        SolveOutcome::Unknown => return Ok(ProveOutcome::Unknown),
        SolveOutcome::Unsat(cert) => cert.unwrap_or_default(),
    };

    let start = Instant::now();
    let core = if config.minimize {
        drat::minimize(&inst.cnf, &certificate)?
    } else if config.backward_check {
        drat::backward_check(&inst.cnf, &certificate)?
    } else {
        certificate.clone()
    };
    let trim_time = start.elapsed();

    let start = Instant::now();
    let mut lemmas = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut core_theory = 0;
    for (i, r) in core.records.iter().enumerate() {
        if r.kind == RecordKind::TheoryLemma {
            core_theory += 1;
            if seen.insert(r.clause.key()) {
                lemmas.push(lemma_of(i, r)?);
            }
        }
    }
    let psd = proof_specific_definition(&pairs, &lemmas, alloc.last(), config.jobs)?;
    let mut final_cnf = inst.cnf.clone();
    final_cnf.extend(psd.clauses.clauses().cloned());
    final_cnf.set_num_vars(psd.max_var);
    let drat = ProofCertificate {
        records: core
            .records
            .iter()
            .map(|r| match r.kind {
                RecordKind::TheoryLemma => ProofRecord::learned(r.clause.clone()),
                _ => r.clone(),
            })
            .collect(),
    };
    // Definitions can make some records derivable again; a minimized
    // proof stays minimal against the final formula as well.
    let drat = if config.minimize {
        drat::minimize(&final_cnf, &drat)?
    } else {
        drat
    };
    let discharge_time = start.elapsed();

    let start = Instant::now();
    let verdict = drat::check_drat(&final_cnf, &drat);
    let check_time = start.elapsed();
    if !verdict.is_verified() {
        return Err(PipelineError::Rejected(verdict));
    }

    let (mut direct_horn, mut instantiated, mut selectors) = (0, 0, 0);
    for r in &psd.reports {
        match r.route {
            Route::DirectHorn => direct_horn += 1,
            Route::Instantiation { selectors: s } => {
                instantiated += 1;
                selectors += s;
            }
        }
    }
    let report = ProveReport {
        emitted_theory_lemmas: certificate.count(RecordKind::TheoryLemma),
        core_theory_lemmas: core_theory,
        distinct_core_lemmas: lemmas.len(),
        emitted_learned: certificate.count(RecordKind::Learned),
        core_learned: core.count(RecordKind::Learned),
        direct_horn,
        instantiated,
        selectors,
        definition_clauses: psd.clauses.len(),
        final_clauses: final_cnf.len(),
        final_vars: final_cnf.num_vars(),
        proof_records: drat.len(),
        solver: stats,
        solve_time,
        trim_time,
        discharge_time,
        check_time,
    };
    Ok(ProveOutcome::Unsat(Box::new(UnsatProof {
        final_cnf,
        drat,
        certificate,
        report,
    })))
}

/// Replaces every predicate by both of its definitions, giving a pure CNF
/// equisatisfiable with the instance.
pub fn eager_encode(inst: &Instance) -> Result<CnfFormula, PipelineError> {
    let (bindings, mut alloc) = bind(inst)?;
    let mut f = inst.cnf.clone();
    for b in &bindings {
        let negative = b.predicate.eager_negative(&b.encoding, &mut alloc);
        f.extend(b.encoding.pair.positive.clauses.clauses().cloned());
        f.extend(negative.clauses.clauses().cloned());
    }
    f.set_num_vars(alloc.last());
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    /// The six-node example graph with `¬reach` and edges a, c, h asserted.
    const EXAMPLE: &str = "p smmt 9 4
-9 0
1 0
3 0
8 0
digraph 0 6
edge 0 0 1 1
edge 0 1 3 3
edge 0 3 5 8
edge 0 0 2 2
edge 0 3 2 5
edge 0 2 4 4
edge 0 4 3 6
edge 0 4 5 7
reach 0 0 5 9
";

    #[test]
    fn six_node_example_is_refuted_through_a_theory_lemma() {
        let inst = parse_instance(EXAMPLE).unwrap();
        let ProveOutcome::Unsat(proof) = prove(&inst, &ProveConfig::default()).unwrap() else {
            panic!("expected UNSAT")
        };
        let lemmas: Vec<_> = proof.certificate.theory_lemmas().map(|r| r.clause.to_dimacs()).collect();
        assert!(lemmas.contains(&vec![-1, -3, -8, 9]));
        assert_eq!(proof.report.direct_horn, 1);
        assert!(drat::check_drat(&proof.final_cnf, &proof.drat).is_verified());
        assert_eq!(proof.drat.count(RecordKind::TheoryLemma), 0);
    }

    #[test]
    fn mixed_reach_facts_verify_both_routes() {
        // reach(s,t) is asserted while c and d are off, which cuts t off;
        // the refutation needs a negative reach lemma. The second predicate
        // reach(s,v1) plays no part.
        let text = "p smmt 10 3
9 0
-3 0
-4 0
digraph 0 6
edge 0 0 1 1
edge 0 1 3 3
edge 0 3 5 8
edge 0 0 2 2
edge 0 3 2 5
edge 0 2 4 4
edge 0 4 3 6
edge 0 4 5 7
reach 0 0 5 9
reach 0 0 1 10
";
        let inst = parse_instance(text).unwrap();
        let ProveOutcome::Unsat(proof) = prove(&inst, &ProveConfig::default()).unwrap() else {
            panic!("expected UNSAT")
        };
        assert!(proof.report.instantiated >= 1);
        assert!(proof.report.core_theory_lemmas <= proof.report.emitted_theory_lemmas);
    }

    #[test]
    fn satisfiable_instance_yields_model() {
        let text = EXAMPLE.replace("-9 0", "9 0");
        let inst = parse_instance(&text).unwrap();
        let ProveOutcome::Sat(model) = prove(&inst, &ProveConfig::default()).unwrap() else {
            panic!("expected SAT")
        };
        assert!(model[9]);
        let eager = eager_encode(&inst).unwrap();
        assert!(sat::solve_cnf(&eager, Default::default()).is_sat());
        let unsat = parse_instance(EXAMPLE).unwrap();
        assert!(sat::solve_cnf(&eager_encode(&unsat).unwrap(), Default::default()).is_unsat());
    }

    #[test]
    fn no_bindings_is_identity() {
        let inst = parse_instance("p smmt 2 1\n1 -2 0\n").unwrap();
        assert_eq!(eager_encode(&inst).unwrap(), inst.cnf);
    }
}
