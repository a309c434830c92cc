//! SAT modulo monotonic theories with checkable UNSAT proofs.
//!
//! A CDCL solver is paired with a theory kernel for monotonic predicates
//! (graph reachability, bit-vector comparisons, maximum flow). Every theory
//! lemma it emits is later discharged against a Horn definition of its
//! predicate, so UNSAT answers come with a plain DRAT proof over an
//! extended CNF.

pub mod cnf;
pub mod dimacs;
pub mod drat;
pub mod horn;
pub mod instance;
pub mod kernel;
pub mod netbench;
pub mod pipeline;
pub mod sat;
pub mod theory;

pub use cnf::{Assignment, Clause, CnfFormula, Lit, Var, VarAllocator};
pub use dimacs::{parse_dimacs, write_dimacs, DimacsError};
pub use drat::{
    backward_check, check_drat, read_certificate, write_certificate, ProofCertificate, ProofRecord, RecordKind,
    Verdict,
};
pub use horn::{DefinitionPair, MonotonicDefinition};
pub use instance::{parse_instance, write_instance, Instance, InstanceError};
pub use kernel::{Polarity, TheoryLemma};
pub use pipeline::{eager_encode, prove, solve_instance, PipelineError, ProveConfig, ProveOutcome, ProveReport};
pub use sat::{solve_cnf, SolveOutcome, SolverConfig, SolverStats};
pub use theory::TheoryPredicate;
