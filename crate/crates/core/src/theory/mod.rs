//! Monotonic theory predicates.

pub mod bv;
pub mod graph;
pub mod maxflow;

use thiserror::Error;

use crate::cnf::{Lit, Var, VarAllocator};
use crate::horn::{DefinitionPair, MonotonicDefinition};
use crate::kernel::Polarity;
use bv::{BvError, CmpPredicate, SumCmpPredicate};
use graph::{GraphError, ReachPredicate};
use maxflow::{CutAux, FlowAux, MaxFlowError, MaxFlowPredicate};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredicateError {
    #[error(transparent)]
    Bv(#[from] BvError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    MaxFlow(#[from] MaxFlowError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryPredicate {
    Reach(ReachPredicate),
    Cmp(CmpPredicate),
    SumCmp(SumCmpPredicate),
    MaxFlow(MaxFlowPredicate),
}

/// Definition auxiliaries that per-theory witness generators know how to
/// fill in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessHints {
    None,
    Reach { vertex_atoms: Vec<Var> },
    MaxFlow { flow: FlowAux, cut: CutAux },
}

#[derive(Clone, Debug)]
pub struct PredicateEncoding {
    pub pair: DefinitionPair,
    pub hints: WitnessHints,
}

impl TheoryPredicate {
    pub fn predicate_var(&self) -> Var {
        match self {
            TheoryPredicate::Reach(p) => p.predicate_var,
            TheoryPredicate::Cmp(p) => p.predicate_var,
            TheoryPredicate::SumCmp(p) => p.predicate_var,
            TheoryPredicate::MaxFlow(p) => p.predicate_var,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TheoryPredicate::Reach(_) => "reach",
            TheoryPredicate::Cmp(_) => "bv_cmp",
            TheoryPredicate::SumCmp(_) => "bv_sum_gt",
            TheoryPredicate::MaxFlow(_) => "maxflow_ge",
        }
    }

    /// Input variables with their polarity, each listed once.
    pub fn inputs(&self) -> Vec<(Var, Polarity)> {
        let checked = match self {
            TheoryPredicate::Reach(p) => Ok(p.inputs()),
            TheoryPredicate::Cmp(p) => p.inputs().map_err(PredicateError::from),
            TheoryPredicate::SumCmp(p) => p.inputs().map_err(PredicateError::from),
            TheoryPredicate::MaxFlow(p) => p.inputs().map_err(PredicateError::from),
        };
        checked.expect("inputs are validated when predicates are built")
    }

    pub fn eval(&self, values: &dyn Fn(Var) -> bool) -> bool {
        match self {
            TheoryPredicate::Reach(p) => p.eval(values),
            TheoryPredicate::Cmp(p) => p.eval(values),
            TheoryPredicate::SumCmp(p) => p.eval(values),
            TheoryPredicate::MaxFlow(p) => p.eval(values),
        }
    }

    /// Builds the definitions used to discharge lemmas. Reachability gets
    /// only its positive side; every other predicate gets both.
    pub fn encode(&self, alloc: &mut VarAllocator) -> Result<PredicateEncoding, PredicateError> {
        Ok(match self {
            TheoryPredicate::Reach(p) => {
                let enc = p.positive_definition(alloc);
                PredicateEncoding {
                    pair: DefinitionPair {
                        positive: enc.definition,
                        negative: None,
                    },
                    hints: WitnessHints::Reach {
                        vertex_atoms: enc.vertex_atoms,
                    },
                }
            }
            TheoryPredicate::Cmp(p) => PredicateEncoding {
                pair: DefinitionPair {
                    positive: p.positive_definition(alloc),
                    negative: Some(p.negative_definition(alloc)),
                },
                hints: WitnessHints::None,
            },
            TheoryPredicate::SumCmp(p) => PredicateEncoding {
                pair: DefinitionPair {
                    positive: p.definition(Polarity::Positive, alloc)?,
                    negative: Some(p.definition(Polarity::Negative, alloc)?),
                },
                hints: WitnessHints::None,
            },
            TheoryPredicate::MaxFlow(p) => {
                let cut = p.cut_definition(alloc)?;
                let flow = p.flow_definition(alloc)?;
                PredicateEncoding {
                    pair: DefinitionPair {
                        positive: cut.definition,
                        negative: Some(flow.definition),
                    },
                    hints: WitnessHints::MaxFlow {
                        flow: flow.aux,
                        cut: cut.aux,
                    },
                }
            }
        })
    }

    /// A definition of `¬p` for eager bit-blasting, which needs both sides
    /// even where lazy solving does not.
    pub fn eager_negative(&self, enc: &PredicateEncoding, alloc: &mut VarAllocator) -> MonotonicDefinition {
        match (&enc.pair.negative, self) {
            (Some(d), _) => d.clone(),
            (None, TheoryPredicate::Reach(p)) => p.negative_definition(alloc),
            (None, _) => unreachable!("only reachability is one-sided"),
        }
    }

    /// Witness seed for a lemma concluding `head`, given the adversarial
    /// completion `values` of its antecedent. Empty when the theory has no
    /// specialised generator; witness completion then solves for one.
    pub fn witness_seed(&self, hints: &WitnessHints, head: Lit, values: &dyn Fn(Var) -> bool) -> Vec<Lit> {
        match (self, hints) {
            (TheoryPredicate::Reach(p), WitnessHints::Reach { vertex_atoms }) if !head.is_positive() => {
                graph::cut_witness(&p.graph, p.source, p.target, values)
                    .map(|status| {
                        vertex_atoms
                            .iter()
                            .zip(status)
                            .map(|(&v, s)| Lit::new(v, s))
                            .collect()
                    })
                    .unwrap_or_default()
            }
            (TheoryPredicate::MaxFlow(p), WitnessHints::MaxFlow { flow, cut }) => {
                let seed = if head.is_positive() {
                    p.flow_seed(flow, values)
                } else {
                    p.cut_seed(cut, values)
                };
                seed.unwrap_or_default()
            }
            _ => Vec::new(),
        }
    }
}
