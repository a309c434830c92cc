//! s-t maximum flow over enabled edges with bit-vector capacities.

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::cnf::{Lit, Var, VarAllocator};
use crate::horn::MonotonicDefinition;
use crate::kernel::Polarity;
use crate::theory::bv::{gt_implies, le_implies, sum_vectors, Bit, BitVectorTerm, Emitter};
use crate::theory::graph::{GraphError, Node, SymbolicGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaxFlowError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge {0} has no capacity")]
    MissingCapacity(usize),
    #[error("source and target coincide")]
    SourceIsTarget,
    #[error("variable {0} is used with both polarities")]
    BothSides(Var),
    #[error("predicate variable {0} is also an input")]
    PredicateIsInput(Var),
    #[error("the flow reaches the threshold")]
    FlowReachesThreshold,
    #[error("the flow is below the threshold")]
    FlowBelowThreshold,
}

/// Result of a (possibly truncated) max-flow computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flow {
    pub value: u128,
    /// Flow per edge, in edge order.
    pub edges: Vec<u128>,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

/// Shortest-augmenting-path max flow with deterministic edge order. With
/// `limit`, stops as soon as the value reaches it (never exceeding it).
pub fn edmonds_karp(nodes: u32, arcs: &[(Node, Node, u128)], s: Node, t: Node, limit: Option<u128>) -> Flow {
    let n = nodes as usize;
    let mut flow = vec![0u128; arcs.len()];
    // Residual moves: (edge, forward?).
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for (i, &(u, v, _)) in arcs.iter().enumerate() {
        if u != v {
            adj[u as usize].push((i, true));
            adj[v as usize].push((i, false));
        }
    }
    let mut value = 0u128;
    loop {
        let mut pred: Vec<Option<(usize, bool)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[s as usize] = true;
        let mut queue = VecDeque::from([s as usize]);
        while let Some(u) = queue.pop_front() {
            for &(i, fwd) in &adj[u] {
                let (a, b, cap) = arcs[i];
                let (next, room) = if fwd {
                    (b as usize, cap - flow[i])
                } else {
                    (a as usize, flow[i])
                };
                if room > 0 && !seen[next] {
                    seen[next] = true;
                    pred[next] = Some((i, fwd));
                    queue.push_back(next);
                }
            }
        }
        let remaining = limit.map(|l| l.saturating_sub(value));
        if !seen[t as usize] || remaining == Some(0) {
            return Flow {
                value,
                edges: flow,
                source_side: seen,
            };
        }
        let mut bottleneck = remaining.unwrap_or(u128::MAX);
        let mut v = t as usize;
        while let Some((i, fwd)) = pred[v] {
            let (a, b, cap) = arcs[i];
            bottleneck = bottleneck.min(if fwd { cap - flow[i] } else { flow[i] });
            v = if fwd { a as usize } else { b as usize };
        }
        let mut v = t as usize;
        while let Some((i, fwd)) = pred[v] {
            let (a, b, _) = arcs[i];
            if fwd {
                flow[i] += bottleneck;
                v = a as usize;
            } else {
                flow[i] -= bottleneck;
                v = b as usize;
            }
        }
        value += bottleneck;
    }
}

/// `maxflow(source → target) ≥ threshold` over enabled edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxFlowPredicate {
    pub graph: Arc<SymbolicGraph>,
    pub source: Node,
    pub target: Node,
    pub threshold: BitVectorTerm,
    pub predicate_var: Var,
}

/// Flow bits per edge; `None` for edges that can never carry useful flow
/// (self-loops, edges into the source, edges out of the target).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowAux {
    pub flow_bits: Vec<Option<Vec<Var>>>,
}

/// Source-side atoms per node, cut markers and cut-capacity bits per edge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CutAux {
    pub side: Vec<Var>,
    pub incut: Vec<Var>,
    pub cut_bits: Vec<Vec<Var>>,
}

/// The flow-based definition of `¬p`.
#[derive(Clone, Debug)]
pub struct FlowEncoding {
    pub definition: MonotonicDefinition,
    pub aux: FlowAux,
}

/// The cut-based definition of `p`.
#[derive(Clone, Debug)]
pub struct CutEncoding {
    pub definition: MonotonicDefinition,
    pub aux: CutAux,
}

impl MaxFlowPredicate {
    pub fn new(
        graph: Arc<SymbolicGraph>,
        source: Node,
        target: Node,
        threshold: BitVectorTerm,
        predicate_var: Var,
    ) -> Result<MaxFlowPredicate, MaxFlowError> {
        graph.check_node(source)?;
        graph.check_node(target)?;
        if source == target {
            return Err(MaxFlowError::SourceIsTarget);
        }
        if let Some(i) = graph.edges().iter().position(|e| e.capacity.is_none()) {
            return Err(MaxFlowError::MissingCapacity(i));
        }
        let p = MaxFlowPredicate {
            graph,
            source,
            target,
            threshold,
            predicate_var,
        };
        p.inputs()?;
        Ok(p)
    }

    fn capacity(&self, i: usize) -> &BitVectorTerm {
        self.graph.edges()[i]
            .capacity
            .as_ref()
            .expect("capacities checked at construction")
    }

    /// Edges and capacity bits are positive inputs, threshold bits negative.
    pub fn inputs(&self) -> Result<Vec<(Var, Polarity)>, MaxFlowError> {
        let mut out: Vec<(Var, Polarity)> = Vec::new();
        let positive = self.graph.edges().iter().flat_map(|e| {
            std::iter::once(e.var).chain(e.capacity.iter().flat_map(|c| c.vars()))
        });
        for (v, p) in positive
            .map(|v| (v, Polarity::Positive))
            .chain(self.threshold.vars().into_iter().map(|v| (v, Polarity::Negative)))
        {
            if v == self.predicate_var {
                return Err(MaxFlowError::PredicateIsInput(v));
            }
            match out.iter().find(|&&(u, _)| u == v) {
                Some(&(_, q)) if q != p => return Err(MaxFlowError::BothSides(v)),
                Some(_) => {}
                None => out.push((v, p)),
            }
        }
        Ok(out)
    }

    fn arcs(&self, values: &dyn Fn(Var) -> bool) -> Vec<(Node, Node, u128)> {
        self.graph
            .edges()
            .iter()
            .map(|e| {
                let cap = if values(e.var) {
                    e.capacity.as_ref().map_or(0, |c| c.value(values))
                } else {
                    0
                };
                (e.from, e.to, cap)
            })
            .collect()
    }

    pub fn max_flow(&self, values: &dyn Fn(Var) -> bool) -> Flow {
        edmonds_karp(self.graph.nodes(), &self.arcs(values), self.source, self.target, None)
    }

    pub fn eval(&self, values: &dyn Fn(Var) -> bool) -> bool {
        let z = self.threshold.value(values);
        let f = edmonds_karp(self.graph.nodes(), &self.arcs(values), self.source, self.target, Some(z));
        f.value >= z
    }

    /// A feasible flow of value exactly the threshold.
    pub fn flow_witness(&self, values: &dyn Fn(Var) -> bool) -> Result<Flow, MaxFlowError> {
        let z = self.threshold.value(values);
        let f = edmonds_karp(self.graph.nodes(), &self.arcs(values), self.source, self.target, Some(z));
        if f.value < z {
            return Err(MaxFlowError::FlowBelowThreshold);
        }
        Ok(f)
    }

    /// A minimum cut, as the source side of the final residual graph.
    pub fn cut_witness(&self, values: &dyn Fn(Var) -> bool) -> Result<Vec<bool>, MaxFlowError> {
        let z = self.threshold.value(values);
        let f = self.max_flow(values);
        if f.value >= z {
            return Err(MaxFlowError::FlowReachesThreshold);
        }
        Ok(f.source_side)
    }

    fn carries_flow(&self, i: usize) -> bool {
        let e = &self.graph.edges()[i];
        e.from != e.to && e.to != self.source && e.from != self.target
    }

    /// Definition of `¬p`: any flow assignment violating a capacity, a
    /// conservation bound (outflow ≤ inflow) or the sink bound forces `¬p`.
    pub fn flow_definition(&self, alloc: &mut VarAllocator) -> Result<FlowEncoding, MaxFlowError> {
        let inputs = self.inputs()?;
        let head = Lit::neg(self.predicate_var);
        let edges = self.graph.edges();
        let mut em = Emitter::new(alloc);
        let mut flows: Vec<Option<BitVectorTerm>> = Vec::with_capacity(edges.len());
        let mut flow_bits = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            if !self.carries_flow(i) {
                flows.push(None);
                flow_bits.push(None);
                continue;
            }
            let cap = self.capacity(i);
            let f: Vec<Var> = (0..cap.width()).map(|_| em.alloc.fresh()).collect();
            let y: Vec<Bit> = (0..cap.width()).map(|_| em.fresh()).collect();
            for (k, &yk) in y.iter().enumerate() {
                em.clause(&[(yk, false), (Bit::Var(e.var), true)]);
                em.clause(&[(yk, false), (cap.bit(k), true)]);
            }
            let fv = BitVectorTerm::from_vars(&f);
            gt_implies(&fv, &BitVectorTerm::from_bits(y), head, &mut em);
            flows.push(Some(fv));
            flow_bits.push(Some(f));
        }
        let incident = |node: Node, outgoing: bool| -> Vec<BitVectorTerm> {
            edges
                .iter()
                .zip(&flows)
                .filter(|(e, _)| if outgoing { e.from == node } else { e.to == node })
                .filter_map(|(_, f)| f.clone())
                .collect()
        };
        for j in 0..self.graph.nodes() {
            if j == self.source || j == self.target {
                continue;
            }
            let out = sum_vectors(&incident(j, true), &mut em);
            let inflow = sum_vectors(&incident(j, false), &mut em);
            gt_implies(&out, &inflow, head, &mut em);
        }
        let sink = sum_vectors(&incident(self.target, false), &mut em);
        gt_implies(&self.threshold, &sink, head, &mut em);
        let mut f = em.into_formula();
        f.set_num_vars(self.predicate_var);
        Ok(FlowEncoding {
            definition: MonotonicDefinition::new(f, head, inputs),
            aux: FlowAux { flow_bits },
        })
    }

    /// Definition of `p`: unless some cut separates the target from the
    /// source and its enabled capacity stays below the threshold, `p` holds.
    pub fn cut_definition(&self, alloc: &mut VarAllocator) -> Result<CutEncoding, MaxFlowError> {
        let inputs = self.inputs()?;
        let head = Lit::pos(self.predicate_var);
        let edges = self.graph.edges();
        let side = alloc.fresh_vec(self.graph.nodes() as usize);
        let incut = alloc.fresh_vec(edges.len());
        let mut em = Emitter::new(alloc);
        em.clause(&[(Bit::Var(side[self.source as usize]), true)]);
        for (i, e) in edges.iter().enumerate() {
            em.clause(&[
                (Bit::Var(side[e.from as usize]), false),
                (Bit::Var(e.var), false),
                (Bit::Var(incut[i]), true),
                (Bit::Var(side[e.to as usize]), true),
            ]);
        }
        em.clause(&[(Bit::Var(side[self.target as usize]), false), (Bit::Var(head.var()), true)]);
        let mut cut_bits = Vec::with_capacity(edges.len());
        let mut terms = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let cap = self.capacity(i);
            let x: Vec<Var> = (0..cap.width()).map(|_| em.alloc.fresh()).collect();
            for (k, &xk) in x.iter().enumerate() {
                em.clause(&[
                    (Bit::Var(e.var), false),
                    (Bit::Var(incut[i]), false),
                    (cap.bit(k), false),
                    (Bit::Var(xk), true),
                ]);
            }
            terms.push(BitVectorTerm::from_vars(&x));
            cut_bits.push(x);
        }
        let total = sum_vectors(&terms, &mut em);
        le_implies(&self.threshold, &total, head, &mut em);
        let mut f = em.into_formula();
        f.set_num_vars(self.predicate_var);
        Ok(CutEncoding {
            definition: MonotonicDefinition::new(f, head, inputs),
            aux: CutAux {
                side,
                incut,
                cut_bits,
            },
        })
    }

    /// Seed literals for the flow definition's auxiliaries.
    pub fn flow_seed(&self, aux: &FlowAux, values: &dyn Fn(Var) -> bool) -> Result<Vec<Lit>, MaxFlowError> {
        let flow = self.flow_witness(values)?;
        Ok(aux
            .flow_bits
            .iter()
            .zip(&flow.edges)
            .filter_map(|(bits, &f)| bits.as_ref().map(|b| (b, f)))
            .flat_map(|(bits, f)| {
                bits.iter()
                    .enumerate()
                    .map(move |(k, &v)| Lit::new(v, k < 128 && (f >> k) & 1 == 1))
            })
            .collect())
    }

    /// Seed literals for the cut definition's auxiliaries.
    pub fn cut_seed(&self, aux: &CutAux, values: &dyn Fn(Var) -> bool) -> Result<Vec<Lit>, MaxFlowError> {
        let source_side = self.cut_witness(values)?;
        let mut seed: Vec<Lit> = aux
            .side
            .iter()
            .zip(&source_side)
            .map(|(&v, &s)| Lit::new(v, s))
            .collect();
        for (i, e) in self.graph.edges().iter().enumerate() {
            let crossing = source_side[e.from as usize] && !source_side[e.to as usize] && values(e.var);
            seed.push(Lit::new(aux.incut[i], crossing));
            let cap = if crossing { self.capacity(i).value(values) } else { 0 };
            for (k, &x) in aux.cut_bits[i].iter().enumerate() {
                seed.push(Lit::new(x, (cap >> k) & 1 == 1));
            }
        }
        Ok(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{reduce, Assignment, Clause};
    use crate::horn::complete_witness;
    use crate::sat::solve_cnf;

    /// Minimum over all s-t cuts of the enabled capacity leaving the source
    /// side: an oracle independent of augmenting paths.
    fn min_cut_oracle(nodes: u32, arcs: &[(Node, Node, u128)], s: Node, t: Node) -> u128 {
        (0..1u32 << nodes)
            .filter(|m| m >> s & 1 == 1 && m >> t & 1 == 0)
            .map(|m| {
                arcs.iter()
                    .filter(|(u, v, _)| m >> u & 1 == 1 && m >> v & 1 == 0)
                    .map(|a| a.2)
                    .sum()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn max_flow_matches_min_cut_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let nodes = 6;
            let arcs: Vec<(Node, Node, u128)> = (0..rng.gen_range(0..14))
                .map(|_| (rng.gen_range(0..nodes), rng.gen_range(0..nodes), rng.gen_range(0..5)))
                .collect();
            let f = edmonds_karp(nodes, &arcs, 0, 5, None);
            assert_eq!(f.value, min_cut_oracle(nodes, &arcs, 0, 5));
            let truncated = edmonds_karp(nodes, &arcs, 0, 5, Some(2));
            assert_eq!(truncated.value, f.value.min(2));
        }
    }

    fn two_paths() -> MaxFlowPredicate {
        // s=0 → 1 → t=3 and s → 2 → t, unit capacities; edges 1..4; z const.
        let mut g = SymbolicGraph::new(4);
        for (i, (u, v)) in [(0, 1), (1, 3), (0, 2), (2, 3)].into_iter().enumerate() {
            let e = g.add_edge(u, v, i as Var + 1).unwrap();
            g.set_capacity(e, BitVectorTerm::constant(1, 1));
        }
        MaxFlowPredicate::new(Arc::new(g), 0, 3, BitVectorTerm::constant(2, 2), 5).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let p = two_paths();
        assert!(p.eval(&|_| true));
        assert!(!p.eval(&|v| v != 2));
        let f = p.flow_witness(&|_| true).unwrap();
        assert_eq!(f.edges, vec![1, 1, 1, 1]);
        assert_eq!(p.cut_witness(&|v| v != 2).unwrap(), vec![true, true, false, false]);

        let mut g = SymbolicGraph::new(3);
        for (i, (u, v)) in [(0, 1), (1, 2)].into_iter().enumerate() {
            let e = g.add_edge(u, v, i as Var + 1).unwrap();
            g.set_capacity(e, BitVectorTerm::constant(2, 3));
        }
        let p = MaxFlowPredicate::new(Arc::new(g), 0, 2, BitVectorTerm::constant(2, 2), 3).unwrap();
        assert_eq!(p.flow_witness(&|_| true).unwrap().edges, vec![2, 2]);
        let zero = MaxFlowPredicate {
            threshold: BitVectorTerm::constant(2, 0),
            ..p
        };
        assert_eq!(zero.flow_witness(&|_| true).unwrap().edges, vec![0, 0]);
    }

    fn entails(d: &MonotonicDefinition, m: &Assignment) -> bool {
        let mut r = reduce(&d.clauses, m);
        r.add_clause(Clause::new([!d.head]));
        solve_cnf(&r, Default::default()).is_unsat()
    }

    /// Exhaustive check of both definitions, plus witness completion for
    /// every lemma side.
    fn check_definitions(p: &MaxFlowPredicate) {
        let inputs = p.inputs().unwrap();
        let mut alloc = VarAllocator::new(p.predicate_var.max(inputs.iter().map(|i| i.0).max().unwrap()));
        let flow = p.flow_definition(&mut alloc).unwrap();
        let cut = p.cut_definition(&mut alloc).unwrap();
        flow.definition.lint().unwrap();
        cut.definition.lint().unwrap();
        for bits in 0..(1u32 << inputs.len()) {
            let lits: Vec<Lit> = inputs
                .iter()
                .enumerate()
                .map(|(k, &(v, _))| Lit::new(v, bits >> k & 1 == 1))
                .collect();
            let m = Assignment::from_lits(lits.iter().copied()).unwrap();
            let val = |v: Var| m.is_true(Lit::pos(v));
            let truth = p.eval(&val);
            assert_eq!(entails(&cut.definition, &m), truth, "cut {bits:b}");
            assert_eq!(entails(&flow.definition, &m), !truth, "flow {bits:b}");
            assert!(solve_cnf(&reduce(&cut.definition.clauses, &m), Default::default()).is_sat());
            assert!(solve_cnf(&reduce(&flow.definition.clauses, &m), Default::default()).is_sat());
            if truth {
                let seed = p.flow_seed(&flow.aux, &val).unwrap();
                complete_witness(&flow.definition, Lit::pos(p.predicate_var), &lits, &seed).unwrap();
            } else {
                let seed = p.cut_seed(&cut.aux, &val).unwrap();
                let w = complete_witness(&cut.definition, Lit::neg(p.predicate_var), &lits, &seed).unwrap();
                let wset: std::collections::HashSet<Lit> = w.into_iter().collect();
                assert!(seed.iter().all(|l| wset.contains(l)), "cut seed rejected {bits:b}");
            }
        }
    }

    #[test]
    fn single_edge_definitions_are_exact() {
        let mut g = SymbolicGraph::new(2);
        let e = g.add_edge(0, 1, 1).unwrap();
        g.set_capacity(e, BitVectorTerm::from_vars(&[2]));
        let p = MaxFlowPredicate::new(Arc::new(g), 0, 1, BitVectorTerm::from_vars(&[3]), 4).unwrap();
        check_definitions(&p);
    }

    #[test]
    fn small_graph_definitions_are_exact() {
        // Diamond with a back edge, a self-loop, an edge into the source;
        // 1-bit capacities on two edges, 2-bit threshold.
        let mut g = SymbolicGraph::new(4);
        let specs: [(Node, Node, Var, BitVectorTerm); 6] = [
            (0, 1, 1, BitVectorTerm::from_vars(&[7])),
            (0, 2, 2, BitVectorTerm::constant(1, 1)),
            (1, 3, 3, BitVectorTerm::constant(1, 1)),
            (2, 3, 4, BitVectorTerm::from_vars(&[8])),
            (1, 1, 5, BitVectorTerm::constant(1, 1)),
            (3, 0, 6, BitVectorTerm::constant(1, 1)),
        ];
        for (u, v, var, cap) in specs {
            let e = g.add_edge(u, v, var).unwrap();
            g.set_capacity(e, cap);
        }
        let p = MaxFlowPredicate::new(Arc::new(g), 0, 3, BitVectorTerm::from_vars(&[9, 10]), 11).unwrap();
        check_definitions(&p);
    }
}
