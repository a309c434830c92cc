//! Reachability over symbolic directed graphs.

use std::collections::VecDeque;
use std::sync::Arc;

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Lit, Var, VarAllocator};
use crate::horn::MonotonicDefinition;
use crate::kernel::Polarity;
use crate::theory::bv::BitVectorTerm;

pub type Node = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
    pub var: Var,
    pub capacity: Option<BitVectorTerm>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {node} out of range (graph has {nodes} nodes)")]
    NodeOutOfRange { node: Node, nodes: u32 },
    #[error("edge variable {0} used twice")]
    DuplicateEdgeVar(Var),
    #[error("predicate variable {0} is also an edge variable")]
    PredicateIsInput(Var),
    #[error("target is reachable")]
    Reachable,
    #[error("target is unreachable")]
    Unreachable,
}

/// A directed graph whose edges are switched on and off by variables.
/// Parallel edges and self-loops are allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolicGraph {
    nodes: u32,
    edges: Vec<Edge>,
}

impl SymbolicGraph {
    pub fn new(nodes: u32) -> SymbolicGraph {
        SymbolicGraph {
            nodes,
            edges: Vec::new(),
        }
    }

    pub fn nodes(&self) -> u32 {
        self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn check_node(&self, node: Node) -> Result<(), GraphError> {
        if node < self.nodes {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node,
                nodes: self.nodes,
            })
        }
    }

    pub fn add_edge(&mut self, from: Node, to: Node, var: Var) -> Result<usize, GraphError> {
        self.check_node(from)?;
        self.check_node(to)?;
        if self.edges.iter().any(|e| e.var == var) {
            return Err(GraphError::DuplicateEdgeVar(var));
        }
        self.edges.push(Edge {
            from,
            to,
            var,
            capacity: None,
        });
        Ok(self.edges.len() - 1)
    }

    pub fn set_capacity(&mut self, edge: usize, capacity: BitVectorTerm) {
        self.edges[edge].capacity = Some(capacity);
    }

    pub fn edge_by_var(&self, var: Var) -> Option<usize> {
        self.edges.iter().position(|e| e.var == var)
    }

    /// Outgoing edge indices per node, in edge order.
    pub fn out_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes as usize];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.from as usize].push(i);
        }
        out
    }

    /// Breadth-first search over enabled edges. Returns, per node, the edge
    /// through which it was first reached (`Some(None)` for `src`).
    fn bfs(&self, src: Node, enabled: &dyn Fn(Var) -> bool) -> Vec<Option<Option<usize>>> {
        let out = self.out_edges();
        let mut parent = vec![None; self.nodes as usize];
        parent[src as usize] = Some(None);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &i in &out[u as usize] {
                let e = &self.edges[i];
                if parent[e.to as usize].is_none() && enabled(e.var) {
                    parent[e.to as usize] = Some(Some(i));
                    queue.push_back(e.to);
                }
            }
        }
        parent
    }

    pub fn reachable_from(&self, src: Node, enabled: &dyn Fn(Var) -> bool) -> Vec<bool> {
        self.bfs(src, enabled).iter().map(Option::is_some).collect()
    }
}

pub fn eval_reach(g: &SymbolicGraph, src: Node, dst: Node, enabled: &dyn Fn(Var) -> bool) -> bool {
    g.reachable_from(src, enabled)[dst as usize]
}

/// Edge variables of a shortest enabled path; ties go to the lowest edge
/// index.
pub fn path_witness(
    g: &SymbolicGraph,
    src: Node,
    dst: Node,
    enabled: &dyn Fn(Var) -> bool,
) -> Result<Vec<Var>, GraphError> {
    let parent = g.bfs(src, enabled);
    let mut path = Vec::new();
    let mut v = dst;
    loop {
        match parent[v as usize] {
            None => return Err(GraphError::Unreachable),
            Some(None) => break,
            Some(Some(i)) => {
                path.push(g.edges[i].var);
                v = g.edges[i].from;
            }
        }
    }
    path.reverse();
    Ok(path)
}

/// Reachability status of every vertex, for a graph in which `dst` is not
/// reachable.
pub fn cut_witness(
    g: &SymbolicGraph,
    src: Node,
    dst: Node,
    enabled: &dyn Fn(Var) -> bool,
) -> Result<Vec<bool>, GraphError> {
    let status = g.reachable_from(src, enabled);
    if status[dst as usize] {
        return Err(GraphError::Reachable);
    }
    Ok(status)
}

/// Disabled edges leaving the reachable set: the minimal explanation of
/// unreachability.
pub fn crossing_edges(g: &SymbolicGraph, status: &[bool]) -> Vec<Var> {
    g.edges
        .iter()
        .filter(|e| status[e.from as usize] && !status[e.to as usize])
        .map(|e| e.var)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachPredicate {
    pub graph: Arc<SymbolicGraph>,
    pub source: Node,
    pub target: Node,
    pub predicate_var: Var,
}

/// A positive reachability definition together with its vertex atoms.
#[derive(Clone, Debug)]
pub struct ReachEncoding {
    pub definition: MonotonicDefinition,
    pub vertex_atoms: Vec<Var>,
}

impl ReachEncoding {
    /// The vertex-status witness as literals over the vertex atoms.
    pub fn witness(&self, status: &[bool]) -> Vec<Lit> {
        self.vertex_atoms
            .iter()
            .zip(status)
            .map(|(&v, &s)| Lit::new(v, s))
            .collect()
    }
}

impl ReachPredicate {
    pub fn new(graph: Arc<SymbolicGraph>, source: Node, target: Node, predicate_var: Var) -> Result<ReachPredicate, GraphError> {
        graph.check_node(source)?;
        graph.check_node(target)?;
        if graph.edge_by_var(predicate_var).is_some() {
            return Err(GraphError::PredicateIsInput(predicate_var));
        }
        Ok(ReachPredicate {
            graph,
            source,
            target,
            predicate_var,
        })
    }

    pub fn inputs(&self) -> Vec<(Var, Polarity)> {
        self.graph
            .edges
            .iter()
            .map(|e| (e.var, Polarity::Positive))
            .collect()
    }

    pub fn eval(&self, enabled: &dyn Fn(Var) -> bool) -> bool {
        eval_reach(&self.graph, self.source, self.target, enabled)
    }

    /// One atom per vertex (numbered from the allocator in node order);
    /// one propagation clause per edge in edge order, then the target link
    /// and the source unit. Exactly `|E| + 2` clauses, all Horn.
    pub fn positive_definition(&self, alloc: &mut VarAllocator) -> ReachEncoding {
        let g = &self.graph;
        let r = alloc.fresh_vec(g.nodes as usize);
        let mut f = CnfFormula::new(alloc.last());
        for e in &g.edges {
            f.add_clause(Clause::new([
                Lit::neg(r[e.from as usize]),
                Lit::neg(e.var),
                Lit::pos(r[e.to as usize]),
            ]));
        }
        f.add_clause(Clause::new([
            Lit::neg(r[self.target as usize]),
            Lit::pos(self.predicate_var),
        ]));
        f.add_clause(Clause::new([Lit::pos(r[self.source as usize])]));
        f.set_num_vars(self.predicate_var);
        ReachEncoding {
            definition: MonotonicDefinition::new(f, Lit::pos(self.predicate_var), self.inputs()),
            vertex_atoms: r,
        }
    }

    /// A definition of `¬p` for eager bit-blasting: `u_i^k` states that node
    /// `i` cannot reach the target within `k` steps, and `g_e^k` that edge
    /// `e` continues a path of at most `k` steps.
    pub fn negative_definition(&self, alloc: &mut VarAllocator) -> MonotonicDefinition {
        let g = &self.graph;
        let n = g.nodes as usize;
        let layers = n.max(1);
        let u: Vec<Vec<Var>> = (0..layers).map(|_| alloc.fresh_vec(n)).collect();
        let mut f = CnfFormula::new(alloc.last());
        let t = self.target as usize;
        for i in (0..n).filter(|&i| i != t) {
            f.add_clause(Clause::new([Lit::pos(u[0][i])]));
        }
        for k in 1..layers {
            let gate: Vec<Var> = alloc.fresh_vec(g.edges.len());
            for (ei, e) in g.edges.iter().enumerate() {
                f.add_clause(Clause::new([Lit::neg(gate[ei]), Lit::pos(e.var)]));
                f.add_clause(Clause::new([Lit::neg(gate[ei]), Lit::neg(u[k - 1][e.to as usize])]));
            }
            for i in (0..n).filter(|&i| i != t) {
                let mut lits = vec![Lit::pos(u[k][i])];
                lits.extend(
                    g.edges
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| e.from as usize == i)
                        .map(|(ei, _)| Lit::pos(gate[ei])),
                );
                f.add_clause(Clause::new(lits));
            }
        }
        f.add_clause(Clause::new([
            Lit::neg(u[layers - 1][self.source as usize]),
            Lit::neg(self.predicate_var),
        ]));
        f.set_num_vars(alloc.last().max(self.predicate_var));
        MonotonicDefinition::new(f, Lit::neg(self.predicate_var), self.inputs())
    }
}
