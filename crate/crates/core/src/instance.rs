//! The line-oriented instance format: a DIMACS body plus graph, bit-vector
//! and predicate sections.
//!
//! ```text
//! p smmt <num_vars> <num_clauses>
//! <DIMACS clauses>
//! digraph <gid> <num_nodes>
//! edge <gid> <from> <to> <edge_var>
//! edge_cap <gid> <from> <to> <edge_var> <bvid>
//! reach <gid> <src> <dst> <pred_var>
//! bv <bvid> <width> <bit_var_lsb_first ...>
//! bv_const <bvid> <width> <unsigned_value>
//! bv_gt <pred_var> <bvid_a> <bvid_b>
//! bv_ge <pred_var> <bvid_a> <bvid_b>
//! bv_sum_gt <pred_var> <nA> <bvid...> <nB> <bvid...>
//! maxflow_ge <gid> <src> <dst> <threshold_bvid> <pred_var>
//! ```
//!
//! Sections may appear in any order; references are resolved after the
//! whole file is read.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Lit, Var};
use crate::theory::bv::{BitVectorTerm, CmpPredicate, Relation, SumCmpPredicate};
use crate::theory::graph::{Node, ReachPredicate, SymbolicGraph};
use crate::theory::maxflow::MaxFlowPredicate;
use crate::theory::{PredicateError, TheoryPredicate};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceErrorKind {
    #[error("missing `p smmt` header")]
    MissingHeader,
    #[error("malformed header")]
    BadHeader,
    #[error("unknown section `{0}`")]
    UnknownSection(String),
    #[error("expected an integer, found `{0}`")]
    BadToken(String),
    #[error("wrong number of fields")]
    WrongArity,
    #[error("clause not terminated by 0")]
    UnterminatedClause,
    #[error("header declares {declared} clauses, found {found}")]
    ClauseCount { declared: usize, found: usize },
    #[error("variable {var} outside the declared universe of {num_vars}")]
    VarOutOfRange { var: Var, num_vars: Var },
    #[error("graph {0} declared twice")]
    DuplicateGraph(u32),
    #[error("graph {0} is not declared")]
    UnknownGraph(u32),
    #[error("bit-vector {0} declared twice")]
    DuplicateVector(u32),
    #[error("bit-vector {0} is not declared")]
    UnknownVector(u32),
    #[error("width {width} does not match {found} bits")]
    WidthMismatch { width: usize, found: usize },
    #[error("constant {value} does not fit in {width} bits")]
    ConstantTooWide { width: usize, value: u128 },
    #[error("variable {0} is bound to more than one predicate")]
    DuplicateBinding(Var),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct InstanceError {
    pub line: usize,
    pub kind: InstanceErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeDecl {
    pub from: Node,
    pub to: Node,
    pub var: Var,
    pub capacity: Option<u32>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphDecl {
    pub nodes: u32,
    pub edges: Vec<EdgeDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VectorDecl {
    Bits(Vec<Var>),
    Const { width: usize, value: u128 },
}

impl VectorDecl {
    pub fn term(&self) -> BitVectorTerm {
        match self {
            VectorDecl::Bits(v) => BitVectorTerm::from_vars(v),
            VectorDecl::Const { width, value } => BitVectorTerm::constant(*width, *value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BindingDecl {
    Reach { gid: u32, src: Node, dst: Node, pred: Var },
    Cmp { pred: Var, relation: Relation, a: u32, b: u32 },
    SumGt { pred: Var, a: Vec<u32>, b: Vec<u32> },
    MaxFlowGe { gid: u32, src: Node, dst: Node, threshold: u32, pred: Var },
}

impl BindingDecl {
    pub fn predicate_var(&self) -> Var {
        match self {
            BindingDecl::Reach { pred, .. }
            | BindingDecl::Cmp { pred, .. }
            | BindingDecl::SumGt { pred, .. }
            | BindingDecl::MaxFlowGe { pred, .. } => *pred,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub cnf: CnfFormula,
    pub graphs: BTreeMap<u32, GraphDecl>,
    pub vectors: BTreeMap<u32, VectorDecl>,
    /// Bindings with the line they were declared on.
    pub bindings: Vec<(BindingDecl, usize)>,
}

impl Instance {
    pub fn new(cnf: CnfFormula) -> Instance {
        Instance {
            cnf,
            graphs: BTreeMap::new(),
            vectors: BTreeMap::new(),
            bindings: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> Var {
        self.cnf.num_vars()
    }

    /// Resolves the declarations into theory predicates, in binding order.
    pub fn predicates(&self) -> Result<Vec<TheoryPredicate>, InstanceError> {
        let vector = |id: u32, line: usize| {
            self.vectors.get(&id).map(VectorDecl::term).ok_or(InstanceError {
                line,
                kind: InstanceErrorKind::UnknownVector(id),
            })
        };
        let mut built: BTreeMap<u32, Arc<SymbolicGraph>> = BTreeMap::new();
        for (&gid, g) in &self.graphs {
            let mut sg = SymbolicGraph::new(g.nodes);
            for e in &g.edges {
                let err = |kind: InstanceErrorKind| InstanceError { line: e.line, kind };
                let i = sg
                    .add_edge(e.from, e.to, e.var)
                    .map_err(|x| err(PredicateError::from(x).into()))?;
                if let Some(c) = e.capacity {
                    sg.set_capacity(i, vector(c, e.line)?);
                }
            }
            built.insert(gid, Arc::new(sg));
        }
        let graph = |gid: u32, line: usize| {
            built.get(&gid).cloned().ok_or(InstanceError {
                line,
                kind: InstanceErrorKind::UnknownGraph(gid),
            })
        };
        let mut out = Vec::with_capacity(self.bindings.len());
        let mut bound = HashSet::new();
        for (b, line) in &self.bindings {
            let line = *line;
            let err = |e: PredicateError| InstanceError {
                line,
                kind: e.into(),
            };
            if !bound.insert(b.predicate_var()) {
                return Err(InstanceError {
                    line,
                    kind: InstanceErrorKind::DuplicateBinding(b.predicate_var()),
                });
            }
            let p = match b {
                BindingDecl::Reach { gid, src, dst, pred } => TheoryPredicate::Reach(
                    ReachPredicate::new(graph(*gid, line)?, *src, *dst, *pred).map_err(|e| err(e.into()))?,
                ),
                BindingDecl::Cmp { pred, relation, a, b } => TheoryPredicate::Cmp(
                    CmpPredicate::new(vector(*a, line)?, vector(*b, line)?, *relation, *pred)
                        .map_err(|e| err(e.into()))?,
                ),
                BindingDecl::SumGt { pred, a, b } => {
                    let av = a.iter().map(|&i| vector(i, line)).collect::<Result<_, _>>()?;
                    let bv = b.iter().map(|&i| vector(i, line)).collect::<Result<_, _>>()?;
                    TheoryPredicate::SumCmp(SumCmpPredicate::new(av, bv, *pred).map_err(|e| err(e.into()))?)
                }
                BindingDecl::MaxFlowGe {
                    gid,
                    src,
                    dst,
                    threshold,
                    pred,
                } => TheoryPredicate::MaxFlow(
                    MaxFlowPredicate::new(graph(*gid, line)?, *src, *dst, vector(*threshold, line)?, *pred)
                        .map_err(|e| err(e.into()))?,
                ),
            };
            out.push(p);
        }
        Ok(out)
    }
}

fn int<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T, InstanceError> {
    tok.parse().map_err(|_| InstanceError {
        line,
        kind: InstanceErrorKind::BadToken(tok.to_string()),
    })
}

pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut header: Option<(Var, usize)> = None;
    let mut inst = Instance::new(CnfFormula::new(0));
    let mut pending: Vec<Lit> = Vec::new();
    let mut pending_line = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let Some(&first) = toks.first() else { continue };
        let err = |kind| InstanceError { line, kind };
        if first == "c" || first.starts_with('%') {
            continue;
        }
        if first == "p" {
            if header.is_some() || toks.len() != 4 || toks[1] != "smmt" {
                return Err(err(InstanceErrorKind::BadHeader));
            }
            header = Some((int(toks[2], line)?, int(toks[3], line)?));
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(err(InstanceErrorKind::MissingHeader));
        };
        let check_var = |v: Var| {
            if v == 0 || v > num_vars {
                Err(err(InstanceErrorKind::VarOutOfRange { var: v, num_vars }))
            } else {
                Ok(v)
            }
        };
        let nums = |from: usize| -> Result<Vec<u64>, InstanceError> {
            toks[from..].iter().map(|t| int::<u64>(t, line)).collect()
        };
        let arity = |n: usize| {
            if toks.len() == n {
                Ok(())
            } else {
                Err(err(InstanceErrorKind::WrongArity))
            }
        };
        if first.starts_with('-') || first.as_bytes()[0].is_ascii_digit() {
            if pending.is_empty() {
                pending_line = line;
            }
            for t in &toks {
                let v: i32 = int(t, line)?;
                if v == 0 {
                    inst.cnf.add_clause(Clause::new(pending.drain(..)));
                } else {
                    check_var(v.unsigned_abs())?;
                    pending.push(Lit::from_dimacs(v).expect("nonzero"));
                }
            }
            continue;
        }
        match first {
            "digraph" => {
                arity(3)?;
                let n = nums(1)?;
                let gid = n[0] as u32;
                if inst.graphs.contains_key(&gid) {
                    return Err(err(InstanceErrorKind::DuplicateGraph(gid)));
                }
                inst.graphs.insert(
                    gid,
                    GraphDecl {
                        nodes: n[1] as u32,
                        edges: Vec::new(),
                    },
                );
            }
            "edge" | "edge_cap" => {
                let capped = first == "edge_cap";
                arity(if capped { 6 } else { 5 })?;
                let n = nums(1)?;
                let gid = n[0] as u32;
                let var = check_var(n[3] as Var)?;
                let g = inst
                    .graphs
                    .get_mut(&gid)
                    .ok_or(err(InstanceErrorKind::UnknownGraph(gid)))?;
                g.edges.push(EdgeDecl {
                    from: n[1] as Node,
                    to: n[2] as Node,
                    var,
                    capacity: capped.then(|| n[4] as u32),
                    line,
                });
            }
            "reach" => {
                arity(5)?;
                let n = nums(1)?;
                let pred = check_var(n[3] as Var)?;
                inst.bindings.push((
                    BindingDecl::Reach {
                        gid: n[0] as u32,
                        src: n[1] as Node,
                        dst: n[2] as Node,
                        pred,
                    },
                    line,
                ));
            }
            "bv" => {
                if toks.len() < 3 {
                    return Err(err(InstanceErrorKind::WrongArity));
                }
                let n = nums(1)?;
                let (id, width) = (n[0] as u32, n[1] as usize);
                let bits: Vec<Var> = n[2..].iter().map(|&v| check_var(v as Var)).collect::<Result<_, _>>()?;
                if bits.len() != width {
                    return Err(err(InstanceErrorKind::WidthMismatch {
                        width,
                        found: bits.len(),
                    }));
                }
                if inst.vectors.insert(id, VectorDecl::Bits(bits)).is_some() {
                    return Err(err(InstanceErrorKind::DuplicateVector(id)));
                }
            }
            "bv_const" => {
                arity(4)?;
                let id: u32 = int(toks[1], line)?;
                let width: usize = int(toks[2], line)?;
                let value: u128 = int(toks[3], line)?;
                if width > 128 || (width < 128 && value >> width != 0) {
                    return Err(err(InstanceErrorKind::ConstantTooWide { width, value }));
                }
                if inst.vectors.insert(id, VectorDecl::Const { width, value }).is_some() {
                    return Err(err(InstanceErrorKind::DuplicateVector(id)));
                }
            }
            "bv_gt" | "bv_ge" => {
                arity(4)?;
                let n = nums(1)?;
                let relation = if first == "bv_gt" { Relation::Gt } else { Relation::Ge };
                inst.bindings.push((
                    BindingDecl::Cmp {
                        pred: check_var(n[0] as Var)?,
                        relation,
                        a: n[1] as u32,
                        b: n[2] as u32,
                    },
                    line,
                ));
            }
            "bv_sum_gt" => {
                let n = nums(1)?;
                let bad = || err(InstanceErrorKind::WrongArity);
                let pred = check_var(*n.first().ok_or_else(bad)? as Var)?;
                let na = *n.get(1).ok_or_else(bad)? as usize;
                let a: Vec<u32> = n.get(2..2 + na).ok_or_else(bad)?.iter().map(|&x| x as u32).collect();
                let nb = *n.get(2 + na).ok_or_else(bad)? as usize;
                let b: Vec<u32> = n.get(3 + na..).ok_or_else(bad)?.iter().map(|&x| x as u32).collect();
                if b.len() != nb {
                    return Err(bad());
                }
                inst.bindings.push((BindingDecl::SumGt { pred, a, b }, line));
            }
            "maxflow_ge" => {
                arity(6)?;
                let n = nums(1)?;
                inst.bindings.push((
                    BindingDecl::MaxFlowGe {
                        gid: n[0] as u32,
                        src: n[1] as Node,
                        dst: n[2] as Node,
                        threshold: n[3] as u32,
                        pred: check_var(n[4] as Var)?,
                    },
                    line,
                ));
            }
            other => return Err(err(InstanceErrorKind::UnknownSection(other.to_string()))),
        }
    }
    let Some((num_vars, declared)) = header else {
        return Err(InstanceError {
            line: last_line.max(1),
            kind: InstanceErrorKind::MissingHeader,
        });
    };
    if !pending.is_empty() {
        return Err(InstanceError {
            line: pending_line,
            kind: InstanceErrorKind::UnterminatedClause,
        });
    }
    if inst.cnf.len() != declared {
        return Err(InstanceError {
            line: last_line,
            kind: InstanceErrorKind::ClauseCount {
                declared,
                found: inst.cnf.len(),
            },
        });
    }
    inst.cnf.set_num_vars(num_vars);
    inst.predicates()?;
    Ok(inst)
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Writes an instance back in the same format. Parsing the output yields
/// an equal instance (up to binding line numbers).
pub fn write_instance(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "p smmt {} {}", inst.num_vars(), inst.cnf.len());
    for c in inst.cnf.clauses() {
        crate::dimacs::write_clause_line(&mut s, c);
    }
    for (gid, g) in &inst.graphs {
        let _ = writeln!(s, "digraph {gid} {}", g.nodes);
        for e in &g.edges {
            match e.capacity {
                Some(c) => {
                    let _ = writeln!(s, "edge_cap {gid} {} {} {} {c}", e.from, e.to, e.var);
                }
                None => {
                    let _ = writeln!(s, "edge {gid} {} {} {}", e.from, e.to, e.var);
                }
            }
        }
    }
    for (id, v) in &inst.vectors {
        match v {
            VectorDecl::Bits(bits) => {
                let _ = writeln!(s, "bv {id} {} {}", bits.len(), join(bits));
            }
            VectorDecl::Const { width, value } => {
                let _ = writeln!(s, "bv_const {id} {width} {value}");
            }
        }
    }
    for (b, _) in &inst.bindings {
        let _ = match b {
            BindingDecl::Reach { gid, src, dst, pred } => writeln!(s, "reach {gid} {src} {dst} {pred}"),
            BindingDecl::Cmp { pred, relation, a, b } => {
                let kw = if *relation == Relation::Gt { "bv_gt" } else { "bv_ge" };
                writeln!(s, "{kw} {pred} {a} {b}")
            }
            BindingDecl::SumGt { pred, a, b } => {
                writeln!(s, "bv_sum_gt {pred} {} {} {} {}", a.len(), join(a), b.len(), join(b))
            }
            BindingDecl::MaxFlowGe {
                gid,
                src,
                dst,
                threshold,
                pred,
            } => writeln!(s, "maxflow_ge {gid} {src} {dst} {threshold} {pred}"),
        };
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "c one reachability query
p smmt 3 1
3 0
digraph 0 2
edge 0 0 1 1
edge 0 1 0 2
reach 0 0 1 3
";

    #[test]
    fn parses_minimal_instance() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.bindings.len(), 1);
        assert_eq!(inst.predicates().unwrap().len(), 1);
        assert_eq!(inst.cnf.len(), 1);
        let again = parse_instance(&write_instance(&inst)).unwrap();
        assert_eq!(write_instance(&again), write_instance(&inst));
    }

    #[test]
    fn all_sections_round_trip() {
        let text = "p smmt 12 0
digraph 1 3
edge_cap 1 0 1 1 10
edge_cap 1 1 2 2 11
bv 10 2 3 4
bv_const 11 2 3
bv 12 2 5 6
bv_const 13 3 5
bv_gt 7 10 12
bv_ge 8 12 13
bv_sum_gt 9 2 10 11 1 12
maxflow_ge 1 0 2 11 12
";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.predicates().unwrap().len(), 4);
        assert_eq!(write_instance(&inst), text);
    }

    fn kind(text: &str) -> (usize, InstanceErrorKind) {
        let e = parse_instance(text).unwrap_err();
        (e.line, e.kind)
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        assert_eq!(
            kind("p smmt 3 0\ndigraph 0 2\nedge 0 0 1 1\nreach 0 0 1 3\nreach 0 1 0 3\n"),
            (5, InstanceErrorKind::DuplicateBinding(3))
        );
        assert_eq!(kind("p smmt 2 0\nfoo 1\n"), (2, InstanceErrorKind::UnknownSection("foo".into())));
        assert_eq!(
            kind("p smmt 2 0\ndigraph 0 2\nedge 0 0 1 5\n"),
            (3, InstanceErrorKind::VarOutOfRange { var: 5, num_vars: 2 })
        );
        assert!(matches!(
            kind("p smmt 3 0\ndigraph 0 2\nedge 0 0 7 1\nreach 0 0 1 3\n"),
            (3, InstanceErrorKind::Predicate(_))
        ));
        assert_eq!(kind("1 2 0\n"), (1, InstanceErrorKind::MissingHeader));
        assert_eq!(
            kind("p smmt 2 2\n1 2 0\n"),
            (2, InstanceErrorKind::ClauseCount { declared: 2, found: 1 })
        );
        assert_eq!(kind("p smmt 2 1\n1 2\n"), (2, InstanceErrorKind::UnterminatedClause));
        assert_eq!(kind("p smmt 2 0\nbv_gt 1 4 5\n"), (2, InstanceErrorKind::UnknownVector(4)));
    }
}
