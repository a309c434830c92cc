//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use smmt_core::cnf::{Clause, Lit, Var};
use smmt_core::theory::bv::{BitVectorTerm, CmpPredicate, Relation, SumCmpPredicate};
use smmt_core::theory::graph::{ReachPredicate, SymbolicGraph};
use smmt_core::theory::maxflow::MaxFlowPredicate;
use smmt_core::{Instance, Polarity, TheoryPredicate};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Reach,
    Cmp,
    SumCmp,
    MaxFlow,
}

pub const KINDS: [Kind; 4] = [Kind::Reach, Kind::Cmp, Kind::SumCmp, Kind::MaxFlow];

fn vars(range: std::ops::RangeInclusive<Var>) -> Vec<Var> {
    range.collect()
}

/// A random predicate over inputs `1..=n`, with predicate variable `n + 1`.
/// Every kind stays at or below 14 inputs.
pub fn random_predicate<R: Rng>(rng: &mut R, kind: Kind) -> (TheoryPredicate, Var) {
    match kind {
        Kind::Reach => {
            let nodes = rng.gen_range(2..=5u32);
            let m = rng.gen_range(1..=8u32);
            let mut g = SymbolicGraph::new(nodes);
            for v in 1..=m {
                g.add_edge(rng.gen_range(0..nodes), rng.gen_range(0..nodes), v).unwrap();
            }
            let p = ReachPredicate::new(Arc::new(g), 0, nodes - 1, m + 1).unwrap();
            (TheoryPredicate::Reach(p), m)
        }
        Kind::Cmp => {
            let w = rng.gen_range(1..=4u32);
            let a = BitVectorTerm::from_vars(&vars(1..=w));
            let b = BitVectorTerm::from_vars(&vars(w + 1..=2 * w));
            let rel = if rng.gen_bool(0.5) { Relation::Gt } else { Relation::Ge };
            (TheoryPredicate::Cmp(CmpPredicate::new(a, b, rel, 2 * w + 1).unwrap()), 2 * w)
        }
        Kind::SumCmp => {
            let a = vec![BitVectorTerm::from_vars(&[1, 2]), BitVectorTerm::from_vars(&[3, 4])];
            let b = vec![BitVectorTerm::from_vars(&[5, 6, 7])];
            (TheoryPredicate::SumCmp(SumCmpPredicate::new(a, b, 8).unwrap()), 7)
        }
        Kind::MaxFlow => {
            let nodes = rng.gen_range(2..=4u32);
            let m = rng.gen_range(1..=4u32);
            let mut g = SymbolicGraph::new(nodes);
            let mut next = m + 1;
            for v in 1..=m {
                let e = g.add_edge(rng.gen_range(0..nodes), rng.gen_range(0..nodes), v).unwrap();
                g.set_capacity(e, BitVectorTerm::from_vars(&[next, next + 1]));
                next += 2;
            }
            let threshold = BitVectorTerm::from_vars(&[next, next + 1]);
            let p = MaxFlowPredicate::new(Arc::new(g), 0, nodes - 1, threshold, next + 2).unwrap();
            (TheoryPredicate::MaxFlow(p), next + 1)
        }
    }
}

/// Does every total extension of `antecedent` over the inputs give the
/// predicate the value `head` asserts?
pub fn brute_force_implies(pred: &TheoryPredicate, antecedent: &[Lit], head: Lit) -> bool {
    let inputs: Vec<(Var, Polarity)> = pred.inputs();
    let free: Vec<Var> = inputs
        .iter()
        .map(|&(v, _)| v)
        .filter(|&v| antecedent.iter().all(|l| l.var() != v))
        .collect();
    assert!(free.len() <= 16, "too many free inputs for enumeration");
    (0..1u64 << free.len()).all(|bits| {
        let value = |v: Var| {
            if let Some(l) = antecedent.iter().find(|l| l.var() == v) {
                return l.is_positive();
            }
            let i = free.iter().position(|&f| f == v).expect("input variable");
            (bits >> i) & 1 == 1
        };
        pred.eval(&value) == head.is_positive()
    })
}

/// Minimum s–t cut by enumerating every source side.
pub fn min_cut(nodes: u32, arcs: &[(u32, u32, u128)], s: u32, t: u32) -> u128 {
    let others: Vec<u32> = (0..nodes).filter(|&v| v != s && v != t).collect();
    (0..1u32 << others.len())
        .map(|bits| {
            let side = |v: u32| {
                v == s || (v != t && (bits >> others.iter().position(|&o| o == v).unwrap()) & 1 == 1)
            };
            arcs.iter()
                .filter(|&&(a, b, _)| side(a) && !side(b))
                .map(|&(_, _, c)| c)
                .sum()
        })
        .min()
        .unwrap_or(0)
}

/// A random instance in the text format mixing reachability, a comparison
/// and a max-flow bound, with at most `max_vars` variables.
pub fn random_instance_text<R: Rng>(rng: &mut R, max_vars: Var) -> String {
    let mut next: Var = 0;
    let mut fresh = |n: Var| {
        let first = next + 1;
        next += n;
        (first..=next).collect::<Vec<Var>>()
    };
    let mut body = String::new();
    let mut theory = String::new();

    let nodes = rng.gen_range(2..=4u32);
    let edges = fresh(rng.gen_range(1..=4));
    let _ = writeln!(theory, "digraph 0 {nodes}");
    for &e in &edges {
        let _ = writeln!(theory, "edge 0 {} {} {e}", rng.gen_range(0..nodes), rng.gen_range(0..nodes));
    }
    let reach = fresh(1)[0];
    let _ = writeln!(theory, "reach 0 0 {} {reach}", nodes - 1);

    if rng.gen_bool(0.7) {
        let w = rng.gen_range(1..=2u32);
        let a = fresh(w);
        let _ = writeln!(theory, "bv 0 {w} {}", join(&a));
        if rng.gen_bool(0.5) {
            let b = fresh(w);
            let _ = writeln!(theory, "bv 1 {w} {}", join(&b));
        } else {
            let _ = writeln!(theory, "bv_const 1 {w} {}", rng.gen_range(0..1u32 << w));
        }
        let p = fresh(1)[0];
        let op = if rng.gen_bool(0.5) { "bv_gt" } else { "bv_ge" };
        let (x, y) = if rng.gen_bool(0.5) { (0, 1) } else { (1, 0) };
        let _ = writeln!(theory, "{op} {p} {x} {y}");
    }

    if rng.gen_bool(0.5) {
        let fnodes = rng.gen_range(2..=3u32);
        let fedges = fresh(rng.gen_range(1..=3));
        let _ = writeln!(theory, "digraph 1 {fnodes}");
        for (i, &e) in fedges.iter().enumerate() {
            let id = 10 + i as u32;
            let _ = writeln!(theory, "bv_const {id} 2 {}", rng.gen_range(0..4));
            let _ = writeln!(
                theory,
                "edge_cap 1 {} {} {e} {id}",
                rng.gen_range(0..fnodes),
                rng.gen_range(0..fnodes)
            );
        }
        let _ = writeln!(theory, "bv_const 9 3 {}", rng.gen_range(0..6));
        let p = fresh(1)[0];
        let _ = writeln!(theory, "maxflow_ge 1 0 {} 9 {p}", fnodes - 1);
    }
    let n = next;
    assert!(n <= max_vars, "generator exceeded its variable budget");

    let all: Vec<Var> = (1..=n).collect();
    let m = rng.gen_range(1..=2 * n as usize);
    for _ in 0..m {
        let k = rng.gen_range(1..=3usize).min(n as usize);
        let lits: Vec<String> = all
            .choose_multiple(rng, k)
            .map(|&v| if rng.gen_bool(0.5) { format!("{v}") } else { format!("-{v}") })
            .collect();
        let _ = writeln!(body, "{} 0", lits.join(" "));
    }
    format!("p smmt {n} {m}\n{body}{theory}")
}

fn join(v: &[Var]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Satisfiability by enumerating every assignment to the instance
/// variables and evaluating the predicates directly.
pub fn exhaustive_sat(inst: &Instance) -> bool {
    let n = inst.num_vars();
    assert!(n <= 22, "too many variables for enumeration");
    let preds = inst.predicates().unwrap();
    let clauses: Vec<Clause> = inst.cnf.clauses().cloned().collect();
    (0..1u64 << n).any(|bits| {
        let value = |v: Var| (bits >> (v - 1)) & 1 == 1;
        clauses
            .iter()
            .all(|c| c.lits().iter().any(|l| value(l.var()) == l.is_positive()))
            && preds.iter().all(|p| p.eval(&value) == value(p.predicate_var()))
    })
}

/// Does `model` satisfy the instance, predicates included?
pub fn is_model(inst: &Instance, model: &[bool]) -> bool {
    let value = |v: Var| model.get(v as usize).copied().unwrap_or(false);
    inst.cnf
        .clauses()
        .all(|c| c.lits().iter().any(|l| value(l.var()) == l.is_positive()))
        && inst
            .predicates()
            .unwrap()
            .iter()
            .all(|p| p.eval(&value) == value(p.predicate_var()))
}
