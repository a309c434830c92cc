//! Bit-vector comparison and sum comparison: evaluation, Horn comparator
//! definitions and ripple-carry summation networks.

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Lit, Var, VarAllocator};
use crate::horn::{mono_transform, HornError, MonotonicDefinition};
use crate::kernel::Polarity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Var(Var),
    Const(bool),
}

impl Bit {
    pub fn value(self, values: &dyn Fn(Var) -> bool) -> bool {
        match self {
            Bit::Var(v) => values(v),
            Bit::Const(b) => b,
        }
    }
}

/// A little-endian vector of bits; bit 0 is least significant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BitVectorTerm {
    bits: Vec<Bit>,
}

impl BitVectorTerm {
    pub fn from_vars(vars: &[Var]) -> BitVectorTerm {
        BitVectorTerm {
            bits: vars.iter().map(|&v| Bit::Var(v)).collect(),
        }
    }

    pub fn from_bits(bits: Vec<Bit>) -> BitVectorTerm {
        BitVectorTerm { bits }
    }

    pub fn constant(width: usize, value: u128) -> BitVectorTerm {
        BitVectorTerm {
            bits: (0..width)
                .map(|i| Bit::Const(i < 128 && (value >> i) & 1 == 1))
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[Bit] {
        &self.bits
    }

    pub fn vars(&self) -> Vec<Var> {
        self.bits
            .iter()
            .filter_map(|b| match b {
                Bit::Var(v) => Some(*v),
                Bit::Const(_) => None,
            })
            .collect()
    }

    pub fn value(&self, values: &dyn Fn(Var) -> bool) -> u128 {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| b.value(values))
            .map(|(i, _)| 1u128 << i)
            .sum()
    }

    /// Zero-extends to `width` bits (never truncates).
    pub fn padded(&self, width: usize) -> BitVectorTerm {
        let mut bits = self.bits.clone();
        while bits.len() < width {
            bits.push(Bit::Const(false));
        }
        BitVectorTerm { bits }
    }

    pub fn bit(&self, i: usize) -> Bit {
        self.bits.get(i).copied().unwrap_or(Bit::Const(false))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BvError {
    #[error("variable {0} occurs on both sides of a comparison")]
    BothSides(Var),
    #[error("predicate variable {0} is also an input")]
    PredicateIsInput(Var),
    #[error(transparent)]
    Horn(#[from] HornError),
}

/// Emits clauses over bits, folding constants away.
pub struct Emitter<'a> {
    pub clauses: Vec<Clause>,
    pub alloc: &'a mut VarAllocator,
}

impl<'a> Emitter<'a> {
    pub fn new(alloc: &'a mut VarAllocator) -> Emitter<'a> {
        Emitter {
            clauses: Vec::new(),
            alloc,
        }
    }

    pub fn fresh(&mut self) -> Bit {
        Bit::Var(self.alloc.fresh())
    }

    /// Emits the disjunction of `(bit, positive)` literals.
    pub fn clause(&mut self, parts: &[(Bit, bool)]) {
        let mut lits = Vec::with_capacity(parts.len());
        for &(b, pos) in parts {
            match b {
                Bit::Const(v) if v == pos => return,
                Bit::Const(_) => {}
                Bit::Var(v) => lits.push(Lit::new(v, pos)),
            }
        }
        self.clauses.push(Clause::new(lits));
    }

    pub fn into_formula(self) -> CnfFormula {
        let n = self.alloc.last();
        CnfFormula::from_clauses(n, self.clauses)
    }
}

fn lit_bit(l: Lit) -> (Bit, bool) {
    (Bit::Var(l.var()), l.is_positive())
}

/// Horn clauses deriving `head` whenever `val(a) > val(b)`.
///
/// Scans from the most significant bit with atoms `ge_i` ("the prefix above
/// `i` allows a ≥ b") and `gt_i` ("a > b decided at bit `i`").
pub fn gt_implies(a: &BitVectorTerm, b: &BitVectorTerm, head: Lit, em: &mut Emitter<'_>) {
    let k = a.width().max(b.width());
    let ge: Vec<Bit> = (0..=k).map(|_| em.fresh()).collect();
    let gt: Vec<Bit> = (0..=k).map(|_| em.fresh()).collect();
    for i in (0..k).rev() {
        let (ai, bi) = (a.bit(i), b.bit(i));
        em.clause(&[(ge[i + 1], false), (ai, false), (bi, true), (gt[i], true)]);
        em.clause(&[(ge[i + 1], false), (ai, false), (ge[i], true)]);
        // Equal zero bits keep the prefix tied; `ge_0` is never read.
        if i > 0 {
            em.clause(&[(ge[i + 1], false), (bi, true), (ge[i], true)]);
        }
    }
    for &g in gt.iter().take(k).rev() {
        em.clause(&[(g, false), lit_bit(head)]);
    }
    em.clause(&[(ge[k], true)]);
    em.clause(&[(gt[k], false)]);
}

/// Horn clauses deriving `head` whenever `val(a) ≤ val(b)`.
pub fn le_implies(a: &BitVectorTerm, b: &BitVectorTerm, head: Lit, em: &mut Emitter<'_>) {
    let k = a.width().max(b.width());
    let le: Vec<Bit> = (0..=k).map(|_| em.fresh()).collect();
    let lt: Vec<Bit> = (0..=k).map(|_| em.fresh()).collect();
    for i in (0..k).rev() {
        let (ai, bi) = (a.bit(i), b.bit(i));
        em.clause(&[(le[i + 1], false), (ai, true), (bi, false), (lt[i], true)]);
        em.clause(&[(le[i + 1], false), (ai, true), (le[i], true)]);
        em.clause(&[(le[i + 1], false), (bi, false), (le[i], true)]);
    }
    for &l in lt.iter().take(k).rev() {
        em.clause(&[(l, false), lit_bit(head)]);
    }
    em.clause(&[(le[0], false), lit_bit(head)]);
    em.clause(&[(le[k], true)]);
    em.clause(&[(lt[k], false)]);
}

/// Tseitin full adder; returns `(sum, carry)`.
pub fn full_adder(x: Bit, y: Bit, c: Bit, em: &mut Emitter<'_>) -> (Bit, Bit) {
    let consts: Vec<bool> = [x, y, c]
        .iter()
        .filter_map(|b| match b {
            Bit::Const(v) => Some(*v),
            _ => None,
        })
        .collect();
    let ones = consts.iter().filter(|&&v| v).count();
    match (consts.len(), ones) {
        (3, n) => return (Bit::Const(n % 2 == 1), Bit::Const(n >= 2)),
        (2, 0) | (2, 2) => {
            let v = [x, y, c]
                .into_iter()
                .find(|b| matches!(b, Bit::Var(_)))
                .unwrap();
            return (v, Bit::Const(ones == 2));
        }
        _ => {}
    }
    let s = em.fresh();
    let co = em.fresh();
    for mask in 0..8u8 {
        let (vx, vy, vc) = (mask & 1 == 1, mask & 2 == 2, mask & 4 == 4);
        let parity = vx ^ vy ^ vc;
        em.clause(&[(x, !vx), (y, !vy), (c, !vc), (s, parity)]);
    }
    em.clause(&[(x, false), (y, false), (co, true)]);
    em.clause(&[(x, false), (c, false), (co, true)]);
    em.clause(&[(y, false), (c, false), (co, true)]);
    em.clause(&[(x, true), (y, true), (co, false)]);
    em.clause(&[(x, true), (c, true), (co, false)]);
    em.clause(&[(y, true), (c, true), (co, false)]);
    (s, co)
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Sums vectors left to right with ripple-carry adders. The result is
/// `max width + ⌈log₂ n⌉` bits wide, so it never overflows.
pub fn sum_vectors(vs: &[BitVectorTerm], em: &mut Emitter<'_>) -> BitVectorTerm {
    if vs.is_empty() {
        return BitVectorTerm::constant(1, 0);
    }
    let width = vs.iter().map(|v| v.width()).max().unwrap_or(0) + ceil_log2(vs.len());
    let mut acc = vs[0].padded(width);
    for v in &vs[1..] {
        let mut carry = Bit::Const(false);
        let mut bits = Vec::with_capacity(width);
        for i in 0..width {
            let (s, c) = full_adder(acc.bit(i), v.bit(i), carry, em);
            bits.push(s);
            carry = c;
        }
        acc = BitVectorTerm::from_bits(bits);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Gt,
    Ge,
}

/// `a > b` or `a ≥ b` on unsigned values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CmpPredicate {
    pub a: BitVectorTerm,
    pub b: BitVectorTerm,
    pub relation: Relation,
    pub predicate_var: Var,
}

fn collect_inputs(
    pos: impl Iterator<Item = Var>,
    neg: impl Iterator<Item = Var>,
    pred: Var,
) -> Result<Vec<(Var, Polarity)>, BvError> {
    let mut out: Vec<(Var, Polarity)> = Vec::new();
    for (v, p) in pos
        .map(|v| (v, Polarity::Positive))
        .chain(neg.map(|v| (v, Polarity::Negative)))
    {
        if v == pred {
            return Err(BvError::PredicateIsInput(v));
        }
        match out.iter().find(|&&(u, _)| u == v) {
            Some(&(_, q)) if q != p => return Err(BvError::BothSides(v)),
            Some(_) => {}
            None => out.push((v, p)),
        }
    }
    Ok(out)
}

impl CmpPredicate {
    pub fn new(a: BitVectorTerm, b: BitVectorTerm, relation: Relation, predicate_var: Var) -> Result<CmpPredicate, BvError> {
        let p = CmpPredicate {
            a,
            b,
            relation,
            predicate_var,
        };
        p.inputs()?;
        Ok(p)
    }

    pub fn inputs(&self) -> Result<Vec<(Var, Polarity)>, BvError> {
        collect_inputs(
            self.a.vars().into_iter(),
            self.b.vars().into_iter(),
            self.predicate_var,
        )
    }

    pub fn eval(&self, values: &dyn Fn(Var) -> bool) -> bool {
        let (x, y) = (self.a.value(values), self.b.value(values));
        match self.relation {
            Relation::Gt => x > y,
            Relation::Ge => x >= y,
        }
    }

    fn definition(&self, head: Lit, alloc: &mut VarAllocator) -> MonotonicDefinition {
        let mut em = Emitter::new(alloc);
        // a ≥ b is ¬(b > a).
        match (self.relation, head.is_positive()) {
            (Relation::Gt, true) => gt_implies(&self.a, &self.b, head, &mut em),
            (Relation::Gt, false) => le_implies(&self.a, &self.b, head, &mut em),
            (Relation::Ge, true) => le_implies(&self.b, &self.a, head, &mut em),
            (Relation::Ge, false) => gt_implies(&self.b, &self.a, head, &mut em),
        }
        let f = em.into_formula();
        MonotonicDefinition::new(f, head, self.inputs().expect("validated at construction"))
    }

    /// Horn definition of the predicate atom.
    pub fn positive_definition(&self, alloc: &mut VarAllocator) -> MonotonicDefinition {
        self.definition(Lit::pos(self.predicate_var), alloc)
    }

    /// Horn definition of the negated predicate atom.
    pub fn negative_definition(&self, alloc: &mut VarAllocator) -> MonotonicDefinition {
        self.definition(Lit::neg(self.predicate_var), alloc)
    }
}

/// `Σ a > Σ b` over unsigned vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumCmpPredicate {
    pub a: Vec<BitVectorTerm>,
    pub b: Vec<BitVectorTerm>,
    pub predicate_var: Var,
}

impl SumCmpPredicate {
    pub fn new(a: Vec<BitVectorTerm>, b: Vec<BitVectorTerm>, predicate_var: Var) -> Result<SumCmpPredicate, BvError> {
        let p = SumCmpPredicate { a, b, predicate_var };
        p.inputs()?;
        Ok(p)
    }

    pub fn inputs(&self) -> Result<Vec<(Var, Polarity)>, BvError> {
        collect_inputs(
            self.a.iter().flat_map(|v| v.vars()),
            self.b.iter().flat_map(|v| v.vars()),
            self.predicate_var,
        )
    }

    pub fn eval(&self, values: &dyn Fn(Var) -> bool) -> bool {
        let sa: u128 = self.a.iter().map(|v| v.value(values)).sum();
        let sb: u128 = self.b.iter().map(|v| v.value(values)).sum();
        sa > sb
    }

    /// Adder networks plus comparator, renamed apart by the monotonic
    /// transform so that the result is a monotonic definition of
    /// `p` (positive sign) or `¬p` (negative sign).
    pub fn definition(&self, sign: Polarity, alloc: &mut VarAllocator) -> Result<MonotonicDefinition, BvError> {
        let head = match sign {
            Polarity::Positive => Lit::pos(self.predicate_var),
            Polarity::Negative => Lit::neg(self.predicate_var),
        };
        let mut em = Emitter::new(alloc);
        let sa = sum_vectors(&self.a, &mut em);
        let sb = sum_vectors(&self.b, &mut em);
        match sign {
            Polarity::Positive => gt_implies(&sa, &sb, head, &mut em),
            Polarity::Negative => le_implies(&sa, &sb, head, &mut em),
        }
        let base = em.into_formula();
        let inputs = self.inputs()?;
        let fresh_base = alloc.last().max(self.predicate_var);
        let def = mono_transform(&base, head, &inputs, fresh_base)?;
        while alloc.last() < def.clauses.num_vars() {
            alloc.fresh();
        }
        Ok(def)
    }
}
