//! Proof certificates: extended-DRAT records, forward checking, backward
//! trimming and greedy minimization.
//!
//! Text format, one record per line:
//!
//! ```text
//! 1 -2 0                 learned clause
//! d 1 -2 0               deletion
//! t 7 -3 -4 7 0 8 -9 0   theory lemma: predicate var, clause, witness
//! ```
//!
//! Files without `t` lines are plain DRAT.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Lit, Propagator, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Learned,
    Deletion,
    TheoryLemma,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProofRecord {
    pub kind: RecordKind,
    pub clause: Clause,
    /// Present only on theory lemmas.
    pub witness: Option<Vec<Lit>>,
    /// Present only on theory lemmas.
    pub predicate_var: Option<Var>,
}

impl ProofRecord {
    pub fn learned(clause: Clause) -> ProofRecord {
        ProofRecord {
            kind: RecordKind::Learned,
            clause,
            witness: None,
            predicate_var: None,
        }
    }

    pub fn deletion(clause: Clause) -> ProofRecord {
        ProofRecord {
            kind: RecordKind::Deletion,
            clause,
            witness: None,
            predicate_var: None,
        }
    }

    pub fn theory_lemma(clause: Clause, predicate_var: Var, witness: Vec<Lit>) -> ProofRecord {
        debug_assert_eq!(
            clause.lits().iter().filter(|l| l.var() == predicate_var).count(),
            1
        );
        ProofRecord {
            kind: RecordKind::TheoryLemma,
            clause,
            witness: Some(witness),
            predicate_var: Some(predicate_var),
        }
    }

    /// Adds a clause to the database (learned or theory lemma).
    pub fn is_addition(&self) -> bool {
        self.kind != RecordKind::Deletion
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProofCertificate {
    pub records: Vec<ProofRecord>,
}

impl ProofCertificate {
    pub fn new() -> ProofCertificate {
        ProofCertificate::default()
    }

    pub fn push(&mut self, record: ProofRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn theory_lemmas(&self) -> impl Iterator<Item = &ProofRecord> + '_ {
        self.records
            .iter()
            .filter(|r| r.kind == RecordKind::TheoryLemma)
    }

    pub fn count(&self, kind: RecordKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }

    /// A copy without the record at `index`.
    pub fn without(&self, index: usize) -> ProofCertificate {
        let mut records = self.records.clone();
        records.remove(index);
        ProofCertificate { records }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RejectReason {
    RupFailed,
    EmptyClauseNotDerived,
    BadDeletion,
    TheoryLemmaPresent,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectReason::RupFailed => "RUP check failed",
            RejectReason::EmptyClauseNotDerived => "empty clause not derived",
            RejectReason::BadDeletion => "deleted clause not in database",
            RejectReason::TheoryLemmaPresent => "undischarged theory lemma",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    /// `index` is the failing record, or the record count when the proof
    /// ends without deriving the empty clause.
    Rejected { index: usize, reason: RejectReason },
}

impl Verdict {
    pub fn is_verified(&self) -> bool {
        *self == Verdict::Verified
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DratError {
    #[error("proof does not verify: record {index}: {reason}")]
    NotVerified { index: usize, reason: RejectReason },
}

/// Where a database clause came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Origin {
    Formula,
    Record(usize),
}

struct Database {
    prop: Propagator,
    origin: Vec<Origin>,
    live: HashMap<Vec<Lit>, Vec<u32>>,
}

impl Database {
    fn new(f: &CnfFormula) -> Database {
        let prop = Propagator::from_formula(f);
        let mut live: HashMap<Vec<Lit>, Vec<u32>> = HashMap::new();
        for (i, c) in f.iter() {
            live.entry(c.key()).or_default().push(i as u32);
        }
        Database {
            origin: vec![Origin::Formula; prop.num_clauses()],
            prop,
            live,
        }
    }

    fn add(&mut self, clause: &Clause, origin: Origin) {
        let id = self.prop.add_clause(clause);
        self.origin.push(origin);
        self.live.entry(clause.key()).or_default().push(id);
    }

    fn delete(&mut self, clause: &Clause) -> bool {
        match self.live.get_mut(&clause.key()).and_then(|ids| ids.pop()) {
            Some(id) => {
                self.prop.delete(id);
                true
            }
            None => false,
        }
    }
}

/// Outcome of a forward pass: the verdict plus, for every checked
/// addition, the records that took part in its RUP derivation.
struct ForwardPass {
    verdict: Verdict,
    /// Index of the record deriving the empty clause.
    empty_at: Option<usize>,
    uses: HashMap<usize, Vec<usize>>,
}

fn forward(f: &CnfFormula, proof: &ProofCertificate, theory_axioms: bool, track: bool) -> ForwardPass {
    let mut db = Database::new(f);
    let mut uses = HashMap::new();
    let reject = |index, reason| ForwardPass {
        verdict: Verdict::Rejected { index, reason },
        empty_at: None,
        uses: HashMap::new(),
    };
    if f.has_empty_clause() {
        return ForwardPass {
            verdict: Verdict::Verified,
            empty_at: None,
            uses,
        };
    }
    for (i, rec) in proof.records.iter().enumerate() {
        match rec.kind {
            RecordKind::Deletion => {
                if !db.delete(&rec.clause) {
                    return reject(i, RejectReason::BadDeletion);
                }
            }
            RecordKind::TheoryLemma if !theory_axioms => {
                return reject(i, RejectReason::TheoryLemmaPresent);
            }
            RecordKind::TheoryLemma => {
                db.add(&rec.clause, Origin::Record(i));
            }
            RecordKind::Learned => {
                let used = if track {
                    db.prop.rup_with_participants(&rec.clause)
                } else {
                    db.prop.rup(&rec.clause).then(BTreeSet::new)
                };
                let Some(used) = used else {
                    return reject(i, RejectReason::RupFailed);
                };
                if track {
                    let recs: Vec<usize> = used
                        .iter()
                        .filter_map(|&id| match db.origin[id as usize] {
                            Origin::Record(r) => Some(r),
                            Origin::Formula => None,
                        })
                        .collect();
                    uses.insert(i, recs);
                }
                if rec.clause.is_empty() {
                    return ForwardPass {
                        verdict: Verdict::Verified,
                        empty_at: Some(i),
                        uses,
                    };
                }
                db.add(&rec.clause, Origin::Record(i));
            }
        }
    }
    reject(proof.records.len(), RejectReason::EmptyClauseNotDerived)
}

/// Forward DRAT check: every learned clause must be RUP with respect to the
/// formula plus earlier additions minus deletions. Theory lemmas are
/// rejected; discharge them first.
pub fn check_drat(f: &CnfFormula, proof: &ProofCertificate) -> Verdict {
    forward(f, proof, false, false).verdict
}

/// Forward check that admits theory lemmas as axioms.
pub fn check_with_theory_axioms(f: &CnfFormula, proof: &ProofCertificate) -> Verdict {
    forward(f, proof, true, false).verdict
}

/// Trims a proof to the records reachable backwards from the empty clause.
///
/// Theory lemmas are kept when used and never expanded. Deletions are
/// dropped, which can only strengthen later RUP checks. Record order is
/// preserved.
pub fn backward_check(f: &CnfFormula, proof: &ProofCertificate) -> Result<ProofCertificate, DratError> {
    let pass = forward(f, proof, true, true);
    if let Verdict::Rejected { index, reason } = pass.verdict {
        return Err(DratError::NotVerified { index, reason });
    }
    let Some(last) = pass.empty_at else {
        // The formula already contains the empty clause.
        return Ok(ProofCertificate::new());
    };
    let mut needed = vec![false; proof.len()];
    needed[last] = true;
    for i in (0..=last).rev() {
        if !needed[i] {
            continue;
        }
        if let Some(deps) = pass.uses.get(&i) {
            for &d in deps {
                needed[d] = true;
            }
        }
    }
    Ok(ProofCertificate {
        records: proof
            .records
            .iter()
            .zip(needed)
            .filter(|(_, n)| *n)
            .map(|(r, _)| r.clone())
            .collect(),
    })
}

/// Greedily drops records while the proof still verifies, until no single
/// record can be removed. Theory lemmas are treated as axioms.
pub fn minimize(f: &CnfFormula, proof: &ProofCertificate) -> Result<ProofCertificate, DratError> {
    let mut current = backward_check(f, proof)?;
    loop {
        let mut changed = false;
        let mut i = current.len();
        while i > 0 {
            i -= 1;
            let candidate = current.without(i);
            if check_with_theory_axioms(f, &candidate).is_verified() {
                current = backward_check(f, &candidate)?;
                changed = true;
                i = i.min(current.len());
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("certificate line {line}: {msg}")]
pub struct CertificateParseError {
    pub line: usize,
    pub msg: String,
}

pub fn write_certificate(proof: &ProofCertificate) -> String {
    let mut out = String::new();
    for rec in &proof.records {
        match rec.kind {
            RecordKind::Learned => {}
            RecordKind::Deletion => out.push_str("d "),
            RecordKind::TheoryLemma => {
                write!(out, "t {} ", rec.predicate_var.unwrap_or(0)).unwrap();
            }
        }
        for l in rec.clause.lits() {
            write!(out, "{} ", l).unwrap();
        }
        out.push('0');
        if let Some(w) = &rec.witness {
            for l in w {
                write!(out, " {}", l).unwrap();
            }
            out.push_str(" 0");
        }
        out.push('\n');
    }
    out
}

pub fn read_certificate(text: &str) -> Result<ProofCertificate, CertificateParseError> {
    let mut proof = ProofCertificate::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: &str| CertificateParseError {
            line,
            msg: msg.to_string(),
        };
        let body = raw.trim();
        if body.is_empty() || body.starts_with('c') {
            continue;
        }
        let mut toks = body.split_whitespace().peekable();
        let kind = match toks.peek() {
            Some(&"d") => {
                toks.next();
                RecordKind::Deletion
            }
            Some(&"t") => {
                toks.next();
                RecordKind::TheoryLemma
            }
            _ => RecordKind::Learned,
        };
        let mut nums = Vec::new();
        for t in toks {
            nums.push(t.parse::<i32>().map_err(|_| err(&format!("bad literal `{t}`")))?);
        }
        let lits_until_zero = |slice: &[i32]| -> Result<(Vec<Lit>, usize), CertificateParseError> {
            let end = slice
                .iter()
                .position(|&v| v == 0)
                .ok_or_else(|| err("missing 0 terminator"))?;
            let lits = slice[..end]
                .iter()
                .map(|&v| Lit::from_dimacs(v).ok_or_else(|| err("bad literal")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((lits, end + 1))
        };
        let record = match kind {
            RecordKind::TheoryLemma => {
                let pv = *nums.first().ok_or_else(|| err("missing predicate variable"))?;
                if pv <= 0 {
                    return Err(err("predicate variable must be positive"));
                }
                let (clause, used) = lits_until_zero(&nums[1..])?;
                let (witness, used2) = lits_until_zero(&nums[1 + used..])?;
                if 1 + used + used2 != nums.len() {
                    return Err(err("trailing tokens"));
                }
                let clause = Clause::new(clause);
                let pv = pv as Var;
                if clause.lits().iter().filter(|l| l.var() == pv).count() != 1 {
                    return Err(err("theory lemma must mention its predicate exactly once"));
                }
                ProofRecord::theory_lemma(clause, pv, witness)
            }
            _ => {
                let (clause, used) = lits_until_zero(&nums)?;
                if used != nums.len() {
                    return Err(err("trailing tokens"));
                }
                let clause = Clause::new(clause);
                if kind == RecordKind::Deletion {
                    ProofRecord::deletion(clause)
                } else {
                    ProofRecord::learned(clause)
                }
            }
        };
        proof.push(record);
    }
    Ok(proof)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[i32]) -> Clause {
        Clause::from_dimacs(v)
    }

    #[test]
    fn trivial_refutation() {
        let f = CnfFormula::from_dimacs(&[&[1], &[-1]]);
        let proof = ProofCertificate {
            records: vec![ProofRecord::learned(Clause::empty())],
        };
        assert_eq!(check_drat(&f, &proof), Verdict::Verified);
    }

    #[test]
    fn rup_failure_is_reported() {
        let f = CnfFormula::from_dimacs(&[&[1, 2]]);
        let proof = ProofCertificate {
            records: vec![ProofRecord::learned(c(&[1]))],
        };
        assert_eq!(
            check_drat(&f, &proof),
            Verdict::Rejected {
                index: 0,
                reason: RejectReason::RupFailed
            }
        );
    }

    #[test]
    fn missing_empty_clause_and_bad_deletion() {
        let f = CnfFormula::from_dimacs(&[&[1, 2], &[1, -2]]);
        let proof = ProofCertificate {
            records: vec![ProofRecord::learned(c(&[1]))],
        };
        assert_eq!(
            check_drat(&f, &proof),
            Verdict::Rejected {
                index: 1,
                reason: RejectReason::EmptyClauseNotDerived
            }
        );
        let proof = ProofCertificate {
            records: vec![ProofRecord::deletion(c(&[3]))],
        };
        assert_eq!(
            check_drat(&f, &proof),
            Verdict::Rejected {
                index: 0,
                reason: RejectReason::BadDeletion
            }
        );
    }

    #[test]
    fn deletions_take_effect() {
        let f = CnfFormula::from_dimacs(&[&[1], &[-1, 2], &[-2]]);
        let proof = ProofCertificate {
            records: vec![
                ProofRecord::deletion(c(&[2, -1])),
                ProofRecord::learned(Clause::empty()),
            ],
        };
        assert_eq!(
            check_drat(&f, &proof),
            Verdict::Rejected {
                index: 1,
                reason: RejectReason::RupFailed
            }
        );
    }

    #[test]
    fn theory_lemmas_need_discharge() {
        let f = CnfFormula::from_dimacs(&[&[1], &[-2]]);
        let proof = ProofCertificate {
            records: vec![
                ProofRecord::theory_lemma(c(&[-1, 2]), 2, vec![]),
                ProofRecord::learned(Clause::empty()),
            ],
        };
        assert_eq!(
            check_drat(&f, &proof),
            Verdict::Rejected {
                index: 0,
                reason: RejectReason::TheoryLemmaPresent
            }
        );
        assert!(check_with_theory_axioms(&f, &proof).is_verified());
    }

    #[test]
    fn backward_check_drops_unused_records() {
        // x1 ∨ x2, x1 ∨ ¬x2, ¬x1 ∨ x3, ¬x1 ∨ ¬x3
        let f = CnfFormula::from_dimacs(&[&[1, 2], &[1, -2], &[-1, 3], &[-1, -3], &[4, 5]]);
        let proof = ProofCertificate {
            records: vec![
                ProofRecord::theory_lemma(c(&[4, 6]), 6, vec![]),
                ProofRecord::learned(c(&[4, 5, 1])),
                ProofRecord::learned(c(&[1])),
                ProofRecord::theory_lemma(c(&[-1, 7]), 7, vec![Lit::pos(8)]),
                ProofRecord::learned(Clause::empty()),
            ],
        };
        let core = backward_check(&f, &proof).unwrap();
        assert_eq!(core.records.len(), 2);
        assert_eq!(core.records[0].clause, c(&[1]));
        assert_eq!(core.count(RecordKind::TheoryLemma), 0);
        assert!(check_with_theory_axioms(&f, &core).is_verified());
    }

    #[test]
    fn backward_check_keeps_used_theory_lemma() {
        let f = CnfFormula::from_dimacs(&[&[1], &[-2], &[3], &[-4]]);
        let proof = ProofCertificate {
            records: vec![
                ProofRecord::theory_lemma(c(&[-3, 4]), 4, vec![]),
                ProofRecord::theory_lemma(c(&[-1, 2]), 2, vec![]),
                ProofRecord::learned(Clause::empty()),
            ],
        };
        let core = backward_check(&f, &proof).unwrap();
        assert_eq!(core.count(RecordKind::TheoryLemma), 1);
        assert!(check_with_theory_axioms(&f, &core).is_verified());
    }

    #[test]
    fn minimized_proofs_break_when_any_record_is_dropped() {
        let f = CnfFormula::from_dimacs(&[&[1, 2], &[1, -2], &[-1, 3], &[-1, -3]]);
        let proof = ProofCertificate {
            records: vec![
                ProofRecord::learned(c(&[1, 3])),
                ProofRecord::learned(c(&[1])),
                ProofRecord::learned(c(&[3])),
                ProofRecord::learned(Clause::empty()),
            ],
        };
        let min = minimize(&f, &proof).unwrap();
        assert!(check_drat(&f, &min).is_verified());
        for i in 0..min.len() {
            assert!(!check_drat(&f, &min.without(i)).is_verified());
        }
    }

    #[test]
    fn certificate_round_trip() {
        let proof = ProofCertificate {
            records: vec![
                ProofRecord::learned(c(&[1, -2])),
                ProofRecord::deletion(c(&[1, -2])),
                ProofRecord::theory_lemma(c(&[-3, -4, 7]), 7, vec![Lit::pos(8), Lit::neg(9)]),
                ProofRecord::learned(Clause::empty()),
            ],
        };
        let text = write_certificate(&proof);
        assert_eq!(text, "1 -2 0\nd 1 -2 0\nt 7 -3 -4 7 0 8 -9 0\n0\n");
        assert_eq!(read_certificate(&text).unwrap(), proof);
    }

    #[test]
    fn malformed_certificates() {
        assert_eq!(read_certificate("1 2 0\n1 2\n").unwrap_err().line, 2);
        assert_eq!(read_certificate("t 5 1 0 0\n").unwrap_err().line, 1);
        assert_eq!(read_certificate("\nd x 0\n").unwrap_err().line, 2);
    }
}
