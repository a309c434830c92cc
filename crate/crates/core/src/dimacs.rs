//! DIMACS CNF reading and writing.

use std::fmt::Write as _;

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Lit};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("header declares {declared} clauses but {found} were read")]
    ClauseCount { declared: usize, found: usize },
    #[error("missing `p cnf` header")]
    MissingHeader,
}

fn syntax(line: usize, msg: impl Into<String>) -> DimacsError {
    DimacsError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Parses DIMACS CNF. Clauses may span lines; `c` lines are comments.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(u32, usize)> = None;
    let mut formula = CnfFormula::new(0);
    let mut current: Vec<Lit> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(syntax(lineno, "duplicate header"));
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(syntax(lineno, "expected `p cnf <vars> <clauses>`"));
            }
            let vars = parts[2]
                .parse()
                .map_err(|_| syntax(lineno, "bad variable count"))?;
            let clauses = parts[3]
                .parse()
                .map_err(|_| syntax(lineno, "bad clause count"))?;
            header = Some((vars, clauses));
            formula.set_num_vars(vars);
            continue;
        }
        let (vars, _) = header.ok_or(DimacsError::MissingHeader)?;
        for tok in line.split_whitespace() {
            let v: i32 = tok
                .parse()
                .map_err(|_| syntax(lineno, format!("bad literal `{tok}`")))?;
            match Lit::from_dimacs(v) {
                None if v == 0 => formula.add_clause(Clause::new(current.drain(..))),
                None => return Err(syntax(lineno, format!("bad literal `{tok}`"))),
                Some(l) if l.var() > vars => {
                    return Err(syntax(lineno, format!("variable {} exceeds header", l.var())))
                }
                Some(l) => {
                    current.push(l);
                    continue;
                }
            };
        }
    }
    let (_, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        formula.add_clause(Clause::new(current));
    }
    if formula.all_clauses().len() != declared {
        return Err(DimacsError::ClauseCount {
            declared,
            found: formula.all_clauses().len(),
        });
    }
    Ok(formula)
}

/// Writes the live clauses of `f` in DIMACS CNF.
pub fn write_dimacs(f: &CnfFormula) -> String {
    let mut out = String::new();
    writeln!(out, "p cnf {} {}", f.num_vars(), f.len()).unwrap();
    for c in f.clauses() {
        write_clause_line(&mut out, c);
    }
    out
}

pub(crate) fn write_clause_line(out: &mut String, c: &Clause) {
    for l in c.lits() {
        write!(out, "{} ", l).unwrap();
    }
    out.push_str("0\n");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = CnfFormula::from_clauses(
            4,
            [Clause::from_dimacs(&[1, -2]), Clause::empty(), Clause::from_dimacs(&[4])],
        );
        let text = write_dimacs(&f);
        assert_eq!(text, "p cnf 4 3\n1 -2 0\n0\n4 0\n");
        assert_eq!(parse_dimacs(&text).unwrap(), f);
    }

    #[test]
    fn comments_and_multiline_clauses() {
        let f = parse_dimacs("c hi\np cnf 3 2\n1 2\n 3 0 -1 0\n").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.all_clauses()[0].to_dimacs(), vec![1, 2, 3]);
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(
            parse_dimacs("p cnf 2 1\n1 x 0\n"),
            Err(syntax(2, "bad literal `x`"))
        );
        assert!(matches!(
            parse_dimacs("p cnf 1 1\n2 0\n"),
            Err(DimacsError::Syntax { line: 2, .. })
        ));
        assert_eq!(parse_dimacs("1 0\n"), Err(DimacsError::MissingHeader));
        assert_eq!(
            parse_dimacs("p cnf 1 2\n1 0\n"),
            Err(DimacsError::ClauseCount {
                declared: 2,
                found: 1
            })
        );
    }
}
