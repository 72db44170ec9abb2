//! CNF formulas and DIMACS I/O.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A literal: variable index shifted left once, low bit set for negation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(var: usize) -> Lit {
        Lit((var as u32) << 1)
    }

    pub fn neg(var: usize) -> Lit {
        Lit((var as u32) << 1 | 1)
    }

    pub fn new(var: usize, negated: bool) -> Lit {
        Lit((var as u32) << 1 | negated as u32)
    }

    pub fn from_code(code: usize) -> Lit {
        Lit(code as u32)
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn negate(self) -> Lit {
        Lit(self.0 ^ 1)
    }

    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var()] != self.is_negated()
    }

    /// DIMACS form: 1-based, negative when negated.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_negated() {
            -v
        } else {
            v
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "¬x{}", self.var() + 1)
        } else {
            write!(f, "x{}", self.var() + 1)
        }
    }
}

pub type Clause = Vec<Lit>;
pub type Assignment = Vec<bool>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cnf {
    n: usize,
    clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(n: usize) -> Self {
        Cnf {
            n,
            clauses: Vec::new(),
        }
    }

    /// Checks variable ranges and removes duplicate literals within each clause.
    pub fn from_clauses(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        let mut cnf = Cnf::new(n);
        for clause in clauses {
            cnf.push(clause)?;
        }
        Ok(cnf)
    }

    pub fn push(&mut self, mut clause: Clause) -> Result<()> {
        if let Some(lit) = clause.iter().find(|l| l.var() >= self.n) {
            return Err(Error::invalid(format!(
                "literal {lit} out of range for {} variables",
                self.n
            )));
        }
        clause.sort_unstable();
        clause.dedup();
        self.clauses.push(clause);
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, i: usize) -> &Clause {
        &self.clauses[i]
    }

    pub fn clause_satisfied(&self, i: usize, assignment: &[bool]) -> bool {
        self.clauses[i].iter().any(|l| l.eval(assignment))
    }

    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.n
            && (0..self.clauses.len()).all(|i| self.clause_satisfied(i, assignment))
    }

    /// Indices of clauses falsified by `assignment`, ascending.
    pub fn violated(&self, assignment: &[bool]) -> Vec<usize> {
        (0..self.clauses.len())
            .filter(|&i| !self.clause_satisfied(i, assignment))
            .collect()
    }

    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let loc = |col: usize| format!("line {}, column {}", lineno + 1, col + 1);
            let trimmed = line.trim_start();
            let indent = line.len() - trimmed.len();
            if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
                continue;
            }
            if trimmed.starts_with('p') {
                if header.is_some() {
                    return Err(Error::parse(loc(indent), "duplicate problem line"));
                }
                let fields: Vec<&str> = trimmed.split_whitespace().collect();
                if fields.len() != 4 || fields[1] != "cnf" {
                    return Err(Error::parse(
                        loc(indent),
                        "expected `p cnf <vars> <clauses>`",
                    ));
                }
                let n = fields[2]
                    .parse()
                    .map_err(|_| Error::parse(loc(indent), "bad variable count"))?;
                let m = fields[3]
                    .parse()
                    .map_err(|_| Error::parse(loc(indent), "bad clause count"))?;
                header = Some((n, m));
                continue;
            }
            let Some((n, _)) = header else {
                return Err(Error::parse(loc(indent), "clause before the problem line"));
            };
            let mut col = 0;
            for token in line.split_whitespace() {
                col = line[col..].find(token).map_or(col, |p| p + col);
                let value: i64 = token
                    .parse()
                    .map_err(|_| Error::parse(loc(col), format!("`{token}` is not an integer")))?;
                if value == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    let var = value.unsigned_abs() as usize;
                    if var > n {
                        return Err(Error::parse(
                            loc(col),
                            format!("variable {var} exceeds declared count {n}"),
                        ));
                    }
                    current.push(Lit::new(var - 1, value < 0));
                }
                col += token.len();
            }
        }
        let Some((n, m)) = header else {
            return Err(Error::parse("end of input", "missing problem line"));
        };
        if !current.is_empty() {
            clauses.push(current);
        }
        if clauses.len() != m {
            return Err(Error::parse(
                "end of input",
                format!("declared {m} clauses, found {}", clauses.len()),
            ));
        }
        Cnf::from_clauses(n, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.n, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                out.push_str(&lit.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}
