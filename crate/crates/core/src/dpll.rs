//! Deterministic DPLL with two watched literals.
//!
//! Branching always picks the lowest unassigned variable and tries `false`
//! first; unit propagation runs to fixpoint before every decision. Backtracking
//! is chronological, so the answer is the lexicographically first satisfying
//! assignment reachable under unit propagation, and is reproducible.

use crate::cnf::{Assignment, Cnf, Lit};
use crate::error::{Error, Result};

pub const DEFAULT_VAR_CAP: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            SatResult::Sat(a) => Some(a),
            SatResult::Unsat => None,
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
}

const UNSET: u8 = 2;

struct Search {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<u8>,
    trail: Vec<Lit>,
    /// Trail length at each decision, and whether that decision is the flipped (`true`) branch.
    levels: Vec<(usize, bool)>,
    head: usize,
    stats: SearchStats,
}

impl Search {
    fn lit_value(&self, lit: Lit) -> u8 {
        match self.value[lit.var()] {
            UNSET => UNSET,
            v => v ^ lit.is_negated() as u8,
        }
    }

    fn assign(&mut self, lit: Lit) {
        self.value[lit.var()] = !lit.is_negated() as u8;
        self.trail.push(lit);
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.head < self.trail.len() {
            let falsified = self.trail[self.head].negate();
            self.head += 1;
            let mut watching = std::mem::take(&mut self.watches[falsified.code()]);
            let mut i = 0;
            let mut ok = true;
            while i < watching.len() {
                let ci = watching[i];
                let clause = &mut self.clauses[ci];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let other = clause[0];
                let other_value = match self.value[other.var()] {
                    UNSET => UNSET,
                    v => v ^ other.is_negated() as u8,
                };
                if other_value == 1 {
                    i += 1;
                    continue;
                }
                let replacement = (2..clause.len()).find(|&k| {
                    let l = clause[k];
                    match self.value[l.var()] {
                        UNSET => true,
                        v => v ^ l.is_negated() as u8 == 1,
                    }
                });
                if let Some(k) = replacement {
                    clause.swap(1, k);
                    let new_watch = clause[1];
                    self.watches[new_watch.code()].push(ci);
                    watching.swap_remove(i);
                    continue;
                }
                i += 1;
                if other_value == 0 {
                    ok = false;
                    break;
                }
                self.stats.propagations += 1;
                self.assign(other);
            }
            self.watches[falsified.code()] = watching;
            if !ok {
                self.stats.conflicts += 1;
                return false;
            }
        }
        true
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let lit = self.trail.pop().unwrap();
            self.value[lit.var()] = UNSET;
        }
        self.head = len;
    }

    fn run(&mut self, n: usize) -> Option<Assignment> {
        let mut next_var = 0;
        loop {
            if !self.propagate() {
                loop {
                    let (len, flipped) = self.levels.pop()?;
                    let decided = self.trail[len];
                    self.undo_to(len);
                    if !flipped {
                        self.levels.push((len, true));
                        self.assign(decided.negate());
                        break;
                    }
                }
                next_var = 0;
                continue;
            }
            while next_var < n && self.value[next_var] != UNSET {
                next_var += 1;
            }
            if next_var == n {
                return Some(self.value.iter().map(|&v| v == 1).collect());
            }
            self.stats.decisions += 1;
            self.levels.push((self.trail.len(), false));
            self.assign(Lit::neg(next_var));
        }
    }
}

pub fn dpll_solve(cnf: &Cnf) -> Result<SatResult> {
    dpll_solve_with_cap(cnf, DEFAULT_VAR_CAP).map(|(r, _)| r)
}

pub fn dpll_solve_with_cap(cnf: &Cnf, cap: usize) -> Result<(SatResult, SearchStats)> {
    let n = cnf.num_vars();
    if n > cap {
        return Err(Error::Capacity {
            what: "DPLL",
            size: n,
            cap,
        });
    }
    let mut search = Search {
        clauses: Vec::new(),
        watches: vec![Vec::new(); 2 * n],
        value: vec![UNSET; n],
        trail: Vec::new(),
        levels: Vec::new(),
        head: 0,
        stats: SearchStats::default(),
    };
    let mut units = Vec::new();
    for clause in cnf.clauses() {
        // Clauses from `Cnf` are sorted, so complementary literals are adjacent.
        if clause.windows(2).any(|w| w[0].var() == w[1].var()) {
            continue;
        }
        match clause.len() {
            0 => return Ok((SatResult::Unsat, search.stats)),
            1 => units.push(clause[0]),
            _ => {
                let ci = search.clauses.len();
                search.watches[clause[0].code()].push(ci);
                search.watches[clause[1].code()].push(ci);
                search.clauses.push(clause.clone());
            }
        }
    }
    for lit in units {
        match search.lit_value(lit) {
            0 => return Ok((SatResult::Unsat, search.stats)),
            1 => {}
            _ => search.assign(lit),
        }
    }
    let result = match search.run(n) {
        Some(a) => SatResult::Sat(a),
        None => SatResult::Unsat,
    };
    Ok((result, search.stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(n: usize, clauses: &[&[i64]]) -> Cnf {
        Cnf::from_clauses(
            n,
            clauses
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|&v| Lit::new(v.unsigned_abs() as usize - 1, v < 0))
                        .collect()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn unit_and_contradiction() {
        assert_eq!(
            dpll_solve(&cnf(1, &[&[1]])).unwrap(),
            SatResult::Sat(vec![true])
        );
        assert_eq!(
            dpll_solve(&cnf(1, &[&[1], &[-1]])).unwrap(),
            SatResult::Unsat
        );
        assert_eq!(dpll_solve(&cnf(2, &[&[]])).unwrap(), SatResult::Unsat);
        assert_eq!(
            dpll_solve(&cnf(2, &[])).unwrap(),
            SatResult::Sat(vec![false, false])
        );
    }

    #[test]
    fn tautologies_are_ignored() {
        assert_eq!(
            dpll_solve(&cnf(2, &[&[1, -1, 2], &[2, -2]])).unwrap(),
            SatResult::Sat(vec![false, false])
        );
    }

    #[test]
    fn false_first_then_backtrack() {
        // x1 ∨ x2, ¬x2: x1 = false forces x2 = true, conflict, so x1 = true.
        assert_eq!(
            dpll_solve(&cnf(2, &[&[1, 2], &[-2]])).unwrap(),
            SatResult::Sat(vec![true, false])
        );
        // Pigeonhole 3 into 2 is unsatisfiable.
        let php = cnf(
            6,
            &[
                &[1, 2],
                &[3, 4],
                &[5, 6],
                &[-1, -3],
                &[-1, -5],
                &[-3, -5],
                &[-2, -4],
                &[-2, -6],
                &[-4, -6],
            ],
        );
        assert_eq!(dpll_solve(&php).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(matches!(
            dpll_solve(&Cnf::new(65)),
            Err(Error::Capacity { cap: 64, .. })
        ));
        assert!(dpll_solve_with_cap(&Cnf::new(100), 100).is_ok());
    }
}
