//! Satisfiability with hidden clauses.
//!
//! Trials are assignments; a violation is the index of one falsified clause.
//! [`AlgSatSolver`] keeps a candidate-literal set per clause and proposes
//! satisfying assignments of the formula those sets describe.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cnf::{Assignment, Cnf, Lit};
use crate::dpll::{dpll_solve_with_cap, SatResult, DEFAULT_VAR_CAP};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::trial::{
    run_solver, Feedback, HiddenInstance, OracleBudget, Run, Step, TrialSolver, VerificationOracle,
};

pub type ClauseIndex = usize;

/// Returned when the hidden formula is shown unsatisfiable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Unsatisfiable;

impl HiddenInstance<Assignment, ClauseIndex> for Cnf {
    fn is_violated(&self, trial: &Assignment, &i: &ClauseIndex) -> bool {
        trial.len() == self.num_vars() && i < self.num_clauses() && !self.clause_satisfied(i, trial)
    }

    fn is_solution(&self, trial: &Assignment) -> bool {
        self.is_satisfied(trial)
    }
}

/// Honest oracle for a hidden formula.
#[derive(Clone, Debug)]
pub struct SatOracle {
    formula: Cnf,
    policy: Policy,
}

impl SatOracle {
    /// Reports the lowest-indexed falsified clause.
    pub fn new(formula: Cnf) -> Self {
        Self::with_policy(formula, Policy::Canonical)
    }

    pub fn with_policy(formula: Cnf, policy: Policy) -> Self {
        SatOracle { formula, policy }
    }

    pub fn formula(&self) -> &Cnf {
        &self.formula
    }
}

impl VerificationOracle for SatOracle {
    type Trial = Assignment;
    type Label = ClauseIndex;

    fn verify(&mut self, trial: &Assignment) -> Feedback<ClauseIndex> {
        let violated = self.formula.violated(trial);
        match self.policy.pick(&violated) {
            None => Feedback::Yes,
            Some(&i) => Feedback::Violation(i),
        }
    }
}

/// Candidate literal sets, one bitmask over the `2n` literal codes per clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseShadow {
    n: usize,
    sets: Vec<u128>,
}

impl ClauseShadow {
    pub fn full(n: usize, m: usize) -> Result<Self> {
        if n > DEFAULT_VAR_CAP {
            return Err(Error::Capacity {
                what: "clause shadow",
                size: n,
                cap: DEFAULT_VAR_CAP,
            });
        }
        let all = if n == 64 {
            u128::MAX
        } else {
            (1u128 << (2 * n)) - 1
        };
        Ok(ClauseShadow {
            n,
            sets: vec![all; m],
        })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.sets.len()
    }

    pub fn literals(&self, i: usize) -> Vec<Lit> {
        let mut mask = self.sets[i];
        let mut out = Vec::with_capacity(mask.count_ones() as usize);
        while mask != 0 {
            out.push(Lit::from_code(mask.trailing_zeros() as usize));
            mask &= mask - 1;
        }
        out
    }

    pub fn contains(&self, i: usize, lit: Lit) -> bool {
        self.sets[i] >> lit.code() & 1 == 1
    }

    pub fn size(&self, i: usize) -> usize {
        self.sets[i].count_ones() as usize
    }

    pub fn total_size(&self) -> usize {
        (0..self.sets.len()).map(|i| self.size(i)).sum()
    }

    /// Does the candidate set of clause `i` contain every literal of `clause`?
    pub fn covers(&self, i: usize, clause: &[Lit]) -> bool {
        clause.iter().all(|&l| self.contains(i, l))
    }

    pub fn formula(&self) -> Cnf {
        Cnf::from_clauses(
            self.n,
            (0..self.sets.len()).map(|i| self.literals(i)).collect(),
        )
        .expect("shadow literals are in range")
    }

    fn true_mask(&self, x: &[bool]) -> u128 {
        x.iter()
            .enumerate()
            .map(|(v, &b)| 1u128 << Lit::new(v, !b).code())
            .fold(0, |acc, bit| acc | bit)
    }

    /// Drop the literals of clause `i` made true by `x`.
    pub fn eliminate(&mut self, i: usize, x: &[bool]) -> Result<usize> {
        if i >= self.sets.len() {
            return Err(Error::Protocol(format!(
                "clause index {i} out of range for {} clauses",
                self.sets.len()
            )));
        }
        let satisfied = self.sets[i] & self.true_mask(x);
        if satisfied == 0 {
            return Err(Error::Protocol(format!(
                "clause {i} has no candidate literal true under the trial"
            )));
        }
        self.sets[i] &= !satisfied;
        Ok(satisfied.count_ones() as usize)
    }
}

pub struct AlgSatSolver {
    shadow: ClauseShadow,
    calls: u64,
}

impl AlgSatSolver {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        Ok(AlgSatSolver {
            shadow: ClauseShadow::full(n, m)?,
            calls: 0,
        })
    }

    pub fn shadow(&self) -> &ClauseShadow {
        &self.shadow
    }
}

impl TrialSolver for AlgSatSolver {
    type Trial = Assignment;
    type Label = ClauseIndex;
    type Verdict = Unsatisfiable;

    fn next_step(&mut self) -> Result<Step<Assignment, Unsatisfiable>> {
        self.calls += 1;
        let (result, _) = dpll_solve_with_cap(&self.shadow.formula(), DEFAULT_VAR_CAP)?;
        Ok(match result {
            SatResult::Sat(x) => Step::Propose(x),
            SatResult::Unsat => Step::Conclude(Unsatisfiable),
        })
    }

    fn observe(&mut self, trial: &Assignment, &i: &ClauseIndex) -> Result<()> {
        self.shadow.eliminate(i, trial).map(drop)
    }

    fn computation_calls(&self) -> u64 {
        self.calls
    }
}

pub fn alg_sat<O>(
    oracle: &mut O,
    n: usize,
    m: usize,
    budget: OracleBudget,
) -> Result<Run<Assignment, ClauseIndex, Unsatisfiable>>
where
    O: VerificationOracle<Trial = Assignment, Label = ClauseIndex> + ?Sized,
{
    run_solver(&mut AlgSatSolver::new(n, m)?, oracle, budget)
}

/// Clauses of the three-block family, in label order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockClause {
    /// Some variable of block 0, 1 or 2 is true.
    AtLeastOne(usize),
    /// Not both of these block-2 variables.
    AtMostOne(usize, usize),
    /// Indexed by a block-0 and a block-1 variable: `¬x_a ∨ ¬x_b`, or for the
    /// hidden triple `¬x_a ∨ ¬x_b ∨ x_c`.
    Pair(usize, usize),
}

/// Adversary that hides one triple `(i1, i2, i3)` from three equal blocks and
/// eliminates exactly one candidate triple per informative trial.
#[derive(Clone, Debug)]
pub struct BlockAdversary {
    n: usize,
    k: usize,
    survivors: BTreeSet<(usize, usize, usize)>,
    informative: usize,
    structural: usize,
}

impl BlockAdversary {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n % 3 != 0 {
            return Err(Error::invalid(format!(
                "block adversary needs a positive multiple of 3 variables, got {n}"
            )));
        }
        let k = n / 3;
        let survivors = (0..k)
            .flat_map(|a| (k..2 * k).flat_map(move |b| (2 * k..n).map(move |c| (a, b, c))))
            .collect();
        Ok(BlockAdversary {
            n,
            k,
            survivors,
            informative: 0,
            structural: 0,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// `3 + C(k, 2) + k²` with `k = n / 3`.
    pub fn num_clauses(&self) -> usize {
        3 + self.k * (self.k - 1) / 2 + self.k * self.k
    }

    pub fn survivors(&self) -> &BTreeSet<(usize, usize, usize)> {
        &self.survivors
    }

    pub fn informative_queries(&self) -> usize {
        self.informative
    }

    pub fn structural_violations(&self) -> usize {
        self.structural
    }

    pub fn clause_label(&self, index: ClauseIndex) -> BlockClause {
        let k = self.k;
        let amo = k * (k - 1) / 2;
        if index < 3 {
            return BlockClause::AtLeastOne(index);
        }
        let mut rest = index - 3;
        if rest < amo {
            for i in 0..k {
                for j in i + 1..k {
                    if rest == 0 {
                        return BlockClause::AtMostOne(2 * k + i, 2 * k + j);
                    }
                    rest -= 1;
                }
            }
        }
        rest -= amo;
        BlockClause::Pair(rest / k, k + rest % k)
    }

    pub fn clause_index(&self, clause: BlockClause) -> ClauseIndex {
        let k = self.k;
        match clause {
            BlockClause::AtLeastOne(b) => b,
            BlockClause::AtMostOne(i, j) => {
                let (i, j) = (i - 2 * k, j - 2 * k);
                3 + i * k - i * (i + 1) / 2 + (j - i - 1)
            }
            BlockClause::Pair(a, b) => 3 + k * (k - 1) / 2 + a * k + (b - k),
        }
    }

    /// The assignment with exactly the three given variables true.
    pub fn characteristic(&self, (a, b, c): (usize, usize, usize)) -> Assignment {
        let mut x = vec![false; self.n];
        x[a] = true;
        x[b] = true;
        x[c] = true;
        x
    }

    /// A concrete formula consistent with every answer given so far: the one
    /// hiding the smallest surviving triple.
    pub fn hidden_formula(&self) -> Cnf {
        let hidden = *self.survivors.iter().next().expect("at least one survivor");
        self.formula_for(hidden)
    }

    pub fn formula_for(&self, (h1, h2, h3): (usize, usize, usize)) -> Cnf {
        let k = self.k;
        let block = |b: usize| (b * k..(b + 1) * k).map(Lit::pos).collect::<Vec<_>>();
        let mut clauses = vec![block(0), block(1), block(2)];
        for i in 2 * k..self.n {
            for j in i + 1..self.n {
                clauses.push(vec![Lit::neg(i), Lit::neg(j)]);
            }
        }
        for a in 0..k {
            for b in k..2 * k {
                let mut clause = vec![Lit::neg(a), Lit::neg(b)];
                if (a, b) == (h1, h2) {
                    clause.push(Lit::pos(h3));
                }
                clauses.push(clause);
            }
        }
        Cnf::from_clauses(self.n, clauses).expect("in range")
    }

    fn structural_violation(&self, x: &[bool]) -> Option<ClauseIndex> {
        let k = self.k;
        for b in 0..3 {
            if !x[b * k..(b + 1) * k].iter().any(|&v| v) {
                return Some(b);
            }
        }
        for i in 2 * k..self.n {
            for j in i + 1..self.n {
                if x[i] && x[j] {
                    return Some(self.clause_index(BlockClause::AtMostOne(i, j)));
                }
            }
        }
        None
    }
}

impl VerificationOracle for BlockAdversary {
    type Trial = Assignment;
    type Label = ClauseIndex;

    fn verify(&mut self, x: &Assignment) -> Feedback<ClauseIndex> {
        assert_eq!(x.len(), self.n, "assignment length");
        if let Some(index) = self.structural_violation(x) {
            self.structural += 1;
            return Feedback::Violation(index);
        }
        let k = self.k;
        let first = |r: std::ops::Range<usize>| r.clone().find(|&i| x[i]).unwrap();
        let triple = (first(0..k), first(k..2 * k), first(2 * k..self.n));
        if self.survivors.contains(&triple) {
            if self.survivors.len() == 1 {
                if *x == self.characteristic(triple) {
                    return Feedback::Yes;
                }
                // Extra ones in the first two blocks falsify a two-literal pair clause.
                let ones = |r: std::ops::Range<usize>| r.filter(|&i| x[i]).collect::<Vec<_>>();
                let (left, right) = (ones(0..k), ones(k..2 * k));
                let pair = left
                    .iter()
                    .flat_map(|&a| right.iter().map(move |&b| (a, b)))
                    .find(|&(a, b)| (a, b) != (triple.0, triple.1))
                    .expect("trial differs from the characteristic assignment");
                return Feedback::Violation(self.clause_index(BlockClause::Pair(pair.0, pair.1)));
            }
            self.survivors.remove(&triple);
            self.informative += 1;
        }
        Feedback::Violation(self.clause_index(BlockClause::Pair(triple.0, triple.1)))
    }
}

/// A member of the learning family: either the single clause falsified only
/// by `y`, or a tautology.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LearningCandidate {
    Excludes(Vec<bool>),
    Tautology,
}

impl LearningCandidate {
    pub fn formula(&self, n: usize) -> Cnf {
        let clause = match self {
            LearningCandidate::Excludes(y) => (0..n).map(|i| Lit::new(i, y[i])).collect(),
            LearningCandidate::Tautology => vec![Lit::pos(0), Lit::neg(0)],
        };
        Cnf::from_clauses(n.max(1), vec![clause]).expect("in range")
    }
}

/// `2^n + 1`.
pub fn family_size(n: usize) -> u64 {
    (1u64 << n) + 1
}

/// Oracle that accepts every assignment, so the solver never learns which
/// family member is hidden.
#[derive(Clone, Debug)]
pub struct LearningAdversary {
    n: usize,
    trials: Vec<Assignment>,
}

impl LearningAdversary {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::invalid(format!(
                "learning family needs 1 ≤ n ≤ 20, got {n}"
            )));
        }
        Ok(LearningAdversary {
            n,
            trials: Vec::new(),
        })
    }

    pub fn trials(&self) -> &[Assignment] {
        &self.trials
    }

    /// Family members that satisfy every trial answered so far.
    pub fn consistent_candidates(&self) -> Vec<LearningCandidate> {
        let n = self.n;
        let mut out: Vec<LearningCandidate> = (0..1usize << n)
            .map(|bits| LearningCandidate::Excludes((0..n).map(|i| bits >> i & 1 == 1).collect()))
            .chain(std::iter::once(LearningCandidate::Tautology))
            .filter(|c| {
                let f = c.formula(n);
                self.trials.iter().all(|t| f.is_satisfied(t))
            })
            .collect();
        out.sort();
        out
    }
}

impl VerificationOracle for LearningAdversary {
    type Trial = Assignment;
    type Label = ClauseIndex;

    fn verify(&mut self, trial: &Assignment) -> Feedback<ClauseIndex> {
        assert_eq!(trial.len(), self.n, "assignment length");
        self.trials.push(trial.clone());
        Feedback::Yes
    }
}
