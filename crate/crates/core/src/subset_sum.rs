//! Subset sum with hidden values: an instance family on which every solver
//! needs `C(2n−1, n)` trials.
//!
//! The `2n` values are `a_1 = M+n+2`, `n−1` copies of `M+2` and `n` copies of
//! `M+3`. With `M` large, a partition with unequal side sizes always loses to
//! the bigger side, and an equal-size partition other than the solution always
//! loses to the side holding `a_1`. Either way the answer carries no
//! information about where the `M+2` values sit.

use num_integer::binomial;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial::{Feedback, HiddenInstance, Step, TrialSolver, VerificationOracle};

/// `side[i]` is true when `a_i` is in `T_1`.
pub type Partition = Vec<bool>;

/// The side with the larger sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heavier {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsumInstance {
    n: usize,
    m: u64,
    values: Vec<u64>,
}

impl SsumInstance {
    pub fn default_m(n: usize) -> u64 {
        10 * n as u64
    }

    /// Canonical layout: `a_2..a_n = M+2`, `a_{n+1}..a_{2n} = M+3`.
    pub fn new(n: usize, m: u64) -> Result<Self> {
        let layout: Vec<usize> = (1..n).collect();
        Self::with_layout(n, m, &layout)
    }

    /// `small` lists the `n−1` positions in `1..2n` holding `M+2`; the rest of
    /// `1..2n` hold `M+3`. `a_1` stays at position 0.
    pub fn with_layout(n: usize, m: u64, small: &[usize]) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("subset-sum instance needs n ≥ 1"));
        }
        // Non-M offsets sum to (n+2) + 2(n−1) + 3n = 6n.
        if m <= 6 * n as u64 {
            return Err(Error::invalid(format!(
                "M = {m} must exceed 6n = {} for size dominance",
                6 * n
            )));
        }
        if small.len() != n - 1 {
            return Err(Error::invalid(format!(
                "layout lists {} small positions, expected {}",
                small.len(),
                n - 1
            )));
        }
        let mut values = vec![m + 3; 2 * n];
        values[0] = m + n as u64 + 2;
        for &p in small {
            if p == 0 || p >= 2 * n {
                return Err(Error::invalid(format!(
                    "small position {p} out of 1..{}",
                    2 * n
                )));
            }
            if values[p] == m + 2 {
                return Err(Error::invalid(format!("small position {p} repeated")));
            }
            values[p] = m + 2;
        }
        Ok(SsumInstance { n, m, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Positions holding `M+2`, ascending.
    pub fn layout(&self) -> Vec<usize> {
        (1..2 * self.n)
            .filter(|&i| self.values[i] == self.m + 2)
            .collect()
    }

    /// The equal-sum partition with `a_1` in `T_1`.
    pub fn solution(&self) -> Partition {
        let mut side = vec![false; 2 * self.n];
        side[0] = true;
        for p in self.layout() {
            side[p] = true;
        }
        side
    }

    fn sums(&self, trial: &Partition) -> (u64, u64) {
        assert_eq!(
            trial.len(),
            2 * self.n,
            "partition must cover all 2n values"
        );
        trial.iter().zip(&self.values).fold(
            (0, 0),
            |(s1, s2), (&first, &v)| {
                if first {
                    (s1 + v, s2)
                } else {
                    (s1, s2 + v)
                }
            },
        )
    }
}

/// Honest answer from the actual sums: `Yes` on equal sums, otherwise the heavier side.
pub fn ssum_adversary(inst: &SsumInstance, trial: &Partition) -> Feedback<Heavier> {
    let (s1, s2) = inst.sums(trial);
    match s1.cmp(&s2) {
        std::cmp::Ordering::Equal => Feedback::Yes,
        std::cmp::Ordering::Greater => Feedback::Violation(Heavier::First),
        std::cmp::Ordering::Less => Feedback::Violation(Heavier::Second),
    }
}

#[derive(Clone, Debug)]
pub struct SsumOracle {
    instance: SsumInstance,
}

impl SsumOracle {
    pub fn new(instance: SsumInstance) -> Self {
        SsumOracle { instance }
    }
}

impl VerificationOracle for SsumOracle {
    type Trial = Partition;
    type Label = Heavier;

    fn verify(&mut self, trial: &Partition) -> Feedback<Heavier> {
        ssum_adversary(&self.instance, trial)
    }
}

impl HiddenInstance<Partition, Heavier> for SsumInstance {
    fn is_violated(&self, trial: &Partition, label: &Heavier) -> bool {
        trial.len() == 2 * self.n && ssum_adversary(self, trial) == Feedback::Violation(*label)
    }

    fn is_solution(&self, trial: &Partition) -> bool {
        trial.len() == 2 * self.n && ssum_adversary(self, trial).is_yes()
    }
}

/// Next `k`-subset of `0..n` in lexicographic order, in place.
fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let Some(i) = (0..k).rev().find(|&i| comb[i] < n - k + i) else {
        return false;
    };
    comb[i] += 1;
    for j in i + 1..k {
        comb[j] = comb[j - 1] + 1;
    }
    true
}

/// All `k`-subsets of `lo..hi`, lexicographic.
pub fn combinations(lo: usize, hi: usize, k: usize) -> Vec<Vec<usize>> {
    let width = hi.saturating_sub(lo);
    if k > width {
        return Vec::new();
    }
    let mut comb: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    loop {
        out.push(comb.iter().map(|&c| c + lo).collect());
        if !next_combination(&mut comb, width) {
            return out;
        }
    }
}

/// Knows only `n`. Keeps `a_1` in `T_1` and tries every `(n−1)`-subset of
/// `1..2n` as its companions, lexicographically, until `Yes`.
#[derive(Clone, Debug)]
pub struct EliminationSolver {
    n: usize,
    next: Option<Vec<usize>>,
}

impl EliminationSolver {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("subset-sum solver needs n ≥ 1"));
        }
        Ok(EliminationSolver {
            n,
            next: Some((0..n - 1).collect()),
        })
    }

    fn partition(&self, comb: &[usize]) -> Partition {
        let mut side = vec![false; 2 * self.n];
        side[0] = true;
        for &c in comb {
            side[c + 1] = true;
        }
        side
    }
}

impl TrialSolver for EliminationSolver {
    type Trial = Partition;
    type Label = Heavier;
    type Verdict = ();

    fn next_step(&mut self) -> Result<Step<Partition, ()>> {
        match &self.next {
            Some(comb) => Ok(Step::Propose(self.partition(comb))),
            None => Err(Error::Inconsistent(
                "every equal-size partition was rejected".into(),
            )),
        }
    }

    fn observe(&mut self, _trial: &Partition, _label: &Heavier) -> Result<()> {
        if let Some(comb) = &mut self.next {
            if !next_combination(comb, 2 * self.n - 1) {
                self.next = None;
            }
        }
        Ok(())
    }
}

/// Number of layouts, `C(2n−1, n−1) = C(2n−1, n)`.
pub fn layout_count(n: usize) -> u64 {
    binomial(2 * n as u64 - 1, n as u64 - 1)
}

/// Layouts (see [`SsumInstance::with_layout`]) that would have produced every
/// answer in `history`. Computed by replaying each trial against each layout.
pub fn consistent_layouts(
    n: usize,
    m: u64,
    history: &[(Partition, Feedback<Heavier>)],
) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for layout in combinations(1, 2 * n, n - 1) {
        let inst = SsumInstance::with_layout(n, m, &layout)?;
        if history
            .iter()
            .all(|(trial, fb)| &ssum_adversary(&inst, trial) == fb)
        {
            out.push(layout);
        }
    }
    Ok(out)
}

/// Size of the consistent set before any trial and after each trial of `history`.
pub fn consistent_trace(
    n: usize,
    m: u64,
    history: &[(Partition, Feedback<Heavier>)],
) -> Result<Vec<usize>> {
    let mut alive = combinations(1, 2 * n, n - 1)
        .iter()
        .map(|layout| SsumInstance::with_layout(n, m, layout))
        .collect::<Result<Vec<_>>>()?;
    let mut trace = vec![alive.len()];
    for (trial, fb) in history {
        alive.retain(|inst| &ssum_adversary(inst, trial) == fb);
        trace.push(alive.len());
    }
    Ok(trace)
}

/// Outcome of running the elimination solver on one layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub layout: Vec<usize>,
    /// Trials including the final `Yes`.
    pub trials: usize,
    /// Trials answered with a violation.
    pub violations: usize,
}

/// Runs [`EliminationSolver`] against every layout of size `n`.
pub fn elimination_sweep(n: usize, m: u64) -> Result<Vec<SweepRow>> {
    combinations(1, 2 * n, n - 1)
        .into_iter()
        .map(|layout| {
            let inst = SsumInstance::with_layout(n, m, &layout)?;
            let mut solver = EliminationSolver::new(n)?;
            let mut oracle = SsumOracle::new(inst);
            let run = crate::trial::run_solver(
                &mut solver,
                &mut oracle,
                crate::trial::OracleBudget::unlimited(),
            )?;
            Ok(SweepRow {
                layout,
                trials: run.trials(),
                violations: run.violations(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::subset_sum_lower_bound;
    use crate::trial::{check_honesty, run_solver, OracleBudget};

    fn part(bits: &[u8]) -> Partition {
        bits.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn example_values_and_answers() {
        let inst = SsumInstance::new(2, 100).unwrap();
        assert_eq!(inst.values(), &[104, 102, 103, 103]);
        assert_eq!(ssum_adversary(&inst, &part(&[1, 1, 0, 0])), Feedback::Yes);
        assert_eq!(
            ssum_adversary(&inst, &part(&[1, 0, 0, 0])),
            Feedback::Violation(Heavier::Second)
        );
        assert_eq!(
            ssum_adversary(&inst, &part(&[1, 0, 1, 0])),
            Feedback::Violation(Heavier::First)
        );
    }

    #[test]
    fn small_m_is_rejected() {
        assert!(SsumInstance::new(3, 18).is_err());
        assert!(SsumInstance::new(3, 19).is_ok());
        assert!(SsumInstance::with_layout(3, 30, &[1, 1]).is_err());
        assert!(SsumInstance::with_layout(3, 30, &[1, 6]).is_err());
    }

    #[test]
    fn worst_case_matches_binomial() {
        for (n, worst) in [(1, 1), (2, 3), (3, 10), (4, 35)] {
            let rows = elimination_sweep(n, SsumInstance::default_m(n)).unwrap();
            assert_eq!(rows.len() as u64, layout_count(n));
            assert_eq!(rows.iter().map(|r| r.trials).max().unwrap(), worst);
            assert_eq!(rows.iter().map(|r| r.trials).min().unwrap(), 1);
            assert_eq!(worst as u64, subset_sum_lower_bound(n));
            assert!(rows.iter().all(|r| r.violations + 1 == r.trials));
        }
    }

    #[test]
    fn transcripts_are_honest_and_shrink_by_at_most_one() {
        let n = 3;
        let m = SsumInstance::default_m(n);
        for layout in combinations(1, 2 * n, n - 1) {
            let inst = SsumInstance::with_layout(n, m, &layout).unwrap();
            let run = run_solver(
                &mut EliminationSolver::new(n).unwrap(),
                &mut SsumOracle::new(inst.clone()),
                OracleBudget::unlimited(),
            )
            .unwrap();
            assert_eq!(run.outcome.solution(), Some(&inst.solution()));
            assert!(check_honesty(&run.transcript, &inst).is_honest());
            let history: Vec<_> = run
                .transcript
                .entries()
                .iter()
                .map(|e| (e.trial.clone(), e.feedback.clone()))
                .collect();
            let trace = consistent_trace(n, m, &history).unwrap();
            assert_eq!(trace[0] as u64, layout_count(n));
            for (k, (_, fb)) in history.iter().enumerate() {
                if !fb.is_yes() {
                    assert!(trace[k] - trace[k + 1] <= 1);
                }
            }
            assert_eq!(*trace.last().unwrap(), 1);
        }
    }

    #[test]
    fn unequal_sizes_reveal_nothing() {
        let n = 3;
        let m = SsumInstance::default_m(n);
        let history = vec![(
            part(&[1, 1, 1, 1, 0, 0]),
            Feedback::Violation(Heavier::First),
        )];
        assert_eq!(
            consistent_layouts(n, m, &history).unwrap().len() as u64,
            layout_count(n)
        );
    }

    #[test]
    fn budget_stops_the_solver() {
        let inst = SsumInstance::with_layout(3, 30, &[4, 5]).unwrap();
        let run = run_solver(
            &mut EliminationSolver::new(3).unwrap(),
            &mut SsumOracle::new(inst),
            OracleBudget::trials(4),
        )
        .unwrap();
        assert_eq!(run.trials(), 4);
        assert_eq!(run.outcome.kind(), "budget_exhausted");
    }
}
