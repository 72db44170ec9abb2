//! The trial-and-error interaction model.
//!
//! A solver proposes candidate solutions (trials) to a verification oracle,
//! which answers either [`Feedback::Yes`] or the opaque label of one violated
//! constraint. The solver never sees the constraint itself. [`run_solver`]
//! drives that loop, enforces an [`OracleBudget`] and records a [`Transcript`].
//!
//! Calls a solver makes to its computation oracle (a SAT solver, Gale-Shapley,
//! extension counting, ...) are reported separately through
//! [`TrialSolver::computation_calls`] and never count as trials.

use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// The answer of a verification oracle to one trial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback<L> {
    Yes,
    Violation(L),
}

impl<L> Feedback<L> {
    pub fn is_yes(&self) -> bool {
        matches!(self, Feedback::Yes)
    }

    pub fn violation(&self) -> Option<&L> {
        match self {
            Feedback::Yes => None,
            Feedback::Violation(label) => Some(label),
        }
    }
}

/// Anything that can answer trials: honest oracles built from a hidden
/// instance, adaptive adversaries, and simulators.
pub trait VerificationOracle {
    type Trial;
    type Label;

    fn verify(&mut self, trial: &Self::Trial) -> Feedback<Self::Label>;
}

impl<O: VerificationOracle + ?Sized> VerificationOracle for &mut O {
    type Trial = O::Trial;
    type Label = O::Label;

    fn verify(&mut self, trial: &Self::Trial) -> Feedback<Self::Label> {
        (**self).verify(trial)
    }
}

/// What a solver wants to do next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step<T, V> {
    Propose(T),
    /// Stop without a confirmed solution, e.g. "the hidden formula is unsatisfiable".
    Conclude(V),
}

pub trait TrialSolver {
    type Trial: Clone;
    type Label: Clone;
    /// Conclusions reachable without a `Yes`.
    type Verdict;

    fn next_step(&mut self) -> Result<Step<Self::Trial, Self::Verdict>>;

    /// Incorporate a violation returned for `trial`.
    fn observe(&mut self, trial: &Self::Trial, label: &Self::Label) -> Result<()>;

    fn computation_calls(&self) -> u64 {
        0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry<T, L> {
    pub trial: T,
    pub feedback: Feedback<L>,
}

/// Append-only record of trials and answers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize, L: Serialize",
    deserialize = "T: Deserialize<'de>, L: Deserialize<'de>"
))]
pub struct Transcript<T, L> {
    entries: Vec<TranscriptEntry<T, L>>,
}

impl<T, L> Default for Transcript<T, L> {
    fn default() -> Self {
        Transcript {
            entries: Vec::new(),
        }
    }
}

impl<T, L> Transcript<T, L> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, trial: T, feedback: Feedback<L>) {
        debug_assert!(
            !self.is_closed(),
            "no feedback may follow a Yes in the same transcript"
        );
        self.entries.push(TranscriptEntry { trial, feedback });
    }

    pub fn entries(&self) -> &[TranscriptEntry<T, L>] {
        &self.entries
    }

    pub fn trial_count(&self) -> usize {
        self.entries.len()
    }

    pub fn violation_count(&self) -> usize {
        self.entries.iter().filter(|e| !e.feedback.is_yes()).count()
    }

    /// True once a `Yes` has been recorded.
    pub fn is_closed(&self) -> bool {
        self.entries.last().is_some_and(|e| e.feedback.is_yes())
    }

    pub fn last(&self) -> Option<&TranscriptEntry<T, L>> {
        self.entries.last()
    }

    pub fn into_entries(self) -> Vec<TranscriptEntry<T, L>> {
        self.entries
    }
}

impl<T, L> FromIterator<(T, Feedback<L>)> for Transcript<T, L> {
    fn from_iter<I: IntoIterator<Item = (T, Feedback<L>)>>(iter: I) -> Self {
        Transcript {
            entries: iter
                .into_iter()
                .map(|(trial, feedback)| TranscriptEntry { trial, feedback })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    max_trials: Option<usize>,
}

impl OracleBudget {
    pub const fn unlimited() -> Self {
        OracleBudget { max_trials: None }
    }

    pub const fn trials(max_trials: usize) -> Self {
        OracleBudget {
            max_trials: Some(max_trials),
        }
    }

    pub fn max_trials(&self) -> Option<usize> {
        self.max_trials
    }

    fn allows(&self, used: usize) -> bool {
        self.max_trials.map_or(true, |max| used < max)
    }
}

impl From<Option<usize>> for OracleBudget {
    fn from(max_trials: Option<usize>) -> Self {
        OracleBudget { max_trials }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome<T, V> {
    /// The trial carried by this variant received `Yes`.
    Solved(T),
    Unsatisfiable(V),
    BudgetExhausted,
    /// Stopped by the inspection callback of [`run_solver_with`].
    Halted,
}

impl<T, V> Outcome<T, V> {
    pub fn is_solved(&self) -> bool {
        matches!(self, Outcome::Solved(_))
    }

    pub fn solution(&self) -> Option<&T> {
        match self {
            Outcome::Solved(t) => Some(t),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Outcome::Solved(_) => "solved",
            Outcome::Unsatisfiable(_) => "unsatisfiable",
            Outcome::BudgetExhausted => "budget_exhausted",
            Outcome::Halted => "halted",
        }
    }
}

/// Result of one solver/oracle interaction.
#[derive(Clone, Debug)]
pub struct Run<T, L, V> {
    pub outcome: Outcome<T, V>,
    pub transcript: Transcript<T, L>,
    pub computation_calls: u64,
}

impl<T, L, V> Run<T, L, V> {
    pub fn trials(&self) -> usize {
        self.transcript.trial_count()
    }

    pub fn violations(&self) -> usize {
        self.transcript.violation_count()
    }
}

pub fn run_solver<S, O>(
    solver: &mut S,
    oracle: &mut O,
    budget: OracleBudget,
) -> Result<Run<S::Trial, S::Label, S::Verdict>>
where
    S: TrialSolver,
    O: VerificationOracle<Trial = S::Trial, Label = S::Label> + ?Sized,
{
    run_solver_with(solver, oracle, budget, |_, _, _| ControlFlow::Continue(()))
}

/// Like [`run_solver`], but calls `inspect` after every oracle answer (and
/// after the solver has observed it). Returning `ControlFlow::Break` stops the
/// run with [`Outcome::Halted`]; reductions use this to intercept a black-box
/// solver mid-run.
pub fn run_solver_with<S, O, F>(
    solver: &mut S,
    oracle: &mut O,
    budget: OracleBudget,
    mut inspect: F,
) -> Result<Run<S::Trial, S::Label, S::Verdict>>
where
    S: TrialSolver,
    O: VerificationOracle<Trial = S::Trial, Label = S::Label> + ?Sized,
    F: FnMut(&S, &S::Trial, &Feedback<S::Label>) -> ControlFlow<()>,
{
    let mut transcript = Transcript::new();
    let outcome = loop {
        let trial = match solver.next_step()? {
            Step::Conclude(verdict) => break Outcome::Unsatisfiable(verdict),
            Step::Propose(trial) => trial,
        };
        if !budget.allows(transcript.trial_count()) {
            break Outcome::BudgetExhausted;
        }
        let feedback = oracle.verify(&trial);
        transcript.push(trial.clone(), feedback.clone());
        if let Feedback::Violation(label) = &feedback {
            solver.observe(&trial, label)?;
        }
        if inspect(solver, &trial, &feedback).is_break() {
            break Outcome::Halted;
        }
        if feedback.is_yes() {
            break Outcome::Solved(trial);
        }
    };
    Ok(Run {
        outcome,
        transcript,
        computation_calls: solver.computation_calls(),
    })
}

/// Ground truth used to audit transcripts after the fact.
pub trait HiddenInstance<T, L> {
    /// Does `trial` really violate the constraint named by `label`?
    fn is_violated(&self, trial: &T, label: &L) -> bool;

    fn is_solution(&self, trial: &T) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Discrepancy {
    /// The labelled constraint holds for the trial.
    FalseViolation,
    /// `Yes` was given to a non-solution.
    FalseYes,
    /// An entry follows a `Yes`.
    AfterYes,
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            Discrepancy::FalseViolation => "reported constraint is not violated by the trial",
            Discrepancy::FalseYes => "Yes given to a trial that is not a solution",
            Discrepancy::AfterYes => "entry recorded after a Yes",
        };
        f.write_str(text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HonestyReport {
    Honest,
    Dishonest { entry: usize, kind: Discrepancy },
}

impl HonestyReport {
    pub fn is_honest(&self) -> bool {
        matches!(self, HonestyReport::Honest)
    }
}

/// Replays `transcript` against `hidden` and reports the first entry where the
/// oracle lied.
pub fn check_honesty<T, L, H>(transcript: &Transcript<T, L>, hidden: &H) -> HonestyReport
where
    H: HiddenInstance<T, L> + ?Sized,
{
    let mut seen_yes = false;
    for (index, entry) in transcript.entries().iter().enumerate() {
        if seen_yes {
            return HonestyReport::Dishonest {
                entry: index,
                kind: Discrepancy::AfterYes,
            };
        }
        let genuine = match &entry.feedback {
            Feedback::Yes => {
                seen_yes = true;
                hidden.is_solution(&entry.trial)
            }
            Feedback::Violation(label) => hidden.is_violated(&entry.trial, label),
        };
        if !genuine {
            let kind = if entry.feedback.is_yes() {
                Discrepancy::FalseYes
            } else {
                Discrepancy::FalseViolation
            };
            return HonestyReport::Dishonest { entry: index, kind };
        }
    }
    HonestyReport::Honest
}

/// Checks only the violation entries, for oracles whose Yes answers are
/// justified by something other than the hidden instance.
pub fn check_violations<T, L, H>(transcript: &Transcript<T, L>, hidden: &H) -> HonestyReport
where
    H: HiddenInstance<T, L> + ?Sized,
{
    for (index, entry) in transcript.entries().iter().enumerate() {
        if let Feedback::Violation(label) = &entry.feedback {
            if !hidden.is_violated(&entry.trial, label) {
                return HonestyReport::Dishonest {
                    entry: index,
                    kind: Discrepancy::FalseViolation,
                };
            }
        }
    }
    HonestyReport::Honest
}
