//! Finding a Hamiltonian cycle through a black-box solver for isomorphism
//! with the cyclic group `Z_p`.
//!
//! The vertices `0..p` of a graph double as the elements of a hidden cyclic
//! group `T` whose generator walks a Hamiltonian cycle. A trial is a bijection
//! `π` from elements to `Z_p` (`π[a]` is the image of `a`); a violation
//! `(a, b)` says `π(a ∘ b) ≠ π(a) + π(b)`.
//!
//! [`Simulator`] answers trials knowing only the graph. Every violation it
//! reports is genuine for any group built from a Hamiltonian cycle, and when
//! it says Yes the trial itself spells out a Hamiltonian cycle. Vertex 0 plays
//! the distinguished element `a1`, which the hidden cycle places right after
//! the identity.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::poset::is_permutation;
use crate::trial::{
    run_solver, Feedback, HiddenInstance, OracleBudget, Outcome, Step, TrialSolver,
    VerificationOracle,
};

/// Maps each element to its image in `Z_p`.
pub type GroupBijection = Vec<usize>;
pub type ElementPair = (usize, usize);

/// The element the simulator and cycle extraction are anchored on.
pub const A1: usize = 0;

/// Largest order the naive enumerating solver accepts.
pub const NAIVE_SOLVER_CAP: usize = 11;

pub fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

pub fn inverse(pi: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; pi.len()];
    for (a, &v) in pi.iter().enumerate() {
        inv[v] = a;
    }
    inv
}

/// Does `seq` visit every vertex of `g` once, with consecutive vertices
/// (including last to first) adjacent?
pub fn hc_verify(g: &Graph, seq: &[usize]) -> bool {
    let n = g.len();
    n >= 3 && is_permutation(seq, n) && (0..n).all(|i| g.has_edge(seq[i], seq[(i + 1) % n]))
}

/// Some Hamiltonian cycle starting at vertex 0, by depth-first search.
pub fn find_hamiltonian_cycle(g: &Graph) -> Option<Vec<usize>> {
    let n = g.len();
    if n < 3 {
        return None;
    }
    fn extend(g: &Graph, path: &mut Vec<usize>, used: u32) -> bool {
        let n = g.len();
        let last = *path.last().unwrap();
        if path.len() == n {
            return g.has_edge(last, path[0]);
        }
        let mut candidates = g.neighbors(last) & !used;
        while candidates != 0 {
            let v = candidates.trailing_zeros() as usize;
            candidates &= candidates - 1;
            path.push(v);
            if extend(g, path, used | 1 << v) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = vec![0];
    extend(g, &mut path, 1).then_some(path)
}

/// Multiplication table of the cyclic group `b_i ∘ b_j = b_{(i+j) mod p}`
/// for an ordering `b_0, ..., b_{p-1}` of the elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicGroupTable {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl CyclicGroupTable {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        if order.is_empty() || !is_permutation(&order, order.len()) {
            return Err(Error::invalid("element ordering is not a permutation"));
        }
        let position = inverse(&order);
        Ok(CyclicGroupTable { order, position })
    }

    /// The group read off a Hamiltonian cycle, rotated so that `b_1 = a1`.
    pub fn from_cycle(cycle: &[usize]) -> Result<Self> {
        let at = cycle
            .iter()
            .position(|&v| v == A1)
            .ok_or_else(|| Error::invalid("cycle does not contain the anchor element"))?;
        let p = cycle.len();
        let shift = (at + p - 1) % p;
        Self::new((0..p).map(|i| cycle[(shift + i) % p]).collect())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn identity(&self) -> usize {
        self.order[0]
    }

    pub fn op(&self, a: usize, b: usize) -> usize {
        self.order[(self.position[a] + self.position[b]) % self.len()]
    }

    /// The isomorphism `b_i ↦ i`.
    pub fn canonical_isomorphism(&self) -> GroupBijection {
        self.position.clone()
    }

    pub fn is_isomorphism(&self, pi: &[usize]) -> bool {
        let p = self.len();
        is_permutation(pi, p)
            && (0..p).all(|a| (0..p).all(|b| pi[self.op(a, b)] == (pi[a] + pi[b]) % p))
    }
}

impl HiddenInstance<GroupBijection, ElementPair> for CyclicGroupTable {
    fn is_violated(&self, pi: &GroupBijection, &(a, b): &ElementPair) -> bool {
        let p = self.len();
        is_permutation(pi, p) && a < p && b < p && pi[self.op(a, b)] != (pi[a] + pi[b]) % p
    }

    fn is_solution(&self, pi: &GroupBijection) -> bool {
        self.is_isomorphism(pi)
    }
}

/// Honest oracle for an explicit table; reports the lexicographically first violated pair.
#[derive(Clone, Debug)]
pub struct GroupTableOracle {
    table: CyclicGroupTable,
}

impl GroupTableOracle {
    pub fn new(table: CyclicGroupTable) -> Self {
        GroupTableOracle { table }
    }

    pub fn table(&self) -> &CyclicGroupTable {
        &self.table
    }
}

impl VerificationOracle for GroupTableOracle {
    type Trial = GroupBijection;
    type Label = ElementPair;

    fn verify(&mut self, pi: &GroupBijection) -> Feedback<ElementPair> {
        let p = self.table.len();
        for a in 0..p {
            for b in 0..p {
                if pi[self.table.op(a, b)] != (pi[a] + pi[b]) % p {
                    return Feedback::Violation((a, b));
                }
            }
        }
        Feedback::Yes
    }
}

/// The stand-in oracle that needs only the graph.
#[derive(Clone, Debug)]
pub struct Simulator {
    g: Graph,
    work: u64,
    calls: u64,
}

impl Simulator {
    pub fn new(g: Graph) -> Self {
        Simulator {
            g,
            work: 0,
            calls: 0,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.g
    }

    /// Edge lookups plus one unit per call.
    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

/// `(π⁻¹(0), π⁻¹(x), π⁻¹(2x), ...)` with `x = π(a1)`.
pub fn walk_from_bijection(pi: &[usize]) -> Vec<usize> {
    let p = pi.len();
    let inv = inverse(pi);
    let x = pi[A1];
    (0..p).map(|i| inv[i * x % p]).collect()
}

pub fn simulator_vprime(g: &Graph, pi: &[usize]) -> Feedback<ElementPair> {
    Simulator::new(g.clone()).verify(&pi.to_vec())
}

impl VerificationOracle for Simulator {
    type Trial = GroupBijection;
    type Label = ElementPair;

    fn verify(&mut self, pi: &GroupBijection) -> Feedback<ElementPair> {
        let p = self.g.len();
        assert!(is_permutation(pi, p), "trial is not a bijection onto Z_p");
        self.calls += 1;
        self.work += 1;
        let x = pi[A1];
        if x == 0 {
            return Feedback::Violation((A1, A1));
        }
        let inv = inverse(pi);
        for i in 0..p {
            self.work += 1;
            let u = inv[i * x % p];
            let v = inv[(i + 1) * x % p];
            if !self.g.has_edge(u, v) {
                return Feedback::Violation((u, A1));
            }
        }
        Feedback::Yes
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupIsoVerdict {
    /// An isomorphism inferred without a confirming Yes.
    Isomorphism(GroupBijection),
    NotIsomorphic,
}

/// A rule `σ(a) = va ∧ σ(b) = vb ∧ σ(c) = vc ⇒ σ` is not an isomorphism.
type Rule = [(usize, usize); 3];

/// Enumerates bijections in lexicographic order, skipping any that repeat the
/// refuted pattern of an earlier violation.
///
/// A violation `(a, b)` of `π` says `a ∘ b ≠ c` where `c = π⁻¹(π(a) + π(b))`,
/// so no isomorphism sends `a, b, c` to `π(a), π(b), π(c)` simultaneously.
#[derive(Clone, Debug)]
pub struct NaiveGroupIsoSolver {
    p: usize,
    /// Rules indexed by the largest element they mention.
    rules: Vec<Vec<Rule>>,
    last: Option<GroupBijection>,
    nodes: u64,
}

impl NaiveGroupIsoSolver {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 || p > NAIVE_SOLVER_CAP {
            return Err(Error::Capacity {
                what: "naive group isomorphism solver",
                size: p,
                cap: NAIVE_SOLVER_CAP,
            });
        }
        Ok(NaiveGroupIsoSolver {
            p,
            rules: vec![Vec::new(); p],
            last: None,
            nodes: 0,
        })
    }

    pub fn rule_count(&self) -> usize {
        self.rules.iter().map(Vec::len).sum()
    }

    fn admissible(&self, depth: usize, assign: &[usize]) -> bool {
        !self.rules[depth]
            .iter()
            .any(|rule| rule.iter().all(|&(e, v)| assign[e] == v))
    }

    /// The first admissible bijection strictly after `after` (or the first at all).
    fn next_candidate(&mut self) -> Option<GroupBijection> {
        let p = self.p;
        let mut assign = vec![usize::MAX; p];
        let after = self.last.clone();
        let mut nodes = 0u64;
        let found = self.search(0, after.as_deref(), true, &mut assign, 0, &mut nodes);
        self.nodes += nodes;
        found.then_some(assign)
    }

    fn search(
        &self,
        depth: usize,
        after: Option<&[usize]>,
        tight: bool,
        assign: &mut Vec<usize>,
        used: u32,
        nodes: &mut u64,
    ) -> bool {
        *nodes += 1;
        if depth == self.p {
            return !(tight && after.is_some());
        }
        let low = match after {
            Some(prev) if tight => prev[depth],
            _ => 0,
        };
        for v in low..self.p {
            if used >> v & 1 == 1 {
                continue;
            }
            assign[depth] = v;
            if self.admissible(depth, assign)
                && self.search(
                    depth + 1,
                    after,
                    tight && v == low,
                    assign,
                    used | 1 << v,
                    nodes,
                )
            {
                return true;
            }
        }
        assign[depth] = usize::MAX;
        false
    }
}

impl TrialSolver for NaiveGroupIsoSolver {
    type Trial = GroupBijection;
    type Label = ElementPair;
    type Verdict = GroupIsoVerdict;

    fn next_step(&mut self) -> Result<Step<GroupBijection, GroupIsoVerdict>> {
        match self.next_candidate() {
            Some(pi) => {
                self.last = Some(pi.clone());
                Ok(Step::Propose(pi))
            }
            None => Ok(Step::Conclude(GroupIsoVerdict::NotIsomorphic)),
        }
    }

    fn observe(&mut self, pi: &GroupBijection, &(a, b): &ElementPair) -> Result<()> {
        let p = self.p;
        if a >= p || b >= p {
            return Err(Error::Protocol(format!(
                "({a}, {b}) is not an element pair"
            )));
        }
        let target = (pi[a] + pi[b]) % p;
        let c = inverse(pi)[target];
        let rule = [(a, pi[a]), (b, pi[b]), (c, target)];
        let top = a.max(b).max(c);
        self.rules[top].push(rule);
        Ok(())
    }

    /// Search nodes visited, the solver's own running time.
    fn computation_calls(&self) -> u64 {
        self.nodes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleSource {
    /// The simulator accepted a trial, which encodes the cycle.
    SimulatorYes,
    /// The solver announced an isomorphism on its own.
    SolverOutput,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionOutcome {
    Cycle {
        cycle: Vec<usize>,
        source: CycleSource,
    },
    /// The solver concluded non-isomorphism, which cannot happen when a
    /// Hamiltonian cycle exists.
    PromiseViolated,
}

#[derive(Clone, Debug)]
pub struct ReductionReport {
    pub outcome: ReductionOutcome,
    pub trials: usize,
    pub simulator_work: u64,
    pub solver_work: u64,
    pub transcript: crate::trial::Transcript<GroupBijection, ElementPair>,
}

/// Run `solver` against the simulator for `g` and turn its behavior into a
/// Hamiltonian cycle.
pub fn algorithm_b<S>(g: &Graph, solver: &mut S) -> Result<ReductionReport>
where
    S: TrialSolver<Trial = GroupBijection, Label = ElementPair, Verdict = GroupIsoVerdict>,
{
    let p = g.len();
    if !is_prime(p) || p < 3 {
        return Err(Error::invalid(format!(
            "vertex count {p} must be a prime of at least 3"
        )));
    }
    let mut simulator = Simulator::new(g.clone());
    let run = run_solver(solver, &mut simulator, OracleBudget::unlimited())?;
    let (cycle, source) = match run.outcome {
        Outcome::Solved(pi) => (walk_from_bijection(&pi), CycleSource::SimulatorYes),
        Outcome::Unsatisfiable(GroupIsoVerdict::Isomorphism(sigma)) => {
            if !is_permutation(&sigma, p) {
                return Err(Error::Protocol("solver output is not a bijection".into()));
            }
            (walk_from_bijection(&sigma), CycleSource::SolverOutput)
        }
        Outcome::Unsatisfiable(GroupIsoVerdict::NotIsomorphic) => {
            return Ok(ReductionReport {
                outcome: ReductionOutcome::PromiseViolated,
                trials: run.transcript.trial_count(),
                simulator_work: simulator.work(),
                solver_work: run.computation_calls,
                transcript: run.transcript,
            })
        }
        Outcome::BudgetExhausted | Outcome::Halted => unreachable!("unlimited budget, no observer"),
    };
    if !hc_verify(g, &cycle) {
        return Err(Error::Inconsistent(format!(
            "extracted sequence {cycle:?} is not a Hamiltonian cycle"
        )));
    }
    Ok(ReductionReport {
        outcome: ReductionOutcome::Cycle { cycle, source },
        trials: run.transcript.trial_count(),
        simulator_work: simulator.work(),
        solver_work: run.computation_calls,
        transcript: run.transcript,
    })
}

/// A solver that already knows the answer and announces it without asking;
/// exercises the output branch of [`algorithm_b`].
#[derive(Clone, Debug)]
pub struct AnnouncingSolver {
    answer: Option<GroupBijection>,
}

impl AnnouncingSolver {
    pub fn new(answer: GroupBijection) -> Self {
        AnnouncingSolver {
            answer: Some(answer),
        }
    }
}

impl TrialSolver for AnnouncingSolver {
    type Trial = GroupBijection;
    type Label = ElementPair;
    type Verdict = GroupIsoVerdict;

    fn next_step(&mut self) -> Result<Step<GroupBijection, GroupIsoVerdict>> {
        let answer = self
            .answer
            .take()
            .ok_or_else(|| Error::Protocol("asked twice".into()))?;
        Ok(Step::Conclude(GroupIsoVerdict::Isomorphism(answer)))
    }

    fn observe(&mut self, _: &GroupBijection, _: &ElementPair) -> Result<()> {
        Ok(())
    }
}
