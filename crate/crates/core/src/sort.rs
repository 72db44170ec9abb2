//! Sorting a hidden total order when the oracle only reports one inverted pair.
//!
//! Trials are permutations listed top first. A violation `(a, b)` means `a`
//! was proposed above `b` but `b ≻ a` in the hidden order.

use std::convert::Infallible;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::extensions::{self, DEFAULT_CAP};
use crate::policy::Policy;
use crate::poset::{is_permutation, Poset};
use crate::trial::{
    run_solver, Feedback, HiddenInstance, OracleBudget, Run, Step, TrialSolver, VerificationOracle,
};

pub type Order = Vec<usize>;
pub type InvertedPair = (usize, usize);

/// Honest oracle for a hidden order.
#[derive(Clone, Debug)]
pub struct SortOracle {
    hidden: HiddenOrder,
    policy: Policy,
}

/// A hidden total order, top first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiddenOrder {
    order: Order,
    position: Vec<usize>,
}

impl HiddenOrder {
    pub fn new(order: Order) -> Result<Self> {
        if !is_permutation(&order, order.len()) {
            return Err(Error::invalid("hidden order is not a permutation"));
        }
        let mut position = vec![0; order.len()];
        for (i, &x) in order.iter().enumerate() {
            position[x] = i;
        }
        Ok(HiddenOrder { order, position })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn greater(&self, a: usize, b: usize) -> bool {
        self.position[a] < self.position[b]
    }

    /// Inverted pairs of `trial`, sorted by element labels.
    pub fn inverted_pairs(&self, trial: &[usize]) -> Vec<InvertedPair> {
        let mut out = Vec::new();
        for (i, &a) in trial.iter().enumerate() {
            for &b in &trial[i + 1..] {
                if self.greater(b, a) {
                    out.push((a, b));
                }
            }
        }
        out.sort_unstable();
        out
    }
}

impl HiddenInstance<Order, InvertedPair> for HiddenOrder {
    fn is_violated(&self, trial: &Order, &(a, b): &InvertedPair) -> bool {
        let pos = |x| trial.iter().position(|&y| y == x);
        match (pos(a), pos(b)) {
            (Some(i), Some(j)) => i < j && self.greater(b, a),
            _ => false,
        }
    }

    fn is_solution(&self, trial: &Order) -> bool {
        *trial == self.order
    }
}

impl SortOracle {
    /// Answers with the lexicographically smallest inverted pair.
    pub fn new(hidden: HiddenOrder) -> Self {
        Self::with_policy(hidden, Policy::Canonical)
    }

    pub fn with_policy(hidden: HiddenOrder, policy: Policy) -> Self {
        SortOracle { hidden, policy }
    }

    pub fn hidden(&self) -> &HiddenOrder {
        &self.hidden
    }
}

impl VerificationOracle for SortOracle {
    type Trial = Order;
    type Label = InvertedPair;

    fn verify(&mut self, trial: &Order) -> Feedback<InvertedPair> {
        if *trial == self.hidden.order {
            return Feedback::Yes;
        }
        let pairs = self.hidden.inverted_pairs(trial);
        match self.policy.pick(&pairs) {
            Some(&pair) => Feedback::Violation(pair),
            // Not a permutation of the elements; no pair can be named honestly.
            None => Feedback::Violation((usize::MAX, usize::MAX)),
        }
    }
}

fn record_inversion(p: &mut Poset, trial: &[usize], (a, b): InvertedPair) -> Result<()> {
    let pa = trial.iter().position(|&x| x == a);
    let pb = trial.iter().position(|&x| x == b);
    match (pa, pb) {
        (Some(i), Some(j)) if i < j => p.add(b, a).map(drop),
        _ => Err(Error::Protocol(format!(
            "pair ({a}, {b}) is not in proposed order in the trial"
        ))),
    }
}

/// Proposes orders sorted by average height in the current knowledge poset.
#[derive(Clone, Debug)]
pub struct GoodOrderSolver {
    known: Poset,
    cap: usize,
    calls: u64,
}

impl GoodOrderSolver {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_CAP)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        let known = Poset::antichain(n)?;
        if n > cap.min(extensions::MAX_CAP) {
            return Err(Error::Capacity {
                what: "good-order sorter",
                size: n,
                cap: cap.min(extensions::MAX_CAP),
            });
        }
        Ok(GoodOrderSolver {
            known,
            cap,
            calls: 0,
        })
    }

    pub fn knowledge(&self) -> &Poset {
        &self.known
    }
}

impl TrialSolver for GoodOrderSolver {
    type Trial = Order;
    type Label = InvertedPair;
    type Verdict = Infallible;

    fn next_step(&mut self) -> Result<Step<Order, Infallible>> {
        self.calls += 1;
        Ok(Step::Propose(extensions::good_order_with_cap(
            &self.known,
            self.cap,
        )?))
    }

    fn observe(&mut self, trial: &Order, label: &InvertedPair) -> Result<()> {
        record_inversion(&mut self.known, trial, *label)
    }

    fn computation_calls(&self) -> u64 {
        self.calls
    }
}

/// Proposes a random linear extension of what is known (uniform choice among
/// the currently maximal elements at each position).
#[derive(Clone, Debug)]
pub struct RandomProposalSolver {
    known: Poset,
    rng: ChaCha8Rng,
}

impl RandomProposalSolver {
    pub fn new(n: usize, seed: u64) -> Result<Self> {
        Ok(RandomProposalSolver {
            known: Poset::antichain(n)?,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl TrialSolver for RandomProposalSolver {
    type Trial = Order;
    type Label = InvertedPair;
    type Verdict = Infallible;

    fn next_step(&mut self) -> Result<Step<Order, Infallible>> {
        let n = self.known.len();
        let mut placed = 0u32;
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let ready: Vec<usize> = (0..n)
                .filter(|&x| placed >> x & 1 == 0 && self.known.above(x) & !placed == 0)
                .collect();
            let &x = ready.choose(&mut self.rng).expect("acyclic");
            placed |= 1 << x;
            order.push(x);
        }
        Ok(Step::Propose(order))
    }

    fn observe(&mut self, trial: &Order, label: &InvertedPair) -> Result<()> {
        record_inversion(&mut self.known, trial, *label)
    }
}

/// Extension counts before and after one adversary answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shrink {
    pub before: u128,
    pub after: u128,
}

/// Adaptive oracle that always names a pair whose two orientations both keep
/// more than 3/11 of the consistent orders, and commits to the orientation
/// the trial got wrong.
#[derive(Clone, Debug)]
pub struct KahnSaksAdversary {
    state: Poset,
    cap: usize,
    history: Vec<Shrink>,
}

impl KahnSaksAdversary {
    pub fn new(n: usize) -> Result<Self> {
        Self::from_state(Poset::antichain(n)?)
    }

    pub fn from_state(state: Poset) -> Result<Self> {
        if state.len() > DEFAULT_CAP {
            return Err(Error::Capacity {
                what: "Kahn-Saks adversary",
                size: state.len(),
                cap: DEFAULT_CAP,
            });
        }
        Ok(KahnSaksAdversary {
            state,
            cap: DEFAULT_CAP,
            history: Vec::new(),
        })
    }

    pub fn state(&self) -> &Poset {
        &self.state
    }

    pub fn history(&self) -> &[Shrink] {
        &self.history
    }

    /// The hidden order the adversary has committed to, once it is unique.
    pub fn committed_order(&self) -> Option<Order> {
        self.state.is_total().then(|| self.state.some_extension())
    }

    /// The unordered pair `(x, y)`, `x < y`, maximizing the smaller of its two
    /// orientation probabilities among pairs where both exceed 3/11.
    pub fn balanced_pair(&self) -> Option<(usize, usize)> {
        let stats = extensions::pair_statistics_with_cap(&self.state, self.cap)
            .expect("size checked at construction");
        let total = stats.total();
        let n = self.state.len();
        let mut best: Option<((usize, usize), u128)> = None;
        for x in 0..n {
            for y in x + 1..n {
                let low = stats.count_greater(x, y).min(stats.count_greater(y, x));
                if low * 11 <= total * 3 {
                    continue;
                }
                if best.map_or(true, |(_, b)| low > b) {
                    best = Some(((x, y), low));
                }
            }
        }
        best.map(|(pair, _)| pair)
    }
}

impl VerificationOracle for KahnSaksAdversary {
    type Trial = Order;
    type Label = InvertedPair;

    fn verify(&mut self, trial: &Order) -> Feedback<InvertedPair> {
        assert!(
            is_permutation(trial, self.state.len()),
            "trial is not a permutation"
        );
        let before = extensions::count_extensions_with_cap(&self.state, self.cap)
            .expect("size checked at construction");
        if before == 1 {
            if self.state.is_linear_extension(trial) {
                return Feedback::Yes;
            }
            let mut known = self.state.violated_pairs(trial);
            known.sort_unstable();
            return Feedback::Violation(known[0]);
        }
        let (x, y) = self
            .balanced_pair()
            .expect("every non-chain poset has a pair with both probabilities above 3/11");
        let pos = |e| trial.iter().position(|&z| z == e).unwrap();
        let label = if pos(x) < pos(y) { (x, y) } else { (y, x) };
        self.state
            .add(label.1, label.0)
            .expect("both orientations were consistent");
        let after = extensions::count_extensions_with_cap(&self.state, self.cap).unwrap();
        self.history.push(Shrink { before, after });
        Feedback::Violation(label)
    }
}

pub fn solve_sort<O>(
    oracle: &mut O,
    n: usize,
    budget: OracleBudget,
) -> Result<Run<Order, InvertedPair, Infallible>>
where
    O: VerificationOracle<Trial = Order, Label = InvertedPair> + ?Sized,
{
    let mut solver = GoodOrderSolver::new(n)?;
    run_solver(&mut solver, oracle, budget)
}
