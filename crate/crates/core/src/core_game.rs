//! Cost-sharing games, their core, and the verification oracle that reports
//! which core constraint a proposed allocation breaks.
//!
//! Coalitions are bitmasks over agents `0..n`. The core is the set of
//! allocations `x` with `Σ_{i∈S} x_i ≤ c(S)` for every coalition `S` and
//! `Σ_i x_i = c(A)` for the grand coalition `A`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rational::{format_rational, parse_rational};
use crate::trial::{Feedback, HiddenInstance, VerificationOracle};

pub type Coalition = u32;
pub type Allocation = Vec<BigRational>;

pub const MAX_AGENTS: usize = 16;
/// Largest game [`explicit_core_lp`] accepts.
pub const LP_MAX_AGENTS: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GameJson", into = "GameJson")]
pub struct CostGame {
    n: usize,
    encoding_bits: u32,
    /// Indexed by coalition mask; entry 0 is the empty coalition.
    costs: Vec<BigRational>,
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    n: usize,
    #[serde(rename = "N")]
    encoding_bits: u32,
    costs: BTreeMap<String, String>,
}

impl TryFrom<GameJson> for CostGame {
    type Error = Error;

    fn try_from(json: GameJson) -> Result<Self> {
        if json.n == 0 || json.n > MAX_AGENTS {
            return Err(Error::invalid(format!(
                "agent count {} outside 1..={MAX_AGENTS}",
                json.n
            )));
        }
        let mut costs: Vec<Option<BigRational>> = vec![None; 1 << json.n];
        costs[0] = Some(BigRational::zero());
        for (key, value) in &json.costs {
            let digits = key.strip_prefix("0b").ok_or_else(|| {
                Error::invalid(format!("coalition key `{key}` must start with 0b"))
            })?;
            let mask = u32::from_str_radix(digits, 2)
                .map_err(|_| Error::invalid(format!("coalition key `{key}` is not binary")))?;
            if mask as usize >= costs.len() {
                return Err(Error::invalid(format!(
                    "coalition `{key}` mentions an agent beyond {}",
                    json.n
                )));
            }
            costs[mask as usize] = Some(parse_rational(value)?);
        }
        let costs = costs
            .into_iter()
            .enumerate()
            .map(|(mask, c)| {
                c.ok_or_else(|| Error::invalid(format!("missing cost for coalition {mask:#b}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CostGame::new(json.n, json.encoding_bits, costs)
    }
}

impl From<CostGame> for GameJson {
    fn from(game: CostGame) -> Self {
        let width = game.n;
        let costs = (1..game.costs.len())
            .map(|mask| {
                (
                    format!("0b{mask:0width$b}"),
                    format_rational(&game.costs[mask]),
                )
            })
            .collect();
        GameJson {
            n: game.n,
            encoding_bits: game.encoding_bits,
            costs,
        }
    }
}

/// Smallest `N` with every numerator and denominator below `2^N`.
pub fn encoding_bits_for(costs: &[BigRational]) -> u32 {
    costs
        .iter()
        .map(|c| c.numer().bits().max(c.denom().bits()))
        .max()
        .unwrap_or(0)
        .max(1) as u32
}

impl CostGame {
    pub fn new(n: usize, encoding_bits: u32, costs: Vec<BigRational>) -> Result<Self> {
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::Capacity {
                what: "cost game",
                size: n,
                cap: MAX_AGENTS,
            });
        }
        if costs.len() != 1 << n {
            return Err(Error::invalid(format!(
                "expected {} coalition costs, got {}",
                1usize << n,
                costs.len()
            )));
        }
        if !costs[0].is_zero() {
            return Err(Error::invalid("the empty coalition must cost 0"));
        }
        let limit = BigInt::one() << encoding_bits;
        for (mask, c) in costs.iter().enumerate() {
            if c.is_negative() {
                return Err(Error::invalid(format!(
                    "coalition {mask:#b} has negative cost"
                )));
            }
            if c.numer() >= &limit || c.denom() >= &limit {
                return Err(Error::invalid(format!(
                    "cost of coalition {mask:#b} needs more than {encoding_bits} bits"
                )));
            }
        }
        for mask in 1..costs.len() {
            for i in 0..n {
                if mask >> i & 1 == 1 && costs[mask & !(1 << i)] > costs[mask] {
                    return Err(Error::invalid(format!(
                        "not monotone: removing agent {i} from {mask:#b} raises the cost"
                    )));
                }
            }
        }
        Ok(CostGame {
            n,
            encoding_bits,
            costs,
        })
    }

    /// Builds the game from a cost function, choosing the smallest encoding length.
    pub fn from_fn(n: usize, cost: impl Fn(Coalition) -> BigRational) -> Result<Self> {
        if n == 0 || n > MAX_AGENTS {
            return Err(Error::Capacity {
                what: "cost game",
                size: n,
                cap: MAX_AGENTS,
            });
        }
        let costs: Vec<BigRational> = (0..1u32 << n).map(cost).collect();
        let bits = encoding_bits_for(&costs);
        CostGame::new(n, bits, costs)
    }

    /// `c(S) = Σ_{i∈S} v_i`; the core is the single point `v`.
    pub fn additive(values: &[BigRational]) -> Result<Self> {
        CostGame::from_fn(values.len(), |s| {
            (0..values.len())
                .filter(|i| s >> i & 1 == 1)
                .map(|i| values[i].clone())
                .sum()
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn encoding_bits(&self) -> u32 {
        self.encoding_bits
    }

    pub fn grand(&self) -> Coalition {
        ((1u64 << self.n) - 1) as Coalition
    }

    pub fn cost(&self, s: Coalition) -> &BigRational {
        &self.costs[s as usize]
    }

    pub fn costs(&self) -> &[BigRational] {
        &self.costs
    }

    pub fn coalition_sum(&self, x: &[BigRational], s: Coalition) -> BigRational {
        (0..self.n).filter(|i| s >> i & 1 == 1).map(|i| &x[i]).sum()
    }

    /// Every violated constraint with its positive violation amount, in label order.
    pub fn violations(&self, x: &[BigRational]) -> Vec<(CoreConstraint, BigRational)> {
        assert_eq!(x.len(), self.n, "allocation has the wrong length");
        // Work over the common denominator so coalition sums stay integral.
        let scale = x.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()));
        let scaled: Vec<BigInt> = x.iter().map(|v| v.numer() * (&scale / v.denom())).collect();
        let size = 1usize << self.n;
        let mut sums = vec![BigInt::zero(); size];
        for s in 1..size {
            sums[s] = &sums[s & (s - 1)] + &scaled[s.trailing_zeros() as usize];
        }
        let excess = |s: usize| -> BigInt {
            let c = &self.costs[s];
            &sums[s] * c.denom() - c.numer() * &scale
        };
        let amount = |e: BigInt, s: usize| BigRational::new(e, &scale * self.costs[s].denom());
        let grand = size - 1;
        let mut out = Vec::new();
        let e = excess(grand);
        if e.is_positive() {
            out.push((CoreConstraint::GrandAtMost, amount(e, grand)));
        } else if e.is_negative() {
            out.push((CoreConstraint::GrandAtLeast, amount(-e, grand)));
        }
        for s in 1..grand {
            let e = excess(s);
            if e.is_positive() {
                out.push((CoreConstraint::Coalition(s as Coalition), amount(e, s)));
            }
        }
        out
    }

    pub fn in_core(&self, x: &[BigRational]) -> bool {
        x.len() == self.n && self.violations(x).is_empty()
    }

    /// `c(S ∪ T) + c(S ∩ T) ≤ c(S) + c(T)` for all pairs.
    pub fn is_submodular(&self) -> bool {
        let all = 1usize << self.n;
        (0..all).all(|s| {
            (0..all)
                .all(|t| &self.costs[s | t] + &self.costs[s & t] <= &self.costs[s] + &self.costs[t])
        })
    }
}

/// One inequality of the core description.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreConstraint {
    /// `Σ_i x_i ≤ c(A)`.
    GrandAtMost,
    /// `Σ_i x_i ≥ c(A)`.
    GrandAtLeast,
    /// `Σ_{i∈S} x_i ≤ c(S)` for a proper nonempty coalition.
    Coalition(Coalition),
}

impl CoreConstraint {
    fn members(&self, n: usize) -> Vec<usize> {
        match *self {
            CoreConstraint::Coalition(s) => (0..n).filter(|i| s >> i & 1 == 1).collect(),
            _ => (0..n).collect(),
        }
    }
}

/// The normal `v` of the violated constraint: `v·x ≤ bound` holds on the core
/// while the trial has `v·trial > bound`. The bound itself stays hidden.
pub fn separation_from_feedback(label: &CoreConstraint, n: usize) -> Vec<i32> {
    match *label {
        CoreConstraint::GrandAtMost => vec![1; n],
        CoreConstraint::GrandAtLeast => vec![-1; n],
        CoreConstraint::Coalition(s) => (0..n).map(|i| (s >> i & 1) as i32).collect(),
    }
}

/// Answers with the most violated constraint, ties broken by smaller coalition
/// and then lexicographically by member list; or, under a random policy, a
/// uniformly chosen violated constraint.
#[derive(Clone, Debug)]
pub struct CoreOracle {
    game: CostGame,
    policy: Policy,
}

impl CoreOracle {
    pub fn new(game: CostGame) -> Self {
        CoreOracle::with_policy(game, Policy::Canonical)
    }

    pub fn with_policy(game: CostGame, policy: Policy) -> Self {
        CoreOracle { game, policy }
    }

    pub fn game(&self) -> &CostGame {
        &self.game
    }
}

pub fn core_oracle(game: &CostGame, trial: &[BigRational]) -> Feedback<CoreConstraint> {
    CoreOracle::new(game.clone()).verify(&trial.to_vec())
}

impl VerificationOracle for CoreOracle {
    type Trial = Allocation;
    type Label = CoreConstraint;

    fn verify(&mut self, trial: &Allocation) -> Feedback<CoreConstraint> {
        let n = self.game.len();
        let violated = self.game.violations(trial);
        if violated.is_empty() {
            return Feedback::Yes;
        }
        if let Policy::Random(_) = self.policy {
            let labels: Vec<CoreConstraint> = violated.iter().map(|(l, _)| *l).collect();
            return Feedback::Violation(*self.policy.pick(&labels).expect("nonempty"));
        }
        let best = violated
            .iter()
            .min_by(|(la, va), (lb, vb)| {
                vb.cmp(va).then_with(|| {
                    let (ma, mb) = (la.members(n), lb.members(n));
                    ma.len().cmp(&mb.len()).then_with(|| ma.cmp(&mb))
                })
            })
            .map(|(l, _)| *l)
            .expect("nonempty");
        Feedback::Violation(best)
    }
}

impl HiddenInstance<Allocation, CoreConstraint> for CostGame {
    fn is_violated(&self, x: &Allocation, label: &CoreConstraint) -> bool {
        x.len() == self.n && self.violations(x).iter().any(|(l, _)| l == label)
    }

    fn is_solution(&self, x: &Allocation) -> bool {
        self.in_core(x)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoreLp {
    Point(Allocation),
    Empty,
}

/// Decides emptiness of the core exactly: maximize `Σ x_i` subject to
/// `Σ_{i∈S} x_i ≤ c(S)` for all coalitions and `x ≥ 0` by simplex with Bland's
/// rule. The core is nonempty iff the optimum reaches `c(A)`, and any optimal
/// vertex is then a core point. (`x ≥ 0` loses nothing: monotonicity gives
/// `x_i ≥ c(A) − c(A∖i) ≥ 0` on the core.)
pub fn explicit_core_lp(game: &CostGame) -> Result<CoreLp> {
    let n = game.len();
    if n > LP_MAX_AGENTS {
        return Err(Error::Capacity {
            what: "explicit core LP",
            size: n,
            cap: LP_MAX_AGENTS,
        });
    }
    let rows = (1usize << n) - 1;
    let cols = n + rows;
    // Row r is coalition r + 1; column n + r is its slack; last entry is the rhs.
    let mut tableau: Vec<Vec<BigRational>> = (0..rows)
        .map(|r| {
            let s = r + 1;
            let mut row = vec![BigRational::zero(); cols + 1];
            for (i, entry) in row.iter_mut().enumerate().take(n) {
                if s >> i & 1 == 1 {
                    *entry = BigRational::one();
                }
            }
            row[n + r] = BigRational::one();
            row[cols] = game.cost(s as Coalition).clone();
            row
        })
        .collect();
    // Reduced costs of the maximization objective Σ x_i.
    let mut objective = vec![BigRational::zero(); cols + 1];
    for entry in objective.iter_mut().take(n) {
        *entry = BigRational::one();
    }
    let mut basis: Vec<usize> = (n..cols).collect();
    while let Some(enter) = (0..cols).find(|&j| objective[j].is_positive()) {
        let leave = (0..rows)
            .filter(|&r| tableau[r][enter].is_positive())
            .min_by(|&a, &b| {
                let ra = &tableau[a][cols] / &tableau[a][enter];
                let rb = &tableau[b][cols] / &tableau[b][enter];
                ra.cmp(&rb).then(basis[a].cmp(&basis[b]))
            })
            .ok_or_else(|| Error::Numerical("core LP unbounded".into()))?;
        let pivot = tableau[leave][enter].clone();
        for entry in tableau[leave].iter_mut() {
            *entry /= &pivot;
        }
        let pivot_row = tableau[leave].clone();
        for (r, row) in tableau.iter_mut().enumerate() {
            if r != leave && !row[enter].is_zero() {
                let factor = row[enter].clone();
                for (entry, p) in row.iter_mut().zip(&pivot_row) {
                    if !p.is_zero() {
                        *entry -= &factor * p;
                    }
                }
            }
        }
        let factor = objective[enter].clone();
        for (entry, p) in objective.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *entry -= &factor * p;
            }
        }
        basis[leave] = enter;
    }
    let mut x = vec![BigRational::zero(); n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tableau[r][cols].clone();
        }
    }
    let total: BigRational = x.iter().sum();
    match total.cmp(game.cost(game.grand())) {
        Ordering::Equal => {
            if !game.in_core(&x) {
                return Err(Error::Inconsistent("LP optimum is not a core point".into()));
            }
            Ok(CoreLp::Point(x))
        }
        Ordering::Less => Ok(CoreLp::Empty),
        Ordering::Greater => Err(Error::Inconsistent("LP optimum exceeds c(A)".into())),
    }
}
