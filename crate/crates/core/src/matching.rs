//! Stable matching with hidden preferences.
//!
//! A trial is a perfect matching; the oracle answers with one blocking pair
//! `(m, w)`. Men and women are both numbered `0..n`.

use std::convert::Infallible;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extensions::{self, DEFAULT_CAP};
use crate::policy::Policy;
use crate::poset::{is_permutation, Poset};
use crate::trial::{
    run_solver, Feedback, HiddenInstance, OracleBudget, Run, Step, TrialSolver, VerificationOracle,
};

pub type BlockingPair = (usize, usize);

/// Complete strict preference lists, most preferred first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ProfileJson", into = "ProfileJson")]
pub struct PreferenceProfile {
    n: usize,
    men: Vec<Vec<usize>>,
    women: Vec<Vec<usize>>,
    men_rank: Vec<Vec<usize>>,
    women_rank: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    n: usize,
    men: Vec<Vec<usize>>,
    women: Vec<Vec<usize>>,
}

impl TryFrom<ProfileJson> for PreferenceProfile {
    type Error = Error;

    fn try_from(json: ProfileJson) -> Result<Self> {
        if json.men.len() != json.n || json.women.len() != json.n {
            return Err(Error::invalid(format!(
                "expected {} preference lists per side",
                json.n
            )));
        }
        PreferenceProfile::new(json.men, json.women)
    }
}

impl From<PreferenceProfile> for ProfileJson {
    fn from(p: PreferenceProfile) -> Self {
        ProfileJson {
            n: p.n,
            men: p.men,
            women: p.women,
        }
    }
}

fn ranks(lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    lists
        .iter()
        .map(|list| {
            let mut rank = vec![0; list.len()];
            for (i, &x) in list.iter().enumerate() {
                rank[x] = i;
            }
            rank
        })
        .collect()
}

impl PreferenceProfile {
    pub fn new(men: Vec<Vec<usize>>, women: Vec<Vec<usize>>) -> Result<Self> {
        let n = men.len();
        if women.len() != n {
            return Err(Error::invalid("both sides must have the same size"));
        }
        for (side, lists) in [("man", &men), ("woman", &women)] {
            for (i, list) in lists.iter().enumerate() {
                if !is_permutation(list, n) {
                    return Err(Error::invalid(format!(
                        "preference list of {side} {i} is not a permutation of 0..{n}"
                    )));
                }
            }
        }
        Ok(PreferenceProfile {
            n,
            men_rank: ranks(&men),
            women_rank: ranks(&women),
            men,
            women,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn man_list(&self, m: usize) -> &[usize] {
        &self.men[m]
    }

    pub fn woman_list(&self, w: usize) -> &[usize] {
        &self.women[w]
    }

    /// Does man `m` strictly prefer `w1` to `w2`?
    pub fn man_prefers(&self, m: usize, w1: usize, w2: usize) -> bool {
        self.men_rank[m][w1] < self.men_rank[m][w2]
    }

    pub fn woman_prefers(&self, w: usize, m1: usize, m2: usize) -> bool {
        self.women_rank[w][m1] < self.women_rank[w][m2]
    }
}

/// A perfect matching stored as the wife of each man.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matching {
    wife: Vec<usize>,
}

impl Matching {
    pub fn from_wives(wife: Vec<usize>) -> Result<Self> {
        if !is_permutation(&wife, wife.len()) {
            return Err(Error::invalid("matching is not a bijection"));
        }
        Ok(Matching { wife })
    }

    pub fn len(&self) -> usize {
        self.wife.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wife.is_empty()
    }

    pub fn wife(&self, m: usize) -> usize {
        self.wife[m]
    }

    pub fn wives(&self) -> &[usize] {
        &self.wife
    }

    pub fn husbands(&self) -> Vec<usize> {
        let mut h = vec![0; self.wife.len()];
        for (m, &w) in self.wife.iter().enumerate() {
            h[w] = m;
        }
        h
    }

    fn is_valid_for(&self, n: usize) -> bool {
        is_permutation(&self.wife, n)
    }
}

/// Men-proposing deferred acceptance.
pub fn gale_shapley(profile: &PreferenceProfile) -> Matching {
    let n = profile.len();
    let mut next = vec![0usize; n];
    let mut husband: Vec<Option<usize>> = vec![None; n];
    let mut free: Vec<usize> = (0..n).rev().collect();
    while let Some(m) = free.pop() {
        let w = profile.men[m][next[m]];
        next[m] += 1;
        match husband[w] {
            None => husband[w] = Some(m),
            Some(current) if profile.woman_prefers(w, m, current) => {
                husband[w] = Some(m);
                free.push(current);
            }
            Some(_) => free.push(m),
        }
    }
    let mut wife = vec![0; n];
    for (w, h) in husband.iter().enumerate() {
        wife[h.expect("every woman is matched when sides are equal")] = w;
    }
    Matching { wife }
}

/// All blocking pairs, sorted.
pub fn blocking_pairs(profile: &PreferenceProfile, matching: &Matching) -> Vec<BlockingPair> {
    let husband = matching.husbands();
    let mut out = Vec::new();
    for m in 0..profile.len() {
        for w in 0..profile.len() {
            if matching.wife[m] != w
                && profile.man_prefers(m, w, matching.wife[m])
                && profile.woman_prefers(w, m, husband[w])
            {
                out.push((m, w));
            }
        }
    }
    out
}

pub fn is_stable(profile: &PreferenceProfile, matching: &Matching) -> bool {
    matching.is_valid_for(profile.len()) && blocking_pairs(profile, matching).is_empty()
}

impl HiddenInstance<Matching, BlockingPair> for PreferenceProfile {
    fn is_violated(&self, trial: &Matching, &(m, w): &BlockingPair) -> bool {
        if !trial.is_valid_for(self.n) || m >= self.n || w >= self.n || trial.wife[m] == w {
            return false;
        }
        let husband = trial.husbands();
        self.man_prefers(m, w, trial.wife[m]) && self.woman_prefers(w, m, husband[w])
    }

    fn is_solution(&self, trial: &Matching) -> bool {
        is_stable(self, trial)
    }
}

/// Honest blocking-pair oracle.
#[derive(Clone, Debug)]
pub struct StableMatchingOracle {
    profile: PreferenceProfile,
    policy: Policy,
}

impl StableMatchingOracle {
    pub fn new(profile: PreferenceProfile) -> Self {
        Self::with_policy(profile, Policy::Canonical)
    }

    pub fn with_policy(profile: PreferenceProfile, policy: Policy) -> Self {
        StableMatchingOracle { profile, policy }
    }

    pub fn profile(&self) -> &PreferenceProfile {
        &self.profile
    }
}

impl VerificationOracle for StableMatchingOracle {
    type Trial = Matching;
    type Label = BlockingPair;

    fn verify(&mut self, trial: &Matching) -> Feedback<BlockingPair> {
        let pairs = blocking_pairs(&self.profile, trial);
        match self.policy.pick(&pairs) {
            None => Feedback::Yes,
            Some(&pair) => Feedback::Violation(pair),
        }
    }
}

/// What has been learned about every agent's preferences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarketKnowledge {
    /// `men[m]` orders women: `w1 ≻ w2` means `m` prefers `w1`.
    pub men: Vec<Poset>,
    pub women: Vec<Poset>,
}

impl MarketKnowledge {
    pub fn empty(n: usize) -> Result<Self> {
        Ok(MarketKnowledge {
            men: vec![Poset::antichain(n)?; n],
            women: vec![Poset::antichain(n)?; n],
        })
    }

    pub fn len(&self) -> usize {
        self.men.len()
    }

    pub fn is_empty(&self) -> bool {
        self.men.is_empty()
    }

    /// Record both preferences implied by the blocking pair `(m, w)` of `matching`.
    pub fn record(&mut self, matching: &Matching, (m, w): BlockingPair) -> Result<()> {
        let n = self.len();
        if m >= n || w >= n || matching.wife[m] == w {
            return Err(Error::Protocol(format!(
                "({m}, {w}) cannot block the proposed matching"
            )));
        }
        let husband = matching.husbands();
        self.men[m].add(w, matching.wife[m])?;
        self.women[w].add(m, husband[w])?;
        Ok(())
    }

    pub fn relation_count(&self) -> usize {
        self.men
            .iter()
            .chain(&self.women)
            .map(Poset::relation_count)
            .sum()
    }

    /// One full profile consistent with everything known.
    pub fn some_completion(&self) -> PreferenceProfile {
        PreferenceProfile::new(
            self.men.iter().map(Poset::some_extension).collect(),
            self.women.iter().map(Poset::some_extension).collect(),
        )
        .expect("extensions are permutations")
    }
}

/// Builds good orders for all `2n` agents, runs Gale-Shapley on them and
/// proposes the result.
#[derive(Clone, Debug)]
pub struct StableMatchingSolver {
    known: MarketKnowledge,
    calls: u64,
}

impl StableMatchingSolver {
    pub fn new(n: usize) -> Result<Self> {
        if n > DEFAULT_CAP {
            return Err(Error::Capacity {
                what: "stable-matching solver",
                size: n,
                cap: DEFAULT_CAP,
            });
        }
        Ok(StableMatchingSolver {
            known: MarketKnowledge::empty(n)?,
            calls: 0,
        })
    }

    pub fn knowledge(&self) -> &MarketKnowledge {
        &self.known
    }
}

impl TrialSolver for StableMatchingSolver {
    type Trial = Matching;
    type Label = BlockingPair;
    type Verdict = Infallible;

    fn next_step(&mut self) -> Result<Step<Matching, Infallible>> {
        let orders = |posets: &[Poset]| -> Result<Vec<Vec<usize>>> {
            posets.iter().map(extensions::good_order).collect()
        };
        let men = orders(&self.known.men)?;
        let women = orders(&self.known.women)?;
        let guess = PreferenceProfile::new(men, women)?;
        self.calls += 2 * self.known.len() as u64 + 1;
        Ok(Step::Propose(gale_shapley(&guess)))
    }

    fn observe(&mut self, trial: &Matching, label: &BlockingPair) -> Result<()> {
        self.known.record(trial, *label)
    }

    fn computation_calls(&self) -> u64 {
        self.calls
    }
}

pub fn solve_sm<O>(
    oracle: &mut O,
    n: usize,
    budget: OracleBudget,
) -> Result<Run<Matching, BlockingPair, Infallible>>
where
    O: VerificationOracle<Trial = Matching, Label = BlockingPair> + ?Sized,
{
    let mut solver = StableMatchingSolver::new(n)?;
    run_solver(&mut solver, oracle, budget)
}

/// Adaptive adversary that keeps every agent's preferences consistent and
/// keeps naming blocking pairs while some completion still has one.
///
/// Among pairs whose two implied preferences are consistent with what is known
/// and not both known already, it picks the one that leaves the fewest
/// recorded relations after closure, ties by `(m, w)`.
#[derive(Clone, Debug)]
pub struct StableMatchingAdversary {
    state: MarketKnowledge,
}

impl StableMatchingAdversary {
    pub fn new(n: usize) -> Result<Self> {
        Ok(StableMatchingAdversary {
            state: MarketKnowledge::empty(n)?,
        })
    }

    pub fn from_state(state: MarketKnowledge) -> Self {
        StableMatchingAdversary { state }
    }

    pub fn state(&self) -> &MarketKnowledge {
        &self.state
    }
}

impl VerificationOracle for StableMatchingAdversary {
    type Trial = Matching;
    type Label = BlockingPair;

    fn verify(&mut self, trial: &Matching) -> Feedback<BlockingPair> {
        let n = self.state.len();
        assert!(trial.is_valid_for(n), "trial is not a perfect matching");
        let husband = trial.husbands();
        let mut best: Option<(usize, BlockingPair)> = None;
        let mut forced: Option<BlockingPair> = None;
        for m in 0..n {
            for w in 0..n {
                let w0 = trial.wife[m];
                if w == w0 {
                    continue;
                }
                let m0 = husband[w];
                let (pm, pw) = (&self.state.men[m], &self.state.women[w]);
                if pm.greater(w0, w) || pw.greater(m0, m) {
                    continue;
                }
                if pm.greater(w, w0) && pw.greater(m, m0) {
                    forced.get_or_insert((m, w));
                    continue;
                }
                let mut pm = pm.clone();
                let mut pw = pw.clone();
                pm.add(w, w0).expect("checked consistent");
                pw.add(m, m0).expect("checked consistent");
                let size = pm.relation_count() + pw.relation_count();
                if best.map_or(true, |(s, _)| size < s) {
                    best = Some((size, (m, w)));
                }
            }
        }
        if let Some((_, pair)) = best {
            self.state.record(trial, pair).expect("checked consistent");
            return Feedback::Violation(pair);
        }
        if let Some(pair) = forced {
            return Feedback::Violation(pair);
        }
        // Every off-matching pair has a known preference that protects the
        // trial, so it is stable under every completion.
        debug_assert!(is_stable(&self.state.some_completion(), trial));
        Feedback::Yes
    }
}
