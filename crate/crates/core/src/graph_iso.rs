//! Graph isomorphism with hidden graphs, and the clique search built on it.
//!
//! A trial is a bijection `π` from the vertices of `G1` to those of `G2`
//! (`π[i]` is the image of `i`). A violation is a pair `(i, j)`, `i < j`, where
//! exactly one of `{i, j} ∈ E(G1)` and `{π(i), π(j)} ∈ E(G2)` holds; the oracle
//! does not say which.
//!
//! The solver links left pair `(i, j)` to right pair `(π(i), π(j))` in a pair
//! graph and only proposes bijections that map no pair into its own component.
//! Linked nodes always disagree on edge status and the pair graph is
//! bipartite, so a left and a right node in one component disagree too. Every
//! isomorphism is therefore component-consistent, and running out of
//! consistent bijections proves the graphs non-isomorphic.

use std::ops::ControlFlow;

use crate::cnf::{Cnf, Lit};
use crate::dpll::{dpll_solve_with_cap, SatResult};
use crate::error::{Error, Result};
use crate::graph::{Graph, UnionFind};
use crate::policy::Policy;
use crate::poset::is_permutation;
use crate::trial::{
    run_solver, run_solver_with, Feedback, HiddenInstance, OracleBudget, Outcome, Run, Step,
    Transcript, TrialSolver, VerificationOracle,
};

pub type Bijection = Vec<usize>;
pub type VertexPair = (usize, usize);

/// Up to this size a non-isomorphism verdict is double-checked by enumerating
/// every bijection.
pub const EXHAUSTIVE_CONFIRM_LIMIT: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotIsomorphic;

pub fn is_isomorphism(g1: &Graph, g2: &Graph, pi: &[usize]) -> bool {
    g1.len() == g2.len() && is_permutation(pi, g1.len()) && violated_pairs(g1, g2, pi).is_empty()
}

/// Pairs `(i, j)`, `i < j`, breaking the edge correspondence under `pi`, sorted.
pub fn violated_pairs(g1: &Graph, g2: &Graph, pi: &[usize]) -> Vec<VertexPair> {
    let n = g1.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if g1.has_edge(i, j) != g2.has_edge(pi[i], pi[j]) {
                out.push((i, j));
            }
        }
    }
    out
}

/// The hidden pair of graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphPair {
    pub g1: Graph,
    pub g2: Graph,
}

impl HiddenInstance<Bijection, VertexPair> for GraphPair {
    fn is_violated(&self, pi: &Bijection, &(i, j): &VertexPair) -> bool {
        let n = self.g1.len();
        is_permutation(pi, n)
            && i < n
            && j < n
            && i != j
            && self.g1.has_edge(i, j) != self.g2.has_edge(pi[i], pi[j])
    }

    fn is_solution(&self, pi: &Bijection) -> bool {
        is_isomorphism(&self.g1, &self.g2, pi)
    }
}

/// Honest oracle; both graphs hidden.
#[derive(Clone, Debug)]
pub struct GraphIsoOracle {
    pair: GraphPair,
    policy: Policy,
}

impl GraphIsoOracle {
    pub fn new(g1: Graph, g2: Graph) -> Result<Self> {
        Self::with_policy(g1, g2, Policy::Canonical)
    }

    pub fn with_policy(g1: Graph, g2: Graph, policy: Policy) -> Result<Self> {
        if g1.len() != g2.len() {
            return Err(Error::invalid(
                "graphs must have the same number of vertices",
            ));
        }
        Ok(GraphIsoOracle {
            pair: GraphPair { g1, g2 },
            policy,
        })
    }

    pub fn hidden(&self) -> &GraphPair {
        &self.pair
    }
}

impl VerificationOracle for GraphIsoOracle {
    type Trial = Bijection;
    type Label = VertexPair;

    fn verify(&mut self, pi: &Bijection) -> Feedback<VertexPair> {
        let pairs = violated_pairs(&self.pair.g1, &self.pair.g2, pi);
        match self.policy.pick(&pairs) {
            None => Feedback::Yes,
            Some(&p) => Feedback::Violation(p),
        }
    }
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Bipartite graph on the vertex pairs of both graphs, with components.
#[derive(Clone, Debug)]
pub struct PairGraph {
    n: usize,
    pairs: Vec<VertexPair>,
    components: UnionFind,
    edges: Vec<(VertexPair, VertexPair)>,
}

impl PairGraph {
    pub fn new(n: usize) -> Self {
        let pairs: Vec<VertexPair> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let components = UnionFind::new(2 * pairs.len());
        PairGraph {
            n,
            pairs,
            components,
            edges: Vec::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// `C(n, 2)` nodes on each side.
    pub fn side_len(&self) -> usize {
        self.pairs.len()
    }

    fn left(&self, (i, j): VertexPair) -> usize {
        pair_index(self.n, i, j)
    }

    fn right(&self, (a, b): VertexPair) -> usize {
        self.pairs.len() + pair_index(self.n, a, b)
    }

    /// Link left pair `l` to right pair `r`. Returns whether two components merged.
    pub fn add_edge(&mut self, l: VertexPair, r: VertexPair) -> bool {
        let (x, y) = (self.left(l), self.right(r));
        let norm = |(a, b): VertexPair| (a.min(b), a.max(b));
        self.edges.push((norm(l), norm(r)));
        self.components.union(x, y)
    }

    pub fn same_component(&mut self, l: VertexPair, r: VertexPair) -> bool {
        let (x, y) = (self.left(l), self.right(r));
        self.components.same(x, y)
    }

    pub fn component_count(&self) -> usize {
        self.components.component_count()
    }

    pub fn edges(&self) -> &[(VertexPair, VertexPair)] {
        &self.edges
    }

    /// Does `pi` keep every left pair out of its image's component?
    pub fn is_consistent(&mut self, pi: &[usize]) -> bool {
        let ids = self.component_ids();
        self.is_consistent_with(&ids, pi)
    }

    /// Component representative of every node, left side first.
    pub fn component_ids(&mut self) -> Vec<usize> {
        (0..2 * self.pairs.len())
            .map(|x| self.components.find(x))
            .collect()
    }

    fn is_consistent_with(&self, ids: &[usize], pi: &[usize]) -> bool {
        self.pairs
            .iter()
            .all(|&(i, j)| ids[self.left((i, j))] != ids[self.right((pi[i], pi[j]))])
    }

    /// (left pair, right pair) couples that share a component.
    fn forbidden(&mut self) -> Vec<(VertexPair, VertexPair)> {
        let side = self.pairs.len();
        let mut groups: Vec<(Vec<VertexPair>, Vec<VertexPair>)> =
            vec![Default::default(); 2 * side];
        for node in 0..2 * side {
            if self.components.component_size(node) == 1 {
                continue;
            }
            let root = self.components.find(node);
            if node < side {
                groups[root].0.push(self.pairs[node]);
            } else {
                groups[root].1.push(self.pairs[node - side]);
            }
        }
        groups
            .into_iter()
            .flat_map(|(ls, rs)| {
                ls.iter()
                    .flat_map(|&l| rs.iter().map(move |&r| (l, r)))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    /// CNF over `x[i*n + a]` ("`i` maps to `a`") that is satisfied exactly by
    /// the component-consistent bijections.
    pub fn encode(&mut self) -> Cnf {
        let n = self.n;
        let x = |i: usize, a: usize| i * n + a;
        let mut cnf = Cnf::new(n * n);
        let mut push = |clause: Vec<Lit>| cnf.push(clause).expect("variables in range");
        for i in 0..n {
            push((0..n).map(|a| Lit::pos(x(i, a))).collect());
            push((0..n).map(|a| Lit::pos(x(a, i))).collect());
            for a in 0..n {
                for b in a + 1..n {
                    push(vec![Lit::neg(x(i, a)), Lit::neg(x(i, b))]);
                    push(vec![Lit::neg(x(a, i)), Lit::neg(x(b, i))]);
                }
            }
        }
        for ((i, j), (a, b)) in self.forbidden() {
            push(vec![Lit::neg(x(i, a)), Lit::neg(x(j, b))]);
            push(vec![Lit::neg(x(i, b)), Lit::neg(x(j, a))]);
        }
        cnf
    }
}

/// A component-consistent bijection found by the DPLL computation oracle, if any.
pub fn propose_bijection(h: &mut PairGraph) -> Result<Option<Bijection>> {
    let n = h.vertex_count();
    let cnf = h.encode();
    let (result, _) = dpll_solve_with_cap(&cnf, n * n)?;
    Ok(match result {
        SatResult::Unsat => None,
        SatResult::Sat(x) => {
            let pi: Bijection = (0..n)
                .map(|i| (0..n).find(|&a| x[i * n + a]).expect("row constraint"))
                .collect();
            debug_assert!(is_permutation(&pi, n) && h.is_consistent(&pi));
            Some(pi)
        }
    })
}

/// Visits every permutation of `0..n` in lexicographic order until `visit` breaks.
pub fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize]) -> ControlFlow<()>) {
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        if visit(&p).is_break() {
            return;
        }
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

#[derive(Clone, Debug)]
pub struct GraphIsoSolver {
    h: PairGraph,
    calls: u64,
}

impl GraphIsoSolver {
    pub fn new(n: usize) -> Result<Self> {
        if n > crate::graph::MAX_VERTICES {
            return Err(Error::Capacity {
                what: "graph isomorphism solver",
                size: n,
                cap: crate::graph::MAX_VERTICES,
            });
        }
        Ok(GraphIsoSolver {
            h: PairGraph::new(n),
            calls: 0,
        })
    }

    pub fn pair_graph(&self) -> &PairGraph {
        &self.h
    }
}

impl TrialSolver for GraphIsoSolver {
    type Trial = Bijection;
    type Label = VertexPair;
    type Verdict = NotIsomorphic;

    fn next_step(&mut self) -> Result<Step<Bijection, NotIsomorphic>> {
        self.calls += 1;
        if let Some(pi) = propose_bijection(&mut self.h)? {
            return Ok(Step::Propose(pi));
        }
        let n = self.h.vertex_count();
        if n <= EXHAUSTIVE_CONFIRM_LIMIT {
            let mut witness = None;
            let ids = self.h.component_ids();
            let h = &self.h;
            for_each_permutation(n, |pi| {
                if h.is_consistent_with(&ids, pi) {
                    witness = Some(pi.to_vec());
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if let Some(pi) = witness {
                return Err(Error::Inconsistent(format!(
                    "computation oracle reported no consistent bijection, but {pi:?} is one"
                )));
            }
        }
        Ok(Step::Conclude(NotIsomorphic))
    }

    fn observe(&mut self, pi: &Bijection, &(i, j): &VertexPair) -> Result<()> {
        let n = self.h.vertex_count();
        if i >= n || j >= n || i == j {
            return Err(Error::Protocol(format!("({i}, {j}) is not a vertex pair")));
        }
        self.h.add_edge((i, j), (pi[i], pi[j]));
        Ok(())
    }

    fn computation_calls(&self) -> u64 {
        self.calls
    }
}

pub fn solve_graph_iso<O>(
    oracle: &mut O,
    n: usize,
    budget: OracleBudget,
) -> Result<Run<Bijection, VertexPair, NotIsomorphic>>
where
    O: VerificationOracle<Trial = Bijection, Label = VertexPair> + ?Sized,
{
    run_solver(&mut GraphIsoSolver::new(n)?, oracle, budget)
}

/// Oracle for `G1 = ` the `k`-clique on `0..k` plus isolated vertices and a
/// known `G2 = g`. Prefers violations that expose a missing clique edge,
/// minimizing `max(i, j)` and then `i`.
#[derive(Clone, Debug)]
pub struct CliqueOracle {
    g1: Graph,
    g: Graph,
    k: usize,
}

impl CliqueOracle {
    pub fn new(g: Graph, k: usize) -> Result<Self> {
        if k > g.len() {
            return Err(Error::invalid(format!(
                "clique size {k} exceeds vertex count {}",
                g.len()
            )));
        }
        Ok(CliqueOracle {
            g1: Graph::clique_plus_isolated(g.len(), k)?,
            g,
            k,
        })
    }

    pub fn hidden(&self) -> GraphPair {
        GraphPair {
            g1: self.g1.clone(),
            g2: self.g.clone(),
        }
    }
}

impl VerificationOracle for CliqueOracle {
    type Trial = Bijection;
    type Label = VertexPair;

    fn verify(&mut self, pi: &Bijection) -> Feedback<VertexPair> {
        let mut missing: Option<VertexPair> = None;
        for j in 1..self.k {
            for i in 0..j {
                if !self.g.has_edge(pi[i], pi[j]) {
                    missing = Some((i, j));
                    break;
                }
            }
            if missing.is_some() {
                break;
            }
        }
        if let Some(pair) = missing {
            return Feedback::Violation(pair);
        }
        match violated_pairs(&self.g1, &self.g, pi).first() {
            None => Feedback::Yes,
            Some(&pair) => Feedback::Violation(pair),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CliqueAnswer {
    Clique(Vec<usize>),
    NoClique,
}

#[derive(Clone, Debug)]
pub struct CliqueReport {
    pub answer: CliqueAnswer,
    pub trials: usize,
    /// The clique was read off a violation with `max(i, j) ≥ k` rather than a final bijection.
    pub escaped: bool,
    pub computation_calls: u64,
    pub transcript: Transcript<Bijection, VertexPair>,
}

/// Decide whether `g` has a `k`-clique by running the isomorphism solver
/// against [`CliqueOracle`].
pub fn find_clique_via_reduction(g: &Graph, k: usize) -> Result<CliqueReport> {
    let n = g.len();
    if k > n {
        return Ok(CliqueReport {
            answer: CliqueAnswer::NoClique,
            trials: 0,
            escaped: false,
            computation_calls: 0,
            transcript: Transcript::new(),
        });
    }
    let mut oracle = CliqueOracle::new(g.clone(), k)?;
    let mut solver = GraphIsoSolver::new(n)?;
    let mut escape: Option<Bijection> = None;
    let run = run_solver_with(
        &mut solver,
        &mut oracle,
        OracleBudget::unlimited(),
        |_, pi, feedback| match feedback {
            Feedback::Violation((i, j)) if (*i).max(*j) >= k => {
                escape = Some(pi.clone());
                ControlFlow::Break(())
            }
            _ => ControlFlow::Continue(()),
        },
    )?;
    let (pi, escaped) = match (run.outcome, escape) {
        (Outcome::Halted, Some(pi)) => (pi, true),
        (Outcome::Solved(pi), _) => (pi, false),
        (Outcome::Unsatisfiable(NotIsomorphic), _) => {
            return Ok(CliqueReport {
                answer: CliqueAnswer::NoClique,
                trials: run.transcript.trial_count(),
                escaped: false,
                computation_calls: run.computation_calls,
                transcript: run.transcript,
            })
        }
        (other, _) => {
            return Err(Error::Protocol(format!(
                "isomorphism solver stopped with {}",
                other.kind()
            )))
        }
    };
    let clique: Vec<usize> = pi[..k].to_vec();
    if !g.is_clique(&clique) {
        return Err(Error::Inconsistent(format!(
            "extracted vertices {clique:?} do not form a clique"
        )));
    }
    Ok(CliqueReport {
        answer: CliqueAnswer::Clique(clique),
        trials: run.transcript.trial_count(),
        escaped,
        computation_calls: run.computation_calls,
        transcript: run.transcript,
    })
}
