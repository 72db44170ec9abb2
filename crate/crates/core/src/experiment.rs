//! Seeded experiment batches: instance generation, solver runs, result rows,
//! transcripts and honesty audits. The command-line tool wraps this module.
//!
//! Repetition `r` of a batch with seed `s` draws its instance and any
//! randomized oracle choices from ChaCha8 seeded with `s` on stream `r`, so
//! rows are reproducible one by one and independent of thread scheduling.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cnf::{Assignment, Cnf};
use crate::core_game::{
    explicit_core_lp, Allocation, CoreConstraint, CoreLp, CoreOracle, CostGame,
};
use crate::ellipsoid::solve_core;
use crate::error::{Error, Result};
use crate::gen;
use crate::graph::Graph;
use crate::graph_iso::{
    find_clique_via_reduction, for_each_permutation, is_isomorphism, solve_graph_iso, CliqueAnswer,
    GraphIsoOracle, GraphPair,
};
use crate::group_iso::{
    algorithm_b, find_hamiltonian_cycle, hc_verify, is_prime, walk_from_bijection,
    CyclicGroupTable, NaiveGroupIsoSolver, ReductionOutcome, NAIVE_SOLVER_CAP,
};
use crate::matching::{
    is_stable, solve_sm, Matching, PreferenceProfile, StableMatchingAdversary, StableMatchingOracle,
};
use crate::policy::Policy;
use crate::rational::{format_rational, parse_rational};
use crate::sat::{alg_sat, BlockAdversary, LearningAdversary, SatOracle};
use crate::sort::{solve_sort, HiddenOrder, KahnSaksAdversary, SortOracle};
use crate::subset_sum::{combinations, EliminationSolver, Heavier, SsumInstance, SsumOracle};
use crate::trial::{
    check_honesty, check_violations, run_solver, Discrepancy, Feedback, HiddenInstance,
    HonestyReport, OracleBudget, Outcome, Run, Transcript,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Problem {
    Sort,
    Sm,
    Sat,
    GraphIso,
    Clique,
    GroupIsoReduce,
    Core,
    SsumDemo,
}

impl Problem {
    pub const ALL: [Problem; 8] = [
        Problem::Sort,
        Problem::Sm,
        Problem::Sat,
        Problem::GraphIso,
        Problem::Clique,
        Problem::GroupIsoReduce,
        Problem::Core,
        Problem::SsumDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Sort => "sort",
            Problem::Sm => "sm",
            Problem::Sat => "sat",
            Problem::GraphIso => "graphiso",
            Problem::Clique => "clique",
            Problem::GroupIsoReduce => "groupiso-reduce",
            Problem::Core => "core",
            Problem::SsumDemo => "ssum-demo",
        }
    }

    /// Oracles accepted for this problem; the first is the default.
    pub fn oracles(self) -> &'static [OracleKind] {
        use OracleKind::*;
        match self {
            Problem::Sort => &[Honest, Random, KahnSaks],
            Problem::Sm => &[Honest, Random, SmAdversary],
            Problem::Sat => &[Honest, Random, Block, Learning],
            Problem::GraphIso => &[Honest, Random],
            Problem::Clique => &[Honest],
            Problem::GroupIsoReduce => &[Simulator],
            Problem::Core => &[Honest, Random],
            Problem::SsumDemo => &[Honest],
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown problem `{s}`")))
    }
}

/// Which oracle answers the trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OracleKind {
    /// Honest, canonical choice among violated constraints.
    Honest,
    /// Honest, seeded uniform choice among violated constraints.
    Random,
    KahnSaks,
    SmAdversary,
    Block,
    Learning,
    /// The graph-only stand-in used by the group isomorphism reduction.
    Simulator,
}

impl OracleKind {
    const ALL: [OracleKind; 7] = [
        OracleKind::Honest,
        OracleKind::Random,
        OracleKind::KahnSaks,
        OracleKind::SmAdversary,
        OracleKind::Block,
        OracleKind::Learning,
        OracleKind::Simulator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Honest => "honest",
            OracleKind::Random => "random",
            OracleKind::KahnSaks => "kahn-saks",
            OracleKind::SmAdversary => "sm-adversary",
            OracleKind::Block => "block",
            OracleKind::Learning => "learning",
            OracleKind::Simulator => "simulator",
        }
    }

    /// Answers come from a hidden instance fixed before the run.
    pub fn is_honest(self) -> bool {
        matches!(self, OracleKind::Honest | OracleKind::Random)
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OracleKind::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown oracle `{s}`")))
    }
}

/// A hidden instance, generated or read from a file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    Order(HiddenOrder),
    Profile(PreferenceProfile),
    Formula(Cnf),
    Graphs(GraphPair),
    Clique {
        graph: Graph,
        k: usize,
    },
    Hamiltonian {
        graph: Graph,
        cycle: Option<Vec<usize>>,
    },
    Game(CostGame),
    Ssum(SsumInstance),
}

#[derive(Serialize, Deserialize)]
struct OrderJson {
    order: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphsJson {
    g1: Graph,
    g2: Graph,
}

#[derive(Serialize, Deserialize)]
struct CliqueJson {
    graph: Graph,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct HamiltonianJson {
    graph: Graph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cycle: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct SsumJson {
    n: usize,
    m: u64,
    layout: Vec<usize>,
}

fn json_error(source: &str, e: serde_json::Error) -> Error {
    Error::parse(
        format!("{source}:{}:{}", e.line(), e.column()),
        e.to_string(),
    )
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| json_error(source, e))
}

impl Instance {
    /// Parses the file format of `problem`: DIMACS for `sat`, JSON otherwise.
    /// `source` names the input in error locations.
    pub fn parse(problem: Problem, text: &str, source: &str) -> Result<Self> {
        Ok(match problem {
            Problem::Sort => {
                let json: OrderJson = from_json(text, source)?;
                Instance::Order(HiddenOrder::new(json.order)?)
            }
            Problem::Sm => Instance::Profile(from_json(text, source)?),
            Problem::Sat => Instance::Formula(Cnf::parse_dimacs(text).map_err(|e| match e {
                Error::Parse { location, message } => {
                    Error::parse(format!("{source}:{location}"), message)
                }
                other => other,
            })?),
            Problem::GraphIso => {
                let json: GraphsJson = from_json(text, source)?;
                if json.g1.len() != json.g2.len() {
                    return Err(Error::invalid("g1 and g2 must have the same vertex count"));
                }
                Instance::Graphs(GraphPair {
                    g1: json.g1,
                    g2: json.g2,
                })
            }
            Problem::Clique => {
                let json: CliqueJson = from_json(text, source)?;
                if json.k > json.graph.len() {
                    return Err(Error::invalid("clique size exceeds the vertex count"));
                }
                Instance::Clique {
                    graph: json.graph,
                    k: json.k,
                }
            }
            Problem::GroupIsoReduce => {
                let json: HamiltonianJson = from_json(text, source)?;
                if let Some(cycle) = &json.cycle {
                    if !hc_verify(&json.graph, cycle) {
                        return Err(Error::invalid(
                            "`cycle` is not a Hamiltonian cycle of `graph`",
                        ));
                    }
                }
                Instance::Hamiltonian {
                    graph: json.graph,
                    cycle: json.cycle,
                }
            }
            Problem::Core => Instance::Game(from_json(text, source)?),
            Problem::SsumDemo => {
                let json: SsumJson = from_json(text, source)?;
                Instance::Ssum(SsumInstance::with_layout(json.n, json.m, &json.layout)?)
            }
        })
    }

    fn from_value(problem: Problem, value: &Value) -> Result<Self> {
        match value {
            Value::String(text) if problem == Problem::Sat => {
                Instance::parse(problem, text, "transcript")
            }
            other => Instance::parse(problem, &other.to_string(), "transcript"),
        }
    }

    /// The file format read by [`Instance::parse`].
    pub fn to_text(&self) -> String {
        match self.to_value() {
            Value::String(text) => text,
            value => serde_json::to_string_pretty(&value).expect("serializable"),
        }
    }

    fn to_value(&self) -> Value {
        let value = match self {
            Instance::Order(h) => serde_json::to_value(OrderJson {
                order: h.order().to_vec(),
            }),
            Instance::Profile(p) => serde_json::to_value(p),
            Instance::Formula(cnf) => return Value::String(cnf.to_dimacs()),
            Instance::Graphs(pair) => serde_json::to_value(GraphsJson {
                g1: pair.g1.clone(),
                g2: pair.g2.clone(),
            }),
            Instance::Clique { graph, k } => serde_json::to_value(CliqueJson {
                graph: graph.clone(),
                k: *k,
            }),
            Instance::Hamiltonian { graph, cycle } => serde_json::to_value(HamiltonianJson {
                graph: graph.clone(),
                cycle: cycle.clone(),
            }),
            Instance::Game(game) => serde_json::to_value(game),
            Instance::Ssum(inst) => serde_json::to_value(SsumJson {
                n: inst.n(),
                m: inst.m(),
                layout: inst.layout(),
            }),
        };
        value.expect("serializable")
    }

    /// The size parameter `n` of the instance.
    pub fn size(&self) -> usize {
        match self {
            Instance::Order(h) => h.order().len(),
            Instance::Profile(p) => p.len(),
            Instance::Formula(cnf) => cnf.num_vars(),
            Instance::Graphs(pair) => pair.g1.len(),
            Instance::Clique { graph, .. } | Instance::Hamiltonian { graph, .. } => graph.len(),
            Instance::Game(game) => game.len(),
            Instance::Ssum(inst) => inst.n(),
        }
    }

    fn problem(&self) -> Problem {
        match self {
            Instance::Order(_) => Problem::Sort,
            Instance::Profile(_) => Problem::Sm,
            Instance::Formula(_) => Problem::Sat,
            Instance::Graphs(_) => Problem::GraphIso,
            Instance::Clique { .. } => Problem::Clique,
            Instance::Hamiltonian { .. } => Problem::GroupIsoReduce,
            Instance::Game(_) => Problem::Core,
            Instance::Ssum(_) => Problem::SsumDemo,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub problem: Problem,
    /// Size parameter; ignored when `instance` is given.
    pub n: usize,
    /// Second parameter: clauses for `sat`, clique size for `clique`, `M` for
    /// `ssum-demo`. Problem default when absent.
    pub m: Option<usize>,
    pub seed: u64,
    pub reps: usize,
    pub oracle: OracleKind,
    pub budget: OracleBudget,
    /// Fixed hidden instance reused by every repetition.
    pub instance: Option<Instance>,
    pub timing: bool,
}

impl ExperimentSpec {
    pub fn new(problem: Problem, n: usize) -> Self {
        ExperimentSpec {
            problem,
            n,
            m: None,
            seed: 0,
            reps: 1,
            oracle: problem.oracles()[0],
            budget: OracleBudget::unlimited(),
            instance: None,
            timing: false,
        }
    }

    fn size(&self) -> usize {
        self.instance.as_ref().map_or(self.n, Instance::size)
    }
}

/// One row of output. Column order is [`CSV_COLUMNS`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub problem: String,
    pub n: usize,
    /// See [`ExperimentSpec::m`]; the encoding length `N` for `core`, 0 when unused.
    pub m: u64,
    pub seed: u64,
    pub repetition: usize,
    pub oracle: String,
    /// Including a final `Yes`.
    pub trials: usize,
    pub violations: usize,
    pub computation_calls: u64,
    pub outcome: String,
    /// The outcome passed an independent check against the hidden instance
    /// (or the adversary's committed instance).
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "problem",
    "n",
    "m",
    "seed",
    "repetition",
    "oracle",
    "trials",
    "violations",
    "computation_calls",
    "outcome",
    "verified",
];

/// Transcript of one run, with the hidden instance when the oracle was honest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub seed: u64,
    pub repetition: usize,
    pub oracle: String,
    #[serde(default)]
    pub instance: Option<Value>,
    pub entries: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub problem: String,
    pub runs: Vec<TranscriptRecord>,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub rows: Vec<ResultRow>,
    pub transcripts: TranscriptFile,
}

impl Experiment {
    pub fn any_budget_exhausted(&self) -> bool {
        self.rows.iter().any(|r| r.outcome == "budget_exhausted")
    }
}

pub fn rows_to_csv(rows: &[ResultRow], timing: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    if timing {
        header.push("wall_ms");
    }
    w.write_record(&header).map_err(io)?;
    for r in rows {
        let mut record = vec![
            r.problem.clone(),
            r.n.to_string(),
            r.m.to_string(),
            r.seed.to_string(),
            r.repetition.to_string(),
            r.oracle.clone(),
            r.trials.to_string(),
            r.violations.to_string(),
            r.computation_calls.to_string(),
            r.outcome.clone(),
            r.verified.to_string(),
        ];
        if timing {
            record.push(format!("{:.3}", r.wall_ms.unwrap_or(0.0)));
        }
        w.write_record(&record).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn rows_to_json(rows: &[ResultRow]) -> String {
    serde_json::to_string_pretty(rows).expect("serializable")
}

fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

fn default_m(spec: &ExperimentSpec) -> u64 {
    m_column(spec, spec.instance.as_ref())
}

/// The `m` column for a run on `instance` (`None` for adversary runs).
fn m_column(spec: &ExperimentSpec, instance: Option<&Instance>) -> u64 {
    let n = spec.size();
    match (spec.problem, instance) {
        (_, Some(Instance::Formula(cnf))) => cnf.num_clauses() as u64,
        (_, Some(Instance::Clique { k, .. })) => *k as u64,
        (_, Some(Instance::Game(game))) => game.encoding_bits() as u64,
        (_, Some(Instance::Ssum(inst))) => inst.m(),
        (Problem::Sat, None) => match spec.oracle {
            OracleKind::Block => BlockAdversary::new(n).map_or(0, |a| a.num_clauses() as u64),
            OracleKind::Learning => 1,
            _ => spec.m.unwrap_or(2 * n) as u64,
        },
        (Problem::Clique, None) => spec.m.unwrap_or((n / 2).max(1)) as u64,
        (Problem::SsumDemo, None) => spec.m.map_or(SsumInstance::default_m(n), |m| m as u64),
        _ => 0,
    }
}

/// Checks `spec` and builds every repetition's instance and oracle without
/// asking any trial.
pub fn validate(spec: &ExperimentSpec) -> Result<()> {
    if !spec.problem.oracles().contains(&spec.oracle) {
        let allowed: Vec<&str> = spec.problem.oracles().iter().map(|o| o.name()).collect();
        return Err(Error::invalid(format!(
            "oracle `{}` does not apply to {}; use one of {}",
            spec.oracle,
            spec.problem,
            allowed.join(", ")
        )));
    }
    if let Some(inst) = &spec.instance {
        if inst.problem() != spec.problem {
            return Err(Error::invalid("instance does not belong to this problem"));
        }
        if !spec.oracle.is_honest() && spec.oracle != OracleKind::Simulator {
            return Err(Error::invalid(format!(
                "the {} adversary builds its own instance; drop --instance",
                spec.oracle
            )));
        }
    }
    let n = spec.size();
    let cap = |what: &'static str, lo: usize, hi: usize| -> Result<()> {
        if n < lo || n > hi {
            return Err(Error::invalid(format!(
                "{what} needs {lo} ≤ n ≤ {hi}, got {n}"
            )));
        }
        Ok(())
    };
    match spec.problem {
        Problem::Sort | Problem::Sm => {
            cap("extension counting", 1, crate::extensions::DEFAULT_CAP)?
        }
        Problem::Sat => {
            cap("sat", 1, crate::dpll::DEFAULT_VAR_CAP)?;
            if spec.oracle == OracleKind::Block && n % 3 != 0 {
                return Err(Error::invalid("the block adversary needs n divisible by 3"));
            }
            if spec.oracle == OracleKind::Learning {
                cap("the learning adversary", 1, 20)?;
            }
            if spec.oracle.is_honest() && default_m(spec) == 0 {
                return Err(Error::invalid("sat needs at least one clause"));
            }
        }
        Problem::GraphIso | Problem::Clique => cap("graph", 1, crate::graph::MAX_VERTICES)?,
        Problem::GroupIsoReduce => {
            cap("group isomorphism", 3, NAIVE_SOLVER_CAP)?;
            if !is_prime(n) {
                return Err(Error::invalid(format!(
                    "groupiso-reduce needs a prime n, got {n}"
                )));
            }
        }
        Problem::Core => cap("core", 1, crate::core_game::LP_MAX_AGENTS)?,
        Problem::SsumDemo => cap("ssum-demo", 1, 8)?,
    }
    if spec.problem == Problem::Clique && default_m(spec) as usize > n {
        return Err(Error::invalid("clique size exceeds n"));
    }
    if spec.problem == Problem::SsumDemo && spec.instance.is_none() {
        SsumInstance::new(n, default_m(spec))?;
    }
    for rep in 0..spec.reps {
        instance_for(spec, &mut rep_rng(spec.seed, rep))?;
    }
    Ok(())
}

fn instance_for(spec: &ExperimentSpec, rng: &mut ChaCha8Rng) -> Result<Option<Instance>> {
    if let Some(inst) = &spec.instance {
        return Ok(Some(inst.clone()));
    }
    if !spec.oracle.is_honest() && spec.oracle != OracleKind::Simulator {
        return Ok(None);
    }
    let n = spec.n;
    Ok(Some(match spec.problem {
        Problem::Sort => Instance::Order(HiddenOrder::new(gen::random_permutation(n, rng))?),
        Problem::Sm => Instance::Profile(gen::random_profile(n, rng)?),
        Problem::Sat => Instance::Formula(gen::random_cnf(n, default_m(spec) as usize, None, rng)?),
        Problem::GraphIso => {
            let g1 = gen::random_graph(n, 0.5, rng)?;
            let g2 = if rng.gen_bool(0.5) {
                let pi = gen::random_permutation(n, rng);
                let mut h = Graph::empty(n)?;
                for (u, v) in g1.edges() {
                    h.add_edge(pi[u], pi[v])?;
                }
                h
            } else {
                gen::random_graph(n, 0.5, rng)?
            };
            Instance::Graphs(GraphPair { g1, g2 })
        }
        Problem::Clique => Instance::Clique {
            graph: gen::random_graph(n, 0.5, rng)?,
            k: default_m(spec) as usize,
        },
        Problem::GroupIsoReduce => Instance::Hamiltonian {
            graph: gen::random_hamiltonian_graph(n, 0.3, rng)?,
            cycle: None,
        },
        Problem::Core => Instance::Game(gen::random_monotone_game(n, 8, 2, rng)?),
        Problem::SsumDemo => return Ok(None),
    }))
}

struct RunData {
    trials: usize,
    violations: usize,
    computation_calls: u64,
    outcome: String,
    verified: bool,
    entries: Value,
}

fn entries_value<T: Serialize, L: Serialize>(t: &Transcript<T, L>) -> Value {
    serde_json::to_value(t.entries()).expect("serializable")
}

fn finish<T: Serialize, L: Serialize, V>(
    run: &Run<T, L, V>,
    concluded: &str,
    verified: bool,
) -> RunData {
    finish_with(run, concluded, verified, entries_value(&run.transcript))
}

fn finish_with<T, L, V>(
    run: &Run<T, L, V>,
    concluded: &str,
    verified: bool,
    entries: Value,
) -> RunData {
    RunData {
        trials: run.trials(),
        violations: run.violations(),
        computation_calls: run.computation_calls,
        outcome: match run.outcome {
            Outcome::Unsatisfiable(_) => concluded.to_string(),
            ref other => other.kind().to_string(),
        },
        verified,
        entries,
    }
}

fn brute_unsatisfiable(cnf: &Cnf) -> Result<bool> {
    let n = cnf.num_vars();
    if n <= 20 {
        return Ok((0..1u64 << n).all(|bits| {
            let x: Assignment = (0..n).map(|i| bits >> i & 1 == 1).collect();
            !cnf.is_satisfied(&x)
        }));
    }
    Ok(!crate::dpll::dpll_solve(cnf)?.is_sat())
}

fn no_isomorphism(pair: &GraphPair) -> bool {
    let n = pair.g1.len();
    if n > 10 {
        return false;
    }
    let mut found = false;
    for_each_permutation(n, |pi| {
        found = is_isomorphism(&pair.g1, &pair.g2, pi);
        if found {
            std::ops::ControlFlow::Break(())
        } else {
            std::ops::ControlFlow::Continue(())
        }
    });
    !found
}

fn has_k_clique(g: &Graph, k: usize) -> bool {
    let n = g.len();
    fn extend(g: &Graph, candidates: u32, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        let mut rest = candidates;
        while rest.count_ones() as usize >= need {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if extend(g, rest & g.neighbors(v), need - 1) {
                return true;
            }
        }
        false
    }
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    extend(g, all, k)
}

fn run_one(spec: &ExperimentSpec, rep: usize) -> Result<(ResultRow, TranscriptRecord)> {
    let mut rng = rep_rng(spec.seed, rep);
    let instance = instance_for(spec, &mut rng)?;
    let policy = match spec.oracle {
        OracleKind::Random => Policy::random(rng.gen()),
        _ => Policy::Canonical,
    };
    let n = spec.size();
    let budget = spec.budget;
    let start = Instant::now();
    let data = match (spec.problem, &instance) {
        (Problem::Sort, Some(Instance::Order(hidden))) => {
            let mut oracle = SortOracle::with_policy(hidden.clone(), policy);
            let run = solve_sort(&mut oracle, n, budget)?;
            let ok = run
                .outcome
                .solution()
                .is_some_and(|o| hidden.is_solution(o));
            finish(&run, "unsolvable", ok)
        }
        (Problem::Sort, None) => {
            let mut adv = KahnSaksAdversary::new(n)?;
            let run = solve_sort(&mut adv, n, budget)?;
            let ok = run
                .outcome
                .solution()
                .is_some_and(|o| adv.committed_order().as_ref() == Some(o));
            finish(&run, "unsolvable", ok)
        }
        (Problem::Sm, Some(Instance::Profile(profile))) => {
            let mut oracle = StableMatchingOracle::with_policy(profile.clone(), policy);
            let run = solve_sm(&mut oracle, n, budget)?;
            let ok = run
                .outcome
                .solution()
                .is_some_and(|m| is_stable(profile, m));
            finish(&run, "unsolvable", ok)
        }
        (Problem::Sm, None) => {
            let mut adv = StableMatchingAdversary::new(n)?;
            let run = solve_sm(&mut adv, n, budget)?;
            let completion = adv.state().some_completion();
            let ok = run
                .outcome
                .solution()
                .is_some_and(|m| is_stable(&completion, m));
            finish(&run, "unsolvable", ok)
        }
        (Problem::Sat, Some(Instance::Formula(cnf))) => {
            let mut oracle = SatOracle::with_policy(cnf.clone(), policy);
            let run = alg_sat(&mut oracle, n, cnf.num_clauses(), budget)?;
            let ok = match &run.outcome {
                Outcome::Solved(x) => cnf.is_satisfied(x),
                Outcome::Unsatisfiable(_) => brute_unsatisfiable(cnf)?,
                _ => false,
            };
            finish(&run, "unsatisfiable", ok)
        }
        (Problem::Sat, None) if spec.oracle == OracleKind::Block => {
            let mut adv = BlockAdversary::new(n)?;
            let m = adv.num_clauses();
            let run = alg_sat(&mut adv, n, m, budget)?;
            let ok = run
                .outcome
                .solution()
                .is_some_and(|x| adv.hidden_formula().is_satisfied(x));
            finish(&run, "unsatisfiable", ok)
        }
        (Problem::Sat, None) => {
            let mut adv = LearningAdversary::new(n)?;
            let run = alg_sat(&mut adv, n, 1, budget)?;
            let ok = run.outcome.solution().is_some_and(|x| {
                adv.consistent_candidates()
                    .iter()
                    .all(|c| c.formula(n).is_satisfied(x))
            });
            finish(&run, "unsatisfiable", ok)
        }
        (Problem::GraphIso, Some(Instance::Graphs(pair))) => {
            let mut oracle = GraphIsoOracle::with_policy(pair.g1.clone(), pair.g2.clone(), policy)?;
            let run = solve_graph_iso(&mut oracle, n, budget)?;
            let ok = match &run.outcome {
                Outcome::Solved(pi) => pair.is_solution(pi),
                Outcome::Unsatisfiable(_) => no_isomorphism(pair),
                _ => false,
            };
            finish(&run, "not_isomorphic", ok)
        }
        (Problem::Clique, Some(Instance::Clique { graph, k })) => {
            let report = find_clique_via_reduction(graph, *k)?;
            let (outcome, ok, yes) = match &report.answer {
                CliqueAnswer::Clique(vs) => (
                    "clique",
                    vs.len() == *k && graph.is_clique(vs),
                    !report.escaped,
                ),
                CliqueAnswer::NoClique => ("no_clique", !has_k_clique(graph, *k), false),
            };
            RunData {
                trials: report.trials,
                violations: report.trials - yes as usize,
                computation_calls: report.computation_calls,
                outcome: outcome.to_string(),
                verified: ok,
                entries: entries_value(&report.transcript),
            }
        }
        (Problem::GroupIsoReduce, Some(Instance::Hamiltonian { graph, .. })) => {
            let mut solver = NaiveGroupIsoSolver::new(n)?;
            let report = algorithm_b(graph, &mut solver)?;
            let (outcome, ok) = match &report.outcome {
                ReductionOutcome::Cycle { cycle, .. } => ("cycle", hc_verify(graph, cycle)),
                ReductionOutcome::PromiseViolated => {
                    ("promise_violated", find_hamiltonian_cycle(graph).is_none())
                }
            };
            RunData {
                trials: report.trials,
                violations: report.transcript.violation_count(),
                computation_calls: report.solver_work,
                outcome: outcome.to_string(),
                verified: ok,
                entries: entries_value(&report.transcript),
            }
        }
        (Problem::Core, Some(Instance::Game(game))) => {
            let mut oracle = CoreOracle::with_policy(game.clone(), policy);
            let run = solve_core(&mut oracle, n, game.encoding_bits(), budget)?;
            let ok = match &run.outcome {
                Outcome::Solved(x) => game.in_core(x),
                Outcome::Unsatisfiable(_) => explicit_core_lp(game)? == CoreLp::Empty,
                _ => false,
            };
            let printable: Transcript<Vec<String>, CoreConstraint> = run
                .transcript
                .entries()
                .iter()
                .map(|e| {
                    (
                        e.trial.iter().map(format_rational).collect(),
                        e.feedback.clone(),
                    )
                })
                .collect();
            finish_with(&run, "empty", ok, entries_value(&printable))
        }
        (Problem::SsumDemo, Some(Instance::Ssum(inst))) => run_ssum(inst, budget)?,
        _ => unreachable!("instance kind matches the problem after validation"),
    };
    let row = ResultRow {
        problem: spec.problem.name().to_string(),
        n,
        m: m_column(spec, instance.as_ref()),
        seed: spec.seed,
        repetition: rep,
        oracle: spec.oracle.name().to_string(),
        trials: data.trials,
        violations: data.violations,
        computation_calls: data.computation_calls,
        outcome: data.outcome,
        verified: data.verified,
        wall_ms: spec.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    let record = TranscriptRecord {
        seed: spec.seed,
        repetition: rep,
        oracle: spec.oracle.name().to_string(),
        instance: instance
            .filter(|_| spec.oracle.is_honest() || spec.oracle == OracleKind::Simulator)
            .map(|i| i.to_value()),
        entries: data.entries,
    };
    Ok((row, record))
}

fn run_ssum(inst: &SsumInstance, budget: OracleBudget) -> Result<RunData> {
    let mut solver = EliminationSolver::new(inst.n())?;
    let mut oracle = SsumOracle::new(inst.clone());
    let run = run_solver(&mut solver, &mut oracle, budget)?;
    let ok = run
        .outcome
        .solution()
        .is_some_and(|p| *p == inst.solution());
    Ok(finish(&run, "unsolvable", ok))
}

/// Runs every repetition (in parallel) and returns rows ordered by repetition.
///
/// `ssum-demo` without an instance file ignores `reps` and runs the
/// elimination solver once per layout of the `M+2` values; the repetition
/// column is the layout index in lexicographic order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    validate(spec)?;
    let results: Vec<(ResultRow, TranscriptRecord)> =
        if spec.problem == Problem::SsumDemo && spec.instance.is_none() {
            let n = spec.n;
            let m = default_m(spec);
            combinations(1, 2 * n, n - 1)
                .into_par_iter()
                .enumerate()
                .map(|(rep, layout)| {
                    let mut layout_spec = spec.clone();
                    layout_spec.instance =
                        Some(Instance::Ssum(SsumInstance::with_layout(n, m, &layout)?));
                    run_one(&layout_spec, rep)
                })
                .collect::<Result<_>>()?
        } else {
            (0..spec.reps)
                .into_par_iter()
                .map(|rep| run_one(spec, rep))
                .collect::<Result<_>>()?
        };
    let (rows, runs) = results.into_iter().unzip();
    Ok(Experiment {
        rows,
        transcripts: TranscriptFile {
            problem: spec.problem.name().to_string(),
            runs,
        },
    })
}

/// Audit verdict for one transcript record.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditLine {
    pub seed: u64,
    pub repetition: usize,
    pub report: HonestyReport,
}

fn entries<T, L>(value: &Value) -> Result<Transcript<T, L>>
where
    T: for<'de> Deserialize<'de>,
    L: for<'de> Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(bound(deserialize = "T: Deserialize<'de>, L: Deserialize<'de>"))]
    struct Entry<T, L> {
        trial: T,
        feedback: Feedback<L>,
    }
    let list: Vec<Entry<T, L>> = serde_json::from_value(value.clone())
        .map_err(|e| Error::parse("transcript entries", e.to_string()))?;
    Ok(list.into_iter().map(|e| (e.trial, e.feedback)).collect())
}

/// Violations are checked against the cyclic table read off `cycle` (or any
/// Hamiltonian cycle of `graph`); each `Yes` must spell out a Hamiltonian cycle.
fn audit_group(
    transcript: &Transcript<Vec<usize>, (usize, usize)>,
    graph: &Graph,
    cycle: &Option<Vec<usize>>,
) -> Result<HonestyReport> {
    let cycle = match cycle {
        Some(c) => c.clone(),
        None => find_hamiltonian_cycle(graph).ok_or_else(|| {
            Error::invalid("graph has no Hamiltonian cycle to build a table from")
        })?,
    };
    let table = CyclicGroupTable::from_cycle(&cycle)?;
    let report = check_violations(transcript, &table);
    if !report.is_honest() {
        return Ok(report);
    }
    for (entry, e) in transcript.entries().iter().enumerate() {
        if e.feedback.is_yes() && !hc_verify(graph, &walk_from_bijection(&e.trial)) {
            return Ok(HonestyReport::Dishonest {
                entry,
                kind: Discrepancy::FalseYes,
            });
        }
    }
    Ok(report)
}

/// Replays every run of a transcript file against `hidden` (or, when absent,
/// the instance recorded with each run).
pub fn audit(file: &TranscriptFile, hidden: Option<&Instance>) -> Result<Vec<AuditLine>> {
    let problem: Problem = file.problem.parse()?;
    file.runs
        .iter()
        .map(|run| {
            let recorded;
            let inst = match hidden {
                Some(inst) => inst,
                None => {
                    let value = run.instance.as_ref().ok_or_else(|| {
                        Error::invalid(format!(
                            "run (seed {}, repetition {}) has no recorded instance; pass one",
                            run.seed, run.repetition
                        ))
                    })?;
                    recorded = Instance::from_value(problem, value)?;
                    &recorded
                }
            };
            let report = match inst {
                Instance::Order(h) => check_honesty(&entries(&run.entries)?, h),
                Instance::Profile(p) => {
                    check_honesty(&entries::<Matching, (usize, usize)>(&run.entries)?, p)
                }
                Instance::Formula(cnf) => {
                    check_honesty(&entries::<Assignment, usize>(&run.entries)?, cnf)
                }
                Instance::Graphs(pair) => check_honesty(&entries(&run.entries)?, pair),
                Instance::Clique { graph, k } => {
                    let pair = GraphPair {
                        g1: Graph::clique_plus_isolated(graph.len(), *k)?,
                        g2: graph.clone(),
                    };
                    check_honesty(&entries(&run.entries)?, &pair)
                }
                Instance::Hamiltonian { graph, cycle } => {
                    audit_group(&entries(&run.entries)?, graph, cycle)?
                }
                Instance::Game(game) => {
                    let raw: Transcript<Vec<String>, CoreConstraint> = entries(&run.entries)?;
                    let parsed: Transcript<Allocation, CoreConstraint> = raw
                        .entries()
                        .iter()
                        .map(|e| {
                            let x = e
                                .trial
                                .iter()
                                .map(|s| parse_rational(s))
                                .collect::<Result<Allocation>>()?;
                            Ok((x, e.feedback.clone()))
                        })
                        .collect::<Result<_>>()?;
                    check_honesty(&parsed, game)
                }
                Instance::Ssum(inst) => {
                    check_honesty(&entries::<Vec<bool>, Heavier>(&run.entries)?, inst)
                }
            };
            Ok(AuditLine {
                seed: run.seed,
                repetition: run.repetition,
                report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(problem: Problem, n: usize, oracle: OracleKind) -> ExperimentSpec {
        let mut s = ExperimentSpec::new(problem, n);
        s.oracle = oracle;
        s.reps = 3;
        s.seed = 11;
        s
    }

    #[test]
    fn every_problem_runs_and_verifies() {
        let cases = [
            (Problem::Sort, 5, OracleKind::Honest),
            (Problem::Sort, 5, OracleKind::KahnSaks),
            (Problem::Sm, 4, OracleKind::Random),
            (Problem::Sm, 4, OracleKind::SmAdversary),
            (Problem::Sat, 6, OracleKind::Honest),
            (Problem::Sat, 6, OracleKind::Block),
            (Problem::Sat, 4, OracleKind::Learning),
            (Problem::GraphIso, 6, OracleKind::Random),
            (Problem::Clique, 7, OracleKind::Honest),
            (Problem::GroupIsoReduce, 5, OracleKind::Simulator),
            (Problem::Core, 3, OracleKind::Honest),
            (Problem::SsumDemo, 3, OracleKind::Honest),
        ];
        for (problem, n, oracle) in cases {
            let exp = run_experiment(&spec(problem, n, oracle)).unwrap();
            assert!(!exp.rows.is_empty());
            for row in &exp.rows {
                assert!(row.verified, "{problem} {oracle}: {row:?}");
                let solved = ["solved", "cycle"].contains(&row.outcome.as_str())
                    || (row.outcome == "clique" && row.trials > row.violations);
                assert_eq!(row.trials, row.violations + solved as usize, "{row:?}");
            }
            if oracle.is_honest() || oracle == OracleKind::Simulator {
                for line in audit(&exp.transcripts, None).unwrap() {
                    assert!(line.report.is_honest(), "{problem}: {line:?}");
                }
            }
        }
    }

    #[test]
    fn csv_is_reproducible_and_has_fixed_columns() {
        let s = spec(Problem::Sat, 6, OracleKind::Random);
        let a = rows_to_csv(&run_experiment(&s).unwrap().rows, false).unwrap();
        let b = rows_to_csv(&run_experiment(&s).unwrap().rows, false).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(
            "problem,n,m,seed,repetition,oracle,trials,violations,computation_calls,outcome,verified\n"
        ));
    }

    #[test]
    fn mismatched_oracle_is_rejected() {
        assert!(validate(&spec(Problem::Core, 3, OracleKind::Block)).is_err());
        assert!(validate(&spec(Problem::Sat, 5, OracleKind::Block)).is_err());
        assert!(validate(&spec(Problem::GroupIsoReduce, 6, OracleKind::Simulator)).is_err());
    }

    #[test]
    fn instance_files_round_trip() {
        let exp = run_experiment(&spec(Problem::GraphIso, 5, OracleKind::Honest)).unwrap();
        let value = exp.transcripts.runs[0].instance.clone().unwrap();
        let inst = Instance::from_value(Problem::GraphIso, &value).unwrap();
        let again = Instance::parse(Problem::GraphIso, &inst.to_text(), "x").unwrap();
        assert_eq!(inst, again);
        let err = Instance::parse(Problem::Sort, "{\"order\": [0, 1,", "bad.json").unwrap_err();
        assert!(
            matches!(err, Error::Parse { ref location, .. } if location.starts_with("bad.json:1:"))
        );
    }

    #[test]
    fn forged_yes_fails_the_audit() {
        let mut exp = run_experiment(&spec(Problem::Sort, 4, OracleKind::Honest)).unwrap();
        let run = &mut exp.transcripts.runs[0];
        let first = run.entries[0].clone();
        let mut forged = first.clone();
        forged["feedback"] = Value::String("yes".into());
        run.entries = Value::Array(vec![forged]);
        let lines = audit(&exp.transcripts, None).unwrap();
        let honest_first = first["feedback"] == Value::String("yes".into());
        assert_eq!(lines[0].report.is_honest(), honest_first);
    }
}
