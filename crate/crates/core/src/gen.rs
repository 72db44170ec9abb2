//! Seeded random instance generators.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cnf::{Cnf, Lit};
use crate::core_game::{Coalition, CostGame};
use crate::error::Result;
use crate::graph::Graph;
use crate::matching::PreferenceProfile;
use crate::poset::Poset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Random DAG along a hidden random order, each forward pair related with
/// probability `density`, then closed transitively.
pub fn random_poset(n: usize, density: f64, rng: &mut impl Rng) -> Result<Poset> {
    let order = random_permutation(n, rng);
    let mut relations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                relations.push((order[i], order[j]));
            }
        }
    }
    Poset::from_relations(n, &relations)
}

/// Uniform preference lists on both sides.
pub fn random_profile(n: usize, rng: &mut impl Rng) -> Result<PreferenceProfile> {
    let men = (0..n).map(|_| random_permutation(n, rng)).collect();
    let women = (0..n).map(|_| random_permutation(n, rng)).collect();
    PreferenceProfile::new(men, women)
}

/// `m` clauses over distinct variables with random signs. Width is fixed when
/// given, otherwise uniform in `1..=min(n, 3)`.
pub fn random_cnf(n: usize, m: usize, width: Option<usize>, rng: &mut impl Rng) -> Result<Cnf> {
    let mut cnf = Cnf::new(n);
    let vars: Vec<usize> = (0..n).collect();
    for _ in 0..m {
        let w = width
            .unwrap_or_else(|| rng.gen_range(1..=n.clamp(1, 3)))
            .min(n);
        let clause = vars
            .choose_multiple(rng, w)
            .map(|&v| Lit::new(v, rng.gen_bool(0.5)))
            .collect();
        cnf.push(clause)?;
    }
    Ok(cnf)
}

/// `G(n, p)`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Result<Graph> {
    let mut g = Graph::empty(n)?;
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v)?;
            }
        }
    }
    Ok(g)
}

/// A random Hamiltonian cycle plus `G(n, p)` extra edges.
pub fn random_hamiltonian_graph(n: usize, p: f64, rng: &mut impl Rng) -> Result<Graph> {
    let mut g = random_graph(n, p, rng)?;
    let cycle = random_permutation(n, rng);
    if n >= 3 {
        for i in 0..n {
            let (u, v) = (cycle[i], cycle[(i + 1) % n]);
            if !g.has_edge(u, v) {
                g.add_edge(u, v)?;
            }
        }
    }
    Ok(g)
}

fn ratio(numer: u64, denom: u64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Costs `k / denom` with `k` uniform in `0..=max_numer`, made monotone by
/// taking the maximum over subsets.
pub fn random_monotone_game(
    n: usize,
    max_numer: u64,
    denom: u64,
    rng: &mut impl Rng,
) -> Result<CostGame> {
    let size = 1usize << n;
    let mut costs = vec![BigRational::zero(); size];
    for s in 1..size {
        let raw = ratio(rng.gen_range(0..=max_numer), denom);
        let sub = (0..n)
            .filter(|i| s >> i & 1 == 1)
            .map(|i| costs[s & !(1 << i)].clone())
            .max()
            .unwrap_or_else(BigRational::zero);
        costs[s] = raw.max(sub);
    }
    CostGame::from_fn(n, |s| costs[s as usize].clone())
}

/// Coverage game: each agent covers a random set of weighted items and a
/// coalition pays for the union. Monotone and submodular, so the core is nonempty.
pub fn random_coverage_game(
    n: usize,
    items: usize,
    max_weight: u64,
    denom: u64,
    rng: &mut impl Rng,
) -> Result<CostGame> {
    let weights: Vec<BigRational> = (0..items)
        .map(|_| ratio(rng.gen_range(1..=max_weight), denom))
        .collect();
    let covers: Vec<u64> = (0..n)
        .map(|_| rng.gen_range(0..1u64 << items.min(63)))
        .collect();
    CostGame::from_fn(n, |s: Coalition| {
        let union = (0..n)
            .filter(|i| s >> i & 1 == 1)
            .fold(0u64, |acc, i| acc | covers[i]);
        (0..items)
            .filter(|k| union >> k & 1 == 1)
            .map(|k| weights[k].clone())
            .sum()
    })
}

/// `c(S) = Σ_{i∈S} v_i` with `v_i = k / denom`, `k` uniform in `0..=max_numer`.
pub fn random_additive_game(
    n: usize,
    max_numer: u64,
    denom: u64,
    rng: &mut impl Rng,
) -> Result<CostGame> {
    let values: Vec<BigRational> = (0..n)
        .map(|_| ratio(rng.gen_range(0..=max_numer), denom))
        .collect();
    CostGame::additive(&values)
}
