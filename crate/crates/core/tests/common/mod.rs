//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's algorithms; only plain data types
//! are borrowed.

#![allow(dead_code)]

use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::Zero;
use trial_error::cnf::Cnf;
use trial_error::core_game::CostGame;
use trial_error::graph::Graph;
use trial_error::matching::PreferenceProfile;
use trial_error::Poset;

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

/// Orders (top first) where every known `a ≻ b` has `a` listed before `b`.
pub fn linear_extensions(p: &Poset) -> Vec<Vec<usize>> {
    let rel = p.relations();
    permutations(p.len())
        .into_iter()
        .filter(|order| {
            let mut pos = vec![0; order.len()];
            for (i, &x) in order.iter().enumerate() {
                pos[x] = i;
            }
            rel.iter().all(|&(a, b)| pos[a] < pos[b])
        })
        .collect()
}

/// `(#extensions with a above b, #extensions)`.
pub fn count_above(exts: &[Vec<usize>], a: usize, b: usize) -> (usize, usize) {
    let hits = exts
        .iter()
        .filter(|o| o.iter().position(|&x| x == a) < o.iter().position(|&x| x == b))
        .count();
    (hits, exts.len())
}

pub fn is_stable_brute(profile: &PreferenceProfile, wife: &[usize]) -> bool {
    let n = wife.len();
    let mut husband = vec![usize::MAX; n];
    for (m, &w) in wife.iter().enumerate() {
        if w >= n || husband[w] != usize::MAX {
            return false;
        }
        husband[w] = m;
    }
    let rank = |list: &[usize], x: usize| list.iter().position(|&y| y == x).unwrap();
    for m in 0..n {
        for w in 0..n {
            let ml = profile.man_list(m);
            let wl = profile.woman_list(w);
            if rank(ml, w) < rank(ml, wife[m]) && rank(wl, m) < rank(wl, husband[w]) {
                return false;
            }
        }
    }
    true
}

pub fn satisfies(cnf: &Cnf, x: &[bool]) -> bool {
    cnf.clauses()
        .iter()
        .all(|c| c.iter().any(|l| x[l.var()] != l.is_negated()))
}

pub fn brute_satisfiable(cnf: &Cnf) -> bool {
    let n = cnf.num_vars();
    (0..1u64 << n).any(|bits| {
        let x: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        satisfies(cnf, &x)
    })
}

/// `u ~ v` in `g1` iff `π(u) ~ π(v)` in `g2`.
pub fn preserves_edges(g1: &Graph, g2: &Graph, pi: &[usize]) -> bool {
    let n = g1.len();
    let mut seen = vec![false; n];
    if pi.len() != n
        || pi
            .iter()
            .any(|&v| v >= n || std::mem::replace(&mut seen[v], true))
    {
        return false;
    }
    (0..n).all(|u| (u + 1..n).all(|v| g1.has_edge(u, v) == g2.has_edge(pi[u], pi[v])))
}

pub fn brute_isomorphic(g1: &Graph, g2: &Graph) -> bool {
    g1.len() == g2.len()
        && g1.edge_count() == g2.edge_count()
        && permutations(g1.len())
            .iter()
            .any(|pi| preserves_edges(g1, g2, pi))
}

pub fn relabel(g: &Graph, pi: &[usize]) -> Graph {
    let mut h = Graph::empty(g.len()).unwrap();
    for (u, v) in g.edges() {
        h.add_edge(pi[u], pi[v]).unwrap();
    }
    h
}

/// Clique number by exhaustive subset search.
pub fn clique_number(g: &Graph) -> usize {
    let n = g.len();
    (0u32..1 << n)
        .filter(|&s| {
            (0..n)
                .all(|u| s >> u & 1 == 0 || (u + 1..n).all(|v| s >> v & 1 == 0 || g.has_edge(u, v)))
        })
        .map(|s| s.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

pub fn is_hamiltonian_cycle(g: &Graph, seq: &[usize]) -> bool {
    let n = g.len();
    let mut seen = vec![false; n];
    n >= 3
        && seq.len() == n
        && seq
            .iter()
            .all(|&v| v < n && !std::mem::replace(&mut seen[v], true))
        && (0..n).all(|i| g.has_edge(seq[i], seq[(i + 1) % n]))
}

pub fn brute_hamiltonian(g: &Graph) -> bool {
    let n = g.len();
    n >= 3
        && permutations(n)
            .iter()
            .filter(|p| p[0] == 0)
            .any(|p| is_hamiltonian_cycle(g, p))
}

/// Membership in the core checked coalition by coalition.
pub fn brute_in_core(game: &CostGame, x: &[BigRational]) -> bool {
    let n = game.len();
    if x.len() != n {
        return false;
    }
    let full = (1u32 << n) - 1;
    (1..=full).all(|s| {
        let sum: BigRational = (0..n)
            .filter(|i| s >> i & 1 == 1)
            .fold(BigRational::zero(), |acc, i| acc + &x[i]);
        if s == full {
            &sum == game.cost(s)
        } else {
            &sum <= game.cost(s)
        }
    })
}

/// All labeled graphs on `n` vertices.
pub fn all_graphs(n: usize) -> impl Iterator<Item = Graph> {
    let pairs = n * n.saturating_sub(1) / 2;
    (0u64..1 << pairs).map(move |code| Graph::from_code(n, code).unwrap())
}

fn adjacency_code(g: &Graph, order: &[usize]) -> u64 {
    let n = order.len();
    let mut code = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            code = code << 1 | g.has_edge(order[i], order[j]) as u64;
        }
    }
    code
}

/// Vertex colors after color refinement from degrees, named by sorted signature
/// so that isomorphic graphs get the same coloring up to relabeling.
fn refined_colors(g: &Graph) -> Vec<usize> {
    let n = g.len();
    let mut colors: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    loop {
        let sigs: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<usize> = (0..n)
                    .filter(|&u| g.has_edge(u, v))
                    .map(|u| colors[u])
                    .collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let mut distinct = sigs.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = sigs
            .iter()
            .map(|s| distinct.binary_search(s).unwrap())
            .collect();
        let before = colors.iter().collect::<HashSet<_>>().len();
        if distinct.len() == before {
            return next;
        }
        colors = next;
    }
}

/// Canonical form: maximum adjacency code over orders that list color classes
/// in color order and permute freely inside each class.
pub fn canonical_code(g: &Graph) -> (Vec<usize>, u64) {
    let n = g.len();
    let colors = refined_colors(g);
    let mut class_sizes: Vec<usize> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let max_color = colors.iter().copied().max().map_or(0, |c| c + 1);
    for c in 0..max_color {
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == c).collect();
        class_sizes.push(cell.len());
        cells.push(cell);
    }
    let mut best = 0u64;
    let mut order = Vec::with_capacity(n);
    fn go(g: &Graph, cells: &mut [Vec<usize>], idx: usize, order: &mut Vec<usize>, best: &mut u64) {
        if idx == cells.len() {
            *best = (*best).max(adjacency_code(g, order));
            return;
        }
        if cells[idx].is_empty() {
            go(g, cells, idx + 1, order, best);
            return;
        }
        for i in 0..cells[idx].len() {
            let v = cells[idx].remove(i);
            order.push(v);
            go(g, cells, idx, order, best);
            order.pop();
            cells[idx].insert(i, v);
        }
    }
    go(g, &mut cells, 0, &mut order, &mut best);
    (class_sizes, best)
}

/// One representative per isomorphism class on `n` vertices, built by adding a
/// vertex with every possible neighborhood to each class on `n − 1` vertices.
pub fn graph_classes(n: usize) -> Vec<Graph> {
    use rayon::prelude::*;
    let mut classes = vec![Graph::empty(0).unwrap()];
    for size in 1..=n {
        let candidates: Vec<Graph> = classes
            .iter()
            .flat_map(|g| {
                (0u32..1 << (size - 1)).map(move |nb| {
                    let mut h = Graph::empty(size).unwrap();
                    for (u, v) in g.edges() {
                        h.add_edge(u, v).unwrap();
                    }
                    for u in 0..size - 1 {
                        if nb >> u & 1 == 1 {
                            h.add_edge(u, size - 1).unwrap();
                        }
                    }
                    h
                })
            })
            .collect();
        let mut keyed: Vec<((Vec<usize>, u64), Graph)> = candidates
            .into_par_iter()
            .map(|h| (canonical_code(&h), h))
            .collect();
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        keyed.dedup_by(|a, b| a.0 == b.0);
        classes = keyed.into_iter().map(|(_, g)| g).collect();
    }
    classes
}
