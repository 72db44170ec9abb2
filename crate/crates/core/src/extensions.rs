//! Exact linear-extension statistics by dynamic programming over up-sets.
//!
//! A linear extension is built top-down: the set of elements already placed
//! is always an up-set. `f[U]` counts orderings of `U` and `g[U]` counts
//! orderings of the complement below `U`, so the number of extensions placing
//! `a` right after `U` is `f[U] * g[U | a]`.
//!
//! Counts fit in `u128` for every supported size (20! < 2^62).

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::poset::{bits, Poset};

pub const DEFAULT_CAP: usize = 16;
pub const MAX_CAP: usize = 20;

/// Exact counts for a poset. Heights follow the convention
/// `rank(a) = #{b : b ≻ a}`, so the maximum of a chain has height 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionStats {
    n: usize,
    total: u128,
    height_sums: Vec<u128>,
    /// `before[b * n + a]` = number of extensions with `b ≻ a`.
    before: Option<Vec<u128>>,
}

impl ExtensionStats {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn total(&self) -> u128 {
        self.total
    }

    /// Sum of `rank(a)` over all extensions; `h(a)` is this divided by `total`.
    pub fn height_sum(&self, a: usize) -> u128 {
        self.height_sums[a]
    }

    pub fn height(&self, a: usize) -> Ratio<u128> {
        Ratio::new(self.height_sums[a], self.total)
    }

    pub fn heights(&self) -> Vec<Ratio<u128>> {
        (0..self.n).map(|a| self.height(a)).collect()
    }

    pub fn has_pairs(&self) -> bool {
        self.before.is_some()
    }

    /// Number of extensions with `a ≻ b`. Panics unless pair counts were requested.
    pub fn count_greater(&self, a: usize, b: usize) -> u128 {
        let before = self
            .before
            .as_ref()
            .expect("pair counts were not computed; use pair_statistics");
        before[a * self.n + b]
    }

    /// `Pr(a ≻ b)` under the uniform distribution on extensions.
    pub fn prob_greater(&self, a: usize, b: usize) -> Ratio<u128> {
        Ratio::new(self.count_greater(a, b), self.total)
    }
}

fn check_cap(p: &Poset, cap: usize) -> Result<()> {
    let cap = cap.min(MAX_CAP);
    if p.len() > cap {
        return Err(Error::Capacity {
            what: "linear-extension counting",
            size: p.len(),
            cap,
        });
    }
    Ok(())
}

struct Tables {
    f: Vec<u128>,
    g: Vec<u128>,
}

fn tables(p: &Poset, need_suffix: bool) -> Tables {
    let n = p.len();
    let full = p.full_mask() as usize;
    let mut f = vec![0u128; full + 1];
    f[0] = 1;
    // Subsets in increasing numeric order visit every U before U | a.
    for u in 0..=full {
        let fu = f[u];
        if fu == 0 {
            continue;
        }
        for a in bits(!(u as u32) & p.full_mask()) {
            if p.above(a) as usize & !u == 0 {
                f[u | 1 << a] += fu;
            }
        }
    }
    let mut g = Vec::new();
    if need_suffix {
        g = vec![0u128; full + 1];
        g[full] = 1;
        for u in (0..full).rev() {
            if f[u] == 0 {
                continue;
            }
            let mut sum = 0u128;
            for a in bits(!(u as u32) & p.full_mask()) {
                if p.above(a) as usize & !u == 0 {
                    sum += g[u | 1 << a];
                }
            }
            g[u] = sum;
        }
    }
    debug_assert!(n == 0 || f[full] > 0);
    Tables { f, g }
}

pub fn count_extensions(p: &Poset) -> Result<u128> {
    count_extensions_with_cap(p, DEFAULT_CAP)
}

pub fn count_extensions_with_cap(p: &Poset, cap: usize) -> Result<u128> {
    check_cap(p, cap)?;
    Ok(tables(p, false).f[p.full_mask() as usize])
}

fn statistics(p: &Poset, cap: usize, pairs: bool) -> Result<ExtensionStats> {
    check_cap(p, cap)?;
    let n = p.len();
    let full = p.full_mask();
    let t = tables(p, true);
    let mut height_sums = vec![0u128; n];
    let mut before = pairs.then(|| vec![0u128; n * n]);
    for u in 0..=full as usize {
        let fu = t.f[u];
        if fu == 0 {
            continue;
        }
        let rank = (u as u32).count_ones() as u128;
        for a in bits(!(u as u32) & full) {
            if p.above(a) as usize & !u != 0 {
                continue;
            }
            let w = fu * t.g[u | 1 << a];
            if w == 0 {
                continue;
            }
            height_sums[a] += w * rank;
            if let Some(before) = before.as_mut() {
                for b in bits(u as u32) {
                    before[b * n + a] += w;
                }
            }
        }
    }
    Ok(ExtensionStats {
        n,
        total: t.f[full as usize],
        height_sums,
        before,
    })
}

pub fn average_heights(p: &Poset) -> Result<ExtensionStats> {
    statistics(p, DEFAULT_CAP, false)
}

pub fn average_heights_with_cap(p: &Poset, cap: usize) -> Result<ExtensionStats> {
    statistics(p, cap, false)
}

/// Heights plus all pairwise probabilities `Pr(a ≻ b)`, in one pass.
pub fn pair_statistics(p: &Poset) -> Result<ExtensionStats> {
    statistics(p, DEFAULT_CAP, true)
}

pub fn pair_statistics_with_cap(p: &Poset, cap: usize) -> Result<ExtensionStats> {
    statistics(p, cap, true)
}

/// Elements sorted by ascending average height, ties by index. The first
/// element is the one most likely to be on top.
pub fn good_order(p: &Poset) -> Result<Vec<usize>> {
    good_order_with_cap(p, DEFAULT_CAP)
}

pub fn good_order_with_cap(p: &Poset, cap: usize) -> Result<Vec<usize>> {
    let stats = statistics(p, cap, false)?;
    Ok(order_by_height(&stats))
}

pub(crate) fn order_by_height(stats: &ExtensionStats) -> Vec<usize> {
    let mut order: Vec<usize> = (0..stats.len()).collect();
    // All heights share the denominator `total`, so numerators compare directly.
    order.sort_by_key(|&a| (stats.height_sum(a), a));
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: u128, b: u128) -> Ratio<u128> {
        Ratio::new(a, b)
    }

    #[test]
    fn small_counts() {
        assert_eq!(count_extensions(&Poset::antichain(3).unwrap()), Ok(6));
        assert_eq!(
            count_extensions(&Poset::chain(&[0, 1, 2, 3]).unwrap()),
            Ok(1)
        );
        // b ≻ a over {a, b, c}
        let p = Poset::from_relations(3, &[(1, 0)]).unwrap();
        assert_eq!(count_extensions(&p), Ok(3));
        assert_eq!(count_extensions(&Poset::antichain(0).unwrap()), Ok(1));
    }

    #[test]
    fn chain_heights_count_elements_above() {
        // c ≻ b ≻ a with a = 0, b = 1, c = 2
        let stats = average_heights(&Poset::chain(&[2, 1, 0]).unwrap()).unwrap();
        assert_eq!(stats.heights(), vec![r(2, 1), r(1, 1), r(0, 1)]);
    }

    #[test]
    fn single_relation_heights_and_probabilities() {
        // b ≻ a. Extensions top-first: (b,a,c), (b,c,a), (c,b,a).
        let p = Poset::from_relations(3, &[(1, 0)]).unwrap();
        let stats = pair_statistics(&p).unwrap();
        assert_eq!(stats.heights(), vec![r(5, 3), r(1, 3), r(1, 1)]);
        assert_eq!(stats.prob_greater(2, 0), r(2, 3));
        assert_eq!(stats.prob_greater(0, 2), r(1, 3));
        assert_eq!(stats.prob_greater(1, 0), r(1, 1));
        assert_eq!(stats.prob_greater(2, 1), r(1, 3));
        assert_eq!(good_order(&p).unwrap(), vec![1, 2, 0]);
    }

    #[test]
    fn antichain_is_symmetric() {
        let stats = pair_statistics(&Poset::antichain(5).unwrap()).unwrap();
        assert_eq!(stats.total(), 120);
        for a in 0..5 {
            assert_eq!(stats.height(a), r(2, 1));
            for b in 0..5 {
                if a != b {
                    assert_eq!(stats.prob_greater(a, b), r(1, 2));
                }
            }
        }
        assert_eq!(
            good_order(&Poset::antichain(2).unwrap()).unwrap(),
            vec![0, 1]
        );
    }

    #[test]
    fn cap_is_enforced() {
        let p = Poset::antichain(17).unwrap();
        assert_eq!(
            count_extensions(&p),
            Err(Error::Capacity {
                what: "linear-extension counting",
                size: 17,
                cap: 16
            })
        );
        assert!(count_extensions_with_cap(
            &Poset::chain(&(0..20).collect::<Vec<_>>()).unwrap(),
            20
        )
        .is_ok());
    }
}
