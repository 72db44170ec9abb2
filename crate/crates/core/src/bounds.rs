//! Exact trial-count bounds.

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::One;

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Smallest `k ≥ 0` with `(num/den)^k ≥ value`. Requires `num > den > 0`.
pub fn ceil_log(num: u64, den: u64, value: &BigUint) -> u64 {
    assert!(num > den && den > 0, "base must exceed 1");
    let mut k = 0;
    let mut lhs = BigUint::one();
    let mut rhs = value.clone();
    while lhs < rhs {
        lhs *= num;
        rhs *= den;
        k += 1;
    }
    k
}

/// `⌈log_{11/8}(n!)⌉ + 1`: trials used by the good-order sorter, counting the final Yes.
pub fn sort_upper_bound(n: usize) -> u64 {
    ceil_log(11, 8, &factorial(n)) + 1
}

/// `⌈log_{11/3}(n!)⌉`: violations any sorter suffers against the Kahn-Saks adversary.
pub fn sort_lower_bound(n: usize) -> u64 {
    ceil_log(11, 3, &factorial(n))
}

/// `2n(⌈log_{11/8}(n!)⌉ + 1)`.
pub fn stable_matching_upper_bound(n: usize) -> u64 {
    2 * n as u64 * sort_upper_bound(n)
}

/// `n(n−1)/2`.
pub fn stable_matching_lower_bound(n: usize) -> u64 {
    (n * n.saturating_sub(1) / 2) as u64
}

/// `2nm`.
pub fn sat_upper_bound(n: usize, m: usize) -> u64 {
    2 * n as u64 * m as u64
}

/// `2·C(n,2) − 1`, the violation cap of the pair-graph solver.
pub fn graph_iso_violation_bound(n: usize) -> u64 {
    (2 * binomial(n as u64, 2)).saturating_sub(1)
}

/// `C(2n−1, n)`.
pub fn subset_sum_lower_bound(n: usize) -> u64 {
    if n == 0 {
        return 0;
    }
    binomial(2 * n as u64 - 1, n as u64)
}
