//! Strict partial orders on up to 32 elements, kept transitively closed as bitmasks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ELEMENTS: usize = 32;

/// `a ≻ b` is stored as bit `b` of `below[a]` and bit `a` of `above[b]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PosetJson", into = "PosetJson")]
pub struct Poset {
    n: usize,
    above: Vec<u32>,
    below: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct PosetJson {
    n: usize,
    relations: Vec<(usize, usize)>,
}

impl TryFrom<PosetJson> for Poset {
    type Error = Error;

    fn try_from(json: PosetJson) -> Result<Self> {
        Poset::from_relations(json.n, &json.relations)
    }
}

impl From<Poset> for PosetJson {
    fn from(p: Poset) -> Self {
        PosetJson {
            n: p.n,
            relations: p.cover_relations(),
        }
    }
}

impl Poset {
    pub fn antichain(n: usize) -> Result<Self> {
        if n > MAX_ELEMENTS {
            return Err(Error::Capacity {
                what: "poset",
                size: n,
                cap: MAX_ELEMENTS,
            });
        }
        Ok(Poset {
            n,
            above: vec![0; n],
            below: vec![0; n],
        })
    }

    /// The chain `order[0] ≻ order[1] ≻ ...`.
    pub fn chain(order: &[usize]) -> Result<Self> {
        let mut p = Poset::antichain(order.len())?;
        for w in order.windows(2) {
            p.add(w[0], w[1])?;
        }
        Ok(p)
    }

    /// Each `(a, b)` means `a ≻ b`.
    pub fn from_relations(n: usize, relations: &[(usize, usize)]) -> Result<Self> {
        let mut p = Poset::antichain(n)?;
        for &(a, b) in relations {
            p.add(a, b)?;
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn full_mask(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    /// Elements known to be above `a`.
    pub fn above(&self, a: usize) -> u32 {
        self.above[a]
    }

    /// Elements known to be below `a`.
    pub fn below(&self, a: usize) -> u32 {
        self.below[a]
    }

    /// Is `a ≻ b` known?
    pub fn greater(&self, a: usize, b: usize) -> bool {
        self.below[a] >> b & 1 == 1
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.greater(a, b) || self.greater(b, a)
    }

    /// Record `a ≻ b` and close transitively. Returns whether anything was new;
    /// errors if the relation would create a cycle.
    pub fn add(&mut self, a: usize, b: usize) -> Result<bool> {
        if a >= self.n || b >= self.n {
            return Err(Error::invalid(format!(
                "relation ({a}, {b}) out of range for {} elements",
                self.n
            )));
        }
        if a == b || self.greater(b, a) {
            return Err(Error::Inconsistent(format!(
                "{a} ≻ {b} contradicts the known order"
            )));
        }
        if self.greater(a, b) {
            return Ok(false);
        }
        let ups = self.above[a] | 1 << a;
        let downs = self.below[b] | 1 << b;
        for x in bits(ups) {
            self.below[x] |= downs;
        }
        for y in bits(downs) {
            self.above[y] |= ups;
        }
        Ok(true)
    }

    pub fn relation_count(&self) -> usize {
        self.below.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// All pairs `(a, b)` with `a ≻ b`, sorted.
    pub fn relations(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| bits(self.below[a]).map(move |b| (a, b)))
            .collect()
    }

    /// The transitive reduction (Hasse diagram edges).
    pub fn cover_relations(&self) -> Vec<(usize, usize)> {
        self.relations()
            .into_iter()
            .filter(|&(a, b)| self.below[a] & self.above[b] == 0)
            .collect()
    }

    /// Is `order` (top first) a permutation of the elements compatible with the poset?
    pub fn is_linear_extension(&self, order: &[usize]) -> bool {
        if !is_permutation(order, self.n) {
            return false;
        }
        let mut placed = 0u32;
        for &x in order {
            if self.above[x] & !placed != 0 {
                return false;
            }
            placed |= 1 << x;
        }
        true
    }

    /// Pairs `(a, b)` where `a` is listed before `b` in `order` but `b ≻ a` is known.
    pub fn violated_pairs(&self, order: &[usize]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                if self.greater(b, a) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Some linear extension: repeatedly take the lowest-indexed maximal element.
    pub fn some_extension(&self) -> Vec<usize> {
        let mut placed = 0u32;
        let mut order = Vec::with_capacity(self.n);
        while order.len() < self.n {
            let x = (0..self.n)
                .find(|&x| placed >> x & 1 == 0 && self.above[x] & !placed == 0)
                .expect("a transitively closed acyclic relation always has a maximal element");
            placed |= 1 << x;
            order.push(x);
        }
        order
    }

    pub fn is_total(&self) -> bool {
        self.relation_count() == self.n * self.n.saturating_sub(1) / 2
    }
}

pub(crate) fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

pub(crate) fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in order {
        if x >= n || std::mem::replace(&mut seen[x], true) {
            return false;
        }
    }
    true
}
