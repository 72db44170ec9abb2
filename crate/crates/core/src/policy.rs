//! How an oracle chooses among several violated constraints.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, Default)]
pub enum Policy {
    /// The first candidate in the oracle's canonical order.
    #[default]
    Canonical,
    /// Uniform choice, seeded.
    Random(ChaCha8Rng),
}

impl Policy {
    pub fn random(seed: u64) -> Self {
        Policy::Random(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn pick<'a, T>(&mut self, candidates: &'a [T]) -> Option<&'a T> {
        match self {
            Policy::Canonical => candidates.first(),
            Policy::Random(rng) => candidates.choose(rng),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Canonical => "canonical",
            Policy::Random(_) => "random",
        }
    }
}
