use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// The objective of one training step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Caption–image ranking on one language's data (index into the
    /// configured languages).
    C2i { language: usize },
    /// Caption–caption ranking on the cross-language pair set.
    C2c,
}

/// Bernoulli task choice followed, for c2i, by a uniform language choice.
/// Both draws come from one seeded stream, which also hands out the seeds of
/// the per-dataset batch cursors.
#[derive(Debug, Clone)]
pub struct TaskScheduler {
    rng: ChaCha8Rng,
    p_c2i: f64,
    languages: usize,
    c2c: bool,
}

impl TaskScheduler {
    pub fn new(seed: u64, p_c2i: f64, languages: usize, c2c: bool) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            p_c2i,
            languages,
            c2c,
        }
    }

    /// Seed for a dependent random stream (e.g. a batch cursor).
    pub fn derive_seed(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn next_task(&mut self) -> Task {
        if self.c2c && !self.rng.random_bool(self.p_c2i) {
            return Task::C2c;
        }
        let language = if self.languages > 1 {
            self.rng.random_range(0..self.languages)
        } else {
            0
        };
        Task::C2i { language }
    }
}
