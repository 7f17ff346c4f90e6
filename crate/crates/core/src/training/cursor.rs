use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Walks a shuffled ordering of `0..len` in batches, reshuffling when a pass
/// is exhausted.
///
/// A pass that would end in a single-item batch instead carries that item
/// to the front of the next pass, so no batch has fewer than two items
/// unless the dataset itself does.
#[derive(Debug, Clone)]
pub struct BatchCursor {
    order: Vec<usize>,
    pos: usize,
    epoch: usize,
    rng: ChaCha8Rng,
}

impl BatchCursor {
    pub fn new(len: usize, seed: u64) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyCorpus(
                "batch cursor over an empty dataset".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        Ok(Self {
            order,
            pos: 0,
            epoch: 0,
            rng,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Completed passes.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn reshuffle(&mut self, carry: Option<usize>) {
        self.order.shuffle(&mut self.rng);
        if let Some(item) = carry {
            let at = self
                .order
                .iter()
                .position(|&x| x == item)
                .expect("item in order");
            self.order.swap(0, at);
        }
        self.pos = 0;
        self.epoch += 1;
    }

    pub fn next_batch(&mut self, batch_size: usize) -> Vec<usize> {
        let batch_size = batch_size.max(1);
        let len = self.order.len();
        match len - self.pos {
            0 => self.reshuffle(None),
            1 if len > 1 => {
                let carry = self.order[self.pos];
                self.reshuffle(Some(carry));
            }
            _ => {}
        }
        let end = (self.pos + batch_size).min(len);
        let batch = self.order[self.pos..end].to_vec();
        self.pos = end;
        batch
    }
}
