use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::adam::ParamBlock;

/// Anything that exposes an ordered list of parameter blocks.
pub trait ParamSet<T> {
    fn blocks(&self) -> Vec<&ParamBlock<T>>;
    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock<T>>;

    fn zero_grads(&mut self)
    where
        T: super::Scalar,
    {
        for b in self.blocks_mut() {
            b.zero_grad();
        }
    }
}

impl<T> ParamSet<T> for Vec<ParamBlock<T>> {
    fn blocks(&self) -> Vec<&ParamBlock<T>> {
        self.iter().collect()
    }
    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock<T>> {
        self.iter_mut().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub h: f64,
    pub tolerance: f64,
    /// Blocks larger than this are checked on a seeded random subsample of
    /// exactly this many entries.
    pub max_entries_per_block: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            h: 1e-5,
            tolerance: 1e-4,
            max_entries_per_block: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub name: String,
    pub entries_checked: usize,
    pub max_relative_error: f64,
    /// Flat index of the worst entry.
    pub worst_entry: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockCheck>,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_relative_error)
            .fold(0.0, f64::max)
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the gradients currently stored in each block's `grad` against
/// central differences of `loss_fn`. Parameter values are restored exactly.
pub fn finite_difference_check<P, F>(
    params: &mut P,
    mut loss_fn: F,
    config: &GradCheckConfig,
) -> Result<GradCheckReport>
where
    P: ParamSet<f64>,
    F: FnMut(&P) -> f64,
{
    let analytic: Vec<Vec<f64>> = params
        .blocks()
        .iter()
        .map(|b| b.grad.as_slice().to_vec())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut blocks = Vec::with_capacity(analytic.len());

    for (bi, grads) in analytic.iter().enumerate() {
        let name = params.blocks()[bi].name.clone();
        let n = grads.len();
        let entries: Vec<usize> = if n > config.max_entries_per_block {
            let mut idx =
                rand::seq::index::sample(&mut rng, n, config.max_entries_per_block).into_vec();
            idx.sort_unstable();
            idx
        } else {
            (0..n).collect()
        };

        let mut worst = (0.0f64, 0usize);
        for &e in &entries {
            let original = params.blocks()[bi].value.as_slice()[e];
            params.blocks_mut()[bi].value.as_mut_slice()[e] = original + config.h;
            let plus = loss_fn(params);
            params.blocks_mut()[bi].value.as_mut_slice()[e] = original - config.h;
            let minus = loss_fn(params);
            params.blocks_mut()[bi].value.as_mut_slice()[e] = original;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::GradCheck(format!(
                    "loss is non-finite when perturbing {name}[{e}]"
                )));
            }
            let numeric = (plus - minus) / (2.0 * config.h);
            let err = relative_error(grads[e], numeric);
            if err > worst.0 {
                worst = (err, e);
            }
        }
        blocks.push(BlockCheck {
            name,
            entries_checked: entries.len(),
            max_relative_error: worst.0,
            worst_entry: worst.1,
        });
    }

    let passed = blocks
        .iter()
        .all(|b| b.max_relative_error < config.tolerance);
    Ok(GradCheckReport {
        blocks,
        tolerance: config.tolerance,
        passed,
    })
}
