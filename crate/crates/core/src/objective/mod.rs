//! Bidirectional margin ranking loss over an in-batch similarity matrix.
//!
//! `S[i][j] = s(a_i, b_j)` with true pairs on the diagonal. For each pair `i`
//! the loss compares `S[i][i]` against the column (`S[j][i]`, other `a`s
//! against `b_i`) and the row (`S[i][j]`, other `b`s against `a_i`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{relative_error, BlockCheck, GradCheckReport, Matrix, Scalar};

pub const DEFAULT_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossVariant {
    /// Only the hardest negative per direction contributes.
    #[default]
    MaxOfHinges,
    SumOfHinges,
}

impl std::str::FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max-of-hinges" | "max" => Ok(Self::MaxOfHinges),
            "sum-of-hinges" | "sum" => Ok(Self::SumOfHinges),
            other => Err(Error::Config(format!("unknown loss variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub margin: f64,
    pub variant: LossVariant,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            variant: LossVariant::MaxOfHinges,
        }
    }
}

impl LossConfig {
    pub fn sum_of_hinges() -> Self {
        Self {
            variant: LossVariant::SumOfHinges,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Config(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<T> {
    pub value: T,
    /// dJ/dS, same shape as `S`.
    pub grad: Matrix<T>,
}

/// Summed over the batch's positive pairs. A batch of one has no negatives
/// and yields zero loss. Among tied maxima the lowest index takes the
/// gradient.
pub fn ranking_loss<T: Scalar>(s: &Matrix<T>, config: &LossConfig) -> Result<LossOutput<T>> {
    let (n, m) = s.shape();
    if n != m {
        return Err(Error::Dimension {
            op: "ranking_loss",
            left: s.shape(),
            right: s.shape(),
        });
    }
    config.validate()?;
    let alpha = T::lit(config.margin);
    let mut value = T::zero();
    let mut grad = Matrix::zeros(n, n);

    for i in 0..n {
        let pos = s.get(i, i);
        // column direction first, then row direction
        for column in [true, false] {
            let entry = |j: usize| if column { (j, i) } else { (i, j) };
            match config.variant {
                LossVariant::MaxOfHinges => {
                    let mut best: Option<(usize, T)> = None;
                    for j in (0..n).filter(|&j| j != i) {
                        let (r, c) = entry(j);
                        let h = alpha - pos + s.get(r, c);
                        if best.is_none_or(|(_, b)| h > b) {
                            best = Some((j, h));
                        }
                    }
                    if let Some((j, h)) = best {
                        if h > T::zero() {
                            value += h;
                            let (r, c) = entry(j);
                            grad.set(r, c, grad.get(r, c) + T::one());
                            grad.set(i, i, grad.get(i, i) - T::one());
                        }
                    }
                }
                LossVariant::SumOfHinges => {
                    for j in (0..n).filter(|&j| j != i) {
                        let (r, c) = entry(j);
                        let h = alpha - pos + s.get(r, c);
                        if h > T::zero() {
                            value += h;
                            grad.set(r, c, grad.get(r, c) + T::one());
                            grad.set(i, i, grad.get(i, i) - T::one());
                        }
                    }
                }
            }
        }
    }
    Ok(LossOutput { value, grad })
}

/// Every hinge argument `α − S[i][i] + S[·][·]` that the loss evaluates.
fn hinge_arguments(s: &Matrix<f64>, margin: f64) -> impl Iterator<Item = f64> + '_ {
    let n = s.rows();
    (0..n).flat_map(move |i| {
        (0..n).filter(move |&j| j != i).flat_map(move |j| {
            [
                margin - s.get(i, i) + s.get(j, i),
                margin - s.get(i, i) + s.get(i, j),
            ]
        })
    })
}

/// Draws an `n×n` similarity matrix in [−1, 1] whose hinge arguments all sit
/// at least `gap` away from zero, and whose maxima are unique, so the loss is
/// differentiable there.
pub fn kink_free_similarity(n: usize, margin: f64, gap: f64, rng: &mut impl Rng) -> Matrix<f64> {
    loop {
        let data = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = Matrix::from_vec(n, n, data).expect("square by construction");
        let far_from_kinks = hinge_arguments(&s, margin).all(|h| h.abs() >= gap);
        let mut args: Vec<f64> = hinge_arguments(&s, margin).collect();
        args.sort_by(f64::total_cmp);
        let distinct = args.windows(2).all(|w| w[1] - w[0] >= gap);
        if far_from_kinks && distinct {
            return s;
        }
    }
}

/// Compares the analytic `dJ/dS` of a given gradient function against central
/// differences on a random kink-free matrix. `grad_fn` lets callers check a
/// deliberately broken gradient.
pub fn loss_backward_check_with<F>(
    config: &LossConfig,
    n: usize,
    seed: u64,
    grad_fn: F,
) -> Result<GradCheckReport>
where
    F: Fn(&Matrix<f64>) -> Result<Matrix<f64>>,
{
    const H: f64 = 1e-5;
    const TOLERANCE: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = kink_free_similarity(n, config.margin, 1e-3, &mut rng);
    let analytic = grad_fn(&s)?;
    let mut check = BlockCheck {
        name: "similarity".into(),
        entries_checked: 0,
        max_relative_error: 0.0,
        worst_entry: 0,
    };
    for r in 0..n {
        for c in 0..n {
            let orig = s.get(r, c);
            s.set(r, c, orig + H);
            let plus = ranking_loss(&s, config)?.value;
            s.set(r, c, orig - H);
            let minus = ranking_loss(&s, config)?.value;
            s.set(r, c, orig);
            let numeric = (plus - minus) / (2.0 * H);
            let err = relative_error(analytic.get(r, c), numeric);
            check.entries_checked += 1;
            if err > check.max_relative_error {
                check.max_relative_error = err;
                check.worst_entry = r * n + c;
            }
        }
    }
    let passed = check.max_relative_error < TOLERANCE;
    Ok(GradCheckReport {
        blocks: vec![check],
        tolerance: TOLERANCE,
        passed,
    })
}

/// Checks `ranking_loss`'s own gradient on a random 4×4 matrix.
pub fn loss_backward_check(config: &LossConfig, seed: u64) -> Result<GradCheckReport> {
    loss_backward_check_with(config, 4, seed, |s| Ok(ranking_loss(s, config)?.grad))
}
