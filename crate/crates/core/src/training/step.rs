//! Loss and gradients for one batch of either task.

use crate::error::Result;
use crate::model::{image_backward, image_forward, text_backward, text_forward, ModelParams};
use crate::numerics::{cosine_similarity_backward, cosine_similarity_matrix, Matrix, Scalar};
use crate::objective::{ranking_loss, LossConfig};

/// Caption–image batch: `a = φ(captions)`, `b = ψ(images)`. Accumulates
/// gradients into every block of `params` and returns the loss.
pub fn c2i_gradients<T: Scalar, S: AsRef<[usize]>>(
    params: &mut ModelParams<T>,
    captions: &[S],
    features: &Matrix<T>,
    loss: &LossConfig,
) -> Result<T> {
    let text = text_forward(params, captions)?;
    let image = image_forward(params, features.clone())?;
    let s = cosine_similarity_matrix(text.output(), image.output())?;
    let out = ranking_loss(&s, loss)?;
    let (da, db) = cosine_similarity_backward(text.output(), image.output(), &out.grad)?;
    text_backward(params, &text, &da)?;
    image_backward(params, &image, &db)?;
    Ok(out.value)
}

/// Caption–caption batch: `a = φ(captions_a)`, `b = φ(captions_b)`. Only the
/// caption encoder's gradients change.
pub fn c2c_gradients<T: Scalar, S: AsRef<[usize]>>(
    params: &mut ModelParams<T>,
    captions_a: &[S],
    captions_b: &[S],
    loss: &LossConfig,
) -> Result<T> {
    let a = text_forward(params, captions_a)?;
    let b = text_forward(params, captions_b)?;
    let s = cosine_similarity_matrix(a.output(), b.output())?;
    let out = ranking_loss(&s, loss)?;
    let (da, db) = cosine_similarity_backward(a.output(), b.output(), &out.grad)?;
    text_backward(params, &a, &da)?;
    text_backward(params, &b, &db)?;
    Ok(out.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, ModelConfig};
    use crate::numerics::{finite_difference_check, GradCheckConfig, ParamSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> ModelParams<f64> {
        init_params(&ModelConfig {
            vocab_size: 12,
            d_emb: 5,
            d_hid: 6,
            d_img: 7,
            image_bias: true,
            seed: 4,
        })
        .unwrap()
    }

    fn batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|_| {
                (0..rng.random_range(1..5))
                    .map(|_| rng.random_range(0..12))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn c2c_leaves_image_encoder_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = tiny();
        let (a, b) = (batch(&mut rng, 4), batch(&mut rng, 4));
        c2c_gradients(&mut p, &a, &b, &LossConfig::default()).unwrap();
        assert!(p.image.projection.grad.as_slice().iter().all(|&g| g == 0.0));
        assert!(p
            .image
            .bias
            .unwrap()
            .grad
            .as_slice()
            .iter()
            .all(|&g| g == 0.0));
    }

    #[test]
    fn c2c_gradient_passes_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = (batch(&mut rng, 4), batch(&mut rng, 4));
        let cfg = LossConfig::sum_of_hinges();
        // larger weights than the default init keep every gradient entry
        // well above finite-difference roundoff
        let mut p = tiny();
        for blk in p.blocks_mut() {
            blk.value.as_mut_slice().iter_mut().for_each(|v| *v *= 5.0);
        }
        c2c_gradients(&mut p, &a, &b, &cfg).unwrap();
        let report = finite_difference_check(
            &mut p,
            |q| {
                let mut q = q.clone();
                c2c_gradients(&mut q, &a, &b, &cfg).unwrap()
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.passed, "{report:#?}");
        assert_eq!(report.blocks.len(), p.blocks().len());
    }
}
