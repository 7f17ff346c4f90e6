use crate::error::{Error, Result};
use crate::numerics::{
    kernels, l2_normalize_rows, l2_normalize_rows_backward, Matrix, NormalizedRows, Scalar,
};

use super::gru::{gru_step_backward, gru_step_forward, StepCache};
use super::params::ModelParams;

/// Forward state of the caption encoder for one batch.
#[derive(Debug, Clone)]
pub struct TextForward<T> {
    /// Row `k` of the sorted batch is input sequence `order[k]`.
    order: Vec<usize>,
    /// Token ids per step for the active (prefix) rows of the sorted batch.
    step_tokens: Vec<Vec<usize>>,
    steps: Vec<StepCache<T>>,
    normalized: NormalizedRows<T>,
}

impl<T: Scalar> TextForward<T> {
    /// ℓ2-normalized caption embeddings, in input order.
    pub fn output(&self) -> &Matrix<T> {
        &self.normalized.output
    }

    pub fn into_output(self) -> Matrix<T> {
        self.normalized.output
    }
}

/// Runs every sequence to its own length (longest first, so the active rows
/// at each step form a prefix) and returns the normalized final states.
pub fn text_forward<T: Scalar, S: AsRef<[usize]>>(
    params: &ModelParams<T>,
    batch: &[S],
) -> Result<TextForward<T>> {
    let vocab = params.vocab_size();
    for s in batch {
        let s = s.as_ref();
        if s.is_empty() {
            return Err(Error::DegenerateCaption("empty index sequence".into()));
        }
        if let Some(&bad) = s.iter().find(|&&i| i >= vocab) {
            return Err(Error::Vocabulary {
                index: bad,
                size: vocab,
            });
        }
    }
    let d_hid = params.d_hid();
    let d_emb = params.text.embedding.value.cols();
    let b = batch.len();

    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(batch[i].as_ref().len()));
    let lengths: Vec<usize> = order.iter().map(|&i| batch[i].as_ref().len()).collect();
    let max_len = lengths.first().copied().unwrap_or(0);

    let emb = &params.text.embedding.value;
    let mut hidden = Matrix::<T>::zeros(b, d_hid);
    let mut steps = Vec::with_capacity(max_len);
    let mut step_tokens = Vec::with_capacity(max_len);
    for t in 0..max_len {
        let n = lengths.iter().take_while(|&&l| l > t).count();
        let tokens: Vec<usize> = order[..n].iter().map(|&i| batch[i].as_ref()[t]).collect();
        let x = emb.select_rows(&tokens);
        debug_assert_eq!(x.cols(), d_emb);
        let h_prev = Matrix::from_vec(n, d_hid, hidden.as_slice()[..n * d_hid].to_vec())?;
        let (h, cache) = gru_step_forward(&params.text.gru, x, h_prev)?;
        hidden.as_mut_slice()[..n * d_hid].copy_from_slice(h.as_slice());
        steps.push(cache);
        step_tokens.push(tokens);
    }

    let mut finals = Matrix::zeros(b, d_hid);
    for (k, &i) in order.iter().enumerate() {
        finals.row_mut(i).copy_from_slice(hidden.row(k));
    }
    let normalized = l2_normalize_rows(&finals)?;
    Ok(TextForward {
        order,
        step_tokens,
        steps,
        normalized,
    })
}

/// Backpropagates `d_out` (gradient w.r.t. the normalized embeddings) into
/// the embedding matrix and GRU gradients.
pub fn text_backward<T: Scalar>(
    params: &mut ModelParams<T>,
    fwd: &TextForward<T>,
    d_out: &Matrix<T>,
) -> Result<()> {
    let d_final = l2_normalize_rows_backward(&fwd.normalized, d_out)?;
    let d_hid = params.d_hid();
    let b = fwd.order.len();
    let mut dh = Matrix::<T>::zeros(b, d_hid);
    for (k, &i) in fwd.order.iter().enumerate() {
        dh.row_mut(k).copy_from_slice(d_final.row(i));
    }
    for (cache, tokens) in fwd.steps.iter().zip(&fwd.step_tokens).rev() {
        let n = tokens.len();
        let dh_step = Matrix::from_vec(n, d_hid, dh.as_slice()[..n * d_hid].to_vec())?;
        let (dx, dh_prev) = gru_step_backward(&mut params.text.gru, cache, &dh_step);
        dh.as_mut_slice()[..n * d_hid].copy_from_slice(dh_prev.as_slice());
        let eg = &mut params.text.embedding.grad;
        for (row, &tok) in tokens.iter().enumerate() {
            for (g, &d) in eg.row_mut(tok).iter_mut().zip(dx.row(row)) {
                *g += d;
            }
        }
    }
    Ok(())
}

/// ℓ2-normalized caption embeddings (batch × d_hid).
pub fn encode_captions<T: Scalar, S: AsRef<[usize]>>(
    params: &ModelParams<T>,
    batch: &[S],
) -> Result<Matrix<T>> {
    Ok(text_forward(params, batch)?.into_output())
}

#[derive(Debug, Clone)]
pub struct ImageForward<T> {
    features: Matrix<T>,
    normalized: NormalizedRows<T>,
}

impl<T: Scalar> ImageForward<T> {
    pub fn output(&self) -> &Matrix<T> {
        &self.normalized.output
    }

    pub fn into_output(self) -> Matrix<T> {
        self.normalized.output
    }
}

pub fn image_forward<T: Scalar>(
    params: &ModelParams<T>,
    features: Matrix<T>,
) -> Result<ImageForward<T>> {
    let w = &params.image.projection.value;
    if features.cols() != w.rows() {
        return Err(Error::Dimension {
            op: "encode_images",
            left: features.shape(),
            right: w.shape(),
        });
    }
    let (n, d_img) = features.shape();
    let d_hid = w.cols();
    let mut projected = Matrix::zeros(n, d_hid);
    if let Some(bias) = &params.image.bias {
        for i in 0..n {
            projected.row_mut(i).copy_from_slice(bias.value.as_slice());
        }
    }
    kernels::gemm_nn_acc(
        n,
        d_img,
        d_hid,
        features.as_slice(),
        w.as_slice(),
        projected.as_mut_slice(),
    );
    let normalized = l2_normalize_rows(&projected)?;
    Ok(ImageForward {
        features,
        normalized,
    })
}

pub fn image_backward<T: Scalar>(
    params: &mut ModelParams<T>,
    fwd: &ImageForward<T>,
    d_out: &Matrix<T>,
) -> Result<()> {
    let dy = l2_normalize_rows_backward(&fwd.normalized, d_out)?;
    let (n, d_img) = fwd.features.shape();
    let d_hid = dy.cols();
    kernels::gemm_tn_acc(
        n,
        d_img,
        d_hid,
        fwd.features.as_slice(),
        dy.as_slice(),
        params.image.projection.grad.as_mut_slice(),
    );
    if let Some(bias) = params.image.bias.as_mut() {
        let bg = bias.grad.as_mut_slice();
        for i in 0..n {
            for (g, &d) in bg.iter_mut().zip(dy.row(i)) {
                *g += d;
            }
        }
    }
    Ok(())
}

/// ℓ2-normalized image embeddings (batch × d_hid).
pub fn encode_images<T: Scalar>(
    params: &ModelParams<T>,
    features: &Matrix<T>,
) -> Result<Matrix<T>> {
    Ok(image_forward(params, features.clone())?.into_output())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gru::gru_cell;
    use crate::model::params::{init_params, ModelConfig};
    use crate::numerics::{finite_difference_check, GradCheckConfig, ParamSet};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny(seed: u64) -> ModelParams<f64> {
        init_params(&ModelConfig {
            vocab_size: 20,
            d_emb: 8,
            d_hid: 12,
            d_img: 16,
            image_bias: true,
            seed,
        })
        .unwrap()
    }

    fn unit_norms(m: &Matrix<f64>) {
        for i in 0..m.rows() {
            let n: f64 = m.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn single_token_is_one_step_from_zero() {
        let p = tiny(1);
        let out = encode_captions(&p, &[vec![3usize]]).unwrap();
        let x = p.text.embedding.value.row(3).to_vec();
        let h = gru_cell(&x, &[0.0; 12], &p.text.gru).unwrap();
        let norm: f64 = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (o, hv) in out.row(0).iter().zip(&h) {
            assert!((o - hv / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_and_batch_invariance() {
        let p = tiny(2).cast::<f32>();
        let target = vec![4usize, 7, 1, 9, 2];
        let alone = encode_captions(&p, std::slice::from_ref(&target)).unwrap();
        let batch = vec![
            vec![1usize, 2],
            target.clone(),
            vec![5, 6, 7, 8, 9, 10, 11, 12],
            vec![3],
        ];
        let together = encode_captions(&p, &batch).unwrap();
        for (a, b) in alone.row(0).iter().zip(together.row(1)) {
            assert!((a - b).abs() < 1e-6);
        }
        let mut permuted = batch.clone();
        permuted.reverse();
        let rev = encode_captions(&p, &permuted).unwrap();
        for i in 0..4 {
            assert_eq!(rev.row(3 - i), together.row(i));
        }
    }

    #[test]
    fn caption_errors() {
        let p = tiny(1);
        assert!(matches!(
            encode_captions(&p, &[Vec::<usize>::new()]),
            Err(Error::DegenerateCaption(_))
        ));
        assert!(matches!(
            encode_captions(&p, &[vec![20usize]]),
            Err(Error::Vocabulary {
                index: 20,
                size: 20
            })
        ));
    }

    #[test]
    fn unit_feature_selects_projection_row() {
        let mut p = tiny(3);
        p.image.bias = None;
        let mut f = Matrix::zeros(1, 16);
        f.set(0, 0, 1.0);
        let out = encode_images(&p, &f).unwrap();
        let row = p.image.projection.value.row(0);
        let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (o, w) in out.row(0).iter().zip(row) {
            assert!((o - w / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn scaling_features_without_bias_is_invisible() {
        let mut p = tiny(4);
        p.image.bias = None;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = Matrix::from_vec(
            3,
            16,
            (0..48).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let mut f5 = f.clone();
        f5.as_mut_slice().iter_mut().for_each(|v| *v *= 5.0);
        let a = encode_images(&p, &f).unwrap();
        let b = encode_images(&p, &f5).unwrap();
        unit_norms(&a);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn image_dimension_mismatch() {
        let p = tiny(1);
        assert!(encode_images(&p, &Matrix::zeros(2, 15)).is_err());
    }

    /// Scalar Σ c ⊙ encode(·) for fixed random c, checked by central
    /// differences through both encoders.
    #[test]
    fn encoder_gradients_pass_finite_differences() {
        let mut p = tiny(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let seqs = vec![vec![1usize, 5, 3], vec![7, 2], vec![19, 0, 4, 4]];
        let feats = Matrix::from_vec(
            2,
            16,
            (0..32).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let ct = Matrix::from_vec(
            3,
            12,
            (0..36).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let ci = Matrix::from_vec(
            2,
            12,
            (0..24).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let dot = |a: &Matrix<f64>, b: &Matrix<f64>| -> f64 {
            a.as_slice()
                .iter()
                .zip(b.as_slice())
                .map(|(x, y)| x * y)
                .sum()
        };

        let tf = text_forward(&p, &seqs).unwrap();
        let imf = image_forward(&p, feats.clone()).unwrap();
        text_backward(&mut p, &tf, &ct).unwrap();
        image_backward(&mut p, &imf, &ci).unwrap();

        let report = finite_difference_check(
            &mut p,
            |p| {
                dot(&encode_captions(p, &seqs).unwrap(), &ct)
                    + dot(&encode_images(p, &feats).unwrap(), &ci)
            },
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert!(report.passed, "{report:#?}");
        assert_eq!(report.blocks.len(), p.blocks().len());
    }
}
