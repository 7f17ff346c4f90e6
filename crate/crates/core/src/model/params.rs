use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamBlock, ParamSet, Scalar};

/// Initial weights are drawn from U(−INIT_RANGE, INIT_RANGE); biases start at 0.
pub const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_emb: usize,
    pub d_hid: usize,
    pub d_img: usize,
    /// Adds a bias to the image projection, making it affine.
    pub image_bias: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 0,
            d_emb: 300,
            d_hid: 1024,
            d_img: 2048,
            image_bias: true,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("vocab_size", self.vocab_size),
            ("d_emb", self.d_emb),
            ("d_hid", self.d_hid),
            ("d_img", self.d_img),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Gated recurrent unit weights, row-vector convention (`x·W + h·U + b`).
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<T> {
    pub w_z: ParamBlock<T>,
    pub w_r: ParamBlock<T>,
    pub w_h: ParamBlock<T>,
    pub u_z: ParamBlock<T>,
    pub u_r: ParamBlock<T>,
    pub u_h: ParamBlock<T>,
    pub b_z: ParamBlock<T>,
    pub b_r: ParamBlock<T>,
    pub b_h: ParamBlock<T>,
}

impl<T: Scalar> GruParams<T> {
    pub fn d_in(&self) -> usize {
        self.w_z.value.rows()
    }

    pub fn d_hid(&self) -> usize {
        self.w_z.value.cols()
    }

    pub fn blocks(&self) -> [&ParamBlock<T>; 9] {
        [
            &self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r,
            &self.b_h,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut ParamBlock<T>; 9] {
        [
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }

    pub fn zeros(d_in: usize, d_hid: usize) -> Self {
        let m = |name: &str, r, c| ParamBlock::new(format!("text.gru.{name}"), Matrix::zeros(r, c));
        Self {
            w_z: m("w_z", d_in, d_hid),
            w_r: m("w_r", d_in, d_hid),
            w_h: m("w_h", d_in, d_hid),
            u_z: m("u_z", d_hid, d_hid),
            u_r: m("u_r", d_hid, d_hid),
            u_h: m("u_h", d_hid, d_hid),
            b_z: m("b_z", 1, d_hid),
            b_r: m("b_r", 1, d_hid),
            b_h: m("b_h", 1, d_hid),
        }
    }
}

/// Caption encoder parameters: shared word embeddings plus one GRU.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEncoderParams<T> {
    pub embedding: ParamBlock<T>,
    pub gru: GruParams<T>,
}

/// Image encoder parameters: a learned projection of fixed features.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageEncoderParams<T> {
    pub projection: ParamBlock<T>,
    pub bias: Option<ParamBlock<T>>,
}

/// Every trainable parameter. One text encoder serves all languages.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub text: TextEncoderParams<T>,
    pub image: ImageEncoderParams<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn d_hid(&self) -> usize {
        self.config.d_hid
    }

    pub fn vocab_size(&self) -> usize {
        self.text.embedding.value.rows()
    }

    /// Blocks reachable from the caption encoder.
    pub fn text_blocks_mut(&mut self) -> Vec<&mut ParamBlock<T>> {
        let mut v = vec![&mut self.text.embedding];
        v.extend(self.text.gru.blocks_mut());
        v
    }

    /// Blocks reachable from the image encoder.
    pub fn image_blocks_mut(&mut self) -> Vec<&mut ParamBlock<T>> {
        let mut v = vec![&mut self.image.projection];
        if let Some(b) = self.image.bias.as_mut() {
            v.push(b);
        }
        v
    }

    /// Same parameter values in another precision, fresh optimizer state.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let g = &self.text.gru;
        ModelParams {
            config: self.config,
            text: TextEncoderParams {
                embedding: self.text.embedding.cast(),
                gru: GruParams {
                    w_z: g.w_z.cast(),
                    w_r: g.w_r.cast(),
                    w_h: g.w_h.cast(),
                    u_z: g.u_z.cast(),
                    u_r: g.u_r.cast(),
                    u_h: g.u_h.cast(),
                    b_z: g.b_z.cast(),
                    b_r: g.b_r.cast(),
                    b_h: g.b_h.cast(),
                },
            },
            image: ImageEncoderParams {
                projection: self.image.projection.cast(),
                bias: self.image.bias.as_ref().map(ParamBlock::cast),
            },
        }
    }
}

impl<T: Scalar> ParamSet<T> for ModelParams<T> {
    fn blocks(&self) -> Vec<&ParamBlock<T>> {
        let mut v = vec![&self.text.embedding];
        v.extend(self.text.gru.blocks());
        v.push(&self.image.projection);
        if let Some(b) = &self.image.bias {
            v.push(b);
        }
        v
    }

    fn blocks_mut(&mut self) -> Vec<&mut ParamBlock<T>> {
        let mut v = vec![&mut self.text.embedding];
        v.extend(self.text.gru.blocks_mut());
        v.push(&mut self.image.projection);
        if let Some(b) = self.image.bias.as_mut() {
            v.push(b);
        }
        v
    }
}

/// Deterministic initialization: weights U(−0.1, 0.1) drawn block by block
/// in manifest order, biases zero.
pub fn init_params<T: Scalar>(config: &ModelConfig) -> Result<ModelParams<T>> {
    config.validate()?;
    let ModelConfig {
        vocab_size,
        d_emb,
        d_hid,
        d_img,
        image_bias,
        seed,
    } = *config;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |rows: usize, cols: usize| -> Matrix<T> {
        let data = (0..rows * cols)
            .map(|_| T::lit(rng.random_range(-INIT_RANGE..INIT_RANGE)))
            .collect();
        Matrix::from_vec(rows, cols, data).expect("shape by construction")
    };

    let embedding = ParamBlock::new("text.embedding", uniform(vocab_size, d_emb));
    let mut gru = GruParams::zeros(d_emb, d_hid);
    for b in [&mut gru.w_z, &mut gru.w_r, &mut gru.w_h] {
        b.value = uniform(d_emb, d_hid);
    }
    for b in [&mut gru.u_z, &mut gru.u_r, &mut gru.u_h] {
        b.value = uniform(d_hid, d_hid);
    }
    let projection = ParamBlock::new("image.projection", uniform(d_img, d_hid));
    let bias = image_bias.then(|| ParamBlock::new("image.bias", Matrix::zeros(1, d_hid)));

    Ok(ModelParams {
        config: *config,
        text: TextEncoderParams { embedding, gru },
        image: ImageEncoderParams { projection, bias },
    })
}
