//! Checkpoint container.
//!
//! `model.manifest` is line-oriented text:
//!
//! ```text
//! polyvse-checkpoint 1
//! vocab_size 193
//! d_emb 32
//! ...
//! vocab_hash 3f1c…
//! block text.embedding 193 32
//! block text.gru.w_z 32 64
//! ...
//! ```
//!
//! `model.bin` holds each block's values as little-endian f32, in manifest
//! order. `vocab.txt` lists the vocabulary, one token per line, in index
//! order.

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{write_atomic, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, ParamSet};

use super::params::{init_params, ModelConfig, ModelParams};

const HEADER: &str = "polyvse-checkpoint 1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointPaths {
    pub manifest: PathBuf,
    pub payload: PathBuf,
    pub vocab: PathBuf,
}

impl CheckpointPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            manifest: dir.join("model.manifest"),
            payload: dir.join("model.bin"),
            vocab: dir.join("vocab.txt"),
        }
    }
}

pub fn save_checkpoint(
    params: &ModelParams<f32>,
    vocab: &Vocabulary,
    paths: &CheckpointPaths,
) -> Result<()> {
    let c = &params.config;
    let mut manifest = format!(
        "{HEADER}\nvocab_size {}\nd_emb {}\nd_hid {}\nd_img {}\nimage_bias {}\nseed {}\nmin_count {}\nvocab_hash {}\n",
        c.vocab_size,
        c.d_emb,
        c.d_hid,
        c.d_img,
        c.image_bias,
        c.seed,
        vocab.min_count(),
        vocab.hash()
    );
    let mut payload = Vec::new();
    for b in params.blocks() {
        let (r, cols) = b.shape();
        manifest.push_str(&format!("block {} {r} {cols}\n", b.name));
        for v in b.value.as_slice() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut vocab_text = String::new();
    for t in vocab.tokens() {
        vocab_text.push_str(t);
        vocab_text.push('\n');
    }
    write_atomic(&paths.payload, &payload)?;
    write_atomic(&paths.vocab, vocab_text.as_bytes())?;
    write_atomic(&paths.manifest, manifest.as_bytes())
}

/// Parsed manifest header, without the parameter payload.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointInfo {
    pub config: ModelConfig,
    pub min_count: usize,
    pub vocab_hash: String,
    pub blocks: Vec<(String, usize, usize)>,
}

pub fn read_manifest(path: &Path) -> Result<CheckpointInfo> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, HEADER)) => {}
        _ => return Err(perr(1, format!("expected `{HEADER}`"))),
    }
    let mut config = ModelConfig::default();
    let mut min_count = None;
    let mut vocab_hash = None;
    let mut blocks = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| perr(lineno, format!("expected an integer, found `{s}`")))
        };
        match fields.as_slice() {
            [] => {}
            ["vocab_size", v] => config.vocab_size = num(v)?,
            ["d_emb", v] => config.d_emb = num(v)?,
            ["d_hid", v] => config.d_hid = num(v)?,
            ["d_img", v] => config.d_img = num(v)?,
            ["seed", v] => config.seed = num(v)? as u64,
            ["min_count", v] => min_count = Some(num(v)?),
            ["image_bias", v] => {
                config.image_bias = v
                    .parse()
                    .map_err(|_| perr(lineno, format!("expected a boolean, found `{v}`")))?
            }
            ["vocab_hash", v] => vocab_hash = Some(v.to_string()),
            ["block", name, r, c] => blocks.push((name.to_string(), num(r)?, num(c)?)),
            _ => return Err(perr(lineno, format!("unrecognized line `{line}`"))),
        }
    }
    Ok(CheckpointInfo {
        config,
        min_count: min_count.ok_or_else(|| perr(0, "missing min_count".into()))?,
        vocab_hash: vocab_hash.ok_or_else(|| perr(0, "missing vocab_hash".into()))?,
        blocks,
    })
}

pub fn load_checkpoint(paths: &CheckpointPaths) -> Result<(ModelParams<f32>, Vocabulary)> {
    let info = read_manifest(&paths.manifest)?;
    let vocab_text = fs::read_to_string(&paths.vocab).map_err(|e| Error::io(&paths.vocab, e))?;
    let vocab = Vocabulary::from_tokens(vocab_text.lines().map(str::to_owned), info.min_count);
    if vocab.hash() != info.vocab_hash {
        return Err(Error::Incompatible(format!(
            "{} does not match the manifest's vocabulary hash",
            paths.vocab.display()
        )));
    }

    let mut params = init_params::<f32>(&info.config)?;
    let payload = fs::read(&paths.payload).map_err(|e| Error::io(&paths.payload, e))?;
    let expected: Vec<(String, usize, usize)> = params
        .blocks()
        .iter()
        .map(|b| (b.name.clone(), b.shape().0, b.shape().1))
        .collect();
    if expected != info.blocks {
        return Err(Error::Parse {
            path: paths.manifest.clone(),
            line: 0,
            message: "block list does not match the configured architecture".into(),
        });
    }
    let total: usize = expected.iter().map(|(_, r, c)| r * c).sum();
    if payload.len() != total * 4 {
        return Err(Error::BinaryParse {
            path: paths.payload.clone(),
            offset: payload.len().min(total * 4),
            message: format!("expected {} bytes, found {}", total * 4, payload.len()),
        });
    }
    let mut offset = 0;
    for b in params.blocks_mut() {
        let (r, c) = b.shape();
        let values = payload[offset..offset + r * c * 4]
            .chunks_exact(4)
            .map(|ch| f32::from_le_bytes(ch.try_into().unwrap()))
            .collect();
        b.value = Matrix::from_vec(r, c, values)?;
        offset += r * c * 4;
    }
    Ok((params, vocab))
}
