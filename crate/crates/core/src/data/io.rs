//! Corpus files.
//!
//! * captions: UTF-8, one record per line, `split\timage_id\tlanguage\ttokens…`
//! * features: `IMGF`, u32 image count, u32 dimension, then count×dim
//!   little-endian f32 values, row-major
//! * index: UTF-8, line `i` is the image id of feature row `i`

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::corpus::{CaptionRecord, Corpus, Image, Split};

pub const FEATURE_MAGIC: &[u8; 4] = b"IMGF";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPaths {
    pub captions: PathBuf,
    pub features: PathBuf,
    pub index: PathBuf,
}

impl CorpusPaths {
    /// Conventional file names inside a corpus directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            captions: dir.join("captions.tsv"),
            features: dir.join("features.imgf"),
            index: dir.join("features.index"),
        }
    }
}

/// Writes via a sibling temporary file and a rename, so readers never see a
/// partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn save_corpus(corpus: &Corpus, paths: &CorpusPaths) -> Result<()> {
    let mut captions = String::new();
    for c in corpus.captions() {
        let img = &corpus.images()[c.image];
        captions.push_str(img.split.as_str());
        captions.push('\t');
        captions.push_str(&img.id);
        captions.push('\t');
        captions.push_str(&c.language);
        captions.push('\t');
        captions.push_str(&c.tokens.join(" "));
        captions.push('\n');
    }

    let n = corpus.images().len();
    let d = corpus.feature_dim();
    let mut features = Vec::with_capacity(12 + 4 * n * d);
    features.extend_from_slice(FEATURE_MAGIC);
    features.extend_from_slice(&(n as u32).to_le_bytes());
    features.extend_from_slice(&(d as u32).to_le_bytes());
    let mut index = String::new();
    for img in corpus.images() {
        for v in &img.features {
            features.extend_from_slice(&v.to_le_bytes());
        }
        index.push_str(&img.id);
        index.push('\n');
    }

    write_atomic(&paths.features, &features)?;
    write_atomic(&paths.index, index.as_bytes())?;
    write_atomic(&paths.captions, captions.as_bytes())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses the caption file alone. Returns `(split, record)` per line.
pub fn read_captions(path: &Path) -> Result<Vec<(Split, CaptionRecord)>> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_owned(),
            line: lineno,
            message,
        };
        let mut fields = line.splitn(4, '\t');
        let (Some(split), Some(image), Some(lang), Some(text)) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(parse_err("expected 4 tab-separated fields".into()));
        };
        let split: Split = split.parse().map_err(parse_err)?;
        if image.is_empty() || lang.is_empty() {
            return Err(parse_err("empty image id or language".into()));
        }
        let rec = CaptionRecord::from_text(image, lang, text);
        if rec.tokens.is_empty() {
            return Err(parse_err("caption has no tokens".into()));
        }
        out.push((split, rec));
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "{} has no captions",
            path.display()
        )));
    }
    Ok(out)
}

/// Parses an `IMGF` file into `(count, dim, values)`.
pub fn read_features(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let err = |offset: usize, message: &str| Error::BinaryParse {
        path: path.to_owned(),
        offset,
        message: message.to_owned(),
    };
    if bytes.len() < 12 {
        return Err(err(bytes.len(), "truncated header"));
    }
    if &bytes[0..4] != FEATURE_MAGIC {
        return Err(err(0, "bad magic, expected IMGF"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|x| x.checked_mul(4))
        .and_then(|x| x.checked_add(12))
        .ok_or_else(|| err(4, "shape overflows"))?;
    if bytes.len() != expected {
        return Err(err(
            bytes.len().min(expected),
            &format!(
                "expected {expected} bytes for {n}×{d} features, found {}",
                bytes.len()
            ),
        ));
    }
    let values = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((n, d, values))
}

pub fn load_corpus(paths: &CorpusPaths) -> Result<Corpus> {
    let captions = read_captions(&paths.captions)?;
    let (n, d, values) = read_features(&paths.features)?;
    let index_text = read_text(&paths.index)?;
    let ids: Vec<&str> = index_text.lines().collect();
    if ids.len() != n {
        return Err(Error::Parse {
            path: paths.index.clone(),
            line: ids.len(),
            message: format!("index lists {} images but feature file has {n}", ids.len()),
        });
    }

    let mut splits: HashMap<&str, Option<Split>> = HashMap::with_capacity(n);
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() || splits.insert(id, None).is_some() {
            return Err(Error::Parse {
                path: paths.index.clone(),
                line: i + 1,
                message: format!("empty or duplicate image id `{id}`"),
            });
        }
    }
    let mut records = Vec::with_capacity(captions.len());
    for (line, (split, rec)) in captions.into_iter().enumerate() {
        let parse_err = |message: String| Error::Parse {
            path: paths.captions.clone(),
            line: line + 1,
            message,
        };
        let slot = splits
            .get_mut(rec.image_id.as_str())
            .ok_or_else(|| parse_err(format!("image `{}` not in feature index", rec.image_id)))?;
        match slot {
            Some(s) if *s != split => {
                return Err(parse_err(format!(
                    "image `{}` listed under both {s} and {split}",
                    rec.image_id
                )))
            }
            _ => *slot = Some(split),
        }
        records.push(rec);
    }

    let images = ids
        .iter()
        .enumerate()
        .filter_map(|(i, id)| {
            splits[id].map(|split| Image {
                id: (*id).to_owned(),
                features: values[i * d..(i + 1) * d].to_vec(),
                split,
            })
        })
        .collect();
    Corpus::new(images, records)
}
