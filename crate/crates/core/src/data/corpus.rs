use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "dev" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub id: String,
    pub features: Vec<f32>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Caption {
    /// `<image id>#<language><ordinal>`, assigned by [`Corpus::new`].
    pub id: String,
    /// Index into [`Corpus::images`].
    pub image: usize,
    pub language: String,
    pub tokens: Vec<String>,
}

/// A caption before it has been attached to a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionRecord {
    pub image_id: String,
    pub language: String,
    pub tokens: Vec<String>,
}

impl CaptionRecord {
    pub fn new(
        image_id: impl Into<String>,
        language: impl Into<String>,
        tokens: Vec<String>,
    ) -> Self {
        Self {
            image_id: image_id.into(),
            language: language.into(),
            tokens,
        }
    }

    /// Whitespace tokenization of pre-tokenized, lowercased text.
    pub fn from_text(image_id: impl Into<String>, language: impl Into<String>, text: &str) -> Self {
        Self::new(
            image_id,
            language,
            text.split_whitespace().map(str::to_owned).collect(),
        )
    }
}

/// Images with feature vectors plus captions in any number of languages.
///
/// Invariants enforced at construction: caption image references resolve,
/// every feature vector has the same dimension, token sequences are
/// non-empty, and every image has at least one caption (captionless images
/// are dropped, since their split could not be recorded on disk).
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    images: Vec<Image>,
    captions: Vec<Caption>,
    feature_dim: usize,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(images: Vec<Image>, captions: Vec<CaptionRecord>) -> Result<Self> {
        let feature_dim = images.first().map_or(0, |i| i.features.len());
        let mut index = HashMap::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            if img.features.len() != feature_dim {
                return Err(Error::Config(format!(
                    "image `{}` has {} features, expected {feature_dim}",
                    img.id,
                    img.features.len()
                )));
            }
            if index.insert(img.id.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate image id `{}`", img.id)));
            }
        }

        let mut has_caption = vec![false; images.len()];
        let mut resolved = Vec::with_capacity(captions.len());
        for c in captions {
            let Some(&img) = index.get(&c.image_id) else {
                return Err(Error::Config(format!(
                    "caption references unknown image `{}`",
                    c.image_id
                )));
            };
            if c.tokens.is_empty() {
                return Err(Error::DegenerateCaption(format!(
                    "empty {} caption for image `{}`",
                    c.language, c.image_id
                )));
            }
            if c.language.is_empty() || c.language.contains(char::is_whitespace) {
                return Err(Error::Config(format!(
                    "invalid language code `{}`",
                    c.language
                )));
            }
            has_caption[img] = true;
            resolved.push((img, c.language, c.tokens));
        }

        // drop captionless images and remap references
        let mut remap = vec![usize::MAX; images.len()];
        let mut kept = Vec::with_capacity(images.len());
        for (i, img) in images.into_iter().enumerate() {
            if has_caption[i] {
                remap[i] = kept.len();
                kept.push(img);
            }
        }
        let index: HashMap<String, usize> = kept
            .iter()
            .enumerate()
            .map(|(i, img)| (img.id.clone(), i))
            .collect();

        let mut ordinals: HashMap<(usize, String), usize> = HashMap::new();
        let captions = resolved
            .into_iter()
            .map(|(img, language, tokens)| {
                let image = remap[img];
                let k = ordinals.entry((image, language.clone())).or_insert(0);
                let id = format!("{}#{}{}", kept[image].id, language, k);
                *k += 1;
                Caption {
                    id,
                    image,
                    language,
                    tokens,
                }
            })
            .collect();

        Ok(Self {
            images: kept,
            captions,
            feature_dim,
            index,
        })
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn captions(&self) -> &[Caption] {
        &self.captions
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn image_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.captions.is_empty()
    }

    /// Distinct language codes, sorted.
    pub fn languages(&self) -> Vec<String> {
        self.captions
            .iter()
            .map(|c| c.language.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_owned)
            .collect()
    }

    pub fn has_language(&self, language: &str) -> bool {
        self.captions.iter().any(|c| c.language == language)
    }

    pub fn image_indices(&self, split: Split) -> Vec<usize> {
        (0..self.images.len())
            .filter(|&i| self.images[i].split == split)
            .collect()
    }

    /// Caption indices in `split`, optionally restricted to one language.
    pub fn caption_indices(&self, split: Split, language: Option<&str>) -> Vec<usize> {
        self.captions
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                self.images[c.image].split == split && language.is_none_or(|l| c.language == l)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Caption indices grouped per image, for one language.
    pub fn captions_by_image(&self, language: &str) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.images.len()];
        for (ci, c) in self.captions.iter().enumerate() {
            if c.language == language {
                out[c.image].push(ci);
            }
        }
        out
    }

    pub fn to_records(&self) -> Vec<CaptionRecord> {
        self.captions.iter().map(|c| self.record(c)).collect()
    }

    fn record(&self, c: &Caption) -> CaptionRecord {
        CaptionRecord {
            image_id: self.images[c.image].id.clone(),
            language: c.language.clone(),
            tokens: c.tokens.clone(),
        }
    }

    /// Keeps the captions for which `keep` returns true.
    pub fn filter_captions(&self, mut keep: impl FnMut(&Caption, &Image) -> bool) -> Result<Self> {
        let records = self
            .captions
            .iter()
            .filter(|c| keep(c, &self.images[c.image]))
            .map(|c| self.record(c))
            .collect();
        Corpus::new(self.images.clone(), records)
    }

    pub fn filter_languages<S: AsRef<str>>(&self, languages: &[S]) -> Result<Self> {
        self.filter_captions(|c, _| languages.iter().any(|l| l.as_ref() == c.language))
    }

    /// Union of two corpora over the same images. Shared image ids must carry
    /// identical features and split; captions of `self` come first.
    pub fn merge(&self, other: &Corpus) -> Result<Self> {
        let mut images = self.images.clone();
        for img in &other.images {
            match self.image_index(&img.id) {
                Some(i) => {
                    let mine = &self.images[i];
                    if mine.split != img.split || mine.features != img.features {
                        return Err(Error::Config(format!(
                            "cannot merge corpora: image `{}` differs",
                            img.id
                        )));
                    }
                }
                None => images.push(img.clone()),
            }
        }
        let mut records = self.to_records();
        records.extend(other.to_records());
        Corpus::new(images, records)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn image(id: &str, split: Split, features: Vec<f32>) -> Image {
        Image {
            id: id.to_owned(),
            features,
            split,
        }
    }

    pub fn caption(image: &str, lang: &str, text: &str) -> CaptionRecord {
        CaptionRecord::from_text(image, lang, text)
    }
}
