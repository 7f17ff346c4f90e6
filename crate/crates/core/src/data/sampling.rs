//! Seeded corpus transformations that realize the alignment conditions
//! (one caption per language, half / overlapping / disjoint image sets).

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::corpus::{Corpus, Split};

/// Keeps exactly one randomly chosen caption per (training image, language)
/// for the selected languages. Other languages and the val/test splits are
/// left untouched.
pub fn sample_one_caption_per_language<S: AsRef<str>>(
    corpus: &Corpus,
    languages: &[S],
    seed: u64,
) -> Result<Corpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = vec![true; corpus.captions().len()];
    let groups: Vec<Vec<Vec<usize>>> = languages
        .iter()
        .map(|l| corpus.captions_by_image(l.as_ref()))
        .collect();
    for img in corpus.image_indices(Split::Train) {
        for (li, lang) in languages.iter().enumerate() {
            let group = &groups[li][img];
            if group.is_empty() {
                return Err(Error::MissingCaption {
                    image: corpus.images()[img].id.clone(),
                    language: lang.as_ref().to_owned(),
                });
            }
            let chosen = group[rng.random_range(0..group.len())];
            for &ci in group {
                keep[ci] = ci == chosen;
            }
        }
    }
    let mut idx = 0;
    corpus.filter_captions(|_, _| {
        idx += 1;
        keep[idx - 1]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfMode {
    /// Half of the training images, first language only.
    HalfMono,
    /// The same half, both languages.
    Overlap,
    /// First language on one half, second language on the other half.
    Disjoint,
}

impl fmt::Display for HalfMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HalfMode::HalfMono => "half-mono",
            HalfMode::Overlap => "overlap",
            HalfMode::Disjoint => "disjoint",
        })
    }
}

impl FromStr for HalfMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "half-mono" => Ok(HalfMode::HalfMono),
            "overlap" => Ok(HalfMode::Overlap),
            "disjoint" => Ok(HalfMode::Disjoint),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

/// Seeded 50/50 partition of the training images; the first half gets the
/// extra image when the count is odd. All three modes draw the same halves
/// for a given seed.
pub fn training_halves(corpus: &Corpus, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut train = corpus.image_indices(Split::Train);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    train.shuffle(&mut rng);
    let first = train.len().div_ceil(2);
    let second = train.split_off(first);
    (train, second)
}

pub fn split_half_overlap_disjoint(
    corpus: &Corpus,
    mode: HalfMode,
    lang_a: &str,
    lang_b: &str,
    seed: u64,
) -> Result<Corpus> {
    if lang_a == lang_b {
        return Err(Error::Config(format!(
            "{mode} needs two distinct languages, got `{lang_a}` twice"
        )));
    }
    for l in [lang_a, lang_b] {
        if !corpus.has_language(l) {
            return Err(Error::Config(format!(
                "{mode}: language `{l}` not in corpus"
            )));
        }
    }
    let (first, second) = training_halves(corpus, seed);
    let first: HashSet<usize> = first.into_iter().collect();
    let second: HashSet<usize> = second.into_iter().collect();
    corpus.filter_captions(|c, img| {
        if img.split != Split::Train {
            return true;
        }
        let lang = c.language.as_str();
        match mode {
            HalfMode::HalfMono => first.contains(&c.image) && lang == lang_a,
            HalfMode::Overlap => first.contains(&c.image) && (lang == lang_a || lang == lang_b),
            HalfMode::Disjoint => {
                (first.contains(&c.image) && lang == lang_a)
                    || (second.contains(&c.image) && lang == lang_b)
            }
        }
    })
}
