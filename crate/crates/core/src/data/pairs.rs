use std::collections::BTreeSet;

use crate::error::{Error, Result};

use super::corpus::{Corpus, Split};

/// Two captions (indices into [`Corpus::captions`]) of the same image in
/// different languages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CaptionPair {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CaptionPairSet {
    pub pairs: Vec<CaptionPair>,
}

impl CaptionPairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Builds the caption-to-caption training set over the training split: for
/// every image and every unordered pair of distinct languages `(m, n)` (in
/// the order given), the full product `C_m × C_n` of that image's captions.
pub fn generate_c2c_pairs<S: AsRef<str>>(
    corpus: &Corpus,
    languages: &[S],
) -> Result<CaptionPairSet> {
    let mut langs: Vec<&str> = Vec::with_capacity(languages.len());
    let mut seen = BTreeSet::new();
    for l in languages {
        if seen.insert(l.as_ref()) {
            langs.push(l.as_ref());
        }
    }
    if langs.len() < 2 {
        return Err(Error::InsufficientLanguages(langs.len()));
    }
    let by_lang: Vec<Vec<Vec<usize>>> = langs.iter().map(|l| corpus.captions_by_image(l)).collect();

    let mut pairs = Vec::new();
    for img in corpus.image_indices(Split::Train) {
        for m in 0..langs.len() {
            for n in m + 1..langs.len() {
                for &a in &by_lang[m][img] {
                    for &b in &by_lang[n][img] {
                        pairs.push(CaptionPair { a, b });
                    }
                }
            }
        }
    }
    Ok(CaptionPairSet { pairs })
}
