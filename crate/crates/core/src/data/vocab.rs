use std::collections::{BTreeMap, BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::corpus::{Corpus, Split};

pub const UNK: &str = "<unk>";
pub const DEFAULT_MIN_COUNT: usize = 4;

/// One index space shared by every language.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
    unk_index: usize,
    min_count: usize,
    /// Raw (pre-threshold) training tokens per language.
    language_tokens: BTreeMap<String, BTreeSet<String>>,
}

/// Counts tokens jointly over the training split of all languages, keeps
/// those seen at least `min_count` times (sorted), then appends UNK.
pub fn build_vocabulary(corpus: &Corpus, min_count: usize) -> Result<Vocabulary> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut language_tokens: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut any = false;
    for ci in corpus.caption_indices(Split::Train, None) {
        let c = &corpus.captions()[ci];
        any = true;
        let set = language_tokens.entry(c.language.clone()).or_default();
        for t in &c.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
            set.insert(t.clone());
        }
    }
    if !any {
        return Err(Error::EmptyCorpus("training split has no captions".into()));
    }
    let kept: BTreeSet<&str> = counts
        .into_iter()
        .filter(|&(t, n)| n >= min_count && t != UNK)
        .map(|(t, _)| t)
        .collect();
    let mut vocab = Vocabulary::from_tokens(kept.into_iter().map(str::to_owned), min_count);
    vocab.language_tokens = language_tokens;
    Ok(vocab)
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its index order (UNK is appended if absent).
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>, min_count: usize) -> Self {
        let mut index_to_token: Vec<String> = tokens.into_iter().collect();
        let unk_index = match index_to_token.iter().position(|t| t == UNK) {
            Some(i) => i,
            None => {
                index_to_token.push(UNK.to_owned());
                index_to_token.len() - 1
            }
        };
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            token_to_index,
            index_to_token,
            unk_index,
            min_count,
            language_tokens: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn unk_index(&self) -> usize {
        self.unk_index
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn language_tokens(&self, language: &str) -> Option<&BTreeSet<String>> {
        self.language_tokens.get(language)
    }

    pub fn encode_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<usize>> {
        if tokens.is_empty() {
            return Err(Error::DegenerateCaption("empty token sequence".into()));
        }
        Ok(tokens
            .iter()
            .map(|t| self.index_of(t.as_ref()).unwrap_or(self.unk_index))
            .collect())
    }

    pub fn decode(&self, indices: &[usize]) -> Result<Vec<String>> {
        indices
            .iter()
            .map(|&i| {
                self.token(i).map(str::to_owned).ok_or(Error::Vocabulary {
                    index: i,
                    size: self.len(),
                })
            })
            .collect()
    }

    /// Jaccard coefficient of two languages' raw training token sets.
    pub fn jaccard_overlap(&self, lang_a: &str, lang_b: &str) -> Result<f64> {
        let a = self
            .language_tokens(lang_a)
            .ok_or_else(|| Error::UnknownLanguage(lang_a.to_owned()))?;
        let b = self
            .language_tokens(lang_b)
            .ok_or_else(|| Error::UnknownLanguage(lang_b.to_owned()))?;
        Ok(jaccard(a, b))
    }

    /// Hex SHA-256 over the index order; checkpoints record it so a model is
    /// never evaluated against a misaligned vocabulary.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.index_to_token {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionStats {
    /// Sum of per-language vocabulary sizes.
    pub total: usize,
    /// Size of the union of the per-language vocabularies.
    pub union: usize,
    /// `1 − union / total`.
    pub reduction: f64,
}

/// Per-language thresholded vocabularies (UNK excluded) compared with their
/// union.
pub fn vocab_union_stats(corpus: &Corpus, min_count: usize) -> Result<UnionStats> {
    let mut per_language: BTreeMap<&str, HashMap<&str, usize>> = BTreeMap::new();
    for ci in corpus.caption_indices(Split::Train, None) {
        let c = &corpus.captions()[ci];
        let counts = per_language.entry(c.language.as_str()).or_default();
        for t in &c.tokens {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    if per_language.is_empty() {
        return Err(Error::EmptyCorpus("training split has no captions".into()));
    }
    let mut total = 0;
    let mut union: BTreeSet<&str> = BTreeSet::new();
    for counts in per_language.values() {
        for (&t, &n) in counts {
            if n >= min_count && t != UNK {
                total += 1;
                union.insert(t);
            }
        }
    }
    let reduction = if total == 0 {
        0.0
    } else {
        1.0 - union.len() as f64 / total as f64
    };
    Ok(UnionStats {
        total,
        union: union.len(),
        reduction,
    })
}

/// Jaccard matrix over the given languages, row-major.
pub fn jaccard_matrix<S: AsRef<str>>(vocab: &Vocabulary, languages: &[S]) -> Result<Vec<Vec<f64>>> {
    languages
        .iter()
        .map(|a| {
            languages
                .iter()
                .map(|b| vocab.jaccard_overlap(a.as_ref(), b.as_ref()))
                .collect()
        })
        .collect()
}
