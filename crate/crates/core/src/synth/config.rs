use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How captions in different languages relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Every language verbalizes the same concept subset of an image.
    Translation,
    /// Each caption independently picks which concepts it mentions.
    Comparable,
    /// Training images are split between languages; each image is
    /// described in one language only. Captions are drawn as in
    /// `Comparable`. Validation and test images carry every language.
    Disjoint,
}

impl Regime {
    pub fn default_captions_per_image(self) -> usize {
        match self {
            Regime::Translation => 1,
            Regime::Comparable | Regime::Disjoint => 5,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Translation => "translation",
            Regime::Comparable => "comparable",
            Regime::Disjoint => "disjoint",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translation" => Ok(Regime::Translation),
            "comparable" => Ok(Regime::Comparable),
            "disjoint" => Ok(Regime::Disjoint),
            other => Err(Error::Config(format!(
                "unknown regime `{other}` (expected translation, comparable or disjoint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub languages: Vec<String>,
    /// Number of latent concepts.
    pub d_c: usize,
    /// Concepts present in each image.
    pub m: usize,
    /// Synonyms per concept in each language.
    pub tokens_per_concept: usize,
    pub d_img: usize,
    /// Standard deviation of the Gaussian feature noise.
    pub sigma: f64,
    /// Defaults to 1 for translation, 5 otherwise.
    pub captions_per_image: Option<usize>,
    pub regime: Regime,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_train: 500,
            n_val: 100,
            n_test: 100,
            languages: vec!["en".into(), "de".into()],
            d_c: 16,
            m: 4,
            tokens_per_concept: 3,
            d_img: 64,
            sigma: 0.1,
            captions_per_image: None,
            regime: Regime::Comparable,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn captions_per_image(&self) -> usize {
        self.captions_per_image
            .unwrap_or_else(|| self.regime.default_captions_per_image())
    }

    pub fn n_images(&self) -> usize {
        self.n_train + self.n_val + self.n_test
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_train", self.n_train),
            ("n_val", self.n_val),
            ("n_test", self.n_test),
            ("d_c", self.d_c),
            ("m", self.m),
            ("tokens_per_concept", self.tokens_per_concept),
            ("d_img", self.d_img),
            ("captions_per_image", self.captions_per_image()),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.m > self.d_c {
            return Err(Error::Config(format!(
                "m = {} exceeds d_c = {}",
                self.m, self.d_c
            )));
        }
        if self.d_c > self.d_img {
            return Err(Error::Config(format!(
                "d_c = {} exceeds d_img = {}",
                self.d_c, self.d_img
            )));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::Config(format!(
                "sigma must be non-negative, got {}",
                self.sigma
            )));
        }
        if self.languages.is_empty() {
            return Err(Error::Config("at least one language is required".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &self.languages {
            if l.is_empty() || l.contains(|c: char| c.is_whitespace() || c == '_') {
                return Err(Error::Config(format!("invalid language code `{l}`")));
            }
            if !seen.insert(l) {
                return Err(Error::Config(format!("language `{l}` listed twice")));
            }
        }
        if self.regime == Regime::Disjoint && self.languages.len() < 2 {
            return Err(Error::Config(
                "the disjoint regime needs at least two languages".into(),
            ));
        }
        if self.regime == Regime::Disjoint && self.n_train < self.languages.len() {
            return Err(Error::Config(format!(
                "cannot split {} training images between {} languages",
                self.n_train,
                self.languages.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SynthConfig::default();
        c.validate().unwrap();
        assert_eq!(c.captions_per_image(), 5);
        let t = SynthConfig {
            regime: Regime::Translation,
            ..c
        };
        assert_eq!(t.captions_per_image(), 1);
    }

    #[test]
    fn invalid_combinations() {
        let bad = [
            SynthConfig {
                regime: Regime::Disjoint,
                languages: vec!["en".into()],
                ..Default::default()
            },
            SynthConfig {
                m: 17,
                ..Default::default()
            },
            SynthConfig {
                languages: vec!["en".into(), "en".into()],
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(Error::Config(_))), "{c:?}");
        }
        assert!("mixed".parse::<Regime>().is_err());
    }
}
