use std::collections::{BTreeSet, HashMap};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{CaptionRecord, Corpus, Image, Split};
use crate::error::Result;
use crate::numerics::Matrix;

use super::config::{Regime, SynthConfig};

// Independent random streams derived from the one seed.
const WORLD_STREAM: u64 = 1;
const LEXICON_STREAM: u64 = 2;
const SUBSET_STREAM: u64 = 3;
const CAPTION_STREAM: u64 = 4;
const PARTITION_STREAM: u64 = 5;

fn stream(seed: u64, kind: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 56) ^ index);
    rng
}

/// FNV-1a, used to give each language code a stable stream index.
fn language_key(language: &str) -> u64 {
    language.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    }) & ((1 << 40) - 1)
}

/// Per-language concept vocabulary: `tokens[c]` are the synonyms of concept
/// `c`, and concepts are spoken in ascending `slot[c]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub language: String,
    pub tokens: Vec<Vec<String>>,
    pub slot: Vec<usize>,
    inverse: HashMap<String, usize>,
}

impl Lexicon {
    fn new(language: &str, config: &SynthConfig) -> Self {
        let mut rng = stream(config.seed, LEXICON_STREAM, language_key(language));
        let tokens: Vec<Vec<String>> = (0..config.d_c)
            .map(|c| {
                (0..config.tokens_per_concept)
                    .map(|s| format!("{language}_{c:02}_{s}"))
                    .collect()
            })
            .collect();
        let mut slot: Vec<usize> = (0..config.d_c).collect();
        slot.shuffle(&mut rng);
        let inverse = tokens
            .iter()
            .enumerate()
            .flat_map(|(c, syn)| syn.iter().map(move |t| (t.clone(), c)))
            .collect();
        Self {
            language: language.to_owned(),
            tokens,
            slot,
            inverse,
        }
    }

    pub fn concept_of(&self, token: &str) -> Option<usize> {
        self.inverse.get(token).copied()
    }

    /// Concepts mentioned by a caption; tokens outside the lexicon are
    /// ignored.
    pub fn concepts_of<S: AsRef<str>>(&self, tokens: &[S]) -> BTreeSet<usize> {
        tokens
            .iter()
            .filter_map(|t| self.concept_of(t.as_ref()))
            .collect()
    }

    fn verbalize(&self, concepts: &[usize], rng: &mut impl Rng) -> Vec<String> {
        let mut ordered = concepts.to_vec();
        ordered.sort_by_key(|&c| self.slot[c]);
        ordered
            .into_iter()
            .map(|c| {
                self.tokens[c]
                    .choose(rng)
                    .expect("tokens_per_concept > 0")
                    .clone()
            })
            .collect()
    }
}

/// The latent structure behind a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldModel {
    /// `d_c × d_img`, orthonormal rows; features are `w · projection + noise`.
    pub projection: Matrix<f64>,
    /// Per image (in corpus order): its `m` concepts, ascending.
    pub concepts: Vec<Vec<usize>>,
    /// Per image: weight of each entry of `concepts`.
    pub weights: Vec<Vec<f64>>,
    pub lexicons: Vec<Lexicon>,
}

impl WorldModel {
    pub fn lexicon(&self, language: &str) -> Option<&Lexicon> {
        self.lexicons.iter().find(|l| l.language == language)
    }
}

/// Gram–Schmidt on Gaussian rows.
fn orthonormal_rows(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rows);
    while out.len() < rows {
        let mut v: Vec<f64> = (0..cols).map(|_| normal.sample(rng)).collect();
        for u in &out {
            let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= d * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            out.push(v);
        }
    }
    Matrix::from_rows(&out).expect("rectangular")
}

pub(crate) fn image_id(i: usize) -> String {
    format!("img{i:05}")
}

pub(crate) fn split_of(i: usize, config: &SynthConfig) -> Split {
    if i < config.n_train {
        Split::Train
    } else if i < config.n_train + config.n_val {
        Split::Val
    } else {
        Split::Test
    }
}

/// Images, the feature projection, and per-image concept ids and weights.
type ImageWorld = (Vec<Image>, Matrix<f64>, Vec<Vec<usize>>, Vec<Vec<f64>>);

/// Depends only on the seed, the image counts and the concept/feature
/// settings, never on the regime or languages, so corpora generated under
/// different regimes with one seed share their images.
fn build_images(config: &SynthConfig) -> ImageWorld {
    let mut rng = stream(config.seed, WORLD_STREAM, 0);
    let projection = orthonormal_rows(config.d_c, config.d_img, &mut rng);
    let noise = Normal::new(0.0, config.sigma.max(0.0)).expect("finite sigma");
    let all: Vec<usize> = (0..config.d_c).collect();
    let mut images = Vec::with_capacity(config.n_images());
    let mut concepts = Vec::with_capacity(config.n_images());
    let mut weights = Vec::with_capacity(config.n_images());
    for i in 0..config.n_images() {
        let mut cs: Vec<usize> = all.choose_multiple(&mut rng, config.m).copied().collect();
        cs.sort_unstable();
        let ws: Vec<f64> = cs.iter().map(|_| rng.random_range(0.5..1.5)).collect();
        let mut x = vec![0.0f64; config.d_img];
        for (&c, &w) in cs.iter().zip(&ws) {
            for (xv, &p) in x.iter_mut().zip(projection.row(c)) {
                *xv += w * p;
            }
        }
        let features = x
            .into_iter()
            .map(|v| {
                (v + if config.sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                }) as f32
            })
            .collect();
        images.push(Image {
            id: image_id(i),
            features,
            split: split_of(i, config),
        });
        concepts.push(cs);
        weights.push(ws);
    }
    (images, projection, concepts, weights)
}

/// Generates the corpus and returns the latent world alongside it.
pub fn generate_with_world(config: &SynthConfig) -> Result<(Corpus, WorldModel)> {
    config.validate()?;
    let (images, projection, concepts, weights) = build_images(config);
    let lexicons: Vec<Lexicon> = config
        .languages
        .iter()
        .map(|l| Lexicon::new(l, config))
        .collect();
    let per_image = config.captions_per_image();
    let mention = config.m.saturating_sub(1).max(1);

    // training-image owner language in the disjoint regime
    let mut owner = vec![None; config.n_images()];
    if config.regime == Regime::Disjoint {
        let mut train: Vec<usize> = (0..config.n_train).collect();
        train.shuffle(&mut stream(config.seed, PARTITION_STREAM, 0));
        let parts = config.languages.len();
        for (rank, &i) in train.iter().enumerate() {
            owner[i] = Some(rank * parts / config.n_train);
        }
    }

    let mut records = Vec::new();
    for (i, cs) in concepts.iter().enumerate() {
        let shared: Vec<usize> = cs
            .choose_multiple(&mut stream(config.seed, SUBSET_STREAM, i as u64), mention)
            .copied()
            .collect();
        for (li, lex) in lexicons.iter().enumerate() {
            if owner[i].is_some_and(|o| o != li) {
                continue;
            }
            let mut rng = stream(
                config.seed,
                CAPTION_STREAM,
                ((i as u64) << 40) | language_key(&lex.language),
            );
            for _ in 0..per_image {
                let mentioned: Vec<usize> = match config.regime {
                    Regime::Translation => shared.clone(),
                    Regime::Comparable | Regime::Disjoint => {
                        cs.choose_multiple(&mut rng, mention).copied().collect()
                    }
                };
                let tokens = lex.verbalize(&mentioned, &mut rng);
                records.push(CaptionRecord::new(
                    image_id(i),
                    lex.language.clone(),
                    tokens,
                ));
            }
        }
    }
    let corpus = Corpus::new(images, records)?;
    Ok((
        corpus,
        WorldModel {
            projection,
            concepts,
            weights,
            lexicons,
        },
    ))
}

/// Seeded synthetic corpus; equal configurations give identical corpora.
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    Ok(generate_with_world(config)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(regime: Regime) -> SynthConfig {
        SynthConfig {
            n_train: 40,
            n_val: 10,
            n_test: 10,
            regime,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let c = small(Regime::Comparable);
        assert_eq!(generate(&c).unwrap(), generate(&c).unwrap());
        let other = SynthConfig { seed: 4, ..c };
        assert_ne!(
            generate(&other).unwrap(),
            generate(&small(Regime::Comparable)).unwrap()
        );
    }

    #[test]
    fn images_do_not_depend_on_regime_or_languages() {
        let a = generate(&small(Regime::Translation)).unwrap();
        let b = generate(&SynthConfig {
            languages: vec!["fr".into(), "cs".into(), "en".into()],
            ..small(Regime::Comparable)
        })
        .unwrap();
        assert_eq!(a.images(), b.images());
        assert!(a.merge(&b).is_ok());
    }

    #[test]
    fn orthonormal_projection() {
        let (_, w) = generate_with_world(&small(Regime::Translation)).unwrap();
        let p = &w.projection;
        for i in 0..p.rows() {
            for j in 0..p.rows() {
                let d: f64 = p.row(i).iter().zip(p.row(j)).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn noiseless_translation_shares_concepts() {
        let cfg = SynthConfig {
            sigma: 0.0,
            ..small(Regime::Translation)
        };
        let (corpus, world) = generate_with_world(&cfg).unwrap();
        for img in 0..corpus.images().len() {
            let sets: Vec<BTreeSet<usize>> = corpus
                .captions()
                .iter()
                .filter(|c| c.image == img)
                .map(|c| world.lexicon(&c.language).unwrap().concepts_of(&c.tokens))
                .collect();
            assert_eq!(sets.len(), 2);
            assert_eq!(sets[0], sets[1]);
            assert_eq!(sets[0].len(), cfg.m - 1);
        }
    }

    #[test]
    fn comparable_captions_differ() {
        let (corpus, world) = generate_with_world(&small(Regime::Comparable)).unwrap();
        let en = world.lexicon("en").unwrap();
        let by_image = corpus.captions_by_image("en");
        let differing = by_image.iter().any(|caps| {
            let sets: BTreeSet<BTreeSet<usize>> = caps
                .iter()
                .map(|&c| en.concepts_of(&corpus.captions()[c].tokens))
                .collect();
            sets.len() > 1
        });
        assert!(differing);
        assert!(by_image.iter().all(|c| c.len() == 5));
    }

    #[test]
    fn disjoint_partitions_training_images() {
        let cfg = SynthConfig {
            n_train: 500,
            n_val: 10,
            n_test: 10,
            ..small(Regime::Disjoint)
        };
        let corpus = generate(&cfg).unwrap();
        let owned = |lang: &str| -> BTreeSet<usize> {
            corpus
                .caption_indices(Split::Train, Some(lang))
                .into_iter()
                .map(|c| corpus.captions()[c].image)
                .collect()
        };
        let (en, de) = (owned("en"), owned("de"));
        assert_eq!((en.len(), de.len()), (250, 250));
        assert!(en.is_disjoint(&de));
        assert_eq!(corpus.caption_indices(Split::Val, Some("de")).len(), 50);
    }

    #[test]
    fn lexicons_are_surface_disjoint() {
        let (_, w) = generate_with_world(&small(Regime::Comparable)).unwrap();
        let en: BTreeSet<&String> = w.lexicons[0].tokens.iter().flatten().collect();
        let de: BTreeSet<&String> = w.lexicons[1].tokens.iter().flatten().collect();
        assert_eq!(en.len(), 48);
        assert!(en.is_disjoint(&de));
    }
}
