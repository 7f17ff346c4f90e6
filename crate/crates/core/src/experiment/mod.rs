//! Named comparisons between training conditions, run across seeds.

mod recipes;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use recipes::{Arm, Recipe, TrainData};

use crate::data::{
    build_vocabulary, generate_c2c_pairs, load_corpus, sample_one_caption_per_language,
    split_half_overlap_disjoint, CaptionPairSet, Corpus, CorpusPaths, Split, DEFAULT_MIN_COUNT,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    aggregate_seeds, comparison_table, evaluate_model, Direction, RetrievalProtocol,
    RetrievalReport,
};
use crate::model::{init_params, ModelConfig};
use crate::synth::{generate, Regime, SynthConfig};
use crate::training::{train, EvalCadence, TrainConfig};

const COMPARABLE_LANGUAGES: [&str; 2] = ["en", "de"];
const TRANSLATION_LANGUAGES: [&str; 4] = ["en", "de", "fr", "cs"];

/// Where the corpora come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Generated per seed from this base configuration (regime and
    /// languages are set per portion).
    Synthetic(SynthConfig),
    /// Fixed corpora on disk; seeds only vary sampling and initialization.
    Files {
        comparable: CorpusPaths,
        translation: CorpusPaths,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub d_emb: usize,
    pub d_hid: usize,
    pub image_bias: bool,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            d_emb: 300,
            d_hid: 1024,
            image_bias: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub source: DataSource,
    pub model: ModelSettings,
    /// Base training configuration; languages, c2c and seed are set per arm.
    pub train: TrainConfig,
    pub min_count: usize,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic(SynthConfig::default()),
            model: ModelSettings {
                d_emb: 32,
                d_hid: 64,
                image_bias: true,
            },
            train: TrainConfig {
                batch_size: 100,
                lr: 2e-3,
                patience: 5,
                eval_every: EvalCadence::Every(25),
                max_iterations: 1500,
                ..TrainConfig::default()
            },
            min_count: DEFAULT_MIN_COUNT,
            seeds: (0..5).collect(),
        }
    }
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.model.d_emb == 0 || self.model.d_hid == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        if let DataSource::Synthetic(s) = &self.source {
            s.validate()?;
        }
        self.train.validate()
    }

    /// One line per setting, for table headers.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        match &self.source {
            DataSource::Synthetic(s) => {
                let _ = writeln!(
                    out,
                    "data: synthetic n_train={} n_val={} n_test={} d_c={} m={} tokens_per_concept={} d_img={} sigma={}",
                    s.n_train, s.n_val, s.n_test, s.d_c, s.m, s.tokens_per_concept, s.d_img, s.sigma
                );
            }
            DataSource::Files {
                comparable,
                translation,
            } => {
                let _ = writeln!(
                    out,
                    "data: comparable={} translation={}",
                    comparable.captions.display(),
                    translation.captions.display()
                );
            }
        }
        let t = &self.train;
        let _ = writeln!(
            out,
            "model: d_emb={} d_hid={} image_bias={} min_count={}",
            self.model.d_emb, self.model.d_hid, self.model.image_bias, self.min_count
        );
        let _ = writeln!(
            out,
            "train: p_c2i={} batch_size={} lr={} margin={} loss={:?} patience={} eval_every={:?} max_iterations={}",
            t.p_c2i, t.batch_size, t.lr, t.loss.margin, t.loss.variant, t.patience, t.eval_every, t.max_iterations
        );
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "seeds: {}", seeds.join(","));
        out
    }
}

/// The corpora a recipe draws from for one seed. The comparable and
/// translation portions describe the same images.
#[derive(Debug, Clone)]
pub struct Pool {
    pub comparable: Corpus,
    pub comparable_one: Corpus,
    pub translation: Corpus,
    /// Val/test captions used for model selection and scoring by every arm.
    reference: Corpus,
    seed: u64,
}

impl Pool {
    pub fn synthetic(base: &SynthConfig, seed: u64) -> Result<Self> {
        let comparable = generate(&SynthConfig {
            regime: Regime::Comparable,
            languages: COMPARABLE_LANGUAGES.iter().map(|l| l.to_string()).collect(),
            captions_per_image: None,
            seed,
            ..base.clone()
        })?;
        let translation = generate(&SynthConfig {
            regime: Regime::Translation,
            languages: TRANSLATION_LANGUAGES
                .iter()
                .map(|l| l.to_string())
                .collect(),
            captions_per_image: None,
            seed,
            ..base.clone()
        })?;
        Self::from_corpora(comparable, translation, seed)
    }

    pub fn from_files(
        comparable: &CorpusPaths,
        translation: &CorpusPaths,
        seed: u64,
    ) -> Result<Self> {
        Self::from_corpora(load_corpus(comparable)?, load_corpus(translation)?, seed)
    }

    /// Evaluation captions come from the comparable portion for the
    /// languages it has and from the translation portion otherwise.
    pub fn from_corpora(comparable: Corpus, translation: Corpus, seed: u64) -> Result<Self> {
        let comp_langs = comparable.languages();
        let comparable_one = sample_one_caption_per_language(&comparable, &comp_langs, seed)?;
        let held_out_comp = comparable.filter_captions(|_, img| img.split != Split::Train)?;
        let held_out_trans = translation.filter_captions(|c, img| {
            img.split != Split::Train && !comp_langs.contains(&c.language)
        })?;
        let reference = if held_out_trans.captions().is_empty() {
            held_out_comp
        } else {
            held_out_comp.merge(&held_out_trans)?
        };
        Ok(Self {
            comparable,
            comparable_one,
            translation,
            reference,
            seed,
        })
    }

    fn training_captions(&self, data: &TrainData, languages: &[String]) -> Result<Corpus> {
        let restrict = |c: &Corpus, langs: &[String]| {
            c.filter_captions(|cap, img| img.split == Split::Train && langs.contains(&cap.language))
        };
        match data {
            TrainData::Comparable => restrict(&self.comparable, languages),
            TrainData::ComparableOne => restrict(&self.comparable_one, languages),
            TrainData::Translation(only) => {
                let langs: Vec<String> = match only {
                    Some(only) => languages
                        .iter()
                        .filter(|l| only.contains(l))
                        .cloned()
                        .collect(),
                    None => languages.to_vec(),
                };
                restrict(&self.translation, &langs)
            }
            TrainData::Half(mode) => {
                let comp = self.comparable.languages();
                let (a, b) = match (languages, comp.as_slice()) {
                    ([a], [x, y]) if a == x => (a.clone(), y.clone()),
                    ([a], [x, y]) if a == y => (a.clone(), x.clone()),
                    ([a, b], _) => (a.clone(), b.clone()),
                    _ => {
                        return Err(Error::Config(format!(
                            "{mode} needs one or two of the comparable languages, got {languages:?}"
                        )))
                    }
                };
                let split =
                    split_half_overlap_disjoint(&self.comparable, *mode, &a, &b, self.seed)?;
                restrict(&split, languages)
            }
            TrainData::Union(parts) => {
                let mut acc: Option<Corpus> = None;
                for part in parts {
                    let c = self.training_captions(part, languages)?;
                    if c.captions().is_empty() {
                        continue;
                    }
                    acc = Some(match acc {
                        Some(prev) => prev.merge(&c)?,
                        None => c,
                    });
                }
                acc.ok_or_else(|| {
                    Error::EmptyCorpus(format!("no training captions for {languages:?}"))
                })
            }
        }
    }

    /// Training captions for the arm plus the shared val/test captions.
    pub fn arm_corpus(&self, data: &TrainData, languages: &[String]) -> Result<Corpus> {
        let train = self.training_captions(data, languages)?;
        if train.captions().is_empty() {
            return Err(Error::EmptyCorpus(format!(
                "no training captions for {languages:?}"
            )));
        }
        train.merge(&self.reference)
    }
}

/// Trains one model on `languages` and scores it on the test split of
/// `eval_languages`.
pub fn run_condition(
    pool: &Pool,
    data: &TrainData,
    languages: &[String],
    c2c: bool,
    eval_languages: &[String],
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<RetrievalReport> {
    let corpus = pool.arm_corpus(data, languages)?;
    let vocab = build_vocabulary(&corpus, settings.min_count)?;
    let params = init_params::<f32>(&ModelConfig {
        vocab_size: vocab.len(),
        d_emb: settings.model.d_emb,
        d_hid: settings.model.d_hid,
        d_img: corpus.feature_dim(),
        image_bias: settings.model.image_bias,
        seed,
    })?;
    let pairs = if c2c {
        generate_c2c_pairs(&corpus, languages)?
    } else {
        CaptionPairSet::default()
    };
    let config = TrainConfig {
        languages: languages.to_vec(),
        c2c,
        seed,
        ..settings.train.clone()
    };
    let outcome = train(&corpus, &vocab, &pairs, params, &config)?;
    evaluate_model(
        &outcome.best,
        &vocab,
        &corpus,
        Split::Test,
        &RetrievalProtocol::new(eval_languages),
    )
}

/// Runs an arm for one seed. Per-language arms train one model per
/// evaluation language and concatenate the reports.
pub fn run_arm(
    pool: &Pool,
    arm: &Arm,
    eval_languages: &[String],
    settings: &ExperimentSettings,
    seed: u64,
) -> Result<RetrievalReport> {
    if arm.per_language {
        let mut entries = Vec::new();
        for lang in eval_languages {
            let one = std::slice::from_ref(lang);
            let r = run_condition(pool, &arm.data, one, false, one, settings, seed)?;
            entries.extend(r.entries);
        }
        Ok(RetrievalReport { entries })
    } else {
        run_condition(
            pool,
            &arm.data,
            &arm.languages,
            arm.c2c,
            eval_languages,
            settings,
            seed,
        )
    }
}

pub fn make_pool(settings: &ExperimentSettings, seed: u64) -> Result<Pool> {
    match &settings.source {
        DataSource::Synthetic(base) => Pool::synthetic(base, seed),
        DataSource::Files {
            comparable,
            translation,
        } => Pool::from_files(comparable, translation, seed),
    }
}

#[derive(Debug, Clone)]
pub struct ArmResult {
    pub label: String,
    /// Mean and standard deviation over seeds.
    pub report: RetrievalReport,
    pub per_seed: Vec<RetrievalReport>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub recipe: Recipe,
    pub languages: Vec<String>,
    pub arms: Vec<ArmResult>,
    pub header: String,
}

impl ExperimentResult {
    pub fn arm(&self, label: &str) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.label.trim() == label.trim())
    }

    /// Seed-averaged recall averaged over the given languages.
    pub fn mean_recall(
        &self,
        label: &str,
        direction: Direction,
        k: usize,
        languages: &[String],
    ) -> Option<f64> {
        let arm = self.arm(label)?;
        let mut total = 0.0;
        for l in languages {
            total += arm.report.mean(l, direction, k)?;
        }
        Some(total / languages.len() as f64)
    }

    /// Header lines with the resolved configuration, then one block per
    /// evaluation language with a row per arm.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}: {}", self.recipe, self.recipe.description());
        for line in self.header.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# baseline: {}", self.recipe.baseline());
        for lang in &self.languages {
            let _ = writeln!(out, "\n[{lang}]");
            let rows: Vec<(&str, &RetrievalReport, &str)> = self
                .arms
                .iter()
                .map(|a| (a.label.as_str(), &a.report, lang.as_str()))
                .collect();
            out.push_str(&comparison_table(&rows));
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            recipe: Recipe,
            arm: &'a str,
            language: &'a str,
            direction: Direction,
            k: usize,
            mean: f64,
            std: f64,
            seeds: usize,
        }
        let mut out = String::new();
        for arm in &self.arms {
            for e in &arm.report.entries {
                let row = Row {
                    recipe: self.recipe,
                    arm: arm.label.trim(),
                    language: &e.language,
                    direction: e.direction,
                    k: e.k,
                    mean: e.mean,
                    std: e.std,
                    seeds: e.seeds,
                };
                out.push_str(&serde_json::to_string(&row).expect("plain struct serializes"));
                out.push('\n');
            }
        }
        out
    }
}

/// Runs the selected arms (all when `only` is empty) of a recipe across the
/// configured seeds. `progress` is called after every finished arm and seed.
pub fn run_recipe(
    recipe: Recipe,
    settings: &ExperimentSettings,
    only: &[&str],
    progress: &mut dyn FnMut(&str, u64, &RetrievalReport),
) -> Result<ExperimentResult> {
    settings.validate()?;
    let languages = recipe.eval_languages();
    let arms: Vec<Arm> = recipe
        .arms()
        .into_iter()
        .filter(|a| only.is_empty() || only.iter().any(|o| o.trim() == a.label.trim()))
        .collect();
    if arms.is_empty() {
        return Err(Error::Config(format!("no arms of {recipe} match {only:?}")));
    }
    let mut per_seed: Vec<Vec<RetrievalReport>> = vec![Vec::new(); arms.len()];
    for &seed in &settings.seeds {
        let pool = make_pool(settings, seed)?;
        for (i, arm) in arms.iter().enumerate() {
            let report = run_arm(&pool, arm, &languages, settings, seed)?;
            progress(&arm.label, seed, &report);
            per_seed[i].push(report);
        }
    }
    let arms = arms
        .into_iter()
        .zip(per_seed)
        .map(|(arm, reports)| {
            Ok(ArmResult {
                label: arm.label,
                report: aggregate_seeds(&reports)?,
                per_seed: reports,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        recipe,
        languages,
        arms,
        header: settings.describe(),
    })
}
