//! Command-line front end. [`run`] parses arguments, dispatches, and maps
//! errors to exit codes: 0 success, 2 usage or configuration, 3 runtime.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{parse_toml, ConfigFile, ExperimentFile, TrainFile};

use crate::data::{
    build_vocabulary, generate_c2c_pairs, jaccard_matrix, load_corpus, save_corpus,
    vocab_union_stats, write_atomic, CorpusPaths, Split,
};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_model, Direction, RetrievalProtocol};
use crate::experiment::{run_recipe, DataSource, Recipe};
use crate::model::{
    init_params, load_checkpoint, save_checkpoint, CheckpointPaths, ModelConfig, ModelParams,
};
use crate::synth::{generate, Regime, SynthConfig};
use crate::training::{train_with, EvalRecord, StepRecord, TrainObserver};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Default output directory when `--out` is not given.
pub const OUT_ENV: &str = "POLYVSE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "polyvse",
    version,
    about = "Multilingual image-caption embeddings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Train a model from a TOML configuration file.
    Train(TrainArgs),
    /// Score a checkpoint on a corpus split.
    Eval(EvalArgs),
    /// Run a named comparison across seeds.
    Experiment(ExperimentArgs),
    /// Vocabulary sizes and cross-language overlap.
    VocabStats(VocabStatsArgs),
    /// Dump the caption-caption pair set with counts.
    Pairs(PairsArgs),
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output directory [env: POLYVSE_OUT]
    #[arg(long, env = OUT_ENV, hide_env = true)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value = "comparable")]
    regime: Regime,
    #[arg(long, value_delimiter = ',', default_value = "en,de")]
    langs: Vec<String>,
    #[arg(long, default_value_t = 500)]
    n_train: usize,
    #[arg(long, default_value_t = 100)]
    n_val: usize,
    #[arg(long, default_value_t = 100)]
    n_test: usize,
    #[arg(long, default_value_t = 16)]
    d_c: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    tokens_per_concept: usize,
    #[arg(long, default_value_t = 64)]
    d_img: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Defaults to 1 for translation, 5 otherwise.
    #[arg(long)]
    captions_per_image: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// TOML file with `corpus`, `min_count`, `[model]` and `[train]`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p_c2i: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory holding model.manifest, model.bin and vocab.txt.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Corpus directory.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Defaults to every language with captions in the split.
    #[arg(long, value_delimiter = ',')]
    langs: Vec<String>,
    /// both, i2t or t2i
    #[arg(long, default_value = "both")]
    direction: String,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    ks: Vec<usize>,
    /// Also write report.txt and report.jsonl here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    recipe: String,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// TOML file overriding `min_count`, `[synth]`, `[model]` and `[train]`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comparable-portion corpus directory (replaces synthetic data).
    #[arg(long, requires = "translation_corpus")]
    corpus: Option<PathBuf>,
    /// Translation-portion corpus directory.
    #[arg(long, requires = "corpus")]
    translation_corpus: Option<PathBuf>,
    /// Run only these arms (comma separated labels).
    #[arg(long, value_delimiter = ',')]
    arms: Vec<String>,
    /// Also write RECIPE.txt and RECIPE.jsonl here.
    #[arg(long, env = OUT_ENV, hide_env = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VocabStatsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = crate::data::DEFAULT_MIN_COUNT)]
    min_count: usize,
    /// Defaults to every language in the corpus.
    #[arg(long, value_delimiter = ',')]
    langs: Vec<String>,
}

#[derive(Debug, Args)]
struct PairsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_delimiter = ',')]
    langs: Vec<String>,
    /// Write one `image<TAB>caption<TAB>caption` line per pair to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::VocabStats(a) => cmd_vocab_stats(a),
        Command::Pairs(a) => cmd_pairs(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        n_train: a.n_train,
        n_val: a.n_val,
        n_test: a.n_test,
        languages: a.langs,
        d_c: a.d_c,
        m: a.m,
        tokens_per_concept: a.tokens_per_concept,
        d_img: a.d_img,
        sigma: a.sigma,
        captions_per_image: a.captions_per_image,
        regime: a.regime,
        seed: a.seed,
    };
    let corpus = generate(&config)?;
    create_dir(&a.out.out)?;
    save_corpus(&corpus, &CorpusPaths::in_dir(&a.out.out))?;
    println!(
        "wrote {} images, {} captions ({}) to {}",
        corpus.images().len(),
        corpus.captions().len(),
        corpus.languages().join(","),
        a.out.out.display()
    );
    Ok(())
}

struct CheckpointWriter<'a> {
    paths: CheckpointPaths,
    vocab: &'a crate::data::Vocabulary,
}

impl TrainObserver for CheckpointWriter<'_> {
    fn on_step(&mut self, _step: &StepRecord) -> Result<()> {
        Ok(())
    }

    fn on_eval(
        &mut self,
        record: &EvalRecord,
        params: &ModelParams<f32>,
        is_best: bool,
    ) -> Result<()> {
        eprintln!(
            "iteration {:>6}  recall sum {:7.1}{}",
            record.iteration,
            record.recall_sum,
            if is_best { "  *" } else { "" }
        );
        if is_best {
            save_checkpoint(params, self.vocab, &self.paths)?;
        }
        Ok(())
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut file: TrainFile = parse_toml(&a.config)?;
    if let Some(seed) = a.seed {
        file.train.seed = seed;
    }
    if let Some(p) = a.p_c2i {
        file.train.p_c2i = p;
    }
    if let Some(n) = a.max_iterations {
        file.train.max_iterations = n;
    }
    file.train.validate()?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let corpus_dir = base.join(&file.corpus);
    let corpus = load_corpus(&CorpusPaths::in_dir(&corpus_dir))?;
    let vocab = build_vocabulary(&corpus, file.min_count)?;
    let params = init_params::<f32>(&ModelConfig {
        vocab_size: vocab.len(),
        d_emb: file.model.d_emb,
        d_hid: file.model.d_hid,
        d_img: corpus.feature_dim(),
        image_bias: file.model.image_bias,
        seed: file.train.seed,
    })?;
    let pairs = if file.train.c2c {
        generate_c2c_pairs(&corpus, &file.train.languages)?
    } else {
        Default::default()
    };

    create_dir(&a.out.out)?;
    let resolved = toml::to_string(&TrainFile {
        corpus: corpus_dir.clone(),
        ..file.clone()
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&a.out.out.join("config.toml"), resolved.as_bytes())?;

    let mut writer = CheckpointWriter {
        paths: CheckpointPaths::in_dir(&a.out.out),
        vocab: &vocab,
    };
    let outcome = train_with(&corpus, &vocab, &pairs, params, &file.train, &mut writer)?;
    let history = &outcome.history;
    write_atomic(
        &a.out.out.join("history.jsonl"),
        history.to_jsonl().as_bytes(),
    )?;
    let best = history
        .best_eval()
        .expect("training evaluates at least once");
    println!(
        "stopped after {} iterations ({:?}); best recall sum {:.1} at iteration {}; {} c2i / {} c2c steps",
        history.steps.len(),
        history.stop_reason,
        best.recall_sum,
        best.iteration,
        history.c2i_steps(),
        history.c2c_steps()
    );
    Ok(())
}

fn parse_directions(s: &str) -> Result<Vec<Direction>> {
    match s {
        "both" => Ok(Direction::BOTH.to_vec()),
        other => other.parse::<Direction>().map(|d| vec![d]).map_err(|_| {
            Error::Config(format!(
                "unknown direction `{other}` (expected both, i2t or t2i)"
            ))
        }),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let directions = parse_directions(&a.direction)?;
    let paths = CheckpointPaths::in_dir(&a.checkpoint);
    for f in [&paths.manifest, &paths.payload, &paths.vocab] {
        if !f.is_file() {
            return Err(Error::Config(format!(
                "checkpoint file {} not found",
                f.display()
            )));
        }
    }
    let (params, vocab) = load_checkpoint(&paths)?;
    let corpus = load_corpus(&CorpusPaths::in_dir(&a.corpus))?;
    let rebuilt = build_vocabulary(&corpus, vocab.min_count())?;
    if rebuilt.hash() != vocab.hash() {
        return Err(Error::Incompatible(format!(
            "vocabulary of {} (hash {}) does not match the checkpoint's (hash {})",
            a.corpus.display(),
            rebuilt.hash(),
            vocab.hash()
        )));
    }
    let languages = if a.langs.is_empty() {
        let mut ls: Vec<String> = corpus
            .languages()
            .into_iter()
            .filter(|l| !corpus.caption_indices(a.split, Some(l)).is_empty())
            .collect();
        ls.sort();
        ls
    } else {
        a.langs
    };
    let protocol = RetrievalProtocol {
        languages,
        directions,
        ks: a.ks,
    };
    let report = evaluate_model(&params, &vocab, &corpus, a.split, &protocol)?;
    let table = report.table();
    print!("{table}");
    println!("recall sum {:.1}", report.recall_sum());
    if let Some(out) = a.out {
        create_dir(&out)?;
        write_atomic(&out.join("report.txt"), table.as_bytes())?;
        write_atomic(&out.join("report.jsonl"), report.to_jsonl().as_bytes())?;
    }
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let recipe: Recipe = a.recipe.parse()?;
    let mut settings = match &a.config {
        Some(path) => parse_toml::<ExperimentFile>(path)?.into_settings(),
        None => Default::default(),
    };
    settings.seeds = a.seeds;
    if let (Some(c), Some(t)) = (&a.corpus, &a.translation_corpus) {
        settings.source = DataSource::Files {
            comparable: CorpusPaths::in_dir(c),
            translation: CorpusPaths::in_dir(t),
        };
    }
    let only: Vec<&str> = a.arms.iter().map(String::as_str).collect();
    let result = run_recipe(recipe, &settings, &only, &mut |label, seed, report| {
        eprintln!(
            "{recipe} {:<18} seed {seed}: recall sum {:.1}",
            label.trim(),
            report.recall_sum()
        );
    })?;
    let table = result.table();
    print!("{table}");
    if let Some(out) = a.out {
        create_dir(&out)?;
        write_atomic(&out.join(format!("{recipe}.txt")), table.as_bytes())?;
        write_atomic(
            &out.join(format!("{recipe}.jsonl")),
            result.to_jsonl().as_bytes(),
        )?;
    }
    Ok(())
}

fn cmd_vocab_stats(a: VocabStatsArgs) -> Result<()> {
    let corpus = load_corpus(&CorpusPaths::in_dir(&a.corpus))?;
    let stats = vocab_union_stats(&corpus, a.min_count)?;
    let vocab = build_vocabulary(&corpus, a.min_count)?;
    let langs = if a.langs.is_empty() {
        corpus.languages()
    } else {
        a.langs
    };
    let mut out = String::new();
    let _ = writeln!(out, "min_count {}", a.min_count);
    for l in &langs {
        let n = vocab.language_tokens(l).map_or(0, |t| t.len());
        let _ = writeln!(out, "{l:<6} {n:>8} tokens");
    }
    let _ = writeln!(out, "total  {:>8}", stats.total);
    let _ = writeln!(
        out,
        "union  {:>8}  (reduction {:.1}%)",
        stats.union,
        stats.reduction * 100.0
    );
    let m = jaccard_matrix(&vocab, &langs)?;
    let _ = writeln!(out, "\njaccard");
    let _ = write!(out, "{:6}", "");
    for l in &langs {
        let _ = write!(out, " {l:>6}");
    }
    out.push('\n');
    for (l, row) in langs.iter().zip(&m) {
        let _ = write!(out, "{l:6}");
        for v in row {
            let _ = write!(out, " {v:>6.2}");
        }
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn cmd_pairs(a: PairsArgs) -> Result<()> {
    let corpus = load_corpus(&CorpusPaths::in_dir(&a.corpus))?;
    let langs = if a.langs.is_empty() {
        corpus.languages()
    } else {
        a.langs
    };
    let pairs = generate_c2c_pairs(&corpus, &langs)?;
    let caps = corpus.captions();
    let mut counts: std::collections::BTreeMap<(String, String), usize> = Default::default();
    let mut dump = String::new();
    for p in &pairs.pairs {
        let (ca, cb) = (&caps[p.a], &caps[p.b]);
        *counts
            .entry((ca.language.clone(), cb.language.clone()))
            .or_default() += 1;
        if a.out.is_some() {
            let _ = writeln!(
                dump,
                "{}\t{}\t{}",
                corpus.images()[ca.image].id,
                ca.id,
                cb.id
            );
        }
    }
    for ((la, lb), n) in &counts {
        println!("{la}-{lb}\t{n}");
    }
    println!("total\t{}", pairs.len());
    if let Some(out) = a.out {
        write_atomic(&out, dump.as_bytes())?;
    }
    Ok(())
}
