//! Acceptance criteria. Prints one `criterion N: PASS|FAIL|SKIP` line per
//! criterion and exits non-zero if any criterion fails. Positional arguments
//! select criteria by number.
//!
//! Criteria 11 and 12 need Multi30K caption files in this crate's caption
//! format: set `POLYVSE_MULTI30K_TRANSLATION` and `POLYVSE_MULTI30K_COMPARABLE`
//! to the respective `captions.tsv` paths.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use polyvse::data::{
    build_vocabulary, generate_c2c_pairs, jaccard_matrix, load_corpus, read_captions, save_corpus,
    vocab_union_stats, CaptionRecord, Corpus, CorpusPaths, Image, Split, Vocabulary, UNK,
};
use polyvse::evaluation::{
    evaluate_model, recall_at_ks, Direction, RetrievalProtocol, RetrievalReport,
};
use polyvse::experiment::{make_pool, run_recipe, ExperimentResult, ExperimentSettings, Recipe};
use polyvse::model::{init_params, ModelConfig, ModelParams};
use polyvse::numerics::{finite_difference_check, GradCheckConfig, Matrix, ParamSet};
use polyvse::objective::{ranking_loss, LossConfig};
use polyvse::synth::{oracle_recall_bound, SynthConfig};
use polyvse::training::{c2c_gradients, c2i_gradients, train, Task, TaskScheduler, TrainConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static FAILED: Mutex<Vec<u32>> = Mutex::new(Vec::new());

fn verdict(id: u32, pass: bool, detail: &str) {
    println!(
        "criterion {id}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    if !pass {
        FAILED.lock().unwrap().push(id);
    }
}

fn langs(ls: &[&str]) -> Vec<String> {
    ls.iter().map(|l| l.to_string()).collect()
}

// ---------------------------------------------------------------- 1

fn random_captions(rng: &mut ChaCha8Rng, n: usize, vocab: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| {
            (0..rng.random_range(2..7))
                .map(|_| rng.random_range(0..vocab))
                .collect()
        })
        .collect()
}

fn criterion_01_full_model_gradient_check() {
    let start = Instant::now();
    let config = ModelConfig {
        vocab_size: 20,
        d_emb: 8,
        d_hid: 12,
        d_img: 16,
        image_bias: true,
        seed: 11,
    };
    let check = GradCheckConfig {
        max_entries_per_block: usize::MAX,
        ..Default::default()
    };
    let loss = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let captions = random_captions(&mut rng, 4, 20);
    let other = random_captions(&mut rng, 4, 20);
    let feats: Vec<f64> = (0..4 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let features = Matrix::from_vec(4, 16, feats).unwrap();

    // weights scaled well above finite-difference roundoff
    let fresh = || {
        let mut p: ModelParams<f64> = init_params(&config).unwrap();
        for b in p.blocks_mut() {
            b.value.as_mut_slice().iter_mut().for_each(|v| *v *= 5.0);
        }
        p
    };
    let mut worst = 0.0f64;
    let mut entries = 0;
    // caption-image task touches every block
    let mut p = fresh();
    c2i_gradients(&mut p, &captions, &features, &loss).unwrap();
    let r = finite_difference_check(
        &mut p,
        |q| c2i_gradients(&mut q.clone(), &captions, &features, &loss).unwrap(),
        &check,
    )
    .unwrap();
    worst = worst.max(r.max_relative_error());
    entries += r.blocks.iter().map(|b| b.entries_checked).sum::<usize>();
    assert_eq!(r.blocks.len(), p.blocks().len());

    // caption-caption task
    let mut p = fresh();
    c2c_gradients(&mut p, &captions, &other, &loss).unwrap();
    let r = finite_difference_check(
        &mut p,
        |q| c2c_gradients(&mut q.clone(), &captions, &other, &loss).unwrap(),
        &check,
    )
    .unwrap();
    worst = worst.max(r.max_relative_error());
    entries += r.blocks.iter().map(|b| b.entries_checked).sum::<usize>();

    let elapsed = start.elapsed();
    verdict(
        1,
        worst < 1e-4 && elapsed < Duration::from_secs(60),
        &format!("max relative error {worst:.2e} over {entries} entries in {elapsed:.1?}"),
    );
}

// ---------------------------------------------------------------- 2

fn random_similarity(rng: &mut ChaCha8Rng, n: usize) -> Matrix<f64> {
    let data = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Matrix::from_vec(n, n, data).unwrap()
}

fn margins_satisfied(s: &Matrix<f64>, margin: f64) -> bool {
    let n = s.rows();
    (0..n).all(|i| {
        (0..n)
            .filter(|&j| j != i)
            .all(|j| s.get(i, i) >= s.get(i, j) + margin && s.get(i, i) >= s.get(j, i) + margin)
    })
}

fn criterion_02_ranking_loss() {
    let max = LossConfig::default();
    let sum = LossConfig::sum_of_hinges();
    let example = Matrix::<f64>::from_rows(&[[0.5, 0.6], [0.0, 0.5]]).unwrap();
    let v = ranking_loss(&example, &max).unwrap().value;
    // the same example in tenths, computed exactly in integers
    let hinge = |x: i64| x.max(0);
    let tenths = hinge(2 - 5 + 6) + hinge(2 - 5) + hinge(2 - 5) + hinge(2 - 5 + 6);
    let mut ok = (v - 0.6).abs() <= 1e-15 && tenths == 6;
    let mut failures = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..1000 {
        let n = rng.random_range(2..=6);
        let mut s = random_similarity(&mut rng, n);
        if trial % 4 == 0 {
            // push toward the zero-loss region
            for i in 0..n {
                s.set(i, i, s.get(i, i) + 2.0);
            }
        }
        let lm = ranking_loss(&s, &max).unwrap().value;
        let ls = ranking_loss(&s, &sum).unwrap().value;
        if (lm == 0.0) != margins_satisfied(&s, max.margin) {
            failures.push(format!("zero-loss condition, trial {trial}"));
        }
        if lm > ls + 1e-12 {
            failures.push(format!("max > sum, trial {trial}"));
        }
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        let delta = rng.random_range(0.0..0.5);
        let mut bumped = s.clone();
        bumped.set(i, j, s.get(i, j) + delta);
        let lb = ranking_loss(&bumped, &max).unwrap().value;
        if i == j && lb > lm + 1e-12 || i != j && lb < lm - 1e-12 {
            failures.push(format!("monotonicity at ({i},{j}), trial {trial}"));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut permuted = Matrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                permuted.set(a, b, s.get(perm[a], perm[b]));
            }
        }
        let lp = ranking_loss(&permuted, &max).unwrap().value;
        if (lp - lm).abs() > 1e-12 {
            failures.push(format!("permutation invariance, trial {trial}"));
        }
    }
    ok &= failures.is_empty();
    verdict(
        2,
        ok,
        &format!(
            "batch-2 example = {v}; 1000 random batches, {} violations {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

// ---------------------------------------------------------------- 3

fn brute_force_recall(scores: &Matrix<f64>, truth: &[Vec<usize>], k: usize) -> f64 {
    let mut hits = 0;
    for (q, t) in truth.iter().enumerate() {
        let mut order: Vec<usize> = (0..scores.cols()).collect();
        order.sort_by(|&a, &b| {
            scores
                .get(q, b)
                .total_cmp(&scores.get(q, a))
                .then(a.cmp(&b))
        });
        if order[..k].iter().any(|c| t.contains(c)) {
            hits += 1;
        }
    }
    100.0 * hits as f64 / truth.len() as f64
}

fn criterion_03_recall_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut unordered = 0;
    for instance in 0..100 {
        let data = (0..50 * 250)
            .map(|_| {
                // coarse values on some instances to exercise ties
                let v: f64 = rng.random_range(0.0..1.0);
                if instance % 3 == 0 {
                    (v * 20.0).floor() / 20.0
                } else {
                    v
                }
            })
            .collect();
        let scores = Matrix::from_vec(50, 250, data).unwrap();
        let truth: Vec<Vec<usize>> = (0..50)
            .map(|_| rand::seq::index::sample(&mut rng, 250, 5).into_vec())
            .collect();
        let got = recall_at_ks(&scores, &truth, &[1, 5, 10]).unwrap();
        for (g, k) in got.iter().zip([1, 5, 10]) {
            if *g != brute_force_recall(&scores, &truth, k) {
                mismatches += 1;
            }
        }
        if !(got[0] <= got[1] && got[1] <= got[2]) {
            unordered += 1;
        }
    }
    verdict(
        3,
        mismatches == 0 && unordered == 0,
        &format!(
            "100 instances: {mismatches} mismatches against brute force, {unordered} non-monotone"
        ),
    );
}

// ---------------------------------------------------------------- 4

fn mini_corpus(rng: &mut ChaCha8Rng) -> (Corpus, Vec<String>) {
    let all = ["en", "de", "fr", "cs"];
    let n_langs = rng.random_range(2..=4);
    let languages: Vec<String> = all[..n_langs].iter().map(|l| l.to_string()).collect();
    let n_images = rng.random_range(1..6);
    let mut images = Vec::new();
    let mut records = Vec::new();
    for i in 0..n_images {
        let id = format!("im{i}");
        let split = if rng.random_bool(0.8) {
            Split::Train
        } else {
            Split::Val
        };
        images.push(Image {
            id: id.clone(),
            features: vec![0.0],
            split,
        });
        for l in &languages {
            for k in 0..rng.random_range(0..4) {
                records.push(CaptionRecord::from_text(
                    id.clone(),
                    l.clone(),
                    &format!("w{k} {l}"),
                ));
            }
        }
    }
    if records.is_empty() {
        records.push(CaptionRecord::from_text("im0", "en", "w"));
    }
    (Corpus::new(images, records).unwrap(), languages)
}

fn criterion_04_c2c_pair_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for _ in 0..100 {
        let (corpus, languages) = mini_corpus(&mut rng);
        let pairs = generate_c2c_pairs(&corpus, &languages).unwrap();
        // formula
        let mut formula = 0;
        let by_lang: Vec<Vec<Vec<usize>>> = languages
            .iter()
            .map(|l| corpus.captions_by_image(l))
            .collect();
        for img in corpus.image_indices(Split::Train) {
            for m in 0..languages.len() {
                for n in m + 1..languages.len() {
                    formula += by_lang[m][img].len() * by_lang[n][img].len();
                }
            }
        }
        // exhaustive enumeration of cross-language caption pairs of one image
        let caps = corpus.captions();
        let mut enumerated = BTreeSet::new();
        for a in 0..caps.len() {
            for b in 0..caps.len() {
                let train = corpus.images()[caps[a].image].split == Split::Train;
                let la = languages.iter().position(|l| *l == caps[a].language);
                let lb = languages.iter().position(|l| *l == caps[b].language);
                if train && caps[a].image == caps[b].image && la < lb && la.is_some() {
                    enumerated.insert((a, b));
                }
            }
        }
        let produced: BTreeSet<(usize, usize)> = pairs.pairs.iter().map(|p| (p.a, p.b)).collect();
        if pairs.len() != formula || produced != enumerated || produced.len() != pairs.len() {
            bad += 1;
        }
    }
    // four languages with one caption each
    let images: Vec<Image> = (0..3)
        .map(|i| Image {
            id: format!("im{i}"),
            features: vec![0.0],
            split: Split::Train,
        })
        .collect();
    let four = langs(&["en", "de", "fr", "cs"]);
    let records: Vec<CaptionRecord> = (0..3)
        .flat_map(|i| {
            four.iter()
                .map(move |l| CaptionRecord::from_text(format!("im{i}"), l.clone(), "x"))
        })
        .collect();
    let corpus = Corpus::new(images, records).unwrap();
    let per_image = generate_c2c_pairs(&corpus, &four).unwrap().len() as f64 / 3.0;
    verdict(
        4,
        bad == 0 && per_image == 6.0,
        &format!("{bad}/100 mini-corpora disagree; 4 languages x 1 caption -> {per_image} pairs per image"),
    );
}

// ---------------------------------------------------------------- 5

fn tiny_corpus() -> Corpus {
    polyvse::synth::generate(&SynthConfig {
        n_train: 40,
        n_val: 10,
        n_test: 10,
        d_img: 16,
        ..Default::default()
    })
    .unwrap()
}

fn criterion_05_scheduler_statistics() {
    let n = 10_000;
    let n_langs = 4;
    let mut s = TaskScheduler::new(17, 0.5, n_langs, true);
    let mut c2i = 0usize;
    let mut per_lang = vec![0usize; n_langs];
    for _ in 0..n {
        if let Task::C2i { language } = s.next_task() {
            c2i += 1;
            per_lang[language] += 1;
        }
    }
    let sigma = (n as f64 * 0.25).sqrt();
    let task_ok = (c2i as f64 - n as f64 / 2.0).abs() <= 5.0 * sigma;
    let p = 1.0 / n_langs as f64;
    let lang_sigma = (c2i as f64 * p * (1.0 - p)).sqrt();
    let lang_ok = per_lang
        .iter()
        .all(|&k| (k as f64 - c2i as f64 * p).abs() <= 5.0 * lang_sigma);

    // identical seeds -> identical training histories, byte for byte
    let corpus = tiny_corpus();
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let languages = langs(&["en", "de"]);
    let pairs = generate_c2c_pairs(&corpus, &languages).unwrap();
    let config = TrainConfig {
        batch_size: 8,
        lr: 1e-3,
        max_iterations: 60,
        eval_every: polyvse::training::EvalCadence::Every(20),
        languages: languages.clone(),
        c2c: true,
        seed: 9,
        ..Default::default()
    };
    let run = || {
        let params = init_params::<f32>(&ModelConfig {
            vocab_size: vocab.len(),
            d_emb: 6,
            d_hid: 8,
            d_img: 16,
            image_bias: true,
            seed: 9,
        })
        .unwrap();
        train(&corpus, &vocab, &pairs, params, &config)
            .unwrap()
            .history
            .to_jsonl()
    };
    let (a, b) = (run(), run());
    let same = a == b && !a.is_empty();
    verdict(
        5,
        task_ok && lang_ok && same,
        &format!(
            "c2i {c2i}/{n} (5 sigma = {:.0}); languages {per_lang:?}; histories identical: {same} ({} bytes)",
            5.0 * sigma,
            a.len()
        ),
    );
}

// ---------------------------------------------------------------- 6

fn corpora_equal_bitwise(a: &Corpus, b: &Corpus) -> bool {
    a.images().len() == b.images().len()
        && a.images().iter().zip(b.images()).all(|(x, y)| {
            x.id == y.id
                && x.split == y.split
                && x.features.len() == y.features.len()
                && x.features
                    .iter()
                    .zip(&y.features)
                    .all(|(p, q)| p.to_bits() == q.to_bits())
        })
        && a.captions() == b.captions()
}

fn criterion_06_data_round_trip_and_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let paths = CorpusPaths::in_dir(dir.path());
    let mut corpus = tiny_corpus();
    // awkward floats survive too
    let mut images = corpus.images().to_vec();
    images[0].features[0] = f32::MIN_POSITIVE / 2.0;
    images[0].features[1] = -0.0;
    images[1].features[0] = f32::MAX;
    corpus = Corpus::new(images, corpus.to_records()).unwrap();
    save_corpus(&corpus, &paths).unwrap();
    let loaded = load_corpus(&paths).unwrap();
    let round_trip = corpora_equal_bitwise(&corpus, &loaded);

    // vocabulary fixture: "dog" is shared by two languages, "cat" appears
    // three times (below threshold), "hund" exactly four times
    let images = vec![Image {
        id: "a".into(),
        features: vec![0.0],
        split: Split::Train,
    }];
    let mut records = Vec::new();
    for _ in 0..4 {
        records.push(CaptionRecord::from_text("a", "en", "dog"));
        records.push(CaptionRecord::from_text("a", "de", "hund dog"));
    }
    for _ in 0..3 {
        records.push(CaptionRecord::from_text("a", "en", "cat"));
    }
    let fixture = Corpus::new(images, records).unwrap();
    let vocab: Vocabulary = build_vocabulary(&fixture, 4).unwrap();
    let stats = vocab_union_stats(&fixture, 4).unwrap();
    let cat = vocab.encode_tokens(&["cat"]).unwrap();
    let vocab_ok = vocab.index_of("dog").is_some()
        && vocab.index_of("hund").is_some()
        && vocab.index_of("cat").is_none()
        && cat == vec![vocab.unk_index()]
        && vocab.index_of(UNK) == Some(vocab.unk_index())
        && vocab.len() == 3
        && stats.total == 3
        && stats.union == 2
        && (stats.reduction - 1.0 / 3.0).abs() < 1e-12;
    verdict(
        6,
        round_trip && vocab_ok,
        &format!("bit-exact round trip: {round_trip}; vocabulary invariants: {vocab_ok} (total {}, union {})", stats.total, stats.union),
    );
}

// ---------------------------------------------------------------- 7-10

struct Trends {
    e1: ExperimentResult,
    e6: ExperimentResult,
    e5: ExperimentResult,
    slowest_arm: Duration,
}

fn timed(recipe: Recipe, arms: &[&str], slowest: &mut Duration) -> ExperimentResult {
    let settings = ExperimentSettings::default();
    let mut last = Instant::now();
    let result = run_recipe(recipe, &settings, arms, &mut |label, seed, report| {
        let t = last.elapsed();
        *slowest = (*slowest).max(t);
        eprintln!(
            "{recipe} {:<14} seed {seed}: recall sum {:.1} ({t:.1?})",
            label.trim(),
            report.recall_sum()
        );
        last = Instant::now();
    })
    .unwrap();
    result
}

fn trends() -> &'static Trends {
    static CELL: OnceLock<Trends> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut slowest = Duration::ZERO;
        let e1 = timed(Recipe::E1, &[], &mut slowest);
        let e6 = timed(Recipe::E6, &[], &mut slowest);
        let e5 = timed(Recipe::E5, &["Multilingual", "+ Comparable"], &mut slowest);
        for r in [&e1, &e6, &e5] {
            println!("{}", r.table());
        }
        Trends {
            e1,
            e6,
            e5,
            slowest_arm: slowest,
        }
    })
}

fn t2i_r10(r: &ExperimentResult, arm: &str) -> f64 {
    r.mean_recall(arm, Direction::TextToImage, 10, &r.languages)
        .unwrap()
}

/// R@10 averaged over both directions and the recipe's languages.
fn r10(r: &ExperimentResult, arm: &str) -> f64 {
    let a = r
        .mean_recall(arm, Direction::TextToImage, 10, &r.languages)
        .unwrap();
    let b = r
        .mean_recall(arm, Direction::ImageToText, 10, &r.languages)
        .unwrap();
    (a + b) / 2.0
}

const ARM_BUDGET: Duration = Duration::from_secs(300);

fn criterion_07_bilingual_trend() {
    let t = trends();
    let (mono, bi, c2c) = (
        t2i_r10(&t.e1, "Monolingual"),
        t2i_r10(&t.e1, "Bilingual"),
        t2i_r10(&t.e1, "+ c2c"),
    );
    verdict(
        7,
        mono < bi && bi <= c2c && bi - mono >= 2.0 && t.slowest_arm <= ARM_BUDGET,
        &format!("E1 T->I R@10 mono {mono:.2} / bi {bi:.2} / +c2c {c2c:.2} (need bi - mono >= 2); slowest arm {:.1?}", t.slowest_arm),
    );
}

fn criterion_08_multilingual_trend() {
    let t = trends();
    let (mono, bi, multi) = (
        r10(&t.e6, "Monolingual"),
        r10(&t.e6, "Bilingual"),
        r10(&t.e6, "Multilingual"),
    );
    verdict(
        8,
        mono <= bi && bi <= multi && multi - mono >= 3.0,
        &format!("E6 R@10 mono {mono:.2} / bi {bi:.2} / multi {multi:.2} (need multi - mono >= 3)"),
    );
}

fn criterion_09_low_resource_transfer() {
    let t = trends();
    let (base, plus) = (r10(&t.e5, "Multilingual"), r10(&t.e5, "+ Comparable"));
    verdict(
        9,
        plus - base >= 2.0,
        &format!("E5 fr/cs R@10 multilingual {base:.2} / + comparable {plus:.2} (need gain >= 2)"),
    );
}

/// Probability that at least one of `correct` items lands in the top `k` of
/// `n` uniformly shuffled candidates.
fn chance(n: usize, correct: usize, k: usize) -> f64 {
    let mut miss = 1.0;
    for i in 0..k {
        miss *= (n - correct - i) as f64 / (n - i) as f64;
    }
    1.0 - miss
}

fn untrained_report(seed: u64) -> (RetrievalReport, Corpus) {
    let settings = ExperimentSettings::default();
    let pool = make_pool(&settings, seed).unwrap();
    let corpus = pool.comparable.clone();
    let vocab = build_vocabulary(&corpus, settings.min_count).unwrap();
    let params = init_params::<f32>(&ModelConfig {
        vocab_size: vocab.len(),
        d_emb: settings.model.d_emb,
        d_hid: settings.model.d_hid,
        d_img: corpus.feature_dim(),
        image_bias: true,
        seed,
    })
    .unwrap();
    let report = evaluate_model(
        &params,
        &vocab,
        &corpus,
        Split::Test,
        &RetrievalProtocol::new(&langs(&["en", "de"])),
    )
    .unwrap();
    (report, corpus)
}

fn criterion_10_floor_and_ceiling() {
    // floor: every untrained score within 5 sigma of chance
    let mut floor_ok = true;
    let mut worst_z = 0.0f64;
    for seed in 0..5 {
        let (report, corpus) = untrained_report(seed);
        let n_images = corpus.image_indices(Split::Test).len();
        for l in ["en", "de"] {
            let n_caps = corpus.caption_indices(Split::Test, Some(l)).len();
            let per_image = n_caps / n_images;
            for k in [1, 5, 10] {
                for (dir, p, queries) in [
                    (Direction::TextToImage, k as f64 / n_images as f64, n_caps),
                    (
                        Direction::ImageToText,
                        chance(n_caps, per_image, k),
                        n_images,
                    ),
                ] {
                    let got = report.mean(l, dir, k).unwrap() / 100.0;
                    let sigma = (p * (1.0 - p) / queries as f64).sqrt();
                    let z = (got - p).abs() / sigma;
                    worst_z = worst_z.max(z);
                    floor_ok &= z <= 5.0;
                }
            }
        }
    }

    // ceiling at synth defaults
    let oracle = oracle_recall_bound(&SynthConfig::default()).unwrap();
    let ceiling = ["en", "de"]
        .iter()
        .map(|l| oracle.mean(l, Direction::TextToImage, 10).unwrap())
        .sum::<f64>()
        / 2.0;
    let t = trends();
    let mut best = (String::new(), 0.0f64);
    for r in [&t.e1, &t.e6, &t.e5] {
        for arm in &r.arms {
            let v = t2i_r10(r, &arm.label);
            if v > best.1 {
                best = (format!("{} {}", r.recipe, arm.label.trim()), v);
            }
        }
    }
    verdict(
        10,
        floor_ok && ceiling >= 90.0 && best.1 >= 0.6 * ceiling,
        &format!(
            "untrained worst |z| {worst_z:.2}; oracle T->I R@10 {ceiling:.1}; best arm {} {:.1} ({:.0}% of ceiling)",
            best.0,
            best.1,
            100.0 * best.1 / ceiling
        ),
    );
}

// ---------------------------------------------------------------- 11-12

fn captions_only(path: &Path) -> Corpus {
    let rows = read_captions(path).unwrap();
    let mut seen = BTreeSet::new();
    let mut images = Vec::new();
    for (split, r) in &rows {
        if seen.insert(r.image_id.clone()) {
            images.push(Image {
                id: r.image_id.clone(),
                features: vec![0.0],
                split: *split,
            });
        }
    }
    Corpus::new(images, rows.into_iter().map(|(_, r)| r).collect()).unwrap()
}

fn gated(var: &str) -> Option<std::path::PathBuf> {
    std::env::var_os(var).map(Into::into)
}

fn criterion_11_multi30k_vocabulary_sizes() {
    let (Some(t), Some(c)) = (
        gated("POLYVSE_MULTI30K_TRANSLATION"),
        gated("POLYVSE_MULTI30K_COMPARABLE"),
    ) else {
        println!(
            "criterion 11: SKIP (set POLYVSE_MULTI30K_TRANSLATION and POLYVSE_MULTI30K_COMPARABLE)"
        );
        return;
    };
    let ts = vocab_union_stats(&captions_only(&t), 4).unwrap();
    let cs = vocab_union_stats(&captions_only(&c), 4).unwrap();
    verdict(
        11,
        (ts.total, ts.union, cs.total, cs.union) == (17_571, 16_553, 18_337, 17_667),
        &format!(
            "translation {} / {}, comparable {} / {}",
            ts.total, ts.union, cs.total, cs.union
        ),
    );
}

fn criterion_12_multi30k_jaccard() {
    let Some(t) = gated("POLYVSE_MULTI30K_TRANSLATION") else {
        println!("criterion 12: SKIP (set POLYVSE_MULTI30K_TRANSLATION)");
        return;
    };
    let corpus = captions_only(&t);
    let vocab = build_vocabulary(&corpus, 4).unwrap();
    let order = langs(&["en", "de", "fr", "cs"]);
    let m = jaccard_matrix(&vocab, &order).unwrap();
    let expected = [
        ((0, 1), 0.04),
        ((0, 2), 0.06),
        ((0, 3), 0.02),
        ((1, 2), 0.03),
        ((1, 3), 0.01),
        ((2, 3), 0.01),
    ];
    let got: Vec<String> = expected
        .iter()
        .map(|&((a, b), _)| format!("{:.2}", m[a][b]))
        .collect();
    let ok = expected
        .iter()
        .zip(&got)
        .all(|(&(_, e), g)| *g == format!("{e:.2}"));
    verdict(
        12,
        ok,
        &format!(
            "en-de, en-fr, en-cs, de-fr, de-cs, fr-cs = {}",
            got.join(", ")
        ),
    );
}

fn main() {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria = [
        (1, criterion_01_full_model_gradient_check as fn()),
        (2, criterion_02_ranking_loss as fn()),
        (3, criterion_03_recall_oracle as fn()),
        (4, criterion_04_c2c_pair_counts as fn()),
        (5, criterion_05_scheduler_statistics as fn()),
        (6, criterion_06_data_round_trip_and_vocabulary as fn()),
        (7, criterion_07_bilingual_trend as fn()),
        (8, criterion_08_multilingual_trend as fn()),
        (9, criterion_09_low_resource_transfer as fn()),
        (10, criterion_10_floor_and_ceiling as fn()),
        (11, criterion_11_multi30k_vocabulary_sizes as fn()),
        (12, criterion_12_multi30k_jaccard as fn()),
    ];
    for (id, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        if std::panic::catch_unwind(run).is_err() {
            verdict(id, false, "(panicked)");
        }
    }
    let failed = FAILED.lock().unwrap();
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
