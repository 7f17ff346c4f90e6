use std::collections::BTreeSet;

use crate::data::Split;
use crate::error::Result;
use crate::evaluation::{recall_at_ks, Direction, ReportEntry, RetrievalProtocol, RetrievalReport};
use crate::numerics::Matrix;

use super::config::SynthConfig;
use super::world::generate_with_world;

/// Retrieval scores of a model that knows the generator: each test image's
/// concepts are decoded from its features through the true projection, each
/// caption's concepts are read off the lexicon, and a caption–image pair
/// scores the number of shared concepts (decoded activation breaks ties).
pub fn oracle_recall_bound(config: &SynthConfig) -> Result<RetrievalReport> {
    let (corpus, world) = generate_with_world(config)?;
    let protocol = RetrievalProtocol::new(&config.languages);
    let test = corpus.image_indices(Split::Test);

    // decoded concept activations and the top-m set per test image
    let decoded: Vec<(Vec<f64>, BTreeSet<usize>)> = test
        .iter()
        .map(|&i| {
            let x = &corpus.images()[i].features;
            let act: Vec<f64> = (0..config.d_c)
                .map(|c| {
                    world
                        .projection
                        .row(c)
                        .iter()
                        .zip(x)
                        .map(|(p, &v)| p * f64::from(v))
                        .sum()
                })
                .collect();
            let mut order: Vec<usize> = (0..config.d_c).collect();
            order.sort_by(|&a, &b| act[b].total_cmp(&act[a]).then(a.cmp(&b)));
            (act, order.into_iter().take(config.m).collect())
        })
        .collect();
    let mut row_of = vec![usize::MAX; corpus.images().len()];
    for (r, &i) in test.iter().enumerate() {
        row_of[i] = r;
    }

    let mut entries = Vec::new();
    for lang in &protocol.languages {
        let lex = world
            .lexicon(lang)
            .expect("lexicon per configured language");
        let caps = corpus.caption_indices(Split::Test, Some(lang));
        let mentioned: Vec<BTreeSet<usize>> = caps
            .iter()
            .map(|&c| lex.concepts_of(&corpus.captions()[c].tokens))
            .collect();
        let mut s = Matrix::<f64>::zeros(caps.len(), test.len());
        for (ci, set) in mentioned.iter().enumerate() {
            for (ii, (act, top)) in decoded.iter().enumerate() {
                let overlap = set.intersection(top).count() as f64;
                let strength: f64 = set.iter().map(|&c| act[c]).sum();
                s.set(ci, ii, overlap + 1e-3 * strength);
            }
        }
        let caption_image: Vec<usize> = caps
            .iter()
            .map(|&c| row_of[corpus.captions()[c].image])
            .collect();
        for &direction in &protocol.directions {
            let (scores, truth) = match direction {
                Direction::TextToImage => (
                    s.clone(),
                    caption_image.iter().map(|&i| vec![i]).collect::<Vec<_>>(),
                ),
                Direction::ImageToText => {
                    let mut truth = vec![Vec::new(); test.len()];
                    for (c, &i) in caption_image.iter().enumerate() {
                        truth[i].push(c);
                    }
                    (s.transpose(), truth)
                }
            };
            let values = recall_at_ks(&scores, &truth, &protocol.ks)?;
            entries.extend(
                protocol
                    .ks
                    .iter()
                    .zip(values)
                    .map(|(&k, mean)| ReportEntry {
                        language: lang.clone(),
                        direction,
                        k,
                        mean,
                        std: 0.0,
                        seeds: 1,
                    }),
            );
        }
    }
    Ok(RetrievalReport { entries })
}
