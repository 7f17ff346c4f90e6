use crate::data::{Corpus, Split, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{encode_captions, encode_images, ModelParams};
use crate::numerics::{cosine_similarity_matrix, Matrix};

use super::recall::recall_at_ks;
use super::report::{Direction, ReportEntry, RetrievalProtocol, RetrievalReport};

const ENCODE_CHUNK: usize = 512;

/// Scores one language given precomputed embeddings. `caption_image[c]` is
/// the row of `images` that caption row `c` describes. Every image row must
/// have at least one caption.
pub fn evaluate_embeddings(
    language: &str,
    images: &Matrix<f32>,
    captions: &Matrix<f32>,
    caption_image: &[usize],
    directions: &[Direction],
    ks: &[usize],
) -> Result<Vec<ReportEntry>> {
    let mut out = Vec::new();
    for &direction in directions {
        let (s, truth) = match direction {
            Direction::ImageToText => {
                let mut truth = vec![Vec::new(); images.rows()];
                for (c, &img) in caption_image.iter().enumerate() {
                    truth[img].push(c);
                }
                (cosine_similarity_matrix(images, captions)?, truth)
            }
            Direction::TextToImage => (
                cosine_similarity_matrix(captions, images)?,
                caption_image.iter().map(|&i| vec![i]).collect(),
            ),
        };
        let values = recall_at_ks(&s, &truth, ks)?;
        out.extend(ks.iter().zip(values).map(|(&k, mean)| ReportEntry {
            language: language.to_owned(),
            direction,
            k,
            mean,
            std: 0.0,
            seeds: 1,
        }));
    }
    Ok(out)
}

fn encode_text_chunked(params: &ModelParams<f32>, seqs: &[Vec<usize>]) -> Result<Matrix<f32>> {
    let d = params.d_hid();
    let mut data = Vec::with_capacity(seqs.len() * d);
    for chunk in seqs.chunks(ENCODE_CHUNK) {
        data.extend(encode_captions(params, chunk)?.into_vec());
    }
    Matrix::from_vec(seqs.len(), d, data)
}

/// Encodes every image of `split` once, then per language ranks that
/// language's captions against the images it describes (and vice versa).
/// Images without a caption in a language are left out of that language's
/// candidate and query sets.
pub fn evaluate_model(
    params: &ModelParams<f32>,
    vocab: &Vocabulary,
    corpus: &Corpus,
    split: Split,
    protocol: &RetrievalProtocol,
) -> Result<RetrievalReport> {
    protocol.validate()?;
    let image_ids = corpus.image_indices(split);
    if image_ids.is_empty() {
        return Err(Error::EmptyCorpus(format!("no {split} images")));
    }
    let d_img = corpus.feature_dim();
    let mut feats = Vec::with_capacity(image_ids.len() * d_img);
    for &i in &image_ids {
        feats.extend_from_slice(&corpus.images()[i].features);
    }
    let features = Matrix::from_vec(image_ids.len(), d_img, feats)?;
    let all_images = encode_images(params, &features)?;
    let mut row_of = vec![usize::MAX; corpus.images().len()];
    for (row, &i) in image_ids.iter().enumerate() {
        row_of[i] = row;
    }

    let mut entries = Vec::new();
    for lang in &protocol.languages {
        let caps = corpus.caption_indices(split, Some(lang));
        if caps.is_empty() {
            return Err(Error::UnknownLanguage(format!(
                "{lang} (no {split} captions)"
            )));
        }
        // images described in this language, in split order
        let mut local = vec![usize::MAX; image_ids.len()];
        let mut kept = Vec::new();
        for &c in &caps {
            let row = row_of[corpus.captions()[c].image];
            if local[row] == usize::MAX {
                local[row] = 0;
            }
        }
        for (row, slot) in local.iter_mut().enumerate() {
            if *slot != usize::MAX {
                *slot = kept.len();
                kept.push(row);
            }
        }
        let images = all_images.select_rows(&kept);
        let seqs = caps
            .iter()
            .map(|&c| vocab.encode_tokens(&corpus.captions()[c].tokens))
            .collect::<Result<Vec<_>>>()?;
        let captions = encode_text_chunked(params, &seqs)?;
        let caption_image: Vec<usize> = caps
            .iter()
            .map(|&c| local[row_of[corpus.captions()[c].image]])
            .collect();
        entries.extend(evaluate_embeddings(
            lang,
            &images,
            &captions,
            &caption_image,
            &protocol.directions,
            &protocol.ks,
        )?);
    }
    Ok(RetrievalReport { entries })
}
