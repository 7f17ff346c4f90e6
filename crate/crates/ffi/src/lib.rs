//! C interface to polyvse.
//!
//! Every function returns a [`PvStatus`]. On failure the message is kept per
//! thread and can be read with [`pv_last_error_message`] until the next call
//! on that thread. Objects are opaque handles released with their `_free`
//! function; passing null to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use polyvse::data::{load_corpus, save_corpus, Corpus, CorpusPaths, Vocabulary};
use polyvse::evaluation::recall_at_k;
use polyvse::model::{
    encode_captions, encode_images, load_checkpoint, CheckpointPaths, ModelParams,
};
use polyvse::numerics::Matrix;
use polyvse::objective::{ranking_loss, LossConfig, LossVariant};
use polyvse::synth::{generate, Regime, SynthConfig};
use polyvse::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or a size that does not fit.
    InvalidArgument = 1,
    Config = 2,
    Parse = 3,
    Io = 4,
    Incompatible = 5,
    /// Dimension mismatch, degenerate input or divergence.
    Numeric = 6,
    /// A bug: a panic was caught at the boundary.
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> PvStatus {
    match e {
        Error::Config(_)
        | Error::UnknownLanguage(_)
        | Error::InsufficientLanguages(_)
        | Error::Protocol(_)
        | Error::Aggregation(_) => PvStatus::Config,
        Error::Parse { .. } | Error::BinaryParse { .. } => PvStatus::Parse,
        Error::Io { .. } => PvStatus::Io,
        Error::Incompatible(_) | Error::Vocabulary { .. } => PvStatus::Incompatible,
        _ => PvStatus::Numeric,
    }
}

struct Invalid(String);

enum Failure {
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<Invalid> for Failure {
    fn from(e: Invalid) -> Self {
        Failure::Invalid(e.0)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PvStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PvStatus::Ok,
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            PvStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            PvStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Invalid> {
    if p.is_null() {
        return Err(Invalid(format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Invalid> {
    p.as_ref()
        .ok_or_else(|| Invalid(format!("`{name}` is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Invalid> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Invalid(format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(
    p: *mut T,
    len: usize,
    need: usize,
    name: &str,
) -> Result<&'a mut [T], Invalid> {
    if p.is_null() {
        return Err(Invalid(format!("`{name}` is null")));
    }
    if len < need {
        return Err(Invalid(format!(
            "`{name}` holds {len} values, {need} needed"
        )));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

fn check_out<T>(p: *mut T, name: &str) -> Result<(), Invalid> {
    if p.is_null() {
        Err(Invalid(format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn pv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// A loaded or generated corpus.
pub struct PvCorpus {
    corpus: Corpus,
}

/// A trained model with its vocabulary.
pub struct PvModel {
    params: ModelParams<f32>,
    vocab: Vocabulary,
}

/// Generates a synthetic corpus with default sizes. `regime` is
/// "translation", "comparable" or "disjoint"; `languages` is a comma
/// separated list such as "en,de".
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_synth_generate(
    regime: *const c_char,
    languages: *const c_char,
    seed: u64,
    out: *mut *mut PvCorpus,
) -> PvStatus {
    guard(|| {
        check_out(out, "out")?;
        let regime: Regime = str_arg(regime, "regime")?.parse()?;
        let languages = str_arg(languages, "languages")?
            .split(',')
            .map(|l| l.trim().to_owned())
            .collect();
        let corpus = generate(&SynthConfig {
            regime,
            languages,
            seed,
            ..Default::default()
        })?;
        *out = Box::into_raw(Box::new(PvCorpus { corpus }));
        Ok(())
    })
}

/// Loads `captions.tsv`, `features.imgf` and `features.index` from `dir`.
///
/// # Safety
/// `dir` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_corpus_load(dir: *const c_char, out: *mut *mut PvCorpus) -> PvStatus {
    guard(|| {
        check_out(out, "out")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        let corpus = load_corpus(&CorpusPaths::in_dir(dir))?;
        *out = Box::into_raw(Box::new(PvCorpus { corpus }));
        Ok(())
    })
}

/// Writes the corpus files into an existing directory.
///
/// # Safety
/// `corpus` must come from this library; `dir` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pv_corpus_save(corpus: *const PvCorpus, dir: *const c_char) -> PvStatus {
    guard(|| {
        let corpus = ref_arg(corpus, "corpus")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        save_corpus(&corpus.corpus, &CorpusPaths::in_dir(dir))?;
        Ok(())
    })
}

/// Image count, caption count and feature dimension.
///
/// # Safety
/// `corpus` must come from this library; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn pv_corpus_counts(
    corpus: *const PvCorpus,
    images: *mut usize,
    captions: *mut usize,
    feature_dim: *mut usize,
) -> PvStatus {
    guard(|| {
        let c = &ref_arg(corpus, "corpus")?.corpus;
        if !images.is_null() {
            *images = c.images().len();
        }
        if !captions.is_null() {
            *captions = c.captions().len();
        }
        if !feature_dim.is_null() {
            *feature_dim = c.feature_dim();
        }
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pv_corpus_free(corpus: *mut PvCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Loads a checkpoint directory written by `polyvse train`.
///
/// # Safety
/// `dir` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_model_load(dir: *const c_char, out: *mut *mut PvModel) -> PvStatus {
    guard(|| {
        check_out(out, "out")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        let (params, vocab) = load_checkpoint(&CheckpointPaths::in_dir(dir))?;
        *out = Box::into_raw(Box::new(PvModel { params, vocab }));
        Ok(())
    })
}

/// Embedding size and expected image feature size.
///
/// # Safety
/// `model` must come from this library; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn pv_model_dims(
    model: *const PvModel,
    embedding_dim: *mut usize,
    feature_dim: *mut usize,
) -> PvStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        if !embedding_dim.is_null() {
            *embedding_dim = m.params.d_hid();
        }
        if !feature_dim.is_null() {
            *feature_dim = m.params.config.d_img;
        }
        Ok(())
    })
}

/// Embeds a whitespace-tokenized caption into `out[0..embedding_dim]`.
/// Unknown tokens map to the UNK entry.
///
/// # Safety
/// `model` must come from this library; `text` must be NUL-terminated;
/// `out` must hold `out_len` floats.
#[no_mangle]
pub unsafe extern "C" fn pv_model_encode_caption(
    model: *const PvModel,
    text: *const c_char,
    out: *mut f32,
    out_len: usize,
) -> PvStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let tokens: Vec<&str> = str_arg(text, "text")?.split_whitespace().collect();
        let out = out_slice(out, out_len, m.params.d_hid(), "out")?;
        let ids = m.vocab.encode_tokens(&tokens)?;
        let emb = encode_captions(&m.params, &[ids])?;
        out.copy_from_slice(emb.row(0));
        Ok(())
    })
}

/// Embeds `n` images whose features are stored row-major in `features`
/// (`n * feature_dim` floats) into `out` (`n * embedding_dim` floats).
///
/// # Safety
/// `model` must come from this library; buffers must hold the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn pv_model_encode_images(
    model: *const PvModel,
    features: *const f32,
    n: usize,
    feature_dim: usize,
    out: *mut f32,
    out_len: usize,
) -> PvStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let total = n
            .checked_mul(feature_dim)
            .ok_or_else(|| Invalid("feature buffer size overflows".into()))?;
        let feats = slice_arg(features, total, "features")?;
        let d = m.params.d_hid();
        let need = n
            .checked_mul(d)
            .ok_or_else(|| Invalid("output size overflows".into()))?;
        let out = out_slice(out, out_len, need, "out")?;
        let x = Matrix::from_vec(n, feature_dim, feats.to_vec())?;
        let emb = encode_images(&m.params, &x)?;
        out.copy_from_slice(emb.as_slice());
        Ok(())
    })
}

/// # Safety
/// `model` must be null or come from this library, and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pv_model_free(model: *mut PvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Max-of-hinges (`sum_of_hinges == 0`) or sum-of-hinges ranking loss of an
/// `n x n` row-major similarity matrix whose diagonal holds the positive
/// pairs. Writes the loss and, if `grad` is not null, its gradient.
///
/// # Safety
/// `similarity` and `grad` (when not null) must hold `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pv_ranking_loss(
    similarity: *const f64,
    n: usize,
    margin: f64,
    sum_of_hinges: i32,
    loss: *mut f64,
    grad: *mut f64,
) -> PvStatus {
    guard(|| {
        check_out(loss, "loss")?;
        let total = n
            .checked_mul(n)
            .ok_or_else(|| Invalid("matrix size overflows".into()))?;
        let s = Matrix::from_vec(n, n, slice_arg(similarity, total, "similarity")?.to_vec())?;
        let config = LossConfig {
            margin,
            variant: if sum_of_hinges != 0 {
                LossVariant::SumOfHinges
            } else {
                LossVariant::MaxOfHinges
            },
        };
        let result = ranking_loss(&s, &config)?;
        *loss = result.value;
        if !grad.is_null() {
            std::slice::from_raw_parts_mut(grad, total).copy_from_slice(result.grad.as_slice());
        }
        Ok(())
    })
}

/// Percentage of queries whose correct candidate (`truth[q]`) ranks within
/// the top `k` of row `q` of the `n_queries x n_candidates` score matrix.
/// Ties rank the lower candidate index first.
///
/// # Safety
/// `scores` must hold `n_queries * n_candidates` doubles, `truth`
/// `n_queries` indices.
#[no_mangle]
pub unsafe extern "C" fn pv_recall_at_k(
    scores: *const f64,
    n_queries: usize,
    n_candidates: usize,
    truth: *const usize,
    k: usize,
    out: *mut f64,
) -> PvStatus {
    guard(|| {
        check_out(out, "out")?;
        let total = n_queries
            .checked_mul(n_candidates)
            .ok_or_else(|| Invalid("matrix size overflows".into()))?;
        let s = Matrix::from_vec(
            n_queries,
            n_candidates,
            slice_arg(scores, total, "scores")?.to_vec(),
        )?;
        let truth: Vec<Vec<usize>> = slice_arg(truth, n_queries, "truth")?
            .iter()
            .map(|&t| vec![t])
            .collect();
        *out = recall_at_k(&s, &truth, k)?;
        Ok(())
    })
}
