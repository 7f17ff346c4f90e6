use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use polyvse::data::{build_vocabulary, Split};
use polyvse::model::{
    encode_captions, encode_images, init_params, save_checkpoint, CheckpointPaths, ModelConfig,
};
use polyvse::numerics::Matrix;
use polyvse::synth::{generate, SynthConfig};
use polyvse_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = pv_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn synth_save_load_counts() {
    let dir = tempfile::tempdir().unwrap();
    let dir_c = c(dir.path().to_str().unwrap());
    unsafe {
        let mut corpus = ptr::null_mut();
        let st = pv_synth_generate(
            c("translation").as_ptr(),
            c("en,de").as_ptr(),
            3,
            &mut corpus,
        );
        assert_eq!(st, PvStatus::Ok);
        assert!(pv_last_error_message().is_null());
        let (mut n_img, mut n_cap, mut dim) = (0, 0, 0);
        assert_eq!(
            pv_corpus_counts(corpus, &mut n_img, &mut n_cap, &mut dim),
            PvStatus::Ok
        );
        assert_eq!((n_img, n_cap, dim), (700, 1400, 64));
        assert_eq!(pv_corpus_save(corpus, dir_c.as_ptr()), PvStatus::Ok);
        pv_corpus_free(corpus);

        let mut loaded = ptr::null_mut();
        assert_eq!(pv_corpus_load(dir_c.as_ptr(), &mut loaded), PvStatus::Ok);
        let mut n = 0;
        assert_eq!(
            pv_corpus_counts(loaded, ptr::null_mut(), &mut n, ptr::null_mut()),
            PvStatus::Ok
        );
        assert_eq!(n, 1400);
        pv_corpus_free(loaded);
        pv_corpus_free(ptr::null_mut());
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut corpus = ptr::null_mut();
        let st = pv_synth_generate(c("mixed").as_ptr(), c("en").as_ptr(), 0, &mut corpus);
        assert_eq!(st, PvStatus::Config);
        assert!(last_error().contains("mixed"));
        assert!(corpus.is_null());

        let st = pv_synth_generate(ptr::null(), c("en").as_ptr(), 0, &mut corpus);
        assert_eq!(st, PvStatus::InvalidArgument);
        assert!(last_error().contains("regime"));

        let st = pv_corpus_load(c("/nonexistent/polyvse").as_ptr(), &mut corpus);
        assert_eq!(st, PvStatus::Io);

        let mut model = ptr::null_mut();
        assert_eq!(
            pv_model_load(c("/nonexistent/polyvse").as_ptr(), &mut model),
            PvStatus::Io
        );
        assert!(model.is_null());
    }
}

#[test]
fn ranking_loss_batch_of_two() {
    let s = [0.5, 0.6, 0.0, 0.5];
    let mut loss = 0.0;
    let mut grad = [0.0; 4];
    unsafe {
        assert_eq!(
            pv_ranking_loss(s.as_ptr(), 2, 0.2, 0, &mut loss, grad.as_mut_ptr()),
            PvStatus::Ok
        );
    }
    assert!((loss - 0.6).abs() < 1e-12);
    assert_eq!(grad, [-1.0, 2.0, 0.0, -1.0]);
    unsafe {
        assert_eq!(
            pv_ranking_loss(s.as_ptr(), 2, -1.0, 0, &mut loss, ptr::null_mut()),
            PvStatus::Config
        );
    }
}

#[test]
fn recall_matches_manual_ranking() {
    // query 0 ranks its target first, query 1 third
    let scores = [0.9, 0.1, 0.2, 0.3, 0.8, 0.5];
    let truth = [0usize, 0];
    let mut r = 0.0;
    unsafe {
        assert_eq!(
            pv_recall_at_k(scores.as_ptr(), 2, 3, truth.as_ptr(), 1, &mut r),
            PvStatus::Ok
        );
        assert_eq!(r, 50.0);
        assert_eq!(
            pv_recall_at_k(scores.as_ptr(), 2, 3, truth.as_ptr(), 3, &mut r),
            PvStatus::Ok
        );
        assert_eq!(r, 100.0);
        let bad = [0usize, 7];
        assert_eq!(
            pv_recall_at_k(scores.as_ptr(), 2, 3, bad.as_ptr(), 1, &mut r),
            PvStatus::Config
        );
    }
}

#[test]
fn model_encoders_match_library() {
    let corpus = generate(&SynthConfig {
        n_train: 30,
        n_val: 5,
        n_test: 5,
        ..Default::default()
    })
    .unwrap();
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let params = init_params::<f32>(&ModelConfig {
        vocab_size: vocab.len(),
        d_emb: 6,
        d_hid: 5,
        d_img: corpus.feature_dim(),
        image_bias: true,
        seed: 2,
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(&params, &vocab, &CheckpointPaths::in_dir(dir.path())).unwrap();

    let cap = &corpus.captions()[corpus.caption_indices(Split::Train, None)[0]];
    let ids = vocab.encode_tokens(&cap.tokens).unwrap();
    let want_text = encode_captions(&params, &[ids]).unwrap();
    let feats: Vec<f32> = corpus.images()[..3]
        .iter()
        .flat_map(|i| i.features.clone())
        .collect();
    let want_img =
        encode_images(&params, &Matrix::from_vec(3, 64, feats.clone()).unwrap()).unwrap();

    unsafe {
        let mut model = ptr::null_mut();
        let dir_c = c(dir.path().to_str().unwrap());
        assert_eq!(pv_model_load(dir_c.as_ptr(), &mut model), PvStatus::Ok);
        let (mut d, mut d_img) = (0, 0);
        assert_eq!(pv_model_dims(model, &mut d, &mut d_img), PvStatus::Ok);
        assert_eq!((d, d_img), (5, 64));

        let mut out = vec![0f32; d];
        let text = c(&cap.tokens.join(" "));
        assert_eq!(
            pv_model_encode_caption(model, text.as_ptr(), out.as_mut_ptr(), d),
            PvStatus::Ok
        );
        assert_eq!(out.as_slice(), want_text.row(0));
        assert_eq!(
            pv_model_encode_caption(model, text.as_ptr(), out.as_mut_ptr(), d - 1),
            PvStatus::InvalidArgument
        );

        let mut out = vec![0f32; 3 * d];
        let st = pv_model_encode_images(model, feats.as_ptr(), 3, 64, out.as_mut_ptr(), out.len());
        assert_eq!(st, PvStatus::Ok);
        assert_eq!(out.as_slice(), want_img.as_slice());
        let st = pv_model_encode_images(model, feats.as_ptr(), 6, 32, out.as_mut_ptr(), 6 * d);
        assert_eq!(st, PvStatus::Numeric);
        assert!(last_error().contains("dimension"));
        pv_model_free(model);
    }
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/polyvse.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pv_last_error_message",
        "pv_version",
        "pv_synth_generate",
        "pv_corpus_load",
        "pv_corpus_save",
        "pv_corpus_counts",
        "pv_corpus_free",
        "pv_model_load",
        "pv_model_dims",
        "pv_model_encode_caption",
        "pv_model_encode_images",
        "pv_model_free",
        "pv_ranking_loss",
        "pv_recall_at_k",
        "PV_STATUS_INVALID_ARGUMENT = 1",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"polyvse.h\"\nint main(void) { PvCorpus *c = 0; return pv_corpus_load(\"x\", &c) == PV_STATUS_OK; }\n",
    )
    .unwrap();
    match std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    {
        Ok(out) => assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        ),
        Err(_) => eprintln!("no C compiler found; skipped compiling the header"),
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(pv_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
