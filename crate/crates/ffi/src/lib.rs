//! C interface to the drobias aggregators, bias metrics and checkpoints.
//!
//! Every fallible function returns a [`DrobiasStatus`]. On failure a
//! description is available from [`drobias_last_error`] on the same thread
//! until the next failing call. Models are opaque handles created by
//! [`drobias_model_load`] and released with [`drobias_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use drobias::cli::Checkpoint;
use drobias::corpus::Vocab;
use drobias::dro::{
    aggregate_erm, aggregate_group, aggregate_topic_cvar, aggregate_topk, aggregate_topk_group, CvarReduce,
    GroupWeighting,
};
use drobias::eval::{effect_size, icat, pseudo_log_likelihood, scores_from_candidates};
use drobias::model::{masked_log_probs, sentence_embedding, EncoderParams};
use drobias::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrobiasStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Checkpoint = 5,
    Vocabulary = 6,
    Numeric = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Aggregators that need no state between batches.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrobiasAggregator {
    Erm = 0,
    GroupFrequency = 1,
    GroupWorst = 2,
    TopicCvar = 3,
    Topk = 4,
    TopkGroup = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DrobiasStereoScores {
    pub lms: f64,
    pub ss: f64,
    pub icat: f64,
}

/// A loaded encoder and its vocabulary.
pub struct DrobiasModel {
    params: EncoderParams,
    vocab: Vocab,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(DrobiasStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => DrobiasStatus::Io,
            Error::Parse { .. } | Error::Schema { .. } | Error::Json(_) => DrobiasStatus::Parse,
            Error::Checkpoint(_) => DrobiasStatus::Checkpoint,
            Error::Vocabulary(_) => DrobiasStatus::Vocabulary,
            Error::Numeric(_) => DrobiasStatus::Numeric,
            _ => DrobiasStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: DrobiasStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DrobiasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DrobiasStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DrobiasStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DrobiasStatus::NullArgument, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn slice_out<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(fail(DrobiasStatus::NullArgument, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(fail(DrobiasStatus::NullArgument, format!("{what} is null")));
    }
    p.write(value);
    Ok(())
}

unsafe fn model_ref<'a>(model: *const DrobiasModel) -> Result<&'a DrobiasModel, Failure> {
    model
        .as_ref()
        .ok_or_else(|| fail(DrobiasStatus::NullArgument, "model is null"))
}

unsafe fn str_in<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DrobiasStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DrobiasStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn drobias_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn drobias_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Aggregates `n` per-example losses into one batch loss.
///
/// `labels` holds group ids for the group kinds and topic ids for
/// `TopicCvar`, each below `num_labels`; it may be null for `Erm` and
/// `Topk`. `k` is used by the top-k kinds and `alpha` by `TopicCvar`.
/// When `out_coefficients` is not null it receives the `n` per-example
/// weights of the result.
///
/// # Safety
/// Pointers must be valid for `n` elements or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn drobias_aggregate(
    kind: DrobiasAggregator,
    losses: *const f64,
    labels: *const u32,
    n: usize,
    num_labels: usize,
    k: usize,
    alpha: f64,
    out_value: *mut f64,
    out_coefficients: *mut f64,
) -> DrobiasStatus {
    guard(|| {
        let losses = slice_in(losses, n, "losses")?;
        let labels: Vec<usize> = match kind {
            DrobiasAggregator::Erm | DrobiasAggregator::Topk => Vec::new(),
            _ => slice_in(labels, n, "labels")?.iter().map(|&g| g as usize).collect(),
        };
        let out = match kind {
            DrobiasAggregator::Erm => aggregate_erm(losses)?,
            DrobiasAggregator::GroupFrequency => {
                aggregate_group(losses, &labels, num_labels, GroupWeighting::Frequency)?
            }
            DrobiasAggregator::GroupWorst => aggregate_group(losses, &labels, num_labels, GroupWeighting::Worst)?,
            DrobiasAggregator::TopicCvar => {
                aggregate_topic_cvar(losses, &labels, num_labels, alpha, CvarReduce::Mean, None)?
            }
            DrobiasAggregator::Topk => aggregate_topk(losses, k)?,
            DrobiasAggregator::TopkGroup => aggregate_topk_group(losses, &labels, num_labels, k)?,
        };
        write_out(out_value, out.value, "out_value")?;
        if !out_coefficients.is_null() {
            slice_out(out_coefficients, n, "out_coefficients")?.copy_from_slice(&out.coefficients);
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn drobias_icat(lms: f64, ss: f64) -> f64 {
    icat(lms, ss)
}

/// StereoSet-style scores from `n` rows of candidate log-probabilities laid
/// out as `(stereotypical, anti-stereotypical, unrelated)`.
///
/// # Safety
/// `candidates` must hold `3 * n` values.
#[no_mangle]
pub unsafe extern "C" fn drobias_stereo_scores(
    candidates: *const f64,
    n: usize,
    out: *mut DrobiasStereoScores,
) -> DrobiasStatus {
    guard(|| {
        let flat = slice_in(candidates, 3 * n, "candidates")?;
        let rows: Vec<[f64; 3]> = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let s = scores_from_candidates(&rows)?;
        write_out(
            out,
            DrobiasStereoScores {
                lms: s.lms,
                ss: s.ss,
                icat: s.icat,
            },
            "out",
        )
    })
}

/// SEAT effect size for four sets of `dim`-wide row-major embeddings.
/// `out_degenerate` is set when the spread is zero or an embedding is zero.
///
/// # Safety
/// Each set pointer must hold `count * dim` floats.
#[no_mangle]
pub unsafe extern "C" fn drobias_seat_effect_size(
    x: *const f32,
    nx: usize,
    y: *const f32,
    ny: usize,
    a: *const f32,
    na: usize,
    b: *const f32,
    nb: usize,
    dim: usize,
    out_effect: *mut f64,
    out_degenerate: *mut bool,
) -> DrobiasStatus {
    guard(|| {
        if dim == 0 {
            return Err(fail(DrobiasStatus::InvalidArgument, "dim must be positive"));
        }
        let rows = |p, n, what| -> Result<Vec<Vec<f32>>, Failure> {
            Ok(slice_in(p, n * dim, what)?.chunks_exact(dim).map(<[f32]>::to_vec).collect())
        };
        let r = effect_size(&rows(x, nx, "x")?, &rows(y, ny, "y")?, &rows(a, na, "a")?, &rows(b, nb, "b")?)?;
        write_out(out_effect, r.effect, "out_effect")?;
        write_out(out_degenerate, r.degenerate, "out_degenerate")
    })
}

/// Loads a checkpoint written by `drobias train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_load(path: *const c_char, out_model: *mut *mut DrobiasModel) -> DrobiasStatus {
    guard(|| {
        let path = str_in(path, "path")?;
        if out_model.is_null() {
            return Err(fail(DrobiasStatus::NullArgument, "out_model is null"));
        }
        let ckpt = Checkpoint::load(Path::new(path))?;
        let model = DrobiasModel {
            params: ckpt.encoder()?,
            vocab: ckpt.vocab()?,
        };
        out_model.write(Box::into_raw(Box::new(model)));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`drobias_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_free(model: *mut DrobiasModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of output classes, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_vocab_size(model: *const DrobiasModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.config().vocab_size)
}

/// Width of sentence embeddings, or 0 for a null model.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_embedding_dim(model: *const DrobiasModel) -> usize {
    model.as_ref().map_or(0, |m| m.params.config().d_model)
}

/// Token ids of whitespace-separated `text`. If `capacity` is too small the
/// call fails with `BufferTooSmall` and `out_len` holds the needed size.
///
/// # Safety
/// `out_ids` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_encode(
    model: *const DrobiasModel,
    text: *const c_char,
    out_ids: *mut u32,
    capacity: usize,
    out_len: *mut usize,
) -> DrobiasStatus {
    guard(|| {
        let m = model_ref(model)?;
        let words: Vec<&str> = str_in(text, "text")?.split_whitespace().collect();
        let ids = m.vocab.encode(&words)?;
        write_out(out_len, ids.len(), "out_len")?;
        if ids.len() > capacity {
            return Err(fail(
                DrobiasStatus::BufferTooSmall,
                format!("{} ids do not fit in {capacity}", ids.len()),
            ));
        }
        slice_out(out_ids, ids.len(), "out_ids")?.copy_from_slice(&ids);
        Ok(())
    })
}

/// Log-probabilities over the vocabulary with `position` masked.
///
/// # Safety
/// `ids` must hold `n` values and `out` at least `capacity`.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_masked_log_probs(
    model: *const DrobiasModel,
    ids: *const u32,
    n: usize,
    position: usize,
    out: *mut f32,
    capacity: usize,
) -> DrobiasStatus {
    guard(|| {
        let m = model_ref(model)?;
        let v = m.params.config().vocab_size;
        if capacity < v {
            return Err(fail(DrobiasStatus::BufferTooSmall, format!("need {v} values, got {capacity}")));
        }
        let probs = masked_log_probs(&m.params, slice_in(ids, n, "ids")?, position)?;
        slice_out(out, v, "out")?.copy_from_slice(&probs);
        Ok(())
    })
}

/// Mean-pooled final hidden state of a sentence.
///
/// # Safety
/// `ids` must hold `n` values and `out` at least `capacity`.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_sentence_embedding(
    model: *const DrobiasModel,
    ids: *const u32,
    n: usize,
    out: *mut f32,
    capacity: usize,
) -> DrobiasStatus {
    guard(|| {
        let m = model_ref(model)?;
        let d = m.params.config().d_model;
        if capacity < d {
            return Err(fail(DrobiasStatus::BufferTooSmall, format!("need {d} values, got {capacity}")));
        }
        let emb = sentence_embedding(&m.params, slice_in(ids, n, "ids")?)?;
        slice_out(out, d, "out")?.copy_from_slice(&emb);
        Ok(())
    })
}

/// Sum over `positions` of the log-probability of each token when it alone
/// is masked.
///
/// # Safety
/// `ids` must hold `n` values and `positions` `m` values.
#[no_mangle]
pub unsafe extern "C" fn drobias_model_pseudo_log_likelihood(
    model: *const DrobiasModel,
    ids: *const u32,
    n: usize,
    positions: *const usize,
    m: usize,
    out: *mut f64,
) -> DrobiasStatus {
    guard(|| {
        let model = model_ref(model)?;
        let pll = pseudo_log_likelihood(&model.params, slice_in(ids, n, "ids")?, slice_in(positions, m, "positions")?)?;
        write_out(out, pll, "out")
    })
}
