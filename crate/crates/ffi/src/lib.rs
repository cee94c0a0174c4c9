//! C ABI over the wordpuzzle library.
//!
//! Handles are opaque pointers created by `*_load` and released by the
//! matching `*_free`. Every fallible call returns a [`WpStatus`]; on failure
//! the message is available from [`wp_last_error`] on the same thread.
//! Panics never cross the boundary; they surface as `WP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use wordpuzzle::consistency::{bottleneck_score, identify_consistent_sets, score_words, write_consistent_sets, WeightedGraph};
use wordpuzzle::esa::{EsaIndex, SimilarityProvider};
use wordpuzzle::topics::{extract_top_k, TopicModel};
use wordpuzzle::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    InvalidInput = 5,
    Invariant = 6,
    Panic = 7,
}

/// ESA relatedness index with its pair memo.
pub struct WpSimilarityIndex {
    inner: SimilarityProvider,
}

/// Fitted topic model.
pub struct WpTopicModel {
    inner: TopicModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: WpStatus, message: impl Into<String>) -> WpStatus {
    set_error(message.into());
    status
}

fn status_of(err: &Error) -> WpStatus {
    match err {
        Error::Io { .. } => WpStatus::Io,
        Error::MalformedLine { .. } | Error::Format(_) => WpStatus::Format,
        Error::Invariant(_) => WpStatus::Invariant,
        _ => WpStatus::InvalidInput,
    }
}

/// Runs `f`, recording its error and containing panics.
fn guard(f: impl FnOnce() -> Result<(), WpStatus>) -> WpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WpStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(WpStatus::Panic, "internal panic"),
    }
}

fn lib<T>(r: wordpuzzle::Result<T>) -> Result<T, WpStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, WpStatus> {
    if p.is_null() {
        return Err(fail(WpStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(WpStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, WpStatus> {
    p.as_ref().ok_or_else(|| fail(WpStatus::NullArgument, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, WpStatus> {
    p.as_mut().ok_or_else(|| fail(WpStatus::NullArgument, format!("{what} is null")))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads an index written by `wordpuzzle index`.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_index_load(path: *const c_char, out: *mut *mut WpSimilarityIndex) -> WpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let path = str_arg(path, "path")?;
        let index = lib(EsaIndex::load(Path::new(path)))?;
        *out = Box::into_raw(Box::new(WpSimilarityIndex { inner: SimilarityProvider::new(index) }));
        Ok(())
    })
}

/// # Safety
/// `index` must come from [`wp_index_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wp_index_free(index: *mut WpSimilarityIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Relatedness of two words in [0, 1]. `unindexed` (optional) is set when
/// either word is missing from the index, in which case the value is 0.
///
/// # Safety
/// Pointers must be valid; `unindexed` may be null.
#[no_mangle]
pub unsafe extern "C" fn wp_index_relatedness(
    index: *const WpSimilarityIndex,
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
    unindexed: *mut bool,
) -> WpStatus {
    guard(|| {
        let index = ref_arg(index, "index")?;
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        let out = out_arg(out, "out")?;
        let r = index.inner.relatedness(a, b);
        *out = r.value;
        if let Some(flag) = unindexed.as_mut() {
            *flag = r.unindexed;
        }
        Ok(())
    })
}

/// Bottleneck consistency score of `n` words under the index.
///
/// # Safety
/// `words` must point to `n` valid C strings.
#[no_mangle]
pub unsafe extern "C" fn wp_index_bottleneck(
    index: *const WpSimilarityIndex,
    words: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> WpStatus {
    guard(|| {
        let index = ref_arg(index, "index")?;
        if words.is_null() {
            return Err(fail(WpStatus::NullArgument, "words is null"));
        }
        let out = out_arg(out, "out")?;
        let words: Vec<String> = std::slice::from_raw_parts(words, n)
            .iter()
            .map(|&w| str_arg(w, "word").map(str::to_owned))
            .collect::<Result<_, _>>()?;
        *out = lib(score_words(&words, &index.inner))?;
        Ok(())
    })
}

/// Bottleneck score of a complete graph given as a row-major symmetric
/// `n` x `n` weight matrix with entries in [0, 1].
///
/// # Safety
/// `weights` must point to `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn wp_bottleneck_score(weights: *const f64, n: usize, out: *mut f64) -> WpStatus {
    guard(|| {
        if weights.is_null() {
            return Err(fail(WpStatus::NullArgument, "weights is null"));
        }
        let out = out_arg(out, "out")?;
        let flat = std::slice::from_raw_parts(weights, n * n);
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let g = lib(WeightedGraph::from_matrix(&rows))?;
        *out = lib(bottleneck_score(&g))?;
        Ok(())
    })
}

/// Loads a model written by `wordpuzzle train`.
///
/// # Safety
/// `path` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_model_load(path: *const c_char, out: *mut *mut WpTopicModel) -> WpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let path = str_arg(path, "path")?;
        let model = lib(TopicModel::load(Path::new(path)))?;
        *out = Box::into_raw(Box::new(WpTopicModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`wp_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wp_model_free(model: *mut WpTopicModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of topics, or 0 for a null model.
///
/// # Safety
/// `model` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn wp_model_topics(model: *const WpTopicModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.dictionary.n_topics())
}

/// The `k` most significant words of `topic`, newline separated. Free the
/// result with [`wp_string_free`].
///
/// # Safety
/// `model` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wp_model_topic_words(
    model: *const WpTopicModel,
    topic: usize,
    k: usize,
    out: *mut *mut c_char,
) -> WpStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let out = out_arg(out, "out")?;
        *out = std::ptr::null_mut();
        let m = &model.inner;
        if topic >= m.dictionary.n_topics() {
            return Err(fail(
                WpStatus::InvalidInput,
                format!("topic {topic} out of range ({} topics)", m.dictionary.n_topics()),
            ));
        }
        let sets = lib(extract_top_k(&m.dictionary, k))?;
        let words: Vec<&str> = sets[topic].words.iter().map(|&w| m.vocab[w].as_str()).collect();
        let joined = CString::new(words.join("\n")).map_err(|_| fail(WpStatus::Format, "word contains nul"))?;
        *out = joined.into_raw();
        Ok(())
    })
}

/// Writes the consistent sets of the model (top `k` words per topic, score
/// strictly above `delta`) to `out_path` as JSON lines and reports how many
/// there were.
///
/// # Safety
/// Pointers must be valid; `n_sets` may be null.
#[no_mangle]
pub unsafe extern "C" fn wp_extract_consistent_sets(
    model: *const WpTopicModel,
    index: *const WpSimilarityIndex,
    k: usize,
    delta: f64,
    out_path: *const c_char,
    n_sets: *mut usize,
) -> WpStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let index = ref_arg(index, "index")?;
        let path = str_arg(out_path, "out_path")?;
        let candidates = lib(extract_top_k(&model.inner.dictionary, k))?;
        let sets = lib(identify_consistent_sets(&candidates, &model.inner.vocab, &index.inner, delta))?;
        lib(write_consistent_sets(Path::new(path), &sets))?;
        if let Some(n) = n_sets.as_mut() {
            *n = sets.len();
        }
        Ok(())
    })
}
