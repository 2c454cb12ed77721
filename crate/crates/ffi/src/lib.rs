//! C ABI over `sevkit`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns a
//! [`SevkitStatus`] and, on failure, leaves a message readable through
//! [`sevkit_last_error_message`] on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use sevkit::data::persist::{reference_from_json, space_from_json};
use sevkit::data::{FeatureSpace, Reference};
use sevkit::model::{deserialize, Classifier};
use sevkit::sev::{compute_sev, Hypercube, SearchOptions, SevError, SevKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SevkitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    DimensionMismatch = 5,
    ReferenceNotNegative = 6,
    QueryNotPositive = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SevkitKind {
    Plus = 0,
    Minus = 1,
    Restricted = 2,
}

/// Outcome of one SEV computation.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SevkitSevResult {
    /// SEV value, or -1 when the query is unexplained within the depth limit.
    pub value: i64,
    /// Number of minimal explanations found (capped).
    pub n_explanations: u64,
    /// Vertex of the first explanation; bit j set means feature j takes the
    /// query's value.
    pub first_mask: u64,
    pub expanded: u64,
    pub depth_limit_hit: bool,
}

/// A loaded classifier.
pub struct SevkitModel(Classifier);

/// A feature space (schema, column groups and standardization).
pub struct SevkitSpace(FeatureSpace);

/// A reference point in encoded coordinates.
pub struct SevkitReference(Reference);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: SevkitStatus, msg: impl Into<String>) -> SevkitStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SevkitStatus) -> SevkitStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SevkitStatus::Panic, "internal panic"),
    }
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a Path, SevkitStatus> {
    if path.is_null() {
        return Err(fail(SevkitStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(path).to_str().map(Path::new).map_err(|_| fail(SevkitStatus::InvalidUtf8, "path is not valid UTF-8"))
}

fn read_file(path: &Path) -> Result<Vec<u8>, SevkitStatus> {
    std::fs::read(path).map_err(|e| fail(SevkitStatus::Io, format!("{}: {e}", path.display())))
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], SevkitStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(SevkitStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> SevkitStatus {
    *out = Box::into_raw(Box::new(value));
    SevkitStatus::Ok
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SevkitStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next sevkit call on the same thread.
#[no_mangle]
pub extern "C" fn sevkit_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sevkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file written by `sevkit train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sevkit_model_load(path: *const c_char, out: *mut *mut SevkitModel) -> SevkitStatus {
    guard(|| {
        non_null!(out);
        let path = try_status!(path_arg(path));
        let bytes = try_status!(read_file(path));
        match deserialize(&bytes) {
            Ok(m) => write_handle(out, SevkitModel(m)),
            Err(e) => fail(SevkitStatus::Parse, format!("{}: {e}", path.display())),
        }
    })
}

/// # Safety
/// `model` must come from [`sevkit_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sevkit_model_free(model: *mut SevkitModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Encoded input width, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sevkit_model_input_dim(model: *const SevkitModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.input_dim())
}

/// Score in [0, 1] for one encoded row.
///
/// # Safety
/// `x` must point to `len` doubles; `model` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sevkit_model_score(model: *const SevkitModel, x: *const f64, len: usize, out: *mut f64) -> SevkitStatus {
    guard(|| {
        non_null!(model, out);
        let x = try_status!(slice_arg(x, len, "x"));
        match (*model).0.score(x) {
            Ok(s) => {
                *out = s;
                SevkitStatus::Ok
            }
            Err(e) => fail(SevkitStatus::DimensionMismatch, e.to_string()),
        }
    })
}

/// Writes 1 for a positive prediction, 0 otherwise.
///
/// # Safety
/// As [`sevkit_model_score`].
#[no_mangle]
pub unsafe extern "C" fn sevkit_model_predict(model: *const SevkitModel, x: *const f64, len: usize, out: *mut i32) -> SevkitStatus {
    guard(|| {
        non_null!(model, out);
        let x = try_status!(slice_arg(x, len, "x"));
        match (*model).0.predict(x) {
            Ok(p) => {
                *out = i32::from(p);
                SevkitStatus::Ok
            }
            Err(e) => fail(SevkitStatus::DimensionMismatch, e.to_string()),
        }
    })
}

/// Loads a `space.json` written by `sevkit prepare`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sevkit_space_load(path: *const c_char, out: *mut *mut SevkitSpace) -> SevkitStatus {
    guard(|| {
        non_null!(out);
        let path = try_status!(path_arg(path));
        let bytes = try_status!(read_file(path));
        let text = try_status!(std::str::from_utf8(&bytes).map_err(|_| fail(SevkitStatus::InvalidUtf8, "space file is not UTF-8")));
        match space_from_json(text) {
            Ok(s) => write_handle(out, SevkitSpace(s)),
            Err(e) => fail(SevkitStatus::Parse, format!("{}: {e}", path.display())),
        }
    })
}

/// # Safety
/// `space` must come from [`sevkit_space_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sevkit_space_free(space: *mut SevkitSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Number of original features (hypercube dimensions), 0 for null.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sevkit_space_n_features(space: *const SevkitSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.n_features())
}

/// Number of encoded columns, 0 for null.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sevkit_space_encoded_width(space: *const SevkitSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.encoded_width())
}

/// Loads a `reference.json` written by `sevkit prepare`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sevkit_reference_load(path: *const c_char, out: *mut *mut SevkitReference) -> SevkitStatus {
    guard(|| {
        non_null!(out);
        let path = try_status!(path_arg(path));
        let bytes = try_status!(read_file(path));
        let text = try_status!(std::str::from_utf8(&bytes).map_err(|_| fail(SevkitStatus::InvalidUtf8, "reference file is not UTF-8")));
        match reference_from_json(text) {
            Ok(r) => write_handle(out, SevkitReference(r)),
            Err(e) => fail(SevkitStatus::Parse, format!("{}: {e}", path.display())),
        }
    })
}

/// # Safety
/// `reference` must come from [`sevkit_reference_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sevkit_reference_free(reference: *mut SevkitReference) {
    if !reference.is_null() {
        drop(Box::from_raw(reference));
    }
}

/// Encoded length of the reference, 0 for null.
///
/// # Safety
/// `reference` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sevkit_reference_len(reference: *const SevkitReference) -> usize {
    reference.as_ref().map_or(0, |r| r.0.len())
}

fn sev_status(e: &SevError) -> SevkitStatus {
    match e {
        SevError::ReferenceNotNegative => SevkitStatus::ReferenceNotNegative,
        SevError::QueryNotPositive => SevkitStatus::QueryNotPositive,
        SevError::DimensionMismatch { .. } => SevkitStatus::DimensionMismatch,
        _ => SevkitStatus::InvalidArgument,
    }
}

/// SEV of one encoded query against the reference.
///
/// `restricted` lists original-feature indices pinned to the query (used for
/// `SEVKIT_KIND_RESTRICTED` only). A `depth_limit` of 0 means the default.
///
/// # Safety
/// All handles must be live; `query` must point to `query_len` doubles,
/// `restricted` to `n_restricted` indices; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sevkit_sev_compute(
    model: *const SevkitModel,
    space: *const SevkitSpace,
    reference: *const SevkitReference,
    query: *const f64,
    query_len: usize,
    kind: SevkitKind,
    restricted: *const usize,
    n_restricted: usize,
    depth_limit: usize,
    out: *mut SevkitSevResult,
) -> SevkitStatus {
    guard(|| {
        non_null!(model, space, reference, out);
        let query = try_status!(slice_arg(query, query_len, "query"));
        let restricted = try_status!(slice_arg(restricted, n_restricted, "restricted"));
        let (model, space, reference) = (&(*model).0, &(*space).0, &(*reference).0);
        if model.input_dim() != space.encoded_width() {
            return fail(
                SevkitStatus::DimensionMismatch,
                format!("model expects {} columns, feature space has {}", model.input_dim(), space.encoded_width()),
            );
        }
        let cube = match Hypercube::new(query, reference.as_slice(), &space.groups) {
            Ok(c) => c,
            Err(e) => return fail(sev_status(&e), e.to_string()),
        };
        let mut opts = SearchOptions::default();
        if depth_limit > 0 {
            opts.depth_limit = depth_limit;
        }
        let kind = match kind {
            SevkitKind::Plus => SevKind::Plus,
            SevkitKind::Minus => SevKind::Minus,
            SevkitKind::Restricted => SevKind::Restricted,
        };
        match compute_sev(model, &cube, kind, restricted, &opts) {
            Ok(r) => {
                *out = SevkitSevResult {
                    value: r.value.map_or(-1, |v| v as i64),
                    n_explanations: r.explanations.len() as u64,
                    first_mask: r.explanations.first().map_or(0, |e| e.mask.0),
                    expanded: r.expanded as u64,
                    depth_limit_hit: r.depth_limit_hit,
                };
                SevkitStatus::Ok
            }
            Err(e) => fail(sev_status(&e), e.to_string()),
        }
    })
}
