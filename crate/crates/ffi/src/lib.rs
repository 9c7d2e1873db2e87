//! C ABI over the `superhighway` crate.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `shx_*_free` function. Every fallible call returns an
//! [`ShxStatus`]; on failure a description is available from
//! [`shx_last_error_message`] on the same thread. Strings handed out by the
//! library are released with [`shx_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use superhighway::artifact;
use superhighway::construct::{construct_superhighway, ConstructOptions, ConstructionParams};
use superhighway::graph::system_stats;
use superhighway::{
    evaluate, generate_synthetic, ingest, merge_highway, single_structure, split, stats, train,
    Backend, CrossDomainSystem, EmbeddingModel, Error, EvalOptions, EvalSplit, IngestOptions,
    NodeId, SynthConfig, TrainConfig, TrainingStructure,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShxStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Panic = 3,
    NotFound = 10,
    InvalidParam = 11,
    EmptySharedItems = 12,
    DomainMismatch = 13,
    CapExceeded = 14,
    Divergence = 15,
    EmptyEvalSet = 16,
    InvalidRanking = 17,
    Coverage = 18,
    Ingest = 19,
    EmptyDomain = 20,
    InvalidGraph = 21,
    Artifact = 22,
    Io = 23,
    Json = 24,
    NoSplit = 25,
    BufferTooSmall = 26,
}

impl From<&Error> for ShxStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotFound(_) => ShxStatus::NotFound,
            Error::InvalidParam(_) => ShxStatus::InvalidParam,
            Error::EmptySharedItems => ShxStatus::EmptySharedItems,
            Error::DomainMismatch { .. } => ShxStatus::DomainMismatch,
            Error::CapExceeded { .. } => ShxStatus::CapExceeded,
            Error::Divergence { .. } => ShxStatus::Divergence,
            Error::EmptyEvalSet => ShxStatus::EmptyEvalSet,
            Error::InvalidRanking(_) => ShxStatus::InvalidRanking,
            Error::Coverage { .. } => ShxStatus::Coverage,
            Error::Ingest { .. } => ShxStatus::Ingest,
            Error::EmptyDomain(_) => ShxStatus::EmptyDomain,
            Error::InvalidGraph(_) => ShxStatus::InvalidGraph,
            Error::Artifact { .. } => ShxStatus::Artifact,
            Error::Io(_) => ShxStatus::Io,
            Error::Json(_) => ShxStatus::Json,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShxStructureKind {
    Single = 0,
    Highway = 1,
    Superhighway = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShxBackend {
    Mf = 0,
    DeepWalk = 1,
    Hpe = 2,
}

impl From<ShxBackend> for Backend {
    fn from(b: ShxBackend) -> Self {
        match b {
            ShxBackend::Mf => Backend::Mf,
            ShxBackend::DeepWalk => Backend::DeepWalk,
            ShxBackend::Hpe => Backend::Hpe,
        }
    }
}

/// Trainer settings. Obtain defaults from [`shx_train_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShxTrainConfig {
    pub dims: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub negatives: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub hpe_walk_length: usize,
    pub regularization: f64,
    pub seed: u64,
    pub workers: usize,
}

impl From<TrainConfig> for ShxTrainConfig {
    fn from(c: TrainConfig) -> Self {
        ShxTrainConfig {
            dims: c.dims,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            min_learning_rate: c.min_learning_rate,
            negatives: c.negatives,
            walks_per_node: c.walks_per_node,
            walk_length: c.walk_length,
            window: c.window,
            hpe_walk_length: c.hpe_walk_length,
            regularization: c.regularization,
            seed: c.seed,
            workers: c.workers,
        }
    }
}

impl From<&ShxTrainConfig> for TrainConfig {
    fn from(c: &ShxTrainConfig) -> Self {
        TrainConfig {
            dims: c.dims,
            epochs: c.epochs,
            learning_rate: c.learning_rate,
            min_learning_rate: c.min_learning_rate,
            negatives: c.negatives,
            walks_per_node: c.walks_per_node,
            walk_length: c.walk_length,
            window: c.window,
            hpe_walk_length: c.hpe_walk_length,
            regularization: c.regularization,
            seed: c.seed,
            workers: c.workers,
        }
    }
}

/// Synthetic generator settings. Obtain defaults from
/// [`shx_synth_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShxSynthConfig {
    pub users_s: usize,
    pub users_t: usize,
    pub items_s: usize,
    pub items_t: usize,
    pub overlap_ratio: f64,
    pub latent_dims: usize,
    pub interactions_per_user_s: f64,
    pub interactions_per_user_t: f64,
    pub noise: f64,
    pub seed: u64,
}

impl From<SynthConfig> for ShxSynthConfig {
    fn from(c: SynthConfig) -> Self {
        ShxSynthConfig {
            users_s: c.users_s,
            users_t: c.users_t,
            items_s: c.items_s,
            items_t: c.items_t,
            overlap_ratio: c.overlap_ratio,
            latent_dims: c.latent_dims,
            interactions_per_user_s: c.interactions_per_user_s,
            interactions_per_user_t: c.interactions_per_user_t,
            noise: c.noise,
            seed: c.seed,
        }
    }
}

impl From<&ShxSynthConfig> for SynthConfig {
    fn from(c: &ShxSynthConfig) -> Self {
        SynthConfig {
            users_s: c.users_s,
            users_t: c.users_t,
            items_s: c.items_s,
            items_t: c.items_t,
            overlap_ratio: c.overlap_ratio,
            latent_dims: c.latent_dims,
            interactions_per_user_s: c.interactions_per_user_s,
            interactions_per_user_t: c.interactions_per_user_t,
            noise: c.noise,
            seed: c.seed,
        }
    }
}

/// A cross-domain system, optionally carrying an evaluation split.
pub struct ShxSystem {
    system: CrossDomainSystem,
    split: Option<EvalSplit>,
}

pub struct ShxStructure(TrainingStructure);

pub struct ShxModel(EmbeddingModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ShxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(ShxStatus::from(&e), e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status plus the
/// thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ShxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShxStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ShxStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ShxStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ShxStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(null(what))
    } else {
        Ok(())
    }
}

fn json_string<T: serde::Serialize>(value: &T) -> Result<*mut c_char, Failure> {
    let s = serde_json::to_string(value).map_err(Error::from)?;
    Ok(CString::new(s).expect("JSON contains no NUL").into_raw())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn shx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn shx_train_config_default() -> ShxTrainConfig {
    TrainConfig::default().into()
}

#[no_mangle]
pub extern "C" fn shx_synth_config_default() -> ShxSynthConfig {
    SynthConfig::default().into()
}

/// Reads two `user<TAB>item` files into a new system.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shx_system_load_tsv(
    source_path: *const c_char,
    target_path: *const c_char,
    out: *mut *mut ShxSystem,
) -> ShxStatus {
    guard(|| {
        let s = str_arg(source_path, "source_path")?;
        let t = str_arg(target_path, "target_path")?;
        out_arg(out, "out")?;
        let (system, _) = ingest(Path::new(s), Path::new(t), &IngestOptions::default())?;
        *out = Box::into_raw(Box::new(ShxSystem {
            system,
            split: None,
        }));
        Ok(())
    })
}

/// Generates a synthetic system. A null `cfg` uses the defaults.
///
/// # Safety
/// `cfg` must be null or valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shx_system_synth(
    cfg: *const ShxSynthConfig,
    out: *mut *mut ShxSystem,
) -> ShxStatus {
    guard(|| {
        out_arg(out, "out")?;
        let cfg = cfg
            .as_ref()
            .map_or_else(SynthConfig::default, SynthConfig::from);
        let data = generate_synthetic(&cfg)?;
        *out = Box::into_raw(Box::new(ShxSystem {
            system: data.system,
            split: None,
        }));
        Ok(())
    })
}

/// Loads a system artifact written by the `shx` tool or
/// [`shx_system_save`], including its split if present.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shx_system_load(
    path: *const c_char,
    out: *mut *mut ShxSystem,
) -> ShxStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        out_arg(out, "out")?;
        let (system, split) = artifact::read_system(Path::new(p))?;
        *out = Box::into_raw(Box::new(ShxSystem { system, split }));
        Ok(())
    })
}

/// # Safety
/// `sys` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shx_system_save(sys: *const ShxSystem, path: *const c_char) -> ShxStatus {
    guard(|| {
        let sys = ref_arg(sys, "sys")?;
        let p = str_arg(path, "path")?;
        artifact::write_system(Path::new(p), &sys.system, sys.split.as_ref())?;
        Ok(())
    })
}

/// Holds out target-domain interactions in place. The system afterwards
/// contains only the training interactions and remembers the split for
/// [`shx_evaluate`].
///
/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn shx_system_split(
    sys: *mut ShxSystem,
    holdout_fraction: f64,
    seed: u64,
) -> ShxStatus {
    guard(|| {
        let sys = sys.as_mut().ok_or_else(|| null("sys"))?;
        let (cut, sp) = split(&sys.system, holdout_fraction, seed)?;
        sys.system = cut;
        sys.split = Some(sp);
        Ok(())
    })
}

/// Per-domain counts as a JSON object; free with [`shx_string_free`].
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shx_system_stats_json(
    sys: *const ShxSystem,
    out: *mut *mut c_char,
) -> ShxStatus {
    guard(|| {
        let sys = ref_arg(sys, "sys")?;
        out_arg(out, "out")?;
        *out = json_string(&system_stats(&sys.system))?;
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn shx_system_free(sys: *mut ShxSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Builds a training structure. `alpha` and `beta` are read only for
/// [`ShxStructureKind::Superhighway`].
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shx_structure_build(
    sys: *const ShxSystem,
    kind: ShxStructureKind,
    alpha: f64,
    beta: f64,
    out: *mut *mut ShxStructure,
) -> ShxStatus {
    guard(|| {
        let sys = ref_arg(sys, "sys")?;
        out_arg(out, "out")?;
        let s = match kind {
            ShxStructureKind::Single => single_structure(&sys.system),
            ShxStructureKind::Highway => merge_highway(&sys.system),
            ShxStructureKind::Superhighway => {
                let params = ConstructionParams::new(alpha, beta)?;
                construct_superhighway(&sys.system, &params, &ConstructOptions::default())?
            }
        };
        *out = Box::into_raw(Box::new(ShxStructure(s)));
        Ok(())
    })
}

/// # Safety
/// `structure` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn shx_structure_save(
    structure: *const ShxStructure,
    path: *const c_char,
) -> ShxStatus {
    guard(|| {
        let s = ref_arg(structure, "structure")?;
        let p = str_arg(path, "path")?;
        artifact::write_structure(Path::new(p), &s.0)?;
        Ok(())
    })
}

/// Counts for the structure graph as JSON; free with [`shx_string_free`].
///
/// # Safety
/// `structure` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shx_structure_stats_json(
    structure: *const ShxStructure,
    out: *mut *mut c_char,
) -> ShxStatus {
    guard(|| {
        let s = ref_arg(structure, "structure")?;
        out_arg(out, "out")?;
        *out = json_string(&stats(s.0.graph()))?;
        Ok(())
    })
}

/// # Safety
/// `structure` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn shx_structure_free(structure: *mut ShxStructure) {
    if !structure.is_null() {
        drop(Box::from_raw(structure));
    }
}

/// Trains embeddings on a structure. A null `cfg` uses the defaults.
///
/// # Safety
/// `structure` must be a live handle; `cfg` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn shx_model_train(
    structure: *const ShxStructure,
    backend: ShxBackend,
    cfg: *const ShxTrainConfig,
    out: *mut *mut ShxModel,
) -> ShxStatus {
    guard(|| {
        let s = ref_arg(structure, "structure")?;
        out_arg(out, "out")?;
        let cfg = cfg
            .as_ref()
            .map_or_else(TrainConfig::default, TrainConfig::from);
        let model = train(&s.0, backend.into(), &cfg)?;
        *out = Box::into_raw(Box::new(ShxModel(model)));
        Ok(())
    })
}

/// Vector length of the model, 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shx_model_dims(model: *const ShxModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.dims())
}

/// Copies the vector of `node` (keys `su:<id>`, `tu:<id>` or `it:<id>`)
/// into `buf`, which must hold at least [`shx_model_dims`] values.
///
/// # Safety
/// `model` must be a live handle; `node` a NUL-terminated string; `buf`
/// writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn shx_model_vector(
    model: *const ShxModel,
    node: *const c_char,
    buf: *mut f64,
    len: usize,
) -> ShxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let key: NodeId = str_arg(node, "node")?.parse()?;
        out_arg(buf, "buf")?;
        let v = m.0.vector(&key).ok_or(Error::NotFound(key))?;
        if len < v.len() {
            return Err(Failure(
                ShxStatus::BufferTooSmall,
                format!("buffer holds {len} values, vector has {}", v.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, v.len()).copy_from_slice(v);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn shx_model_free(model: *mut ShxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scores `model` against the split stored in `sys` with cosine ranking
/// and one top-degree query per user. Writes MAP@k to `map_out` and, when
/// `report_out` is non-null, the full report as JSON.
///
/// # Safety
/// Handles must be live; `map_out` writable; `report_out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn shx_evaluate(
    model: *const ShxModel,
    sys: *const ShxSystem,
    k: usize,
    map_out: *mut f64,
    report_out: *mut *mut c_char,
) -> ShxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let sys = ref_arg(sys, "sys")?;
        out_arg(map_out, "map_out")?;
        let sp = sys.split.as_ref().ok_or_else(|| {
            Failure(
                ShxStatus::NoSplit,
                "system carries no evaluation split".into(),
            )
        })?;
        let report = evaluate(
            &m.0,
            sp,
            &EvalOptions {
                k,
                ..EvalOptions::default()
            },
        )?;
        *map_out = report.map_at_k;
        if !report_out.is_null() {
            *report_out = json_string(&report)?;
        }
        Ok(())
    })
}
