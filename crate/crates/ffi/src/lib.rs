//! C ABI for dmvc.
//!
//! Every function returns a [`DmvcStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with
//! [`dmvc_last_error_message`]. Handles are opaque and released with their
//! matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dmvc::copula::{directional_rho_closed, rluf_cdf, tawn_cdf, tawn_sample, Direction, RlufParams, TawnParams};
use dmvc::eval::{best_permutation_accuracy, consensus_labels, rand_index, similarity_matrix, SimilarityMatrix};
use dmvc::gibbs::{run_chains, ChainTrace, Problem};
use dmvc::io::load::load_multiview;
use dmvc::io::{cmd_fit, cmd_simulate, RunConfig};
use dmvc::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmvcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Numerical = 4,
    DimensionMismatch = 5,
    InvalidConfig = 6,
    Io = 7,
    EmptyTrace = 8,
    Panic = 9,
}

/// Dependence direction: `VToU` is the dependence of `U` on `V`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmvcDirection {
    VToU = 0,
    UToV = 1,
}

impl From<DmvcDirection> for Direction {
    fn from(d: DmvcDirection) -> Self {
        match d {
            DmvcDirection::VToU => Direction::VToU,
            DmvcDirection::UToV => Direction::UToV,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DmvcStatus {
    match e {
        Error::Domain(_) | Error::DegenerateInput(_) | Error::EmptyRetention { .. } => DmvcStatus::Domain,
        Error::RootFinding { .. } | Error::Inversion { .. } | Error::Quadrature { .. } => DmvcStatus::Numerical,
        Error::DimensionMismatch(_) | Error::IdentifierMismatch(_) | Error::MissingValues(_) => {
            DmvcStatus::DimensionMismatch
        }
        Error::InvalidGraph(_) | Error::InvalidConfig(_) | Error::Json(_) => DmvcStatus::InvalidConfig,
        Error::NonNumeric { .. } | Error::Io { .. } | Error::Csv(_) => DmvcStatus::Io,
        Error::EmptyTrace => DmvcStatus::EmptyTrace,
    }
}

/// Failure carried out of a guarded body.
enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> DmvcStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => return DmvcStatus::Ok,
        Ok(Err(Fail::Null(name))) => (DmvcStatus::NullPointer, format!("{name} is null")),
        Ok(Err(Fail::Arg(msg))) => (DmvcStatus::InvalidArgument, msg),
        Ok(Err(Fail::Lib(e))) => (status_of(&e), e.to_string()),
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (DmvcStatus::Panic, format!("panic: {msg}"))
        }
    };
    set_error(msg);
    status
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path(p: *const c_char, name: &'static str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{name} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// Copies the last error of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes, without
/// the terminator, so callers can size a second call.
#[no_mangle]
pub unsafe extern "C" fn dmvc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn dmvc_status_name(status: DmvcStatus) -> *const c_char {
    let s: &CStr = match status {
        DmvcStatus::Ok => c"ok",
        DmvcStatus::NullPointer => c"null pointer",
        DmvcStatus::InvalidArgument => c"invalid argument",
        DmvcStatus::Domain => c"domain error",
        DmvcStatus::Numerical => c"numerical failure",
        DmvcStatus::DimensionMismatch => c"dimension mismatch",
        DmvcStatus::InvalidConfig => c"invalid configuration",
        DmvcStatus::Io => c"input/output error",
        DmvcStatus::EmptyTrace => c"empty trace",
        DmvcStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_rluf_cdf(
    u: f64,
    v: f64,
    theta: f64,
    alpha: f64,
    beta: f64,
    result: *mut f64,
) -> DmvcStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = rluf_cdf(u, v, &RlufParams::new(theta, alpha, beta)?)?;
        Ok(())
    })
}

/// Closed-form directional dependence of the RLUF copula.
#[no_mangle]
pub unsafe extern "C" fn dmvc_rluf_directional_rho(
    theta: f64,
    alpha: f64,
    beta: f64,
    direction: DmvcDirection,
    result: *mut f64,
) -> DmvcStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = directional_rho_closed(&RlufParams::new(theta, alpha, beta)?, direction.into()).value;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_tawn_cdf(
    u: f64,
    v: f64,
    psi1: f64,
    psi2: f64,
    theta: f64,
    result: *mut f64,
) -> DmvcStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = tawn_cdf(u, v, &TawnParams::new(psi1, psi2, theta)?)?;
        Ok(())
    })
}

/// Fills `u[0..n]` and `v[0..n]` with copula draws.
#[no_mangle]
pub unsafe extern "C" fn dmvc_tawn_sample(
    n: usize,
    psi1: f64,
    psi2: f64,
    theta: f64,
    seed: u64,
    u: *mut f64,
    v: *mut f64,
) -> DmvcStatus {
    guard(|| {
        let u = slice_mut(u, n, "u")?;
        let v = slice_mut(v, n, "v")?;
        let pairs = tawn_sample(n, &TawnParams::new(psi1, psi2, theta)?, seed)?;
        for (i, (a, b)) in pairs.into_iter().enumerate() {
            u[i] = a;
            v[i] = b;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_rand_index(a: *const u32, b: *const u32, n: usize, result: *mut f64) -> DmvcStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = rand_index(slice(a, n, "a")?, slice(b, n, "b")?)?;
        Ok(())
    })
}

/// Agreement between `estimate` and `truth` under the best matching of labels.
#[no_mangle]
pub unsafe extern "C" fn dmvc_accuracy(
    estimate: *const u32,
    truth: *const u32,
    n: usize,
    result: *mut f64,
) -> DmvcStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = best_permutation_accuracy(slice(estimate, n, "estimate")?, slice(truth, n, "truth")?)?;
        Ok(())
    })
}

/// Posterior similarity matrix together with the draws it came from.
pub struct DmvcSimilarity {
    sim: SimilarityMatrix,
    draws: Vec<Vec<u32>>,
}

/// Builds a similarity matrix from `draws` row-major label vectors of
/// length `n`.
#[no_mangle]
pub unsafe extern "C" fn dmvc_similarity_new(
    labels: *const u32,
    draws: usize,
    n: usize,
    handle: *mut *mut DmvcSimilarity,
) -> DmvcStatus {
    guard(|| {
        let handle = out(handle, "handle")?;
        *handle = ptr::null_mut();
        let len = draws
            .checked_mul(n)
            .ok_or_else(|| Fail::Arg("draws * n overflows".into()))?;
        let rows: Vec<Vec<u32>> = slice(labels, len, "labels")?
            .chunks(n.max(1))
            .map(<[u32]>::to_vec)
            .collect();
        let sim = similarity_matrix(rows.iter().map(Vec::as_slice))?;
        *handle = Box::into_raw(Box::new(DmvcSimilarity { sim, draws: rows }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_similarity_size(handle: *const DmvcSimilarity) -> usize {
    handle.as_ref().map_or(0, |h| h.sim.len())
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_similarity_get(
    handle: *const DmvcSimilarity,
    i: usize,
    j: usize,
    result: *mut f64,
) -> DmvcStatus {
    guard(|| {
        let h = handle.as_ref().ok_or(Fail::Null("handle"))?;
        let result = out(result, "result")?;
        let n = h.sim.len();
        if i >= n || j >= n {
            return Err(Fail::Arg(format!("index ({i}, {j}) outside {n} x {n}")));
        }
        *result = h.sim.get(i, j);
        Ok(())
    })
}

/// Writes the least-squares consensus draw into `labels[0..n]`.
#[no_mangle]
pub unsafe extern "C" fn dmvc_similarity_consensus(
    handle: *const DmvcSimilarity,
    labels: *mut u32,
    n: usize,
) -> DmvcStatus {
    guard(|| {
        let h = handle.as_ref().ok_or(Fail::Null("handle"))?;
        if n != h.sim.len() {
            return Err(Fail::Arg(format!("buffer holds {n} labels, matrix has {}", h.sim.len())));
        }
        let labels = slice_mut(labels, n, "labels")?;
        labels.copy_from_slice(&consensus_labels(h.draws.iter().map(Vec::as_slice), &h.sim)?);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_similarity_free(handle: *mut DmvcSimilarity) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Writes a synthetic scenario described by the JSON file at `config` into
/// `out_dir`.
#[no_mangle]
pub unsafe extern "C" fn dmvc_simulate(config: *const c_char, out_dir: *const c_char) -> DmvcStatus {
    guard(|| {
        let config = path(config, "config")?;
        let out_dir = path(out_dir, "out_dir")?;
        cmd_simulate(&config, Some(&out_dir))?;
        Ok(())
    })
}

/// Runs a fit from a config file and writes its output directory, as the
/// `fit` command does.
#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_to_disk(config: *const c_char) -> DmvcStatus {
    guard(|| {
        cmd_fit(&path(config, "config")?)?;
        Ok(())
    })
}

/// Chains sampled in memory.
pub struct DmvcFit {
    chains: Vec<ChainTrace>,
    objects: usize,
}

/// Loads the views of a config file and runs its chains without writing output.
#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_new(config: *const c_char, handle: *mut *mut DmvcFit) -> DmvcStatus {
    guard(|| {
        let handle = out(handle, "handle")?;
        *handle = ptr::null_mut();
        let config = RunConfig::load(&path(config, "config")?)?;
        let data = load_multiview(&config)?;
        let alpha: Vec<Option<f64>> = config.views.iter().map(|v| v.alpha).collect();
        let problem = Problem::new(
            data.matrices(),
            data.names(),
            config.graph()?,
            config.final_view(),
            &config.model,
            &alpha,
        )?;
        let chains = run_chains(&config.sampler, &problem)?;
        *handle = Box::into_raw(Box::new(DmvcFit {
            chains,
            objects: data.objects(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_objects(handle: *const DmvcFit) -> usize {
    handle.as_ref().map_or(0, |h| h.objects)
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_chains(handle: *const DmvcFit) -> usize {
    handle.as_ref().map_or(0, |h| h.chains.len())
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_draws(handle: *const DmvcFit) -> usize {
    handle.as_ref().and_then(|h| h.chains.first()).map_or(0, ChainTrace::retained)
}

/// Index of the view whose clustering is the consensus.
#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_final_view(handle: *const DmvcFit) -> usize {
    handle.as_ref().and_then(|h| h.chains.first()).map_or(0, |c| c.final_view)
}

/// Copies retained draw `draw` of `view` in `chain` into `labels[0..n]`.
#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_labels(
    handle: *const DmvcFit,
    chain: usize,
    draw: usize,
    view: usize,
    labels: *mut u32,
    n: usize,
) -> DmvcStatus {
    guard(|| {
        let h = handle.as_ref().ok_or(Fail::Null("handle"))?;
        let src = h
            .chains
            .get(chain)
            .and_then(|c| c.draws.get(draw))
            .and_then(|d| d.get(view))
            .ok_or_else(|| Fail::Arg(format!("no draw at chain {chain}, draw {draw}, view {view}")))?;
        if n != src.len() {
            return Err(Fail::Arg(format!("buffer holds {n} labels, draw has {}", src.len())));
        }
        slice_mut(labels, n, "labels")?.copy_from_slice(src);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dmvc_fit_free(handle: *mut DmvcFit) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}
