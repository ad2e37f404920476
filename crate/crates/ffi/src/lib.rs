//! C interface to `dfl-core`.
//!
//! Knowledge bases, groundings and operator configurations cross the
//! boundary as opaque handles created by `*_parse`/`*_preset` and released
//! with the matching `*_free`. Every fallible call returns a [`DflStatus`];
//! on failure `dfl_last_error` describes the problem. Results are written
//! through caller-provided pointers and only on success.
//!
//! The error message is stored per thread and stays valid until the next
//! failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dfl_core::logic::{parse_kb, KnowledgeBase};
use dfl_core::operators::{parse_operator_spec, OperatorConfig, OperatorError};
use dfl_core::oracle::{equivalence_report, OracleError};
use dfl_core::valuation::{evaluate_kb, parse_grounding, LookupTable, ValuationError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DflStatus {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    Semantic = 3,
    ResourceCap = 4,
    NullPointer = 5,
    Panic = 6,
}

/// A parsed knowledge base.
pub struct DflKb(KnowledgeBase);

/// A parsed grounding table.
pub struct DflGrounding(LookupTable);

/// An operator configuration.
pub struct DflOps(OperatorConfig);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(DflStatus, String);

impl From<OperatorError> for Failure {
    fn from(e: OperatorError) -> Self {
        Failure(DflStatus::Semantic, e.to_string())
    }
}

impl From<ValuationError> for Failure {
    fn from(e: ValuationError) -> Self {
        let status = match e {
            ValuationError::GroundingSyntax { .. } | ValuationError::DuplicateAtom(_) => DflStatus::Parse,
            ValuationError::OutOfRange { .. } => DflStatus::InvalidArgument,
            _ => DflStatus::Semantic,
        };
        Failure(status, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Valuation(v) => v.into(),
            cap => Failure(DflStatus::ResourceCap, cap.to_string()),
        }
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, converting failures and panics into a status.
fn guard<F>(f: F) -> DflStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DflStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DflStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DflStatus::NullPointer, format!("`{}` is null", what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DflStatus::InvalidArgument, format!("`{}` is not UTF-8", what)))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dfl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread; empty if none.
#[no_mangle]
pub extern "C" fn dfl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses `.dfl` text into a new knowledge base handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dfl_kb_parse(text: *const c_char, out: *mut *mut DflKb) -> DflStatus {
    guard(|| {
        let t = unsafe { text_arg(text) }?;
        let kb = parse_kb(t).map_err(|e| Failure(DflStatus::Parse, e.to_string()))?;
        unsafe { write(out, Box::into_raw(Box::new(DflKb(kb))), "out") }
    })
}

unsafe fn text_arg<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    text(p, "text")
}

/// Number of formulas in `kb`, or 0 for a null handle.
///
/// # Safety
/// `kb` must be null or a live handle from [`dfl_kb_parse`].
#[no_mangle]
pub unsafe extern "C" fn dfl_kb_len(kb: *const DflKb) -> usize {
    kb.as_ref().map_or(0, |k| k.0.len())
}

/// # Safety
/// `kb` must be null or a handle from [`dfl_kb_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dfl_kb_free(kb: *mut DflKb) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Parses grounding text (`pred(o1,o2)=0.9` lines) into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dfl_grounding_parse(text: *const c_char, out: *mut *mut DflGrounding) -> DflStatus {
    guard(|| {
        let t = unsafe { text_arg(text) }?;
        let g = parse_grounding(t)?;
        unsafe { write(out, Box::into_raw(Box::new(DflGrounding(g))), "out") }
    })
}

/// # Safety
/// `g` must be null or a handle from [`dfl_grounding_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dfl_grounding_free(g: *mut DflGrounding) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Creates an operator configuration from a preset name (`product`,
/// `dpfl`, `godel`, `lukasiewicz`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dfl_ops_preset(name: *const c_char, out: *mut *mut DflOps) -> DflStatus {
    guard(|| {
        let n = unsafe { text(name, "name") }?;
        let ops = OperatorConfig::preset(n)
            .ok_or_else(|| Failure(DflStatus::InvalidArgument, format!("unknown preset `{}`", n)))?;
        unsafe { write(out, Box::into_raw(Box::new(DflOps(ops))), "out") }
    })
}

/// Sets `tnorm`, `tconorm`, `implication`, `aggregator` or `preset`.
///
/// # Safety
/// `ops` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn dfl_ops_set(ops: *mut DflOps, key: *const c_char, value: *const c_char) -> DflStatus {
    guard(|| {
        let o = unsafe { ops.as_mut() }.ok_or_else(|| null("ops"))?;
        let (k, v) = unsafe { (text(key, "key")?, text(value, "value")?) };
        if o.0.apply(k, v)? {
            Ok(())
        } else {
            Err(Failure(DflStatus::InvalidArgument, format!("unknown operator key `{}`", k)))
        }
    })
}

/// # Safety
/// `ops` must be null or a handle from [`dfl_ops_preset`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dfl_ops_free(ops: *mut DflOps) {
    if !ops.is_null() {
        drop(Box::from_raw(ops));
    }
}

/// Valuates `kb` over every object of `g`. Writes the weighted total
/// valuation and the loss (its negation).
///
/// # Safety
/// Handles must be live; `valuation` and `loss` writable.
#[no_mangle]
pub unsafe extern "C" fn dfl_eval(
    kb: *const DflKb,
    g: *const DflGrounding,
    ops: *const DflOps,
    valuation: *mut f64,
    loss: *mut f64,
) -> DflStatus {
    guard(|| {
        let (kb, g, ops) = unsafe { (handle(kb, "kb")?, handle(g, "grounding")?, handle(ops, "ops")?) };
        let ev = evaluate_kb(&kb.0, &g.0, &g.0.domain.all(), &ops.0, None)?;
        unsafe {
            write(valuation, ev.total_valuation(), "valuation")?;
            write(loss, ev.loss, "loss")
        }
    })
}

/// Loss derivative with respect to one ground atom, written like
/// `partOf(o2,o1)`.
///
/// # Safety
/// Handles must be live; `atom` NUL-terminated; `d_loss` writable.
#[no_mangle]
pub unsafe extern "C" fn dfl_atom_gradient(
    kb: *const DflKb,
    g: *const DflGrounding,
    ops: *const DflOps,
    atom: *const c_char,
    d_loss: *mut f64,
) -> DflStatus {
    guard(|| {
        let (kb, g, ops) = unsafe { (handle(kb, "kb")?, handle(g, "grounding")?, handle(ops, "ops")?) };
        let a = unsafe { text(atom, "atom") }?.trim();
        let bad = || Failure(DflStatus::InvalidArgument, format!("`{}` is not a ground atom of the grounding", a));
        let (pred, args) = match a.split_once('(') {
            Some((p, rest)) => (p.trim(), rest.strip_suffix(')').ok_or_else(bad)?),
            None => (a, ""),
        };
        let objects: Vec<usize> = args
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|n| g.0.domain.names.iter().position(|d| d == n).ok_or_else(bad))
            .collect::<Result<_, _>>()?;
        let ev = evaluate_kb(&kb.0, &g.0, &g.0.domain.all(), &ops.0, None)?;
        let grad = ev.gradient(pred, &objects).ok_or_else(bad)?;
        unsafe { write(d_loss, grad.d_loss, "d_loss") }
    })
}

/// Evaluates a single operator named in the operator grammar (for example
/// `yager_tnorm:p=2` or `reichenbach`) on `n` inputs. `partials` must hold
/// `n` values. Implications take `(a, c)` and report `(dI/da, dI/dc)`.
///
/// # Safety
/// `spec` NUL-terminated; `inputs` and `partials` valid for `n` doubles;
/// `value` writable.
#[no_mangle]
pub unsafe extern "C" fn dfl_operator_eval(
    spec: *const c_char,
    inputs: *const f64,
    n: usize,
    value: *mut f64,
    partials: *mut f64,
) -> DflStatus {
    guard(|| {
        let s = unsafe { text(spec, "spec") }?;
        if inputs.is_null() {
            return Err(null("inputs"));
        }
        if partials.is_null() {
            return Err(null("partials"));
        }
        let op = parse_operator_spec(s)
            .and_then(|p| p.to_operator())
            .map_err(|e| Failure(DflStatus::InvalidArgument, e.to_string()))?;
        let x = unsafe { std::slice::from_raw_parts(inputs, n) };
        let (v, d) = op
            .eval(x)
            .map_err(|e| Failure(DflStatus::InvalidArgument, e.to_string()))?;
        unsafe {
            write(value, v, "value")?;
            ptr::copy_nonoverlapping(d.as_ptr(), partials, n.min(d.len()));
        }
        Ok(())
    })
}

/// Exact Semantic Loss probability against the DPFL valuation, both as
/// probabilities, over every object of `g`.
///
/// # Safety
/// Handles must be live; output pointers writable.
#[no_mangle]
pub unsafe extern "C" fn dfl_semantic_compare(
    kb: *const DflKb,
    g: *const DflGrounding,
    exact: *mut f64,
    dpfl: *mut f64,
    single_occurrence: *mut bool,
) -> DflStatus {
    guard(|| {
        let (kb, g) = unsafe { (handle(kb, "kb")?, handle(g, "grounding")?) };
        let r = equivalence_report(&kb.0, &g.0, &g.0.domain.all())?;
        unsafe {
            write(exact, r.exact, "exact")?;
            write(dpfl, r.dpfl, "dpfl")?;
            write(single_occurrence, r.single_occurrence, "single_occurrence")
        }
    })
}
